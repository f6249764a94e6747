"""Deterministic synthetic-book generator with a ground-truth sidecar.

Stands in for the real corpus at desk scale: every planted property
(duplicates, oversize segments, volume partitions, usage distribution) is
recorded, so each analytic can be checked against known answers. All
randomness comes from a self-contained xorshift64* stream (seeded through
splitmix64), so a config reproduces byte-identically anywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasibleConfig
from .model import (BBox, CharacterKey, Dataset, DatasetMeta, LineLayout,
                    Segment, Spread)
from .raster import GrayRaster, resize_nearest

MASK64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


class XorShift64Star:
    """xorshift64* PRNG; tiny, portable, and good enough for sampling."""

    def __init__(self, seed: int):
        # splitmix64 spreads poor seeds and guarantees a nonzero state
        self.state = _splitmix64(seed & MASK64) or 0x9E3779B97F4A7C15

    def next_u64(self) -> int:
        x = self.state
        x ^= (x >> 12)
        x = (x ^ (x << 25)) & MASK64
        x ^= (x >> 27)
        self.state = x
        return (x * 0x2545F4914F6CDD1D) & MASK64

    def random(self) -> float:
        return (self.next_u64() >> 11) / float(1 << 53)

    def randint(self, n: int) -> int:
        """Uniform integer in [0, n)."""
        return int(self.random() * n) if n > 0 else 0

    def weighted_index(self, cumulative: np.ndarray) -> int:
        """Index drawn proportionally to weights given their cumsum."""
        r = self.random() * float(cumulative[-1])
        return int(np.searchsorted(cumulative, r, side="right"))

    def shuffle(self, items: list) -> None:
        for i in range(len(items) - 1, 0, -1):
            j = self.randint(i + 1)
            items[i], items[j] = items[j], items[i]


@dataclass(frozen=True)
class PartitionSpec:
    boundary_spread: int
    pool_overlap_fraction: float


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 1
    n_characters: int = 10
    blocks_per_character: int = 2
    usage_exponent: float | None = None  # None = uniform block usage weights
    n_spreads: int = 4
    lines_per_spread: int = 3
    segments_per_line: int = 4
    unit_height_px: int = 100
    segment_width_px: int = 100
    partition: PartitionSpec | None = None
    planted_duplicates: int = 0
    planted_oversize: int = 0
    render_images: bool = False
    noise_density: float = 0.02


@dataclass
class GroundTruth:
    """What the generator actually did, recomputed from the emitted data."""

    block_units: dict[int, int] = field(default_factory=dict)
    block_weight: dict[int, float] = field(default_factory=dict)
    block_pool: dict[int, str] = field(default_factory=dict)  # a | b | shared | all
    usage_counts: dict[int, int] = field(default_factory=dict)
    spread_usage: dict[int, list[int]] = field(default_factory=dict)
    duplicate_pairs: list[tuple[int, int]] = field(default_factory=list)  # (block, spread)
    oversize_segment_ids: list[int] = field(default_factory=list)

    def to_doc(self) -> dict:
        return {"ground_truth": {
            "block_units": {str(k): v for k, v in sorted(self.block_units.items())},
            "block_weight": {str(k): v for k, v in sorted(self.block_weight.items())},
            "block_pool": {str(k): v for k, v in sorted(self.block_pool.items())},
            "usage_counts": {str(k): v for k, v in sorted(self.usage_counts.items())},
            "spread_usage": {str(k): v for k, v in sorted(self.spread_usage.items())},
            "duplicate_pairs": [list(p) for p in sorted(self.duplicate_pairs,
                                                        key=lambda p: (p[1], p[0]))],
            "oversize_segment_ids": sorted(self.oversize_segment_ids),
        }}


@dataclass
class SynthResult:
    dataset: Dataset
    truth: GroundTruth
    page_images: dict[int, GrayRaster] | None = None


def _character_keys(n: int) -> list[CharacterKey]:
    keys = []
    for i in range(n):
        if i % 3 == 0:
            # kana with a jibo, so (text, jibo) identity gets exercised
            keys.append(CharacterKey(chr(0x3042 + (i % 80)),
                                     chr(0x4E00 + 3000 + i)))
        else:
            keys.append(CharacterKey(chr(0x4E00 + i)))
    return keys


def usage_weights(n_blocks: int, exponent: float | None) -> np.ndarray:
    """Block usage weights: rank-frequency power law (rank = id + 1) or
    uniform."""
    if exponent is None:
        return np.ones(n_blocks)
    return np.arange(1, n_blocks + 1, dtype=float) ** (-float(exponent))


def sample_usage_counts(n_blocks: int, exponent: float, total: int,
                        seed: int) -> list[int]:
    """Draw ``total`` independent block uses from the power-law weights and
    return per-block counts (unconstrained by spread composition)."""
    rng = XorShift64Star(_splitmix64(seed ^ 0x5A5A5A5A))
    cum = np.cumsum(usage_weights(n_blocks, exponent))
    counts = [0] * n_blocks
    for _ in range(total):
        counts[rng.weighted_index(cum)] += 1
    return counts


def _validate(cfg: SynthConfig) -> None:
    if cfg.n_characters <= 0 or cfg.blocks_per_character <= 0:
        raise InfeasibleConfig("need at least one character and one block each")
    if cfg.n_spreads <= 0 or cfg.lines_per_spread <= 0 or cfg.segments_per_line <= 0:
        raise InfeasibleConfig("spread geometry must be positive")
    if cfg.unit_height_px <= 0 or cfg.segment_width_px <= 0:
        raise InfeasibleConfig("unit height and segment width must be positive")
    if cfg.partition is not None:
        p = cfg.partition
        if not (0 < p.boundary_spread < cfg.n_spreads):
            raise InfeasibleConfig("boundary spread must split the book")
        if not (0.0 <= p.pool_overlap_fraction <= 1.0):
            raise InfeasibleConfig("pool overlap fraction must be in [0, 1]")


def _sample_distinct(pool: list[int], weights: np.ndarray, k: int,
                     rng: XorShift64Star) -> list[int]:
    """Weighted sample of k distinct blocks, rejecting within-spread repeats
    like a compositor drawing from a finite type case."""
    cum = np.cumsum(weights)
    chosen: list[int] = []
    seen: set[int] = set()
    attempts = 0
    limit = 200 * k + 1000
    while len(chosen) < k and attempts < limit:
        b = pool[rng.weighted_index(cum)]
        attempts += 1
        if b not in seen:
            seen.add(b)
            chosen.append(b)
    if len(chosen) < k:  # pathological weights; fill deterministically
        for b in pool:
            if b not in seen:
                seen.add(b)
                chosen.append(b)
                if len(chosen) == k:
                    break
    return chosen


MARGIN = 10
LINE_GAP = 10


def generate(cfg: SynthConfig) -> SynthResult:
    """Compose a deterministic synthetic book per the config."""
    _validate(cfg)
    rng = XorShift64Star(cfg.seed)
    truth = GroundTruth()

    keys = _character_keys(cfg.n_characters)
    n_blocks = cfg.n_characters * cfg.blocks_per_character
    block_key: dict[int, CharacterKey] = {}
    for bid in range(n_blocks):
        block_key[bid] = keys[bid // cfg.blocks_per_character]
        truth.block_units[bid] = 1 + rng.randint(3)
    weights = usage_weights(n_blocks, cfg.usage_exponent)
    for bid in range(n_blocks):
        truth.block_weight[bid] = float(weights[bid])

    # pool assignment
    if cfg.partition is None:
        pool_a = pool_b = list(range(n_blocks))
        for bid in range(n_blocks):
            truth.block_pool[bid] = "all"
    else:
        order = list(range(n_blocks))
        rng.shuffle(order)
        n_shared = int(round(cfg.partition.pool_overlap_fraction * n_blocks))
        shared = order[:n_shared]
        rest = order[n_shared:]
        only_a = rest[0::2]
        only_b = rest[1::2]
        for bid in shared:
            truth.block_pool[bid] = "shared"
        for bid in only_a:
            truth.block_pool[bid] = "a"
        for bid in only_b:
            truth.block_pool[bid] = "b"
        pool_a = sorted(shared + only_a)
        pool_b = sorted(shared + only_b)

    slots = cfg.lines_per_spread * cfg.segments_per_line
    if len(pool_a) < slots or len(pool_b) < slots:
        raise InfeasibleConfig(
            f"pool smaller than the {slots} segments per spread")

    # compose per-spread block lists (distinct within a spread)
    spread_blocks: list[list[int]] = []
    for sp in range(cfg.n_spreads):
        pool = pool_a if (cfg.partition is None
                          or sp < cfg.partition.boundary_spread) else pool_b
        w = weights[np.asarray(pool)]
        spread_blocks.append(_sample_distinct(pool, w, slots, rng))

    # plant within-spread duplicates by overwriting one slot with another
    # slot's block (one extra appearance each, never a third)
    planted: set[tuple[int, int]] = set()
    attempts = 0
    while len(planted) < cfg.planted_duplicates:
        attempts += 1
        if attempts > 10000:
            raise InfeasibleConfig("cannot plant the requested duplicates")
        sp = rng.randint(cfg.n_spreads)
        if slots < 2:
            raise InfeasibleConfig("duplicates need at least 2 slots per spread")
        lst = spread_blocks[sp]
        i = rng.randint(slots)
        j = rng.randint(slots)
        block = lst[i]
        if i == j or lst[j] == block:
            continue
        if lst.count(block) != 1 or lst.count(lst[j]) != 1:
            continue
        if (block, sp) in planted:
            continue
        lst[j] = block
        planted.add((block, sp))
    truth.duplicate_pairs = sorted(planted, key=lambda p: (p[1], p[0]))

    # pre-select oversize slots (area scaled 9x, far past any robust cutoff)
    total_segments = cfg.n_spreads * slots
    oversize: set[int] = set()
    attempts = 0
    while len(oversize) < cfg.planted_oversize:
        attempts += 1
        if attempts > 10000 or cfg.planted_oversize > total_segments:
            raise InfeasibleConfig("cannot plant the requested oversize segments")
        oversize.add(rng.randint(total_segments))

    # layout
    spreads = []
    segments = []
    seg_id = 0
    width_px = 2 * MARGIN + cfg.lines_per_spread * (cfg.segment_width_px
                                                    + LINE_GAP)
    for sp in range(cfg.n_spreads):
        lines = tuple(LineLayout(l, MARGIN + l * (cfg.segment_width_px
                                                  + LINE_GAP))
                      for l in range(cfg.lines_per_spread))
        max_bottom = 0
        for l in range(cfg.lines_per_spread):
            y = MARGIN
            for s in range(cfg.segments_per_line):
                bid = spread_blocks[sp][l * cfg.segments_per_line + s]
                h = truth.block_units[bid] * cfg.unit_height_px
                w = cfg.segment_width_px
                if seg_id in oversize:
                    h, w = 3 * h, 3 * w
                    truth.oversize_segment_ids.append(seg_id)
                segments.append(Segment(
                    id=seg_id, spread_id=sp, line_index=l,
                    bbox=BBox(lines[l].x_px, y, w, h),
                    key=block_key[bid], block_id=bid))
                y += h
                seg_id += 1
            max_bottom = max(max_bottom, y)
        spreads.append(Spread(
            id=sp, width_px=width_px, height_px=max_bottom + MARGIN,
            lines=lines,
            image_ref=f"spread_{sp:04d}.png" if cfg.render_images else None))

    meta = DatasetMeta(title=f"synthetic book (seed {cfg.seed})",
                       unit_height_px=float(cfg.unit_height_px),
                       segment_width_px=cfg.segment_width_px)
    dataset = Dataset.assemble(meta, tuple(spreads), tuple(segments))

    # ground truth recomputed from what was actually emitted
    for sp in range(cfg.n_spreads):
        truth.spread_usage[sp] = sorted(spread_blocks[sp])
    for seg in dataset.segments:
        truth.usage_counts[seg.block_id] = \
            truth.usage_counts.get(seg.block_id, 0) + 1
    used = set(truth.usage_counts)
    for table in (truth.block_units, truth.block_weight, truth.block_pool):
        for bid in list(table):
            if bid not in used:
                del table[bid]

    images = _render_pages(cfg, dataset, truth) if cfg.render_images else None
    return SynthResult(dataset, truth, images)


# ---------------------------------------------------------------------------
# procedural stamps and page rendering

PAPER = 200
STAMP_BG = 235
INK = 20


def block_stamp(cfg: SynthConfig, block_id: int, units: int) -> GrayRaster:
    """Procedural glyph for one block: a handful of dark strokes keyed by
    block id, identical at every impression."""
    rng = XorShift64Star(_splitmix64(cfg.seed) ^ (block_id * 0x9E3779B9 + 7))
    w = cfg.segment_width_px
    h = units * cfg.unit_height_px
    arr = np.full((h, w), STAMP_BG, dtype=np.uint8)
    for _ in range(3 + rng.randint(4)):
        x0 = rng.randint(max(1, w - 8))
        y0 = rng.randint(max(1, h - 8))
        sw = 4 + rng.randint(max(1, w // 2))
        sh = 4 + rng.randint(max(1, h // 2))
        arr[y0:min(h, y0 + sh), x0:min(w, x0 + sw)] = INK
    return GrayRaster(arr)


def _impression(cfg: SynthConfig, stamp: GrayRaster,
                segment_id: int) -> np.ndarray:
    out = stamp.pixels.copy()
    if cfg.noise_density <= 0:
        return out
    rng = XorShift64Star(_splitmix64(cfg.seed ^ 0xA5A5) ^ (segment_id * 31 + 1))
    n = out.size
    hits = int(n * cfg.noise_density)
    flat = out.reshape(-1)
    for _ in range(hits):
        flat[rng.randint(n)] = 0 if rng.random() < 0.5 else 255
    return out


def _render_pages(cfg: SynthConfig, dataset: Dataset,
                  truth: GroundTruth) -> dict[int, GrayRaster]:
    stamps = {bid: block_stamp(cfg, bid, units)
              for bid, units in truth.block_units.items()}
    oversize = set(truth.oversize_segment_ids)
    pages: dict[int, GrayRaster] = {}
    for sp in dataset.spreads:
        arr = np.full((sp.height_px, sp.width_px), PAPER, dtype=np.uint8)
        pages[sp.id] = GrayRaster(arr)
    for seg in dataset.segments:
        stamp = stamps[seg.block_id]
        if seg.id in oversize:
            stamp = resize_nearest(stamp, stamp.width * 3, stamp.height * 3)
        imp = _impression(cfg, stamp, seg.id)
        page = pages[seg.spread_id].pixels
        y0, x0 = seg.bbox.y, seg.bbox.x
        y1 = min(page.shape[0], y0 + imp.shape[0])
        x1 = min(page.shape[1], x0 + imp.shape[1])
        if y1 > y0 and x1 > x0:
            page[y0:y1, x0:x1] = imp[:y1 - y0, :x1 - x0]
    return pages
