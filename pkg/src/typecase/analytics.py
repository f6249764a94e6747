"""Derived statistics over a dataset snapshot.

Everything here is a pure function of an immutable :class:`IndexedDataset`
(or of matrices derived from one), so results are cacheable per revision.
Covers reuse counts, rank-frequency fitting, physical-impossibility checks
(same-spread duplicates), bounding-box anomalies, block co-appearance, the
spread connectivity graph, partition modularity, a 2-D block embedding, and
per-line height rhythm series.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping

import numpy as np

from . import dataio
from .errors import (EmptyGraph, InsufficientData, NoConvergence,
                     TooFewBlocks, TooFewNodes)
from .model import CharacterKey, IndexedDataset

# robust z-score consistency constant for median absolute deviation
MAD_SCALE = 1.4826


def reuse_counts(ds: IndexedDataset) -> dict[int, int]:
    """Number of impressions per block."""
    return {bid: len(blk.member_ids) for bid, blk in ds.block_by_id.items()}


def zipf_fit(counts: Iterable[int]) -> tuple[float, float]:
    """Fit count ~ C * rank^(-exponent) by OLS in log-log space.

    Counts are sorted descending, ranks start at 1. Returns (exponent, r2);
    a flat distribution has zero slope and its r2 is reported as 0.
    """
    values = sorted((int(c) for c in counts), reverse=True)
    if len(values) < 3:
        raise InsufficientData(f"need at least 3 counts, got {len(values)}")
    if any(v <= 0 for v in values):
        raise InsufficientData("counts must be positive")
    x = np.log(np.arange(1, len(values) + 1, dtype=float))
    y = np.log(np.asarray(values, dtype=float))
    xm, ym = x.mean(), y.mean()
    sxx = float(((x - xm) ** 2).sum())
    sxy = float(((x - xm) * (y - ym)).sum())
    slope = sxy / sxx
    syy = float(((y - ym) ** 2).sum())
    if syy == 0.0:
        return (0.0, 0.0)
    ss_res = float(((y - (ym + slope * (x - xm))) ** 2).sum())
    r2 = 1.0 - ss_res / syy
    return (-slope, r2)


def same_spread_duplicates(ds: IndexedDataset) -> list[tuple[int, int, int]]:
    """(block, spread, count) triples where one block appears twice or more
    within a single spread, which is physically impossible for a real block.
    Sorted by (spread, block)."""
    per: dict[tuple[int, int], int] = {}
    for seg in ds.dataset.segments:
        k = (seg.spread_id, seg.block_id)
        per[k] = per.get(k, 0) + 1
    hits = [(bid, sid, n) for (sid, bid), n in per.items() if n >= 2]
    hits.sort(key=lambda t: (t[1], t[0]))
    return hits


def bbox_anomalies(ds: IndexedDataset, k: float = 3.5) -> list[int]:
    """Segments with outlying bbox area (robust z-score over median/MAD)
    plus all segments whose height is not near a unit multiple. Sorted by
    descending score. Needs at least 10 segments, else empty."""
    segments = ds.dataset.segments
    if len(segments) < 10:
        return []
    areas = np.array([s.bbox.area for s in segments], dtype=float)
    med = float(np.median(areas))
    mad = float(np.median(np.abs(areas - med)))

    def score(a: float) -> float:
        if mad == 0.0:
            return 0.0 if a == med else math.inf
        return abs(a - med) / (MAD_SCALE * mad)

    scores = {seg.id: score(a) for seg, a in zip(segments, areas)}
    flagged = {sid for sid, z in scores.items() if z > k}
    flagged |= dataio.height_unit_outliers(ds.dataset)
    return sorted(flagged, key=lambda sid: (-scores.get(sid, 0.0), sid))


@dataclass(frozen=True)
class CoAppearanceMatrix:
    """Symmetric spread-co-occurrence counts between blocks; the diagonal is
    each block's own spread count (a handy normalizer)."""

    block_ids: tuple[int, ...]
    m: np.ndarray  # (n, n) int matrix

    def value(self, a: int, b: int) -> int:
        i = self.block_ids.index(a)
        j = self.block_ids.index(b)
        return int(self.m[i, j])

    def triplets(self) -> list[tuple[int, int, int]]:
        out = []
        n = len(self.block_ids)
        for i in range(n):
            for j in range(i, n):
                v = int(self.m[i, j])
                if v:
                    out.append((self.block_ids[i], self.block_ids[j], v))
        return out


def co_appearance(ds: IndexedDataset,
                  block_filter: Callable[[int], bool] | None = None
                  ) -> CoAppearanceMatrix:
    """Count, for each block pair, the spreads containing both; multiple
    impressions within one spread still count that spread once."""
    ids = sorted(b for b in ds.block_by_id
                 if block_filter is None or block_filter(b))
    index = {b: i for i, b in enumerate(ids)}
    n = len(ids)
    m = np.zeros((n, n), dtype=np.int64)
    if n:
        incidence = np.zeros((len(ds.spread_by_id), n), dtype=np.int64)
        spread_index = {sid: i for i, sid in enumerate(sorted(ds.spread_by_id))}
        for seg in ds.dataset.segments:
            j = index.get(seg.block_id)
            if j is not None:
                incidence[spread_index[seg.spread_id], j] = 1
        m = incidence.T @ incidence
    return CoAppearanceMatrix(tuple(ids), m)


@dataclass(frozen=True)
class SpreadGraph:
    """Spreads as nodes; an edge weight counts distinct blocks shared by the
    two spreads. Spreads without segments stay as isolated nodes."""

    n_spreads: int
    edges: tuple[tuple[int, int, int], ...]  # (u, v, w), u < v, w >= 1


def spread_graph(ds: IndexedDataset, min_shared: int = 1) -> SpreadGraph:
    spread_ids = sorted(ds.spread_by_id)
    blocks_of = {sid: set() for sid in spread_ids}
    for seg in ds.dataset.segments:
        blocks_of[seg.spread_id].add(seg.block_id)
    edges = []
    for i, u in enumerate(spread_ids):
        for v in spread_ids[i + 1:]:
            w = len(blocks_of[u] & blocks_of[v])
            if w >= max(1, min_shared):
                edges.append((u, v, w))
    return SpreadGraph(len(spread_ids), tuple(edges))


def graph_density(g: SpreadGraph) -> float:
    if g.n_spreads < 2:
        raise TooFewNodes(f"need at least 2 spreads, got {g.n_spreads}")
    return len(g.edges) / (g.n_spreads * (g.n_spreads - 1) / 2)


def partition_modularity(g: SpreadGraph, groups: Mapping[int, int | str]) -> float:
    """Weighted Newman modularity of a spread grouping.

    Q = (1/2m) * sum_ij (A_ij - k_i k_j / 2m) * [g_i == g_j], with A the
    weighted adjacency, k the weighted degrees and m the total edge weight.
    """
    total_w = sum(w for _, _, w in g.edges)
    if total_w == 0:
        raise EmptyGraph("graph has no edges")
    degree: dict[int, float] = {}
    for u, v, w in g.edges:
        degree[u] = degree.get(u, 0.0) + w
        degree[v] = degree.get(v, 0.0) + w
    two_m = 2.0 * total_w
    q = 0.0
    for u, v, w in g.edges:
        if groups[u] == groups[v]:
            q += 2.0 * w  # A_uv and A_vu
    for node, deg in degree.items():
        for other, deg2 in degree.items():
            if groups[node] == groups[other]:
                q -= deg * deg2 / two_m
    return q / two_m


def block_embedding(matrix: CoAppearanceMatrix, dims: int = 2,
                    tol: float = 1e-9, max_iter: int = 200_000
                    ) -> dict[int, tuple[float, ...]]:
    """Project blocks to ``dims`` coordinates by PCA of the cosine-normalized
    co-appearance rows.

    Rows are L2-normalized (zero rows stay zero), columns centered, and the
    top principal axes extracted by power iteration with deflation:
    deterministic start vector e_1, convergence on eigenvalue change below
    ``tol``, at most ``max_iter`` sweeps per axis. Axes are ordered by
    descending eigenvalue and sign-fixed so each axis' first nonzero loading
    is positive.
    """
    n = len(matrix.block_ids)
    if n < dims + 1:
        raise TooFewBlocks(f"need at least {dims + 1} blocks, got {n}")
    x = matrix.m.astype(float)
    norms = np.linalg.norm(x, axis=1)
    nz = norms > 0
    x[nz] = x[nz] / norms[nz, None]
    x = x - x.mean(axis=0)

    cov = x.T @ x
    axes = []
    for _ in range(dims):
        v = np.zeros(n)
        v[0] = 1.0
        prev = math.inf
        lam = 0.0
        for it in range(1, max_iter + 1):
            w = cov @ v
            norm = float(np.linalg.norm(w))
            if norm == 0.0:
                lam = 0.0
                break
            v_new = w / norm
            # sign-stabilize against eigenvalue-flip oscillation
            if float(v_new @ v) < 0:
                v_new = -v_new
            delta_v = float(np.abs(v_new - v).max())
            v = v_new
            lam = float(v @ cov @ v)
            # eigenvalue change alone under-resolves the vector near small
            # spectral gaps, so require the vector to settle as well
            if abs(lam - prev) <= tol and delta_v <= tol:
                break
            prev = lam
        else:
            raise NoConvergence(
                f"power iteration did not converge in {max_iter} iterations",
                iterations=max_iter)
        for comp in v:
            if comp != 0.0:
                if comp < 0.0:
                    v = -v
                break
        axes.append(v)
        cov = cov - lam * np.outer(v, v)

    coords = x @ np.stack(axes, axis=1)
    return {bid: tuple(float(c) for c in coords[i])
            for i, bid in enumerate(matrix.block_ids)}


@dataclass(frozen=True)
class Timeline:
    """Per-block usage counts of one character across all spreads."""

    key: CharacterKey
    spread_ids: tuple[int, ...]
    rows: tuple[tuple[int, tuple[int, ...]], ...]  # (block_id, counts)


def character_timeline(ds: IndexedDataset, key: CharacterKey) -> Timeline:
    """Rows ordered by (descending reuse, ascending first appearance)."""
    block_ids = ds.blocks_of_key(key)
    spread_ids = tuple(sorted(ds.spread_by_id))
    col = {sid: i for i, sid in enumerate(spread_ids)}
    rows = []
    for bid in block_ids:
        blk = ds.block(bid)
        counts = [0] * len(spread_ids)
        for sid in blk.member_ids:
            counts[col[ds.segment(sid).spread_id]] += 1
        first = min((ds.segment(s).spread_id for s in blk.member_ids),
                    default=len(spread_ids))
        rows.append((len(blk.member_ids), first, bid, tuple(counts)))
    rows.sort(key=lambda r: (-r[0], r[1], r[2]))
    return Timeline(key, spread_ids, tuple((bid, counts)
                                           for _, _, bid, counts in rows))


def line_rhythm(ds: IndexedDataset, spread_id: int) -> dict[int, list[int]]:
    """Per line (in layout order): segment heights in unit lengths, top to
    bottom. Heights rounding to zero units are clamped to 1."""
    sp = ds.spread(spread_id)
    unit = ds.meta.unit_height_px
    per_line: dict[int, list[tuple[int, int]]] = {
        ln.index: [] for ln in sorted(sp.lines, key=lambda l: l.index)}
    for sid in ds.spread_segments.get(spread_id, ()):
        seg = ds.segment(sid)
        per_line.setdefault(seg.line_index, []).append((seg.bbox.y, seg.bbox.h))
    out: dict[int, list[int]] = {}
    for idx, items in per_line.items():
        items.sort()
        out[idx] = [max(1, math.floor(h / unit + 0.5)) for _, h in items]
    return out
