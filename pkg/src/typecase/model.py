"""Core data model: spreads, segments, blocks, characters, selections.

The four-entity ontology mirrors the physical printing process: a spread is
one impression, a segment is one extracted imprint region, a block is a
hypothesized physical piece of type (a cluster of segments), and a character
key names the linguistic content shared by a block and its segments.

Everything here is immutable; mutation happens in :mod:`typecase.curation`
by building a fresh snapshot.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field

from .errors import IndexConflict, UnknownCharacter, UnknownId, UnknownSpread


@dataclass(frozen=True)
class CharacterKey:
    """Identity of a character sequence: Unicode text plus optional mother
    kanji (jibo). Two keys differ if either part differs; an absent jibo is
    not the same as an empty one (empty is rejected upstream)."""

    text: str
    jibo: str | None = None

    def __post_init__(self):
        if not self.text:
            raise ValueError("character text must be non-empty")

    @property
    def sort_key(self) -> tuple[str, str]:
        return (self.text, self.jibo or "")

    def label(self) -> str:
        return f"{self.text}/{self.jibo}" if self.jibo else self.text


@dataclass(frozen=True)
class BBox:
    x: int
    y: int
    w: int
    h: int

    @property
    def area(self) -> int:
        return self.w * self.h

    @property
    def right(self) -> int:
        return self.x + self.w

    @property
    def bottom(self) -> int:
        return self.y + self.h


@dataclass(frozen=True)
class LineLayout:
    index: int
    x_px: int


@dataclass(frozen=True)
class Spread:
    id: int
    width_px: int
    height_px: int
    lines: tuple[LineLayout, ...]
    image_ref: str | None = None


@dataclass(frozen=True)
class Segment:
    id: int
    spread_id: int
    line_index: int
    bbox: BBox
    key: CharacterKey
    block_id: int


@dataclass(frozen=True)
class Block:
    id: int
    key: CharacterKey
    member_ids: tuple[int, ...]


@dataclass(frozen=True)
class DatasetMeta:
    title: str = ""
    unit_height_px: float = 0.0
    segment_width_px: int = 0


@dataclass(frozen=True)
class Dataset:
    """Plain (unindexed) dataset as produced by parsing or generation.

    ``blocks`` carries the declared block inventory with member lists in
    reading order; segments are the authoritative membership record and the
    two are cross-checked by validation.
    """

    meta: DatasetMeta
    spreads: tuple[Spread, ...]
    blocks: tuple[Block, ...]
    segments: tuple[Segment, ...]

    @staticmethod
    def assemble(meta: DatasetMeta, spreads: tuple[Spread, ...],
                 segments: tuple[Segment, ...]) -> "Dataset":
        """Build a dataset whose block table is derived from the segments."""
        by_block: dict[int, list[Segment]] = defaultdict(list)
        for seg in segments:
            by_block[seg.block_id].append(seg)
        blocks = []
        for bid in sorted(by_block):
            members = sorted(by_block[bid], key=reading_order_key)
            blocks.append(Block(bid, members[0].key,
                                tuple(s.id for s in members)))
        return Dataset(meta, tuple(sorted(spreads, key=lambda s: s.id)),
                       tuple(blocks),
                       tuple(sorted(segments, key=lambda s: s.id)))


def reading_order_key(seg: Segment) -> tuple[int, int, int, int]:
    """Stable reading order: spread, line, vertical position, then id."""
    return (seg.spread_id, seg.line_index, seg.bbox.y, seg.id)


@dataclass(frozen=True)
class Selection:
    """Tri-level selection over characters, blocks, and segments."""

    characters: frozenset[CharacterKey] = frozenset()
    blocks: frozenset[int] = frozenset()
    segments: frozenset[int] = frozenset()

    def is_empty(self) -> bool:
        return not (self.characters or self.blocks or self.segments)


@dataclass(frozen=True)
class DatasetSummary:
    n_spreads: int
    n_segments: int
    n_blocks: int
    n_characters: int
    unit_height_px: float
    modal_segment_width_px: int


class IndexedDataset:
    """Immutable dataset snapshot with O(1)-amortized cross-indexes.

    Safe for concurrent reads; every curation edit produces a new instance.
    """

    def __init__(self, dataset: Dataset):
        self.dataset = dataset
        self.spread_by_id: dict[int, Spread] = {s.id: s for s in dataset.spreads}
        self.segment_by_id: dict[int, Segment] = {s.id: s for s in dataset.segments}
        self.block_by_id: dict[int, Block] = {b.id: b for b in dataset.blocks}

        seen: dict[int, int] = {}
        for blk in dataset.blocks:
            for sid in blk.member_ids:
                if sid in seen:
                    raise IndexConflict(
                        f"segment {sid} is a member of blocks {seen[sid]} and {blk.id}",
                        entity=f"segment:{sid}")
                seen[sid] = blk.id
        self.segment_block: dict[int, int] = seen

        key_blocks: dict[CharacterKey, list[int]] = defaultdict(list)
        for blk in dataset.blocks:
            key_blocks[blk.key].append(blk.id)
        self.key_blocks: dict[CharacterKey, tuple[int, ...]] = {
            k: tuple(sorted(v)) for k, v in key_blocks.items()}

        spread_segments: dict[int, list[int]] = {s.id: [] for s in dataset.spreads}
        for seg in sorted(dataset.segments, key=reading_order_key):
            spread_segments.setdefault(seg.spread_id, []).append(seg.id)
        self.spread_segments: dict[int, tuple[int, ...]] = {
            k: tuple(v) for k, v in spread_segments.items()}

        block_spreads: dict[int, set[int]] = defaultdict(set)
        for seg in dataset.segments:
            block_spreads[seg.block_id].add(seg.spread_id)
        self.block_spreads: dict[int, frozenset[int]] = {
            b.id: frozenset(block_spreads.get(b.id, ())) for b in dataset.blocks}

    # -- lookups ----------------------------------------------------------

    def spread(self, spread_id: int) -> Spread:
        try:
            return self.spread_by_id[spread_id]
        except KeyError:
            raise UnknownSpread(f"unknown spread {spread_id}",
                                entity=f"spread:{spread_id}") from None

    def segment(self, segment_id: int) -> Segment:
        try:
            return self.segment_by_id[segment_id]
        except KeyError:
            raise UnknownId(f"unknown segment {segment_id}",
                            entity=f"segment:{segment_id}") from None

    def block(self, block_id: int) -> Block:
        try:
            return self.block_by_id[block_id]
        except KeyError:
            raise UnknownId(f"unknown block {block_id}",
                            entity=f"block:{block_id}") from None

    def blocks_of_key(self, key: CharacterKey) -> tuple[int, ...]:
        try:
            return self.key_blocks[key]
        except KeyError:
            raise UnknownCharacter(f"unknown character {key.label()}",
                                   entity=f"character:{key.label()}") from None

    @property
    def meta(self) -> DatasetMeta:
        return self.dataset.meta


def build_indexes(dataset: Dataset) -> IndexedDataset:
    """Index a validated dataset. Raises IndexConflict if any segment is
    claimed by two blocks."""
    return IndexedDataset(dataset)


def expand_selection(sel: Selection, ds: IndexedDataset) -> Selection:
    """Close a selection one hop up and down the ontology.

    Rules: a selected block pulls in its key and all of its segments; a
    selected segment pulls in its block (and thus the block's other segments
    and key); a selected character pulls in all of its blocks and their
    segments, but only when it was selected "bare" (no block of that key is
    already in the selection). The bare-character rule keeps expansion
    idempotent while never auto-selecting sibling blocks of an up-propagated
    key: selecting one segment must not select every segment of its
    character.
    """
    for key in sel.characters:
        if key not in ds.key_blocks:
            raise UnknownCharacter(f"unknown character {key.label()}",
                                   entity=f"character:{key.label()}")
    blocks = set(sel.blocks)
    for bid in sel.blocks:
        ds.block(bid)
    for sid in sel.segments:
        blocks.add(ds.segment(sid).block_id)

    keys_present = {ds.block(b).key for b in blocks}
    for key in sel.characters:
        if key not in keys_present:
            blocks.update(ds.key_blocks[key])

    characters = set(sel.characters) | {ds.block(b).key for b in blocks}
    segments = set(sel.segments)
    for bid in blocks:
        segments.update(ds.block(bid).member_ids)
    return Selection(frozenset(characters), frozenset(blocks),
                     frozenset(segments))


def summary(ds: IndexedDataset) -> DatasetSummary:
    widths = Counter(seg.bbox.w for seg in ds.dataset.segments)
    if widths:
        best = max(widths.values())
        modal_width = min(w for w, c in widths.items() if c == best)
    else:
        modal_width = 0
    return DatasetSummary(
        n_spreads=len(ds.spread_by_id),
        n_segments=len(ds.segment_by_id),
        n_blocks=len(ds.block_by_id),
        n_characters=len(ds.key_blocks),
        unit_height_px=ds.meta.unit_height_px,
        modal_segment_width_px=modal_width,
    )
