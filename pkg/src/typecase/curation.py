"""Block-hypothesis curation: move, merge, detach, undo.

Edits never touch segment geometry or labels; they only reassign segments
between blocks of the same character key. Each edit yields a fresh immutable
snapshot plus a log entry carrying enough information to invert itself
exactly, so the log is both an undo stack and a replayable provenance
record.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from datetime import datetime, timezone
from typing import Callable

from .errors import (EmptyLog, IntegrityError, KeyMismatch, SameBlock,
                     SingletonBlock)
from .model import Dataset, IndexedDataset, build_indexes


def _utc_now() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass(frozen=True)
class MoveSegment:
    segment_id: int
    from_block: int
    to_block: int
    revision: int
    ts: str

    def to_doc(self) -> dict:
        return {"op": "move", "segment": self.segment_id,
                "from": self.from_block, "to": self.to_block,
                "revision": self.revision, "ts": self.ts}


@dataclass(frozen=True)
class MergeBlocks:
    src_block: int
    dst_block: int
    moved_segment_ids: tuple[int, ...]
    revision: int
    ts: str

    def to_doc(self) -> dict:
        return {"op": "merge", "src": self.src_block, "dst": self.dst_block,
                "moved": list(self.moved_segment_ids),
                "revision": self.revision, "ts": self.ts}


@dataclass(frozen=True)
class DetachSegment:
    segment_id: int
    from_block: int
    new_block_id: int
    revision: int
    ts: str

    def to_doc(self) -> dict:
        return {"op": "detach", "segment": self.segment_id,
                "from": self.from_block, "new_block": self.new_block_id,
                "revision": self.revision, "ts": self.ts}


Edit = MoveSegment | MergeBlocks | DetachSegment


def edit_from_doc(doc: dict) -> Edit:
    try:
        op = doc["op"]
        if op == "move":
            return MoveSegment(doc["segment"], doc["from"], doc["to"],
                               doc["revision"], doc["ts"])
        if op == "merge":
            return MergeBlocks(doc["src"], doc["dst"], tuple(doc["moved"]),
                               doc["revision"], doc["ts"])
        if op == "detach":
            return DetachSegment(doc["segment"], doc["from"],
                                 doc["new_block"], doc["revision"], doc["ts"])
    except KeyError as exc:
        raise IntegrityError(f"edit log entry missing field {exc}",
                             entity="edit_log") from exc
    raise IntegrityError(f"unknown edit op '{op}'", entity="edit_log")


@dataclass(frozen=True)
class CurationState:
    """One revision of the curated dataset plus its edit history."""

    ds: IndexedDataset
    log: tuple[Edit, ...] = ()

    @property
    def revision(self) -> int:
        return len(self.log)

    def log_docs(self) -> list[dict]:
        return [e.to_doc() for e in self.log]


def pristine(ds: IndexedDataset) -> CurationState:
    return CurationState(ds, ())


def _reassign(ds: IndexedDataset, assignments: dict[int, int]) -> IndexedDataset:
    """Rebuild the snapshot with the given segment→block reassignments.

    Blocks left without members disappear; blocks named only in the new
    assignments are created with the segment's key. Member order is always
    the canonical reading order, so any membership state has exactly one
    representation.
    """
    segments = tuple(
        replace(seg, block_id=assignments.get(seg.id, seg.block_id))
        for seg in ds.dataset.segments)
    return build_indexes(Dataset.assemble(ds.dataset.meta,
                                          ds.dataset.spreads, segments))


def move_segment(state: CurationState, segment_id: int, to_block: int,
                 now: Callable[[], str] = _utc_now) -> CurationState:
    """Move one segment into another block of the same character.

    Moving a segment to the block it already belongs to is a successful
    no-op: same state, no log entry.
    """
    seg = state.ds.segment(segment_id)
    dst = state.ds.block(to_block)
    if seg.block_id == to_block:
        return state
    if seg.key != dst.key:
        raise KeyMismatch(
            f"cannot move segment {segment_id} ({seg.key.label()}) into "
            f"block {to_block} ({dst.key.label()})",
            entity=f"segment:{segment_id}")
    edit = MoveSegment(segment_id, seg.block_id, to_block,
                       state.revision + 1, now())
    return CurationState(_reassign(state.ds, {segment_id: to_block}),
                         state.log + (edit,))


def merge_blocks(state: CurationState, src: int, dst: int,
                 now: Callable[[], str] = _utc_now) -> CurationState:
    """Fold block ``src`` into ``dst``; ``src`` disappears."""
    if src == dst:
        raise SameBlock(f"cannot merge block {src} into itself",
                        entity=f"block:{src}")
    src_blk = state.ds.block(src)
    dst_blk = state.ds.block(dst)
    if src_blk.key != dst_blk.key:
        raise KeyMismatch(
            f"cannot merge block {src} ({src_blk.key.label()}) into "
            f"block {dst} ({dst_blk.key.label()})", entity=f"block:{src}")
    edit = MergeBlocks(src, dst, src_blk.member_ids, state.revision + 1, now())
    return CurationState(
        _reassign(state.ds, {sid: dst for sid in src_blk.member_ids}),
        state.log + (edit,))


def detach_segment(state: CurationState, segment_id: int,
                   now: Callable[[], str] = _utc_now) -> CurationState:
    """Split one segment out of its block into a fresh singleton block."""
    seg = state.ds.segment(segment_id)
    blk = state.ds.block(seg.block_id)
    if len(blk.member_ids) < 2:
        raise SingletonBlock(
            f"segment {segment_id} is the only member of block {blk.id}",
            entity=f"block:{blk.id}")
    new_id = max(state.ds.block_by_id) + 1
    edit = DetachSegment(segment_id, seg.block_id, new_id,
                         state.revision + 1, now())
    return CurationState(_reassign(state.ds, {segment_id: new_id}),
                         state.log + (edit,))


def undo(state: CurationState) -> CurationState:
    """Invert the most recent edit exactly and pop it from the log."""
    if not state.log:
        raise EmptyLog("nothing to undo")
    last = state.log[-1]
    if isinstance(last, MoveSegment):
        assignments = {last.segment_id: last.from_block}
    elif isinstance(last, MergeBlocks):
        assignments = {sid: last.src_block for sid in last.moved_segment_ids}
    else:
        assignments = {last.segment_id: last.from_block}
    return CurationState(_reassign(state.ds, assignments), state.log[:-1])


def apply_edit(state: CurationState, edit: Edit) -> CurationState:
    """Re-apply a recorded edit verbatim (log replay)."""
    if isinstance(edit, MoveSegment):
        seg = state.ds.segment(edit.segment_id)
        if seg.block_id != edit.from_block:
            raise IntegrityError(
                f"replay: segment {edit.segment_id} is in block "
                f"{seg.block_id}, log says {edit.from_block}",
                entity=f"segment:{edit.segment_id}")
        assignments = {edit.segment_id: edit.to_block}
    elif isinstance(edit, MergeBlocks):
        assignments = {sid: edit.dst_block for sid in edit.moved_segment_ids}
    else:
        assignments = {edit.segment_id: edit.new_block_id}
    return CurationState(_reassign(state.ds, assignments),
                         state.log + (edit,))


def replay(ds: IndexedDataset, entries: list[dict]) -> CurationState:
    """Rebuild the edited state by replaying an exported edit log onto the
    pristine dataset."""
    state = pristine(ds)
    for doc in entries:
        state = apply_edit(state, edit_from_doc(doc))
    return state


def changed_blocks(before: CurationState, after: CurationState,
                   edit: Edit) -> list[dict]:
    """Blocks whose membership changed, with deletion flags, for precise
    cache invalidation in clients."""
    if isinstance(edit, MoveSegment):
        ids = [edit.from_block, edit.to_block]
    elif isinstance(edit, MergeBlocks):
        ids = [edit.src_block, edit.dst_block]
    else:
        ids = [edit.from_block, edit.new_block_id]
    return [{"id": bid, "deleted": bid not in after.ds.block_by_id}
            for bid in ids]
