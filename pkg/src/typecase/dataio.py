"""Canonical dataset file format: parsing, validation, deterministic export.

The file is UTF-8 JSON with this shape::

    {
      "meta": {"title": str, "unit_height_px": number, "segment_width_px": int},
      "spreads": [{"id", "image", "width_px", "height_px",
                   "lines": [{"index", "x_px"}]}],
      "blocks": [{"id", "text", "jibo"?}],
      "segments": [{"id", "spread", "line",
                    "bbox": {"x", "y", "w", "h"}, "text", "jibo"?, "block"}],
      "edit_log": [...]
    }

``jibo`` is omitted (never empty) when absent. Export is byte-deterministic:
entities sorted by id, fixed key order, compact separators.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

from .errors import DatasetSyntaxError, IntegrityError, SchemaError
from .model import (BBox, Block, CharacterKey, Dataset, DatasetMeta,
                    LineLayout, Segment, Spread, reading_order_key)

# Tolerated deviation of a segment height from the nearest unit multiple,
# as a fraction of the unit; beyond it the H_NOT_UNIT_MULTIPLE warning fires.
UNIT_TOLERANCE = 0.15


@dataclass(frozen=True)
class Finding:
    code: str
    message: str
    entity: str


@dataclass
class ValidationReport:
    errors: list[Finding] = field(default_factory=list)
    warnings: list[Finding] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def error(self, code: str, message: str, entity: str) -> None:
        self.errors.append(Finding(code, message, entity))

    def warn(self, code: str, message: str, entity: str) -> None:
        self.warnings.append(Finding(code, message, entity))


# ---------------------------------------------------------------------------
# parsing

def _require(obj: dict, key: str, kind, where: str):
    if not isinstance(obj, dict):
        raise SchemaError(f"{where}: expected object", entity=where)
    if key not in obj:
        raise SchemaError(f"{where}: missing field '{key}'", entity=where)
    val = obj[key]
    if kind is int:
        # bool is an int subclass; reject it explicitly
        if isinstance(val, bool) or not isinstance(val, int):
            raise SchemaError(f"{where}.{key}: expected integer", entity=where)
    elif kind is float:
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise SchemaError(f"{where}.{key}: expected number", entity=where)
    elif not isinstance(val, kind):
        raise SchemaError(f"{where}.{key}: expected {kind.__name__}",
                          entity=where)
    return val


def _parse_key(obj: dict, where: str) -> CharacterKey:
    text = _require(obj, "text", str, where)
    if not text:
        raise SchemaError(f"{where}: text must be non-empty", entity=where)
    jibo = obj.get("jibo")
    if jibo is not None:
        if not isinstance(jibo, str) or not jibo:
            raise SchemaError(f"{where}: jibo must be a non-empty string "
                              "or omitted", entity=where)
    return CharacterKey(text, jibo)


def parse_dataset(data: bytes | str) -> tuple[Dataset, ValidationReport]:
    """Parse and validate the canonical format.

    Raises DatasetSyntaxError for malformed JSON, SchemaError for
    missing/ill-typed fields, IntegrityError when referential invariants are
    violated. On success the report carries warnings only.
    """
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise DatasetSyntaxError(f"not valid UTF-8: {exc}") from exc
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise DatasetSyntaxError(f"malformed JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SchemaError("top level must be an object", entity="$")

    meta_obj = _require(doc, "meta", dict, "meta")
    meta = DatasetMeta(
        title=str(meta_obj.get("title", "")),
        unit_height_px=float(_require(meta_obj, "unit_height_px", float, "meta")),
        segment_width_px=_require(meta_obj, "segment_width_px", int, "meta"),
    )

    spreads = []
    for i, sp in enumerate(_require(doc, "spreads", list, "$")):
        where = f"spreads[{i}]"
        lines = []
        for j, ln in enumerate(_require(sp, "lines", list, where)):
            lw = f"{where}.lines[{j}]"
            lines.append(LineLayout(_require(ln, "index", int, lw),
                                    _require(ln, "x_px", int, lw)))
        image = sp.get("image")
        if image is not None and not isinstance(image, str):
            raise SchemaError(f"{where}.image: expected string or null",
                              entity=where)
        spreads.append(Spread(
            id=_require(sp, "id", int, where),
            width_px=_require(sp, "width_px", int, where),
            height_px=_require(sp, "height_px", int, where),
            lines=tuple(lines),
            image_ref=image,
        ))

    block_keys: dict[int, CharacterKey] = {}
    block_order: list[int] = []
    for i, bl in enumerate(_require(doc, "blocks", list, "$")):
        where = f"blocks[{i}]"
        bid = _require(bl, "id", int, where)
        if bid in block_keys:
            raise IntegrityError(f"duplicate block id {bid}",
                                 entity=f"block:{bid}")
        block_keys[bid] = _parse_key(bl, where)
        block_order.append(bid)

    segments = []
    for i, sg in enumerate(_require(doc, "segments", list, "$")):
        where = f"segments[{i}]"
        bb = _require(sg, "bbox", dict, where)
        bbox = BBox(_require(bb, "x", int, where + ".bbox"),
                    _require(bb, "y", int, where + ".bbox"),
                    _require(bb, "w", int, where + ".bbox"),
                    _require(bb, "h", int, where + ".bbox"))
        segments.append(Segment(
            id=_require(sg, "id", int, where),
            spread_id=_require(sg, "spread", int, where),
            line_index=_require(sg, "line", int, where),
            bbox=bbox,
            key=_parse_key(sg, where),
            block_id=_require(sg, "block", int, where),
        ))

    edit_log = doc.get("edit_log", [])
    if not isinstance(edit_log, list):
        raise SchemaError("edit_log must be an array", entity="edit_log")

    # block member lists derive from segments, in reading order
    members: dict[int, list[Segment]] = {bid: [] for bid in block_keys}
    for seg in segments:
        members.setdefault(seg.block_id, []).append(seg)
    blocks = tuple(
        Block(bid, block_keys[bid],
              tuple(s.id for s in sorted(members[bid], key=reading_order_key)))
        for bid in block_order)

    ds = Dataset(meta, tuple(spreads), blocks, tuple(segments))
    report = validate(ds)
    if not report.ok:
        first = report.errors[0]
        raise IntegrityError(
            f"{first.code}: {first.message}"
            + (f" (+{len(report.errors) - 1} more)" if len(report.errors) > 1 else ""),
            entity=first.entity)
    return ds, report


# ---------------------------------------------------------------------------
# validation

def validate(ds: Dataset, unit_tolerance: float = UNIT_TOLERANCE) -> ValidationReport:
    """Pure structural + referential check; never mutates the dataset.

    Errors reject the dataset; warnings (unit-multiple heights, out-of-page
    boxes) keep flawed real data loadable for inspection.
    """
    rep = ValidationReport()

    spread_ids = [s.id for s in ds.spreads]
    if len(set(spread_ids)) != len(spread_ids):
        dup = sorted({i for i in spread_ids if spread_ids.count(i) > 1})[0]
        rep.error("DUPLICATE_SPREAD_ID", f"spread id {dup} appears twice",
                  f"spread:{dup}")
    elif sorted(spread_ids) != list(range(len(spread_ids))):
        rep.error("NONCONTIGUOUS_SPREAD_IDS",
                  "spread ids must be contiguous 0..n-1", "spreads")
    spread_by_id = {s.id: s for s in ds.spreads}
    for sp in ds.spreads:
        if sp.width_px <= 0 or sp.height_px <= 0:
            rep.error("BAD_SPREAD_SIZE",
                      f"spread {sp.id} has non-positive dimensions",
                      f"spread:{sp.id}")
        line_idx = [ln.index for ln in sp.lines]
        if len(set(line_idx)) != len(line_idx):
            rep.error("DUPLICATE_LINE_INDEX",
                      f"spread {sp.id} has duplicate line indexes",
                      f"spread:{sp.id}")

    seg_ids = [s.id for s in ds.segments]
    if len(set(seg_ids)) != len(seg_ids):
        dup = sorted({i for i in seg_ids if seg_ids.count(i) > 1})[0]
        rep.error("DUPLICATE_SEGMENT_ID", f"segment id {dup} appears twice",
                  f"segment:{dup}")

    block_by_id = {b.id: b for b in ds.blocks}
    owner: dict[int, int] = {}
    for blk in ds.blocks:
        if not blk.member_ids:
            rep.error("EMPTY_BLOCK", f"block {blk.id} has no segments",
                      f"block:{blk.id}")
        for sid in blk.member_ids:
            if sid in owner and owner[sid] != blk.id:
                rep.error("SEGMENT_IN_TWO_BLOCKS",
                          f"segment {sid} belongs to blocks {owner[sid]} and {blk.id}",
                          f"segment:{sid}")
            owner[sid] = blk.id

    unit = ds.meta.unit_height_px
    for seg in ds.segments:
        ent = f"segment:{seg.id}"
        if seg.bbox.w <= 0 or seg.bbox.h <= 0:
            rep.error("BAD_BBOX", f"segment {seg.id} has empty bbox", ent)
        if seg.bbox.x < 0 or seg.bbox.y < 0:
            rep.error("BAD_BBOX", f"segment {seg.id} has negative origin", ent)
        sp = spread_by_id.get(seg.spread_id)
        if sp is None:
            rep.error("UNKNOWN_SPREAD",
                      f"segment {seg.id} references missing spread {seg.spread_id}",
                      ent)
        else:
            if seg.line_index not in {ln.index for ln in sp.lines}:
                rep.error("UNKNOWN_LINE",
                          f"segment {seg.id} references missing line "
                          f"{seg.line_index} of spread {sp.id}", ent)
            if seg.bbox.right > sp.width_px or seg.bbox.bottom > sp.height_px:
                rep.warn("BBOX_OUT_OF_PAGE",
                         f"segment {seg.id} bbox exceeds spread {sp.id} bounds",
                         ent)
        blk = block_by_id.get(seg.block_id)
        if blk is None:
            rep.error("UNKNOWN_BLOCK",
                      f"segment {seg.id} references missing block {seg.block_id}",
                      ent)
        elif blk.key != seg.key:
            rep.error("KEY_MISMATCH",
                      f"segment {seg.id} key {seg.key.label()} does not match "
                      f"block {blk.id} key {blk.key.label()}", ent)
        if unit > 0 and seg.bbox.h > 0:
            nearest = math.floor(seg.bbox.h / unit + 0.5) * unit
            if abs(seg.bbox.h - nearest) > unit_tolerance * unit:
                rep.warn("H_NOT_UNIT_MULTIPLE",
                         f"segment {seg.id} height {seg.bbox.h} deviates from "
                         f"nearest unit multiple {nearest:g}", ent)
    return rep


def height_unit_outliers(ds: Dataset,
                         unit_tolerance: float = UNIT_TOLERANCE) -> set[int]:
    """Segment ids carrying the H_NOT_UNIT_MULTIPLE warning."""
    rep = validate(ds, unit_tolerance)
    out = set()
    for w in rep.warnings:
        if w.code == "H_NOT_UNIT_MULTIPLE":
            out.add(int(w.entity.split(":", 1)[1]))
    return out


# ---------------------------------------------------------------------------
# export

def _num(x: float):
    return int(x) if float(x).is_integer() else float(x)


def _key_fields(key: CharacterKey) -> dict:
    d: dict[str, Any] = {"text": key.text}
    if key.jibo is not None:
        d["jibo"] = key.jibo
    return d


def dataset_to_doc(ds: Dataset, edit_log: list[dict] | None = None) -> dict:
    """Canonical JSON-ready document (deterministic field and entity order)."""
    return {
        "meta": {
            "title": ds.meta.title,
            "unit_height_px": _num(ds.meta.unit_height_px),
            "segment_width_px": ds.meta.segment_width_px,
        },
        "spreads": [
            {"id": sp.id, "image": sp.image_ref, "width_px": sp.width_px,
             "height_px": sp.height_px,
             "lines": [{"index": ln.index, "x_px": ln.x_px}
                       for ln in sorted(sp.lines, key=lambda l: l.index)]}
            for sp in sorted(ds.spreads, key=lambda s: s.id)],
        "blocks": [
            {"id": b.id, **_key_fields(b.key)}
            for b in sorted(ds.blocks, key=lambda b: b.id)],
        "segments": [
            {"id": sg.id, "spread": sg.spread_id, "line": sg.line_index,
             "bbox": {"x": sg.bbox.x, "y": sg.bbox.y,
                      "w": sg.bbox.w, "h": sg.bbox.h},
             **_key_fields(sg.key), "block": sg.block_id}
            for sg in sorted(ds.segments, key=lambda s: s.id)],
        "edit_log": list(edit_log or []),
    }


def export_dataset(ds: Dataset, edit_log: list[dict] | None = None) -> bytes:
    """Serialize to the canonical byte-deterministic form."""
    doc = dataset_to_doc(ds, edit_log)
    return json.dumps(doc, ensure_ascii=False,
                      separators=(",", ":")).encode("utf-8")


def semantically_equal(a: Dataset, b: Dataset) -> bool:
    """Equality up to entity ordering and formatting."""
    return dataset_to_doc(a) == dataset_to_doc(b)
