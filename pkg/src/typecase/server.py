"""HTTP facade binding ingestion, curation, analytics and raster ops.

One process hosts one dataset. Readers always see a consistent immutable
snapshot; edits are serialized through a single lock and guarded by an
optimistic expected-revision token. Analytics are memoized per
(revision, operation, params).
"""

from __future__ import annotations

import io
import threading
from pathlib import Path
from typing import Any

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, Response
from fastapi.staticfiles import StaticFiles

from . import analytics, curation, dataio, model, raster
from .errors import (ConstantImage, EmptyLog, RevisionConflict, SchemaError,
                     TypecaseError)
from .model import CharacterKey, IndexedDataset, Selection

_STATUS = {
    "UnknownId": 404,
    "UnknownCharacter": 404,
    "UnknownSpread": 404,
    "MissingImage": 404,
    "RevisionConflict": 412,
    "KeyMismatch": 422,
    "InsufficientData": 422,
    "TooFewNodes": 422,
    "TooFewBlocks": 422,
    "EmptyGraph": 422,
    "ConstantImage": 422,
    "EmptyIntersection": 422,
    "SchemaError": 422,
    "IntegrityError": 422,
    "SameBlock": 409,
    "SingletonBlock": 409,
    "EmptyLog": 409,
}


def _key_doc(key: CharacterKey) -> dict:
    d: dict[str, Any] = {"text": key.text}
    if key.jibo is not None:
        d["jibo"] = key.jibo
    return d


def _segment_doc(seg: model.Segment) -> dict:
    return {"id": seg.id, "spread": seg.spread_id, "line": seg.line_index,
            "bbox": {"x": seg.bbox.x, "y": seg.bbox.y,
                     "w": seg.bbox.w, "h": seg.bbox.h},
            **_key_doc(seg.key), "block": seg.block_id}


def _block_doc(blk: model.Block) -> dict:
    return {"id": blk.id, **_key_doc(blk.key),
            "segments": list(blk.member_ids)}


def _selection_from_doc(ds: IndexedDataset, doc: dict) -> Selection:
    characters = frozenset(
        CharacterKey(c["text"], c.get("jibo"))
        for c in doc.get("characters", ()))
    return Selection(characters,
                     frozenset(doc.get("blocks", ())),
                     frozenset(doc.get("segments", ())))


def _selection_doc(sel: Selection) -> dict:
    return {
        "characters": [_key_doc(k) for k in
                       sorted(sel.characters, key=lambda k: k.sort_key)],
        "blocks": sorted(sel.blocks),
        "segments": sorted(sel.segments),
    }


def _png(raster_img: raster.GrayRaster) -> bytes:
    from PIL import Image

    buf = io.BytesIO()
    Image.fromarray(raster_img.pixels).save(buf, format="PNG")
    return buf.getvalue()


class Workbench:
    """Mutable service state: current snapshot, edit log, caches."""

    def __init__(self, state: curation.CurationState,
                 images: raster.ImageStore | None = None):
        self.state = state
        self.images = images or raster.ImageStore(state.ds)
        self._write_lock = threading.Lock()
        self._cache: dict[tuple, Any] = {}
        self._cache_lock = threading.Lock()

    def snapshot(self) -> curation.CurationState:
        return self.state

    def cached(self, op: str, params: tuple, compute):
        key = (self.state.revision, op, params)
        with self._cache_lock:
            if key in self._cache:
                return self._cache[key]
        value = compute()
        with self._cache_lock:
            self._cache[key] = value
        return value

    def apply(self, expected_revision: int, fn) -> tuple[curation.CurationState,
                                                         curation.CurationState]:
        with self._write_lock:
            before = self.state
            if expected_revision != before.revision:
                raise RevisionConflict(
                    f"expected revision {expected_revision}, "
                    f"current is {before.revision}")
            after = fn(before)
            # rebind the image store to the new snapshot; page images are
            # untouched by curation so the pixel cache stays valid
            self.images.ds = after.ds
            self.state = after
            return before, after


def create_app(state: curation.CurationState,
               images: raster.ImageStore | None = None,
               static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="typecase", docs_url=None, redoc_url=None)
    bench = Workbench(state, images)
    app.state.bench = bench

    @app.exception_handler(TypecaseError)
    async def domain_error(request: Request, exc: TypecaseError):
        status = _STATUS.get(exc.code, 422)
        return JSONResponse(
            status_code=status,
            content={"code": exc.code, "message": exc.message,
                     "entity": exc.entity})

    def rev() -> int:
        return bench.state.revision

    # -- entity reads -----------------------------------------------------

    @app.get("/api/summary")
    def get_summary():
        s = model.summary(bench.state.ds)
        return {"revision": rev(), "n_spreads": s.n_spreads,
                "n_segments": s.n_segments, "n_blocks": s.n_blocks,
                "n_characters": s.n_characters,
                "unit_height_px": s.unit_height_px,
                "modal_segment_width_px": s.modal_segment_width_px}

    @app.get("/api/spreads")
    def list_spreads():
        ds = bench.state.ds
        return {"revision": rev(), "spreads": [
            {"id": sp.id, "image": sp.image_ref, "width_px": sp.width_px,
             "height_px": sp.height_px,
             "n_segments": len(ds.spread_segments.get(sp.id, ()))}
            for sp in ds.dataset.spreads]}

    @app.get("/api/spreads/{spread_id}")
    def get_spread(spread_id: int):
        ds = bench.state.ds
        sp = ds.spread(spread_id)
        return {"revision": rev(), "id": sp.id, "image": sp.image_ref,
                "width_px": sp.width_px, "height_px": sp.height_px,
                "lines": [{"index": ln.index, "x_px": ln.x_px}
                          for ln in sorted(sp.lines, key=lambda l: l.index)],
                "segments": [_segment_doc(ds.segment(sid))
                             for sid in ds.spread_segments.get(sp.id, ())]}

    @app.get("/api/segments/{segment_id}")
    def get_segment(segment_id: int):
        return {"revision": rev(),
                **_segment_doc(bench.state.ds.segment(segment_id))}

    @app.get("/api/blocks/{block_id}")
    def get_block(block_id: int):
        return {"revision": rev(),
                **_block_doc(bench.state.ds.block(block_id))}

    @app.get("/api/characters")
    def list_characters():
        ds = bench.state.ds
        chars = []
        for key in sorted(ds.key_blocks, key=lambda k: k.sort_key):
            blocks = ds.key_blocks[key]
            chars.append({**_key_doc(key), "n_blocks": len(blocks),
                          "n_segments": sum(len(ds.block(b).member_ids)
                                            for b in blocks)})
        return {"revision": rev(), "characters": chars}

    @app.get("/api/characters/timeline")
    def get_timeline(text: str, jibo: str | None = None):
        ds = bench.state.ds
        t = analytics.character_timeline(ds, CharacterKey(text, jibo))
        return {"revision": rev(), **_key_doc(t.key),
                "spreads": list(t.spread_ids),
                "rows": [{"block": bid, "counts": list(counts)}
                         for bid, counts in t.rows]}

    @app.post("/api/selection/expand")
    def expand(doc: dict):
        ds = bench.state.ds
        sel = _selection_from_doc(ds, doc)
        return {"revision": rev(),
                **_selection_doc(model.expand_selection(sel, ds))}

    # -- analytics --------------------------------------------------------

    @app.get("/api/analytics/reuse")
    def get_reuse():
        counts = bench.cached("reuse", (), lambda:
                              analytics.reuse_counts(bench.state.ds))
        return {"revision": rev(),
                "counts": {str(k): v for k, v in sorted(counts.items())}}

    @app.get("/api/analytics/zipf")
    def get_zipf():
        def compute():
            counts = list(analytics.reuse_counts(bench.state.ds).values())
            return analytics.zipf_fit(counts)
        exponent, r2 = bench.cached("zipf", (), compute)
        return {"revision": rev(), "exponent": exponent, "r2": r2}

    @app.get("/api/analytics/duplicates")
    def get_duplicates():
        hits = bench.cached("duplicates", (), lambda:
                            analytics.same_spread_duplicates(bench.state.ds))
        return {"revision": rev(), "duplicates": [
            {"block": b, "spread": s, "count": n} for b, s, n in hits]}

    @app.get("/api/analytics/anomalies")
    def get_anomalies(k: float = 3.5):
        flagged = bench.cached("anomalies", (k,), lambda:
                               analytics.bbox_anomalies(bench.state.ds, k))
        return {"revision": rev(), "segments": flagged}

    @app.get("/api/analytics/coappearance")
    def get_coappearance():
        m = bench.cached("coappearance", (), lambda:
                         analytics.co_appearance(bench.state.ds))
        return {"revision": rev(), "blocks": list(m.block_ids),
                "triplets": [list(t) for t in m.triplets()]}

    @app.get("/api/analytics/graph")
    def get_graph(min_shared: int = 1):
        g = bench.cached("graph", (min_shared,), lambda:
                         analytics.spread_graph(bench.state.ds, min_shared))
        return {"revision": rev(), "n_spreads": g.n_spreads,
                "edges": [list(e) for e in g.edges]}

    @app.get("/api/analytics/density")
    def get_density(min_shared: int = 1):
        g = bench.cached("graph", (min_shared,), lambda:
                         analytics.spread_graph(bench.state.ds, min_shared))
        return {"revision": rev(),
                "density": analytics.graph_density(g)}

    @app.post("/api/analytics/modularity")
    def post_modularity(doc: dict):
        min_shared = int(doc.get("min_shared", 1))
        g = bench.cached("graph", (min_shared,), lambda:
                         analytics.spread_graph(bench.state.ds, min_shared))
        groups = {int(k): v for k, v in doc.get("groups", {}).items()}
        return {"revision": rev(),
                "modularity": analytics.partition_modularity(g, groups)}

    @app.get("/api/analytics/embedding")
    def get_embedding(dims: int = 2):
        def compute():
            m = analytics.co_appearance(bench.state.ds)
            return analytics.block_embedding(m, dims)
        coords = bench.cached("embedding", (dims,), compute)
        return {"revision": rev(), "coordinates": {
            str(bid): list(xy) for bid, xy in sorted(coords.items())}}

    @app.get("/api/analytics/rhythm")
    def get_rhythm(spread: int):
        rhythm = bench.cached("rhythm", (spread,), lambda:
                              analytics.line_rhythm(bench.state.ds, spread))
        return {"revision": rev(), "spread": spread,
                "lines": {str(k): v for k, v in sorted(rhythm.items())}}

    # -- curation ---------------------------------------------------------

    def _run_edit(doc: dict):
        op = doc.get("op")
        expected = doc.get("expected_revision")
        if not isinstance(expected, int) or isinstance(expected, bool):
            raise SchemaError("expected_revision (integer) is required",
                              entity="edit")

        def fn(state: curation.CurationState) -> curation.CurationState:
            try:
                if op == "move":
                    return curation.move_segment(state, int(doc["segment"]),
                                                 int(doc["to"]))
                if op == "merge":
                    return curation.merge_blocks(state, int(doc["src"]),
                                                 int(doc["dst"]))
                if op == "detach":
                    return curation.detach_segment(state, int(doc["segment"]))
            except KeyError as exc:
                raise SchemaError(f"edit is missing field {exc}",
                                  entity="edit") from exc
            raise SchemaError(f"unknown edit op '{op}'", entity="edit")

        before, after = bench.apply(expected, fn)
        if after.revision == before.revision:  # silent no-op move
            return {"revision": after.revision, "changed_block_ids": []}
        changed = curation.changed_blocks(before, after, after.log[-1])
        return {"revision": after.revision, "changed_block_ids": changed}

    @app.post("/api/edits")
    def post_edit(doc: dict):
        return _run_edit(doc)

    @app.post("/api/edits/undo")
    def post_undo(doc: dict):
        expected = doc.get("expected_revision")
        if not isinstance(expected, int) or isinstance(expected, bool):
            raise SchemaError("expected_revision (integer) is required",
                              entity="edit")
        holder: dict[str, curation.Edit] = {}

        def fn(state: curation.CurationState) -> curation.CurationState:
            if not state.log:
                raise EmptyLog("nothing to undo")
            holder["edit"] = state.log[-1]
            return curation.undo(state)

        before, after = bench.apply(expected, fn)
        changed = curation.changed_blocks(before, after, holder["edit"])
        return {"revision": after.revision, "changed_block_ids": changed}

    @app.get("/api/export")
    def get_export():
        state = bench.snapshot()
        raw = dataio.export_dataset(state.ds.dataset, state.log_docs())
        return Response(content=raw, media_type="application/json",
                        headers={"X-Revision": str(state.revision)})

    # -- images -----------------------------------------------------------

    @app.get("/api/images/page/{spread_id}")
    def page_image(spread_id: int):
        bench.state.ds.spread(spread_id)
        img = bench.images.page(spread_id)
        return Response(content=_png(img), media_type="image/png",
                        headers={"X-Revision": str(rev())})

    @app.get("/api/images/segment/{segment_id}")
    def segment_image(segment_id: int, binarize: bool = False):
        ds = bench.state.ds
        img = raster.segment_raster(segment_id, ds, bench.images)
        if binarize:
            try:
                t = raster.otsu_threshold(img)
            except ConstantImage:
                t = 127
            img = raster.binarize(img, t)
        return Response(content=_png(img), media_type="image/png",
                        headers={"X-Revision": str(rev())})

    @app.get("/api/images/block/{block_id}")
    def block_image(block_id: int):
        ds = bench.state.ds
        img = raster.block_thumbnail(block_id, ds, bench.images)
        return Response(content=_png(img), media_type="image/png",
                        headers={"X-Revision": str(rev())})

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True),
                  name="ui")

    return app


def app_from_files(dataset_path: str | Path,
                   images_dir: str | Path | None = None,
                   static_dir: str | Path | None = None) -> FastAPI:
    """Build the app from a dataset file; raises on any validation error."""
    raw = Path(dataset_path).read_bytes()
    ds, _report = dataio.parse_dataset(raw)
    indexed = model.build_indexes(ds)
    import json

    doc = json.loads(raw.decode("utf-8"))
    state = curation.replay(indexed, [])  # pristine
    log = doc.get("edit_log") or []
    if log:
        # the file's segments already reflect the log; keep entries so
        # exports preserve provenance
        state = curation.CurationState(
            indexed, tuple(curation.edit_from_doc(e) for e in log))
    store = raster.ImageStore(indexed, images_dir=images_dir)
    return create_app(state, store, static_dir)
