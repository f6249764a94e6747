"""Flat CSV exports (RFC-4180, header row) for every analytic."""

from __future__ import annotations

import csv
import io
from pathlib import Path

from . import analytics, model
from .model import IndexedDataset


def _csv(rows: list[list], header: list[str]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def reuse_csv(ds: IndexedDataset) -> str:
    counts = analytics.reuse_counts(ds)
    return _csv([[bid, counts[bid]] for bid in sorted(counts)],
                ["block_id", "reuse_count"])


def zipf_csv(ds: IndexedDataset) -> str:
    counts = list(analytics.reuse_counts(ds).values())
    exponent, r2 = analytics.zipf_fit(counts)
    return _csv([[f"{exponent:.6f}", f"{r2:.6f}"]], ["exponent", "r2"])


def duplicates_csv(ds: IndexedDataset) -> str:
    return _csv([list(t) for t in analytics.same_spread_duplicates(ds)],
                ["block_id", "spread_id", "count"])


def anomalies_csv(ds: IndexedDataset, k: float = 3.5) -> str:
    return _csv([[sid] for sid in analytics.bbox_anomalies(ds, k)],
                ["segment_id"])


def coappearance_csv(ds: IndexedDataset) -> str:
    matrix = analytics.co_appearance(ds)
    return _csv([list(t) for t in matrix.triplets()],
                ["block_i", "block_j", "spreads"])


def graph_csv(ds: IndexedDataset, min_shared: int = 1) -> str:
    g = analytics.spread_graph(ds, min_shared)
    return _csv([list(e) for e in g.edges],
                ["spread_u", "spread_v", "shared_blocks"])


def embedding_csv(ds: IndexedDataset) -> str:
    matrix = analytics.co_appearance(ds)
    coords = analytics.block_embedding(matrix)
    return _csv([[bid, f"{xy[0]:.6f}", f"{xy[1]:.6f}"]
                 for bid, xy in sorted(coords.items())],
                ["block_id", "x", "y"])


def rhythm_csv(ds: IndexedDataset, spread_id: int) -> str:
    rhythm = analytics.line_rhythm(ds, spread_id)
    return _csv([[spread_id, line, " ".join(map(str, units))]
                 for line, units in sorted(rhythm.items())],
                ["spread_id", "line_index", "unit_heights"])


def summary_csv(ds: IndexedDataset) -> str:
    s = model.summary(ds)
    return _csv([[s.n_spreads, s.n_segments, s.n_blocks, s.n_characters,
                  f"{s.unit_height_px:g}", s.modal_segment_width_px]],
                ["n_spreads", "n_segments", "n_blocks", "n_characters",
                 "unit_height_px", "modal_segment_width_px"])


def write_all(ds: IndexedDataset, out_dir: str | Path,
              k: float = 3.5, min_shared: int = 1) -> list[Path]:
    """Write every report to a directory; returns the files written."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {
        "summary.csv": summary_csv(ds),
        "reuse.csv": reuse_csv(ds),
        "duplicates.csv": duplicates_csv(ds),
        "anomalies.csv": anomalies_csv(ds, k),
        "coappearance.csv": coappearance_csv(ds),
        "graph.csv": graph_csv(ds, min_shared),
    }
    try:
        files["zipf.csv"] = zipf_csv(ds)
    except Exception:
        pass  # too few blocks for a fit
    try:
        files["embedding.csv"] = embedding_csv(ds)
    except Exception:
        pass
    written = []
    for name, text in files.items():
        path = out / name
        path.write_text(text, encoding="utf-8")
        written.append(path)
    return written
