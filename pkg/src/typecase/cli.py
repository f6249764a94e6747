"""Command-line entry points.

Exit codes: 0 success, 1 validation failure (the dataset is readable but
violates invariants), 2 usage or I/O errors.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import curation, dataio, model, raster, reports, synthgen
from .errors import TypecaseError


def _load(dataset_path: str):
    try:
        raw = Path(dataset_path).read_bytes()
    except OSError as exc:
        click.echo(f"cannot read {dataset_path}: {exc}", err=True)
        sys.exit(2)
    try:
        ds, report = dataio.parse_dataset(raw)
    except TypecaseError as exc:
        click.echo(f"{exc.code}: {exc.message}"
                   + (f" [{exc.entity}]" if exc.entity else ""), err=True)
        sys.exit(1)
    return ds, report, raw


@click.group()
def main():
    """Typographic forensics workbench for movable-type books."""


@main.command()
@click.option("--dataset", required=True, type=click.Path())
def validate(dataset):
    """Check a dataset file; print findings and exit 0 (clean or warnings
    only) or 1 (errors)."""
    ds, report, _ = _load(dataset)
    for f in report.warnings:
        click.echo(f"warning {f.code}: {f.message} [{f.entity}]")
    s = model.summary(model.build_indexes(ds))
    click.echo(f"ok: {s.n_spreads} spreads, {s.n_segments} segments, "
               f"{s.n_blocks} blocks, {s.n_characters} characters")


@main.command()
@click.option("--dataset", required=True, type=click.Path())
@click.option("--out", required=True, type=click.Path())
@click.option("--k", default=3.5, show_default=True,
              help="Robust z-score cutoff for bbox anomalies.")
@click.option("--min-shared", default=1, show_default=True,
              help="Minimum shared blocks for a spread-graph edge.")
def analyze(dataset, out, k, min_shared):
    """Write the full set of CSV reports for a dataset."""
    ds, _, _ = _load(dataset)
    indexed = model.build_indexes(ds)
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = reports.write_all(indexed, out_dir, k=k, min_shared=min_shared)
    for path in written:
        click.echo(str(path))


@main.command()
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", required=True, type=click.Path(),
              help="Output dataset JSON path; ground truth goes next to it.")
@click.option("--characters", default=100, show_default=True, type=int)
@click.option("--blocks-per-character", default=2, show_default=True, type=int)
@click.option("--spreads", default=20, show_default=True, type=int)
@click.option("--lines", default=4, show_default=True, type=int)
@click.option("--segments-per-line", default=8, show_default=True, type=int)
@click.option("--usage-exponent", default=None, type=float,
              help="Zipf exponent for block usage; omit for uniform.")
@click.option("--duplicates", default=0, show_default=True, type=int)
@click.option("--oversize", default=0, show_default=True, type=int)
@click.option("--boundary", default=None, type=int,
              help="Spread index where the type pool changes.")
@click.option("--overlap", default=0.0, show_default=True, type=float,
              help="Fraction of blocks shared across the pool boundary.")
@click.option("--images", is_flag=True, help="Render page images too.")
def synth(seed, out, characters, blocks_per_character, spreads, lines,
          segments_per_line, usage_exponent, duplicates, oversize,
          boundary, overlap, images):
    """Generate a synthetic book with known ground truth."""
    partition = None
    if boundary is not None:
        partition = synthgen.PartitionSpec(boundary, overlap)
    cfg = synthgen.SynthConfig(
        seed=seed, n_characters=characters,
        blocks_per_character=blocks_per_character, n_spreads=spreads,
        lines_per_spread=lines, segments_per_line=segments_per_line,
        usage_exponent=usage_exponent, partition=partition,
        planted_duplicates=duplicates, planted_oversize=oversize,
        render_images=images)
    try:
        res = synthgen.generate(cfg)
    except TypecaseError as exc:
        click.echo(f"{exc.code}: {exc.message}", err=True)
        sys.exit(2)
    out_path = Path(out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_bytes(dataio.export_dataset(res.dataset))
    truth_path = out_path.with_suffix(".truth.json")
    truth_path.write_text(json.dumps(res.truth.to_doc(), ensure_ascii=False,
                                     indent=2), encoding="utf-8")
    click.echo(str(out_path))
    click.echo(str(truth_path))
    if images:
        from PIL import Image

        img_dir = out_path.parent / (out_path.stem + "_pages")
        img_dir.mkdir(exist_ok=True)
        for sid, page in res.page_images.items():
            Image.fromarray(page.pixels).save(img_dir / f"spread_{sid}.png")
        click.echo(str(img_dir))


@main.command()
@click.option("--dataset", required=True, type=click.Path())
@click.option("--images", default=None, type=click.Path(),
              help="Directory holding page images.")
@click.option("--static", default=None, type=click.Path(),
              help="Directory of UI assets to serve at /.")
@click.option("--bind", default="127.0.0.1:8000", show_default=True)
def serve(dataset, images, static, bind):
    """Serve the workbench API (and optional UI) over HTTP."""
    from . import server

    ds, report, _ = _load(dataset)
    try:
        app = server.app_from_files(dataset, images_dir=images,
                                    static_dir=static)
    except TypecaseError as exc:
        click.echo(f"{exc.code}: {exc.message}", err=True)
        sys.exit(1)
    host, _, port = bind.rpartition(":")
    import uvicorn

    uvicorn.run(app, host=host or "127.0.0.1", port=int(port))


@main.command()
@click.option("--dataset", required=True, type=click.Path())
@click.option("--out", default="-", show_default=True,
              help="Output path, or - for stdout.")
def export(dataset, out):
    """Re-serialize a dataset to canonical bytes (stable entity order,
    compact separators)."""
    ds, _, raw = _load(dataset)
    doc = json.loads(raw.decode("utf-8"))
    data = dataio.export_dataset(ds, doc.get("edit_log") or [])
    if out == "-":
        sys.stdout.buffer.write(data + b"\n")
    else:
        Path(out).write_bytes(data)
        click.echo(out)


@main.command()
@click.option("--dataset", required=True, type=click.Path(),
              help="Input file (canonical JSON).")
@click.option("--out", required=True, type=click.Path())
def convert(dataset, out):
    """Normalize an external file into canonical form.

    Currently accepts the canonical JSON schema only; this command is the
    hook where adapters for other segmentation exports plug in.
    """
    ds, _, raw = _load(dataset)
    doc = json.loads(raw.decode("utf-8"))
    Path(out).write_bytes(dataio.export_dataset(ds, doc.get("edit_log") or []))
    click.echo(out)


if __name__ == "__main__":
    main()
