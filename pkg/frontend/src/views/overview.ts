import { Api } from "../api.js";
import { OverviewColormap, ViewState } from "../state.js";
import { DuplicateHit, SpreadDetail } from "../types.js";

/** One rectangle of a composite spread glyph, in canvas coordinates. */
export interface GlyphRect {
  segmentId: number;
  blockId: number;
  spreadId: number;
  x: number;
  y: number;
  w: number;
  h: number;
  color: string;
}

export interface OverviewModel {
  columns: number;
  cell: number;
  rects: GlyphRect[];
}

const BASE_COLOR = "#c8c8c8";
const SELECT_COLOR = "#e05a2b";
const DUPLICATE_COLOR = "#c1121f";
// divergent scale for segment heights in unit lengths (1, 2, 3+)
const RHYTHM_COLORS = ["#2166ac", "#f7f7f7", "#b2182b"];

export interface ColorContext {
  colormap: OverviewColormap;
  selectedSegments: ReadonlySet<number>;
  /** (block, spread) pairs flagged as physically impossible repeats. */
  duplicatePairs: ReadonlySet<string>;
  /** segment id -> height in unit lengths */
  unitsBySegment: ReadonlyMap<number, number>;
}

export function segmentColor(
  ctx: ColorContext,
  segmentId: number,
  blockId: number,
  spreadId: number,
): string {
  switch (ctx.colormap) {
    case "none":
      return BASE_COLOR;
    case "selection":
      return ctx.selectedSegments.has(segmentId) ? SELECT_COLOR : BASE_COLOR;
    case "duplicate":
      return ctx.duplicatePairs.has(`${blockId}:${spreadId}`)
        ? DUPLICATE_COLOR
        : BASE_COLOR;
    case "rhythm": {
      const units = ctx.unitsBySegment.get(segmentId) ?? 1;
      return RHYTHM_COLORS[Math.min(units, 3) - 1];
    }
  }
}

/**
 * Fit every spread into a square grid cell as a composite glyph: one
 * rectangle per segment, aspect ratio preserved, row-major by spread id so
 * the whole book fits on one screen.
 */
export function layoutGlyphs(
  spreads: SpreadDetail[],
  ctx: ColorContext,
  canvasWidth: number,
  cell: number,
): OverviewModel {
  const columns = Math.max(1, Math.floor(canvasWidth / cell));
  const ordered = [...spreads].sort((a, b) => a.id - b.id);
  const rects: GlyphRect[] = [];
  ordered.forEach((spread, i) => {
    const originX = (i % columns) * cell;
    const originY = Math.floor(i / columns) * cell;
    const scale = Math.min(
      cell / spread.width_px,
      cell / spread.height_px,
    );
    for (const seg of spread.segments) {
      rects.push({
        segmentId: seg.id,
        blockId: seg.block,
        spreadId: spread.id,
        x: originX + seg.bbox.x * scale,
        y: originY + seg.bbox.y * scale,
        w: seg.bbox.w * scale,
        h: seg.bbox.h * scale,
        color: segmentColor(ctx, seg.id, seg.block, spread.id),
      });
    }
  });
  return { columns, cell, rects };
}

/** Offscreen hit index: last-painted rectangle wins, like canvas z-order. */
export function hitTest(
  model: OverviewModel,
  x: number,
  y: number,
): GlyphRect | null {
  for (let i = model.rects.length - 1; i >= 0; i--) {
    const r = model.rects[i];
    if (x >= r.x && x < r.x + r.w && y >= r.y && y < r.y + r.h) return r;
  }
  return null;
}

/**
 * Canvas-based dataset overview: every spread as one composite glyph.
 * Recomputes its model from the server on selection changes and edits;
 * rendering itself is a straight paint of `model.rects`.
 */
export class Overview {
  model: OverviewModel = { columns: 1, cell: 48, rects: [] };
  renderCount = 0;

  constructor(
    private readonly api: Api,
    private readonly state: ViewState,
    private readonly canvasWidth = 960,
    private readonly cell = 48,
  ) {
    state.subscribe({
      onSelection: () => void this.refresh(),
      onBlocksChanged: () => void this.refresh(),
    });
  }

  async refresh(): Promise<OverviewModel> {
    const infos = await this.api.spreads();
    const spreads = await Promise.all(
      infos.map((s) => this.api.spread(s.id)),
    );
    const ctx = await this.colorContext(spreads);
    this.model = layoutGlyphs(spreads, ctx, this.canvasWidth, this.cell);
    this.renderCount += 1;
    return this.model;
  }

  private async colorContext(spreads: SpreadDetail[]): Promise<ColorContext> {
    const colormap = this.state.overviewColormap;
    const duplicatePairs = new Set<string>();
    const unitsBySegment = new Map<number, number>();
    if (colormap === "duplicate") {
      for (const d of await this.api.duplicates()) {
        duplicatePairs.add(`${d.block}:${d.spread}`);
      }
    }
    if (colormap === "rhythm") {
      const summary = await this.api.summary();
      const unit = summary.unit_height_px || 1;
      for (const spread of spreads) {
        for (const seg of spread.segments) {
          unitsBySegment.set(
            seg.id,
            Math.max(1, Math.floor(seg.bbox.h / unit + 0.5)),
          );
        }
      }
    }
    return {
      colormap,
      selectedSegments: new Set(this.state.selection.segments),
      duplicatePairs,
      unitsBySegment,
    };
  }

  /** Segments currently painted with a highlight color. */
  highlightedSegments(): number[] {
    return this.model.rects
      .filter((r) => r.color !== BASE_COLOR)
      .map((r) => r.segmentId);
  }

  duplicateHits(hits: DuplicateHit[]): Set<string> {
    return new Set(hits.map((d) => `${d.block}:${d.spread}`));
  }
}
