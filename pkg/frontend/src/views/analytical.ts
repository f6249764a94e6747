import { ViewState } from "../state.js";
import { Workbench } from "../workbench.js";
import {
  ApiResult,
  ChangedBlock,
  CharacterRef,
  EditResponse,
} from "../types.js";

export interface RowModel {
  blockId: number;
  /** Per-spread usage counts in spread order. */
  counts: number[];
  thumbnailUrl: string;
}

/**
 * One character at a time: rows are its blocks (ordered by descending
 * reuse, then earliest appearance — the server's Timeline order), columns
 * are spreads. Drag-and-drop between rows is the curation surface: each
 * drop issues exactly one POST and only rows named in the response's
 * changed_block_ids are rebuilt.
 */
export class AnalyticalView {
  character: CharacterRef | null = null;
  spreads: number[] = [];
  rows = new Map<number, RowModel>();
  rowOrder: number[] = [];
  /** Block ids whose rows were rebuilt, in order — the re-render log. */
  renderedRows: number[] = [];
  conflictPrompt = false;

  constructor(
    private readonly workbench: Workbench,
    state: ViewState,
  ) {
    state.subscribe({
      onBlocksChanged: (changed) => void this.applyChanged(changed),
      onConflict: () => {
        this.conflictPrompt = true;
      },
    });
  }

  async load(character: CharacterRef): Promise<void> {
    this.character = character;
    const t = await this.workbench.api.timeline(character);
    this.spreads = t.spreads;
    this.rows.clear();
    this.rowOrder = [];
    for (const row of t.rows) {
      this.rows.set(row.block, this.toRow(row.block, row.counts));
      this.rowOrder.push(row.block);
    }
  }

  private toRow(blockId: number, counts: number[]): RowModel {
    return {
      blockId,
      counts,
      thumbnailUrl: this.workbench.api.blockImageUrl(blockId),
    };
  }

  /** Drag a segment thumbnail from one row onto another: one move edit. */
  dropSegmentOnRow(
    segmentId: number,
    targetBlock: number,
  ): Promise<ApiResult<EditResponse>> {
    return this.workbench.applyEdit({
      op: "move",
      segment: segmentId,
      to: targetBlock,
    });
  }

  /** Drop a whole row onto another: merge source into target. */
  dropRowOnRow(
    sourceBlock: number,
    targetBlock: number,
  ): Promise<ApiResult<EditResponse>> {
    return this.workbench.applyEdit({
      op: "merge",
      src: sourceBlock,
      dst: targetBlock,
    });
  }

  detach(segmentId: number): Promise<ApiResult<EditResponse>> {
    return this.workbench.applyEdit({ op: "detach", segment: segmentId });
  }

  undo(): Promise<ApiResult<EditResponse>> {
    return this.workbench.undo();
  }

  /**
   * Rebuild exactly the rows the server named. Deleted blocks drop out;
   * changed or new blocks are re-fetched via the timeline (scoped to this
   * view's character). Untouched rows keep their object identity.
   */
  private async applyChanged(changed: ChangedBlock[]): Promise<void> {
    if (!this.character) return;
    const touched = new Set(changed.map((c) => c.id));
    const deleted = new Set(
      changed.filter((c) => c.deleted).map((c) => c.id),
    );
    const t = await this.workbench.api.timeline(this.character);
    const serverRows = new Map(t.rows.map((r) => [r.block, r.counts]));
    for (const id of deleted) {
      this.rows.delete(id);
      this.rowOrder = this.rowOrder.filter((b) => b !== id);
    }
    for (const id of touched) {
      if (deleted.has(id)) continue;
      const counts = serverRows.get(id);
      if (counts === undefined) continue; // different character's block
      this.rows.set(id, this.toRow(id, counts));
      if (!this.rowOrder.includes(id)) this.rowOrder.push(id);
      this.renderedRows.push(id);
    }
  }
}
