import { Api } from "./api.js";
import { ChangedBlock, CharacterRef, SelectionDoc } from "./types.js";

export interface CollectionFilter {
  /** Inclusive reuse range; max = Infinity means unbounded. */
  minReuse: number;
  maxReuse: number;
}

export type OverviewColormap = "none" | "duplicate" | "rhythm" | "selection";

export interface StateListener {
  /** Selection changed (already server-expanded). */
  onSelection?(sel: SelectionDoc): void;
  /** An edit was acknowledged; only these blocks changed membership. */
  onBlocksChanged?(changed: ChangedBlock[], revision: number): void;
  /** Navigation to a spread was requested (right-click contract). */
  onNavigate?(spread: number): void;
  /** The server revision moved under us; show a reload prompt. */
  onConflict?(): void;
}

const EMPTY_SELECTION: SelectionDoc = {
  characters: [],
  blocks: [],
  segments: [],
};

/**
 * Shared view state. Holds no authoritative dataset content — only the
 * revision token, the server-expanded selection, navigation position and
 * per-view filters. All views observe this single instance, which is what
 * keeps them coordinated.
 */
export class ViewState {
  revision = 0;
  selection: SelectionDoc = EMPTY_SELECTION;
  currentSpread = 0;
  collectionFilter: CollectionFilter = { minReuse: 1, maxReuse: Infinity };
  overviewColormap: OverviewColormap = "none";
  minShared = 1;
  conflict = false;

  private listeners: StateListener[] = [];

  constructor(private readonly api: Api) {}

  subscribe(listener: StateListener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  /**
   * Seed a selection from any view; the stored selection is always the
   * server-expanded closure, so every view reads the identical set.
   */
  async select(seed: Partial<SelectionDoc>): Promise<SelectionDoc> {
    this.selection = await this.api.expandSelection(seed);
    for (const l of this.listeners) l.onSelection?.(this.selection);
    return this.selection;
  }

  clearSelection(): void {
    this.selection = EMPTY_SELECTION;
    for (const l of this.listeners) l.onSelection?.(this.selection);
  }

  isSegmentSelected(id: number): boolean {
    return this.selection.segments.includes(id);
  }

  isBlockSelected(id: number): boolean {
    return this.selection.blocks.includes(id);
  }

  selectedCharacters(): CharacterRef[] {
    return this.selection.characters;
  }

  navigateToSpread(spread: number): void {
    this.currentSpread = spread;
    for (const l of this.listeners) l.onNavigate?.(spread);
  }

  acknowledgeEdit(changed: ChangedBlock[], revision: number): void {
    this.revision = revision;
    for (const l of this.listeners) l.onBlocksChanged?.(changed, revision);
  }

  flagConflict(): void {
    this.conflict = true;
    for (const l of this.listeners) l.onConflict?.();
  }

  clearConflict(revision: number): void {
    this.conflict = false;
    this.revision = revision;
  }
}
