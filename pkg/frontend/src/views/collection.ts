import { Api } from "../api.js";
import { ViewState } from "../state.js";
import { ChangedBlock, CharacterRef, characterKey } from "../types.js";

export interface CollectionCell {
  blockId: number;
  reuse: number;
  thumbnailUrl: string;
  /** 0 (black) .. 255 (white) background luminance. */
  luminance: number;
  selected: boolean;
}

export interface CollectionGroup {
  character: CharacterRef;
  cells: CollectionCell[];
}

/**
 * Background luminance for a reuse count: single-use blocks stay white and
 * the scale darkens logarithmically toward the dataset's maximum reuse.
 */
export function reuseLuminance(reuse: number, maxReuse: number): number {
  if (reuse <= 1 || maxReuse <= 1) return 255;
  const t = Math.log(reuse) / Math.log(maxReuse);
  return Math.round(255 - 205 * Math.min(1, t));
}

/**
 * The type case: every block as a thumbnail card, grouped by character,
 * background luminance encoding reuse, with an inclusive reuse-range
 * filter.
 */
export class CollectionView {
  groups: CollectionGroup[] = [];
  renderCount = 0;

  constructor(
    private readonly api: Api,
    private readonly state: ViewState,
  ) {
    state.subscribe({
      onBlocksChanged: (changed) => void this.applyChanged(changed),
      onSelection: () => this.refreshSelection(),
    });
  }

  async refresh(): Promise<CollectionGroup[]> {
    const [characters, reuse] = await Promise.all([
      this.api.characters(),
      this.api.reuse(),
    ]);
    const maxReuse = Math.max(1, ...reuse.values());
    const { minReuse, maxReuse: filterMax } = this.state.collectionFilter;
    const byCharacter = new Map<string, CollectionGroup>();
    for (const c of characters) {
      byCharacter.set(characterKey(c), { character: c, cells: [] });
    }
    // group blocks under their character via the timeline rows
    for (const c of characters) {
      const t = await this.api.timeline(c);
      const group = byCharacter.get(characterKey(c))!;
      for (const row of t.rows) {
        const count = reuse.get(row.block) ?? 0;
        if (count < minReuse || count > filterMax) continue;
        group.cells.push({
          blockId: row.block,
          reuse: count,
          thumbnailUrl: this.api.blockImageUrl(row.block),
          luminance: reuseLuminance(count, maxReuse),
          selected: this.state.isBlockSelected(row.block),
        });
      }
    }
    this.groups = [...byCharacter.values()].filter((g) => g.cells.length > 0);
    this.renderCount += 1;
    return this.groups;
  }

  setFilter(minReuse: number, maxReuse: number): Promise<CollectionGroup[]> {
    this.state.collectionFilter = { minReuse, maxReuse };
    return this.refresh();
  }

  cell(blockId: number): CollectionCell | null {
    for (const g of this.groups) {
      const hit = g.cells.find((c) => c.blockId === blockId);
      if (hit) return hit;
    }
    return null;
  }

  visibleBlockIds(): number[] {
    return this.groups.flatMap((g) => g.cells.map((c) => c.blockId));
  }

  private async applyChanged(_changed: ChangedBlock[]): Promise<void> {
    // Reuse counts shift for every touched block and the max may move, so
    // the luminance scale is recomputed from the server wholesale.
    await this.refresh();
  }

  private refreshSelection(): void {
    for (const g of this.groups) {
      for (const c of g.cells) {
        c.selected = this.state.isBlockSelected(c.blockId);
      }
    }
    this.renderCount += 1;
  }
}
