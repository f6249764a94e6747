import { Api } from "../api.js";
import { ViewState } from "../state.js";
import { SegmentDoc, SpreadDetail } from "../types.js";

export interface SegmentOverlay {
  segment: SegmentDoc;
  selected: boolean;
}

export interface SourceViewModel {
  spread: SpreadDetail | null;
  pageImageUrl: string | null;
  overlays: SegmentOverlay[];
  /** Page slider bounds; disabled when the dataset has no spreads. */
  sliderMax: number;
  sliderDisabled: boolean;
}

export interface SegmentTooltip {
  id: number;
  bbox: { x: number; y: number; w: number; h: number };
  text: string;
  jibo?: string;
  block: number;
}

/**
 * Page scans with segment overlays. Hover exposes segment metadata,
 * click seeds a selection, and the view is the navigation target for
 * right-clicks originating anywhere else ("open at this segment's spread").
 */
export class SourceView {
  model: SourceViewModel = {
    spread: null,
    pageImageUrl: null,
    overlays: [],
    sliderMax: 0,
    sliderDisabled: true,
  };
  renderCount = 0;

  constructor(
    private readonly api: Api,
    private readonly state: ViewState,
  ) {
    state.subscribe({
      onNavigate: (spread) => void this.show(spread),
      onSelection: () => this.refreshOverlays(),
    });
  }

  async show(spreadId: number): Promise<SourceViewModel> {
    const [spread, all] = await Promise.all([
      this.api.spread(spreadId),
      this.api.spreads(),
    ]);
    this.model = {
      spread,
      pageImageUrl: spread.image === null ? null : this.api.pageImageUrl(spread.id),
      overlays: spread.segments.map((segment) => ({
        segment,
        selected: this.state.isSegmentSelected(segment.id),
      })),
      sliderMax: Math.max(0, all.length - 1),
      sliderDisabled: all.length === 0,
    };
    this.renderCount += 1;
    return this.model;
  }

  private refreshOverlays(): void {
    for (const o of this.model.overlays) {
      o.selected = this.state.isSegmentSelected(o.segment.id);
    }
    this.renderCount += 1;
  }

  tooltip(segmentId: number): SegmentTooltip | null {
    const o = this.model.overlays.find((x) => x.segment.id === segmentId);
    if (!o) return null;
    const s = o.segment;
    const tip: SegmentTooltip = {
      id: s.id,
      bbox: s.bbox,
      text: s.text,
      block: s.block,
    };
    if (s.jibo !== undefined) tip.jibo = s.jibo;
    return tip;
  }

  /** Click: seed a segment selection (expanded server-side). */
  async clickSegment(segmentId: number): Promise<void> {
    await this.state.select({ segments: [segmentId] });
  }
}

/**
 * Right-click contract shared by the other views: jump to the spread
 * holding the given segment. Exposed as a free function so any view can
 * invoke it without owning a SourceView reference.
 */
export async function navigateToSegment(
  api: Api,
  state: ViewState,
  segmentId: number,
): Promise<void> {
  // The segment's spread comes from the server: the UI holds no index.
  const seg = await api.segment(segmentId);
  state.navigateToSpread(seg.spread);
}
