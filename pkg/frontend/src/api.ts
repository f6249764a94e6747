import {
  ApiResult,
  BlockDoc,
  CharacterInfo,
  CharacterRef,
  DuplicateHit,
  EditRequest,
  EditResponse,
  SegmentDoc,
  SelectionDoc,
  SpreadDetail,
  SpreadInfo,
  Summary,
  Timeline,
} from "./types.js";

/**
 * The engine's HTTP surface as consumed by the views. Everything the UI
 * knows about the dataset flows through this interface; nothing is held
 * authoritatively on the client.
 */
export interface Api {
  summary(): Promise<Summary>;
  spreads(): Promise<SpreadInfo[]>;
  spread(id: number): Promise<SpreadDetail>;
  segment(id: number): Promise<SegmentDoc>;
  block(id: number): Promise<BlockDoc>;
  characters(): Promise<CharacterInfo[]>;
  timeline(key: CharacterRef): Promise<Timeline>;
  expandSelection(seed: Partial<SelectionDoc>): Promise<SelectionDoc>;
  reuse(): Promise<Map<number, number>>;
  duplicates(): Promise<DuplicateHit[]>;
  rhythm(spread: number): Promise<Map<number, number[]>>;
  postEdit(
    edit: EditRequest,
    expectedRevision: number,
  ): Promise<ApiResult<EditResponse>>;
  postUndo(expectedRevision: number): Promise<ApiResult<EditResponse>>;
  blockImageUrl(blockId: number): string;
  segmentImageUrl(segmentId: number, binarize?: boolean): string;
  pageImageUrl(spreadId: number): string;
}

function characterParams(key: CharacterRef): URLSearchParams {
  const p = new URLSearchParams({ text: key.text });
  if (key.jibo !== undefined) p.set("jibo", key.jibo);
  return p;
}

/** fetch-backed client for a live server. */
export class HttpApi implements Api {
  constructor(private readonly base: string = "") {}

  private async getJson<T>(path: string): Promise<T> {
    const r = await fetch(this.base + path);
    if (!r.ok) throw new Error(`GET ${path}: ${r.status}`);
    return (await r.json()) as T;
  }

  private async post<T>(path: string, body: unknown): Promise<ApiResult<T>> {
    const r = await fetch(this.base + path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    const payload = await r.json();
    if (r.ok) return { ok: true, value: payload as T };
    return { ok: false, status: r.status, error: payload };
  }

  summary(): Promise<Summary> {
    return this.getJson("/api/summary");
  }

  async spreads(): Promise<SpreadInfo[]> {
    const body = await this.getJson<{ spreads: SpreadInfo[] }>("/api/spreads");
    return body.spreads;
  }

  spread(id: number): Promise<SpreadDetail> {
    return this.getJson(`/api/spreads/${id}`);
  }

  segment(id: number): Promise<SegmentDoc> {
    return this.getJson(`/api/segments/${id}`);
  }

  block(id: number): Promise<BlockDoc> {
    return this.getJson(`/api/blocks/${id}`);
  }

  async characters(): Promise<CharacterInfo[]> {
    const body = await this.getJson<{ characters: CharacterInfo[] }>(
      "/api/characters",
    );
    return body.characters;
  }

  timeline(key: CharacterRef): Promise<Timeline> {
    return this.getJson(`/api/characters/timeline?${characterParams(key)}`);
  }

  async expandSelection(seed: Partial<SelectionDoc>): Promise<SelectionDoc> {
    const res = await this.post<SelectionDoc>("/api/selection/expand", seed);
    if (!res.ok) throw new Error(`expand failed: ${res.error.code}`);
    return res.value;
  }

  async reuse(): Promise<Map<number, number>> {
    const body = await this.getJson<{ counts: Record<string, number> }>(
      "/api/analytics/reuse",
    );
    return new Map(
      Object.entries(body.counts).map(([k, v]) => [Number(k), v]),
    );
  }

  async duplicates(): Promise<DuplicateHit[]> {
    const body = await this.getJson<{ duplicates: DuplicateHit[] }>(
      "/api/analytics/duplicates",
    );
    return body.duplicates;
  }

  async rhythm(spread: number): Promise<Map<number, number[]>> {
    const body = await this.getJson<{ lines: Record<string, number[]> }>(
      `/api/analytics/rhythm?spread=${spread}`,
    );
    return new Map(
      Object.entries(body.lines).map(([k, v]) => [Number(k), v]),
    );
  }

  postEdit(
    edit: EditRequest,
    expectedRevision: number,
  ): Promise<ApiResult<EditResponse>> {
    return this.post("/api/edits", {
      ...edit,
      expected_revision: expectedRevision,
    });
  }

  postUndo(expectedRevision: number): Promise<ApiResult<EditResponse>> {
    return this.post("/api/edits/undo", {
      expected_revision: expectedRevision,
    });
  }

  blockImageUrl(blockId: number): string {
    return `${this.base}/api/images/block/${blockId}`;
  }

  segmentImageUrl(segmentId: number, binarize = false): string {
    return `${this.base}/api/images/segment/${segmentId}?binarize=${binarize}`;
  }

  pageImageUrl(spreadId: number): string {
    return `${this.base}/api/images/page/${spreadId}`;
  }
}
