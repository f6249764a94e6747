import { Api } from "./api.js";
import { ViewState } from "./state.js";
import { ApiResult, EditRequest, EditResponse } from "./types.js";

/**
 * The single mutation path. Every edit from any view funnels through
 * applyEdit, which attaches the current revision token, performs exactly
 * one POST, and on success broadcasts the changed block ids so views can
 * re-render precisely. Optimistic updates are forbidden: nothing changes
 * client-side until the server acknowledges.
 */
export class Workbench {
  constructor(
    readonly api: Api,
    readonly state: ViewState,
  ) {}

  async init(): Promise<void> {
    const s = await this.api.summary();
    this.state.clearConflict(s.revision);
  }

  async applyEdit(edit: EditRequest): Promise<ApiResult<EditResponse>> {
    const res = await this.api.postEdit(edit, this.state.revision);
    this.finish(res);
    return res;
  }

  async undo(): Promise<ApiResult<EditResponse>> {
    const res = await this.api.postUndo(this.state.revision);
    this.finish(res);
    return res;
  }

  private finish(res: ApiResult<EditResponse>): void {
    if (res.ok) {
      this.state.acknowledgeEdit(
        res.value.changed_block_ids,
        res.value.revision,
      );
    } else if (res.status === 412) {
      // someone else edited; prompt for a reload, never retry silently
      this.state.flagConflict();
    }
  }
}
