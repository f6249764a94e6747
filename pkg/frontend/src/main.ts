import { HttpApi } from "./api.js";
import { ViewState } from "./state.js";
import { Workbench } from "./workbench.js";
import { AnalyticalView } from "./views/analytical.js";
import { CollectionView } from "./views/collection.js";
import { Overview } from "./views/overview.js";
import { SourceView, navigateToSegment } from "./views/source.js";

/**
 * Browser bootstrap: builds the four views against the live /api and wires
 * the minimal DOM shell. All behavior lives in the view classes; this file
 * only paints their models.
 */
export async function mount(root: HTMLElement): Promise<void> {
  const api = new HttpApi("");
  const state = new ViewState(api);
  const workbench = new Workbench(api, state);
  await workbench.init();

  const source = new SourceView(api, state);
  const overview = new Overview(api, state);
  const analytical = new AnalyticalView(workbench, state);
  const collection = new CollectionView(api, state);

  root.innerHTML = `
    <div class="banner" id="conflict" hidden>
      Dataset changed on the server — <button id="reload">reload</button>
    </div>
    <section id="source"><input type="range" id="page-slider" /></section>
    <section id="overview"><canvas id="overview-canvas" width="960" height="640"></canvas></section>
    <section id="analytical"></section>
    <section id="collection"></section>`;

  const banner = root.querySelector<HTMLElement>("#conflict")!;
  state.subscribe({
    onConflict: () => {
      banner.hidden = false;
    },
  });
  banner.querySelector("#reload")!.addEventListener("click", () => {
    location.reload();
  });

  const canvas = root.querySelector<HTMLCanvasElement>("#overview-canvas")!;
  const paint = () => {
    const ctx = canvas.getContext("2d")!;
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    for (const r of overview.model.rects) {
      ctx.fillStyle = r.color;
      ctx.fillRect(r.x, r.y, r.w, r.h);
    }
  };
  state.subscribe({
    onSelection: paint,
    onBlocksChanged: paint,
  });

  const slider = root.querySelector<HTMLInputElement>("#page-slider")!;
  const spreads = await api.spreads();
  slider.disabled = spreads.length === 0;
  slider.min = "0";
  slider.max = String(Math.max(0, spreads.length - 1));
  slider.addEventListener("input", () => {
    void source.show(Number(slider.value));
  });

  canvas.addEventListener("contextmenu", (ev) => {
    ev.preventDefault();
    const rect = canvas.getBoundingClientRect();
    const hit = overview.model.rects.find(
      (r) =>
        ev.clientX - rect.left >= r.x &&
        ev.clientX - rect.left < r.x + r.w &&
        ev.clientY - rect.top >= r.y &&
        ev.clientY - rect.top < r.y + r.h,
    );
    if (hit) void navigateToSegment(api, state, hit.segmentId);
  });

  await overview.refresh();
  await collection.refresh();
  if (spreads.length > 0) await source.show(0);
  paint();

  // expose for devtools poking
  (window as unknown as Record<string, unknown>).workbench = {
    api,
    state,
    workbench,
    source,
    overview,
    analytical,
    collection,
  };
}

if (typeof document !== "undefined") {
  const root = document.getElementById("app");
  if (root) void mount(root);
}
