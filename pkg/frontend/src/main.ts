import { ApiClient } from "./api.js";
import { RunController } from "./controller.js";
import { ViewState } from "./state.js";
import type { RunConfigDoc } from "./types.js";

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing #${id}`);
  return el as T;
};

const api = new ApiClient("");
let view: ViewState | null = null;
let runner: RunController | null = null;
let slicePng: HTMLImageElement | null = null;
let overlayPng: HTMLImageElement | null = null;

const canvas = $("slice-canvas") as unknown as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const slider = $("slice-slider") as unknown as HTMLInputElement;
const banner = $("banner");

function notify(message: string, isError = true): void {
  banner.textContent = message;
  banner.className = isError ? "banner error" : "banner info";
  banner.style.display = message ? "block" : "none";
}

function config(): RunConfigDoc {
  return {
    k: Number(($("cfg-k") as unknown as HTMLSelectElement).value),
    stride_voxels: Number(($("cfg-stride") as unknown as HTMLInputElement).value),
    backend: ($("cfg-backend") as unknown as HTMLInputElement).value,
    seed: Number(($("cfg-seed") as unknown as HTMLInputElement).value),
  };
}

function redraw(): void {
  if (!view || !view.frame) return;
  const f = view.frame;
  canvas.width = f.width;
  canvas.height = f.height;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  if (slicePng) ctx.drawImage(slicePng, 0, 0);
  if (overlayPng && runner?.overlayAvailable) {
    ctx.globalAlpha = 0.5; // overlay review opacity
    ctx.drawImage(overlayPng, 0, 0);
    ctx.globalAlpha = 1.0;
  }
  // committed vertices on this slice
  for (const v of view.visibleVertices()) {
    const positive = view.polylines[v.polyIndex].label === "positive";
    ctx.fillStyle = positive ? "#34d058" : "#f66";
    ctx.beginPath();
    ctx.arc(v.x, v.y, 2.5, 0, 2 * Math.PI);
    ctx.fill();
  }
  // in-progress stroke
  if (view.inProgress.length > 0) {
    ctx.strokeStyle = view.drawMode === "negative" ? "#f66" : "#34d058";
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    ctx.moveTo(view.inProgress[0].x, view.inProgress[0].y);
    for (const p of view.inProgress.slice(1)) ctx.lineTo(p.x, p.y);
    ctx.stroke();
  }
  ($("commit-btn") as unknown as HTMLButtonElement).disabled = !view.canCommit;
}

async function loadImage(url: string): Promise<HTMLImageElement> {
  const img = new Image();
  await new Promise<void>((resolve, reject) => {
    img.onload = () => resolve();
    img.onerror = () => reject(new Error(`cannot load ${url}`));
    img.src = url;
  });
  return img;
}

async function showSlice(index: number): Promise<void> {
  if (!view) return;
  const k = config().k ?? 3;
  const { meta } = await api.fetchSlice(view.sessionId, view.axisId, index, k, 1);
  view.setFrame(meta, view.axisId, index);
  slicePng = await loadImage(api.sliceUrl(view.sessionId, view.axisId, index, k, 1));
  overlayPng = runner?.overlayAvailable
    ? await loadImage(api.maskSliceUrl(view.sessionId, view.axisId, index) + `&_=${Date.now()}`)
    : null;
  slider.max = String((meta.frame_count ?? 1) - 1);
  slider.value = String(index);
  $("slice-label").textContent = `axis ${view.axisId}, slice ${index}`;
  redraw();
}

async function boot(): Promise<void> {
  $("volume-input").addEventListener("change", async (ev) => {
    const input = ev.target as HTMLInputElement;
    const file = input.files?.[0];
    if (!file) return;
    try {
      const info = await api.uploadVolume(await file.arrayBuffer());
      view = new ViewState(info.id, api);
      runner = new RunController(api, info.id);
      runner.onChange((v) => {
        ($("progress") as unknown as HTMLProgressElement).value = v.progress;
        ($("run-btn") as unknown as HTMLButtonElement).disabled = !runner!.canRun;
        if (v.notice) notify(v.notice.message);
        if (v.phase === "done") {
          notify("segmentation complete", false);
          const sid = view!.sessionId;
          ($("mask-link") as unknown as HTMLAnchorElement).href = api.maskUrl(sid);
          ($("mesh-link") as unknown as HTMLAnchorElement).href = api.meshUrl(sid);
          $("downloads").style.display = "block";
          void showSlice(view!.index);
        }
      });
      notify(`loaded ${info.dims.join("x")} volume`, false);
      await showSlice(0);
    } catch (err) {
      notify(err instanceof Error ? err.message : String(err));
    }
  });

  canvas.addEventListener("click", async (ev) => {
    if (!view) return;
    const rect = canvas.getBoundingClientRect();
    const x = ((ev.clientX - rect.left) / rect.width) * canvas.width;
    const y = ((ev.clientY - rect.top) / rect.height) * canvas.height;
    if (view.drawMode === "erase") {
      if (await view.eraseAt({ x, y })) redraw();
    } else {
      view.addPoint({ x, y });
      redraw();
    }
  });

  $("commit-btn").addEventListener("click", async () => {
    if (!view) return;
    try {
      await view.commitPolyline();
      redraw();
    } catch (err) {
      notify(err instanceof Error ? err.message : String(err));
    }
  });

  for (const mode of ["positive", "negative", "erase"] as const) {
    $(`mode-${mode}`).addEventListener("click", () => {
      if (!view) return;
      view.drawMode = mode;
      view.inProgress = [];
      document.querySelectorAll(".mode-btn").forEach((b) => b.classList.remove("active"));
      $(`mode-${mode}`).classList.add("active");
      redraw();
    });
  }

  slider.addEventListener("input", () => void showSlice(Number(slider.value)));
  $("axis-next").addEventListener("click", () => {
    if (!view) return;
    view.axisId = (view.axisId + 1) % (config().k ?? 3);
    void showSlice(0);
  });

  for (const id of ["cfg-k", "cfg-stride", "cfg-backend", "cfg-seed"]) {
    $(id).addEventListener("change", () => runner?.configChanged());
  }

  $("run-btn").addEventListener("click", async () => {
    if (!view || !runner) return;
    if (!view.hasPositive) {
      notify("draw at least one positive polyline first");
      return;
    }
    await runner.run(config());
  });
}

boot().catch((err) => notify(String(err)));
