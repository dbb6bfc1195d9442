/** Entry point: upload a page, open the session, wire the canvas and panels.
 * The API origin defaults to same-origin and can be overridden with ?api=.
 */

import { ApiError, Client } from "./api.js";
import { PageCanvas } from "./canvas.js";
import { Panels } from "./panels.js";
import { openSession } from "./state.js";

function apiBase(): string {
  const params = new URLSearchParams(window.location.search);
  return params.get("api") ?? "";
}

async function boot(): Promise<void> {
  const client = new Client(apiBase());
  const uploadBox = document.getElementById("upload") as HTMLElement;
  const appBox = document.getElementById("app") as HTMLElement;
  const fileInput = document.getElementById("file") as HTMLInputElement;
  const uploadError = document.getElementById("upload-error") as HTMLElement;

  const params = new URLSearchParams(window.location.search);
  const existing = params.get("session");
  if (existing) {
    await start(existing, null);
    return;
  }

  fileInput.addEventListener("change", async () => {
    const file = fileInput.files?.[0];
    if (!file) return;
    try {
      const created = await client.createSession(file, file.name);
      const url = new URL(window.location.href);
      url.searchParams.set("session", created.id);
      history.replaceState(null, "", url); // reload resumes the same session
      await start(created.id, URL.createObjectURL(file));
    } catch (err) {
      uploadError.textContent = err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
    }
  });

  async function start(sid: string, pageUrl: string | null): Promise<void> {
    const store = await openSession(client, sid);
    uploadBox.hidden = true;
    appBox.hidden = false;
    const canvasEl = document.getElementById("page") as HTMLCanvasElement;
    const panelRoot = document.getElementById("panels") as HTMLElement;
    const pageCanvas = new PageCanvas(canvasEl, store, (rect) => {
      void store.selectRoi(rect).catch(() => undefined);
    });
    const panels = new Panels(panelRoot, store);

    const baseUrlFor = (): string => {
      const layer = store.baseLayer();
      if (layer === "mask") return store.client.maskUrl(sid);
      if (layer === "grouped") return store.client.groupedUrl(sid);
      // no raw-page endpoint exists; use the local upload, else the preview
      return pageUrl ?? (store.summary && store.summary.units > 0 ? store.client.previewUrl(sid) : "");
    };

    const rerender = (): void => {
      pageCanvas.setBaseUrl(baseUrlFor());
      pageCanvas.redraw();
      panels.render();
    };
    store.subscribe(rerender);
    rerender();
  }
}

void boot();
