/** Tool panels: plain DOM built per render pass from the store mirror.
 * Panels dispatch store actions and never touch annotation state directly.
 */

import type { RecipeStep, ThresholdRequest } from "./api.js";
import type { Mode, Store } from "./state.js";

export function debounce<A extends unknown[]>(fn: (...args: A) => void, ms: number): (...args: A) => void {
  let timer: ReturnType<typeof setTimeout> | null = null;
  return (...args: A) => {
    if (timer !== null) clearTimeout(timer);
    timer = setTimeout(() => fn(...args), ms);
  };
}

const MODES: Mode[] = ["Binarize", "Recipe", "Labels", "AnnotateOneByOne", "AnnotateRoi", "Review"];

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  if (text) node.textContent = text;
  return node;
}

export class Panels {
  private thresholdDraft: ThresholdRequest;
  private windowError = "";
  private requestBinarize: (req: ThresholdRequest) => void;

  constructor(
    private root: HTMLElement,
    private store: Store,
  ) {
    this.thresholdDraft = { ...store.lastBinarize };
    // live threshold controls re-request after a short pause, not per tick
    this.requestBinarize = debounce((req: ThresholdRequest) => {
      void this.store.binarize(req).catch(() => undefined);
    }, 150);
  }

  render(): void {
    this.root.textContent = "";
    this.renderBanner();
    this.renderTabs();
    const disabled = this.store.finalized || this.store.sessionExpired;
    const body = el("div", { class: "panel-body" });
    if (disabled && this.store.mode !== "Review") {
      body.append(el("p", { class: "hint" }, "Session finalized — download the export from the Review tab."));
    } else {
      switch (this.store.mode) {
        case "Binarize":
          this.renderBinarize(body);
          break;
        case "Recipe":
          this.renderRecipe(body);
          break;
        case "Labels":
          this.renderLabels(body);
          break;
        case "AnnotateOneByOne":
          this.renderOneByOne(body);
          break;
        case "AnnotateRoi":
          this.renderRoi(body);
          break;
        case "Review":
          this.renderReview(body);
          break;
      }
    }
    this.root.append(body);
    this.renderConfirmDialog();
    this.renderNotice();
  }

  private renderBanner(): void {
    if (!this.store.sessionExpired) return;
    const banner = el("div", { class: "banner error" }, "Session expired — upload the page again.");
    this.root.append(banner);
  }

  private renderTabs(): void {
    const tabs = el("div", { class: "tabs" });
    for (const mode of MODES) {
      const b = el("button", { class: this.store.mode === mode ? "tab active" : "tab" }, mode);
      b.addEventListener("click", () => this.store.setMode(mode));
      tabs.append(b);
    }
    this.root.append(tabs);
  }

  private renderBinarize(body: HTMLElement): void {
    const draft = this.thresholdDraft;
    const method = el("select");
    for (const m of ["otsu", "global", "adaptive_mean", "adaptive_gaussian"]) {
      const opt = el("option", { value: m }, m);
      if (m === draft.method) opt.setAttribute("selected", "selected");
      method.append(opt);
    }
    method.addEventListener("change", () => {
      this.thresholdDraft = { method: method.value as ThresholdRequest["method"] };
      if (method.value === "global") this.thresholdDraft.t = 128;
      if (method.value.startsWith("adaptive")) {
        this.thresholdDraft.window = 31;
        this.thresholdDraft.c = 10;
      }
      this.windowError = "";
      this.submitThreshold();
      this.render();
    });
    body.append(labelled("Method", method));

    if (draft.method === "global") {
      const slider = el("input", { type: "range", min: "0", max: "255", value: String(draft.t ?? 128) });
      const value = el("span", { class: "value" }, String(draft.t ?? 128));
      slider.addEventListener("input", () => {
        this.thresholdDraft = { ...draft, t: Number(slider.value) };
        value.textContent = slider.value;
        this.submitThreshold();
      });
      body.append(labelled("Threshold", slider, value));
    }
    if (draft.method.startsWith("adaptive")) {
      const windowInput = el("input", { type: "number", min: "3", step: "2", value: String(draft.window ?? 31) });
      const cInput = el("input", { type: "number", value: String(draft.c ?? 10) });
      windowInput.addEventListener("input", () => {
        const w = Number(windowInput.value);
        if (!Number.isInteger(w) || w < 3 || w % 2 === 0) {
          this.windowError = "Window must be an odd integer of at least 3.";
          this.render();
          return; // invalid input stays local; no request goes out
        }
        this.windowError = "";
        this.thresholdDraft = { ...draft, window: w };
        this.submitThreshold();
        this.render();
      });
      cInput.addEventListener("input", () => {
        this.thresholdDraft = { ...draft, c: Number(cInput.value) };
        this.submitThreshold();
      });
      body.append(labelled("Window", windowInput));
      if (this.windowError) body.append(el("p", { class: "field-error" }, this.windowError));
      body.append(labelled("Offset c", cInput));
    }
    const invert = el("input", { type: "checkbox" });
    if (draft.invert) invert.setAttribute("checked", "checked");
    invert.addEventListener("change", () => {
      this.thresholdDraft = { ...draft, invert: invert.checked };
      this.submitThreshold();
    });
    body.append(labelled("Invert", invert));
    if (this.store.summary?.threshold != null) {
      body.append(el("p", { class: "hint" }, `Effective threshold: ${this.store.summary.threshold}`));
    }
  }

  private submitThreshold(): void {
    this.requestBinarize({ ...this.thresholdDraft });
  }

  private renderRecipe(body: HTMLElement): void {
    const list = el("ol", { class: "recipe" });
    const steps = this.store.draftRecipe;
    steps.forEach((step, i) => {
      const item = el("li", {}, describeStep(step));
      const up = el("button", { class: "mini" }, "↑");
      const down = el("button", { class: "mini" }, "↓");
      const del = el("button", { class: "mini" }, "✕");
      up.addEventListener("click", () => this.reorderStep(i, -1));
      down.addEventListener("click", () => this.reorderStep(i, 1));
      del.addEventListener("click", () => {
        const next = steps.slice();
        next.splice(i, 1);
        void this.store.applyRecipe(next).catch(() => undefined);
      });
      item.append(" ", up, down, del);
      list.append(item);
    });
    body.append(list);

    const opSelect = el("select");
    for (const op of ["close", "open", "erode", "dilate", "smooth", "fill_gaps"]) {
      opSelect.append(el("option", { value: op }, op));
    }
    const a = el("input", { type: "number", value: "9", min: "1" });
    const b = el("input", { type: "number", value: "3", min: "1" });
    const add = el("button", {}, "Add step");
    add.addEventListener("click", () => {
      const step = makeStep(opSelect.value, Number(a.value), Number(b.value));
      void this.store.applyRecipe([...steps, step]).catch(() => undefined);
    });
    body.append(labelled("Op", opSelect), labelled("A", a), labelled("B", b), add);

    const eps = el("input", { type: "number", value: String(this.store.epsilon), min: "0", step: "0.5" });
    const generate = el("button", { class: "primary" }, "Generate units");
    if (steps.length === 0) generate.setAttribute("disabled", "disabled"); // nothing to group with
    generate.addEventListener("click", () => {
      void this.store.generateUnits(Number(eps.value)).catch(() => undefined);
    });
    body.append(el("hr"), labelled("Simplify ε", eps), generate);
    if (this.store.summary) {
      body.append(el("p", { class: "hint" }, `${this.store.summary.units} units, ${this.store.summary.unlabeled} unlabeled`));
    }
  }

  private reorderStep(i: number, delta: number): void {
    const steps = this.store.draftRecipe.slice();
    const j = i + delta;
    if (j < 0 || j >= steps.length) return;
    [steps[i], steps[j]] = [steps[j], steps[i]];
    void this.store.applyRecipe(steps).catch(() => undefined);
  }

  private renderLabels(body: HTMLElement): void {
    const list = el("ul", { class: "labels" });
    for (const lab of this.store.labels) {
      const item = el("li", { class: this.store.selectedLabel === lab.index ? "selected" : "" });
      const swatch = el("span", { class: "swatch" });
      swatch.style.background = lab.color; // the exact service-reported color
      const pick = el("button", {}, `${lab.index}: ${lab.name}`);
      pick.addEventListener("click", () => this.store.selectLabel(lab.index));
      const del = el("button", { class: "mini" }, "✕");
      del.addEventListener("click", () => void this.store.deleteLabel(lab.index).catch(() => undefined));
      item.append(swatch, pick, del);
      list.append(item);
    }
    body.append(list);
    const name = el("input", { type: "text", placeholder: "label name" });
    const color = el("input", { type: "text", placeholder: "#RRGGBB (optional)" });
    const add = el("button", {}, "Add label");
    add.addEventListener("click", () => {
      if (!name.value.trim()) return;
      void this.store.addLabel(name.value.trim(), color.value.trim() || undefined).catch(() => undefined);
    });
    body.append(labelled("Name", name), labelled("Color", color), add);
  }

  private renderOneByOne(body: HTMLElement): void {
    if (this.store.labels.length === 0) {
      body.append(el("p", { class: "hint" }, "Define at least one label before annotating."));
      return;
    }
    const focused = this.store.focused;
    if (focused == null) {
      body.append(el("p", { class: "hint" }, "No unlabeled units left in this queue."));
      return;
    }
    body.append(el("p", {}, `Unit ${focused}`));
    const crop = el("img", {
      class: "crop",
      src: `${this.store.client.cropUrl(this.store.sid, focused)}?t=${Date.now()}`,
      alt: `unit ${focused}`,
    });
    body.append(crop);
    const buttons = el("div", { class: "label-buttons" });
    for (const lab of this.store.labels) {
      const b = el("button", {}, lab.name);
      b.style.borderColor = lab.color;
      b.addEventListener("click", () => void this.store.assignFocused(lab.index).catch(() => undefined));
      buttons.append(b);
    }
    const skip = el("button", { class: "mini" }, "Skip");
    skip.addEventListener("click", () => this.store.skipFocused());
    buttons.append(skip);
    body.append(buttons);
  }

  private renderRoi(body: HTMLElement): void {
    body.append(el("p", { class: "hint" }, "Drag a rectangle on the page; Escape cancels."));
    const candidates = this.store.roiCandidates;
    if (!candidates) return;
    const dialog = el("div", { class: "dialog" });
    dialog.append(el("p", {}, `${candidates.length} unit(s) fully inside the rectangle.`));
    const needsLabel = this.store.selectedLabel == null;
    if (needsLabel) dialog.append(el("p", { class: "hint" }, "Select a label to enable the fill actions."));
    const fillAll = el("button", {}, "Fill all");
    const fillUnlabeled = el("button", {}, "Fill unlabeled");
    const perUnit = el("button", {}, "One by one");
    const cancel = el("button", { class: "mini" }, "Cancel");
    if (needsLabel) {
      fillAll.setAttribute("disabled", "disabled");
      fillUnlabeled.setAttribute("disabled", "disabled");
    }
    fillAll.addEventListener("click", () =>
      void this.store.applyRoi("fill_all", this.store.selectedLabel).catch(() => undefined),
    );
    fillUnlabeled.addEventListener("click", () =>
      void this.store.applyRoi("fill_unlabeled", this.store.selectedLabel).catch(() => undefined),
    );
    perUnit.addEventListener("click", () => void this.store.applyRoi("per_unit", null));
    cancel.addEventListener("click", () => this.store.cancelRoi());
    dialog.append(fillAll, fillUnlabeled, perUnit, cancel);
    body.append(dialog);
  }

  private renderReview(body: HTMLElement): void {
    const summary = this.store.summary;
    if (!summary) return;
    body.append(el("p", {}, `${summary.units} units, ${summary.unlabeled} unlabeled.`));
    if (this.store.offenders.length > 0) {
      body.append(
        el("p", { class: "field-error flash" }, `Unlabeled units: ${this.store.offenders.join(", ")}`),
      );
    }
    if (this.store.finalized) {
      body.append(el("p", { class: "hint" }, "Finalized — annotation controls are locked."));
      const link = el("a", { href: this.store.client.exportUrl(this.store.sid), download: "export.zip" }, "Download export.zip");
      link.className = "primary button";
      body.append(link);
      return;
    }
    const finalize = el("button", { class: "primary" }, "Finalize");
    finalize.addEventListener("click", () => void this.store.finalize().catch(() => undefined));
    body.append(finalize);
  }

  private renderConfirmDialog(): void {
    const pending = this.store.pendingConfirm;
    if (!pending) return;
    const overlay = el("div", { class: "modal" });
    const box = el("div", { class: "dialog" });
    box.append(el("p", {}, pending.message));
    box.append(el("p", { class: "hint" }, `${pending.labeledUnits.length} labeled unit(s) would lose their labels.`));
    const go = el("button", { class: "danger" }, "Discard labels and continue");
    const keep = el("button", {}, "Keep labels");
    go.addEventListener("click", () => void this.store.confirmPending().catch(() => undefined));
    keep.addEventListener("click", () => this.store.dismissConfirm());
    box.append(go, keep);
    overlay.append(box);
    this.root.append(overlay);
  }

  private renderNotice(): void {
    const notice = this.store.notice;
    if (!notice) return;
    const node = el("div", { class: `toast ${notice.kind}` }, notice.text);
    node.addEventListener("click", () => this.store.setNotice(null));
    this.root.append(node);
  }
}

function labelled(text: string, ...controls: (HTMLElement | Text)[]): HTMLElement {
  const row = el("label", { class: "row" });
  row.append(el("span", { class: "caption" }, text), ...controls);
  return row;
}

function describeStep(step: RecipeStep): string {
  if (step.op === "smooth") return `smooth run_h=${step.run_h} run_v=${step.run_v}${step.combined ? " combined" : ""}`;
  if (step.op === "fill_gaps") return `fill_gaps gap_h=${step.gap_h} gap_v=${step.gap_v}`;
  return `${step.op} ${step.shape} ${step.width}x${step.height}`;
}

function makeStep(op: string, a: number, b: number): RecipeStep {
  if (op === "smooth") return { op: "smooth", run_h: a, run_v: b, combined: false };
  if (op === "fill_gaps") return { op: "fill_gaps", gap_h: a, gap_v: b };
  return { op: op as "erode" | "dilate" | "open" | "close", shape: "rect", width: a, height: b };
}
