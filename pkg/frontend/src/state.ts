/** UI session store.
 *
 * Holds a mirror of the service-side session (summary + unit list) plus the
 * purely client-side bits: active tool mode, selected label, pending ROI
 * rectangle, the one-by-one queue. The invariant throughout: the store never
 * computes annotation state locally — every mutation is POSTed and the
 * mirror is rebuilt from service responses, so a page reload that refetches
 * the same session renders the identical preview.
 *
 * Mutations are serialized: at most one is in flight, later ones queue.
 */

import {
  ApiError,
  Client,
  type LabelInfo,
  type Rect,
  type RecipeStep,
  type RoiMode,
  type RoiResponse,
  type SessionSummary,
  type ThresholdRequest,
  type UnitInfo,
} from "./api.js";
import { renderOverlay, type Raster } from "./raster.js";

export type Mode = "Binarize" | "Recipe" | "Labels" | "AnnotateOneByOne" | "AnnotateRoi" | "Review";

export interface Notice {
  kind: "info" | "error";
  text: string;
}

export interface PendingConfirm {
  action: "binarize" | "recipe" | "units";
  message: string;
  labeledUnits: number[];
  retry: () => Promise<void>;
}

export class Store {
  summary: SessionSummary | null = null;
  units: UnitInfo[] = [];
  mode: Mode = "Binarize";
  selectedLabel: number | null = null;
  /** live ROI rectangle while dragging, in image coordinates */
  pendingRect: Rect | null = null;
  /** ids returned by the last ROI response, awaiting a mode choice */
  roiCandidates: number[] | null = null;
  /** remaining queue for the one-by-one prompt (null = all unlabeled) */
  queue: number[] | null = null;
  focused: number | null = null;
  /** unlabeled ids reported by a rejected finalize, for highlighting */
  offenders: number[] = [];
  notice: Notice | null = null;
  sessionExpired = false;
  pendingConfirm: PendingConfirm | null = null;
  lastBinarize: ThresholdRequest = { method: "otsu" };
  draftRecipe: RecipeStep[] = [];
  epsilon = 1.0;

  private listeners = new Set<() => void>();
  private chain: Promise<unknown> = Promise.resolve();

  constructor(
    public client: Client,
    public sid: string,
  ) {}

  subscribe(fn: () => void): () => void {
    this.listeners.add(fn);
    return () => this.listeners.delete(fn);
  }

  private emit(): void {
    for (const fn of this.listeners) fn();
  }

  /** Serialize mutations: one request in flight, the rest wait their turn. */
  private enqueue<T>(fn: () => Promise<T>): Promise<T> {
    const next = this.chain.then(fn, fn);
    this.chain = next.catch(() => undefined);
    return next;
  }

  private fail(err: unknown): never {
    if (err instanceof ApiError) {
      if (err.status === 404) {
        this.sessionExpired = true;
        this.notice = { kind: "error", text: "Session expired — upload the page again." };
      } else {
        this.notice = { kind: "error", text: err.message };
      }
      this.emit();
    }
    throw err;
  }

  /** Rebuild the mirror from the service. Called after every mutation and
   * on page load; nothing else writes summary/units.
   */
  async refresh(): Promise<void> {
    try {
      this.summary = await this.client.summary(this.sid);
      this.units = this.summary.units > 0 ? await this.client.listUnits(this.sid) : [];
      if (this.summary.recipe) this.draftRecipe = this.summary.recipe;
      if (this.summary.epsilon != null) this.epsilon = this.summary.epsilon;
      if (this.selectedLabel != null && !this.summary.labels.some((l) => l.index === this.selectedLabel)) {
        this.selectedLabel = null;
      }
      this.emit();
    } catch (err) {
      this.fail(err);
    }
  }

  setMode(mode: Mode): void {
    this.mode = mode;
    this.pendingRect = null;
    this.roiCandidates = null;
    if (mode !== "AnnotateOneByOne") {
      this.queue = null;
      this.focused = null;
    }
    if (mode === "AnnotateOneByOne") this.advanceFocus();
    this.emit();
  }

  setNotice(notice: Notice | null): void {
    this.notice = notice;
    this.emit();
  }

  selectLabel(index: number): void {
    this.selectedLabel = index;
    this.emit();
  }

  labelColor(index: number): string | null {
    const lab = this.summary?.labels.find((l) => l.index === index) ?? null;
    return lab ? lab.color : null;
  }

  private confirmable(
    action: PendingConfirm["action"],
    run: (confirm: boolean) => Promise<void>,
  ): Promise<void> {
    return this.enqueue(async () => {
      try {
        await run(false);
        this.pendingConfirm = null;
      } catch (err) {
        if (err instanceof ApiError && err.code === "ConfirmationRequired") {
          this.pendingConfirm = {
            action,
            message: err.message,
            labeledUnits: Array.isArray(err.details) ? (err.details as number[]) : [],
            retry: () => this.enqueue(() => run(true).then(() => this.refresh())),
          };
          this.emit();
          return;
        }
        this.fail(err);
      }
      await this.refresh();
    });
  }

  binarize(req: ThresholdRequest): Promise<void> {
    this.lastBinarize = req;
    return this.confirmable("binarize", async (confirm) => {
      await this.client.binarize(this.sid, { ...req, confirm });
    });
  }

  applyRecipe(steps: RecipeStep[]): Promise<void> {
    this.draftRecipe = steps;
    return this.confirmable("recipe", async (confirm) => {
      await this.client.setRecipe(this.sid, steps, confirm);
    });
  }

  generateUnits(epsilon: number): Promise<void> {
    this.epsilon = epsilon;
    return this.confirmable("units", async (confirm) => {
      await this.client.generateUnits(this.sid, epsilon, confirm);
    });
  }

  dismissConfirm(): void {
    this.pendingConfirm = null;
    this.emit();
  }

  async confirmPending(): Promise<void> {
    const pending = this.pendingConfirm;
    if (!pending) return;
    this.pendingConfirm = null;
    await pending.retry();
  }

  addLabel(name: string, color?: string): Promise<void> {
    return this.enqueue(async () => {
      try {
        const lab = await this.client.addLabel(this.sid, name, color);
        this.selectedLabel = lab.index;
      } catch (err) {
        this.fail(err);
      }
      await this.refresh();
    });
  }

  deleteLabel(index: number): Promise<void> {
    return this.enqueue(async () => {
      try {
        await this.client.deleteLabel(this.sid, index);
      } catch (err) {
        this.fail(err);
      }
      await this.refresh();
    });
  }

  assign(unit: number, label: number): Promise<void> {
    return this.enqueue(async () => {
      try {
        await this.client.assign(this.sid, unit, label);
      } catch (err) {
        this.fail(err);
      }
      await this.refresh();
    });
  }

  /** Assign from the one-by-one prompt, then advance to the next candidate. */
  async assignFocused(label: number): Promise<void> {
    if (this.focused == null) return;
    await this.assign(this.focused, label);
    if (this.queue) this.queue = this.queue.filter((id) => id !== this.focused);
    this.advanceFocus();
    this.emit();
  }

  skipFocused(): void {
    if (this.focused == null) return;
    if (this.queue) {
      const i = this.queue.indexOf(this.focused);
      if (i >= 0) this.queue.push(this.queue.splice(i, 1)[0]);
    }
    this.advanceFocus(this.focused);
    this.emit();
  }

  /** Pick the next unlabeled unit (restricted to the queue when set). */
  private advanceFocus(after: number | null = null): void {
    const unlabeled = this.units.filter((u) => u.label == null).map((u) => u.id);
    const pool = this.queue ? this.queue.filter((id) => unlabeled.includes(id)) : unlabeled;
    if (this.queue) this.queue = pool;
    if (pool.length === 0) {
      this.focused = null;
      return;
    }
    if (after != null) {
      const i = pool.indexOf(after);
      this.focused = pool[(i + 1) % pool.length];
      if (this.focused === after && pool.length > 1) this.focused = pool[(i + 2) % pool.length];
    } else {
      this.focused = pool[0];
    }
  }

  setPendingRect(rect: Rect | null): void {
    this.pendingRect = rect;
    this.emit();
  }

  cancelRoi(): void {
    this.pendingRect = null;
    this.roiCandidates = null;
    this.emit();
  }

  /** Query which units the dragged rectangle fully contains; the response
   * drives the three-way dialog. A per_unit probe never mutates anything.
   */
  selectRoi(rect: Rect): Promise<RoiResponse> {
    return this.enqueue(async () => {
      let res: RoiResponse;
      try {
        res = await this.client.roi(this.sid, rect, "per_unit", null);
      } catch (err) {
        this.fail(err);
      }
      this.pendingRect = rect;
      if (res.code === "EmptyRoi" || res.affected.length === 0) {
        this.roiCandidates = null;
        this.pendingRect = null;
        this.notice = { kind: "info", text: "No units fall entirely inside that rectangle." };
        this.emit();
        return res;
      }
      this.roiCandidates = res.affected;
      this.emit();
      return res;
    });
  }

  /** Resolve the ROI dialog. fill_all / fill_unlabeled mutate on the service;
   * per_unit switches to the one-by-one prompt restricted to the candidates.
   */
  applyRoi(mode: RoiMode, label: number | null): Promise<void> {
    const rect = this.pendingRect;
    const candidates = this.roiCandidates ?? [];
    this.pendingRect = null;
    this.roiCandidates = null;
    if (mode === "per_unit") {
      this.queue = [...candidates];
      this.mode = "AnnotateOneByOne";
      this.advanceFocus();
      this.emit();
      return Promise.resolve();
    }
    if (!rect) return Promise.resolve();
    return this.enqueue(async () => {
      try {
        const res = await this.client.roi(this.sid, rect, mode, label);
        if (res.code === "EmptyRoi") {
          this.notice = { kind: "info", text: "No units fall entirely inside that rectangle." };
        }
      } catch (err) {
        this.fail(err);
      }
      await this.refresh();
    });
  }

  finalize(): Promise<boolean> {
    return this.enqueue(async () => {
      try {
        await this.client.finalize(this.sid);
        this.offenders = [];
      } catch (err) {
        if (err instanceof ApiError && err.code === "UnlabeledUnitsRemain") {
          this.offenders = Array.isArray(err.details) ? (err.details as number[]) : [];
          this.notice = { kind: "error", text: err.message };
          this.emit();
          await this.refresh();
          return false;
        }
        this.fail(err);
      }
      await this.refresh();
      return true;
    });
  }

  get finalized(): boolean {
    return this.summary?.phase === "Finalized";
  }

  get labels(): LabelInfo[] {
    return this.summary?.labels ?? [];
  }

  /** Which raster layer sits under the overlay in the current mode. */
  baseLayer(): "page" | "mask" | "grouped" {
    if (this.mode === "Binarize") return this.summary?.threshold != null ? "mask" : "page";
    if (this.mode === "Recipe") return this.summary?.recipe ? "grouped" : "mask";
    return "page";
  }

  /** The exact overlay pixels for the current state — pure function of the
   * mirror plus view selection, so tests can byte-compare reload behavior.
   */
  renderPreview(): Raster {
    const width = this.summary?.width ?? 0;
    const height = this.summary?.height ?? 0;
    const highlighted = new Set<number>(this.roiCandidates ?? this.offenders);
    return renderOverlay({
      width,
      height,
      units: this.units,
      labels: this.labels,
      highlighted,
      focused: this.mode === "AnnotateOneByOne" ? this.focused : null,
    });
  }
}

export async function openSession(client: Client, sid: string): Promise<Store> {
  const store = new Store(client, sid);
  await store.refresh();
  return store;
}
