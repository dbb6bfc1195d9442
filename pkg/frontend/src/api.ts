/** Typed client for the annotation service HTTP API.
 *
 * Every mutation round-trips through the service; the UI re-renders from
 * responses and GETs, never from locally predicted state.
 */

export type Rect = [number, number, number, number];
export type RoiMode = "fill_all" | "fill_unlabeled" | "per_unit";

export interface LabelInfo {
  index: number;
  name: string;
  color: string; // "#RRGGBB"
}

export interface UnitInfo {
  id: number;
  polygon: { points: [number, number][] };
  bbox: Rect;
  area: number;
  label?: number | null;
}

export interface SessionSummary {
  id: string;
  phase: string;
  width: number;
  height: number;
  threshold: number | null;
  epsilon: number | null;
  labels: LabelInfo[];
  units: number;
  unlabeled: number;
  recipe: RecipeStep[] | null;
}

export interface ThresholdRequest {
  method: "otsu" | "global" | "adaptive_mean" | "adaptive_gaussian";
  t?: number;
  window?: number;
  c?: number;
  invert?: boolean;
  confirm?: boolean;
}

export type RecipeStep =
  | { op: "erode" | "dilate" | "open" | "close"; shape: string; width: number; height: number }
  | { op: "smooth"; run_h: number; run_v: number; combined: boolean }
  | { op: "fill_gaps"; gap_h: number; gap_v: number };

export interface RoiResponse {
  affected: number[];
  code?: string; // "EmptyRoi" when nothing was contained
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
    public details: unknown = null,
  ) {
    super(message);
  }
}

async function parseError(res: Response): Promise<never> {
  let code = "HttpError";
  let message = `${res.status} ${res.statusText}`;
  let details: unknown = null;
  try {
    const body = await res.json();
    if (body && typeof body.code === "string") {
      code = body.code;
      message = body.message ?? message;
      details = body.details ?? null;
    }
  } catch {
    // non-JSON error body; keep the HTTP status text
  }
  throw new ApiError(res.status, code, message, details);
}

export class Client {
  constructor(public base: string = "") {}

  private async json<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await fetch(this.base + path, init);
    if (!res.ok) return parseError(res);
    return (await res.json()) as T;
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.json<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  async createSession(file: Blob, name: string): Promise<{ id: string; width: number; height: number }> {
    const form = new FormData();
    form.append("image", file, name);
    return this.json("/sessions", { method: "POST", body: form });
  }

  summary(sid: string): Promise<SessionSummary> {
    return this.json(`/sessions/${sid}`);
  }

  binarize(sid: string, req: ThresholdRequest): Promise<{ threshold: number | null; preview: string }> {
    return this.post(`/sessions/${sid}/binarize`, req);
  }

  setRecipe(sid: string, steps: RecipeStep[], confirm = false): Promise<{ preview: string }> {
    return this.post(`/sessions/${sid}/recipe`, { steps, confirm });
  }

  generateUnits(sid: string, epsilon: number, confirm = false): Promise<UnitInfo[]> {
    return this.post(`/sessions/${sid}/units`, { epsilon, confirm });
  }

  async listUnits(sid: string): Promise<UnitInfo[]> {
    const body = await this.json<{ units: UnitInfo[] }>(`/sessions/${sid}/units`);
    return body.units;
  }

  async unlabeledIds(sid: string): Promise<number[]> {
    const body = await this.json<{ ids: number[] }>(`/sessions/${sid}/units?status=unlabeled`);
    return body.ids;
  }

  addLabel(sid: string, name: string, color?: string): Promise<LabelInfo> {
    return this.post(`/sessions/${sid}/labels`, color ? { name, color } : { name });
  }

  deleteLabel(sid: string, index: number): Promise<{ deleted: number }> {
    return this.json(`/sessions/${sid}/labels/${index}`, { method: "DELETE" });
  }

  assign(sid: string, unit: number, label: number): Promise<{ unit: number; label: number }> {
    return this.post(`/sessions/${sid}/assign`, { unit, label });
  }

  roi(sid: string, rect: Rect, mode: RoiMode, label: number | null): Promise<RoiResponse> {
    return this.post(`/sessions/${sid}/roi`, { rect, mode, label });
  }

  finalize(sid: string): Promise<{ ok: boolean; phase: string }> {
    return this.post(`/sessions/${sid}/finalize`, {});
  }

  maskUrl(sid: string): string {
    return `${this.base}/sessions/${sid}/mask.png`;
  }

  groupedUrl(sid: string): string {
    return `${this.base}/sessions/${sid}/grouped.png`;
  }

  previewUrl(sid: string): string {
    return `${this.base}/sessions/${sid}/preview`;
  }

  cropUrl(sid: string, unit: number): string {
    return `${this.base}/sessions/${sid}/units/${unit}/crop`;
  }

  exportUrl(sid: string): string {
    return `${this.base}/sessions/${sid}/export.zip`;
  }
}
