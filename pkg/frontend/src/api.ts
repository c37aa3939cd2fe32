// Typed client for the risk-management HTTP API. All dashboard state is
// server state; this module is the only place that talks to it.

export interface LatestFrame {
  frame_index: number;
  person_count: number;
  violation_count: number;
}

export interface Stats {
  latest: LatestFrame | null;
  total_violations: number;
  fps: number;
}

export interface Bucket {
  bucket_start: number;
  violation_sum: number;
  frame_count: number;
  max_violations: number;
}

export type SpaceName = "image" | "birdseye";
export type AnchorName = "centroid" | "bottom";

export interface Config {
  threshold_t: number;
  confidence_threshold: number;
  iou_threshold: number;
  space: SpaceName;
  anchor_mode: AnchorName;
  calibration: number[][] | null;
  birdseye_side: number;
}

export interface ConfigUpdate {
  threshold_t?: number;
  confidence_threshold?: number;
  iou_threshold?: number;
  space?: SpaceName;
  anchor_mode?: AnchorName;
  calibration?: number[][] | null;
  birdseye_side?: number;
}

export interface CalibrationResult {
  homography: number[][];
  config: Config;
}

export class ApiError extends Error {
  constructor(public readonly status: number, public readonly detail: unknown) {
    super(typeof detail === "string" ? detail : JSON.stringify(detail));
    this.name = "ApiError";
  }
}

async function parseError(response: Response): Promise<ApiError> {
  let detail: unknown = response.statusText;
  try {
    const body = (await response.json()) as { detail?: unknown };
    if (body && body.detail !== undefined) detail = body.detail;
  } catch {
    // non-JSON error body; keep the status text
  }
  return new ApiError(response.status, detail);
}

export class ApiClient {
  constructor(private readonly base: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(this.base + path, init);
    if (!response.ok) throw await parseError(response);
    return (await response.json()) as T;
  }

  getStats(): Promise<Stats> {
    return this.request<Stats>("/api/stats");
  }

  async getSeries(fromMs: number, toMs: number, bucketMs: number): Promise<Bucket[]> {
    const params = new URLSearchParams({
      from: String(fromMs),
      to: String(toMs),
      bucket: String(bucketMs),
    });
    const body = await this.request<{ buckets: Bucket[] }>(`/api/series?${params}`);
    return body.buckets;
  }

  getConfig(): Promise<Config> {
    return this.request<Config>("/api/config");
  }

  putConfig(update: ConfigUpdate): Promise<Config> {
    return this.request<Config>("/api/config", {
      method: "PUT",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(update),
    });
  }

  postCalibration(corners: number[][], side?: number): Promise<CalibrationResult> {
    const payload: { corners: number[][]; side?: number } = { corners };
    if (side !== undefined) payload.side = side;
    return this.request<CalibrationResult>("/api/calibration", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
  }
}
