// Dashboard state: everything here is a cached copy of server responses.
// Nothing is authoritative client-side; init() after a reload rebuilds the
// whole snapshot from the API.

import { ApiClient, Bucket, Config, ConfigUpdate, Stats } from "./api.js";

export const DEFAULT_POLL_MS = 2000;

export class ChartWindow {
  constructor(
    public readonly fromMs: number,
    public readonly toMs: number,
    public readonly bucketMs: number,
    public readonly pollMs: number = DEFAULT_POLL_MS
  ) {
    if (!(fromMs < toMs)) throw new Error(`window needs from < to, got ${fromMs}..${toMs}`);
    if (!(bucketMs > 0)) throw new Error(`bucket width must be positive, got ${bucketMs}`);
  }

  /** Trailing window ending now, aligned to whole buckets. */
  static trailing(nowMs: number, spanMs: number, bucketMs: number, pollMs = DEFAULT_POLL_MS): ChartWindow {
    const to = Math.ceil(nowMs / bucketMs) * bucketMs;
    return new ChartWindow(to - spanMs, to, bucketMs, pollMs);
  }
}

export interface Snapshot {
  config: Config | null;
  stats: Stats | null;
  buckets: Bucket[];
  stale: boolean; // last poll failed; data shown is the previous response
  lastError: string | null;
}

export class Dashboard {
  snapshot: Snapshot = { config: null, stats: null, buckets: [], stale: false, lastError: null };
  private inflight = false;

  constructor(
    private readonly api: ApiClient,
    public window: ChartWindow
  ) {}

  /** Full state reconstruction from the API (page load / reload). */
  async init(): Promise<Snapshot> {
    this.snapshot.config = await this.api.getConfig();
    await this.poll();
    return this.snapshot;
  }

  /**
   * One polling step: refresh stats and the series. At most one request
   * batch is in flight; ticks that land while one is pending are dropped.
   */
  async poll(): Promise<boolean> {
    if (this.inflight) return false;
    this.inflight = true;
    try {
      const [stats, buckets] = await Promise.all([
        this.api.getStats(),
        this.api.getSeries(this.window.fromMs, this.window.toMs, this.window.bucketMs),
      ]);
      this.snapshot.stats = stats;
      this.snapshot.buckets = buckets;
      this.snapshot.stale = false;
      this.snapshot.lastError = null;
      return true;
    } catch (err) {
      this.snapshot.stale = true;
      this.snapshot.lastError = err instanceof Error ? err.message : String(err);
      return false;
    } finally {
      this.inflight = false;
    }
  }

  slideTo(nowMs: number): void {
    const span = this.window.toMs - this.window.fromMs;
    this.window = ChartWindow.trailing(nowMs, span, this.window.bucketMs, this.window.pollMs);
  }

  async applyConfig(update: ConfigUpdate): Promise<Config> {
    const config = await this.api.putConfig(update);
    this.snapshot.config = config; // server echo, not a local guess
    return config;
  }

  async submitCalibration(corners: number[][], side?: number): Promise<number[][]> {
    const result = await this.api.postCalibration(corners, side);
    this.snapshot.config = result.config;
    return result.homography;
  }
}
