import { afterEach, describe, expect, it, vi } from "vitest";

import { ApiClient, ApiError, Bucket, Config, Stats } from "../src/api.js";
import { ChartWindow, Dashboard } from "../src/state.js";

const CONFIG: Config = {
  threshold_t: 50,
  confidence_threshold: 0.3,
  iou_threshold: 0.3,
  space: "image",
  anchor_mode: "centroid",
  calibration: null,
  birdseye_side: 448,
};

const STATS: Stats = {
  latest: { frame_index: 9, person_count: 2, violation_count: 1 },
  total_violations: 10,
  fps: 1.0,
};

const BUCKETS: Bucket[] = Array.from({ length: 10 }, (_v, i) => ({
  bucket_start: i * 1000,
  violation_sum: 1,
  frame_count: 1,
  max_violations: 1,
}));

function jsonResponse(body: unknown, status = 200): Response {
  return {
    ok: status >= 200 && status < 300,
    status,
    statusText: String(status),
    json: async () => body,
  } as Response;
}

interface ServerState {
  config: Config;
}

/** fetch stub behaving like the real service for the endpoints we use. */
function fakeServer(state: ServerState) {
  return vi.fn(async (url: RequestInfo | URL, init?: RequestInit) => {
    const path = String(url);
    if (path.startsWith("/api/config") && init?.method === "PUT") {
      const update = JSON.parse(String(init.body));
      if (update.threshold_t !== undefined && update.threshold_t <= 0) {
        return jsonResponse({ detail: [{ loc: ["body", "threshold_t"], msg: "must be > 0" }] }, 422);
      }
      state.config = { ...state.config, ...update };
      return jsonResponse(state.config);
    }
    if (path.startsWith("/api/config")) return jsonResponse(state.config);
    if (path.startsWith("/api/stats")) return jsonResponse(STATS);
    if (path.startsWith("/api/series")) return jsonResponse({ buckets: BUCKETS });
    if (path.startsWith("/api/calibration")) {
      const body = JSON.parse(String(init?.body));
      if (body.corners.length !== 4) {
        return jsonResponse({ detail: "exactly 4 corners required" }, 422);
      }
      state.config = { ...state.config, calibration: body.corners, space: "birdseye" };
      return jsonResponse({
        homography: [[1, 0, 0], [0, 1, 0], [0, 0, 1]],
        config: state.config,
      });
    }
    return jsonResponse({ detail: "not found" }, 404);
  });
}

afterEach(() => {
  vi.unstubAllGlobals();
});

function newDashboard(): Dashboard {
  return new Dashboard(new ApiClient(""), new ChartWindow(0, 10_000, 1000));
}

describe("ChartWindow", () => {
  it("rejects inverted ranges and non-positive buckets", () => {
    expect(() => new ChartWindow(10, 5, 1)).toThrow();
    expect(() => new ChartWindow(0, 10, 0)).toThrow();
  });

  it("defaults the polling interval to 2 s", () => {
    expect(new ChartWindow(0, 10, 1).pollMs).toBe(2000);
  });

  it("trailing window ends on a bucket boundary and spans the request", () => {
    const w = ChartWindow.trailing(10_500, 60_000, 1000);
    expect(w.toMs).toBe(11_000);
    expect(w.toMs - w.fromMs).toBe(60_000);
  });
});

describe("Dashboard", () => {
  it("reconstructs the full snapshot from the API alone", async () => {
    const server = fakeServer({ config: { ...CONFIG } });
    vi.stubGlobal("fetch", server);

    const first = newDashboard();
    await first.init();
    expect(first.snapshot.config).toEqual(CONFIG);
    expect(first.snapshot.stats).toEqual(STATS);
    expect(first.snapshot.buckets).toEqual(BUCKETS);

    // "page reload": a brand-new dashboard against the same server state
    const reloaded = newDashboard();
    await reloaded.init();
    expect(reloaded.snapshot).toEqual(first.snapshot);
  });

  it("config changes round-trip through the server echo", async () => {
    const state = { config: { ...CONFIG } };
    vi.stubGlobal("fetch", fakeServer(state));
    const dash = newDashboard();
    await dash.init();
    await dash.applyConfig({ threshold_t: 80 });
    expect(dash.snapshot.config?.threshold_t).toBe(80);
    // reload sees the same server-side value
    const reloaded = newDashboard();
    await reloaded.init();
    expect(reloaded.snapshot.config?.threshold_t).toBe(80);
  });

  it("surfaces 422 errors as ApiError without mutating local config", async () => {
    const state = { config: { ...CONFIG } };
    vi.stubGlobal("fetch", fakeServer(state));
    const dash = newDashboard();
    await dash.init();
    await expect(dash.applyConfig({ threshold_t: -5 })).rejects.toBeInstanceOf(ApiError);
    expect(dash.snapshot.config?.threshold_t).toBe(50);
  });

  it("submitCalibration adopts the server's new config", async () => {
    const state = { config: { ...CONFIG } };
    vi.stubGlobal("fetch", fakeServer(state));
    const dash = newDashboard();
    await dash.init();
    const corners = [[0, 0], [100, 0], [120, 100], [-10, 90]];
    const homography = await dash.submitCalibration(corners);
    expect(homography[2][2]).toBe(1);
    expect(dash.snapshot.config?.space).toBe("birdseye");
    expect(dash.snapshot.config?.calibration).toEqual(corners);
  });

  it("drops polling ticks while a request batch is in flight", async () => {
    let release: (() => void) | undefined;
    const gate = new Promise<void>((resolve) => (release = resolve));
    const server = fakeServer({ config: { ...CONFIG } });
    const slowFetch = vi.fn(async (url: RequestInfo | URL, init?: RequestInit) => {
      if (String(url).startsWith("/api/stats")) await gate;
      return server(url, init);
    });
    vi.stubGlobal("fetch", slowFetch);

    const dash = newDashboard();
    const pending = dash.poll(); // in flight, blocked on the gate
    expect(await dash.poll()).toBe(false); // overlapping tick dropped
    release!();
    expect(await pending).toBe(true);
    expect(await dash.poll()).toBe(true); // next tick proceeds
  });

  it("marks data stale on fetch failure and keeps the last snapshot", async () => {
    const state = { config: { ...CONFIG } };
    const server = fakeServer(state);
    vi.stubGlobal("fetch", server);
    const dash = newDashboard();
    await dash.init();
    expect(dash.snapshot.stale).toBe(false);

    vi.stubGlobal("fetch", vi.fn(async () => {
      throw new Error("network down");
    }));
    expect(await dash.poll()).toBe(false);
    expect(dash.snapshot.stale).toBe(true);
    expect(dash.snapshot.lastError).toMatch(/network down/);
    expect(dash.snapshot.buckets).toEqual(BUCKETS); // previous data retained

    vi.stubGlobal("fetch", server);
    expect(await dash.poll()).toBe(true); // recovers on the next tick
    expect(dash.snapshot.stale).toBe(false);
  });

  it("slideTo advances the window while keeping span and bucket width", () => {
    const dash = newDashboard();
    dash.slideTo(123_456);
    expect(dash.window.toMs - dash.window.fromMs).toBe(10_000);
    expect(dash.window.bucketMs).toBe(1000);
    expect(dash.window.toMs).toBeGreaterThanOrEqual(123_456);
  });
});
