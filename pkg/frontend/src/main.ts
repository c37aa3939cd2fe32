// DOM wiring for the operator console: stats tiles, violations chart,
// config form, and click-based four-point calibration.

import { ApiClient, ApiError, AnchorName, SpaceName } from "./api.js";
import { CalibrationDraft, CORNER_LABELS } from "./calibration.js";
import { drawChart } from "./chart.js";
import { ChartWindow, Dashboard, DEFAULT_POLL_MS } from "./state.js";

const WINDOW_SPAN_MS = 60_000;
const BUCKET_MS = 1000;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function setText(id: string, text: string): void {
  el(id).textContent = text;
}

function renderStats(dash: Dashboard): void {
  const stats = dash.snapshot.stats;
  setText("tile-frame", stats?.latest ? String(stats.latest.frame_index) : "–");
  setText("tile-persons", stats?.latest ? String(stats.latest.person_count) : "–");
  setText("tile-violations", stats?.latest ? String(stats.latest.violation_count) : "–");
  setText("tile-total", stats ? String(stats.total_violations) : "–");
  setText("tile-fps", stats ? stats.fps.toFixed(2) : "–");
  el("stale-banner").hidden = !dash.snapshot.stale;
}

function renderConfig(dash: Dashboard): void {
  const config = dash.snapshot.config;
  if (!config) return;
  el<HTMLInputElement>("cfg-threshold").value = String(config.threshold_t);
  el<HTMLInputElement>("cfg-confidence").value = String(config.confidence_threshold);
  el<HTMLInputElement>("cfg-iou").value = String(config.iou_threshold);
  el<HTMLSelectElement>("cfg-space").value = config.space;
  el<HTMLSelectElement>("cfg-anchor").value = config.anchor_mode;
  setText(
    "cfg-calibration",
    config.calibration
      ? `calibrated: ${config.calibration.map(([x, y]) => `(${x.toFixed(1)}, ${y.toFixed(1)})`).join(" ")}`
      : "no calibration set"
  );
}

function flash(id: string, message: string, kind: "ok" | "error"): void {
  const node = el(id);
  node.textContent = message;
  node.className = `notice ${kind}`;
  node.hidden = false;
}

function describe(err: unknown): string {
  if (err instanceof ApiError) return `server rejected the request: ${err.message}`;
  if (err instanceof Error) return `request failed: ${err.message} (retry when the service is reachable)`;
  return String(err);
}

function main(): void {
  const api = new ApiClient("");
  const dash = new Dashboard(api, ChartWindow.trailing(Date.now(), WINDOW_SPAN_MS, BUCKET_MS));
  const chart = el<HTMLCanvasElement>("chart");

  const repaint = () => {
    renderStats(dash);
    drawChart(chart, dash.snapshot.buckets);
  };

  // --- config form -------------------------------------------------------
  el<HTMLFormElement>("config-form").addEventListener("submit", async (event) => {
    event.preventDefault();
    try {
      await dash.applyConfig({
        threshold_t: Number(el<HTMLInputElement>("cfg-threshold").value),
        confidence_threshold: Number(el<HTMLInputElement>("cfg-confidence").value),
        iou_threshold: Number(el<HTMLInputElement>("cfg-iou").value),
        space: el<HTMLSelectElement>("cfg-space").value as SpaceName,
        anchor_mode: el<HTMLSelectElement>("cfg-anchor").value as AnchorName,
      });
      renderConfig(dash);
      flash("config-notice", "configuration applied", "ok");
    } catch (err) {
      flash("config-notice", describe(err), "error");
    }
  });

  // --- calibration -------------------------------------------------------
  const draft = new CalibrationDraft();
  const frameCanvas = el<HTMLCanvasElement>("calibration-canvas");
  let frame: HTMLImageElement | null = null;

  const paintCalibration = () => {
    const ctx = frameCanvas.getContext("2d");
    if (!ctx) return;
    ctx.clearRect(0, 0, frameCanvas.width, frameCanvas.height);
    if (frame) ctx.drawImage(frame, 0, 0, frameCanvas.width, frameCanvas.height);
    ctx.fillStyle = "#ffd166";
    ctx.strokeStyle = "#ffd166";
    draft.displayPoints.forEach((p, i) => {
      ctx.beginPath();
      ctx.arc(p.x, p.y, 5, 0, Math.PI * 2);
      ctx.fill();
      ctx.fillText(String(i + 1), p.x + 8, p.y - 8);
    });
    const next = draft.count < 4 ? `click the ${CORNER_LABELS[draft.count]} corner` : "ready to submit";
    setText("calibration-progress", `${draft.count}/4 corners — ${next}`);
    el<HTMLButtonElement>("calibration-submit").disabled = !draft.canSubmit;
  };

  el<HTMLInputElement>("frame-file").addEventListener("change", (event) => {
    const input = event.target as HTMLInputElement;
    const file = input.files?.[0];
    if (!file) return;
    const image = new Image();
    image.onload = () => {
      frame = image;
      const displayWidth = Math.min(image.naturalWidth, 720);
      draft.setScale(displayWidth / image.naturalWidth);
      frameCanvas.width = displayWidth;
      frameCanvas.height = Math.round(image.naturalHeight * draft.displayScale);
      draft.clear();
      paintCalibration();
    };
    image.src = URL.createObjectURL(file);
  });

  frameCanvas.addEventListener("click", (event) => {
    if (!frame) return;
    const rect = frameCanvas.getBoundingClientRect();
    draft.addPoint({ x: event.clientX - rect.left, y: event.clientY - rect.top });
    paintCalibration();
  });

  el<HTMLButtonElement>("calibration-clear").addEventListener("click", () => {
    draft.clear();
    paintCalibration();
  });

  el<HTMLButtonElement>("calibration-submit").addEventListener("click", async () => {
    try {
      await dash.submitCalibration(draft.toImageCorners());
      draft.clear();
      paintCalibration();
      renderConfig(dash);
      flash("calibration-notice", "calibration accepted — bird's-eye space active", "ok");
    } catch (err) {
      flash("calibration-notice", describe(err), "error");
    }
  });

  // --- boot and poll loop ------------------------------------------------
  dash
    .init()
    .then(() => {
      renderConfig(dash);
      repaint();
    })
    .catch((err) => flash("config-notice", describe(err), "error"));

  window.setInterval(async () => {
    dash.slideTo(Date.now());
    await dash.poll(); // drop-stale: overlapping ticks are skipped inside
    repaint();
  }, DEFAULT_POLL_MS);
}

main();
