// Violations-over-time bar chart. Layout is a pure function so it can be
// tested without a canvas; drawing is a thin painter over it.

import type { Bucket } from "./api.js";

export interface Bar {
  x: number;
  y: number;
  width: number;
  height: number;
  value: number;
}

export interface ChartLayout {
  bars: Bar[];
  maxValue: number;
}

/** One bar per bucket; heights scale so the tallest bucket fills the plot. */
export function layoutBars(
  values: number[],
  plotWidth: number,
  plotHeight: number,
  gap = 2
): ChartLayout {
  if (values.length === 0) return { bars: [], maxValue: 0 };
  const maxValue = Math.max(...values);
  const scale = maxValue > 0 ? plotHeight / maxValue : 0;
  const slot = plotWidth / values.length;
  const barWidth = Math.max(1, slot - gap);
  const bars = values.map((value, i) => {
    const height = value * scale;
    return {
      x: i * slot + (slot - barWidth) / 2,
      y: plotHeight - height,
      width: barWidth,
      height,
      value,
    };
  });
  return { bars, maxValue };
}

export function bucketValues(buckets: Bucket[]): number[] {
  return buckets.map((b) => b.violation_sum);
}

const AXIS = 24; // px reserved at the bottom for time labels

export function drawChart(canvas: HTMLCanvasElement, buckets: Bucket[]): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);
  const layout = layoutBars(bucketValues(buckets), width, height - AXIS);

  ctx.fillStyle = "#e2574c";
  for (const bar of layout.bars) {
    if (bar.height > 0) ctx.fillRect(bar.x, bar.y, bar.width, bar.height);
  }
  ctx.strokeStyle = "#555";
  ctx.beginPath();
  ctx.moveTo(0, height - AXIS + 0.5);
  ctx.lineTo(width, height - AXIS + 0.5);
  ctx.stroke();

  ctx.fillStyle = "#9a9a9a";
  ctx.font = "11px sans-serif";
  if (buckets.length > 0) {
    const first = new Date(buckets[0].bucket_start).toLocaleTimeString();
    const last = new Date(buckets[buckets.length - 1].bucket_start).toLocaleTimeString();
    ctx.textAlign = "left";
    ctx.fillText(first, 2, height - 8);
    ctx.textAlign = "right";
    ctx.fillText(last, width - 2, height - 8);
    ctx.textAlign = "left";
    ctx.fillText(`max ${layout.maxValue}`, 2, 12);
  }
}
