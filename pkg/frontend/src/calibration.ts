// Four-point calibration draft: corners are clicked on a scaled-down
// display of the reference frame and converted back to image pixels by
// dividing out the display scale.

export interface DisplayPoint {
  x: number;
  y: number;
}

export const CORNER_LABELS = ["top-left", "top-right", "bottom-right", "bottom-left"];

export class CalibrationDraft {
  private points: DisplayPoint[] = [];
  private scale = 1; // display pixels per image pixel

  setScale(scale: number): void {
    if (!(scale > 0) || !Number.isFinite(scale)) {
      throw new Error(`display scale must be a positive number, got ${scale}`);
    }
    this.scale = scale;
  }

  get displayScale(): number {
    return this.scale;
  }

  get count(): number {
    return this.points.length;
  }

  get canSubmit(): boolean {
    return this.points.length === 4;
  }

  get displayPoints(): readonly DisplayPoint[] {
    return this.points;
  }

  /** Register a click; returns false once four corners are already set. */
  addPoint(point: DisplayPoint): boolean {
    if (this.points.length >= 4) return false;
    this.points.push({ x: point.x, y: point.y });
    return true;
  }

  clear(): void {
    this.points = [];
  }

  /** Clicked display points divided by the scale factor, as [x, y] pairs. */
  toImageCorners(): number[][] {
    if (!this.canSubmit) {
      throw new Error(`exactly 4 corners required, have ${this.points.length}`);
    }
    return this.points.map((p) => [p.x / this.scale, p.y / this.scale]);
  }
}
