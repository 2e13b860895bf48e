/**
 * Pointer capture: a small state machine that records one drawing as a
 * (timestamp, x, y) stream and encodes it for the wire.
 *
 * The client does no preprocessing; the server resamples and filters.
 * Encoding uses String(number), which round-trips IEEE doubles exactly,
 * so replaying the same recorded fixture yields a byte-identical payload.
 */

export interface CapturePoint {
  /** milliseconds, monotone within a capture */
  t: number;
  x: number;
  y: number;
}

export type CaptureState = "idle" | "recording" | "review";

export const MIN_POINTS = 2;
export const MIN_DURATION_MS = 300;

export class CaptureTooShortError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "CaptureTooShortError";
  }
}

export class CaptureSession {
  state: CaptureState = "idle";
  points: CapturePoint[] = [];

  begin(): void {
    if (this.state === "recording") {
      throw new Error("capture already in progress");
    }
    this.points = [];
    this.state = "recording";
  }

  addPoint(t: number, x: number, y: number): void {
    if (this.state !== "recording") {
      throw new Error("not recording");
    }
    const last = this.points[this.points.length - 1];
    if (last !== undefined && t <= last.t) {
      // browsers occasionally deliver equal-timestamp events; nudge
      // forward so the payload invariant (strictly increasing) holds
      t = last.t + 1e-3;
    }
    this.points.push({ t, x, y });
  }

  /**
   * Pointer-up: close the stroke.  Too little motion moves the session
   * back to idle and raises, so the caller prompts for a redraw and
   * nothing is sent.
   */
  end(): CapturePoint[] {
    if (this.state !== "recording") {
      throw new Error("not recording");
    }
    const pts = this.points;
    const first = pts[0];
    const last = pts[pts.length - 1];
    if (pts.length < MIN_POINTS || first === undefined || last === undefined) {
      this.state = "idle";
      throw new CaptureTooShortError("need at least 2 points; please redraw");
    }
    if (last.t - first.t < MIN_DURATION_MS) {
      this.state = "idle";
      throw new CaptureTooShortError("less than 300 ms of motion; please redraw");
    }
    this.state = "review";
    return pts;
  }

  /** Accept or discard the reviewed drawing; either way back to idle. */
  finish(): CapturePoint[] {
    if (this.state !== "review") {
      throw new Error("nothing to finish");
    }
    const pts = this.points;
    this.state = "idle";
    this.points = [];
    return pts;
  }
}

/** Decimal-text rows `seconds,x,y`; timestamps converted ms -> s. */
export function encodeTrajectory(points: CapturePoint[]): string {
  const first = points[0];
  if (points.length < MIN_POINTS || first === undefined) {
    throw new CaptureTooShortError("trajectory too short to encode");
  }
  let out = "";
  for (const p of points) {
    out += `${String((p.t - first.t) / 1000)},${String(p.x)},${String(p.y)}\n`;
  }
  return out;
}

export function decodeTrajectory(text: string): CapturePoint[] {
  const points: CapturePoint[] = [];
  for (const line of text.split("\n")) {
    if (!line.trim()) continue;
    const parts = line.split(",").map(Number);
    const [t, x, y] = parts;
    if (parts.length < 3 || t === undefined || x === undefined || y === undefined) {
      throw new Error(`bad trajectory row: ${line}`);
    }
    points.push({ t: t * 1000, x, y });
  }
  return points;
}
