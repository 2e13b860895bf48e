import { describe, expect, it } from "vitest";

import {
  CaptureSession,
  CaptureTooShortError,
  decodeTrajectory,
  encodeTrajectory,
} from "../src/trajectory.js";

function record(points: Array<[number, number, number]>): CaptureSession {
  const session = new CaptureSession();
  session.begin();
  for (const [t, x, y] of points) session.addPoint(t, x, y);
  return session;
}

describe("capture session", () => {
  it("walks idle -> recording -> review -> idle", () => {
    const session = record([
      [0, 0, 0],
      [200, 1, 1],
      [400, 2, 2],
    ]);
    expect(session.state).toBe("recording");
    session.end();
    expect(session.state).toBe("review");
    const points = session.finish();
    expect(session.state).toBe("idle");
    expect(points).toHaveLength(3);
  });

  it("rejects a single click with a redraw prompt and sends nothing", () => {
    const session = record([[0, 5, 5]]);
    expect(() => session.end()).toThrow(CaptureTooShortError);
    expect(session.state).toBe("idle");
  });

  it("rejects under 300 ms of motion", () => {
    const session = record([
      [0, 0, 0],
      [100, 1, 1],
      [250, 2, 2],
    ]);
    expect(() => session.end()).toThrow(/300 ms/);
  });

  it("keeps timestamps strictly increasing even on duplicate events", () => {
    const session = record([
      [0, 0, 0],
      [10, 1, 1],
      [10, 2, 2],
      [400, 3, 3],
    ]);
    const points = session.end();
    for (let i = 1; i < points.length; i++) {
      expect(points[i]!.t).toBeGreaterThan(points[i - 1]!.t);
    }
  });
});

describe("trajectory encoding", () => {
  const points = [
    { t: 100, x: 0.1, y: 0.2 },
    { t: 116.7, x: 1.25, y: -3.5 },
    { t: 133.3333, x: 2, y: 7.000001 },
  ];

  it("emits strictly increasing rebased timestamps", () => {
    const lines = encodeTrajectory(points).trim().split("\n");
    const stamps = lines.map((l) => Number(l.split(",")[0]));
    expect(stamps[0]).toBe(0);
    for (let i = 1; i < stamps.length; i++) {
      expect(stamps[i]!).toBeGreaterThan(stamps[i - 1]!);
    }
  });

  it("is deterministic: replaying a fixture gives a byte-identical payload", () => {
    const a = encodeTrajectory(points);
    const b = encodeTrajectory(points.map((p) => ({ ...p })));
    expect(a).toBe(b);
  });

  it("round-trips through decode without float loss", () => {
    const decoded = decodeTrajectory(encodeTrajectory(points));
    expect(decoded).toHaveLength(3);
    expect(decoded[1]!.x).toBe(1.25);
    expect(decoded[2]!.y).toBe(7.000001);
    expect(encodeTrajectory(decoded)).toBe(encodeTrajectory(points));
  });

  it("refuses to encode fewer than 2 points", () => {
    expect(() => encodeTrajectory([{ t: 0, x: 0, y: 0 }])).toThrow(CaptureTooShortError);
  });
});
