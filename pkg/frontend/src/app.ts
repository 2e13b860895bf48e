/**
 * Browser entry point: a drawing canvas wired to the capture state
 * machine, with buttons driving the enroll / login / identify flows.
 */

import { ServiceClient, ServiceError } from "./client.js";
import { EnrollFlow, identifyFlow, loginFlow } from "./flows.js";
import {
  CapturePoint,
  CaptureSession,
  CaptureTooShortError,
  encodeTrajectory,
} from "./trajectory.js";

type Mode = "enroll-id" | "enroll-passcode" | "login" | "identify";

function requireElement<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (el === null) {
    throw new Error(`missing element #${id}`);
  }
  return el as T;
}

export function startApp(): void {
  const canvas = requireElement<HTMLCanvasElement>("pad");
  const statusEl = requireElement<HTMLElement>("status");
  const accountInput = requireElement<HTMLInputElement>("account");
  const serviceInput = requireElement<HTMLInputElement>("service-url");
  const ctx = canvas.getContext("2d");
  if (ctx === null) {
    throw new Error("canvas 2d context unavailable");
  }

  const session = new CaptureSession();
  let client = new ServiceClient(serviceInput.value);
  let enroll = new EnrollFlow(client);
  let mode: Mode = "enroll-id";
  let lastStroke: CapturePoint[] | null = null;

  serviceInput.addEventListener("change", () => {
    client = new ServiceClient(serviceInput.value);
    enroll = new EnrollFlow(client);
    say("service address updated; enrollment restarted");
  });

  function say(text: string): void {
    statusEl.textContent = text;
  }

  function clearPad(): void {
    ctx!.clearRect(0, 0, canvas.width, canvas.height);
  }

  function drawSegment(a: CapturePoint, b: CapturePoint): void {
    ctx!.beginPath();
    ctx!.moveTo(a.x, a.y);
    ctx!.lineTo(b.x, b.y);
    ctx!.stroke();
  }

  function replay(points: CapturePoint[]): void {
    clearPad();
    let i = 1;
    const step = () => {
      const a = points[i - 1];
      const b = points[i];
      if (a === undefined || b === undefined) return;
      drawSegment(a, b);
      i += 1;
      if (i < points.length) requestAnimationFrame(step);
    };
    requestAnimationFrame(step);
  }

  canvas.addEventListener("pointerdown", (ev) => {
    if (client.busy) return;
    clearPad();
    session.begin();
    session.addPoint(ev.timeStamp, ev.offsetX, ev.offsetY);
  });

  canvas.addEventListener("pointermove", (ev) => {
    if (session.state !== "recording") return;
    const prev = session.points[session.points.length - 1];
    session.addPoint(ev.timeStamp, ev.offsetX, ev.offsetY);
    const cur = session.points[session.points.length - 1];
    if (prev !== undefined && cur !== undefined) drawSegment(prev, cur);
  });

  canvas.addEventListener("pointerup", () => {
    if (session.state !== "recording") return;
    try {
      const points = session.end();
      lastStroke = session.finish();
      replay(points);
      void submitStroke(points);
    } catch (err) {
      if (err instanceof CaptureTooShortError) {
        say(err.message);
        lastStroke = null;
        return;
      }
      throw err;
    }
  });

  async function submitStroke(points: CapturePoint[]): Promise<void> {
    const encoded = encodeTrajectory(points);
    try {
      if (mode === "enroll-id" || mode === "enroll-passcode") {
        const progress =
          mode === "enroll-id"
            ? enroll.addIdSignal(encoded)
            : enroll.addPasscodeSignal(encoded);
        say(
          `captured ID ${progress.idCount}/5, passcode ${progress.passcodeCount}/5` +
            (progress.ready ? " - ready to submit" : ""),
        );
        if (progress.ready) {
          const result = await enroll.submit();
          say(`enrolled: account ${result.account_number}`);
          accountInput.value = result.account_number;
          enroll = new EnrollFlow(client);
          mode = "login";
        } else if (mode === "enroll-id" && progress.idCount === 5) {
          mode = "enroll-passcode";
        }
      } else if (mode === "login") {
        const out = await loginFlow(client, accountInput.value, encoded);
        say(`${out.decision} (score ${out.score.toFixed(4)} vs threshold ${out.threshold.toFixed(4)})`);
      } else {
        const out = await identifyFlow(client, encoded);
        say(
          out.account_number === "unidentified"
            ? "unidentified"
            : `account ${out.account_number}${out.stale_index ? " (stale index, exhaustive search)" : ""}`,
        );
      }
    } catch (err) {
      if (err instanceof ServiceError) {
        const detail = err.details.length > 0 ? ` [${err.details.join("; ")}]` : "";
        say(`${err.type} error: ${err.message}${detail}`);
      } else {
        say(String(err));
      }
    }
  }

  for (const m of ["enroll-id", "login", "identify"] as const) {
    requireElement<HTMLButtonElement>(`mode-${m}`).addEventListener("click", () => {
      mode = m === "enroll-id" ? "enroll-id" : m;
      if (m === "enroll-id") enroll = new EnrollFlow(client);
      say(`mode: ${m}`);
      clearPad();
    });
  }

  requireElement<HTMLButtonElement>("replay").addEventListener("click", () => {
    if (lastStroke !== null) replay(lastStroke);
  });

  say("mode: enroll-id - draw your ID word (1 of 5)");
}
