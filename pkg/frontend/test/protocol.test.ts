import { readFileSync } from "node:fs";
import { join } from "node:path";

import { describe, expect, it } from "vitest";

import {
  authenticatePayload,
  makeRequest,
  parseResponse,
  registerPayload,
  requestEnvelope,
} from "../src/protocol.js";

const fixtures = JSON.parse(
  readFileSync(join(__dirname, "fixtures", "smoke.json"), "utf-8"),
) as { id: string[]; passcode: string[]; passcode_extra: string; other: string };

describe("request building", () => {
  it("envelopes carry version, fresh nonce, and validated payload", () => {
    const req = makeRequest("authenticate", {
      account_number: "acct-000001",
      passcode_signal: fixtures.passcode_extra,
    });
    expect(requestEnvelope.parse(req)).toEqual(req);
    const again = makeRequest("status", {});
    expect(again.nonce).not.toBe(req.nonce);
  });

  it("register payload from the fixture validates against the schema", () => {
    const payload = {
      id_signals: fixtures.id,
      passcode_signals: fixtures.passcode,
    };
    expect(() => registerPayload.parse(payload)).not.toThrow();
  });

  it("register rejects the wrong repetition count", () => {
    expect(() =>
      registerPayload.parse({
        id_signals: fixtures.id.slice(0, 3),
        passcode_signals: fixtures.passcode,
      }),
    ).toThrow();
  });

  it("rejects non-numeric trajectory rows", () => {
    expect(() =>
      authenticatePayload.parse({
        account_number: "acct-000001",
        passcode_signal: "0.0,1.0,nope\n0.1,2.0,3.0\n",
      }),
    ).toThrow();
  });

  it("rejects unknown ops", () => {
    expect(() => makeRequest("explode" as never, {})).toThrow();
  });
});

describe("response parsing", () => {
  it("accepts ok and error envelopes", () => {
    const ok = parseResponse({
      version: 1,
      nonce: "n",
      status: "ok",
      payload: { accounts: 1, index_stale: true },
    });
    expect(ok.status).toBe("ok");
    const err = parseResponse({
      version: 1,
      nonce: "n",
      status: "error",
      error: { type: "validation", message: "bad", details: ["id_signals[4]: flat"] },
    });
    expect(err.status).toBe("error");
  });

  it("rejects wrong versions and malformed bodies", () => {
    expect(() =>
      parseResponse({ version: 2, nonce: "n", status: "ok", payload: {} }),
    ).toThrow();
    expect(() => parseResponse({ status: "ok" })).toThrow();
  });
});
