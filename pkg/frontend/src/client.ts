/**
 * HTTP client for the login service's /rpc bridge.
 *
 * At most one request is in flight at a time: capture UIs disable input
 * while awaiting a response, and the guard here enforces it even if a
 * caller forgets.  Every response is schema-validated before use and
 * service-side errors surface verbatim as ServiceError.
 */

import {
  authenticateResult,
  identifyResult,
  makeRequest,
  Op,
  parseResponse,
  registerResult,
  statusResult,
} from "./protocol.js";

export class ServiceError extends Error {
  readonly type: string;
  readonly details: string[];

  constructor(type: string, message: string, details: string[]) {
    super(message);
    this.name = "ServiceError";
    this.type = type;
    this.details = details;
  }
}

export class ServiceClient {
  private readonly rpcUrl: string;
  private inFlight = false;

  constructor(baseUrl: string) {
    this.rpcUrl = baseUrl.replace(/\/$/, "") + "/rpc";
  }

  get busy(): boolean {
    return this.inFlight;
  }

  private async call(op: Op, payload: unknown): Promise<Record<string, unknown>> {
    if (this.inFlight) {
      throw new Error("a request is already in flight");
    }
    this.inFlight = true;
    try {
      const request = makeRequest(op, payload);
      const response = await fetch(this.rpcUrl, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(request),
      });
      const envelope = parseResponse(await response.json());
      if (envelope.nonce !== request.nonce) {
        throw new ServiceError("protocol", "response nonce mismatch", []);
      }
      if (envelope.status === "error") {
        const e = envelope.error;
        throw new ServiceError(e.type, e.message, e.details);
      }
      return envelope.payload;
    } finally {
      this.inFlight = false;
    }
  }

  async register(idSignals: string[], passcodeSignals: string[]) {
    return registerResult.parse(
      await this.call("register", {
        id_signals: idSignals,
        passcode_signals: passcodeSignals,
      }),
    );
  }

  async authenticate(accountNumber: string, passcodeSignal: string) {
    return authenticateResult.parse(
      await this.call("authenticate", {
        account_number: accountNumber,
        passcode_signal: passcodeSignal,
      }),
    );
  }

  async identify(idSignal: string, k?: number) {
    return identifyResult.parse(
      await this.call("identify", k === undefined ? { id_signal: idSignal } : { id_signal: idSignal, k }),
    );
  }

  async status() {
    return statusResult.parse(await this.call("status", {}));
  }
}
