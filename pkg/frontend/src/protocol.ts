/**
 * Wire protocol schemas for the login service.
 *
 * The service speaks versioned JSON envelopes; over HTTP the envelope is
 * POSTed to /rpc as-is.  Signal payloads are decimal-text trajectory
 * blocks (rows of `timestamp,x,y`), produced by encodeTrajectory, so the
 * server parses them without any float round-trip loss.
 */

import { z } from "zod";

export const PROTOCOL_VERSION = 1;

export const OPS = ["register", "authenticate", "identify", "status"] as const;
export type Op = (typeof OPS)[number];

const trajectoryText = z
  .string()
  .min(1)
  .refine(
    (text) =>
      text
        .split("\n")
        .filter((line) => line.trim().length > 0)
        .every((line) => {
          const parts = line.split(",");
          return (
            (parts.length === 3 || parts.length === 4) &&
            parts.every((p) => Number.isFinite(Number(p)))
          );
        }),
    { message: "trajectory rows must be numeric timestamp,x,y[,z]" },
  );

export const registerPayload = z.object({
  id_signals: z.array(trajectoryText).length(5),
  passcode_signals: z.array(trajectoryText).length(5),
});

export const authenticatePayload = z.object({
  account_number: z.string().min(1),
  passcode_signal: trajectoryText,
});

export const identifyPayload = z.object({
  id_signal: trajectoryText,
  k: z.number().int().positive().optional(),
});

export const statusPayload = z.object({});

export const requestEnvelope = z.object({
  version: z.literal(PROTOCOL_VERSION),
  nonce: z.string().min(1),
  op: z.enum(OPS),
  payload: z.record(z.unknown()),
});

export const errorBody = z.object({
  type: z.string(),
  message: z.string(),
  details: z.array(z.string()).default([]),
});

export const responseEnvelope = z.discriminatedUnion("status", [
  z.object({
    version: z.literal(PROTOCOL_VERSION),
    nonce: z.string(),
    status: z.literal("ok"),
    payload: z.record(z.unknown()),
  }),
  z.object({
    version: z.literal(PROTOCOL_VERSION),
    nonce: z.string(),
    status: z.literal("error"),
    error: errorBody,
  }),
]);

export type RequestEnvelope = z.infer<typeof requestEnvelope>;
export type ResponseEnvelope = z.infer<typeof responseEnvelope>;

export const registerResult = z.object({
  account_number: z.string(),
  index_stale: z.boolean(),
});

export const authenticateResult = z.object({
  decision: z.enum(["accept", "reject"]),
  score: z.number(),
  threshold: z.number(),
});

export const identifyResult = z.object({
  account_number: z.string(),
  stale_index: z.boolean(),
  score: z.number().optional(),
});

export const statusResult = z.object({
  accounts: z.number().int(),
  index_stale: z.boolean(),
});

const payloadSchemas: Record<Op, z.ZodTypeAny> = {
  register: registerPayload,
  authenticate: authenticatePayload,
  identify: identifyPayload,
  status: statusPayload,
};

let nonceCounter = 0;

export function freshNonce(): string {
  nonceCounter += 1;
  return `web-${Date.now().toString(36)}-${nonceCounter}`;
}

/** Build a request envelope, validating the payload against its op's schema. */
export function makeRequest(op: Op, payload: unknown, nonce?: string): RequestEnvelope {
  const checked = payloadSchemas[op].parse(payload) as Record<string, unknown>;
  return {
    version: PROTOCOL_VERSION,
    nonce: nonce ?? freshNonce(),
    op,
    payload: checked,
  };
}

export function parseResponse(raw: unknown): ResponseEnvelope {
  return responseEnvelope.parse(raw);
}
