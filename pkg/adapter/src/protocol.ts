/**
 * Wire protocol shared by every generative seat.
 *
 * This mirrors the orchestrator's contract exactly: one request shape, one
 * response shape, six seats, images as base64 PNG. The golden fixtures under
 * ../docs/protocol/ are the source of truth; the conformance tests replay
 * them against these schemas and against a running adapter.
 */

import { z } from "zod";

export const SEATS = ["t2i", "i2i", "i2v", "flf2v", "llm", "vlm"] as const;
export type Seat = (typeof SEATS)[number];

/** Seats that hold a video or image model; one generation in flight each. */
export const GPU_SEATS: readonly Seat[] = ["t2i", "i2i", "i2v", "flf2v"];

export const STATUSES = ["ok", "retryable", "fatal"] as const;
export type Status = (typeof STATUSES)[number];

/** Malformed request or response; the caller never retries these. */
export class ProtocolError extends Error {}

export interface WireRequest {
  seat: Seat;
  request_id: string;
  seed: number;
  payload: Record<string, unknown>;
}

export interface WireResponse {
  request_id: string;
  status: Status;
  payload: Record<string, unknown>;
  timing_ms: number;
  error?: string;
}

const base64Image = z.string().min(1);
const nameList = z.array(z.string());

// Transition choreography rider on flf2v requests. exiting/entering are the
// set differences of start/end; the orchestrator guarantees they are disjoint.
export const transitionSchema = z.looseObject({
  start: nameList,
  end: nameList,
  exiting: nameList,
  entering: nameList,
  movement: z.string(),
  description: z.string(),
});

// Required payload fields per seat. Extra keys always pass through untouched;
// backends are free to attach bookkeeping (the orchestrator's mock adds
// per-character visibility tracks to clips, for example).
export const requestPayloadSchemas: Record<Seat, z.ZodType<Record<string, unknown>>> = {
  t2i: z.looseObject({ prompt: z.string() }),
  i2i: z.looseObject({
    image: base64Image,
    references: z.array(z.unknown()),
    prompt: z.string(),
  }),
  i2v: z.looseObject({
    image: base64Image,
    prompt: z.string(),
    frame_count: z.number().int(),
    fps: z.number().int(),
  }),
  flf2v: z.looseObject({
    first: base64Image,
    last: base64Image,
    prompt: z.string(),
    transition: transitionSchema,
    frame_count: z.number().int(),
    fps: z.number().int(),
  }),
  llm: z.looseObject({ stage: z.string(), prompt: z.string() }),
  vlm: z.looseObject({ frames: z.array(z.unknown()), question: z.string() }),
};

export const responsePayloadSchemas: Record<Seat, z.ZodType<Record<string, unknown>>> = {
  t2i: z.looseObject({ image: z.string() }),
  i2i: z.looseObject({ image: z.string() }),
  i2v: z.looseObject({ frames: z.array(z.unknown()) }),
  flf2v: z.looseObject({ frames: z.array(z.unknown()) }),
  llm: z.looseObject({ text: z.string() }),
  vlm: z.looseObject({ counts: z.array(z.unknown()), text: z.string() }),
};

const requestEnvelopeSchema = z.looseObject({
  seat: z.enum(SEATS),
  request_id: z.string().min(1),
  seed: z.number().int(),
  payload: z.record(z.string(), z.unknown()),
});

const responseEnvelopeSchema = z.looseObject({
  request_id: z.string().min(1),
  status: z.enum(STATUSES),
  payload: z.record(z.string(), z.unknown()),
  timing_ms: z.number().optional(),
  error: z.string().optional(),
});

/** One readable line for the first schema violation. */
export function firstIssue(error: z.ZodError): string {
  const issue = error.issues[0];
  if (!issue) return "invalid value";
  const where = issue.path.length ? `field '${issue.path.join(".")}': ` : "";
  return `${where}${issue.message}`;
}

export function parseRequest(data: unknown): WireRequest {
  const envelope = requestEnvelopeSchema.safeParse(data);
  if (!envelope.success) {
    throw new ProtocolError(`request: ${firstIssue(envelope.error)}`);
  }
  const seat = envelope.data.seat;
  const payload = requestPayloadSchemas[seat].safeParse(envelope.data.payload);
  if (!payload.success) {
    throw new ProtocolError(`${seat} request: ${firstIssue(payload.error)}`);
  }
  return {
    seat,
    request_id: envelope.data.request_id,
    seed: envelope.data.seed,
    payload: payload.data,
  };
}

/**
 * Check a wire response for a given seat. Required payload fields are only
 * enforced on status "ok"; error responses may carry anything.
 */
export function validateResponse(data: unknown, seat: Seat): WireResponse {
  const envelope = responseEnvelopeSchema.safeParse(data);
  if (!envelope.success) {
    throw new ProtocolError(`response: ${firstIssue(envelope.error)}`);
  }
  let payload: Record<string, unknown> = envelope.data.payload;
  if (envelope.data.status === "ok") {
    const checked = responsePayloadSchemas[seat].safeParse(payload);
    if (!checked.success) {
      throw new ProtocolError(`${seat} response: ${firstIssue(checked.error)}`);
    }
    payload = checked.data;
  }
  return {
    request_id: envelope.data.request_id,
    status: envelope.data.status,
    payload,
    timing_ms: envelope.data.timing_ms ?? 0,
    ...(envelope.data.error ? { error: envelope.data.error } : {}),
  };
}
