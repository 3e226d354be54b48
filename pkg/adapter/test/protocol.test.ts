import { describe, expect, it } from "vitest";

import {
  ProtocolError,
  SEATS,
  parseRequest,
  validateResponse,
  type Seat,
} from "../src/protocol.js";

const PNG = "iVBORw0KGgoAAAANSUhEUgAAAAEAAAABCAYAAAAfFcSJAAAADUlEQVR4nGNgYGBgAAAABQABXvMqOgAAAABJRU5ErkJggg==";

const TRANSITION = {
  start: ["Ara"],
  end: ["Brin"],
  exiting: ["Ara"],
  entering: ["Brin"],
  movement: "Combination",
  description: "Ara walks out of frame. Brin enters from an edge.",
};

function minimalPayload(seat: Seat): Record<string, unknown> {
  switch (seat) {
    case "t2i":
      return { prompt: "a quiet harbor" };
    case "i2i":
      return { image: PNG, references: [PNG], prompt: "add the couriers" };
    case "i2v":
      return { image: PNG, prompt: "Ara waits", frame_count: 4, fps: 8 };
    case "flf2v":
      return {
        first: PNG,
        last: PNG,
        prompt: "handoff",
        transition: TRANSITION,
        frame_count: 4,
        fps: 8,
      };
    case "llm":
      return { stage: "chapters", prompt: "Break the story into chapters." };
    case "vlm":
      return { frames: [PNG, PNG], question: "Count the figures." };
  }
}

function request(seat: Seat, extra: Record<string, unknown> = {}): Record<string, unknown> {
  return {
    seat,
    request_id: `req-${seat}-1`,
    seed: 7,
    payload: { ...minimalPayload(seat), ...extra },
  };
}

describe("parseRequest", () => {
  it.each([...SEATS])("accepts a minimal %s request", (seat) => {
    const parsed = parseRequest(request(seat));
    expect(parsed.seat).toBe(seat);
    expect(parsed.request_id).toBe(`req-${seat}-1`);
    expect(parsed.seed).toBe(7);
  });

  it("keeps extra payload keys", () => {
    const parsed = parseRequest(request("t2i", { style: "storybook", knobs: [1, 2] }));
    expect(parsed.payload.style).toBe("storybook");
    expect(parsed.payload.knobs).toEqual([1, 2]);
  });

  it("rejects non-objects", () => {
    expect(() => parseRequest("hello")).toThrow(ProtocolError);
    expect(() => parseRequest(null)).toThrow(ProtocolError);
    expect(() => parseRequest([request("t2i")])).toThrow(ProtocolError);
  });

  it("rejects unknown seats", () => {
    expect(() => parseRequest({ ...request("t2i"), seat: "t2v" })).toThrow(/seat/);
  });

  it("rejects an empty request id", () => {
    expect(() => parseRequest({ ...request("t2i"), request_id: "" })).toThrow(ProtocolError);
  });

  it("rejects non-integer seeds", () => {
    expect(() => parseRequest({ ...request("t2i"), seed: 1.5 })).toThrow(ProtocolError);
    expect(() => parseRequest({ ...request("t2i"), seed: true })).toThrow(ProtocolError);
    expect(() => parseRequest({ ...request("t2i"), seed: "7" })).toThrow(ProtocolError);
  });

  it.each([...SEATS])("rejects a %s request with each required field dropped", (seat) => {
    for (const key of Object.keys(minimalPayload(seat))) {
      const payload = minimalPayload(seat);
      delete payload[key];
      const broken = { seat, request_id: "req-1", seed: 0, payload };
      expect(() => parseRequest(broken), `missing ${key}`).toThrow(ProtocolError);
    }
  });

  it("rejects a fractional frame_count", () => {
    expect(() => parseRequest(request("i2v", { frame_count: 4.5 }))).toThrow(ProtocolError);
  });

  it("rejects a transition missing a field", () => {
    const { movement: _dropped, ...partial } = TRANSITION;
    expect(() => parseRequest(request("flf2v", { transition: partial }))).toThrow(/movement/);
  });

  it("rejects a transition with a non-list member set", () => {
    const transition = { ...TRANSITION, exiting: "Ara" };
    expect(() => parseRequest(request("flf2v", { transition }))).toThrow(ProtocolError);
  });
});

describe("validateResponse", () => {
  const ok = {
    request_id: "req-1",
    status: "ok",
    payload: { text: "fine" },
    timing_ms: 1.25,
  };

  it("accepts an ok response with the seat's fields", () => {
    const response = validateResponse(ok, "llm");
    expect(response.status).toBe("ok");
    expect(response.timing_ms).toBe(1.25);
    expect(response.error).toBeUndefined();
  });

  it("defaults timing_ms to zero", () => {
    const { timing_ms: _dropped, ...bare } = ok;
    expect(validateResponse(bare, "llm").timing_ms).toBe(0);
  });

  it("requires the seat payload fields only on ok", () => {
    expect(() => validateResponse({ ...ok, payload: {} }, "llm")).toThrow(ProtocolError);
    const failed = { ...ok, status: "retryable", payload: {}, error: "busy" };
    expect(validateResponse(failed, "llm").error).toBe("busy");
  });

  it("rejects unknown statuses", () => {
    expect(() => validateResponse({ ...ok, status: "maybe" }, "llm")).toThrow(ProtocolError);
  });

  it("checks fields per seat", () => {
    expect(() => validateResponse({ ...ok, payload: { text: "x" } }, "vlm")).toThrow(/counts/);
    const full = { ...ok, payload: { counts: [1, 2], text: "x" } };
    expect(validateResponse(full, "vlm").payload.counts).toEqual([1, 2]);
  });

  it("keeps extra payload keys on ok responses", () => {
    const tracked = {
      ...ok,
      payload: { frames: [PNG], visibility: { Ara: [1.0] } },
    };
    expect(validateResponse(tracked, "i2v").payload.visibility).toEqual({ Ara: [1.0] });
  });
});
