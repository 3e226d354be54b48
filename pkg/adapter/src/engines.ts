/**
 * Seat engines. An engine turns one wire request into a seat response
 * payload; everything else (validation, queueing, envelopes) lives in the
 * server. The stub engine answers deterministically with no model at all,
 * the command engine shells out to whatever wraps the real checkpoint.
 */

import { execFile } from "node:child_process";

import type { SeatBinding } from "./bindings.js";
import { solidPng, type Rgb } from "./png.js";
import type { WireRequest } from "./protocol.js";

export class EngineError extends Error {
  constructor(
    message: string,
    readonly status: "retryable" | "fatal",
  ) {
    super(message);
  }
}

export interface Engine {
  handle(request: WireRequest): Promise<Record<string, unknown>>;
}

function toneFromSeed(seed: number): Rgb {
  const wrap = (value: number) => ((value % 256) + 256) % 256;
  return [wrap(seed * 37 + 11), wrap(seed * 59 + 23), wrap(seed * 83 + 47)];
}

/**
 * Deterministic placeholder outputs, schema-valid for every seat. Video
 * seats honor the anchor contract: i2v clips open on the conditioning image,
 * flf2v clips are pinned to the first and last frames.
 */
export class StubEngine implements Engine {
  constructor(private readonly binding: SeatBinding) {}

  async handle(request: WireRequest): Promise<Record<string, unknown>> {
    const { seat, seed, payload } = request;
    switch (seat) {
      case "t2i":
        return { image: solidPng(this.binding.width, this.binding.height, toneFromSeed(seed)) };
      case "i2i":
        // compositing stub: pass the base image through unchanged
        return { image: payload.image };
      case "i2v": {
        const count = payload.frame_count as number;
        if (count < 1) throw new EngineError("i2v: frame_count must be at least 1", "fatal");
        return { frames: Array.from({ length: count }, () => payload.image) };
      }
      case "flf2v": {
        const count = payload.frame_count as number;
        if (count < 2) throw new EngineError("flf2v: frame_count must be at least 2", "fatal");
        const middle = Array.from({ length: count - 2 }, () => payload.first);
        return { frames: [payload.first, ...middle, payload.last] };
      }
      case "llm":
        return { text: `stub ${this.binding.model} reply for stage ${payload.stage} (seed ${seed})` };
      case "vlm":
        return { counts: [0, 0], text: `stub ${this.binding.model}: no figures tracked (seed ${seed})` };
    }
  }
}

/**
 * Run the binding's command once per request. The child gets the request and
 * generation params as JSON on stdin plus INFSTORY_MODEL_PATH in its
 * environment, and must print the seat response payload as JSON on stdout.
 *
 * Error mapping: missing executable is fatal (retrying cannot help), crash
 * or timeout is retryable, unparseable output is fatal.
 */
export class CommandEngine implements Engine {
  constructor(private readonly binding: SeatBinding) {
    if (!binding.command || binding.command.length === 0) {
      throw new Error(`seat ${binding.seat}: command engine configured without a command`);
    }
  }

  handle(request: WireRequest): Promise<Record<string, unknown>> {
    const { binding } = this;
    const [program, ...args] = binding.command as [string, ...string[]];
    const input = JSON.stringify({
      seat: request.seat,
      request_id: request.request_id,
      seed: request.seed,
      payload: request.payload,
      model: binding.model,
      device: binding.device,
      steps: binding.steps,
      guidance: binding.guidance,
      width: binding.width,
      height: binding.height,
    });
    const env = { ...process.env };
    if (binding.modelPath) env.INFSTORY_MODEL_PATH = binding.modelPath;

    return new Promise((resolve, reject) => {
      const child = execFile(
        program,
        args,
        {
          env,
          timeout: binding.timeoutMs,
          killSignal: "SIGKILL",
          maxBuffer: 64 * 1024 * 1024,
        },
        (error, stdout, stderr) => {
          if (error) {
            if ((error as NodeJS.ErrnoException).code === "ENOENT") {
              reject(
                new EngineError(
                  `seat ${binding.seat}: cannot start model command '${program}'`,
                  "fatal",
                ),
              );
              return;
            }
            const timedOut = (error as { killed?: boolean }).killed || error.signal;
            const detail = stderr.trim().slice(-500) || error.message;
            reject(
              new EngineError(
                timedOut
                  ? `seat ${binding.seat}: model command timed out after ${binding.timeoutMs} ms`
                  : `seat ${binding.seat}: model command failed: ${detail}`,
                "retryable",
              ),
            );
            return;
          }
          try {
            const parsed: unknown = JSON.parse(stdout);
            if (parsed === null || typeof parsed !== "object" || Array.isArray(parsed)) {
              throw new Error("payload must be a JSON object");
            }
            resolve(parsed as Record<string, unknown>);
          } catch (exc) {
            reject(
              new EngineError(
                `seat ${binding.seat}: model command wrote an invalid payload: ${(exc as Error).message}`,
                "fatal",
              ),
            );
          }
        },
      );
      // the child may exit without draining stdin; don't let EPIPE escape
      child.stdin?.on("error", () => {});
      child.stdin?.end(input);
    });
  }
}

export function makeEngine(binding: SeatBinding): Engine {
  return binding.engine === "command" ? new CommandEngine(binding) : new StubEngine(binding);
}
