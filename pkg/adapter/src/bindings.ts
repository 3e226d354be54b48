/**
 * Seat bindings: which model sits behind each protocol seat and how to run
 * it. Bindings come from INFSTORY_ADAPTER_* environment variables so the
 * service can be pointed at real checkpoints without a config file.
 */

import { SEATS, type Seat } from "./protocol.js";

export interface SeatBinding {
  seat: Seat;
  /** Model identifier, e.g. a checkpoint name; "stub-<seat>" by default. */
  model: string;
  device: string;
  steps: number;
  guidance: number;
  width: number;
  height: number;
  engine: "stub" | "command";
  /** argv for the command engine; required when engine is "command". */
  command?: string[];
  /** Passed to command children as INFSTORY_MODEL_PATH. */
  modelPath?: string;
  /** Running plus waiting cap for GPU-bound seats. */
  queueDepth: number;
  timeoutMs: number;
}

export const BINDING_DEFAULTS = {
  device: "cpu",
  steps: 20,
  guidance: 7.5,
  width: 128,
  height: 72,
  queueDepth: 8,
  timeoutMs: 120_000,
} as const;

export function defaultBinding(seat: Seat): SeatBinding {
  return { seat, model: `stub-${seat}`, engine: "stub", ...BINDING_DEFAULTS };
}

const PREFIX = "INFSTORY_ADAPTER_";

export function parseSeatList(text: string): Seat[] {
  const seats: Seat[] = [];
  for (const part of text.split(",")) {
    const name = part.trim();
    if (!name) continue;
    if (!(SEATS as readonly string[]).includes(name)) {
      throw new Error(`unknown seat '${name}', expected one of ${SEATS.join(", ")}`);
    }
    if (!seats.includes(name as Seat)) seats.push(name as Seat);
  }
  if (seats.length === 0) {
    throw new Error("seat list is empty");
  }
  return seats;
}

function parseCommand(text: string): string[] {
  // Either a JSON argv array or a simple whitespace-separated command line.
  if (text.trimStart().startsWith("[")) {
    const parsed: unknown = JSON.parse(text);
    if (!Array.isArray(parsed) || !parsed.every((item) => typeof item === "string")) {
      throw new Error("command must be a JSON array of strings");
    }
    if (parsed.length === 0) throw new Error("command is empty");
    return parsed;
  }
  const words = text.split(/\s+/).filter(Boolean);
  if (words.length === 0) throw new Error("command is empty");
  return words;
}

function positiveInt(name: string, text: string): number {
  const value = Number(text);
  if (!Number.isInteger(value) || value < 1) {
    throw new Error(`${name}: expected a positive integer, got '${text}'`);
  }
  return value;
}

function positiveNumber(name: string, text: string): number {
  const value = Number(text);
  if (!Number.isFinite(value) || value <= 0) {
    throw new Error(`${name}: expected a positive number, got '${text}'`);
  }
  return value;
}

/**
 * Build bindings for the advertised seats from environment variables.
 *
 * INFSTORY_ADAPTER_SEATS            comma list; default all six
 * INFSTORY_ADAPTER_MODEL_<SEAT>     model identifier
 * INFSTORY_ADAPTER_MODEL_PATH_<SEAT> checkpoint path for the command child
 * INFSTORY_ADAPTER_COMMAND_<SEAT>   switches the seat to the command engine
 * INFSTORY_ADAPTER_DEVICE_<SEAT>, _STEPS_, _GUIDANCE_, _WIDTH_, _HEIGHT_,
 * INFSTORY_ADAPTER_QUEUE_DEPTH_<SEAT>, _TIMEOUT_MS_   generation params
 */
export function bindingsFromEnv(env: Record<string, string | undefined> = process.env): SeatBinding[] {
  const seats = parseSeatList(env[`${PREFIX}SEATS`] ?? SEATS.join(","));
  return seats.map((seat) => {
    const suffix = seat.toUpperCase();
    const read = (name: string) => env[`${PREFIX}${name}_${suffix}`];
    const binding = defaultBinding(seat);

    const model = read("MODEL");
    if (model) binding.model = model;
    const device = read("DEVICE");
    if (device) binding.device = device;
    const modelPath = read("MODEL_PATH");
    if (modelPath) binding.modelPath = modelPath;

    const command = read("COMMAND");
    if (command) {
      try {
        binding.command = parseCommand(command);
      } catch (exc) {
        throw new Error(`${PREFIX}COMMAND_${suffix}: ${(exc as Error).message}`);
      }
      binding.engine = "command";
    }

    const steps = read("STEPS");
    if (steps) binding.steps = positiveInt(`${PREFIX}STEPS_${suffix}`, steps);
    const guidance = read("GUIDANCE");
    if (guidance) binding.guidance = positiveNumber(`${PREFIX}GUIDANCE_${suffix}`, guidance);
    const width = read("WIDTH");
    if (width) binding.width = positiveInt(`${PREFIX}WIDTH_${suffix}`, width);
    const height = read("HEIGHT");
    if (height) binding.height = positiveInt(`${PREFIX}HEIGHT_${suffix}`, height);
    const depth = read("QUEUE_DEPTH");
    if (depth) binding.queueDepth = positiveInt(`${PREFIX}QUEUE_DEPTH_${suffix}`, depth);
    const timeout = read("TIMEOUT_MS");
    if (timeout) binding.timeoutMs = positiveInt(`${PREFIX}TIMEOUT_MS_${suffix}`, timeout);

    return binding;
  });
}
