/**
 * HTTP face of the adapter: POST /v1/<seat> answers wire requests, GET
 * /v1/health reports the bound seats and their models. Protocol violations
 * come back as HTTP 400 and are never retried; engine failures come back as
 * HTTP 200 wire responses with a retryable or fatal status.
 */

import { readFileSync } from "node:fs";
import { createServer, type Server } from "node:http";
import type { AddressInfo } from "node:net";

import express, { type Express } from "express";

import type { SeatBinding } from "./bindings.js";
import { EngineError, makeEngine, type Engine } from "./engines.js";
import {
  GPU_SEATS,
  ProtocolError,
  SEATS,
  firstIssue,
  parseRequest,
  responsePayloadSchemas,
  type Seat,
  type WireRequest,
  type WireResponse,
} from "./protocol.js";
import { QueueFullError, SingleFlightQueue } from "./queue.js";

export const SERVICE_NAME = "infstory-adapter";

export const VERSION: string = (
  JSON.parse(readFileSync(new URL("../package.json", import.meta.url), "utf-8")) as {
    version: string;
  }
).version;

interface SeatRuntime {
  binding: SeatBinding;
  engine: Engine;
  queue?: SingleFlightQueue;
}

export class AdapterService {
  private readonly runtimes = new Map<Seat, SeatRuntime>();

  /** engines, when given, override the binding's engine per seat (tests). */
  constructor(bindings: SeatBinding[], engines?: Partial<Record<Seat, Engine>>) {
    for (const binding of bindings) {
      if (this.runtimes.has(binding.seat)) {
        throw new Error(`seat ${binding.seat} bound twice`);
      }
      const engine = engines?.[binding.seat] ?? makeEngine(binding);
      const queue = GPU_SEATS.includes(binding.seat)
        ? new SingleFlightQueue(binding.seat, binding.queueDepth)
        : undefined;
      this.runtimes.set(binding.seat, { binding, engine, queue });
    }
    if (this.runtimes.size === 0) {
      throw new Error("no seats bound");
    }
  }

  get seats(): Seat[] {
    return [...this.runtimes.keys()];
  }

  health(): Record<string, unknown> {
    const bindings: Record<string, unknown> = {};
    for (const { binding } of this.runtimes.values()) {
      bindings[binding.seat] = {
        model: binding.model,
        device: binding.device,
        engine: binding.engine,
        steps: binding.steps,
        guidance: binding.guidance,
        width: binding.width,
        height: binding.height,
        queue_depth: binding.queueDepth,
      };
    }
    return {
      status: "ok",
      service: SERVICE_NAME,
      version: VERSION,
      seats: this.seats,
      bindings,
    };
  }

  async handle(request: WireRequest): Promise<WireResponse> {
    const started = performance.now();
    const reply = (
      status: WireResponse["status"],
      payload: Record<string, unknown>,
      error?: string,
    ): WireResponse => ({
      request_id: request.request_id,
      status,
      payload,
      timing_ms: performance.now() - started,
      ...(error ? { error } : {}),
    });

    const runtime = this.runtimes.get(request.seat);
    if (!runtime) {
      // a valid protocol seat this process does not hold; advertise what it does
      return reply(
        "fatal",
        { seats: this.seats },
        `seat ${request.seat} is not bound on this adapter`,
      );
    }

    const job = () => runtime.engine.handle(request);
    let payload: Record<string, unknown>;
    try {
      payload = runtime.queue ? await runtime.queue.run(job) : await job();
    } catch (exc) {
      if (exc instanceof QueueFullError) return reply("retryable", {}, exc.message);
      if (exc instanceof EngineError) return reply(exc.status, {}, exc.message);
      const message = exc instanceof Error ? exc.message : String(exc);
      return reply("fatal", {}, `seat ${request.seat}: ${message}`);
    }

    const checked = responsePayloadSchemas[request.seat].safeParse(payload);
    if (!checked.success) {
      return reply(
        "fatal",
        {},
        `seat ${request.seat}: engine produced an invalid payload: ${firstIssue(checked.error)}`,
      );
    }
    return reply("ok", checked.data);
  }
}

export function buildApp(service: AdapterService): Express {
  const app = express();
  app.use(express.json({ limit: "64mb" }));

  app.get("/v1/health", (_req, res) => {
    res.json(service.health());
  });

  app.post("/v1/:seat", async (req, res) => {
    const seat = req.params.seat;
    if (!(SEATS as readonly string[]).includes(seat)) {
      res.status(404).json({ error: `unknown path /v1/${seat}` });
      return;
    }
    let request: WireRequest;
    try {
      request = parseRequest(req.body);
      if (request.seat !== seat) {
        throw new ProtocolError(
          `request seat '${request.seat}' does not match path seat '${seat}'`,
        );
      }
    } catch (exc) {
      if (exc instanceof ProtocolError) {
        res.status(400).json({ error: exc.message });
        return;
      }
      throw exc;
    }
    res.json(await service.handle(request));
  });

  app.use((req, res) => {
    res.status(404).json({ error: `unknown path ${req.path}` });
  });

  // body-parser rejections (bad JSON, oversize) land here
  app.use(
    (
      err: Error & { type?: string; status?: number },
      _req: express.Request,
      res: express.Response,
      _next: express.NextFunction,
    ) => {
      if (err.type === "entity.parse.failed") {
        res.status(400).json({ error: `body is not JSON: ${err.message}` });
        return;
      }
      res.status(err.status ?? 500).json({ error: err.message });
    },
  );

  return app;
}

export interface RunningAdapter {
  server: Server;
  port: number;
  url: string;
  close(): Promise<void>;
}

export function serveAdapter(
  service: AdapterService,
  port = 0,
  host = "127.0.0.1",
): Promise<RunningAdapter> {
  const server = createServer(buildApp(service));
  return new Promise((resolve, reject) => {
    server.once("error", reject);
    server.listen(port, host, () => {
      const bound = (server.address() as AddressInfo).port;
      resolve({
        server,
        port: bound,
        url: `http://${host}:${bound}`,
        close: () =>
          new Promise<void>((done, fail) => {
            server.close((err) => (err ? fail(err) : done()));
            server.closeAllConnections();
          }),
      });
    });
  });
}
