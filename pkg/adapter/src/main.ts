#!/usr/bin/env node
/**
 * CLI entry point: bind seats from the environment and serve the protocol.
 *
 * Exit codes: 0 clean shutdown, 2 startup failure, 64 usage error.
 */

import { writeFileSync } from "node:fs";
import { pathToFileURL } from "node:url";
import { parseArgs } from "node:util";

import { bindingsFromEnv } from "./bindings.js";
import { AdapterService, serveAdapter } from "./server.js";

const HELP = `usage: infstory-adapter [--port N] [--host HOST] [--seats LIST] [--ready-file PATH]

Serve the generative-seat wire protocol over HTTP.

  --port N          port to bind, 0 for ephemeral (default 8901)
  --host HOST       interface to bind (default 127.0.0.1)
  --seats LIST      comma-separated seats to advertise (default all six);
                    overrides INFSTORY_ADAPTER_SEATS
  --ready-file PATH write the base URL here once listening
  --help            show this message

Seat bindings come from INFSTORY_ADAPTER_* environment variables; unset
seats run the deterministic stub engine.`;

export async function main(argv: string[] = process.argv.slice(2)): Promise<number> {
  let values: {
    port?: string;
    host?: string;
    seats?: string;
    "ready-file"?: string;
    help?: boolean;
  };
  try {
    ({ values } = parseArgs({
      args: argv,
      options: {
        port: { type: "string", default: "8901" },
        host: { type: "string", default: "127.0.0.1" },
        seats: { type: "string" },
        "ready-file": { type: "string" },
        help: { type: "boolean", default: false },
      },
    }));
  } catch (exc) {
    console.error((exc as Error).message);
    return 64;
  }
  if (values.help) {
    console.log(HELP);
    return 0;
  }

  const port = Number(values.port);
  if (!Number.isInteger(port) || port < 0 || port > 65535) {
    console.error(`--port: expected 0..65535, got '${values.port}'`);
    return 64;
  }

  let service: AdapterService;
  try {
    const env = { ...process.env };
    if (values.seats) env.INFSTORY_ADAPTER_SEATS = values.seats;
    service = new AdapterService(bindingsFromEnv(env));
  } catch (exc) {
    console.error((exc as Error).message);
    return 64;
  }

  let running;
  try {
    running = await serveAdapter(service, port, values.host);
  } catch (exc) {
    console.error(`cannot serve: ${(exc as Error).message}`);
    return 2;
  }

  if (values["ready-file"]) {
    writeFileSync(values["ready-file"], `${running.url}\n`);
  }
  console.log(`listening on ${running.url} (seats: ${service.seats.join(", ")})`);

  await new Promise<void>((resolve) => {
    process.once("SIGINT", () => resolve());
    process.once("SIGTERM", () => resolve());
  });
  console.log("stopping");
  await running.close();
  return 0;
}

if (process.argv[1] && import.meta.url === pathToFileURL(process.argv[1]).href) {
  main().then(
    (code) => process.exit(code),
    (exc) => {
      console.error(String(exc));
      process.exit(2);
    },
  );
}
