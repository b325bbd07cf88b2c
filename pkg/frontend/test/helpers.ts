/** Shared test scaffolding: fixture loading and a scriptable HTTP server.
 *
 * Fixtures under test/fixtures/ are byte-for-byte captures of real
 * gateway responses (see scripts/capture_fixtures.py). Tests replay them
 * through an in-process server so the client code exercises genuine
 * transport paths without a Python backend.
 */

import { readFileSync } from "node:fs";
import http from "node:http";
import type { AddressInfo } from "node:net";
import path from "node:path";
import { fileURLToPath } from "node:url";

const FIXTURE_DIR = path.join(path.dirname(fileURLToPath(import.meta.url)), "fixtures");

export function fixture(name: string): string {
  return readFileSync(path.join(FIXTURE_DIR, name), "utf-8");
}

export function fixtureJson<T>(name: string): T {
  return JSON.parse(fixture(name)) as T;
}

export interface RecordedRequest {
  method: string;
  path: string;
  body: string;
}

/** Return a JSON reply, `"handled"` if the handler wrote the response
 * itself (streaming), or undefined for a 404. */
export type MockHandler = (
  req: RecordedRequest,
  res: http.ServerResponse,
) => { status: number; body: string } | "handled" | undefined;

export interface MockServer {
  url: string;
  requests: RecordedRequest[];
  close: () => Promise<void>;
}

export async function startMock(handle: MockHandler): Promise<MockServer> {
  const requests: RecordedRequest[] = [];
  const server = http.createServer((req, res) => {
    const chunks: Buffer[] = [];
    req.on("data", (chunk: Buffer) => chunks.push(chunk));
    req.on("end", () => {
      const recorded: RecordedRequest = {
        method: req.method ?? "",
        path: req.url ?? "",
        body: Buffer.concat(chunks).toString("utf-8"),
      };
      requests.push(recorded);
      const out = handle(recorded, res);
      if (out === "handled") return;
      if (out === undefined) {
        res.writeHead(404, { "Content-Type": "application/json" });
        res.end('{"error": "not found"}');
        return;
      }
      res.writeHead(out.status, { "Content-Type": "application/json" });
      res.end(out.body);
    });
  });
  await new Promise<void>((resolve) => server.listen(0, "127.0.0.1", resolve));
  const { port } = server.address() as AddressInfo;
  return {
    url: `http://127.0.0.1:${port}`,
    requests,
    close: () =>
      new Promise((resolve) => {
        server.closeAllConnections();
        server.close(() => resolve());
      }),
  };
}

/** Deterministic pseudo-random ints for chunk-boundary fuzzing. */
export function lcg(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state * 1664525 + 1013904223) >>> 0;
    return state;
  };
}
