/** NDJSON parsing and the resumable stream client, against real captured
 * stream bytes and a live local server. */

import http from "node:http";
import { afterEach, describe, expect, it } from "vitest";

import { NdjsonParser, StreamClient, type StreamStatus } from "../src/stream.js";
import type { Frame } from "../src/types.js";
import { fixture, lcg, startMock, type MockServer } from "./helpers.js";

const STREAM_TEXT = fixture("stream.ndjson");
const STREAM_LINES = STREAM_TEXT.split("\n").filter((l) => l.trim().length > 0);
const STREAM_FRAMES = STREAM_LINES.map((l) => JSON.parse(l) as Frame);

describe("NdjsonParser", () => {
  it("parses the captured stream fed as one chunk", () => {
    const parser = new NdjsonParser();
    const frames = parser.feed(STREAM_TEXT);
    expect(frames).toEqual(STREAM_FRAMES);
    expect(parser.pending).toBe("");
  });

  it("is invariant to arbitrary chunk boundaries", () => {
    const rand = lcg(0xfeed);
    for (let round = 0; round < 5; round += 1) {
      const parser = new NdjsonParser();
      const frames: Frame[] = [];
      let pos = 0;
      while (pos < STREAM_TEXT.length) {
        const size = 1 + (rand() % 8192);
        frames.push(...parser.feed(STREAM_TEXT.slice(pos, pos + size)));
        pos += size;
      }
      expect(frames).toEqual(STREAM_FRAMES);
    }
  });

  it("holds a partial line until its newline arrives", () => {
    const parser = new NdjsonParser();
    const line = STREAM_LINES[0]!;
    expect(parser.feed(line.slice(0, 10))).toEqual([]);
    expect(parser.pending).toBe(line.slice(0, 10));
    const frames = parser.feed(`${line.slice(10)}\n`);
    expect(frames).toEqual([STREAM_FRAMES[0]]);
    expect(parser.pending).toBe("");
  });

  it("skips blank lines", () => {
    const parser = new NdjsonParser();
    const frames = parser.feed(`\n\n${STREAM_LINES[0]!}\n\n`);
    expect(frames).toHaveLength(1);
  });
});

describe("captured stream shape", () => {
  it("has contiguous sequence numbers ending in RunComplete", () => {
    const seqs = STREAM_FRAMES.map((f) => f.seq);
    expect(seqs[0]).toBe(1);
    for (let i = 1; i < seqs.length; i += 1) expect(seqs[i]).toBe(seqs[i - 1]! + 1);
    expect(STREAM_FRAMES.at(-1)?.kind).toBe("RunComplete");
  });

  it("carries one Decision frame per simulated event", () => {
    const last = STREAM_FRAMES.at(-1);
    if (last?.kind !== "RunComplete") throw new Error("fixture must end in RunComplete");
    const decisions = STREAM_FRAMES.filter((f) => f.kind === "Decision");
    expect(decisions).toHaveLength(last.data.decisions);
    expect(last.data.events).toBe(last.data.decisions);
  });
});

describe("StreamClient", () => {
  let mock: MockServer | null = null;
  let client: StreamClient | null = null;

  afterEach(async () => {
    client?.stop();
    client = null;
    if (mock !== null) await mock.close();
    mock = null;
  });

  it("delivers frames in order and resumes after a dropped connection without duplicates", async () => {
    const cut = 5;
    const total = 12;
    const lines = STREAM_LINES.slice(0, total);
    let connection = 0;
    mock = await startMock((req, res) => {
      if (!req.path.startsWith("/v1/events/stream")) return undefined;
      connection += 1;
      res.writeHead(200, { "Content-Type": "application/x-ndjson" });
      if (connection === 1) {
        // First connection: frames 1..cut, then die mid-stream. The
        // write callback guarantees the bytes flush before the socket
        // is torn down.
        res.write(lines.slice(0, cut).join("\n") + "\n", () => res.destroy());
        return "handled";
      }
      res.write(lines.slice(cut).join("\n") + "\n");
      return "handled";
    });

    const statuses: StreamStatus[] = [];
    const frames = await new Promise<Frame[]>((resolve) => {
      const collected: Frame[] = [];
      client = new StreamClient(
        mock!.url,
        {
          onFrame: (frame) => {
            collected.push(frame);
            if (collected.length === total) resolve(collected);
          },
          onStatus: (s) => statuses.push(s),
        },
        { retryDelayMs: 10 },
      );
      client.start();
    });

    expect(frames.map((f) => f.seq)).toEqual(lines.map((_, i) => i + 1));
    expect(connection).toBe(2);
    // The reconnect carried the cursor of the last delivered frame.
    expect(mock.requests[1]!.path).toContain(`from_seq=${cut}`);
    expect(statuses).toContain("live");
    expect(statuses).toContain("stale");
    expect(client!.lastSeq).toBe(total);
  });

  it("ignores heartbeats and surfaces gaps", async () => {
    mock = await startMock((req, res) => {
      if (!req.path.startsWith("/v1/events/stream")) return undefined;
      res.writeHead(200, { "Content-Type": "application/x-ndjson" });
      res.write('{"kind":"Heartbeat","seq":0,"wall_ts":1.0}\n');
      res.write('{"kind":"Gap","dropped":7,"seq":41}\n');
      res.write(STREAM_LINES[0]! + "\n");
      return "handled";
    });

    const gaps: number[] = [];
    const frame = await new Promise<Frame>((resolve) => {
      client = new StreamClient(
        mock!.url,
        { onFrame: resolve, onGap: (dropped) => gaps.push(dropped) },
        { retryDelayMs: 10 },
      );
      client.start();
    });
    expect(frame).toEqual(STREAM_FRAMES[0]);
    expect(gaps).toEqual([7]);
    expect(client!.droppedTotal).toBe(7);
  });

  it("drops frames at or below the cursor after an overlapping replay", async () => {
    mock = await startMock((req, res) => {
      if (!req.path.startsWith("/v1/events/stream")) return undefined;
      res.writeHead(200, { "Content-Type": "application/x-ndjson" });
      // Replay overlap: frames 1..6 even though the client asked from 4.
      res.write(STREAM_LINES.slice(0, 6).join("\n") + "\n");
      return "handled";
    });

    const seqs = await new Promise<number[]>((resolve) => {
      const got: number[] = [];
      client = new StreamClient(
        mock!.url,
        {
          onFrame: (f) => {
            got.push(f.seq);
            if (got.length === 2) resolve(got);
          },
        },
        { retryDelayMs: 10, fromSeq: 4 },
      );
      client.start();
    });
    expect(seqs).toEqual([5, 6]);
  });

  it("requests a kinds filter when configured", async () => {
    let seenPath = "";
    mock = await startMock((req, res) => {
      if (!req.path.startsWith("/v1/events/stream")) return undefined;
      seenPath = req.path;
      res.writeHead(200, { "Content-Type": "application/x-ndjson" });
      const metric = STREAM_LINES.find((l) => l.includes('"Metric"'))!;
      res.write(metric + "\n");
      return "handled";
    });

    await new Promise<Frame>((resolve) => {
      client = new StreamClient(
        mock!.url,
        { onFrame: resolve },
        { retryDelayMs: 10, kinds: ["Metric", "RunComplete"] },
      );
      client.start();
    });
    expect(seenPath).toContain("kinds=Metric%2CRunComplete");
  });

  it("stop() aborts an open connection", async () => {
    let sawRequest = false;
    const server = http.createServer((req, res) => {
      sawRequest = true;
      res.writeHead(200, { "Content-Type": "application/x-ndjson" });
      // Never write a frame; the client should abort cleanly.
    });
    await new Promise<void>((r) => server.listen(0, "127.0.0.1", r));
    const addr = server.address() as import("node:net").AddressInfo;
    client = new StreamClient(
      `http://127.0.0.1:${addr.port}`,
      { onFrame: () => undefined },
      { retryDelayMs: 10 },
    );
    client.start();
    await new Promise((r) => setTimeout(r, 50));
    expect(sawRequest).toBe(true);
    client.stop();
    expect(client.status).toBe("stopped");
    server.closeAllConnections();
    await new Promise<void>((r) => server.close(() => r()));
    client = null;
  });
});
