/** NDJSON frame stream client with sequence-cursor resume.
 *
 * The transport contract: one JSON frame per newline; every data frame
 * carries a global `seq`; reconnecting with `from_seq=<last seen>` replays
 * from the cursor, and the server inserts a `Gap` frame when the buffer no
 * longer reaches back that far. The client's job is to hide transport
 * noise (chunk boundaries, disconnects, duplicate replays) and hand the
 * application an in-order, de-duplicated frame sequence.
 */

import type { Frame } from "./types.js";

/** Incremental splitter: feed arbitrary chunks, get complete frames.
 * Holds the trailing partial line until its newline arrives. */
export class NdjsonParser {
  private tail = "";

  feed(chunk: string): Frame[] {
    const text = this.tail + chunk;
    const lines = text.split("\n");
    this.tail = lines.pop() ?? "";
    const frames: Frame[] = [];
    for (const line of lines) {
      const trimmed = line.trim();
      if (trimmed.length === 0) continue;
      frames.push(JSON.parse(trimmed) as Frame);
    }
    return frames;
  }

  /** Anything buffered but never newline-terminated (diagnostic). */
  get pending(): string {
    return this.tail;
  }
}

export type StreamStatus = "connecting" | "live" | "stale" | "stopped";

export interface StreamHandlers {
  onFrame: (frame: Frame) => void;
  onStatus?: (status: StreamStatus) => void;
  onGap?: (dropped: number) => void;
}

export interface StreamOptions {
  /** Restrict to these frame kinds (server-side filter). */
  kinds?: string[];
  /** Resume cursor; 0 means "from the beginning". */
  fromSeq?: number;
  /** Base delay between reconnect attempts, ms. Doubles up to 8x. */
  retryDelayMs?: number;
  fetchFn?: typeof fetch;
}

export class StreamClient {
  lastSeq: number;
  droppedTotal = 0;
  status: StreamStatus = "stopped";

  private readonly base: string;
  private readonly handlers: StreamHandlers;
  private readonly kinds?: string[];
  private readonly retryDelayMs: number;
  private readonly fetchFn: typeof fetch;
  private abort: AbortController | null = null;
  private stopped = true;
  private retryTimer: ReturnType<typeof setTimeout> | null = null;
  private attempt = 0;

  constructor(base: string, handlers: StreamHandlers, options: StreamOptions = {}) {
    this.base = base.replace(/\/$/, "");
    this.handlers = handlers;
    this.kinds = options.kinds;
    this.lastSeq = options.fromSeq ?? 0;
    this.retryDelayMs = options.retryDelayMs ?? 500;
    this.fetchFn = options.fetchFn ?? fetch;
  }

  start(): void {
    if (!this.stopped) return;
    this.stopped = false;
    void this.connectLoop();
  }

  stop(): void {
    this.stopped = true;
    if (this.retryTimer !== null) clearTimeout(this.retryTimer);
    this.retryTimer = null;
    this.abort?.abort();
    this.setStatus("stopped");
  }

  private setStatus(status: StreamStatus): void {
    this.status = status;
    this.handlers.onStatus?.(status);
  }

  private url(): string {
    const params = new URLSearchParams();
    if (this.lastSeq > 0) params.set("from_seq", String(this.lastSeq));
    if (this.kinds && this.kinds.length > 0) params.set("kinds", this.kinds.join(","));
    const query = params.toString();
    return `${this.base}/v1/events/stream${query ? `?${query}` : ""}`;
  }

  private async connectLoop(): Promise<void> {
    while (!this.stopped) {
      this.setStatus(this.attempt === 0 ? "connecting" : "stale");
      try {
        await this.readOnce();
      } catch {
        // fall through to retry
      }
      if (this.stopped) return;
      this.setStatus("stale");
      this.attempt += 1;
      const delay = this.retryDelayMs * Math.min(8, 2 ** Math.min(3, this.attempt - 1));
      await new Promise<void>((resolve) => {
        this.retryTimer = setTimeout(resolve, delay);
      });
    }
  }

  private async readOnce(): Promise<void> {
    this.abort = new AbortController();
    const response = await this.fetchFn(this.url(), { signal: this.abort.signal });
    if (!response.ok || response.body === null) {
      throw new Error(`stream request failed: ${response.status}`);
    }
    const reader = response.body.getReader();
    const decoder = new TextDecoder();
    const parser = new NdjsonParser();
    let seenFrame = false;
    for (;;) {
      const { done, value } = await reader.read();
      if (done) break;
      for (const frame of parser.feed(decoder.decode(value, { stream: true }))) {
        // Any frame — heartbeats included — proves the connection is healthy.
        if (!seenFrame) {
          seenFrame = true;
          this.attempt = 0;
          this.setStatus("live");
        }
        this.dispatch(frame);
      }
    }
  }

  private dispatch(frame: Frame): void {
    if (frame.kind === "Heartbeat") {
      return; // liveness only; the cursor does not move
    }
    if (frame.kind === "Gap") {
      this.droppedTotal += frame.dropped;
      this.handlers.onGap?.(frame.dropped);
      return;
    }
    // A reconnect replays from the cursor; anything at or below it is a
    // duplicate of a frame already delivered.
    if (frame.seq <= this.lastSeq) return;
    this.lastSeq = frame.seq;
    this.handlers.onFrame(frame);
  }
}
