/** Small display helpers. Pure formatting — no security arithmetic. */

import type { RiskBand } from "./types.js";

/** Virtual milliseconds -> "h:mm:ss" for timeline labels and feed rows. */
export function fmtVirtual(ms: number): string {
  const total = Math.floor(ms / 1000);
  const h = Math.floor(total / 3600);
  const m = Math.floor((total % 3600) / 60);
  const s = total % 60;
  return `${h}:${String(m).padStart(2, "0")}:${String(s).padStart(2, "0")}`;
}

export function fmtScore(x: number | null | undefined, digits = 3): string {
  return x === null || x === undefined ? "—" : x.toFixed(digits);
}

export function fmtPercent(x: number | null | undefined): string {
  return x === null || x === undefined ? "—" : `${(100 * x).toFixed(1)}%`;
}

/** The band is the middle token of the server's bucket key
 * ("Api/High/intel") — read, not recomputed. */
export function bandOfBucket(bucket: string): RiskBand | null {
  const part = bucket.split("/")[1];
  return part === "Low" || part === "Medium" || part === "High" ? part : null;
}

export function intelFlagOfBucket(bucket: string): boolean {
  return bucket.split("/")[2] === "intel";
}
