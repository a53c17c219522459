import { API_BASE_URL } from "./config.js";
import type { QueryResult, SegmentResult } from "./types.js";

export class ApiError extends Error {
  status: number;
  detail: string;

  constructor(status: number, detail: string) {
    super(detail);
    this.name = "ApiError";
    this.status = status;
    this.detail = detail;
  }
}

// Friendly one-liners per failure mode; the raw detail rides along separately.
export function statusLabel(status: number): string {
  if (status === 404) return "location not found";
  if (status === 422) return "no location found in that message";
  if (status === 502) return "service backend unavailable";
  if (status === 0) return "server unreachable";
  return "request failed";
}

async function readDetail(response: Response): Promise<string> {
  try {
    const body = await response.json();
    if (body && typeof body.detail === "string") return body.detail;
  } catch {
    // non-JSON error body; fall through
  }
  return `HTTP ${response.status}`;
}

async function request(url: string, init?: RequestInit): Promise<unknown> {
  let response: Response;
  try {
    response = await fetch(url, init);
  } catch (err) {
    if (err instanceof DOMException && err.name === "AbortError") throw err;
    throw new ApiError(0, "could not reach the server");
  }
  if (!response.ok) {
    throw new ApiError(response.status, await readDetail(response));
  }
  return response.json();
}

export async function postQuery(
  text: string,
  base: string = API_BASE_URL,
): Promise<QueryResult> {
  return (await request(`${base}/query`, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify({ text }),
  })) as QueryResult;
}

export async function fetchSegment(
  lat: number,
  lon: number,
  threshold: number,
  base: string = API_BASE_URL,
  signal?: AbortSignal,
): Promise<SegmentResult> {
  const params = new URLSearchParams({
    lat: String(lat),
    lon: String(lon),
    threshold: String(threshold),
  });
  return (await request(`${base}/segment?${params}`, { signal })) as SegmentResult;
}
