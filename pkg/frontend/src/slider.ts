import type { SegmentResult } from "./types.js";

export type SegmentFetch = (
  threshold: number,
  signal: AbortSignal,
) => Promise<SegmentResult>;

export interface RefreshCallbacks {
  onResult: (result: SegmentResult) => void;
  onError: (err: unknown) => void;
}

// Turns a stream of slider values into at most one request per interval,
// always ending on the latest value. A newer dispatch aborts the one still
// in flight, so stale overlays can never land on top of fresh ones.
export class ThresholdRefresher {
  private minIntervalMs: number;
  private fetchSegment: SegmentFetch;
  private callbacks: RefreshCallbacks;
  private lastDispatch = -Infinity;
  private pending: number | null = null;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private inflight: AbortController | null = null;

  constructor(
    fetchSegment: SegmentFetch,
    callbacks: RefreshCallbacks,
    minIntervalMs = 500,
  ) {
    this.fetchSegment = fetchSegment;
    this.callbacks = callbacks;
    this.minIntervalMs = minIntervalMs;
  }

  request(threshold: number): void {
    const now = Date.now();
    const wait = this.lastDispatch + this.minIntervalMs - now;
    if (wait <= 0) {
      this.dispatch(threshold, now);
      return;
    }
    this.pending = threshold;
    if (this.timer === null) {
      this.timer = setTimeout(() => {
        this.timer = null;
        if (this.pending !== null) {
          const value = this.pending;
          this.pending = null;
          this.dispatch(value, Date.now());
        }
      }, wait);
    }
  }

  private dispatch(threshold: number, now: number): void {
    this.lastDispatch = now;
    this.inflight?.abort();
    const controller = new AbortController();
    this.inflight = controller;
    this.fetchSegment(threshold, controller.signal).then(
      (result) => {
        if (controller.signal.aborted) return;
        this.callbacks.onResult(result);
      },
      (err) => {
        if (controller.signal.aborted) return;
        this.callbacks.onError(err);
      },
    );
  }

  cancel(): void {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    this.pending = null;
    this.inflight?.abort();
  }
}
