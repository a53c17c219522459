import { describe, expect, it } from "vitest";

import {
  activeResult,
  clampThreshold,
  initialState,
  reduce,
  type AppState,
  type Event,
} from "../src/state.js";
import type { QueryResult, SegmentResult } from "../src/types.js";

function sampleResult(overrides: Partial<QueryResult> = {}): QueryResult {
  return {
    location_name: "Chennai",
    lat: 13.0827,
    lon: 80.2707,
    image_url: "http://api/images/sat_1_aaaaaa.png",
    overlay_url: "http://api/images/sat_1_bbbbbb.png",
    flood_fraction: 0.42,
    message: "Latest imagery near Chennai shows 42.0% of the scene flagged as water.",
    ...overrides,
  };
}

function replay(events: Event[]): AppState {
  return events.reduce(reduce, initialState());
}

describe("reduce", () => {
  it("appends the user message and marks the app busy on submit", () => {
    const state = replay([{ type: "submit", text: "flood in Chennai" }]);
    expect(state.busy).toBe(true);
    expect(state.messages).toHaveLength(1);
    expect(state.messages[0]).toEqual({ role: "user", text: "flood in Chennai" });
  });

  it("attaches the result to a system message", () => {
    const result = sampleResult();
    const state = replay([
      { type: "submit", text: "flood in Chennai" },
      { type: "result", result },
    ]);
    expect(state.busy).toBe(false);
    expect(state.messages).toHaveLength(2);
    expect(state.messages[1].role).toBe("system");
    expect(state.messages[1].result).toEqual(result);
    expect(activeResult(state)).toEqual(result);
  });

  it("keeps history when a query fails", () => {
    const state = replay([
      { type: "submit", text: "flood in Chennai" },
      { type: "result", result: sampleResult() },
      { type: "submit", text: "Flood risk near Atlantis" },
      { type: "failure", text: "location not found (no coordinates for 'Atlantis')" },
    ]);
    expect(state.messages).toHaveLength(4);
    expect(state.messages[3].error).toBe(true);
    expect(state.messages[1].result).toBeDefined();
    expect(state.busy).toBe(false);
  });

  it("clamps threshold moves into the slider range", () => {
    expect(clampThreshold(0.5)).toBe(0.5);
    expect(clampThreshold(0.01)).toBe(0.05);
    expect(clampThreshold(2)).toBe(0.95);
    expect(clampThreshold(Number.NaN)).toBe(0.5);
    const state = replay([{ type: "threshold", value: 0.99 }]);
    expect(state.threshold).toBe(0.95);
  });

  it("refresh patches only the newest card", () => {
    const older = sampleResult({ location_name: "Paris", flood_fraction: 0.1 });
    const newer = sampleResult();
    const refreshed: SegmentResult = {
      image_url: "http://api/images/sat_2_cccccc.png",
      overlay_url: "http://api/images/sat_2_dddddd.png",
      flood_fraction: 0.17,
    };
    const state = replay([
      { type: "result", result: older },
      { type: "result", result: newer },
      { type: "refresh", result: refreshed },
    ]);
    expect(state.messages[0].result?.flood_fraction).toBe(0.1);
    expect(state.messages[1].result?.flood_fraction).toBe(0.17);
    expect(state.messages[1].result?.overlay_url).toBe(refreshed.overlay_url);
    expect(activeResult(state)?.flood_fraction).toBe(0.17);
  });

  it("failed refresh keeps the prior imagery and raises a toast", () => {
    const result = sampleResult();
    const state = replay([
      { type: "result", result },
      { type: "refresh_failed", text: "server unreachable" },
    ]);
    expect(state.toast).toBe("server unreachable");
    expect(state.messages[0].result).toEqual(result);
    const cleared = reduce(state, { type: "toast_cleared" });
    expect(cleared.toast).toBeNull();
    expect(cleared.messages).toEqual(state.messages);
  });

  it("replaying the same events reproduces the view exactly", () => {
    const events: Event[] = [
      { type: "submit", text: "flood in Chennai" },
      { type: "result", result: sampleResult() },
      { type: "threshold", value: 0.7 },
      { type: "refresh", result: sampleResult({ flood_fraction: 0.2 }) },
      { type: "refresh_failed", text: "oops" },
    ];
    expect(replay(events)).toEqual(replay(events));
  });

  it("does not mutate the previous state", () => {
    const before = replay([{ type: "result", result: sampleResult() }]);
    const snapshot = JSON.stringify(before);
    reduce(before, { type: "refresh", result: sampleResult({ flood_fraction: 0 }) });
    reduce(before, { type: "submit", text: "more" });
    expect(JSON.stringify(before)).toBe(snapshot);
  });
});
