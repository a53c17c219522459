import { afterEach, describe, expect, it, vi } from "vitest";

import { ApiError, fetchSegment, postQuery, statusLabel } from "../src/api.js";

const BASE = "http://api.test";

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

afterEach(() => {
  vi.unstubAllGlobals();
});

describe("postQuery", () => {
  it("POSTs the text as JSON and returns the parsed result", async () => {
    const payload = {
      location_name: "Chennai",
      lat: 13.0827,
      lon: 80.2707,
      image_url: `${BASE}/images/sat_1_aaaaaa.png`,
      overlay_url: `${BASE}/images/sat_1_bbbbbb.png`,
      flood_fraction: 0.42,
      message: "ok",
    };
    const fetchMock = vi.fn().mockResolvedValue(jsonResponse(payload));
    vi.stubGlobal("fetch", fetchMock);

    const result = await postQuery("flood in Chennai", BASE);
    expect(result).toEqual(payload);
    expect(fetchMock).toHaveBeenCalledTimes(1);
    const [url, init] = fetchMock.mock.calls[0];
    expect(url).toBe(`${BASE}/query`);
    expect(init.method).toBe("POST");
    expect(init.headers["content-type"]).toBe("application/json");
    expect(JSON.parse(init.body)).toEqual({ text: "flood in Chennai" });
  });

  it("surfaces the server detail on an error status", async () => {
    const fetchMock = vi
      .fn()
      .mockResolvedValue(jsonResponse({ detail: "no scene near that point" }, 404));
    vi.stubGlobal("fetch", fetchMock);

    const err = await postQuery("flood in Chennai", BASE).catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(404);
    expect(err.detail).toBe("no scene near that point");
  });

  it("falls back to the HTTP status when the error body is not JSON", async () => {
    const fetchMock = vi
      .fn()
      .mockResolvedValue(new Response("boom", { status: 500 }));
    vi.stubGlobal("fetch", fetchMock);

    const err = await postQuery("flood in Chennai", BASE).catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(500);
    expect(err.detail).toBe("HTTP 500");
  });

  it("maps network failures to status 0", async () => {
    const fetchMock = vi.fn().mockRejectedValue(new TypeError("fetch failed"));
    vi.stubGlobal("fetch", fetchMock);

    const err = await postQuery("flood in Chennai", BASE).catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(0);
    expect(err.detail).toBe("could not reach the server");
  });
});

describe("fetchSegment", () => {
  it("encodes the coordinates and threshold as query parameters", async () => {
    const payload = {
      image_url: `${BASE}/images/sat_2_cccccc.png`,
      overlay_url: `${BASE}/images/sat_2_dddddd.png`,
      flood_fraction: 0.17,
    };
    const fetchMock = vi.fn().mockResolvedValue(jsonResponse(payload));
    vi.stubGlobal("fetch", fetchMock);

    const result = await fetchSegment(13.0827, 80.2707, 0.7, BASE);
    expect(result).toEqual(payload);
    const [url] = fetchMock.mock.calls[0];
    const parsed = new URL(url);
    expect(parsed.pathname).toBe("/segment");
    expect(parsed.searchParams.get("lat")).toBe("13.0827");
    expect(parsed.searchParams.get("lon")).toBe("80.2707");
    expect(parsed.searchParams.get("threshold")).toBe("0.7");
  });

  it("forwards the abort signal and rethrows aborts untouched", async () => {
    const controller = new AbortController();
    const fetchMock = vi.fn().mockImplementation((_url, init) => {
      expect(init.signal).toBe(controller.signal);
      return Promise.reject(new DOMException("aborted", "AbortError"));
    });
    vi.stubGlobal("fetch", fetchMock);

    const err = await fetchSegment(1, 2, 0.5, BASE, controller.signal).catch((e) => e);
    expect(err).not.toBeInstanceOf(ApiError);
    expect(err.name).toBe("AbortError");
  });
});

describe("statusLabel", () => {
  it("describes each failure mode in plain language", () => {
    expect(statusLabel(404)).toBe("location not found");
    expect(statusLabel(422)).toBe("no location found in that message");
    expect(statusLabel(502)).toBe("service backend unavailable");
    expect(statusLabel(0)).toBe("server unreachable");
    expect(statusLabel(500)).toBe("request failed");
  });
});
