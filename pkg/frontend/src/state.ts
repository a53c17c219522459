import type { ChatMessage, QueryResult, SegmentResult } from "./types.js";

export const MIN_THRESHOLD = 0.05;
export const MAX_THRESHOLD = 0.95;
export const DEFAULT_THRESHOLD = 0.5;

export interface AppState {
  messages: ChatMessage[];
  threshold: number;
  busy: boolean;
  toast: string | null;
}

export type Event =
  | { type: "submit"; text: string }
  | { type: "result"; result: QueryResult }
  | { type: "failure"; text: string }
  | { type: "threshold"; value: number }
  | { type: "refresh"; result: SegmentResult }
  | { type: "refresh_failed"; text: string }
  | { type: "toast_cleared" };

export function initialState(): AppState {
  return { messages: [], threshold: DEFAULT_THRESHOLD, busy: false, toast: null };
}

export function clampThreshold(value: number): number {
  if (Number.isNaN(value)) return DEFAULT_THRESHOLD;
  return Math.min(MAX_THRESHOLD, Math.max(MIN_THRESHOLD, value));
}

// The newest message carrying a result is the card the slider steers.
export function activeResult(state: AppState): QueryResult | null {
  for (let i = state.messages.length - 1; i >= 0; i--) {
    const result = state.messages[i].result;
    if (result) return result;
  }
  return null;
}

function append(state: AppState, message: ChatMessage): ChatMessage[] {
  return [...state.messages, message];
}

// Pure transition function: the view is always re-derivable by replaying
// the same events from the initial state.
export function reduce(state: AppState, event: Event): AppState {
  switch (event.type) {
    case "submit":
      return {
        ...state,
        busy: true,
        toast: null,
        messages: append(state, { role: "user", text: event.text }),
      };
    case "result":
      return {
        ...state,
        busy: false,
        messages: append(state, {
          role: "system",
          text: event.result.message,
          result: event.result,
        }),
      };
    case "failure":
      return {
        ...state,
        busy: false,
        messages: append(state, { role: "system", text: event.text, error: true }),
      };
    case "threshold":
      return { ...state, threshold: clampThreshold(event.value) };
    case "refresh": {
      let patched = false;
      const messages = [...state.messages];
      for (let i = messages.length - 1; i >= 0; i--) {
        const result = messages[i].result;
        if (result && !patched) {
          patched = true;
          messages[i] = {
            ...messages[i],
            result: {
              ...result,
              overlay_url: event.result.overlay_url,
              image_url: event.result.image_url,
              flood_fraction: event.result.flood_fraction,
            },
          };
        }
      }
      return { ...state, messages };
    }
    case "refresh_failed":
      // prior imagery stays on screen; only a transient toast appears
      return { ...state, toast: event.text };
    case "toast_cleared":
      return { ...state, toast: null };
  }
}
