import { ApiError, fetchSegment, postQuery, statusLabel } from "./api.js";
import { renderApp, renderThresholdLabel } from "./render.js";
import {
  activeResult,
  initialState,
  reduce,
  type AppState,
  type Event,
} from "./state.js";
import { ThresholdRefresher } from "./slider.js";

const chat = document.getElementById("chat") as HTMLElement;
const form = document.getElementById("composer") as HTMLFormElement;
const input = document.getElementById("query-input") as HTMLInputElement;
const send = document.getElementById("send") as HTMLButtonElement;
const slider = document.getElementById("threshold") as HTMLInputElement;
const sliderLabel = document.getElementById("threshold-label") as HTMLElement;

let state: AppState = initialState();
let toastTimer: ReturnType<typeof setTimeout> | null = null;

function paint(): void {
  chat.innerHTML = renderApp(state);
  chat.scrollTop = chat.scrollHeight;
  sliderLabel.innerHTML = renderThresholdLabel(state);
  const hasCard = activeResult(state) !== null;
  slider.disabled = !hasCard;
  send.disabled = state.busy || input.value.trim() === "";
}

function dispatch(event: Event): void {
  state = reduce(state, event);
  if (state.toast && toastTimer === null) {
    toastTimer = setTimeout(() => {
      toastTimer = null;
      dispatch({ type: "toast_cleared" });
    }, 4000);
  }
  paint();
}

function errorText(err: unknown): string {
  if (err instanceof ApiError) return `${statusLabel(err.status)} (${err.detail})`;
  return "request failed";
}

const refresher = new ThresholdRefresher(
  (threshold, signal) => {
    const result = activeResult(state);
    if (!result) return Promise.reject(new Error("no active result"));
    return fetchSegment(result.lat, result.lon, threshold, undefined, signal);
  },
  {
    onResult: (result) => dispatch({ type: "refresh", result }),
    onError: (err) => dispatch({ type: "refresh_failed", text: errorText(err) }),
  },
);

form.addEventListener("submit", (event) => {
  event.preventDefault();
  const text = input.value.trim();
  if (!text || state.busy) return;
  input.value = "";
  dispatch({ type: "submit", text });
  postQuery(text).then(
    (result) => dispatch({ type: "result", result }),
    (err) => dispatch({ type: "failure", text: errorText(err) }),
  );
});

input.addEventListener("input", paint);

slider.addEventListener("input", () => {
  dispatch({ type: "threshold", value: Number(slider.value) });
  if (activeResult(state)) refresher.request(state.threshold);
});

paint();
