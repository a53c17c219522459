import type { AppState } from "./state.js";
import { activeResult } from "./state.js";
import type { ChatMessage, QueryResult } from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

export function formatPercent(fraction: number): string {
  return `${(fraction * 100).toFixed(1)}%`;
}

export function formatCoords(lat: number, lon: number): string {
  return `${lat.toFixed(4)}, ${lon.toFixed(4)}`;
}

function renderCard(result: QueryResult): string {
  return [
    `<div class="card">`,
    `<div class="card-title">${escapeHtml(result.location_name)}</div>`,
    `<div class="card-coords">${formatCoords(result.lat, result.lon)}</div>`,
    `<div class="card-images">`,
    `<figure><img class="scene" src="${escapeHtml(result.image_url)}" alt="scene"><figcaption>original</figcaption></figure>`,
    `<figure><img class="overlay" src="${escapeHtml(result.overlay_url)}" alt="flood overlay"><figcaption>flood overlay</figcaption></figure>`,
    `</div>`,
    `<div class="card-fraction">flooded: <strong>${formatPercent(result.flood_fraction)}</strong></div>`,
    `</div>`,
  ].join("");
}

export function renderMessage(message: ChatMessage): string {
  const classes = ["bubble", message.role];
  if (message.error) classes.push("error");
  const card = message.result ? renderCard(message.result) : "";
  return `<div class="${classes.join(" ")}"><div class="bubble-text">${escapeHtml(
    message.text,
  )}</div>${card}</div>`;
}

export function renderMessages(messages: ChatMessage[]): string {
  if (!messages.length) {
    return `<div class="empty">Ask about a place, e.g. "What is the flood situation in Chennai".</div>`;
  }
  return messages.map(renderMessage).join("");
}

export function renderToast(toast: string | null): string {
  return toast ? `<div class="toast">${escapeHtml(toast)}</div>` : "";
}

export function renderThresholdLabel(state: AppState): string {
  const result = activeResult(state);
  const fraction = result ? ` &middot; flooded ${formatPercent(result.flood_fraction)}` : "";
  return `threshold ${state.threshold.toFixed(2)}${fraction}`;
}

export function renderApp(state: AppState): string {
  return `${renderMessages(state.messages)}${renderToast(state.toast)}`;
}
