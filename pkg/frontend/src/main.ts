/** DOM wiring; all rendering goes through the pure functions in render.ts. */

import { triggerDownload } from "./download";
import { renderErrorBanner, renderExplainReport, renderResultsTable } from "./render";
import { clampThreshold, UiSession } from "./session";
import type { Mode } from "./types";

const session = new UiSession("");

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function refresh(): void {
  const results = el<HTMLDivElement>("results");
  const explain = el<HTMLDivElement>("explanations");
  const download = el<HTMLButtonElement>("download");
  const explainButton = el<HTMLButtonElement>("explain");

  if (session.error) {
    results.innerHTML = renderErrorBanner(session.error);
    explain.innerHTML = "";
  } else if (session.lastClassify) {
    results.innerHTML = renderResultsTable(session.lastClassify.payload);
    explain.innerHTML = session.lastExplain
      ? session.lastExplain.payload.results.map(renderExplainReport).join("")
      : "";
  } else {
    results.innerHTML = "";
    explain.innerHTML = "";
  }
  download.disabled = !session.canDownload;
  explainButton.disabled = !session.canDownload;
}

function bind(): void {
  const thresholdInput = el<HTMLInputElement>("threshold");
  const thresholdLabel = el<HTMLSpanElement>("threshold-value");

  thresholdInput.addEventListener("input", () => {
    session.setThreshold(clampThreshold(Number(thresholdInput.value)));
    thresholdLabel.textContent = session.threshold.toFixed(2);
  });

  el<HTMLSelectElement>("mode").addEventListener("change", (event) => {
    session.mode = (event.target as HTMLSelectElement).value as Mode;
  });

  el<HTMLTextAreaElement>("items").addEventListener("input", (event) => {
    session.rawItems = (event.target as HTMLTextAreaElement).value;
  });

  el<HTMLButtonElement>("submit").addEventListener("click", async () => {
    await session.submit();
    refresh();
  });

  el<HTMLButtonElement>("explain").addEventListener("click", async () => {
    await session.explain();
    refresh();
  });

  el<HTMLButtonElement>("download").addEventListener("click", () => {
    if (session.canDownload) {
      triggerDownload(session.downloadBody(), session.downloadFilename());
    }
  });

  thresholdLabel.textContent = session.threshold.toFixed(2);
  refresh();
}

document.addEventListener("DOMContentLoaded", bind);
