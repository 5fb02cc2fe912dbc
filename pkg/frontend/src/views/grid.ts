/** Relevance grid with detail-on-demand panel. */

import { clear, el, fmtScore } from "../dom.js";
import type { SelectionSet } from "../selection.js";
import type { Tile } from "../viewmodel.js";

export interface GridCallbacks {
  onOpenDetail: (docId: string) => void;
  onToggleSelect: (docId: string) => void;
}

const PLACEHOLDER =
  "data:image/svg+xml," +
  encodeURIComponent(
    '<svg xmlns="http://www.w3.org/2000/svg" width="120" height="120">' +
    '<rect width="120" height="120" fill="#ddd"/>' +
    '<text x="60" y="64" text-anchor="middle" fill="#888" font-size="11">no image</text></svg>');

export function renderGrid(
  root: HTMLElement, tiles: Tile[], selection: SelectionSet, cb: GridCallbacks,
): void {
  clear(root);
  if (tiles.length === 0) {
    root.append(el("p", { class: "empty-state" },
      "No results. Add a reference term or loosen the filters."));
    return;
  }
  const grid = el("div", { class: "grid" });
  for (const tile of tiles) {
    const img = el("img", { src: tile.imageRef || PLACEHOLDER, alt: tile.title });
    img.addEventListener("error", () => {
      img.src = PLACEHOLDER; // broken image URL: placeholder, layout intact
    });
    const card = el(
      "figure",
      {
        class: "tile" + (selection.has(tile.docId) ? " selected" : ""),
        "data-doc": tile.docId,
        "data-rank": String(tile.rank),
      },
      img,
      el("figcaption", {},
        el("span", { class: "rank" }, `#${tile.rank}`),
        el("span", { class: "score", title: "final score" }, fmtScore(tile.score)),
        el("span", { class: "title" }, tile.title)),
    );
    card.addEventListener("click", (event) => {
      if ((event as MouseEvent).shiftKey) cb.onToggleSelect(tile.docId);
      else cb.onOpenDetail(tile.docId);
    });
    grid.append(card);
  }
  root.append(grid);
}

export interface DetailData {
  docId: string;
  title: string;
  imageRef: string;
  metadata: Record<string, string[]>;
  score: number | null;
  perPlugin: Record<string, number>;
}

export function renderDetailPanel(
  root: HTMLElement, data: DetailData,
  onUseAsReference: (docId: string) => void,
  onClose: () => void,
): void {
  clear(root);
  const close = el("button", { class: "close" }, "×");
  close.addEventListener("click", onClose);
  const useRef = el("button", { class: "use-reference" }, "Use as reference");
  useRef.addEventListener("click", () => onUseAsReference(data.docId));
  const scores = el("dl", { class: "plugin-scores" });
  if (data.score !== null) {
    scores.append(el("dt", {}, "final"), el("dd", {}, fmtScore(data.score)));
  }
  for (const plugin of Object.keys(data.perPlugin).sort()) {
    scores.append(
      el("dt", {}, plugin),
      el("dd", {}, fmtScore(data.perPlugin[plugin] ?? 0)));
  }
  const meta = el("dl", { class: "metadata" });
  for (const field of Object.keys(data.metadata).sort()) {
    meta.append(
      el("dt", {}, field),
      el("dd", {}, (data.metadata[field] ?? []).join(", ")));
  }
  root.append(
    el("aside", { class: "detail-panel", "data-doc": data.docId },
      close,
      el("img", { src: data.imageRef, alt: data.title }),
      el("h2", {}, data.title),
      scores, meta, useRef),
  );
}
