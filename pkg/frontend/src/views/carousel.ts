/** Cluster carousels: one horizontal row per k-means cluster. */

import { clear, el, fmtScore } from "../dom.js";
import type { CarouselRow } from "../viewmodel.js";

export function renderCarousel(
  root: HTMLElement, rows: CarouselRow[],
  onOpenDetail: (docId: string) => void,
): void {
  clear(root);
  if (rows.length === 0) {
    root.append(el("p", { class: "empty-state" },
      "No clusters to show; run a query first."));
    return;
  }
  for (const row of rows) {
    const strip = el("div", { class: "carousel-strip" });
    for (const tile of row.tiles) {
      const card = el("figure", { class: "tile", "data-doc": tile.docId },
        el("img", { src: tile.imageRef, alt: tile.title }),
        el("figcaption", {}, `#${tile.rank} · ${fmtScore(tile.score)}`));
      card.addEventListener("click", () => onOpenDetail(tile.docId));
      strip.append(card);
    }
    root.append(
      el("section", { class: "carousel-row", "data-cluster": String(row.clusterId) },
        el("h3", {}, `Cluster ${row.clusterId} (${row.size})`),
        strip),
    );
  }
}
