/**
 * Pure view-models: translate a ResultPage into what each view paints.
 * Kept DOM-free so contract tests run against recorded API fixtures.
 */

import type { DocSummaryJson, ResultEntryJson, ResultPageJson } from "./types.js";

export interface Tile {
  docId: string;
  rank: number;
  score: number;
  imageRef: string;
  title: string;
  perPlugin: Record<string, number>;
}

function tileOf(entry: ResultEntryJson, documents: Record<string, DocSummaryJson>): Tile {
  const doc = documents[entry.doc_id];
  return {
    docId: entry.doc_id,
    rank: entry.rank,
    score: entry.final_score,
    imageRef: doc?.image_ref ?? "",
    title: doc?.title ?? entry.doc_id,
    perPlugin: entry.per_plugin,
  };
}

/** Grid: tiles in rank order. */
export function gridTiles(page: ResultPageJson): Tile[] {
  const documents = page.documents ?? {};
  return [...page.results]
    .sort((a, b) => a.rank - b.rank)
    .map((entry) => tileOf(entry, documents));
}

export interface CarouselRow {
  clusterId: number;
  size: number;
  tiles: Tile[];
}

/**
 * Carousel: one horizontally scrollable row per cluster, rows ordered by
 * cluster size (desc, cluster id asc on ties); tiles in rank order.
 */
export function carouselRows(page: ResultPageJson): CarouselRow[] {
  const documents = page.documents ?? {};
  const byCluster = new Map<number, ResultEntryJson[]>();
  for (const entry of page.results) {
    if (entry.cluster_id === null || entry.cluster_id === undefined) continue;
    const bucket = byCluster.get(entry.cluster_id) ?? [];
    bucket.push(entry);
    byCluster.set(entry.cluster_id, bucket);
  }
  const rows: CarouselRow[] = [];
  for (const [clusterId, entries] of byCluster) {
    entries.sort((a, b) => a.rank - b.rank);
    rows.push({
      clusterId,
      size: entries.length,
      tiles: entries.map((e) => tileOf(e, documents)),
    });
  }
  rows.sort((a, b) => b.size - a.size || a.clusterId - b.clusterId);
  return rows;
}

export interface CanvasPoint {
  docId: string;
  x: number;
  y: number;
  imageRef: string;
  title: string;
}

export interface CanvasModel {
  points: CanvasPoint[];
  /** entries without coordinates, listed in a sidebar (never dropped) */
  missing: Tile[];
  bounds: { minX: number; maxX: number; minY: number; maxY: number };
}

export function canvasModel(page: ResultPageJson): CanvasModel {
  const documents = page.documents ?? {};
  const coords = page.layout?.coords ?? {};
  const points: CanvasPoint[] = [];
  const missing: Tile[] = [];
  for (const entry of page.results) {
    const xy = entry.coords2d ?? coords[entry.doc_id] ?? null;
    if (xy === null) {
      missing.push(tileOf(entry, documents));
      continue;
    }
    const doc = documents[entry.doc_id];
    points.push({
      docId: entry.doc_id,
      x: xy[0],
      y: xy[1],
      imageRef: doc?.image_ref ?? "",
      title: doc?.title ?? entry.doc_id,
    });
  }
  for (const docId of Object.keys(coords).sort()) {
    if (!page.results.some((r) => r.doc_id === docId)) {
      const xy = coords[docId];
      if (!xy) continue;
      const doc = documents[docId];
      points.push({
        docId,
        x: xy[0],
        y: xy[1],
        imageRef: doc?.image_ref ?? "",
        title: doc?.title ?? docId,
      });
    }
  }
  let minX = Infinity;
  let maxX = -Infinity;
  let minY = Infinity;
  let maxY = -Infinity;
  for (const p of points) {
    minX = Math.min(minX, p.x);
    maxX = Math.max(maxX, p.x);
    minY = Math.min(minY, p.y);
    maxY = Math.max(maxY, p.y);
  }
  if (points.length === 0) {
    minX = minY = -1;
    maxX = maxY = 1;
  }
  return { points, missing, bounds: { minX, maxX, minY, maxY } };
}

export interface FacetPanelModel {
  field: string;
  displayName: string;
  values: { value: string; count: number; active: boolean }[];
}

export function facetPanels(
  counts: Record<string, Record<string, number>>,
  selections: Record<string, string[]>,
  displayNames: Record<string, string> = {},
): FacetPanelModel[] {
  return Object.keys(counts)
    .sort()
    .map((field) => {
      const active = new Set(selections[field] ?? []);
      const entries = counts[field] ?? {};
      const values = Object.keys(entries)
        .map((value) => ({ value, count: entries[value] ?? 0, active: active.has(value) }))
        .sort((a, b) => b.count - a.count || (a.value < b.value ? -1 : 1));
      return { field, displayName: displayNames[field] ?? field, values };
    });
}
