/**
 * Query state: the single source of truth behind every control.
 *
 * The state serializes to a QuerySpec (the wire contract) and to a URL
 * fragment so sessions are shareable. All mutations are pure functions
 * returning new state objects; the store layer decides whether a change
 * re-queries (debounced) or is a pure view change.
 */

import type {
  FilterJson,
  LayoutJson,
  QuerySpecJson,
  TermJson,
  ViewMode,
} from "./types.js";

export interface TermState {
  kind: "text" | "image" | "doc";
  /** text content, upload token, or doc_id depending on kind */
  value: string;
  /** human label for image terms (file name); defaults to value */
  label?: string;
  weight: number;
}

export interface CanvasParams {
  n_neighbors: number;
  min_dist: number;
  epochs: number;
  seed: number;
}

export interface UiQueryState {
  terms: TermState[];
  pluginWeights: Record<string, number>;
  facetSelections: Record<string, string[]>;
  yearRanges: Record<string, [number, number]>;
  keyword: string;
  view: ViewMode;
  offset: number;
  limit: number;
  clusterCount: number | null;
  canvas: CanvasParams;
}

export const MAX_TERM_WEIGHT = 4;
export const DEFAULT_LIMIT = 60;

export function initialState(): UiQueryState {
  return {
    terms: [],
    pluginWeights: {},
    facetSelections: {},
    yearRanges: {},
    keyword: "",
    view: "grid",
    offset: 0,
    limit: DEFAULT_LIMIT,
    clusterCount: null,
    canvas: { n_neighbors: 15, min_dist: 0.1, epochs: 200, seed: 0 },
  };
}

export function clampWeight(w: number): number {
  if (!Number.isFinite(w)) return 1;
  const clamped = Math.min(MAX_TERM_WEIGHT, Math.max(-MAX_TERM_WEIGHT, w));
  return clamped === 0 ? 0 : clamped; // canonicalize -0 (JSON drops the sign)
}

/** True when the state describes an executable query. */
export function canQuery(state: UiQueryState): boolean {
  return state.terms.some((t) => t.weight > 0);
}

export function toQuerySpec(state: UiQueryState): QuerySpecJson {
  const terms: TermJson[] = state.terms.map((t) => {
    const weight = clampWeight(t.weight);
    if (t.kind === "text") return { text: t.value, weight };
    if (t.kind === "doc") return { doc_id: t.value, weight };
    return { image_token: t.value, weight };
  });
  const filters: FilterJson[] = [];
  for (const field of Object.keys(state.facetSelections).sort()) {
    const values = state.facetSelections[field];
    if (values && values.length > 0) filters.push({ field, values: [...values] });
  }
  for (const field of Object.keys(state.yearRanges).sort()) {
    const range = state.yearRanges[field];
    if (range) filters.push({ field, range: [range[0], range[1]] });
  }
  let layout: LayoutJson;
  if (state.view === "carousel") {
    layout = state.clusterCount
      ? { mode: "clusters", k: state.clusterCount, seed: 0 }
      : { mode: "clusters", seed: 0 };
  } else if (state.view === "canvas") {
    layout = { mode: "canvas", ...state.canvas };
  } else {
    layout = { mode: "grid" };
  }
  const spec: QuerySpecJson = {
    terms,
    page: { offset: state.offset, limit: state.limit },
    layout,
  };
  if (Object.keys(state.pluginWeights).length > 0) {
    spec.plugin_weights = { ...state.pluginWeights };
  }
  if (filters.length > 0) spec.filters = filters;
  if (state.keyword.trim() !== "") spec.keyword_query = state.keyword.trim();
  return spec;
}

// -- mutations ------------------------------------------------------------

function withPageReset(state: UiQueryState): UiQueryState {
  return { ...state, offset: 0 };
}

export function addTerm(state: UiQueryState, term: TermState): UiQueryState {
  return withPageReset({ ...state, terms: [...state.terms, term] });
}

export function removeTerm(state: UiQueryState, index: number): UiQueryState {
  const terms = state.terms.filter((_, i) => i !== index);
  return withPageReset({ ...state, terms });
}

export function setTermWeight(state: UiQueryState, index: number, weight: number): UiQueryState {
  const terms = state.terms.map((t, i) =>
    i === index ? { ...t, weight: clampWeight(weight) } : t,
  );
  return withPageReset({ ...state, terms });
}

export function setPluginWeight(state: UiQueryState, plugin: string, weight: number): UiQueryState {
  const pluginWeights = { ...state.pluginWeights, [plugin]: Math.max(0, weight) };
  return withPageReset({ ...state, pluginWeights });
}

export function toggleFacetValue(state: UiQueryState, field: string, value: string): UiQueryState {
  const current = state.facetSelections[field] ?? [];
  const next = current.includes(value)
    ? current.filter((v) => v !== value)
    : [...current, value];
  const facetSelections = { ...state.facetSelections };
  if (next.length > 0) facetSelections[field] = next;
  else delete facetSelections[field];
  return withPageReset({ ...state, facetSelections });
}

export function setYearRange(
  state: UiQueryState, field: string, range: [number, number] | null,
): UiQueryState {
  const yearRanges = { ...state.yearRanges };
  if (range) yearRanges[field] = range;
  else delete yearRanges[field];
  return withPageReset({ ...state, yearRanges });
}

export function setKeyword(state: UiQueryState, keyword: string): UiQueryState {
  return withPageReset({ ...state, keyword });
}

export function setView(state: UiQueryState, view: ViewMode): UiQueryState {
  return { ...state, view };
}

export function setPage(state: UiQueryState, offset: number): UiQueryState {
  return { ...state, offset: Math.max(0, offset) };
}

/** Active filter chips shown above the results. */
export interface FilterChip {
  field: string;
  label: string;
  remove: (state: UiQueryState) => UiQueryState;
}

export function filterChips(state: UiQueryState): FilterChip[] {
  const chips: FilterChip[] = [];
  for (const field of Object.keys(state.facetSelections).sort()) {
    for (const value of state.facetSelections[field] ?? []) {
      chips.push({
        field,
        label: `${field}: ${value}`,
        remove: (s) => toggleFacetValue(s, field, value),
      });
    }
  }
  for (const field of Object.keys(state.yearRanges).sort()) {
    const range = state.yearRanges[field];
    if (!range) continue;
    chips.push({
      field,
      label: `${field}: ${range[0]}–${range[1]}`,
      remove: (s) => setYearRange(s, field, null),
    });
  }
  return chips;
}

// -- URL fragment (shareable sessions) --------------------------------------

export function encodeStateToFragment(state: UiQueryState): string {
  return "#q=" + encodeURIComponent(JSON.stringify(state));
}

export function decodeStateFromFragment(fragment: string): UiQueryState | null {
  const match = /^#q=(.+)$/.exec(fragment);
  if (!match || match[1] === undefined) return null;
  try {
    const raw = JSON.parse(decodeURIComponent(match[1])) as Partial<UiQueryState>;
    const base = initialState();
    const state: UiQueryState = {
      ...base,
      ...raw,
      terms: Array.isArray(raw.terms)
        ? raw.terms
            .filter((t): t is TermState =>
              !!t && (t.kind === "text" || t.kind === "image" || t.kind === "doc")
              && typeof t.value === "string")
            .map((t) => ({ ...t, weight: clampWeight(Number(t.weight)) }))
        : [],
      canvas: { ...base.canvas, ...(raw.canvas ?? {}) },
    };
    return state;
  } catch {
    return null;
  }
}
