/** Wire types shared with the HTTP service (mirrors the committed JSON schemas). */

export interface TextTermJson {
  text: string;
  weight: number;
}

export interface DocTermJson {
  doc_id: string;
  weight: number;
}

export interface ImageTermJson {
  image_token: string;
  weight: number;
}

export type TermJson = TextTermJson | DocTermJson | ImageTermJson;

export interface ValuesFilterJson {
  field: string;
  values: string[];
}

export interface RangeFilterJson {
  field: string;
  range: [number, number];
}

export type FilterJson = ValuesFilterJson | RangeFilterJson;

export type ViewMode = "grid" | "carousel" | "canvas";

export interface LayoutJson {
  mode: "grid" | "clusters" | "canvas";
  k?: number;
  n_neighbors?: number;
  min_dist?: number;
  epochs?: number;
  seed?: number;
}

export interface QuerySpecJson {
  terms: TermJson[];
  plugin_weights?: Record<string, number>;
  filters?: FilterJson[];
  keyword_query?: string | null;
  page?: { offset?: number; limit?: number };
  layout?: LayoutJson;
}

export interface ResultEntryJson {
  doc_id: string;
  final_score: number;
  rank: number;
  per_plugin: Record<string, number>;
  cluster_id: number | null;
  coords2d: [number, number] | null;
}

export interface DocSummaryJson {
  doc_id: string;
  collection_id?: string;
  image_ref: string;
  title: string | null;
  metadata: Record<string, string[]>;
}

export interface ResultPageJson {
  total: number;
  results: ResultEntryJson[];
  diagnostics: {
    warnings: string[];
    fused: Record<string, boolean>;
    uncovered?: Record<string, { count: number; sample: string[] }>;
    fallback?: string | null;
  };
  facet_counts: Record<string, Record<string, number>>;
  layout: {
    mode: "clusters" | "canvas";
    plugin?: string;
    k?: number;
    sse?: number;
    clusters?: Record<string, number>;
    method?: string;
    coords?: Record<string, [number, number]>;
    missing?: string[];
  } | null;
  documents?: Record<string, DocSummaryJson>;
}

export interface PluginManifestJson {
  name: string;
  version: string;
  modalities: string[];
  vector_dim: number;
  kind: "feature" | "classifier";
  deterministic?: boolean;
}

export interface FacetDefinitionJson {
  field: string;
  kind: "categorical" | "numeric-year";
  display_name: string;
}

export interface ExplainJson {
  doc_id: string;
  final_score: number | null;
  per_plugin: Record<string, number>;
  fused: Record<string, boolean>;
  uncovered_plugins: string[];
  filters: { filter: FilterJson; passed: boolean }[];
  keyword_match: boolean | null;
  warnings: string[];
}
