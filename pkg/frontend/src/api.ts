/** Thin fetch client for the search service's JSON API. */

import type {
  ExplainJson,
  FacetDefinitionJson,
  PluginManifestJson,
  QuerySpecJson,
  ResultPageJson,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly code: string,
    message: string,
    readonly detail: Record<string, unknown> = {},
  ) {
    super(message);
  }
}

async function readJson(response: Response): Promise<unknown> {
  const body = (await response.json()) as Record<string, unknown>;
  if (!response.ok) {
    throw new ApiError(
      String(body["code"] ?? "internal"),
      String(body["message"] ?? response.statusText),
      (body["detail"] as Record<string, unknown>) ?? {},
    );
  }
  return body;
}

export class ApiClient {
  constructor(
    private readonly base: string = "",
    private readonly fetchFn: typeof fetch = fetch.bind(globalThis),
  ) {}

  async search(spec: QuerySpecJson): Promise<ResultPageJson> {
    const response = await this.fetchFn(`${this.base}/v1/search`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(spec),
    });
    return (await readJson(response)) as ResultPageJson;
  }

  async explain(spec: QuerySpecJson, docId: string): Promise<ExplainJson> {
    const response = await this.fetchFn(`${this.base}/v1/explain`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ spec, doc_id: docId }),
    });
    return (await readJson(response)) as ExplainJson;
  }

  async upload(data: Blob): Promise<string> {
    const response = await this.fetchFn(`${this.base}/v1/uploads`, {
      method: "POST",
      body: data,
    });
    const body = (await readJson(response)) as { upload_token: string };
    return body.upload_token;
  }

  async plugins(): Promise<PluginManifestJson[]> {
    const response = await this.fetchFn(`${this.base}/v1/plugins`);
    const body = (await readJson(response)) as { plugins: PluginManifestJson[] };
    return body.plugins;
  }

  async facets(): Promise<FacetDefinitionJson[]> {
    const response = await this.fetchFn(`${this.base}/v1/facets`);
    const body = (await readJson(response)) as { facets: FacetDefinitionJson[] };
    return body.facets;
  }
}
