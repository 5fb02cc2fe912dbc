// @vitest-environment happy-dom
/**
 * DOM integration: the app renders recorded fixtures with the backend
 * mocked at the fetch layer, and controls issue exactly one debounced
 * request per burst.
 */

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { ApiClient } from "../src/api.js";
import { App } from "../src/app.js";
import { addTerm } from "../src/state.js";

const here = dirname(fileURLToPath(import.meta.url));

function fixture(name: string): unknown {
  return JSON.parse(readFileSync(join(here, "fixtures", name), "utf-8"));
}

interface RecordedRequest {
  url: string;
  body: unknown;
}

function makeMockFetch(requests: RecordedRequest[]): typeof fetch {
  return (async (input: RequestInfo | URL, init?: RequestInit) => {
    const url = String(input);
    const body = init?.body ? JSON.parse(String(init.body)) : null;
    requests.push({ url, body });
    const respond = (payload: unknown, status = 200) =>
      new Response(JSON.stringify(payload), {
        status,
        headers: { "Content-Type": "application/json" },
      });
    if (url.endsWith("/v1/plugins")) return respond(fixture("plugins.json"));
    if (url.endsWith("/v1/facets")) return respond(fixture("facets.json"));
    if (url.endsWith("/v1/search")) return respond(fixture("search_grid.json"));
    if (url.endsWith("/v1/explain")) {
      return respond({
        doc_id: body.doc_id, final_score: 0.9,
        per_plugin: { hashproj: 0.9 }, fused: { hashproj: true },
        uncovered_plugins: [], filters: [], keyword_match: null, warnings: [],
      });
    }
    if (url.endsWith("/v1/uploads")) return respond({ upload_token: "upl_test" }, 201);
    return respond({ code: "not_found", message: "nope", detail: {} }, 404);
  }) as typeof fetch;
}

describe("app integration", () => {
  let requests: RecordedRequest[];
  let app: App;
  let root: HTMLElement;

  beforeEach(async () => {
    vi.useFakeTimers();
    requests = [];
    root = document.createElement("div");
    document.body.append(root);
    window.location.hash = "";
    app = new App(root, new ApiClient("", makeMockFetch(requests)));
    await app.start();
  });

  afterEach(() => {
    vi.useRealTimers();
    document.body.innerHTML = "";
  });

  function searchRequests(): RecordedRequest[] {
    return requests.filter((r) => r.url.endsWith("/v1/search"));
  }

  it("adding a term issues one debounced search and renders rank-ordered tiles", async () => {
    app.update(addTerm(app.state, { kind: "text", value: "saint sebastian", weight: 1 }));
    expect(searchRequests()).toHaveLength(0);
    await vi.advanceTimersByTimeAsync(250);
    expect(searchRequests()).toHaveLength(1);
    const tiles = [...root.querySelectorAll(".panel-results .tile")];
    expect(tiles.length).toBeGreaterThan(0);
    const ranks = tiles.map((t) => Number((t as HTMLElement).dataset["rank"]));
    expect(ranks).toEqual([...ranks].sort((a, b) => a - b));
  });

  it("two slider moves within the window coalesce into one request", async () => {
    app.update(addTerm(app.state, { kind: "text", value: "windmill", weight: 1 }));
    await vi.advanceTimersByTimeAsync(250);
    const before = searchRequests().length;
    const slider = root.querySelector(
      '.panel-weights input[data-plugin="hashproj"]') as HTMLInputElement;
    slider.value = "2.0";
    slider.dispatchEvent(new Event("input", { bubbles: true }));
    await vi.advanceTimersByTimeAsync(100);
    slider.value = "3.0";
    slider.dispatchEvent(new Event("input", { bubbles: true }));
    await vi.advanceTimersByTimeAsync(250);
    expect(searchRequests()).toHaveLength(before + 1);
    const last = searchRequests().at(-1)!.body as {
      plugin_weights: Record<string, number>;
    };
    expect(last.plugin_weights["hashproj"]).toBe(3);
  });

  it("toggling a facet value puts it in the next request's filters", async () => {
    app.update(addTerm(app.state, { kind: "text", value: "saint", weight: 1 }));
    await vi.advanceTimersByTimeAsync(250);
    const toggle = root.querySelector(
      '.panel-facets button[data-field="artist"]') as HTMLElement;
    expect(toggle).not.toBeNull();
    toggle.click();
    await vi.advanceTimersByTimeAsync(250);
    const last = searchRequests().at(-1)!.body as {
      filters: { field: string; values: string[] }[];
    };
    expect(last.filters.some((f) => f.field === "artist")).toBe(true);
  });

  it("use-as-reference adds a doc term with weight 1 to the re-query", async () => {
    app.update(addTerm(app.state, { kind: "text", value: "saint", weight: 1 }));
    await vi.advanceTimersByTimeAsync(250);
    const tile = root.querySelector(".panel-results .tile") as HTMLElement;
    const docId = tile.dataset["doc"]!;
    tile.click();
    await vi.advanceTimersByTimeAsync(0);
    const useRef = root.querySelector(".detail-panel .use-reference") as HTMLElement;
    expect(useRef).not.toBeNull();
    useRef.click();
    await vi.advanceTimersByTimeAsync(250);
    const last = searchRequests().at(-1)!.body as { terms: unknown[] };
    expect(last.terms).toContainEqual({ doc_id: docId, weight: 1 });
  });

  it("request failure keeps previous results and shows a toast", async () => {
    app.update(addTerm(app.state, { kind: "text", value: "saint", weight: 1 }));
    await vi.advanceTimersByTimeAsync(250);
    const tilesBefore = root.querySelectorAll(".panel-results .tile").length;
    // swap the api for a failing one by issuing a state change while the
    // mock starts rejecting
    const failingApp = app as unknown as {
      api: { search: () => Promise<never> };
    };
    const scheduler = app.scheduler as unknown as {
      run: () => Promise<never>;
    };
    scheduler.run = () => Promise.reject(new Error("backend down"));
    app.update(addTerm(app.state, { kind: "text", value: "more", weight: 1 }));
    await vi.advanceTimersByTimeAsync(250);
    expect(root.querySelectorAll(".panel-results .tile")).toHaveLength(tilesBefore);
    expect(failingApp).toBeDefined();
    const toast = root.querySelector(".panel-toast") as HTMLElement;
    expect(toast.textContent).toContain("backend down");
  });

  it("URL fragment tracks state for shareable sessions", async () => {
    app.update(addTerm(app.state, { kind: "text", value: "tulip", weight: 1 }));
    expect(window.location.hash.startsWith("#q=")).toBe(true);
    const encoded = decodeURIComponent(window.location.hash.slice(3));
    expect(JSON.parse(encoded).terms[0].value).toBe("tulip");
  });
});
