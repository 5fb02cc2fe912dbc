/**
 * Application shell: term composer, plugin weight sliders, facet filters,
 * view switcher (grid / carousel / canvas), juxtaposition strip, URL sync.
 * Every control mutates UiQueryState; result-affecting changes re-query
 * through the debounced scheduler, view switches repaint locally.
 */

import { ApiClient } from "./api.js";
import { DEBOUNCE_MS, QueryScheduler } from "./debounce.js";
import { clear, el, fmtScore } from "./dom.js";
import { SelectionSet } from "./selection.js";
import {
  UiQueryState,
  addTerm,
  canQuery,
  decodeStateFromFragment,
  encodeStateToFragment,
  filterChips,
  initialState,
  removeTerm,
  setKeyword,
  setPage,
  setPluginWeight,
  setTermWeight,
  setView,
  toggleFacetValue,
  toQuerySpec,
} from "./state.js";
import type {
  FacetDefinitionJson,
  PluginManifestJson,
  ResultPageJson,
  ViewMode,
} from "./types.js";
import { canvasModel, carouselRows, facetPanels, gridTiles } from "./viewmodel.js";
import { CanvasView } from "./views/canvas.js";
import { renderCarousel } from "./views/carousel.js";
import { renderDetailPanel, renderGrid } from "./views/grid.js";

export class App {
  state: UiQueryState = initialState();
  page: ResultPageJson | null = null;
  selection = new SelectionSet();
  scheduler: QueryScheduler<ResultPageJson>;
  private plugins: PluginManifestJson[] = [];
  private facets: FacetDefinitionJson[] = [];
  private canvasView: CanvasView | null = null;

  private panels: Record<string, HTMLElement> = {};

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient = new ApiClient(),
  ) {
    this.scheduler = new QueryScheduler(
      () => this.api.search(toQuerySpec(this.state)),
      (result) => this.applyResult(result),
      (err) => this.showError(err),
      DEBOUNCE_MS,
    );
    const restored = decodeStateFromFragment(window.location.hash);
    if (restored) this.state = restored;
  }

  async start(): Promise<void> {
    this.buildSkeleton();
    try {
      [this.plugins, this.facets] = await Promise.all([
        this.api.plugins(),
        this.api.facets(),
      ]);
    } catch (err) {
      this.showError(err);
    }
    for (const plugin of this.plugins) {
      if (plugin.kind === "feature" && !(plugin.name in this.state.pluginWeights)) {
        this.state.pluginWeights[plugin.name] = 1.0;
      }
    }
    this.paintControls();
    if (canQuery(this.state)) this.scheduler.fire();
  }

  /** State transition + re-query (debounced); pure view changes skip the query. */
  update(next: UiQueryState, requery = true): void {
    this.state = next;
    window.history.replaceState(null, "", encodeStateToFragment(this.state));
    this.paintControls();
    if (requery && canQuery(this.state)) this.scheduler.schedule();
  }

  private applyResult(page: ResultPageJson): void {
    this.page = page;
    this.selection.restrictTo(page.results.map((r) => r.doc_id));
    this.paintResults();
  }

  private showError(err: unknown): void {
    const toast = this.panels["toast"];
    if (!toast) return;
    toast.textContent = err instanceof Error ? err.message : String(err);
    toast.classList.add("visible");
    setTimeout(() => toast.classList.remove("visible"), 4000);
  }

  // -- chrome ---------------------------------------------------------------

  private buildSkeleton(): void {
    clear(this.root);
    for (const name of ["toast", "composer", "weights", "chips", "facets",
                        "viewbar", "results", "detail", "juxtapose"]) {
      const panel = el("div", { class: `panel-${name}`, id: `panel-${name}` });
      this.panels[name] = panel;
      this.root.append(panel);
    }
  }

  private paintControls(): void {
    this.paintComposer();
    this.paintWeights();
    this.paintChips();
    this.paintViewBar();
    if (this.page) this.paintFacets(this.page);
  }

  private paintComposer(): void {
    const panel = this.panels["composer"];
    if (!panel) return;
    clear(panel);
    const list = el("ul", { class: "terms" });
    this.state.terms.forEach((term, i) => {
      const weight = el("input", {
        type: "range", min: "-4", max: "4", step: "0.1",
        value: String(term.weight), "data-term": String(i),
      });
      weight.addEventListener("input", () =>
        this.update(setTermWeight(this.state, i, Number((weight as HTMLInputElement).value))));
      const drop = el("button", { class: "remove" }, "×");
      drop.addEventListener("click", () => this.update(removeTerm(this.state, i)));
      list.append(el("li", { class: `term term-${term.kind}` },
        el("span", { class: "kind" }, term.kind),
        el("span", { class: "label" }, term.label ?? term.value),
        weight,
        el("span", { class: "weight" }, term.weight.toFixed(1)),
        drop));
    });
    panel.append(list);

    const text = el("input", { type: "text", placeholder: "text reference…" });
    const addText = el("button", {}, "Add text");
    addText.addEventListener("click", () => {
      const value = (text as HTMLInputElement).value.trim();
      if (value) {
        this.update(addTerm(this.state, { kind: "text", value, weight: 1.0 }));
        (text as HTMLInputElement).value = "";
      }
    });
    const file = el("input", { type: "file", accept: "image/*" });
    file.addEventListener("change", async () => {
      const input = file as HTMLInputElement;
      const chosen = input.files?.[0];
      if (!chosen) return;
      try {
        const token = await this.api.upload(chosen);
        this.update(addTerm(this.state,
          { kind: "image", value: token, label: chosen.name, weight: 1.0 }));
      } catch (err) {
        this.showError(err);
      }
      input.value = "";
    });
    const keyword = el("input", {
      type: "search", placeholder: "keyword constraint…", value: this.state.keyword,
    });
    keyword.addEventListener("change", () =>
      this.update(setKeyword(this.state, (keyword as HTMLInputElement).value)));
    panel.append(el("div", { class: "composer-inputs" }, text, addText, file, keyword));
  }

  private paintWeights(): void {
    const panel = this.panels["weights"];
    if (!panel) return;
    clear(panel);
    for (const plugin of this.plugins) {
      if (plugin.kind !== "feature") continue;
      const value = this.state.pluginWeights[plugin.name] ?? 1.0;
      const slider = el("input", {
        type: "range", min: "0", max: "4", step: "0.1",
        value: String(value), "data-plugin": plugin.name,
      });
      slider.addEventListener("input", () =>
        this.update(setPluginWeight(this.state, plugin.name,
          Number((slider as HTMLInputElement).value))));
      panel.append(el("label", {
        class: "plugin-weight" + (value === 0 ? " excluded" : ""),
      }, el("span", {}, `${plugin.name}${value === 0 ? " (excluded)" : ""}`), slider));
    }
  }

  private paintChips(): void {
    const panel = this.panels["chips"];
    if (!panel) return;
    clear(panel);
    for (const chip of filterChips(this.state)) {
      const remove = el("button", { class: "chip-remove" }, "×");
      remove.addEventListener("click", () => this.update(chip.remove(this.state)));
      panel.append(el("span", { class: "chip" }, chip.label, remove));
    }
  }

  private paintViewBar(): void {
    const panel = this.panels["viewbar"];
    if (!panel) return;
    clear(panel);
    for (const view of ["grid", "carousel", "canvas"] as ViewMode[]) {
      const button = el("button", {
        class: view === this.state.view ? "active" : "",
      }, view);
      button.addEventListener("click", () => {
        // switching to a layout view changes the requested layout -> re-query;
        // the selection set survives the switch
        const requery = viewNeedsLayout(view) !== viewNeedsLayout(this.state.view)
          || (viewNeedsLayout(view) && view !== this.state.view);
        this.update(setView(this.state, view), requery);
        this.paintResults();
      });
      panel.append(button);
    }
    const prev = el("button", { class: "page-prev" }, "‹ prev");
    prev.addEventListener("click", () =>
      this.update(setPage(this.state, this.state.offset - this.state.limit)));
    const next = el("button", { class: "page-next" }, "next ›");
    next.addEventListener("click", () =>
      this.update(setPage(this.state, this.state.offset + this.state.limit)));
    panel.append(prev, next);
  }

  private paintFacets(page: ResultPageJson): void {
    const panel = this.panels["facets"];
    if (!panel) return;
    clear(panel);
    const names: Record<string, string> = {};
    for (const facet of this.facets) names[facet.field] = facet.display_name;
    for (const model of facetPanels(page.facet_counts, this.state.facetSelections, names)) {
      const list = el("ul", { class: "facet-values" });
      for (const entry of model.values.slice(0, 30)) {
        const toggle = el("button", {
          class: entry.active ? "facet-value active" : "facet-value",
          "data-field": model.field,
          "data-value": entry.value,
        }, `${entry.value} (${entry.count})`);
        toggle.addEventListener("click", () =>
          this.update(toggleFacetValue(this.state, model.field, entry.value)));
        list.append(el("li", {}, toggle));
      }
      panel.append(el("section", { class: "facet" },
        el("h4", {}, model.displayName), list));
    }
  }

  // -- results ----------------------------------------------------------------

  private paintResults(): void {
    const panel = this.panels["results"];
    if (!panel || !this.page) return;
    this.paintFacets(this.page);
    clear(panel);
    if (this.state.view === "grid") {
      renderGrid(panel, gridTiles(this.page), this.selection, {
        onOpenDetail: (docId) => this.openDetail(docId),
        onToggleSelect: (docId) => {
          this.selection.toggle(docId);
          this.paintResults();
          this.paintJuxtaposition();
        },
      });
      this.canvasView = null;
    } else if (this.state.view === "carousel") {
      renderCarousel(panel, carouselRows(this.page),
        (docId) => this.openDetail(docId));
      this.canvasView = null;
    } else {
      this.canvasView = new CanvasView(panel, {
        onSelect: (ids) => {
          this.selection.replace(ids);
          this.canvasView?.paint(new Set(ids));
          this.paintJuxtaposition();
        },
        onOpenDetail: (docId) => this.openDetail(docId),
      });
      this.canvasView.setModel(canvasModel(this.page));
      this.canvasView.paint(new Set(this.selection.values()));
    }
    this.paintJuxtaposition();
  }

  private paintJuxtaposition(): void {
    const panel = this.panels["juxtapose"];
    if (!panel) return;
    clear(panel);
    const ids = this.selection.values();
    if (ids.length === 0) return;
    const strip = el("div", { class: "juxtapose-strip" });
    const documents = this.page?.documents ?? {};
    for (const docId of ids) {
      const doc = documents[docId];
      strip.append(el("figure", { class: "juxtaposed", "data-doc": docId },
        el("img", { src: doc?.image_ref ?? "", alt: doc?.title ?? docId }),
        el("figcaption", {}, doc?.title ?? docId)));
    }
    const clearButton = el("button", {}, "clear selection");
    clearButton.addEventListener("click", () => {
      this.selection.clear();
      this.paintResults();
    });
    panel.append(el("h3", {}, `Juxtaposing ${ids.length} objects`), strip, clearButton);
  }

  private async openDetail(docId: string): Promise<void> {
    const panel = this.panels["detail"];
    if (!panel || !this.page) return;
    const entry = this.page.results.find((r) => r.doc_id === docId);
    const doc = this.page.documents?.[docId];
    let perPlugin = entry?.per_plugin ?? {};
    try {
      if (canQuery(this.state)) {
        const explained = await this.api.explain(toQuerySpec(this.state), docId);
        perPlugin = explained.per_plugin;
      }
    } catch {
      // keep the page's own scores when explain is unavailable
    }
    renderDetailPanel(panel, {
      docId,
      title: doc?.title ?? docId,
      imageRef: doc?.image_ref ?? "",
      metadata: doc?.metadata ?? {},
      score: entry?.final_score ?? null,
      perPlugin,
    }, (id) => {
      this.update(addTerm(this.state, { kind: "doc", value: id, weight: 1.0 }));
      clear(panel);
    }, () => clear(panel));
  }
}

function viewNeedsLayout(view: ViewMode): boolean {
  return view === "carousel" || view === "canvas";
}

export function mount(root: HTMLElement, api?: ApiClient): App {
  const app = new App(root, api);
  void app.start();
  return app;
}
