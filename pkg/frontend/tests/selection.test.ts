/** Rectangle selection geometry and selection-set invariants. */

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { describe, expect, it } from "vitest";

import { SelectionSet, selectInRect } from "../src/selection.js";
import type { ResultPageJson } from "../src/types.js";

const here = dirname(fileURLToPath(import.meta.url));
const canvasFixture = JSON.parse(
  readFileSync(join(here, "fixtures", "search_canvas_two_blobs.json"), "utf-8"),
) as ResultPageJson;

describe("selectInRect", () => {
  const coords = canvasFixture.layout!.coords!;

  it("rectangle around blob A selects exactly the blob-A ids", () => {
    // fixture blobs separate along x; A sits in the positive half-plane
    const aIds = Object.keys(coords).filter((d) => d.startsWith("blobA")).sort();
    const got = selectInRect(coords, { x0: 0.5, y0: -100, x1: 100, y1: 100 });
    expect(got).toEqual(aIds);
    expect(got.length).toBe(12);
  });

  it("select-all rectangle returns every displayed id", () => {
    const got = selectInRect(coords, { x0: -1e6, y0: -1e6, x1: 1e6, y1: 1e6 });
    expect(got).toEqual(Object.keys(coords).sort());
  });

  it("empty rectangle selects nothing", () => {
    const got = selectInRect(coords, { x0: 999, y0: 999, x1: 1000, y1: 1000 });
    expect(got).toEqual([]);
  });

  it("corner order does not matter", () => {
    const a = selectInRect(coords, { x0: 0.5, y0: -100, x1: 100, y1: 100 });
    const b = selectInRect(coords, { x0: 100, y0: 100, x1: 0.5, y1: -100 });
    expect(a).toEqual(b);
  });

  it("bounds are inclusive", () => {
    const pts: Record<string, [number, number]> = { edge: [1, 1], out: [1.001, 1] };
    expect(selectInRect(pts, { x0: 0, y0: 0, x1: 1, y1: 1 })).toEqual(["edge"]);
  });
});

describe("SelectionSet", () => {
  it("toggle and clear", () => {
    const sel = new SelectionSet();
    sel.toggle("a");
    sel.toggle("b");
    sel.toggle("a");
    expect(sel.values()).toEqual(["b"]);
    sel.clear();
    expect(sel.size).toBe(0);
  });

  it("restricts to displayed results", () => {
    const sel = new SelectionSet();
    sel.replace(["a", "b", "c"]);
    sel.restrictTo(["b", "c", "d"]);
    expect(sel.values()).toEqual(["b", "c"]);
  });

  it("persists across replace with same content (view switch)", () => {
    const sel = new SelectionSet();
    sel.replace(["x", "y"]);
    const before = sel.values();
    sel.restrictTo(["x", "y", "z"]);
    expect(sel.values()).toEqual(before);
  });
});
