/**
 * Zoomable 2D canvas with drag-select.
 *
 * World coordinates come from the layout payload; a view transform
 * (scale + pan) maps them to screen space. Wheel zooms about the cursor,
 * plain drag pans, shift-drag rubber-bands a rectangle whose world-space
 * extent feeds the selection set. Zoom and pan never touch the selection.
 */

import { clear, el } from "../dom.js";
import { selectInRect } from "../selection.js";
import type { CanvasModel } from "../viewmodel.js";

export interface CanvasCallbacks {
  onSelect: (ids: string[]) => void;
  onOpenDetail: (docId: string) => void;
}

interface ViewTransform {
  scale: number;
  tx: number;
  ty: number;
}

export class CanvasView {
  private transform: ViewTransform = { scale: 1, tx: 0, ty: 0 };
  private model: CanvasModel | null = null;
  private stage: HTMLElement;
  private rubber: HTMLElement;
  private drag: { mode: "pan" | "select"; startX: number; startY: number } | null = null;

  constructor(private readonly root: HTMLElement, private readonly cb: CanvasCallbacks) {
    this.stage = el("div", { class: "canvas-stage" });
    this.rubber = el("div", { class: "rubber-band", style: "display:none" });
    root.classList.add("canvas-view");
    root.append(this.stage, this.rubber);
    this.bindEvents();
  }

  setModel(model: CanvasModel): void {
    this.model = model;
    this.fitToBounds();
    this.paint();
  }

  private fitToBounds(): void {
    if (!this.model) return;
    const { minX, maxX, minY, maxY } = this.model.bounds;
    const width = this.root.clientWidth || 800;
    const height = this.root.clientHeight || 600;
    const spanX = Math.max(maxX - minX, 1e-6);
    const spanY = Math.max(maxY - minY, 1e-6);
    const scale = 0.9 * Math.min(width / spanX, height / spanY);
    this.transform = {
      scale,
      tx: width / 2 - scale * (minX + spanX / 2),
      ty: height / 2 - scale * (minY + spanY / 2),
    };
  }

  toScreen(x: number, y: number): [number, number] {
    return [
      this.transform.scale * x + this.transform.tx,
      this.transform.scale * y + this.transform.ty,
    ];
  }

  toWorld(sx: number, sy: number): [number, number] {
    return [
      (sx - this.transform.tx) / this.transform.scale,
      (sy - this.transform.ty) / this.transform.scale,
    ];
  }

  paint(selectedIds: Set<string> = new Set()): void {
    clear(this.stage);
    if (!this.model) return;
    for (const point of this.model.points) {
      const [sx, sy] = this.toScreen(point.x, point.y);
      const thumb = el("img", {
        class: "canvas-thumb" + (selectedIds.has(point.docId) ? " selected" : ""),
        src: point.imageRef,
        alt: point.title,
        "data-doc": point.docId,
        style: `left:${sx.toFixed(1)}px; top:${sy.toFixed(1)}px`,
      });
      thumb.addEventListener("dblclick", () => this.cb.onOpenDetail(point.docId));
      this.stage.append(thumb);
    }
    if (this.model.missing.length > 0) {
      const sidebar = el("aside", { class: "canvas-missing" },
        el("h4", {}, `${this.model.missing.length} without coordinates`));
      const list = el("ul", {});
      for (const tile of this.model.missing) {
        list.append(el("li", { "data-doc": tile.docId }, `#${tile.rank} ${tile.title}`));
      }
      sidebar.append(list);
      this.stage.append(sidebar);
    }
  }

  private bindEvents(): void {
    this.root.addEventListener("wheel", (event) => {
      event.preventDefault();
      if (!this.model) return;
      const factor = event.deltaY < 0 ? 1.15 : 1 / 1.15;
      const rect = this.root.getBoundingClientRect();
      const sx = event.clientX - rect.left;
      const sy = event.clientY - rect.top;
      const [wx, wy] = this.toWorld(sx, sy);
      this.transform.scale *= factor;
      this.transform.tx = sx - this.transform.scale * wx;
      this.transform.ty = sy - this.transform.scale * wy;
      this.paint();
    });
    this.root.addEventListener("pointerdown", (event) => {
      const rect = this.root.getBoundingClientRect();
      this.drag = {
        mode: event.shiftKey ? "select" : "pan",
        startX: event.clientX - rect.left,
        startY: event.clientY - rect.top,
      };
      if (this.drag.mode === "select") this.rubber.style.display = "block";
    });
    this.root.addEventListener("pointermove", (event) => {
      if (!this.drag) return;
      const rect = this.root.getBoundingClientRect();
      const x = event.clientX - rect.left;
      const y = event.clientY - rect.top;
      if (this.drag.mode === "pan") {
        this.transform.tx += x - this.drag.startX;
        this.transform.ty += y - this.drag.startY;
        this.drag.startX = x;
        this.drag.startY = y;
        this.paint();
      } else {
        const left = Math.min(x, this.drag.startX);
        const top = Math.min(y, this.drag.startY);
        this.rubber.style.left = `${left}px`;
        this.rubber.style.top = `${top}px`;
        this.rubber.style.width = `${Math.abs(x - this.drag.startX)}px`;
        this.rubber.style.height = `${Math.abs(y - this.drag.startY)}px`;
      }
    });
    this.root.addEventListener("pointerup", (event) => {
      if (!this.drag) return;
      const rect = this.root.getBoundingClientRect();
      const x = event.clientX - rect.left;
      const y = event.clientY - rect.top;
      if (this.drag.mode === "select" && this.model) {
        this.rubber.style.display = "none";
        const [x0, y0] = this.toWorld(this.drag.startX, this.drag.startY);
        const [x1, y1] = this.toWorld(x, y);
        const coords: Record<string, [number, number]> = {};
        for (const p of this.model.points) coords[p.docId] = [p.x, p.y];
        this.cb.onSelect(selectInRect(coords, { x0, y0, x1, y1 }));
      }
      this.drag = null;
    });
  }
}
