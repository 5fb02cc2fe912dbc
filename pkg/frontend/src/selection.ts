/**
 * Selection set and rectangle-selection geometry for the canvas and grid.
 * Pure logic: the DOM layers feed world-space coordinates in, ids come out.
 */

export interface Rect {
  x0: number;
  y0: number;
  x1: number;
  y1: number;
}

export function normalizeRect(r: Rect): Rect {
  return {
    x0: Math.min(r.x0, r.x1),
    y0: Math.min(r.y0, r.y1),
    x1: Math.max(r.x0, r.x1),
    y1: Math.max(r.y0, r.y1),
  };
}

/** Ids of points inside the (inclusive) rectangle, sorted. */
export function selectInRect(
  coords: Record<string, [number, number]>, rect: Rect,
): string[] {
  const r = normalizeRect(rect);
  const out: string[] = [];
  for (const id of Object.keys(coords)) {
    const point = coords[id];
    if (!point) continue;
    const [x, y] = point;
    if (x >= r.x0 && x <= r.x1 && y >= r.y0 && y <= r.y1) out.push(id);
  }
  return out.sort();
}

/**
 * Doc ids selected across views; only currently displayed ids survive a
 * result change, and the set persists across view switches.
 */
export class SelectionSet {
  private ids = new Set<string>();

  get size(): number {
    return this.ids.size;
  }

  has(id: string): boolean {
    return this.ids.has(id);
  }

  values(): string[] {
    return [...this.ids].sort();
  }

  replace(ids: Iterable<string>): void {
    this.ids = new Set(ids);
  }

  toggle(id: string): void {
    if (this.ids.has(id)) this.ids.delete(id);
    else this.ids.add(id);
  }

  clear(): void {
    this.ids.clear();
  }

  /** Drop ids no longer displayed (invariant: subset of current results). */
  restrictTo(displayed: Iterable<string>): void {
    const allowed = new Set(displayed);
    for (const id of [...this.ids]) {
      if (!allowed.has(id)) this.ids.delete(id);
    }
  }
}
