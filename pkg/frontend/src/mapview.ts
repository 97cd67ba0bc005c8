// SVG choropleth renderer over plate-carree coordinates (x = lon, y = -lat).
// No map library: regions are filled paths, focus is an outline ring, and
// cluster highlights are per-label stroke classes.

import type { LegendClass, RegionFeature } from "./types.js";

export interface BBox {
  minX: number;
  minY: number;
  maxX: number;
  maxY: number;
}

export function project(lon: number, lat: number): [number, number] {
  return [lon, -lat];
}

export function pathFor(coordinates: number[][][][]): string {
  const parts: string[] = [];
  for (const polygon of coordinates) {
    for (const ring of polygon) {
      const pieces = ring.map(([lon, lat], i) => {
        const [x, y] = project(lon, lat);
        return `${i === 0 ? "M" : "L"}${x.toFixed(3)},${y.toFixed(3)}`;
      });
      parts.push(pieces.join("") + "Z");
    }
  }
  return parts.join("");
}

export function featureBBox(feature: RegionFeature): BBox {
  let minX = Infinity;
  let minY = Infinity;
  let maxX = -Infinity;
  let maxY = -Infinity;
  for (const polygon of feature.geometry.coordinates) {
    for (const ring of polygon) {
      for (const [lon, lat] of ring) {
        const [x, y] = project(lon, lat);
        minX = Math.min(minX, x);
        minY = Math.min(minY, y);
        maxX = Math.max(maxX, x);
        maxY = Math.max(maxY, y);
      }
    }
  }
  return { minX, minY, maxX, maxY };
}

export function unionBBox(boxes: BBox[]): BBox {
  return boxes.reduce((a, b) => ({
    minX: Math.min(a.minX, b.minX),
    minY: Math.min(a.minY, b.minY),
    maxX: Math.max(a.maxX, b.maxX),
    maxY: Math.max(a.maxY, b.maxY),
  }));
}

/** viewBox string covering the box plus a relative margin on each side. */
export function viewBoxFor(box: BBox, marginRatio = 0.08): string {
  const width = Math.max(box.maxX - box.minX, 1e-6);
  const height = Math.max(box.maxY - box.minY, 1e-6);
  const mx = width * marginRatio;
  const my = height * marginRatio;
  return [box.minX - mx, box.minY - my, width + 2 * mx, height + 2 * my]
    .map((v) => v.toFixed(3))
    .join(" ");
}

export function classForValue(value: number | null, classes: LegendClass[]): string {
  if (value === null || classes.length === 0) return "no-data";
  for (let i = 0; i < classes.length; i++) {
    const cls = classes[i];
    if (value <= cls.max || i === classes.length - 1) return `q${i}`;
  }
  return `q${classes.length - 1}`;
}

// one visual style per cluster label; the four LISA classes must all differ
export const HIGHLIGHT_STYLES: Record<string, string> = {
  "High-High": "hl-high-high",
  "Low-Low": "hl-low-low",
  "High-Low": "hl-high-low",
  "Low-High": "hl-low-high",
  referenced: "hl-referenced",
};

const SVG_NS = "http://www.w3.org/2000/svg";

export class MapView {
  readonly svg: SVGSVGElement;
  private layer: SVGGElement;
  private paths = new Map<string, SVGPathElement>();
  private boxes = new Map<string, BBox>();
  private focusedId: string | null = null;
  private fullView = "";

  constructor(
    container: HTMLElement,
    private onRegionClick?: (id: string) => void,
  ) {
    this.svg = document.createElementNS(SVG_NS, "svg") as SVGSVGElement;
    this.svg.setAttribute("role", "application");
    this.svg.setAttribute("aria-label", "Interactive map");
    this.layer = document.createElementNS(SVG_NS, "g") as SVGGElement;
    this.svg.appendChild(this.layer);
    container.appendChild(this.svg);
  }

  render(features: RegionFeature[], metricKey: string, classes: LegendClass[]): void {
    this.layer.textContent = "";
    this.paths.clear();
    this.boxes.clear();
    for (const feature of features) {
      const id = feature.properties.id;
      const path = document.createElementNS(SVG_NS, "path") as SVGPathElement;
      path.setAttribute("d", pathFor(feature.geometry.coordinates));
      const value = feature.properties.values[metricKey] ?? null;
      path.setAttribute("class", `region ${classForValue(value, classes)}`);
      path.dataset.regionId = id;
      path.addEventListener("click", () => this.onRegionClick?.(id));
      const title = document.createElementNS(SVG_NS, "title");
      title.textContent = feature.properties.name;
      path.appendChild(title);
      this.layer.appendChild(path);
      this.paths.set(id, path);
      this.boxes.set(id, featureBBox(feature));
    }
    this.fullView = viewBoxFor(unionBBox([...this.boxes.values()]));
    this.svg.setAttribute("viewBox", this.fullView);
  }

  setFocus(id: string | null): void {
    if (this.focusedId) {
      this.paths.get(this.focusedId)?.classList.remove("focused");
    }
    this.focusedId = id;
    if (id) {
      const path = this.paths.get(id);
      path?.classList.add("focused");
      const box = this.boxes.get(id);
      if (box) this.svg.setAttribute("viewBox", viewBoxFor(box, 1.2));
    }
  }

  clearHighlights(): void {
    for (const path of this.paths.values()) {
      for (const cls of Object.values(HIGHLIGHT_STYLES)) {
        path.classList.remove(cls);
      }
    }
  }

  setHighlights(highlights: Record<string, string[]>): void {
    this.clearHighlights();
    const shown: string[] = [];
    for (const [label, ids] of Object.entries(highlights)) {
      const style = HIGHLIGHT_STYLES[label] ?? HIGHLIGHT_STYLES.referenced;
      for (const id of ids) {
        this.paths.get(id)?.classList.add(style);
        shown.push(id);
      }
    }
    if (shown.length > 0) this.fitToRegions(shown);
  }

  /** Zoom the viewport so every named region is visible (comparative answers). */
  fitToRegions(ids: string[]): void {
    const boxes = ids
      .map((id) => this.boxes.get(id))
      .filter((b): b is BBox => Boolean(b));
    if (boxes.length === 0) return;
    this.svg.setAttribute("viewBox", viewBoxFor(unionBBox(boxes), 0.15));
  }

  resetView(): void {
    if (this.fullView) this.svg.setAttribute("viewBox", this.fullView);
  }

  has(id: string): boolean {
    return this.paths.has(id);
  }
}
