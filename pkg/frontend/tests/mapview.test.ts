import { describe, expect, it } from "vitest";

import {
  HIGHLIGHT_STYLES,
  MapView,
  classForValue,
  featureBBox,
  pathFor,
  unionBBox,
  viewBoxFor,
} from "../src/mapview.js";
import type { LegendClass, RegionFeature } from "../src/types.js";

function square(id: string, x: number, y: number, value: number | null = 1): RegionFeature {
  return {
    type: "Feature",
    geometry: {
      type: "MultiPolygon",
      coordinates: [[[[x, y], [x + 1, y], [x + 1, y + 1], [x, y + 1], [x, y]]]],
    },
    properties: { id, name: id.toUpperCase(), parent_id: null, centroid: [x + 0.5, y + 0.5], values: { v: value } },
  };
}

const CLASSES: LegendClass[] = [
  { min: 0, max: 10, color: "#111", label: "0-10" },
  { min: 10, max: 20, color: "#222", label: "10-20" },
  { min: 20, max: 30, color: "#333", label: "20-30" },
  { min: 30, max: 40, color: "#444", label: "30-40" },
  { min: 40, max: 50, color: "#555", label: "40-50" },
];

describe("geometry helpers", () => {
  it("builds closed svg paths with latitude flipped", () => {
    const d = pathFor(square("a", 0, 0).geometry.coordinates);
    expect(d.startsWith("M0.000,0.000")).toBe(true);
    expect(d.endsWith("Z")).toBe(true);
    expect(d).toContain("L1.000,-1.000"); // (1,1) projects to y=-1
  });

  it("computes feature and union bounding boxes", () => {
    const a = featureBBox(square("a", 0, 0));
    const b = featureBBox(square("b", 10, 5));
    const union = unionBBox([a, b]);
    expect(union.minX).toBe(0);
    expect(union.maxX).toBe(11);
    expect(union.minY).toBe(-6);
    expect(union.maxY).toBeCloseTo(0);
  });

  it("viewBox covers the box with margin", () => {
    const vb = viewBoxFor({ minX: 0, minY: 0, maxX: 10, maxY: 5 }, 0.1).split(" ").map(Number);
    expect(vb[0]).toBeCloseTo(-1);
    expect(vb[1]).toBeCloseTo(-0.5);
    expect(vb[2]).toBeCloseTo(12);
    expect(vb[3]).toBeCloseTo(6);
  });

  it("bins values into quantile classes", () => {
    expect(classForValue(null, CLASSES)).toBe("no-data");
    expect(classForValue(5, CLASSES)).toBe("q0");
    expect(classForValue(15, CLASSES)).toBe("q1");
    expect(classForValue(999, CLASSES)).toBe("q4");
  });
});

describe("highlight styles", () => {
  it("gives the four cluster labels four distinct styles", () => {
    const clusterStyles = ["High-High", "Low-Low", "High-Low", "Low-High"].map(
      (label) => HIGHLIGHT_STYLES[label],
    );
    expect(new Set(clusterStyles).size).toBe(4);
    for (const style of clusterStyles) {
      expect(style).toBeTruthy();
    }
  });
});

describe("MapView", () => {
  function build(): { view: MapView; container: HTMLElement } {
    const container = document.createElement("div");
    document.body.appendChild(container);
    const view = new MapView(container);
    view.render([square("a", 0, 0, 5), square("b", 10, 5, 15), square("c", 3, 2, 45)], "v", CLASSES);
    return { view, container };
  }

  it("renders one path per region with choropleth classes", () => {
    const { container } = build();
    const paths = container.querySelectorAll("path.region");
    expect(paths.length).toBe(3);
    expect(paths[0].classList.contains("q0")).toBe(true);
    expect(paths[2].classList.contains("q4")).toBe(true);
  });

  it("focus ring moves between regions", () => {
    const { view, container } = build();
    view.setFocus("a");
    expect(container.querySelectorAll("path.focused").length).toBe(1);
    view.setFocus("b");
    const focused = container.querySelector("path.focused") as SVGPathElement;
    expect(focused.dataset.regionId).toBe("b");
  });

  it("applies one style per highlight label and fits the viewport", () => {
    const { view, container } = build();
    view.setHighlights({
      "High-High": ["a"],
      "Low-Low": ["b"],
      "High-Low": ["c"],
      "Low-High": [],
    });
    expect(container.querySelectorAll(".hl-high-high").length).toBe(1);
    expect(container.querySelectorAll(".hl-low-low").length).toBe(1);
    expect(container.querySelectorAll(".hl-high-low").length).toBe(1);
    const svg = container.querySelector("svg")!;
    const [x, y, w, h] = svg.getAttribute("viewBox")!.split(" ").map(Number);
    // viewport must contain both far-apart regions a and b
    expect(x).toBeLessThanOrEqual(0);
    expect(x + w).toBeGreaterThanOrEqual(11);
    expect(y).toBeLessThanOrEqual(-6);
    expect(y + h).toBeGreaterThanOrEqual(0);
  });

  it("fitToRegions covers every referenced region", () => {
    const { view } = build();
    view.fitToRegions(["a", "b"]);
    const [x, y, w, h] = view.svg.getAttribute("viewBox")!.split(" ").map(Number);
    expect(x).toBeLessThanOrEqual(0);
    expect(x + w).toBeGreaterThanOrEqual(11);
    expect(y).toBeLessThanOrEqual(-6);
    expect(y + h).toBeGreaterThanOrEqual(0);
  });

  it("clearHighlights removes every highlight class", () => {
    const { view, container } = build();
    view.setHighlights({ "High-High": ["a", "b", "c"] });
    view.clearHighlights();
    expect(container.querySelectorAll(".hl-high-high").length).toBe(0);
  });
});
