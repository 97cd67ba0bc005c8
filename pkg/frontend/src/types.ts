// API payload shapes, mirroring the service's JSON contracts.

export interface MapDirective {
  focus?: string;
  highlights?: Record<string, string[]>;
  zoom?: "state" | "county";
}

export interface Answer {
  text: string;
  announce: string;
  source: "local_data" | "language_model" | "mixed";
  map: MapDirective;
}

export interface RegionProperties {
  id: string;
  name: string;
  parent_id: string | null;
  centroid: [number, number];
  values: Record<string, number | null>;
}

export interface RegionFeature {
  type: "Feature";
  geometry: { type: "MultiPolygon"; coordinates: number[][][][] };
  properties: RegionProperties;
}

export interface RegionCollection {
  type: "FeatureCollection";
  features: RegionFeature[];
}

export interface LegendClass {
  min: number;
  max: number;
  color: string;
  label: string;
}

export interface DatasetInfo {
  name: string;
  schema_summary: string;
  metrics: { key: string; label: string; unit: string; description: string; level: string }[];
  default_metric: string;
  levels: { state: number; county: number };
  legend: Record<string, { unit: string; levels: Record<string, { classes: LegendClass[] }> }>;
}

export type NavigateAction =
  | "north"
  | "east"
  | "south"
  | "west"
  | "zoom_in"
  | "zoom_out"
  | "focus";

export type InteractionMode = "map" | "chat";
