"""Region boundary and attribute ingestion.

Loads GeoJSON FeatureCollections and delimited attribute tables, joins them
into an immutable :class:`GeoDataset`, and renders the schema text block used
by the query pipeline's scope stage. Geometry stays in plain plate-carree
longitude/latitude degrees throughout.
"""

from __future__ import annotations

import csv
import json
import unicodedata
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional


class GeodataError(Exception):
    """Raised when boundary or attribute inputs violate the dataset contract."""


class Level(str, Enum):
    STATE = "state"
    COUNTY = "county"

    @property
    def noun(self) -> str:
        return "state" if self is Level.STATE else "county"


# metric applicability
class MetricLevel(str, Enum):
    STATE = "state"
    COUNTY = "county"
    BOTH = "both"

    def allows(self, level: Level) -> bool:
        return self is MetricLevel.BOTH or self.value == level.value


Ring = tuple[tuple[float, float], ...]
Polygon = tuple[Ring, ...]  # first ring exterior, rest holes


@dataclass(frozen=True)
class Region:
    id: str
    name: str
    level: Level
    parent_id: Optional[str]
    geometry: tuple[Polygon, ...]
    centroid: tuple[float, float]
    centroid_overridden: bool
    area: float  # plate-carree degrees^2, used only for weighting
    bbox: tuple[float, float, float, float]  # (min lon, min lat, max lon, max lat)


@dataclass(frozen=True)
class MetricDefinition:
    key: str
    label: str
    unit: str
    description: str
    level: MetricLevel = MetricLevel.BOTH
    synonyms: tuple[str, ...] = ()  # extra names the query pipeline may match


@dataclass(frozen=True)
class LoadReport:
    rows_read: int = 0
    rows_skipped: int = 0
    nulls: int = 0
    warnings: tuple[str, ...] = ()


def _ring_area_centroid(ring: Ring) -> tuple[float, tuple[float, float]]:
    """Signed shoelace area and centroid of one closed ring."""
    a = cx = cy = 0.0
    for (x0, y0), (x1, y1) in zip(ring[:-1], ring[1:]):
        cross = x0 * y1 - x1 * y0
        a += cross
        cx += (x0 + x1) * cross
        cy += (y0 + y1) * cross
    a *= 0.5
    if a == 0.0:
        return 0.0, (ring[0][0], ring[0][1])
    return a, (cx / (6.0 * a), cy / (6.0 * a))


def polygon_centroid(geometry: Iterable[Polygon]) -> tuple[tuple[float, float], float]:
    """Area-weighted centroid of a multipolygon; holes subtract.

    Returns ((lon, lat), total_area). Raises on zero total area.
    """
    total = cx = cy = 0.0
    for polygon in geometry:
        for i, ring in enumerate(polygon):
            a, (x, y) = _ring_area_centroid(ring)
            a = abs(a) if i == 0 else -abs(a)
            total += a
            cx += a * x
            cy += a * y
    if total <= 0.0:
        raise GeodataError("polygon has zero or negative area")
    return (cx / total, cy / total), total


def _bbox(geometry: tuple[Polygon, ...]) -> tuple[float, float, float, float]:
    xs = [p[0] for poly in geometry for ring in poly for p in ring]
    ys = [p[1] for poly in geometry for ring in poly for p in ring]
    return (min(xs), min(ys), max(xs), max(ys))


def _coerce_geometry(feature_id: str, geom: dict) -> tuple[Polygon, ...]:
    if geom["type"] == "Polygon":
        parts = [geom["coordinates"]]
    elif geom["type"] == "MultiPolygon":
        parts = geom["coordinates"]
    else:
        raise GeodataError(f"feature {feature_id}: unsupported geometry type {geom['type']}")
    polygons = []
    for part in parts:
        rings = []
        for ring in part:
            pts = tuple((float(x), float(y)) for x, y in ring)
            if len(pts) < 4:
                raise GeodataError(f"feature {feature_id}: ring with fewer than 4 vertices")
            if pts[0] != pts[-1]:
                raise GeodataError(f"feature {feature_id}: ring not closed")
            rings.append(pts)
        polygons.append(tuple(rings))
    return tuple(polygons)


def load_boundaries(
    source: str | Path,
    level: Level,
    overrides: Optional[dict[str, tuple[float, float]]] = None,
) -> list[Region]:
    """Load one GeoJSON FeatureCollection into validated regions.

    Centroids are area-weighted polygon centroids unless an override entry
    supplies the coordinates; overridden centroids must still fall inside the
    region's bounding box.
    """
    overrides = overrides or {}
    path = Path(source)
    data = json.loads(path.read_text(encoding="utf-8"))
    if data.get("type") != "FeatureCollection":
        raise GeodataError(f"{path}: not a GeoJSON FeatureCollection")

    regions: list[Region] = []
    seen: set[str] = set()
    for feature in data.get("features", []):
        props = feature.get("properties") or {}
        fid = props.get("id")
        name = props.get("name")
        if not fid or not name:
            raise GeodataError(f"{path}: feature missing id or name property")
        fid = str(fid)
        if fid in seen:
            raise GeodataError(f"{path}: duplicate region id {fid}")
        seen.add(fid)
        geometry = _coerce_geometry(fid, feature["geometry"])
        centroid, area = polygon_centroid(geometry)
        overridden = fid in overrides
        if overridden:
            centroid = overrides[fid]
        bbox = _bbox(geometry)
        if not (bbox[0] <= centroid[0] <= bbox[2] and bbox[1] <= centroid[1] <= bbox[3]):
            raise GeodataError(f"{path}: centroid of {fid} outside its bounding box")
        parent = props.get("parent_id")
        if level is Level.COUNTY and not parent:
            raise GeodataError(f"{path}: county {fid} missing parent_id")
        regions.append(
            Region(
                id=fid,
                name=str(name),
                level=level,
                parent_id=str(parent) if parent else None,
                geometry=geometry,
                centroid=centroid,
                centroid_overridden=overridden,
                area=area,
                bbox=bbox,
            )
        )
    return regions


def load_centroid_overrides(source: str | Path) -> dict[str, tuple[float, float]]:
    """Read the {id, lon, lat} override table (comments and blanks ignored)."""
    result: dict[str, tuple[float, float]] = {}
    with Path(source).open(encoding="utf-8", newline="") as f:
        for row in csv.DictReader(f):
            rid = (row.get("id") or "").strip()
            if not rid or rid.startswith("#"):
                continue
            result[rid] = (float(row["lon"]), float(row["lat"]))
    return result


def load_attributes(
    source: str | Path,
    schema: list[MetricDefinition],
    known_regions: dict[str, Region],
) -> tuple[dict[tuple[str, str], float], LoadReport]:
    """Parse one delimited attribute table into (region id, metric key) values.

    Unknown region ids skip the row with a warning; non-numeric cells become
    nulls with a warning; blank cells become nulls silently.
    """
    path = Path(source)
    values: dict[tuple[str, str], float] = {}
    warnings: list[str] = []
    rows_read = rows_skipped = nulls = 0

    with path.open(encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None or "id" not in reader.fieldnames:
            raise GeodataError(f"{path}: attribute table needs an 'id' column")
        metric_cols = [m for m in schema if m.key in reader.fieldnames]
        for row in reader:
            rows_read += 1
            rid = (row.get("id") or "").strip()
            region = known_regions.get(rid)
            if region is None:
                warnings.append(f"{path.name}: unknown region id {rid!r}, row skipped")
                rows_skipped += 1
                continue
            for metric in metric_cols:
                if not metric.level.allows(region.level):
                    continue
                cell = (row.get(metric.key) or "").strip()
                if cell == "":
                    nulls += 1
                    continue
                try:
                    values[(rid, metric.key)] = float(cell)
                except ValueError:
                    warnings.append(
                        f"{path.name}: non-numeric value {cell!r} for {rid}/{metric.key}, treated as null"
                    )
                    nulls += 1
    report = LoadReport(rows_read, rows_skipped, nulls, tuple(warnings))
    return values, report


def _normalize_name(name: str) -> str:
    text = unicodedata.normalize("NFKD", name).encode("ascii", "ignore").decode()
    return " ".join(text.lower().replace(".", "").split())


@dataclass
class GeoDataset:
    """Immutable-after-load join of regions, metrics, and attribute values."""

    name: str
    regions: dict[str, Region]
    metrics: list[MetricDefinition]
    values: dict[tuple[str, str], float]
    provenance: list[str] = field(default_factory=list)
    aliases: dict[str, str] = field(default_factory=dict)
    require_connected_navigation: bool = False
    default_metric: Optional[str] = None

    def __post_init__(self) -> None:
        keys = [m.key for m in self.metrics]
        if len(set(keys)) != len(keys):
            raise GeodataError("metric keys must be unique")
        for m in self.metrics:
            if not m.unit:
                raise GeodataError(f"metric {m.key} has an empty unit")
        declared = set(keys)
        for rid, key in self.values:
            if rid not in self.regions:
                raise GeodataError(f"value references unknown region {rid}")
            if key not in declared:
                raise GeodataError(f"value references undeclared metric {key}")
        for region in self.regions.values():
            if region.level is Level.COUNTY:
                parent = self.regions.get(region.parent_id or "")
                if parent is None or parent.level is not Level.STATE:
                    raise GeodataError(f"county {region.id} has no loaded parent state")
        if not any(self._metric_count(m.key) >= 2 for m in self.metrics):
            raise GeodataError("need at least one metric with >= 2 non-null values")
        self._name_index: dict[str, list[str]] = {}
        for region in self.regions.values():
            self._name_index.setdefault(_normalize_name(region.name), []).append(region.id)
        for alias, rid in self.aliases.items():
            if rid in self.regions:
                self._name_index.setdefault(_normalize_name(alias), []).append(rid)

    def _metric_count(self, key: str) -> int:
        return sum(1 for (_, k) in self.values if k == key)

    # -- lookups ---------------------------------------------------------

    def value(self, region_id: str, metric_key: str) -> Optional[float]:
        """Stored number or None; never raises for loaded region/metric pairs."""
        return self.values.get((region_id, metric_key))

    def metric(self, key: str) -> MetricDefinition:
        for m in self.metrics:
            if m.key == key:
                return m
        raise KeyError(key)

    def has_metric(self, key: str) -> bool:
        return any(m.key == key for m in self.metrics)

    def regions_at(self, level: Level) -> list[Region]:
        return sorted(
            (r for r in self.regions.values() if r.level is level), key=lambda r: r.id
        )

    def counties_of(self, state_id: str) -> list[Region]:
        return sorted(
            (
                r
                for r in self.regions.values()
                if r.level is Level.COUNTY and r.parent_id == state_id
            ),
            key=lambda r: r.id,
        )

    def find_regions_by_name(self, name: str) -> list[Region]:
        ids = self._name_index.get(_normalize_name(name), [])
        return [self.regions[i] for i in sorted(set(ids))]

    def overall_centroid(self) -> tuple[float, float]:
        """Area-weighted mean of state centroids (anchor for the initial focus)."""
        states = self.regions_at(Level.STATE)
        total = sum(r.area for r in states)
        lon = sum(r.centroid[0] * r.area for r in states) / total
        lat = sum(r.centroid[1] * r.area for r in states) / total
        return (lon, lat)


def load_dataset(config_path: str | Path) -> GeoDataset:
    """Assemble a GeoDataset from one declarative config file."""
    cfg_path = Path(config_path)
    cfg = json.loads(cfg_path.read_text(encoding="utf-8"))
    base = cfg_path.parent

    metrics = [
        MetricDefinition(
            key=m["key"],
            label=m["label"],
            unit=m["unit"],
            description=m.get("description", ""),
            level=MetricLevel(m.get("level", "both")),
            synonyms=tuple(m.get("synonyms", ())),
        )
        for m in cfg["metrics"]
    ]

    overrides: dict[str, tuple[float, float]] = {}
    provenance: list[str] = [f"config: {cfg_path.name}"]
    if cfg.get("centroid_overrides"):
        overrides = load_centroid_overrides(base / cfg["centroid_overrides"])
        provenance.append(f"centroid overrides: {len(overrides)} entries")

    regions: dict[str, Region] = {}
    for spec in cfg["boundaries"]:
        level = Level(spec["level"])
        for region in load_boundaries(base / spec["path"], level, overrides):
            if region.id in regions:
                raise GeodataError(f"duplicate region id across files: {region.id}")
            regions[region.id] = region
        provenance.append(f"boundaries[{level.value}]: {spec['path']}")

    unknown_overrides = sorted(set(overrides) - set(regions))
    if unknown_overrides:
        provenance.append(
            "centroid overrides for regions not in this dataset (ignored): "
            + ", ".join(unknown_overrides)
        )

    values: dict[tuple[str, str], float] = {}
    for spec in cfg.get("attributes", []):
        table_values, report = load_attributes(base / spec["path"], metrics, regions)
        values.update(table_values)
        provenance.append(
            f"attributes: {spec['path']} ({report.rows_read} rows, "
            f"{report.rows_skipped} skipped, {report.nulls} nulls)"
        )
        provenance.extend(report.warnings)

    return GeoDataset(
        name=cfg.get("name", cfg_path.stem),
        regions=regions,
        metrics=metrics,
        values=values,
        provenance=provenance,
        aliases=dict(cfg.get("aliases", {})),
        require_connected_navigation=bool(cfg.get("require_connected_navigation", False)),
        default_metric=cfg.get("default_metric"),
    )


def schema_summary(dataset: GeoDataset) -> str:
    """Deterministic plain-text schema description for classifier prompts.

    Pure function of the dataset: identical input yields byte-identical output.
    Kept under 2 KB so it can ride along in every scope-stage prompt.
    """
    n_states = len(dataset.regions_at(Level.STATE))
    n_counties = len(dataset.regions_at(Level.COUNTY))
    units = []
    if n_states:
        units.append(f"{n_states} states")
    if n_counties:
        units.append(f"{n_counties} counties")
    lines = [
        f"Dataset: {dataset.name}",
        f"Geographic units: {'; '.join(units)}",
        "Metrics:",
    ]
    scope_names = {
        MetricLevel.STATE: "states only",
        MetricLevel.COUNTY: "counties only",
        MetricLevel.BOTH: "states and counties",
    }
    for metric in sorted(dataset.metrics, key=lambda m: m.key):
        lines.append(
            f"- {metric.key}: {metric.label}, in {metric.unit}, for {scope_names[metric.level]}."
            + (f" {metric.description}" if metric.description else "")
        )
    text = "\n".join(lines)
    if len(text.encode("utf-8")) > 2048:
        text = text.encode("utf-8")[:2045].decode("utf-8", "ignore") + "..."
    return text
