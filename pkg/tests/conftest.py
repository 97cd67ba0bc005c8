"""Shared fixtures: synthetic grid datasets and the bundled US dataset."""

from __future__ import annotations

from pathlib import Path
from typing import Callable, Optional

import pytest

from geoqa.engine import Engine
from geoqa.geodata import (
    GeoDataset,
    Level,
    MetricDefinition,
    MetricLevel,
    Region,
    load_dataset,
)

REPO_ROOT = Path(__file__).resolve().parents[1]
US_CONFIG = REPO_ROOT / "data" / "us_density" / "config.json"


def square_ring(x: float, y: float, size: float = 1.0):
    return (
        (x, y),
        (x + size, y),
        (x + size, y + size),
        (x, y + size),
        (x, y),
    )


def make_region(
    rid: str,
    ring,
    name: Optional[str] = None,
    level: Level = Level.STATE,
    parent_id: Optional[str] = None,
) -> Region:
    xs = [p[0] for p in ring]
    ys = [p[1] for p in ring]
    cx = (min(xs) + max(xs)) / 2
    cy = (min(ys) + max(ys)) / 2
    return Region(
        id=rid,
        name=name or rid,
        level=level,
        parent_id=parent_id,
        geometry=((tuple(ring),),),
        centroid=(cx, cy),
        centroid_overridden=False,
        area=(max(xs) - min(xs)) * (max(ys) - min(ys)),
        bbox=(min(xs), min(ys), max(xs), max(ys)),
    )


def grid_regions(rows: int, cols: int) -> list[Region]:
    """rows x cols unit squares; queen adjacency is the 8-neighborhood."""
    return [
        make_region(f"r{r}c{c}", square_ring(c, -r - 1.0))
        for r in range(rows)
        for c in range(cols)
    ]


def grid_dataset(
    rows: int,
    cols: int,
    value_fn: Callable[[int, int], Optional[float]],
    metric_key: str = "v",
) -> tuple[GeoDataset, list[Region]]:
    regions = grid_regions(rows, cols)
    values = {}
    for r in range(rows):
        for c in range(cols):
            v = value_fn(r, c)
            if v is not None:
                values[(f"r{r}c{c}", metric_key)] = float(v)
    dataset = GeoDataset(
        name=f"grid{rows}x{cols}",
        regions={x.id: x for x in regions},
        metrics=[MetricDefinition(metric_key, "value", "units", "", MetricLevel.BOTH)],
        values=values,
    )
    return dataset, regions


def simple_dataset(named_values: dict[str, Optional[float]], unit: str = "units") -> GeoDataset:
    """Row of unit squares named by the given keys, one metric 'v'."""
    regions = {}
    values = {}
    for i, (name, value) in enumerate(sorted(named_values.items())):
        region = make_region(f"s{i:03d}", square_ring(float(i), 0.0), name=name)
        regions[region.id] = region
        if value is not None:
            values[(region.id, "v")] = float(value)
    return GeoDataset(
        name="simple",
        regions=regions,
        metrics=[MetricDefinition("v", "value", unit, "", MetricLevel.BOTH)],
        values=values,
    )


@pytest.fixture(scope="session")
def us_engine() -> Engine:
    return Engine(load_dataset(US_CONFIG))


@pytest.fixture(scope="session")
def us_dataset(us_engine) -> GeoDataset:
    return us_engine.dataset


def state_id(dataset: GeoDataset, name: str) -> str:
    matches = [r for r in dataset.find_regions_by_name(name) if r.level is Level.STATE]
    assert matches, f"no state named {name}"
    return matches[0].id
