"""Keyboard navigation over the region adjacency structure.

Each region gets at most one Queen-adjacent neighbor per cardinal direction:
candidates are filtered to the direction's 90-degree bearing sector (measured
clockwise from geographic north between centroids) and the closest candidate
wins. County graphs are scoped to a single state, so arrowing off a state's
edge reports a boundary instead of hopping states.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .geodata import GeoDataset, Level, Region
from .spatial_stats import SpatialWeights


class Direction(str, Enum):
    NORTH = "north"
    EAST = "east"
    SOUTH = "south"
    WEST = "west"

    @property
    def opposite(self) -> "Direction":
        return _OPPOSITE[self]


_OPPOSITE = {
    Direction.NORTH: Direction.SOUTH,
    Direction.SOUTH: Direction.NORTH,
    Direction.EAST: Direction.WEST,
    Direction.WEST: Direction.EAST,
}

# bearing sectors, clockwise from north: [lo, hi)
_SECTORS = {
    Direction.NORTH: (315.0, 45.0),
    Direction.EAST: (45.0, 135.0),
    Direction.SOUTH: (135.0, 225.0),
    Direction.WEST: (225.0, 315.0),
}


def bearing_and_distance(
    source: tuple[float, float], target: tuple[float, float]
) -> tuple[float, float]:
    """Bearing (degrees clockwise from north) and local-Euclidean distance.

    Longitude deltas are scaled by cos(mean latitude), adequate at the
    state/county scale this engine targets.
    """
    (lon0, lat0), (lon1, lat1) = source, target
    mean_lat = math.radians((lat0 + lat1) / 2.0)
    dx = (lon1 - lon0) * math.cos(mean_lat)
    dy = lat1 - lat0
    bearing = math.degrees(math.atan2(dx, dy)) % 360.0
    return bearing, math.hypot(dx, dy)


def in_sector(bearing: float, direction: Direction) -> bool:
    lo, hi = _SECTORS[direction]
    if lo > hi:  # the north sector wraps through 0
        return bearing >= lo or bearing < hi
    return lo <= bearing < hi


@dataclass(frozen=True)
class NavigationGraph:
    level: Level
    edges: dict[str, dict[Direction, Optional[str]]]
    asymmetric_edges: int  # diagnostic: assigned edges whose reverse differs

    def neighbor(self, region_id: str, direction: Direction) -> Optional[str]:
        return self.edges[region_id][direction]

    def to_json(self) -> dict:
        short = {Direction.NORTH: "N", Direction.EAST: "E", Direction.SOUTH: "S", Direction.WEST: "W"}
        return {
            rid: {short[d]: target for d, target in dirs.items()}
            for rid, dirs in sorted(self.edges.items())
        }


def build_navigation_graph(regions: list[Region], w: SpatialWeights) -> NavigationGraph:
    """Assign at most one adjacent neighbor per cardinal direction per region."""
    by_id = {r.id: r for r in regions}
    edges: dict[str, dict[Direction, Optional[str]]] = {}
    for region in regions:
        choices: dict[Direction, Optional[str]] = {}
        candidates = []
        for nid in w.neighbors.get(region.id, ()):  # only Queen-adjacent regions
            neighbor = by_id.get(nid)
            if neighbor is None:
                continue
            bearing, distance = bearing_and_distance(region.centroid, neighbor.centroid)
            candidates.append((nid, bearing, distance))
        for direction in Direction:
            in_dir = [
                (distance, nid)
                for nid, bearing, distance in candidates
                if in_sector(bearing, direction)
            ]
            choices[direction] = min(in_dir)[1] if in_dir else None
        edges[region.id] = choices

    asymmetric = 0
    for rid, dirs in edges.items():
        for direction, target in dirs.items():
            if target is not None and edges[target][direction.opposite] != rid:
                asymmetric += 1
    level = regions[0].level if regions else Level.STATE
    return NavigationGraph(level=level, edges=edges, asymmetric_edges=asymmetric)


def is_strongly_connected(graph: NavigationGraph) -> bool:
    """Every region reachable from every other over assigned edges."""
    ids = list(graph.edges)
    if len(ids) <= 1:
        return True

    def reachable(start: str, reverse: bool) -> set[str]:
        if reverse:
            incoming: dict[str, list[str]] = {rid: [] for rid in ids}
            for rid, dirs in graph.edges.items():
                for target in dirs.values():
                    if target is not None:
                        incoming[target].append(rid)
            adjacency = incoming
        else:
            adjacency = {
                rid: [t for t in dirs.values() if t is not None]
                for rid, dirs in graph.edges.items()
            }
        seen = {start}
        stack = [start]
        while stack:
            for nxt in adjacency[stack.pop()]:
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        return seen

    return len(reachable(ids[0], False)) == len(ids) and len(
        reachable(ids[0], True)
    ) == len(ids)


@dataclass(frozen=True)
class FocusState:
    level: Level
    focused_id: str
    focused_state_id: str  # context state when level is county

    def __post_init__(self) -> None:
        if self.level is Level.STATE and self.focused_id != self.focused_state_id:
            raise ValueError("state focus must have focused_id == focused_state_id")


@dataclass(frozen=True)
class BoundaryNotice:
    """No neighbor in the requested direction; focus unchanged."""

    direction: Direction
    region_name: str
    level: Level

    @property
    def text(self) -> str:
        return f"There is no {self.level.noun} {self.direction.value} of {self.region_name}."


@dataclass(frozen=True)
class ZoomNotice:
    """Zoom request that cannot change level; focus unchanged."""

    text: str


def move(
    focus: FocusState,
    direction: Direction,
    graph: NavigationGraph,
    dataset: GeoDataset,
) -> FocusState | BoundaryNotice:
    """Arrow-key move: follows the assigned neighbor or reports the boundary."""
    target = graph.neighbor(focus.focused_id, direction)
    if target is None:
        region = dataset.regions[focus.focused_id]
        return BoundaryNotice(direction=direction, region_name=region.name, level=focus.level)
    if focus.level is Level.COUNTY:
        return FocusState(Level.COUNTY, target, focus.focused_state_id)
    return FocusState(Level.STATE, target, target)


class ZoomError(Exception):
    pass


def zoom_in(focus: FocusState, dataset: GeoDataset) -> FocusState:
    """Zoom a state focus to its county closest to the state centroid."""
    if focus.level is not Level.STATE:
        raise ZoomError("already at county level")
    state = dataset.regions[focus.focused_id]
    counties = dataset.counties_of(state.id)
    if not counties:
        raise ZoomError(f"{state.name} has no counties in this dataset")
    best = min(
        counties,
        key=lambda c: (bearing_and_distance(state.centroid, c.centroid)[1], c.id),
    )
    return FocusState(Level.COUNTY, best.id, state.id)


def zoom_out(focus: FocusState) -> FocusState | ZoomNotice:
    """Return to the parent state; at state level this is a no-op notice."""
    if focus.level is Level.STATE:
        return ZoomNotice("Already at the state level.")
    return FocusState(Level.STATE, focus.focused_state_id, focus.focused_state_id)
