"""Engine bundle: one loaded dataset plus every derived structure the
service and pipeline need (weights, navigation graphs, analytics, legend,
pattern-analysis cache, suggestion ring, knowledge fixtures)."""

from __future__ import annotations

import json
import threading
from importlib import resources
from typing import Optional

import numpy as np

from .analytics import AnalyticsEngine, Scope
from .geodata import GeoDataset, Level, load_dataset, schema_summary
from .knowledge import load_fixtures
from .lm import LanguageModelClient
from .navigation import (
    FocusState,
    NavigationGraph,
    bearing_and_distance,
    build_navigation_graph,
    is_strongly_connected,
)
from .pipeline import MentionIndex
from .spatial_stats import (
    DEFAULT_PERMUTATIONS,
    PatternSummary,
    SpatialWeights,
    build_queen_weights,
    global_morans_i,
    lisa,
    standardize_field,
    summarize_pattern,
)

LEGEND_RAMP = ("#f1eef6", "#bdc9e1", "#74a9cf", "#2b8cbe", "#045a8d")
LEGEND_CLASSES = 5


class EngineError(Exception):
    pass


def load_suggestions() -> list[str]:
    source = resources.files("geoqa").joinpath("assets", "suggestions.json")
    ring = json.loads(source.read_text(encoding="utf-8"))
    if len(ring) != 12:
        raise EngineError("suggestion ring must hold exactly 12 questions")
    return ring


class Engine:
    """Immutable-after-init bundle shared across sessions and requests."""

    def __init__(
        self,
        dataset: GeoDataset,
        lm: Optional[LanguageModelClient] = None,
        seed: int = 0,
        permutations: int = DEFAULT_PERMUTATIONS,
    ):
        self.dataset = dataset
        self.lm = lm
        self.seed = seed
        self.permutations = permutations
        self.index = MentionIndex(dataset)
        self.analytics = AnalyticsEngine(dataset)
        self.schema_text = schema_summary(dataset)
        self.fixtures = load_fixtures()
        self.suggestions = load_suggestions()

        states = dataset.regions_at(Level.STATE)
        self.state_weights: Optional[SpatialWeights] = None
        self.state_graph: Optional[NavigationGraph] = None
        if len(states) >= 2:
            self.state_weights = build_queen_weights(states)
            self.state_graph = build_navigation_graph(states, self.state_weights)
            if dataset.require_connected_navigation and not is_strongly_connected(self.state_graph):
                raise EngineError(
                    "state navigation graph is not strongly connected; "
                    "check boundaries or centroid overrides"
                )

        self._county_lock = threading.Lock()
        self._county_weights: dict[str, SpatialWeights] = {}
        self._county_graphs: dict[str, NavigationGraph] = {}
        self._all_county_weights: Optional[SpatialWeights] = None
        self._pattern_lock = threading.Lock()
        self._pattern_cache: dict[tuple, tuple[PatternSummary, str]] = {}
        self._legend: Optional[dict] = None

    # -- navigation ------------------------------------------------------

    def county_weights(self, state_id: str) -> SpatialWeights:
        with self._county_lock:
            if state_id not in self._county_weights:
                counties = self.dataset.counties_of(state_id)
                if len(counties) < 2:
                    raise EngineError(f"state {state_id} has fewer than 2 counties")
                self._county_weights[state_id] = build_queen_weights(counties)
            return self._county_weights[state_id]

    def county_graph(self, state_id: str) -> NavigationGraph:
        with self._county_lock:
            cached = self._county_graphs.get(state_id)
        if cached is not None:
            return cached
        counties = self.dataset.counties_of(state_id)
        graph = build_navigation_graph(counties, self.county_weights(state_id))
        with self._county_lock:
            self._county_graphs[state_id] = graph
        return graph

    def graph_for(self, focus: FocusState) -> NavigationGraph:
        if focus.level is Level.COUNTY:
            return self.county_graph(focus.focused_state_id)
        if self.state_graph is None:
            raise EngineError("no state navigation graph for this dataset")
        return self.state_graph

    def initial_focus(self) -> FocusState:
        """The state whose centroid sits nearest the dataset's overall centroid."""
        anchor = self.dataset.overall_centroid()
        states = self.dataset.regions_at(Level.STATE)
        best = min(
            states,
            key=lambda r: (bearing_and_distance(anchor, r.centroid)[1], r.id),
        )
        return FocusState(Level.STATE, best.id, best.id)

    # -- spatial pattern analysis -----------------------------------------

    def weights_for_scope(self, scope: Scope) -> SpatialWeights:
        if scope.level is Level.STATE:
            if self.state_weights is None:
                raise EngineError("dataset has no state level")
            return self.state_weights
        if scope.parent_state_id:
            return self.county_weights(scope.parent_state_id)
        with self._county_lock:
            if self._all_county_weights is None:
                counties = self.dataset.regions_at(Level.COUNTY)
                if len(counties) < 2:
                    raise EngineError("dataset has fewer than 2 counties")
                self._all_county_weights = build_queen_weights(counties)
            return self._all_county_weights

    def pattern(self, metric_key: str, scope: Scope) -> PatternSummary:
        key = (metric_key, scope.level.value, scope.parent_state_id, self.permutations, self.seed)
        with self._pattern_lock:
            cached = self._pattern_cache.get(key)
        if cached is not None:
            return cached[0]
        weights = self.weights_for_scope(scope)
        region_ids = [r.id for r in self.dataset.regions_at(scope.level)]
        if scope.parent_state_id:
            region_ids = [r.id for r in self.dataset.counties_of(scope.parent_state_id)]
        field = standardize_field(self.dataset, metric_key, region_ids)
        moran = global_morans_i(field, weights, self.permutations, self.seed)
        local = lisa(field, weights, self.permutations, self.seed)
        summary = summarize_pattern(moran, local, self.dataset, metric_key, field.excluded)
        with self._pattern_lock:
            self._pattern_cache[key] = (summary, "")
        return summary

    # -- defaults and legend ----------------------------------------------

    @property
    def default_metric_key(self) -> str:
        if self.dataset.default_metric and self.dataset.has_metric(self.dataset.default_metric):
            return self.dataset.default_metric
        return self.dataset.metrics[0].key

    def legend_payload(self) -> dict:
        """Quantile class breaks per metric and level, with the default ramp."""
        if self._legend is not None:
            return self._legend
        legend: dict = {}
        for metric in self.dataset.metrics:
            per_level: dict = {}
            for level in (Level.STATE, Level.COUNTY):
                values = [
                    v
                    for r in self.dataset.regions_at(level)
                    if (v := self.dataset.value(r.id, metric.key)) is not None
                ]
                if len(values) < LEGEND_CLASSES:
                    continue
                quantiles = np.quantile(
                    np.array(values, dtype=float),
                    np.linspace(0, 1, LEGEND_CLASSES + 1),
                )
                classes = []
                for i in range(LEGEND_CLASSES):
                    low, high = float(quantiles[i]), float(quantiles[i + 1])
                    classes.append(
                        {
                            "min": low,
                            "max": high,
                            "color": LEGEND_RAMP[i],
                            "label": f"{low:,.1f} to {high:,.1f} {metric.unit}",
                        }
                    )
                per_level[level.value] = {"classes": classes}
            if per_level:
                legend[metric.key] = {"unit": metric.unit, "levels": per_level}
        self._legend = legend
        return legend


def build_engine(
    config_path: str,
    lm: Optional[LanguageModelClient] = None,
    seed: int = 0,
    permutations: int = DEFAULT_PERMUTATIONS,
) -> Engine:
    return Engine(load_dataset(config_path), lm=lm, seed=seed, permutations=permutations)
