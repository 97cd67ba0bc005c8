"""Analytical query execution over the in-memory dataset.

Retrieve/compare/extremum/aggregate/filter/sort/similar all reduce to linear
scans and sorts over the loaded attribute table; every operation skips null
values and reports how many regions it skipped. Results carry the metric's
declared unit so answer templates never render a bare number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from .geodata import GeoDataset, Level, MetricDefinition, Region

SIMILARITY_MARGIN = 0.2  # relative margin for "similar value" queries, inclusive


class AnalyticsError(Exception):
    pass


class UnknownEntityError(AnalyticsError):
    """A region or metric token not present in the dataset."""


class NoDataError(AnalyticsError):
    """The requested scope has no usable values."""


@dataclass(frozen=True)
class Scope:
    """Which regions an operation ranges over."""

    level: Level
    parent_state_id: Optional[str] = None  # restrict counties to one state

    def describe(self, dataset: GeoDataset) -> str:
        if self.parent_state_id:
            return f"counties of {dataset.regions[self.parent_state_id].name}"
        return "states" if self.level is Level.STATE else "counties"


@dataclass(frozen=True)
class FilterCondition:
    comparator: str  # one of < <= > >= = between
    threshold: float
    threshold_high: Optional[float] = None

    def matches(self, value: float) -> bool:
        if self.comparator == "<":
            return value < self.threshold
        if self.comparator == "<=":
            return value <= self.threshold
        if self.comparator == ">":
            return value > self.threshold
        if self.comparator == ">=":
            return value >= self.threshold
        if self.comparator == "=":
            return value == self.threshold
        if self.comparator == "between":
            high = self.threshold_high if self.threshold_high is not None else self.threshold
            return self.threshold <= value <= high
        raise AnalyticsError(f"unknown comparator {self.comparator!r}")

    def describe(self) -> str:
        if self.comparator == "between":
            return f"between {self.threshold:g} and {self.threshold_high:g}"
        return f"{self.comparator} {self.threshold:g}"


@dataclass(frozen=True)
class SortSpec:
    metric_key: str
    order: str  # "asc" | "desc"
    limit: int


@dataclass(frozen=True)
class AnalyticRow:
    region_id: str
    region_name: str
    value: Optional[float]
    unit: str


@dataclass(frozen=True)
class AnalyticResult:
    kind: str
    rows: tuple[AnalyticRow, ...]
    scalar: Optional[float] = None
    narrative: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "rows": [
                {"id": r.region_id, "name": r.region_name, "value": r.value, "unit": r.unit}
                for r in self.rows
            ],
            "scalar": self.scalar,
            "narrative": self.narrative,
        }


class AnalyticsEngine:
    """Linear-scan analytics over one immutable GeoDataset."""

    def __init__(self, dataset: GeoDataset):
        self.dataset = dataset

    # -- helpers ---------------------------------------------------------

    def _metric(self, key: str) -> MetricDefinition:
        try:
            return self.dataset.metric(key)
        except KeyError:
            raise UnknownEntityError(f"unknown metric: {key}") from None

    def _region(self, region_id: str) -> Region:
        region = self.dataset.regions.get(region_id)
        if region is None:
            raise UnknownEntityError(f"unknown region: {region_id}")
        return region

    def _scope_regions(self, scope: Scope) -> list[Region]:
        if scope.parent_state_id:
            self._region(scope.parent_state_id)
            return self.dataset.counties_of(scope.parent_state_id)
        return self.dataset.regions_at(scope.level)

    def _valued(self, scope: Scope, key: str) -> tuple[list[tuple[Region, float]], int]:
        """(region, value) pairs with non-null values, plus the skipped count."""
        pairs = []
        skipped = 0
        for region in self._scope_regions(scope):
            value = self.dataset.value(region.id, key)
            if value is None:
                skipped += 1
            else:
                pairs.append((region, value))
        return pairs, skipped

    def _row(self, region: Region, value: Optional[float], unit: str) -> AnalyticRow:
        return AnalyticRow(region.id, region.name, value, unit)

    # -- operations ------------------------------------------------------

    def retrieve(self, region_id: str, metric_key: str) -> AnalyticResult:
        metric = self._metric(metric_key)
        region = self._region(region_id)
        value = self.dataset.value(region_id, metric_key)
        narrative = {"region": region.name, "metric": metric.label, "no_data": value is None}
        return AnalyticResult(
            kind="retrieve",
            rows=(self._row(region, value, metric.unit),),
            narrative=narrative,
        )

    def compare(self, region_ids: list[str], metric_key: str) -> AnalyticResult:
        if len(set(region_ids)) < 2:
            raise AnalyticsError("compare needs at least 2 distinct regions")
        metric = self._metric(metric_key)
        regions = [self._region(rid) for rid in region_ids]
        valued = [(r, self.dataset.value(r.id, metric_key)) for r in regions]
        present = [(r, v) for r, v in valued if v is not None]
        present.sort(key=lambda rv: (-rv[1], rv[0].name))
        missing = [r for r, v in valued if v is None]
        rows = tuple(
            self._row(r, v, metric.unit) for r, v in present
        ) + tuple(self._row(r, None, metric.unit) for r in missing)
        narrative: dict = {"metric": metric.label, "missing": [r.name for r in missing]}
        if len(present) >= 2:
            top_value = present[0][1]
            leaders = [r.name for r, v in present if v == top_value]
            narrative["tie"] = len(leaders) > 1
            narrative["leader"] = leaders if len(leaders) > 1 else leaders[0]
        return AnalyticResult(kind="compare", rows=rows, narrative=narrative)

    def extremum(self, metric_key: str, direction: str, scope: Scope) -> AnalyticResult:
        metric = self._metric(metric_key)
        pairs, skipped = self._valued(scope, metric_key)
        if not pairs:
            raise NoDataError(f"no {metric.label} data for {scope.describe(self.dataset)}")
        pick = max(v for _, v in pairs) if direction == "max" else min(v for _, v in pairs)
        tied = sorted((r for r, v in pairs if v == pick), key=lambda r: r.name)
        rows = tuple(self._row(r, pick, metric.unit) for r in tied)
        return AnalyticResult(
            kind="find_extremum",
            rows=rows,
            narrative={
                "metric": metric.label,
                "direction": direction,
                "scope": scope.describe(self.dataset),
                "tie": len(tied) > 1,
                "skipped": skipped,
            },
        )

    def aggregate(self, metric_key: str, statistic: str, scope: Scope) -> AnalyticResult:
        metric = self._metric(metric_key)
        pairs, skipped = self._valued(scope, metric_key)
        values = sorted(v for _, v in pairs)
        if not values:
            raise NoDataError(f"no {metric.label} data for {scope.describe(self.dataset)}")
        if statistic == "mean":
            scalar = sum(values) / len(values)
        elif statistic == "median":
            mid = len(values) // 2
            # even-length median: mean of the two middle values
            scalar = values[mid] if len(values) % 2 else (values[mid - 1] + values[mid]) / 2
        elif statistic == "sum":
            scalar = float(sum(values))
        elif statistic == "count":
            scalar = float(len(values))
        elif statistic == "stddev":
            if len(values) < 2:
                raise NoDataError("standard deviation needs at least 2 values")
            mean = sum(values) / len(values)
            scalar = math.sqrt(sum((v - mean) ** 2 for v in values) / len(values))
        else:
            raise AnalyticsError(f"unknown statistic {statistic!r}")
        unit = "" if statistic == "count" else metric.unit
        return AnalyticResult(
            kind="aggregate",
            rows=(),
            scalar=scalar,
            narrative={
                "metric": metric.label,
                "statistic": statistic,
                "scope": scope.describe(self.dataset),
                "unit": unit,
                "count": len(values),
                "skipped": skipped,
            },
        )

    def filter(self, metric_key: str, condition: FilterCondition, scope: Scope) -> AnalyticResult:
        metric = self._metric(metric_key)
        pairs, skipped = self._valued(scope, metric_key)
        matched = [(r, v) for r, v in pairs if condition.matches(v)]
        matched.sort(key=lambda rv: (-rv[1], rv[0].name))
        return AnalyticResult(
            kind="filter",
            rows=tuple(self._row(r, v, metric.unit) for r, v in matched),
            narrative={
                "metric": metric.label,
                "condition": condition.describe(),
                "scope": scope.describe(self.dataset),
                "unit": metric.unit,
                "skipped": skipped,
            },
        )

    def sort(self, spec: SortSpec, scope: Scope) -> AnalyticResult:
        if spec.limit < 1:
            raise AnalyticsError("sort limit must be >= 1")
        metric = self._metric(spec.metric_key)
        pairs, skipped = self._valued(scope, spec.metric_key)
        reverse = spec.order == "desc"
        pairs.sort(key=lambda rv: ((-rv[1] if reverse else rv[1]), rv[0].name))
        top = pairs[: spec.limit]
        return AnalyticResult(
            kind="sort",
            rows=tuple(self._row(r, v, metric.unit) for r, v in top),
            narrative={
                "metric": metric.label,
                "order": spec.order,
                "limit": spec.limit,
                "scope": scope.describe(self.dataset),
                "skipped": skipped,
            },
        )

    def similar(self, reference_id: str, metric_key: str, scope: Scope) -> AnalyticResult:
        metric = self._metric(metric_key)
        reference = self._region(reference_id)
        ref_value = self.dataset.value(reference_id, metric_key)
        if ref_value is None:
            raise NoDataError(f"{reference.name} has no {metric.label} data")
        pairs, skipped = self._valued(scope, metric_key)
        margin = SIMILARITY_MARGIN * abs(ref_value)  # zero reference: exact matches only
        matched = [
            (r, v)
            for r, v in pairs
            if r.id != reference_id and abs(v - ref_value) <= margin
        ]
        matched.sort(key=lambda rv: (abs(rv[1] - ref_value), rv[0].name))
        return AnalyticResult(
            kind="cluster",
            rows=tuple(self._row(r, v, metric.unit) for r, v in matched),
            narrative={
                "metric": metric.label,
                "reference": reference.name,
                "reference_value": ref_value,
                "unit": metric.unit,
                "scope": scope.describe(self.dataset),
                "skipped": skipped,
            },
        )
