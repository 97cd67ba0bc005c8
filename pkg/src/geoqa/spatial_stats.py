"""Spatial autocorrelation statistics over region sets.

Queen-contiguity weights, global Moran's I, and local (LISA) cluster labels
with permutation inference. Inference uses a counter-based Philox generator
so identical (field, weights, permutations, seed) inputs always reproduce the
same pseudo p-values, and all arrays are built in canonical id order so
relabeling the input regions cannot change any result.

Formulas, with z the field standardized by the population standard deviation:

    I   = (n / S0) * sum_ij( w_ij * z_i * z_j ) / sum_i( z_i^2 )
    I_i = z_i * sum_j( w_ij * z_j )

Global significance permutes the whole value vector across regions; local
significance holds region i fixed and draws its neighbor values from the
remaining regions (conditional permutation). Both report the one-sided
pseudo p-value (count of permuted statistics at least as extreme as the
observed one, in the direction of its sign, plus one) / (permutations + 1).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .geodata import GeoDataset, Region

DEFAULT_PERMUTATIONS = 999
SIGNIFICANCE = 0.05


class SpatialStatsError(Exception):
    pass


class ConstantFieldError(SpatialStatsError):
    """The metric has zero variance over the included regions."""


@dataclass(frozen=True)
class SpatialWeights:
    """Sparse symmetric neighbor structure over an ordered region set."""

    order: tuple[str, ...]
    neighbors: dict[str, tuple[str, ...]]
    weights: dict[str, tuple[float, ...]]
    row_standardized: bool
    s0: float
    isolates: tuple[str, ...]

    def cardinality(self, region_id: str) -> int:
        return len(self.neighbors[region_id])


def build_queen_weights(regions: list[Region]) -> SpatialWeights:
    """Queen contiguity: regions sharing at least one boundary point are
    neighbors with weight 1.

    Relies on adjacent inputs carrying identical border vertices (true for
    anything derived from a shared-arc topology); isolates are permitted and
    flagged.
    """
    if len(regions) < 2:
        raise SpatialStatsError("queen weights need at least 2 regions")
    vertex_owners: dict[tuple[float, float], set[str]] = {}
    for region in regions:
        for polygon in region.geometry:
            for ring in polygon:
                for point in ring:
                    vertex_owners.setdefault(point, set()).add(region.id)

    neighbor_sets: dict[str, set[str]] = {r.id: set() for r in regions}
    for owners in vertex_owners.values():
        if len(owners) < 2:
            continue
        for rid in owners:
            neighbor_sets[rid].update(owners - {rid})

    order = tuple(sorted(neighbor_sets))
    neighbors = {rid: tuple(sorted(neighbor_sets[rid])) for rid in order}
    weights = {rid: tuple(1.0 for _ in neighbors[rid]) for rid in order}
    s0 = float(sum(len(v) for v in neighbors.values()))
    isolates = tuple(rid for rid in order if not neighbors[rid])
    return SpatialWeights(order, neighbors, weights, False, s0, isolates)


def row_standardize(w: SpatialWeights) -> SpatialWeights:
    """Scale each non-isolate row to sum to 1. Idempotent; isolate rows stay zero."""
    weights = {}
    for rid in w.order:
        row = w.weights[rid]
        total = sum(row)
        weights[rid] = tuple(v / total for v in row) if total > 0 else row
    s0 = float(sum(sum(row) for row in weights.values()))
    return SpatialWeights(w.order, w.neighbors, weights, True, s0, w.isolates)


def subset_weights(w: SpatialWeights, keep: set[str]) -> SpatialWeights:
    """Restrict to a region subset (e.g. regions with non-null values)."""
    order = tuple(rid for rid in w.order if rid in keep)
    neighbors = {}
    weights = {}
    for rid in order:
        pairs = [
            (n, wt) for n, wt in zip(w.neighbors[rid], w.weights[rid]) if n in keep
        ]
        neighbors[rid] = tuple(n for n, _ in pairs)
        weights[rid] = tuple(wt for _, wt in pairs)
    s0 = float(sum(sum(row) for row in weights.values()))
    isolates = tuple(rid for rid in order if not neighbors[rid])
    return SpatialWeights(order, neighbors, weights, w.row_standardized, s0, isolates)


@dataclass(frozen=True)
class StandardizedField:
    """Z-scored metric values over the included (non-null) regions."""

    metric_key: str
    ids: tuple[str, ...]
    z: np.ndarray
    mean: float
    std: float
    excluded: tuple[tuple[str, str], ...]  # (region id, reason)

    @property
    def n(self) -> int:
        return len(self.ids)


def standardize_field(dataset: GeoDataset, metric_key: str, region_ids: list[str]) -> StandardizedField:
    """Z-score a metric over the given regions, excluding nulls with reasons."""
    included: list[str] = []
    excluded: list[tuple[str, str]] = []
    raw: list[float] = []
    for rid in sorted(region_ids):
        value = dataset.value(rid, metric_key)
        if value is None:
            excluded.append((rid, "no data"))
        else:
            included.append(rid)
            raw.append(value)
    values = np.asarray(raw, dtype=float)
    if len(values) >= 1:
        mean = float(values.mean())
        std = float(values.std())  # population standard deviation
    else:
        mean = std = 0.0
    z = (values - mean) / std if std > 0 else np.zeros_like(values)
    return StandardizedField(
        metric_key=metric_key,
        ids=tuple(included),
        z=z,
        mean=mean,
        std=std,
        excluded=tuple(excluded),
    )


class Interpretation(str, Enum):
    CLUSTERED = "clustered"
    DISPERSED = "dispersed"
    RANDOM = "random"


@dataclass(frozen=True)
class MoranResult:
    i: float
    expected_i: float
    n: int
    permutations: int
    p_sim: float
    interpretation: Interpretation


class LisaLabel(str, Enum):
    HIGH_HIGH = "High-High"
    LOW_LOW = "Low-Low"
    HIGH_LOW = "High-Low"
    LOW_HIGH = "Low-High"
    NOT_SIGNIFICANT = "Not significant"


@dataclass(frozen=True)
class LisaCell:
    local_i: float
    p_sim: float
    label: LisaLabel
    note: str = ""


@dataclass(frozen=True)
class LisaResult:
    metric_key: str
    permutations: int
    cells: dict[str, LisaCell]

    def ids_with_label(self, label: LisaLabel) -> list[str]:
        return sorted(rid for rid, c in self.cells.items() if c.label is label)


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def _aligned(field: StandardizedField, w: SpatialWeights):
    """Canonically ordered z vector, neighbor index lists, and row weights."""
    included = set(field.ids)
    missing = included - set(w.order)
    if missing:
        raise SpatialStatsError(f"field regions missing from weights: {sorted(missing)[:3]}")
    ids = tuple(sorted(field.ids))
    pos = {rid: i for i, rid in enumerate(ids)}
    zmap = dict(zip(field.ids, field.z))
    z = np.array([zmap[rid] for rid in ids], dtype=float)
    nbr_idx = []
    nbr_wts = []
    for rid in ids:
        pairs = [
            (pos[n], wt)
            for n, wt in zip(w.neighbors[rid], w.weights[rid])
            if n in included
        ]
        nbr_idx.append(np.array([p for p, _ in pairs], dtype=int))
        nbr_wts.append(np.array([wt for _, wt in pairs], dtype=float))
    return ids, z, nbr_idx, nbr_wts


def _directional_p(observed: float, permuted: np.ndarray, permutations: int) -> float:
    if observed >= 0:
        extreme = int(np.sum(permuted >= observed))
    else:
        extreme = int(np.sum(permuted <= observed))
    return (extreme + 1) / (permutations + 1)


def global_morans_i(
    field: StandardizedField,
    w: SpatialWeights,
    permutations: int = DEFAULT_PERMUTATIONS,
    seed: int = 0,
) -> MoranResult:
    """Global Moran's I with total-permutation pseudo significance."""
    if field.n < 3:
        raise SpatialStatsError(f"Moran's I needs at least 3 regions, got {field.n}")
    if field.std == 0:
        raise ConstantFieldError(f"constant field: {field.metric_key} has zero variance")
    w = row_standardize(w)
    ids, z, nbr_idx, nbr_wts = _aligned(field, w)
    s0 = sum(float(wts.sum()) for wts in nbr_wts)

    # flatten the sparse structure once so each permutation is one vector op
    n = len(ids)
    rows = np.concatenate([np.full(len(ix), i, dtype=int) for i, ix in enumerate(nbr_idx)]) if n else np.empty(0, int)
    cols = np.concatenate(nbr_idx) if nbr_idx else np.empty(0, int)
    vals = np.concatenate(nbr_wts) if nbr_wts else np.empty(0, float)

    def stat(zv: np.ndarray) -> float:
        denom = float(zv @ zv)
        if denom == 0 or s0 == 0:
            return 0.0
        num = float(vals @ (zv[rows] * zv[cols]))
        return (n / s0) * num / denom

    observed = stat(z)
    rng = _rng(seed)
    permuted = np.empty(permutations, dtype=float)
    for k in range(permutations):
        permuted[k] = stat(rng.permutation(z))
    p_sim = _directional_p(observed, permuted, permutations)

    if observed > 0 and p_sim < SIGNIFICANCE:
        interpretation = Interpretation.CLUSTERED
    elif observed < 0 and p_sim < SIGNIFICANCE:
        interpretation = Interpretation.DISPERSED
    else:
        interpretation = Interpretation.RANDOM
    return MoranResult(
        i=observed,
        expected_i=-1.0 / (field.n - 1),
        n=field.n,
        permutations=permutations,
        p_sim=p_sim,
        interpretation=interpretation,
    )


def _quadrant(z_i: float, lag_i: float) -> Optional[LisaLabel]:
    if z_i > 0 and lag_i > 0:
        return LisaLabel.HIGH_HIGH
    if z_i < 0 and lag_i < 0:
        return LisaLabel.LOW_LOW
    if z_i > 0 and lag_i < 0:
        return LisaLabel.HIGH_LOW
    if z_i < 0 and lag_i > 0:
        return LisaLabel.LOW_HIGH
    return None  # on a quadrant boundary; cannot satisfy any strict label


def lisa(
    field: StandardizedField,
    w: SpatialWeights,
    permutations: int = DEFAULT_PERMUTATIONS,
    seed: int = 0,
) -> LisaResult:
    """Local Moran's I with conditional-permutation pseudo p-values.

    Region i's own value stays fixed while its neighbor positions are filled
    by draws from all other included values; the same draw matrix is reused
    across regions (standard conditional-randomization shortcut).
    """
    if field.n < 3:
        raise SpatialStatsError(f"LISA needs at least 3 regions, got {field.n}")
    if field.std == 0:
        raise ConstantFieldError(f"constant field: {field.metric_key} has zero variance")
    w = row_standardize(w)
    ids, z, nbr_idx, nbr_wts = _aligned(field, w)
    n = len(ids)

    max_k = max((len(ix) for ix in nbr_idx), default=0)
    rng = _rng(seed)
    # one (permutations x max_k) block of draws from the n-1 "other" positions
    draw = np.empty((permutations, max_k), dtype=int) if max_k else np.empty((permutations, 0), dtype=int)
    for row in range(permutations):
        draw[row] = rng.permutation(n - 1)[:max_k]

    cells: dict[str, LisaCell] = {}
    others_index = np.arange(n)
    for i, rid in enumerate(ids):
        k = len(nbr_idx[i])
        if k == 0:
            cells[rid] = LisaCell(0.0, 1.0, LisaLabel.NOT_SIGNIFICANT, note="no included neighbors")
            continue
        lag = float(nbr_wts[i] @ z[nbr_idx[i]])
        observed = z[i] * lag
        others = z[np.delete(others_index, i)]
        sampled = others[draw[:, :k]]
        lag_perm = sampled @ nbr_wts[i]
        permuted = z[i] * lag_perm
        p_sim = _directional_p(observed, permuted, permutations)
        quadrant = _quadrant(z[i], lag)
        if p_sim < SIGNIFICANCE and quadrant is not None:
            label = quadrant
        else:
            label = LisaLabel.NOT_SIGNIFICANT
        cells[rid] = LisaCell(float(observed), float(p_sim), label)
    return LisaResult(metric_key=field.metric_key, permutations=permutations, cells=cells)


@dataclass(frozen=True)
class ClusterGroup:
    label: LisaLabel
    example_ids: tuple[str, ...]
    all_ids: tuple[str, ...]


@dataclass(frozen=True)
class PatternSummary:
    metric_key: str
    interpretation: Interpretation
    moran_i: float
    p_sim: float
    clusters: tuple[ClusterGroup, ...]
    excluded: tuple[tuple[str, str], ...]
    text: str

    def to_json(self) -> dict:
        return {
            "interpretation": self.interpretation.value,
            "moran_i": self.moran_i,
            "p_sim": self.p_sim,
            "clusters": [
                {
                    "label": c.label.value,
                    "example_ids": list(c.example_ids),
                    "all_ids": list(c.all_ids),
                }
                for c in self.clusters
            ],
            "excluded": [list(e) for e in self.excluded],
        }


_LABEL_PHRASES = {
    LisaLabel.HIGH_HIGH: "high values surrounded by high values",
    LisaLabel.LOW_LOW: "low values surrounded by low values",
    LisaLabel.HIGH_LOW: "high values surrounded by low values",
    LisaLabel.LOW_HIGH: "low values surrounded by high values",
}

_INTERPRETATION_PHRASES = {
    Interpretation.CLUSTERED: "a clustered pattern: similar values tend to sit near each other",
    Interpretation.DISPERSED: "a dispersed pattern: neighboring values tend to differ",
    Interpretation.RANDOM: "no significant spatial pattern",
}


def summarize_pattern(
    moran: MoranResult,
    lisa_result: LisaResult,
    dataset: GeoDataset,
    metric_key: str,
    excluded: tuple[tuple[str, str], ...] = (),
) -> PatternSummary:
    """Verbal summary plus full highlight sets for each significant cluster type.

    Representatives are the top regions by absolute local I (ties broken by
    region id) with at most two per cluster type.
    """
    metric = dataset.metric(metric_key)
    clusters: list[ClusterGroup] = []
    for label in (
        LisaLabel.HIGH_HIGH,
        LisaLabel.LOW_LOW,
        LisaLabel.HIGH_LOW,
        LisaLabel.LOW_HIGH,
    ):
        all_ids = lisa_result.ids_with_label(label)
        if not all_ids:
            continue
        ranked = sorted(all_ids, key=lambda rid: (-abs(lisa_result.cells[rid].local_i), rid))
        clusters.append(ClusterGroup(label, tuple(ranked[:2]), tuple(all_ids)))

    lines = [
        f"The map of {metric.label} shows {_INTERPRETATION_PHRASES[moran.interpretation]} "
        f"(Moran's I = {moran.i:.3f}, p = {moran.p_sim:.3f})."
    ]
    if moran.interpretation is Interpretation.RANDOM and not clusters:
        lines.append("No statistically significant local clusters were found.")
    for group in clusters:
        names = [dataset.regions[rid].name for rid in group.example_ids]
        extra = len(group.all_ids) - len(group.example_ids)
        example_text = " and ".join(names)
        suffix = f" and {extra} more" if extra > 0 else ""
        lines.append(
            f"{group.label.value} cluster ({_LABEL_PHRASES[group.label]}): "
            f"{example_text}{suffix}."
        )
    if excluded:
        lines.append(f"{len(excluded)} regions were excluded for missing data.")
    return PatternSummary(
        metric_key=metric_key,
        interpretation=moran.interpretation,
        moran_i=moran.i,
        p_sim=moran.p_sim,
        clusters=tuple(clusters),
        excluded=excluded,
        text=" ".join(lines),
    )
