"""Answer rendering: analytic results, pattern summaries, and notices become
chat text paired with map directives.

All templates carry explicit unit slots and every slot must be filled at
render time; a missing slot raises immediately rather than emitting a hole.
"""

from __future__ import annotations

import string
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .analytics import AnalyticResult
from .geodata import GeoDataset, Level, Region
from .navigation import BoundaryNotice, FocusState, ZoomNotice
from .spatial_stats import PatternSummary


class AnswerSource(str, Enum):
    LOCAL_DATA = "local_data"
    LANGUAGE_MODEL = "language_model"
    MIXED = "mixed"


@dataclass(frozen=True)
class MapDirective:
    focus: Optional[str] = None
    highlights: dict[str, tuple[str, ...]] = field(default_factory=dict)
    zoom: Optional[Level] = None

    def to_json(self) -> dict:
        out: dict = {}
        if self.focus:
            out["focus"] = self.focus
        if self.highlights:
            out["highlights"] = {k: list(v) for k, v in self.highlights.items()}
        if self.zoom:
            out["zoom"] = self.zoom.value
        return out


@dataclass(frozen=True)
class Answer:
    text: str
    announce: str = ""
    source: AnswerSource = AnswerSource.LOCAL_DATA
    map_directive: Optional[MapDirective] = None

    def to_json(self) -> dict:
        return {
            "text": self.text,
            "announce": self.announce,
            "source": self.source.value,
            "map": self.map_directive.to_json() if self.map_directive else {},
        }


class TemplateError(Exception):
    pass


def fill(template: str, **slots) -> str:
    """str.format that treats an unfilled slot as a build error."""
    needed = {name for _, name, _, _ in string.Formatter().parse(template) if name}
    missing = needed - set(slots)
    if missing:
        raise TemplateError(f"unfilled template slots: {sorted(missing)}")
    return template.format(**slots)


def format_value(value: Optional[float]) -> str:
    """Render a metric value: integers at or above 100, one decimal below,
    trailing .0 dropped, thousands separated."""
    if value is None:
        return "no data"
    if abs(value) >= 100:
        return f"{round(value):,}"
    rounded = round(value, 1)
    if rounded == int(rounded):
        return f"{int(rounded):,}"
    return f"{rounded:,}"


_COUNTY_SUFFIX_BY_STATE = {"22": "Parish"}  # Louisiana counties are parishes


def region_display(region: Region, dataset: GeoDataset) -> str:
    """Display name; counties get their unit suffix ('King' -> 'King County')."""
    if region.level is Level.COUNTY:
        suffix = _COUNTY_SUFFIX_BY_STATE.get(region.parent_id or "", "County")
        if not region.name.endswith(suffix):
            return f"{region.name} {suffix}"
    return region.name


def focus_announce(focus: FocusState, dataset: GeoDataset) -> str:
    region = dataset.regions[focus.focused_id]
    if focus.level is Level.COUNTY:
        state = dataset.regions[focus.focused_state_id]
        return f"Now focused on {region.name}, {state.name}."
    return f"Now focused on {region.name}."


TEMPLATES = {
    "retrieve": "{region} has {value} {unit}.",
    "retrieve_no_data": "No {metric} data is available for {region}.",
    "compare_pair": "{leader} has {leader_value} {unit}, while {other} has {other_value} {unit}. {leader} has the higher {metric}.",
    "compare_tie": "{regions} are tied at {value} {unit} for {metric}.",
    "find_extremum": "{region} has the {superlative} {metric}, with {value} {unit}.",
    "find_extremum_county": "{region} in {state} has the {superlative} {metric}, with {value} {unit}.",
    "aggregate": "The {statistic} {metric} across {scope} is {value} {unit}.",
    "aggregate_count": "{value} {scope} have {metric} data.",
    "filter": "{count} {scope} have {metric} {condition} {unit}: {listing}.",
    "filter_empty": "No {scope} match {metric} {condition} {unit}.",
    "sort": "{scope_cap} ranked by {metric} ({order}): {listing}.",
    "cluster": "{count} {scope} have a {metric} similar to {reference} ({value} {unit}): {listing}.",
    "cluster_empty": "No {scope} have a {metric} within 20% of {reference} ({value} {unit}).",
}

_STAT_NAMES = {
    "mean": "average",
    "median": "median",
    "sum": "total",
    "count": "count of",
    "stddev": "standard deviation of",
}


def _listing(rows, limit: Optional[int] = None) -> str:
    shown = rows if limit is None else rows[:limit]
    parts = [f"{name} ({format_value(value)} {unit})".rstrip() for name, value, unit in shown]
    text = ", ".join(parts)
    if limit is not None and len(rows) > limit:
        text += f", and {len(rows) - limit} more"
    return text


def render_analytic(result: AnalyticResult, dataset: GeoDataset) -> Answer:
    """Deterministic text for one analytic result, plus its map directive."""
    kind = result.kind
    rows = [
        (region_display(dataset.regions[r.region_id], dataset), r.value, r.unit)
        for r in result.rows
    ]
    ids = tuple(r.region_id for r in result.rows)
    narrative = result.narrative

    if kind == "retrieve":
        row = result.rows[0]
        region = dataset.regions[row.region_id]
        if row.value is None:
            text = fill(
                TEMPLATES["retrieve_no_data"],
                metric=narrative["metric"],
                region=region_display(region, dataset),
            )
            return Answer(text, source=AnswerSource.LOCAL_DATA)
        text = fill(
            TEMPLATES["retrieve"],
            region=region_display(region, dataset),
            value=format_value(row.value),
            unit=row.unit,
        )
        directive = MapDirective(focus=row.region_id, zoom=region.level)
        return Answer(text, announce=f"Now focused on {region.name}.", map_directive=directive)

    if kind == "compare":
        present = [r for r in result.rows if r.value is not None]
        directive = MapDirective(highlights={"referenced": ids})
        if len(present) < 2:
            text = "Not enough data to compare those regions."
            if narrative.get("missing"):
                text += f" Missing values for: {', '.join(narrative['missing'])}."
            return Answer(text, map_directive=directive)
        if narrative.get("tie"):
            tied = [r for r in present if r.value == present[0].value]
            text = fill(
                TEMPLATES["compare_tie"],
                regions=" and ".join(
                    region_display(dataset.regions[r.region_id], dataset) for r in tied
                ),
                value=format_value(present[0].value),
                unit=present[0].unit,
                metric=narrative["metric"],
            )
        elif len(present) == 2:
            text = fill(
                TEMPLATES["compare_pair"],
                leader=region_display(dataset.regions[present[0].region_id], dataset),
                leader_value=format_value(present[0].value),
                other=region_display(dataset.regions[present[1].region_id], dataset),
                other_value=format_value(present[1].value),
                unit=present[0].unit,
                metric=narrative["metric"],
            )
        else:
            listing = _listing(
                [(region_display(dataset.regions[r.region_id], dataset), r.value, r.unit) for r in present]
            )
            leader = region_display(dataset.regions[present[0].region_id], dataset)
            text = f"By {narrative['metric']}: {listing}. {leader} has the highest value."
        if narrative.get("missing"):
            text += f" No data for: {', '.join(narrative['missing'])}."
        return Answer(text, map_directive=directive)

    if kind == "find_extremum":
        superlative = "highest" if narrative["direction"] == "max" else "lowest"
        row = result.rows[0]
        region = dataset.regions[row.region_id]
        if narrative.get("tie"):
            names = " and ".join(name for name, _, _ in rows)
            text = (
                f"{names} are tied for the {superlative} {narrative['metric']}, "
                f"with {format_value(row.value)} {row.unit}."
            )
            return Answer(text, map_directive=MapDirective(highlights={"referenced": ids}))
        if region.level is Level.COUNTY:
            text = fill(
                TEMPLATES["find_extremum_county"],
                region=region_display(region, dataset),
                state=dataset.regions[region.parent_id].name,
                superlative=superlative,
                metric=narrative["metric"],
                value=format_value(row.value),
                unit=row.unit,
            )
        else:
            text = fill(
                TEMPLATES["find_extremum"],
                region=region_display(region, dataset),
                superlative=superlative,
                metric=narrative["metric"],
                value=format_value(row.value),
                unit=row.unit,
            )
        return Answer(
            text,
            announce=f"Now focused on {region.name}.",
            map_directive=MapDirective(focus=row.region_id, zoom=region.level),
        )

    if kind == "aggregate":
        if narrative["statistic"] == "count":
            text = fill(
                TEMPLATES["aggregate_count"],
                value=format_value(result.scalar),
                scope=narrative["scope"],
                metric=narrative["metric"],
            )
        else:
            text = fill(
                TEMPLATES["aggregate"],
                statistic=_STAT_NAMES[narrative["statistic"]],
                metric=narrative["metric"],
                scope=narrative["scope"],
                value=format_value(result.scalar),
                unit=narrative["unit"],
            )
        if narrative.get("skipped"):
            text += f" ({narrative['skipped']} regions excluded for missing data.)"
        return Answer(text)

    if kind == "filter":
        unit = narrative["unit"]
        if not result.rows:
            text = fill(
                TEMPLATES["filter_empty"],
                scope=narrative["scope"],
                metric=narrative["metric"],
                condition=narrative["condition"],
                unit=unit,
            )
            return Answer(text)
        text = fill(
            TEMPLATES["filter"],
            count=len(result.rows),
            scope=narrative["scope"],
            metric=narrative["metric"],
            condition=narrative["condition"],
            unit=unit,
            listing=_listing(rows, limit=10),
        )
        return Answer(text, map_directive=MapDirective(highlights={"referenced": ids}))

    if kind == "sort":
        order_word = "highest first" if narrative["order"] == "desc" else "lowest first"
        numbered = ", ".join(
            f"{i + 1}. {name} ({format_value(value)} {unit})"
            for i, (name, value, unit) in enumerate(rows)
        )
        text = fill(
            TEMPLATES["sort"],
            scope_cap=f"Top {len(rows)} {narrative['scope']}",
            metric=narrative["metric"],
            order=order_word,
            listing=numbered,
        )
        return Answer(text, map_directive=MapDirective(highlights={"referenced": ids}))

    if kind == "cluster":
        template = TEMPLATES["cluster"] if result.rows else TEMPLATES["cluster_empty"]
        text = fill(
            template,
            count=len(result.rows),
            scope=narrative["scope"],
            metric=narrative["metric"],
            reference=narrative["reference"],
            value=format_value(narrative["reference_value"]),
            unit=narrative["unit"],
            listing=_listing(rows, limit=10),
        )
        directive = MapDirective(highlights={"referenced": ids}) if ids else None
        return Answer(text, map_directive=directive)

    raise TemplateError(f"no template for analytic kind {kind!r}")


def render_pattern(summary: PatternSummary, dataset: GeoDataset) -> Answer:
    highlights = {
        group.label.value: group.all_ids for group in summary.clusters
    }
    directive = MapDirective(highlights=highlights) if highlights else None
    return Answer(summary.text, map_directive=directive)


def render_focus_change(focus: FocusState, dataset: GeoDataset) -> Answer:
    announce = focus_announce(focus, dataset)
    return Answer(
        announce,
        announce=announce,
        map_directive=MapDirective(focus=focus.focused_id, zoom=focus.level),
    )


def render_notice(notice: BoundaryNotice | ZoomNotice) -> Answer:
    return Answer(notice.text, announce=notice.text)


CAPABILITIES = (
    "compare and sort data",
    "filter data",
    "find similar values and outliers",
    "describe patterns on the map",
    "describe the legend",
    "describe state shapes",
    "identify neighboring states",
)

# each capability maps onto at least one dispatchable query kind
CAPABILITY_KINDS = {
    "compare and sort data": ("compare", "sort"),
    "filter data": ("filter",),
    "find similar values and outliers": ("cluster", "outlier"),
    "describe patterns on the map": ("pattern",),
    "describe the legend": ("legend",),
    "describe state shapes": ("shape",),
    "identify neighboring states": ("spatial_relationships",),
}


def capability_list() -> Answer:
    lines = [f"{i + 1}. I can {item}." for i, item in enumerate(CAPABILITIES)]
    text = "Here is what I can do: " + " ".join(lines)
    return Answer(text, announce="Capability list ready.")
