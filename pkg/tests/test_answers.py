"""Answer rendering: templates, units, directives, capability list."""

import pytest

from geoqa.analytics import FilterCondition, Scope, SortSpec
from geoqa.answers import (
    CAPABILITIES,
    CAPABILITY_KINDS,
    TemplateError,
    capability_list,
    fill,
    format_value,
    region_display,
    render_analytic,
    render_notice,
    render_pattern,
)
from geoqa.geodata import Level
from geoqa.navigation import BoundaryNotice, Direction
from geoqa.pipeline import QueryClass

from conftest import state_id


def test_format_value_rules():
    assert format_value(109.46) == "109"
    assert format_value(1065.97) == "1,066"
    assert format_value(57.0) == "57"
    assert format_value(57.14) == "57.1"
    assert format_value(0.5) == "0.5"
    assert format_value(-250.2) == "-250"
    assert format_value(None) == "no data"


def test_fill_rejects_missing_slots():
    with pytest.raises(TemplateError, match="unit"):
        fill("{region} has {value} {unit}.", region="X", value="1")


def test_retrieve_answer_matches_transcript(us_engine, us_dataset):
    result = us_engine.analytics.retrieve(state_id(us_dataset, "Wisconsin"), "density")
    answer = render_analytic(result, us_dataset)
    assert answer.text == "Wisconsin has 109 people/mi²."
    assert answer.map_directive.focus == state_id(us_dataset, "Wisconsin")
    assert answer.announce  # focus change always announces


def test_compare_answer_text(us_engine, us_dataset):
    result = us_engine.analytics.compare(
        [state_id(us_dataset, "South Carolina"), state_id(us_dataset, "Iowa")], "density"
    )
    answer = render_analytic(result, us_dataset)
    assert "South Carolina has 171 people/mi²" in answer.text
    assert "Iowa has 57 people/mi²" in answer.text
    assert "South Carolina has the higher population density." in answer.text
    assert set(answer.map_directive.highlights["referenced"]) == {
        state_id(us_dataset, "South Carolina"),
        state_id(us_dataset, "Iowa"),
    }


def test_county_extremum_names_parent_state(us_engine, us_dataset):
    wa = state_id(us_dataset, "Washington")
    result = us_engine.analytics.extremum("density", "max", Scope(Level.COUNTY, wa))
    answer = render_analytic(result, us_dataset)
    assert (
        answer.text
        == "King County in Washington has the highest population density, with 1,066 people/mi²."
    )
    assert answer.map_directive.focus == result.rows[0].region_id


def test_boundary_notice_render():
    notice = BoundaryNotice(Direction.SOUTH, "Texas", Level.STATE)
    answer = render_notice(notice)
    assert answer.text == "There is no state south of Texas."
    assert answer.map_directive is None
    assert answer.announce == answer.text


def test_empty_filter_answer(us_engine, us_dataset):
    result = us_engine.analytics.filter(
        "density", FilterCondition(">", 9000.0), Scope(Level.STATE)
    )
    answer = render_analytic(result, us_dataset)
    assert answer.text == "No states match population density > 9000 people/mi²."
    assert answer.map_directive is None


def test_sort_answer_numbered(us_engine, us_dataset):
    result = us_engine.analytics.sort(SortSpec("density", "desc", 3), Scope(Level.STATE))
    answer = render_analytic(result, us_dataset)
    assert "1. New Jersey" in answer.text
    assert "2. Rhode Island" in answer.text


def test_region_display_county_suffixes(us_dataset):
    king = next(r for r in us_dataset.regions.values() if r.name == "King" and r.level is Level.COUNTY)
    assert region_display(king, us_dataset) == "King County"
    acadia = next(
        r
        for r in us_dataset.regions.values()
        if r.level is Level.COUNTY and r.parent_id == "22"
    )
    assert region_display(acadia, us_dataset).endswith(" Parish")


def test_capability_list_has_seven_items():
    answer = capability_list()
    assert len(CAPABILITIES) == 7
    for i in range(1, 8):
        assert f"{i}." in answer.text
    assert "compare and sort data" in answer.text
    assert "identify neighboring states" in answer.text


def test_capability_list_deterministic():
    assert capability_list().text == capability_list().text


def test_capabilities_map_to_dispatchable_kinds():
    dispatchable = {k.value for k in QueryClass}
    for capability in CAPABILITIES:
        kinds = CAPABILITY_KINDS[capability]
        assert kinds, capability
        for kind in kinds:
            assert kind in dispatchable


def test_pattern_answer_has_highlights(us_engine, us_dataset):
    summary = us_engine.pattern("density", Scope(Level.STATE))
    answer = render_pattern(summary, us_dataset)
    assert answer.map_directive is not None
    assert "High-High" in answer.map_directive.highlights
    assert answer.text == summary.text


def test_answer_json_shape(us_engine, us_dataset):
    result = us_engine.analytics.retrieve(state_id(us_dataset, "Wisconsin"), "density")
    payload = render_analytic(result, us_dataset).to_json()
    assert set(payload) == {"text", "announce", "source", "map"}
    assert payload["source"] == "local_data"
    assert payload["map"]["focus"] == state_id(us_dataset, "Wisconsin")
