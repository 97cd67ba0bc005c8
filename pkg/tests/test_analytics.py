"""Analytical operations against brute-force oracles."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geoqa.analytics import (
    AnalyticsEngine,
    AnalyticsError,
    FilterCondition,
    NoDataError,
    Scope,
    SortSpec,
    UnknownEntityError,
)
from geoqa.geodata import GeoDataset, Level, MetricDefinition

from conftest import make_region, simple_dataset, square_ring, state_id


@pytest.fixture(scope="module")
def us_analytics(us_engine):
    return us_engine.analytics


def named_engine(named_values, unit="units"):
    dataset = simple_dataset(named_values, unit=unit)
    return AnalyticsEngine(dataset), dataset


def rid_of(dataset, name):
    return dataset.find_regions_by_name(name)[0].id


STATES = Scope(Level.STATE)


# -- retrieve ---------------------------------------------------------------


def test_retrieve_wisconsin_density(us_analytics, us_dataset):
    result = us_analytics.retrieve(state_id(us_dataset, "Wisconsin"), "density")
    assert result.rows[0].value == 109.0
    assert result.rows[0].unit == "people/mi²"


def test_retrieve_washington_density_matches_table(us_analytics, us_dataset):
    sid = state_id(us_dataset, "Washington")
    result = us_analytics.retrieve(sid, "density")
    assert result.rows[0].value == us_dataset.value(sid, "density") == 116.0


def test_retrieve_null_is_no_data():
    engine, dataset = named_engine({"A": 1.0, "B": None, "C": 2.0})
    result = engine.retrieve(rid_of(dataset, "B"), "v")
    assert result.rows[0].value is None
    assert result.narrative["no_data"]


def test_retrieve_unknown_tokens():
    engine, dataset = named_engine({"A": 1.0, "B": 2.0})
    with pytest.raises(UnknownEntityError, match="nope"):
        engine.retrieve("nope", "v")
    with pytest.raises(UnknownEntityError, match="bogus"):
        engine.retrieve(rid_of(dataset, "A"), "bogus")


# -- compare ----------------------------------------------------------------


def test_compare_south_carolina_iowa(us_analytics, us_dataset):
    sc = state_id(us_dataset, "South Carolina")
    ia = state_id(us_dataset, "Iowa")
    result = us_analytics.compare([sc, ia], "density")
    assert result.narrative["leader"] == "South Carolina"
    assert [r.value for r in result.rows] == [171.0, 57.0]


def test_compare_tie():
    engine, dataset = named_engine({"A": 5.0, "B": 5.0})
    result = engine.compare([rid_of(dataset, "A"), rid_of(dataset, "B")], "v")
    assert result.narrative["tie"]
    assert set(result.narrative["leader"]) == {"A", "B"}


def test_compare_three_matches_sort_oracle():
    engine, dataset = named_engine({"A": 3.0, "B": 9.0, "C": 6.0})
    ids = [rid_of(dataset, n) for n in ("A", "B", "C")]
    result = engine.compare(ids, "v")
    oracle = sorted(ids, key=lambda rid: -dataset.value(rid, "v"))
    assert [r.region_id for r in result.rows] == oracle


def test_compare_needs_two_distinct():
    engine, dataset = named_engine({"A": 1.0, "B": 2.0})
    with pytest.raises(AnalyticsError):
        engine.compare([rid_of(dataset, "A"), rid_of(dataset, "A")], "v")


# -- extremum -----------------------------------------------------------------


def test_extremum_king_county(us_analytics, us_dataset):
    wa = state_id(us_dataset, "Washington")
    result = us_analytics.extremum("density", "max", Scope(Level.COUNTY, wa))
    assert result.rows[0].region_name == "King"
    assert result.rows[0].value == 1066.0


def test_extremum_min_matches_scan(us_analytics, us_dataset):
    result = us_analytics.extremum("density", "min", STATES)
    values = {
        r.id: us_dataset.value(r.id, "density") for r in us_dataset.regions_at(Level.STATE)
    }
    low = min(v for v in values.values() if v is not None)
    assert result.rows[0].value == low


def test_extremum_single_region_scope():
    # a county scope holding exactly one candidate returns that county
    state_a = make_region("s0", square_ring(0, 0, 4.0), name="A")
    state_b = make_region("s1", square_ring(6, 0, 4.0), name="B")
    county = make_region("s0c1", square_ring(1, 1), name="Only", level=Level.COUNTY, parent_id="s0")
    dataset = GeoDataset(
        name="one-county",
        regions={r.id: r for r in (state_a, state_b, county)},
        metrics=[MetricDefinition("v", "value", "u", "")],
        values={("s0", "v"): 1.0, ("s1", "v"): 2.0, ("s0c1", "v"): 9.0},
    )
    engine = AnalyticsEngine(dataset)
    result = engine.extremum("v", "max", Scope(Level.COUNTY, "s0"))
    assert [r.region_name for r in result.rows] == ["Only"]


def test_extremum_tie_reports_all():
    engine, dataset = named_engine({"A": 5.0, "B": 5.0, "C": 1.0})
    result = engine.extremum("v", "max", STATES)
    assert [r.region_name for r in result.rows] == ["A", "B"]
    assert result.narrative["tie"]


def test_extremum_all_null_errors():
    engine, _ = named_engine({"A": None, "B": None, "C": 1.0, "D": 2.0})
    # county scope has no values at all
    with pytest.raises(NoDataError):
        engine.extremum("v", "max", Scope(Level.COUNTY))


# -- aggregate ----------------------------------------------------------------


def test_aggregate_mean_trivial():
    engine, _ = named_engine({"A": 10.0, "B": 20.0, "C": 30.0})
    assert engine.aggregate("v", "mean", STATES).scalar == pytest.approx(20.0)


def test_aggregate_median_even():
    engine, _ = named_engine({"A": 1.0, "B": 2.0, "C": 3.0, "D": 10.0})
    assert engine.aggregate("v", "median", STATES).scalar == pytest.approx(2.5)


def test_aggregate_state_mean_matches_spreadsheet(us_analytics, us_dataset):
    values = [
        us_dataset.value(r.id, "density") for r in us_dataset.regions_at(Level.STATE)
    ]
    values = [v for v in values if v is not None]
    result = us_analytics.aggregate("density", "mean", STATES)
    assert result.scalar == pytest.approx(sum(values) / len(values))


def test_aggregate_stddev_population_formula():
    engine, _ = named_engine({"A": 2.0, "B": 4.0, "C": 4.0, "D": 4.0, "E": 5.0, "F": 5.0, "G": 7.0, "H": 9.0})
    assert engine.aggregate("v", "stddev", STATES).scalar == pytest.approx(2.0)


def test_aggregate_stddev_needs_two():
    regions = {
        r.id: r
        for r in (
            make_region("s0", square_ring(0, 0), name="A"),
            make_region("s1", square_ring(2, 0), name="B"),
        )
    }
    dataset = GeoDataset(
        name="thin",
        regions=regions,
        metrics=[
            MetricDefinition("v", "value", "u", ""),
            MetricDefinition("w", "other", "u", ""),
        ],
        values={("s0", "v"): 1.0, ("s1", "v"): 2.0, ("s0", "w"): 5.0},
    )
    with pytest.raises(NoDataError):
        AnalyticsEngine(dataset).aggregate("w", "stddev", STATES)


def test_aggregate_excludes_nulls_and_reports():
    engine, _ = named_engine({"A": 10.0, "B": None, "C": 20.0})
    result = engine.aggregate("v", "mean", STATES)
    assert result.scalar == pytest.approx(15.0)
    assert result.narrative["skipped"] == 1


# -- filter -------------------------------------------------------------------


def test_filter_over_threshold():
    engine, dataset = named_engine({"A": 500.0, "B": 120.0, "C": 301.0, "D": 300.0, "E": None})
    result = engine.filter("v", FilterCondition(">", 300.0), STATES)
    assert [r.region_name for r in result.rows] == ["A", "C"]  # descending


def test_filter_boundary_inclusive_comparators():
    engine, dataset = named_engine({"A": 300.0, "B": 299.9})
    geq = engine.filter("v", FilterCondition(">=", 300.0), STATES)
    assert [r.region_name for r in geq.rows] == ["A"]
    gt = engine.filter("v", FilterCondition(">", 300.0), STATES)
    assert gt.rows == ()


def test_filter_empty_result_is_valid():
    engine, _ = named_engine({"A": 1.0, "B": 2.0})
    result = engine.filter("v", FilterCondition(">", 900.0), STATES)
    assert result.rows == ()


def test_filter_between():
    engine, _ = named_engine({"A": 1.0, "B": 5.0, "C": 10.0})
    result = engine.filter("v", FilterCondition("between", 2.0, 10.0), STATES)
    assert sorted(r.region_name for r in result.rows) == ["B", "C"]


# -- sort ---------------------------------------------------------------------


def test_sort_top5_matches_full_sort(us_analytics, us_dataset):
    from oracles import full_sort

    values = {}
    names = {}
    for region in us_dataset.regions_at(Level.STATE):
        v = us_dataset.value(region.id, "density")
        if v is not None:
            values[region.id] = v
            names[region.id] = region.name
    result = us_analytics.sort(SortSpec("density", "desc", 5), STATES)
    assert [r.region_id for r in result.rows] == full_sort(values, names, True)[:5]


def test_sort_limit_clamps():
    engine, _ = named_engine({"A": 1.0, "B": 2.0, "C": 3.0})
    result = engine.sort(SortSpec("v", "asc", 99), STATES)
    assert len(result.rows) == 3


def test_sort_ties_break_by_name():
    engine, _ = named_engine({"B": 5.0, "A": 5.0, "C": 1.0})
    result = engine.sort(SortSpec("v", "desc", 3), STATES)
    assert [r.region_name for r in result.rows] == ["A", "B", "C"]


def test_sort_limit_validation():
    engine, _ = named_engine({"A": 1.0, "B": 2.0})
    with pytest.raises(AnalyticsError):
        engine.sort(SortSpec("v", "desc", 0), STATES)


# -- similar ------------------------------------------------------------------


def test_similar_margin_boundary_case():
    engine, dataset = named_engine({"REF": 100.0, "A": 79.0, "B": 80.0, "C": 120.0, "D": 121.0})
    result = engine.similar(rid_of(dataset, "REF"), "v", STATES)
    assert sorted(r.region_name for r in result.rows) == ["B", "C"]


def test_similar_oregon_matches_brute_scan(us_analytics, us_dataset):
    oregon = state_id(us_dataset, "Oregon")
    ref = us_dataset.value(oregon, "density")
    result = us_analytics.similar(oregon, "density", STATES)
    expected = {
        r.id
        for r in us_dataset.regions_at(Level.STATE)
        if r.id != oregon
        and us_dataset.value(r.id, "density") is not None
        and abs(us_dataset.value(r.id, "density") - ref) <= 0.2 * abs(ref)
    }
    assert {r.region_id for r in result.rows} == expected
    diffs = [abs(r.value - ref) for r in result.rows]
    assert diffs == sorted(diffs)


def test_similar_zero_reference():
    engine, dataset = named_engine({"REF": 0.0, "A": 0.0, "B": 0.01})
    result = engine.similar(rid_of(dataset, "REF"), "v", STATES)
    assert [r.region_name for r in result.rows] == ["A"]


def test_similar_null_reference_errors():
    engine, dataset = named_engine({"REF": None, "A": 1.0, "B": 2.0})
    with pytest.raises(NoDataError):
        engine.similar(rid_of(dataset, "REF"), "v", STATES)


# -- oracle equivalence at scale ----------------------------------------------


def big_dataset(n=1000, null_every=17, seed=2):
    rng = np.random.default_rng(seed)
    values = rng.uniform(0, 1000, size=n)
    named = {
        f"R{i:04d}": (None if i % null_every == 0 else float(values[i]))
        for i in range(n)
    }
    return named_engine(named)


def test_thousand_region_oracle_equivalence():
    engine, dataset = big_dataset()
    values = {
        rid: dataset.value(rid, "v")
        for rid in dataset.regions
        if dataset.value(rid, "v") is not None
    }
    names = {rid: dataset.regions[rid].name for rid in values}

    # extremum
    top = engine.extremum("v", "max", STATES)
    assert top.rows[0].value == max(values.values())
    # filter
    out = engine.filter("v", FilterCondition(">", 500.0), STATES)
    assert {r.region_id for r in out.rows} == {rid for rid, v in values.items() if v > 500.0}
    # sort prefix
    from oracles import full_sort

    ranked = engine.sort(SortSpec("v", "desc", 25), STATES)
    assert [r.region_id for r in ranked.rows] == full_sort(values, names, True)[:25]
    # aggregate
    agg = engine.aggregate("v", "mean", STATES)
    assert agg.scalar == pytest.approx(sum(values.values()) / len(values))
    # similar
    ref = next(iter(values))
    sim = engine.similar(ref, "v", STATES)
    margin = 0.2 * abs(values[ref])
    assert {r.region_id for r in sim.rows} == {
        rid for rid, v in values.items() if rid != ref and abs(v - values[ref]) <= margin
    }


@settings(max_examples=25, deadline=None)
@given(
    st.lists(
        st.one_of(st.none(), st.floats(-1e6, 1e6, allow_nan=False)),
        min_size=3,
        max_size=40,
    ),
    st.floats(-1e6, 1e6, allow_nan=False),
)
def test_filter_property_matches_predicate(raw_values, threshold):
    named = {f"N{i:03d}": v for i, v in enumerate(raw_values)}
    if sum(1 for v in raw_values if v is not None) < 2:
        named["Z998"] = 1.0
        named["Z999"] = 2.0
    engine, dataset = named_engine(named)
    result = engine.filter("v", FilterCondition("<=", threshold), STATES)
    expected = {
        rid
        for rid in dataset.regions
        if (v := dataset.value(rid, "v")) is not None and v <= threshold
    }
    assert {r.region_id for r in result.rows} == expected
