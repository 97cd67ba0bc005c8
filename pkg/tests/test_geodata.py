"""Boundary/attribute ingestion and schema summary."""

import json

import pytest

from geoqa.geodata import (
    GeodataError,
    Level,
    MetricDefinition,
    MetricLevel,
    load_attributes,
    load_boundaries,
    load_dataset,
    polygon_centroid,
    schema_summary,
)

from conftest import US_CONFIG, make_region, simple_dataset, square_ring
from oracles import multipolygon_centroid


def feature(fid, name, rings, parent=None):
    props = {"id": fid, "name": name}
    if parent:
        props["parent_id"] = parent
    return {
        "type": "Feature",
        "geometry": {"type": "Polygon", "coordinates": [list(map(list, r)) for r in rings]},
        "properties": props,
    }


def write_fc(tmp_path, features, name="regions.geojson"):
    path = tmp_path / name
    path.write_text(json.dumps({"type": "FeatureCollection", "features": features}))
    return path


def test_unit_square_centroid():
    ring = square_ring(0.0, 0.0)
    centroid, area = polygon_centroid([(tuple(ring),)])
    assert centroid == pytest.approx((0.5, 0.5))
    assert area == pytest.approx(1.0)


def test_l_shape_centroid_matches_triangulation_oracle():
    # three unit squares in an L: (0,0)-(2,1) plus (0,1)-(1,2)
    ring = ((0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2), (0, 0))
    centroid, area = polygon_centroid([(ring,)])
    assert area == pytest.approx(3.0)
    assert centroid == pytest.approx(multipolygon_centroid(((ring,),)))


def test_polygon_with_hole_centroid_matches_oracle():
    outer = square_ring(0.0, 0.0, 4.0)
    hole = ((1.0, 1.0), (1.0, 2.0), (2.0, 2.0), (2.0, 1.0), (1.0, 1.0))
    geometry = ((tuple(outer), hole),)
    centroid, area = polygon_centroid(geometry)
    assert area == pytest.approx(15.0)
    assert centroid == pytest.approx(multipolygon_centroid(geometry))


def test_us_states_file_loads_48_regions(us_dataset):
    assert len(us_dataset.regions_at(Level.STATE)) == 48


def test_open_ring_rejected(tmp_path):
    bad = feature("x1", "Bad", [((0, 0), (1, 0), (1, 1), (0, 1))])  # not closed
    with pytest.raises(GeodataError, match="x1"):
        load_boundaries(write_fc(tmp_path, [bad]), Level.STATE)


def test_tiny_ring_rejected(tmp_path):
    bad = feature("x2", "Bad", [((0, 0), (1, 0), (0, 0))])
    with pytest.raises(GeodataError, match="x2"):
        load_boundaries(write_fc(tmp_path, [bad]), Level.STATE)


def test_duplicate_id_rejected(tmp_path):
    a = feature("dup", "A", [square_ring(0, 0)])
    b = feature("dup", "B", [square_ring(2, 0)])
    with pytest.raises(GeodataError, match="dup"):
        load_boundaries(write_fc(tmp_path, [a, b]), Level.STATE)


def test_county_requires_parent(tmp_path):
    orphan = feature("c1", "Orphan", [square_ring(0, 0)])
    with pytest.raises(GeodataError, match="parent"):
        load_boundaries(write_fc(tmp_path, [orphan]), Level.COUNTY)


def test_centroid_override_applies_and_flags(tmp_path):
    f = feature("s1", "One", [square_ring(0, 0)])
    regions = load_boundaries(write_fc(tmp_path, [f]), Level.STATE, {"s1": (0.25, 0.75)})
    assert regions[0].centroid == (0.25, 0.75)
    assert regions[0].centroid_overridden
    regions = load_boundaries(write_fc(tmp_path, [f]), Level.STATE)
    assert not regions[0].centroid_overridden


def test_override_outside_bbox_rejected(tmp_path):
    f = feature("s1", "One", [square_ring(0, 0)])
    with pytest.raises(GeodataError, match="bounding box"):
        load_boundaries(write_fc(tmp_path, [f]), Level.STATE, {"s1": (5.0, 5.0)})


METRICS = [MetricDefinition("density", "population density", "people/mi²", "", MetricLevel.BOTH)]


def test_attribute_parsing(tmp_path):
    table = tmp_path / "attrs.csv"
    table.write_text("id,density\ns000,109\ns001,\ns002,abc\nzzz,5\n")
    known = {
        f"s{i:03d}": make_region(f"s{i:03d}", square_ring(float(i), 0.0)) for i in range(3)
    }
    values, report = load_attributes(table, METRICS, known)
    assert values == {("s000", "density"): 109.0}
    assert report.rows_read == 4
    assert report.rows_skipped == 1  # unknown id zzz
    assert report.nulls == 2  # blank + non-numeric
    assert any("zzz" in w for w in report.warnings)
    assert any("abc" in w for w in report.warnings)


def test_join_totality(us_dataset):
    # every loaded (region, metric) pair answers with a number or None
    for region in list(us_dataset.regions.values())[:200]:
        for metric in us_dataset.metrics:
            value = us_dataset.value(region.id, metric.key)
            assert value is None or isinstance(value, float)


def test_stored_density_matches_spreadsheet_recomputation(us_dataset):
    # density column was produced as round(population / land_area)
    checked = 0
    for region in us_dataset.regions.values():
        pop = us_dataset.value(region.id, "population")
        area = us_dataset.value(region.id, "land_area")
        density = us_dataset.value(region.id, "density")
        if pop is None or area is None or density is None:
            continue
        assert density == round(pop / area), region.name
        checked += 1
    assert checked >= 48 + 39  # states plus Washington counties


def test_wisconsin_density_value(us_dataset, us_engine):
    from conftest import state_id

    assert us_dataset.value(state_id(us_dataset, "Wisconsin"), "density") == 109.0


def test_schema_summary_deterministic(us_dataset):
    assert schema_summary(us_dataset) == schema_summary(us_dataset)
    assert len(schema_summary(us_dataset).encode()) <= 2048


def test_schema_summary_unit_once_per_metric(us_dataset):
    text = schema_summary(us_dataset)
    assert text.count("people/mi²") == 1


def test_schema_summary_single_metric():
    ds = simple_dataset({"A": 1.0, "B": 2.0}, unit="widgets")
    text = schema_summary(ds)
    assert "v" in text and "widgets" in text
    assert "states and counties" in text


def test_schema_summary_two_metric_equity_dataset():
    regions = {
        r.id: r
        for r in [
            make_region("s000", square_ring(0, 0), name="A"),
            make_region("s001", square_ring(1, 0), name="B"),
        ]
    }
    ds_metrics = [
        MetricDefinition("underserved_pct", "underserved population", "%", "", MetricLevel.BOTH),
        MetricDefinition("no_access_pct", "lacking digital access", "%", "", MetricLevel.BOTH),
    ]
    from geoqa.geodata import GeoDataset

    ds = GeoDataset(
        name="digital equity",
        regions=regions,
        metrics=ds_metrics,
        values={("s000", "underserved_pct"): 80.0, ("s001", "underserved_pct"): 90.0},
    )
    text = schema_summary(ds)
    assert "underserved population" in text
    assert "lacking digital access" in text


def test_dataset_config_round_trip():
    ds = load_dataset(US_CONFIG)
    assert ds.default_metric == "density"
    assert {m.key for m in ds.metrics} == {"population", "land_area", "density"}
    assert ds.require_connected_navigation
    # override table: New York and Rhode Island applied, DC entry ignored
    ny = [r for r in ds.regions.values() if r.name == "New York"][0]
    assert ny.centroid_overridden
    assert any("ignored" in line and "11" in line for line in ds.provenance)


def test_overall_centroid_near_geographic_center(us_dataset):
    lon, lat = us_dataset.overall_centroid()
    assert -104 < lon < -95
    assert 36 < lat < 42
