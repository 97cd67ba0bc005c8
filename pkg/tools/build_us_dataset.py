"""One-time builder for the bundled contiguous-US demo dataset.

Inputs: the `us-atlas` npm package (TopoJSON derived from Census cartographic
boundary files) plus the curated attribute tables under tools/raw/. Outputs
land in data/us_density/ and are committed, so the engine never parses
TopoJSON or shapefiles at runtime.

Usage:
    npm install us-atlas            # anywhere, note the node_modules path
    python tools/build_us_dataset.py --us-atlas <path>/node_modules/us-atlas
"""

from __future__ import annotations

import argparse
import csv
import json
from pathlib import Path

from topojson_to_geojson import convert

HERE = Path(__file__).resolve().parent
OUT = HERE.parent / "data" / "us_density"

# Alaska, Hawaii, DC and the territories are outside the contiguous-48 scope.
NON_CONTIGUOUS = {"02", "15", "11", "60", "66", "69", "72", "78"}


def contiguous_state_fips(topo: dict) -> set[str]:
    return {
        g["id"]
        for g in topo["objects"]["states"]["geometries"]
        if g["id"] not in NON_CONTIGUOUS
    }


def write_state_attrs(path: Path) -> None:
    rows = list(csv.DictReader((HERE / "raw" / "state_stats.csv").open()))
    with path.open("w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["id", "population", "land_area", "density"])
        for row in rows:
            pop = int(row["population"])
            area = float(row["land_area_sqmi"])
            writer.writerow([row["fips"], pop, area, round(pop / area)])


def write_county_attrs(path: Path) -> None:
    rows = list(csv.DictReader((HERE / "raw" / "wa_county_stats.csv").open()))
    with path.open("w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["id", "population", "land_area", "density"])
        for row in rows:
            pop = int(row["population"])
            area = float(row["land_area_sqmi"])
            writer.writerow([row["fips"], pop, area, round(pop / area)])


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--us-atlas", type=Path, required=True, help="path to the us-atlas package")
    args = ap.parse_args()

    OUT.mkdir(parents=True, exist_ok=True)

    states_topo = json.loads((args.us_atlas / "states-10m.json").read_text())
    keep = contiguous_state_fips(states_topo)
    states = convert(states_topo, "states", keep, parent_len=None)
    (OUT / "states.geojson").write_text(json.dumps(states, separators=(",", ":")))
    print(f"states: {len(states['features'])}")

    counties_topo = json.loads((args.us_atlas / "counties-10m.json").read_text())
    counties = convert(counties_topo, "counties", keep, parent_len=2)
    (OUT / "counties.geojson").write_text(json.dumps(counties, separators=(",", ":")))
    print(f"counties: {len(counties['features'])}")

    write_state_attrs(OUT / "state_attrs.csv")
    write_county_attrs(OUT / "county_attrs.csv")
    print("attribute tables written")


if __name__ == "__main__":
    main()
