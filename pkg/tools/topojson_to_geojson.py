"""Convert a quantized TopoJSON object into a GeoJSON FeatureCollection.

Standalone decoder (no topojson dependency): applies the delta-encoded arc
transform, stitches arcs into rings, and drops degenerate rings with fewer
than four vertices after closure.
"""

from __future__ import annotations

import argparse
import json
from pathlib import Path


def decode_arcs(topo: dict) -> list[list[tuple[float, float]]]:
    scale = topo["transform"]["scale"]
    translate = topo["transform"]["translate"]
    arcs = []
    for arc in topo["arcs"]:
        x = y = 0
        points = []
        for dx, dy in arc:
            x += dx
            y += dy
            points.append((x * scale[0] + translate[0], y * scale[1] + translate[1]))
        arcs.append(points)
    return arcs


def stitch_ring(arc_indexes: list[int], arcs: list[list[tuple[float, float]]]) -> list[list[float]]:
    ring: list[tuple[float, float]] = []
    for index in arc_indexes:
        arc = arcs[index] if index >= 0 else list(reversed(arcs[~index]))
        if ring and ring[-1] == arc[0]:
            ring.extend(arc[1:])
        else:
            ring.extend(arc)
    if ring and ring[0] != ring[-1]:
        ring.append(ring[0])
    return [[round(x, 6), round(y, 6)] for x, y in ring]


def geometry_to_polygons(geom: dict, arcs) -> list[list[list[list[float]]]]:
    """Return MultiPolygon-shaped coordinates, one entry per polygon part."""
    if geom["type"] == "Polygon":
        parts = [geom["arcs"]]
    elif geom["type"] == "MultiPolygon":
        parts = geom["arcs"]
    else:
        raise ValueError(f"unsupported geometry type {geom['type']}")
    polygons = []
    for part in parts:
        rings = [stitch_ring(ring, arcs) for ring in part]
        rings = [r for r in rings if len(r) >= 4]
        if rings:
            polygons.append(rings)
    return polygons


def convert(topo: dict, object_name: str, keep_ids, parent_len: int | None) -> dict:
    arcs = decode_arcs(topo)
    features = []
    for geom in topo["objects"][object_name]["geometries"]:
        fid = geom["id"]
        if keep_ids is not None and fid[: len(next(iter(keep_ids)))] not in keep_ids and fid not in keep_ids:
            continue
        polygons = geometry_to_polygons(geom, arcs)
        if not polygons:
            continue
        properties = {"id": fid, "name": geom["properties"]["name"]}
        if parent_len:
            properties["parent_id"] = fid[:parent_len]
        features.append(
            {
                "type": "Feature",
                "geometry": {"type": "MultiPolygon", "coordinates": polygons},
                "properties": properties,
            }
        )
    features.sort(key=lambda f: f["properties"]["id"])
    return {"type": "FeatureCollection", "features": features}


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("topojson", type=Path)
    ap.add_argument("object_name")
    ap.add_argument("output", type=Path)
    ap.add_argument("--keep-prefixes", help="comma-separated id prefixes to keep (e.g. state FIPS)")
    ap.add_argument("--parent-len", type=int, help="derive parent_id from the first N id characters")
    args = ap.parse_args()

    topo = json.loads(args.topojson.read_text())
    keep = set(args.keep_prefixes.split(",")) if args.keep_prefixes else None
    fc = convert(topo, args.object_name, keep, args.parent_len)
    args.output.write_text(json.dumps(fc, separators=(",", ":")))
    print(f"wrote {len(fc['features'])} features to {args.output}")


if __name__ == "__main__":
    main()
