"""Regenerate tests/data/h3_reference.json from the official h3 package.

The C++ hexagonal index is checked against these frozen values; this script
is the only place the reference implementation is used.

    pip install h3
    python3 tools/gen_h3_reference.py > tests/data/h3_reference.json
"""
import json
import math
import random
import sys

import h3


def random_point(rng):
    # uniform on the sphere
    z = rng.uniform(-1.0, 1.0)
    lng = rng.uniform(-180.0, 180.0)
    return math.degrees(math.asin(z)), lng


def main():
    rng = random.Random(20240917)
    points = []
    for _ in range(1000):
        lat, lng = random_point(rng)
        points.append([lat, lng, 9, h3.latlng_to_cell(lat, lng, 9)])
    for _ in range(600):
        lat, lng = random_point(rng)
        res = rng.randint(0, 15)
        points.append([lat, lng, res, h3.latlng_to_cell(lat, lng, res)])
    # city-scale points (Polish cities bounding box)
    for _ in range(400):
        lat, lng = rng.uniform(49.0, 55.0), rng.uniform(14.0, 24.0)
        points.append([lat, lng, 9, h3.latlng_to_cell(lat, lng, 9)])

    cells = [p[3] for p in points[:60]] + [p[3] for p in points[1000:1060]]
    for res in (0, 1, 5, 9):
        cells += list(h3.get_pentagons(res))[:4]
    detail = []
    for c in cells:
        lat, lng = h3.cell_to_latlng(c)
        detail.append({
            "cell": c,
            "center": [lat, lng],
            "boundary": [list(v) for v in h3.cell_to_boundary(c)],
            "neighbors": sorted(x for x in h3.grid_disk(c, 1) if x != c),
            "parent": h3.cell_to_parent(c, max(0, h3.get_resolution(c) - 1)),
            "is_pentagon": h3.is_pentagon(c),
        })
    json.dump({"h3_version": h3.__version__, "points": points, "cells": detail},
              sys.stdout, indent=None)
    sys.stdout.write("\n")


if __name__ == "__main__":
    main()
