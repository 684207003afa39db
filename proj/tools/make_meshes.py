#!/usr/bin/env python3
"""Writes the hexagonal and Kershaw mesh files shipped under data/.

Hexagonal family: a honeycomb of pointy-top hexagons clipped to the unit square. All vertices
lie on an integer lattice (x = X/(2N), y = Y/(3M)), so shared edges match exactly after
clipping. Output format: FVCA typ2.

Kershaw family: the image of an n x n uniform grid under x -> x + a*tent(x)*zigzag(y), which
leaves the boundary fixed and shears the vertical grid lines into a Z pattern. The kinks of the
map lie on grid lines (n divisible by 4), so every cell is a straight-edged quadrilateral.
Output format: native JSON.

Usage: make_meshes.py [output_dir]
"""

import json
import math
import sys
from fractions import Fraction
from pathlib import Path

HEX_LEVELS = [4, 8, 16, 32, 64]
KERSHAW_LEVELS = [8, 16, 32, 64, 128]
KERSHAW_AMPLITUDE = Fraction(3, 5)


def clip(poly, axis, value, keep_greater):
    def inside(p):
        return p[axis] >= value if keep_greater else p[axis] <= value

    out = []
    for i, cur in enumerate(poly):
        prev = poly[i - 1]
        if inside(cur):
            if not inside(prev):
                out.append(intersect(prev, cur, axis, value))
            out.append(cur)
        elif inside(prev):
            out.append(intersect(prev, cur, axis, value))
    dedup = []
    for p in out:
        if not dedup or dedup[-1] != p:
            dedup.append(p)
    if len(dedup) > 1 and dedup[0] == dedup[-1]:
        dedup.pop()
    return dedup


def intersect(p, q, axis, value):
    t = (value - p[axis]) / (q[axis] - p[axis])
    return tuple(p[i] + t * (q[i] - p[i]) for i in range(2))


def area2(poly):
    return sum(poly[i - 1][0] * poly[i][1] - poly[i][0] * poly[i - 1][1] for i in range(len(poly)))


def hexagonal(n):
    m = max(1, round(n * 2 / math.sqrt(3)))
    xmax, ymax = Fraction(2 * n), Fraction(3 * m)
    offsets = [(0, -2), (1, -1), (1, 1), (0, 2), (-1, 1), (-1, -1)]
    ids, vertices, cells = {}, [], []
    for j in range(m + 1):
        shift = j % 2
        for i in range(-1, n + 2):
            cx, cy = 2 * i + shift, 3 * j
            poly = [(Fraction(cx + dx), Fraction(cy + dy)) for dx, dy in offsets]
            for axis, value, greater in ((0, Fraction(0), True), (0, xmax, False),
                                         (1, Fraction(0), True), (1, ymax, False)):
                poly = clip(poly, axis, value, greater)
                if len(poly) < 3:
                    break
            if len(poly) < 3 or area2(poly) == 0:
                continue
            cell = []
            for p in poly:
                if p not in ids:
                    ids[p] = len(vertices)
                    vertices.append(p)
                cell.append(ids[p])
            cells.append(cell)
    coords = [(float(x / xmax), float(y / ymax)) for x, y in vertices]
    return coords, cells


def write_typ2(path, vertices, cells):
    with open(path, "w") as out:
        out.write("Vertices\n%d\n" % len(vertices))
        for x, y in vertices:
            out.write("%.17g %.17g\n" % (x, y))
        out.write("cells\n%d\n" % len(cells))
        for cell in cells:
            out.write("%d %s\n" % (len(cell), " ".join(str(v + 1) for v in cell)))


def kershaw(n):
    assert n % 4 == 0

    def tent(s):
        return min(s, 1 - s)

    def zigzag(t):
        # 0 at t=0, +1 at 1/4, 0 at 1/2, -1 at 3/4, 0 at 1
        t4 = 4 * t
        if t4 <= 1:
            return t4
        if t4 <= 3:
            return 2 - t4
        return t4 - 4

    vertices = []
    for j in range(n + 1):
        for i in range(n + 1):
            s, t = Fraction(i, n), Fraction(j, n)
            x = s + KERSHAW_AMPLITUDE * tent(s) * zigzag(t)
            vertices.append((float(x), float(t)))
    cells = []
    for j in range(n):
        for i in range(n):
            a = j * (n + 1) + i
            cells.append([a, a + 1, a + n + 2, a + n + 1])
    return vertices, cells


def main():
    out = Path(sys.argv[1] if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "data")
    out.mkdir(parents=True, exist_ok=True)
    for level, n in enumerate(HEX_LEVELS, start=1):
        vertices, cells = hexagonal(n)
        write_typ2(out / ("hexagonal%d.typ2" % level), vertices, cells)
    for level, n in enumerate(KERSHAW_LEVELS, start=1):
        vertices, cells = kershaw(n)
        with open(out / ("kershaw%d.json" % level), "w") as f:
            json.dump({"vertices": [[x, y] for x, y in vertices], "cells": cells}, f, separators=(",", ":"))
            f.write("\n")


if __name__ == "__main__":
    main()
