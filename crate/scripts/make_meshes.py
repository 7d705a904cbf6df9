#!/usr/bin/env python3
"""Generate the sample MSH 2.2 meshes in crates/core/data.

Needs the gmsh python module. Physical groups follow the reader's convention:
MATRIX_<region> for volumes, FRACTURE_<id> for fracture surfaces.

    python3 scripts/make_meshes.py [--out crates/core/data] [--only single,tiny_fracture,small_features,field]
"""

import argparse
import math
import os
import random

import gmsh

SINGLE_FRACTURE = [(0, 0, 80), (100, 0, 20), (100, 100, 20), (0, 100, 80)]

SMALL_FEATURES = [
    [(0.05, 0.25, 0.5), (0.95, 0.25, 0.5), (0.95, 2.0, 0.5), (0.05, 2.0, 0.5)],
    [(0.5, 0.05, 0.05), (0.5, 0.05, 0.95), (0.5, 0.3, 0.95), (0.5, 0.3, 0.05)],
    [(0.05, 1.0, 0.5), (0.95, 1.0, 0.5), (0.95, 2.2, 0.85), (0.05, 2.2, 0.85)],
    [(0.05, 1.0, 0.48), (0.95, 1.0, 0.48), (0.95, 2.2, 0.14), (0.05, 2.2, 0.14)],
    [(0.17, 1.9, 0.7), (0.17, 1.9, 0.3), (0.23, 2.2, 0.3), (0.23, 2.2, 0.7)],
    [(0.23, 1.9, 0.7), (0.23, 1.9, 0.3), (0.17, 2.2, 0.3), (0.17, 2.2, 0.7)],
    [(0.77, 1.9, 0.7), (0.77, 1.9, 0.3), (0.77, 2.2, 0.3), (0.77, 2.2, 0.7)],
    [(0.83, 1.9, 0.7), (0.83, 1.9, 0.3), (0.83, 2.2, 0.3), (0.83, 2.2, 0.7)],
]

FIELD_BOX = ((-500.0, 100.0, -100.0), (350.0, 1500.0, 500.0))


def polygon(points, lc):
    occ = gmsh.model.occ
    pts = [occ.addPoint(*p, lc) for p in points]
    lines = [occ.addLine(pts[i], pts[(i + 1) % len(pts)]) for i in range(len(pts))]
    loop = occ.addCurveLoop(lines)
    return occ.addPlaneSurface([loop])


def fragment_and_tag(box_tags, fractures, region_of):
    """Fragments volumes with fracture surfaces and assigns physical groups."""
    occ = gmsh.model.occ
    objects = [(3, t) for t in box_tags]
    tools = [(2, f) for f in fractures]
    _, mapping = occ.fragment(objects, tools)
    occ.synchronize()
    volumes = {}
    for dim, tag in gmsh.model.getEntities(3):
        com = occ.getCenterOfMass(dim, tag)
        volumes.setdefault(region_of(com), []).append(tag)
    for region, tags in sorted(volumes.items()):
        g = gmsh.model.addPhysicalGroup(3, tags)
        gmsh.model.setPhysicalName(3, g, f"MATRIX_{region}")
    # surfaces produced from each fracture tool, in input order
    for k, f in enumerate(fractures):
        pieces = [t for d, t in mapping[len(objects) + k] if d == 2]
        g = gmsh.model.addPhysicalGroup(2, pieces)
        gmsh.model.setPhysicalName(2, g, f"FRACTURE_{k}")


def finish(path, size):
    gmsh.option.setNumber("Mesh.MeshSizeMax", size)
    gmsh.option.setNumber("Mesh.MshFileVersion", 2.2)
    gmsh.option.setNumber("Mesh.SaveAll", 0)
    gmsh.option.setNumber("Mesh.Algorithm3D", 1)
    gmsh.model.mesh.generate(3)
    gmsh.write(path)
    n = len(gmsh.model.mesh.getElementsByType(4)[0])
    print(f"{path}: {n} tetrahedra")


def single(out, size=25.0, name="single_refinement_0.msh"):
    gmsh.model.add("single")
    occ = gmsh.model.occ
    lower = occ.addBox(0, 0, 0, 100, 100, 10)
    upper = occ.addBox(0, 0, 10, 100, 100, 90)
    frac = polygon(SINGLE_FRACTURE, size)

    def region(c):
        x, _, z = c[0], c[1], c[2]
        if z < 10:
            return 3
        return 1 if z > 80 - 0.6 * x else 2

    fragment_and_tag([lower, upper], [frac], region)
    finish(os.path.join(out, name), size)


def tiny_fracture(out):
    """Fractured box without the bottom layer, small enough for dense reference checks."""
    gmsh.model.add("tiny")
    box = gmsh.model.occ.addBox(0, 0, 0, 100, 100, 100)
    frac = polygon(SINGLE_FRACTURE, 100.0)
    fragment_and_tag([box], [frac], lambda c: 1 if c[2] > 80 - 0.6 * c[0] else 2)
    finish(os.path.join(out, "tiny_fracture.msh"), 100.0)


def small_features(out):
    gmsh.model.add("small_features")
    occ = gmsh.model.occ
    box = occ.addBox(0, 0, 0, 1, 2.25, 1)
    fracs = [polygon(p, 0.15) for p in SMALL_FEATURES]
    fragment_and_tag([box], fracs, lambda c: 1)
    finish(os.path.join(out, "small_features_refinement_0.msh"), 0.15)


def clip_segment(p, q, lo, hi):
    """Liang-Barsky clip of the segment p-q to the rectangle [lo, hi] in the plane."""
    t0, t1 = 0.0, 1.0
    d = (q[0] - p[0], q[1] - p[1])
    for k in range(2):
        for num, den in ((p[k] - lo[k], -d[k]), (hi[k] - p[k], d[k])):
            if den == 0:
                if num < 0:
                    return None
                continue
            t = num / den
            if den < 0:
                t0 = max(t0, t)
            else:
                t1 = min(t1, t)
    if t0 >= t1:
        return None
    return ((p[0] + t0 * d[0], p[1] + t0 * d[1]), (p[0] + t1 * d[0], p[1] + t1 * d[1]))


def seg_intersection(a, b):
    """Parameter pair (s, t) where segments a and b cross, or None."""
    (p, q), (r, u) = a, b
    d1 = (q[0] - p[0], q[1] - p[1])
    d2 = (u[0] - r[0], u[1] - r[1])
    den = d1[0] * d2[1] - d1[1] * d2[0]
    if abs(den) < 1e-12:
        return None
    w = (r[0] - p[0], r[1] - p[1])
    s = (w[0] * d2[1] - w[1] * d2[0]) / den
    t = (w[0] * d1[1] - w[1] * d1[0]) / den
    if 0 <= s <= 1 and 0 <= t <= 1:
        return s, t
    return None


def point_segment_distance(x, seg):
    (p, q) = seg
    d = (q[0] - p[0], q[1] - p[1])
    ll = d[0] ** 2 + d[1] ** 2
    t = max(0.0, min(1.0, ((x[0] - p[0]) * d[0] + (x[1] - p[1]) * d[1]) / ll))
    return math.hypot(x[0] - p[0] - t * d[0], x[1] - p[1] - t * d[1])


def field_network(count=52, seed=20181016, gap=40.0):
    """Vertical fractures along two roughly orthogonal families of traces, clipped to
    the box. Candidates creating slivers (near misses, shallow or crowded crossings)
    are rejected so the network meshes cleanly."""
    rng = random.Random(seed)
    lo, hi = FIELD_BOX
    traces = []  # (family, segment, crossing parameters)
    while len(traces) < count:
        family = len(traces) % 2
        cx = rng.uniform(lo[0] - 50, hi[0] + 50)
        cy = rng.uniform(lo[1] - 50, hi[1] + 50)
        angle = rng.gauss(0.35 if family == 0 else 1.9, 0.1)
        half = rng.uniform(120, 350)
        dx, dy = half * math.cos(angle), half * math.sin(angle)
        seg = clip_segment((cx - dx, cy - dy), (cx + dx, cy + dy), lo, hi)
        if seg is None:
            continue
        length = math.hypot(seg[1][0] - seg[0][0], seg[1][1] - seg[0][1])
        if length < 100:
            continue
        # endpoints inside the box must keep clear of the vertical box edges
        corners = [(lo[0], lo[1]), (lo[0], hi[1]), (hi[0], lo[1]), (hi[0], hi[1])]
        if any(math.hypot(e[0] - c[0], e[1] - c[1]) < gap for e in seg for c in corners):
            continue
        ok = True
        crossings = []
        for fam, other, other_cross in traces:
            hit = seg_intersection(seg, other)
            if hit is None:
                near = min(point_segment_distance(e, other) for e in seg)
                near = min(near, min(point_segment_distance(e, seg) for e in other))
                if near < gap:
                    ok = False
                    break
                continue
            olen = math.hypot(other[1][0] - other[0][0], other[1][1] - other[0][1])
            s, t = hit
            if fam == family or min(s, 1 - s) * length < gap or min(t, 1 - t) * olen < gap:
                ok = False
                break
            if any(abs(t - t2) * olen < gap for t2 in other_cross):
                ok = False
                break
            crossings.append((s, t, other_cross))
        if not ok:
            continue
        mine = sorted(c[0] for c in crossings)
        if any((b - a) * length < gap for a, b in zip(mine, mine[1:])):
            continue
        for s, t, other_cross in crossings:
            other_cross.append(t)
        traces.append((family, seg, mine))
    polys = []
    for _, ((ax, ay), (bx, by)), _ in traces:
        polys.append([(ax, ay, lo[2]), (bx, by, lo[2]), (bx, by, hi[2]), (ax, ay, hi[2])])
    return polys


def field(out):
    polys = field_network()
    with open(os.path.join(out, "fracture_network.csv"), "w") as f:
        for p in polys:
            f.write(",".join(repr(float(v)) for pt in p for v in pt) + "\n")
    gmsh.model.add("field")
    occ = gmsh.model.occ
    lo, hi = FIELD_BOX
    box = occ.addBox(lo[0], lo[1], lo[2], hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2])
    fracs = [polygon(p, 120.0) for p in polys]
    fragment_and_tag([box], fracs, lambda c: 1)
    finish(os.path.join(out, "field.msh"), 120.0)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=os.path.join(os.path.dirname(__file__), "..", "crates", "core", "data"))
    ap.add_argument("--only", default="single,tiny_fracture,small_features,field")
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)
    gmsh.initialize()
    gmsh.option.setNumber("General.Terminal", 0)
    for name in args.only.split(","):
        builders = {"single": single, "tiny_fracture": tiny_fracture, "small_features": small_features, "field": field}
        builders[name](args.out)
        gmsh.model.remove()
    gmsh.finalize()


if __name__ == "__main__":
    main()
