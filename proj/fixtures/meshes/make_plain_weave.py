#!/usr/bin/env python3
"""Writes plain_weave.mesh: a structured tet mesh of a plain weave cell.

Two warp yarns run along x and two weft yarns along y. Each yarn has an
elliptical cross-section (half-width A_W, half-thickness B_W) whose centre
follows a sine path, so warp and weft alternate over/under at the crossings.
Every hexahedral cell is split into six tets around its main diagonal (Kuhn
split), which conforms across cells and across opposite faces, so the mesh is
periodic. Tets are tagged by centroid: 0 matrix, 2-3 warp, 4-5 weft. Each
yarn gets inlet/outlet face sets on the faces it crosses.
"""

import itertools
import math
import sys

L = 1.68        # cell size in x and y (mm)
H = 0.22        # cell thickness (mm)
A_W = 0.32      # yarn half-width
B_W = 0.05      # yarn half-thickness
AMP = 0.055     # amplitude of the yarn path
N_XY = 16
N_Z = 8


def yarn_at(c):
    """Region of the yarn containing point c, or 0."""
    x, y, z = c
    best, best_d = 0, 1.0
    for j in range(2):
        yc = (2 * j + 1) * L / 4
        zc = H / 2 + (-1) ** j * AMP * math.sin(2 * math.pi * x / L)
        d = ((y - yc) / A_W) ** 2 + ((z - zc) / B_W) ** 2
        if d <= best_d:
            best, best_d = 2 + j, d
    for i in range(2):
        xc = (2 * i + 1) * L / 4
        zc = H / 2 - (-1) ** i * AMP * math.sin(2 * math.pi * y / L)
        d = ((x - xc) / A_W) ** 2 + ((z - zc) / B_W) ** 2
        if d <= best_d:
            best, best_d = 4 + i, d
    return best


def main(path):
    nx = ny = N_XY
    nz = N_Z
    def nid(i, j, k):
        return (k * (ny + 1) + j) * (nx + 1) + i

    nodes = [(L * i / nx, L * j / ny, H * k / nz)
             for k in range(nz + 1) for j in range(ny + 1) for i in range(nx + 1)]
    tets = []
    for k, j, i in itertools.product(range(nz), range(ny), range(nx)):
        for perm in itertools.permutations(range(3)):
            p = [i, j, k]
            v = [nid(*p)]
            for axis in perm:
                p[axis] += 1
                v.append(nid(*p))
            a, b, c, d = (nodes[q] for q in v)
            u = [b[m] - a[m] for m in range(3)]
            w = [c[m] - a[m] for m in range(3)]
            s = [d[m] - a[m] for m in range(3)]
            vol = (u[0] * (w[1] * s[2] - w[2] * s[1]) - u[1] * (w[0] * s[2] - w[2] * s[0])
                   + u[2] * (w[0] * s[1] - w[1] * s[0]))
            if vol < 0:
                v[1], v[2] = v[2], v[1]
            cen = [sum(nodes[q][m] for q in v) / 4 for m in range(3)]
            tets.append((v, yarn_at(cen)))

    faces = {}
    for v, region in tets:
        if region == 0:
            continue
        axis = 0 if region in (2, 3) else 1
        for f in itertools.combinations(v, 3):
            coords = [nodes[q][axis] for q in f]
            for side, value in (("in", 0.0), ("out", L)):
                if all(abs(c - value) < 1e-12 for c in coords):
                    faces.setdefault(f"yarn{region}_{side}", []).append(f)

    counts = {r: sum(1 for _, g in tets if g == r) for r in range(6)}
    vol_frac = 1 - counts[0] / len(tets)
    with open(path, "w") as out:
        out.write("# plain weave cell generated by make_plain_weave.py\n")
        out.write(f"# {L} x {L} x {H} mm, yarn tet fraction {vol_frac:.3f}\n")
        out.write(f"NODES {len(nodes)}\n")
        for n, (x, y, z) in enumerate(nodes):
            out.write(f"{n + 1} {x:.12g} {y:.12g} {z:.12g}\n")
        out.write(f"TETS {len(tets)}\n")
        for t, (v, region) in enumerate(tets):
            out.write(f"{t + 1} {' '.join(str(q + 1) for q in v)} {region}\n")
        for name in sorted(faces):
            out.write(f"FACESET {name} {len(faces[name])}\n")
            for f in faces[name]:
                out.write(f"{f[0] + 1} {f[1] + 1} {f[2] + 1}\n")
    print(f"{len(nodes)} nodes, {len(tets)} tets, yarn fraction {vol_frac:.3f}, regions {counts}")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "plain_weave.mesh")
