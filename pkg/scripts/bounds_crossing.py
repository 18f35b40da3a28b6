"""Crossing of the mass bounds for Hopf data: exact V, quadrature V, and halved reach."""

import argparse
import csv
import math
from pathlib import Path

from msslab.boundary_data import get_map, graph_volume, reach_estimate
from msslab.bounds import nonexistence_threshold
from msslab.mesh import sphere_mesh


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("out/bounds_crossing.csv"))
    ap.add_argument("--levels", type=int, nargs="+", default=[1, 2, 3, 4])
    args = ap.parse_args()

    h = get_map("hopf3")
    eps = reach_estimate(h)
    rows = [("exact", "", 10 * math.pi ** 2, eps)]
    for k in args.levels:
        rows.append(("quadrature", k, graph_volume(h, sphere_mesh(3, k)), eps))
    rows.append(("exact_half_reach", "", 10 * math.pi ** 2, eps / 2))

    args.out.parent.mkdir(parents=True, exist_ok=True)
    with args.out.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["source", "level", "V_eta", "epsilon0", "R_star"])
        for src, lvl, V, e in rows:
            R = nonexistence_threshold(3, 2, V, e)
            w.writerow([src, lvl, f"{V:.10g}", e, f"{R:.10g}"])
            print(f"{src:18s} {lvl!s:>2}  V={V:.6f}  eps={e}  R*={R:.6f}")


if __name__ == "__main__":
    main()
