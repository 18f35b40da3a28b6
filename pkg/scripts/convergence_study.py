"""Mesh convergence of graph mass and MSS residual for the z^2 fixture."""

import argparse
import csv
import math
from pathlib import Path

from msslab.fixtures import disk_mesh, fixture
from msslab.geometry import boundary_mass_integral, graph_mass, msys_residual


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--levels", type=int, nargs="+", default=[2, 3, 4, 5, 6])
    ap.add_argument("--out", type=Path, default=Path("out/convergence_study.csv"))
    args = ap.parse_args()

    args.out.parent.mkdir(parents=True, exist_ok=True)
    prev = None
    with args.out.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["level", "n_simplices", "mass_direct", "mass_boundary", "residual_domain", "residual_range", "factor"])
        for k in args.levels:
            m = disk_mesh(k)
            F = fixture("zsquare", m)
            rd, rr = msys_residual(F)
            res = max(rd, rr)
            factor = prev / res if prev else float("nan")
            prev = res
            md, mb = graph_mass(F), boundary_mass_integral(F)
            w.writerow([k, m.n_simplices, f"{md:.8f}", f"{mb:.8f}", f"{rd:.3e}", f"{rr:.3e}", f"{factor:.3f}"])
            print(f"level {k}: mass {md:.6f} / {mb:.6f} (3pi = {3 * math.pi:.6f})  residual {res:.4e}  factor {factor:.3f}")


if __name__ == "__main__":
    main()
