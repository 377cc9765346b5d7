"""Regenerate the figures and tables shipped with the package.

Usage: python3 scripts/reproduce.py [--out DIR] [--quick]

Writes into DIR (default ./results):
  figure_order4_256.pgm    order-4 approximation of the sft_figure1 system, 256 px
  figure_order6_1024.pgm   order-6 approximation, 1024 px
  dimensions.csv           dim_H, dim_M and t_empty for every bundled fixture
  box_counts.csv           exact box counts and the regression slope per 2D fixture
"""
import argparse
import csv
import math
import time
from pathlib import Path

from multshift import RenderSpec, box_count, hausdorff_dimension, load_fixture, minkowski_dimension, render, solve_t
from multshift.config import fixture_names
from multshift.empirical import box_count_slope, write_pgm


def figures(out: Path, quick: bool) -> None:
    spec = load_fixture("sft_figure1").spec
    jobs = [(4, 256)] + ([] if quick else [(6, 1024)])
    for order, res in jobs:
        t0 = time.perf_counter()
        bm = render(spec, RenderSpec(order, res))
        path = out / f"figure_order{order}_{res}.pgm"
        write_pgm(path, bm)
        dark = sum(1 for p in bm.pixels if p == 0)
        print(f"{path.name}: {dark} dark pixels, sha256 {bm.sha256()[:16]}, {time.perf_counter() - t0:.1f} s")


def dimensions(out: Path) -> None:
    rows = []
    for name in fixture_names():
        spec = load_fixture(name).spec
        tv = solve_t(spec)
        dh = hausdorff_dimension(spec, tvec=tv)
        dm = minkowski_dimension(spec)
        rows.append({"fixture": name, "q": spec.q, "m": "x".join(map(str, spec.m)),
                     "t_empty": f"{tv.t_empty:.12g}", "dim_H": f"{dh.value:.12f}", "dim_M": f"{dm.value:.12f}"})
    with open(out / "dimensions.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)
    for r in rows:
        print(f"{r['fixture']:20s} dim_H {r['dim_H']}  dim_M {r['dim_M']}")


def box_counts(out: Path, quick: bool) -> None:
    ns = range(2, 7 if quick else 9)
    with open(out / "box_counts.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["fixture", "n", "count", "log_count_over_n_log_m1", "slope", "dim_M"])
        for name in fixture_names():
            spec = load_fixture(name).spec
            if spec.d != 2:
                continue
            slope = box_count_slope(spec, ns)
            dm = minkowski_dimension(spec).value
            for n in ns:
                c = box_count(spec, n)
                w.writerow([name, n, c, f"{math.log(c) / (n * math.log(spec.m[0])):.6f}", f"{slope:.6f}", f"{dm:.6f}"])
            print(f"{name:20s} slope {slope:.4f} vs dim_M {dm:.4f}")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results")
    ap.add_argument("--quick", action="store_true", help="skip the 1024 px figure and n > 6 counts")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    figures(out, args.quick)
    dimensions(out)
    box_counts(out, args.quick)


if __name__ == "__main__":
    main()
