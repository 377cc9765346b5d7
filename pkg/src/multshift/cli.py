"""Command line front end: ``multshift <command> --config file.json``.

Every command prints one JSON result envelope (or writes it to ``--out``).
Exit codes: 0 success, 1 failed verification, and the codes of
:mod:`multshift.errors` for configuration and computation errors.
"""
from __future__ import annotations

import argparse
import ast
import csv
import io
import json
import math
import os
import sys
import time
import warnings
from pathlib import Path
from typing import Optional

from . import __version__
from .config import RunConfig, build_measure, load_config, measure_to_json, word_to_json
from .empirical import RenderSpec, box_count, box_count_slope, estimate_local_dimension, render, write_pgm
from .entropy import ly_check, pmu_dimension_series
from .errors import EXIT_CODES, MultshiftError
from .fixedpoint import TVector, contraction_certificate, hausdorff_dimension, solve_t
from .measures import sample_pmu
from .minkowski import equality_conditions, minkowski_dimension
from .schedule import build_schedule, schedule_summary
from .system import Carpet

CACHE_ENV = "MULTSHIFT_CACHE_DIR"


# ---------------------------------------------------------------------------
# Fixed-point cache


def _cache_file(cache_dir: Path, cfg: RunConfig, tol: float) -> Path:
    return cache_dir / f"tvector-{cfg.system_hash[:24]}-{tol:.0e}.json"


def tvector_to_json(tv: TVector) -> dict:
    meta = dict(tv.meta)
    meta["first"] = [repr(k) for k in meta.get("first", [])]
    return {
        "log_values": {repr(k): v for k, v in tv.log_values.items()},
        "log_t_empty": tv.log_t_empty,
        "cap": tv.cap,
        "iterations": tv.iterations,
        "residual": tv.residual,
        "max_ratio": tv.max_ratio,
        "log_t_empty_bracket": list(tv.log_t_empty_bracket),
        "meta": meta,
    }


def tvector_from_json(data: dict) -> TVector:
    logt = {ast.literal_eval(k): v for k, v in data["log_values"].items()}
    meta = dict(data["meta"])
    meta["first"] = [ast.literal_eval(k) for k in meta.get("first", [])]
    return TVector(
        values={k: math.exp(v) for k, v in logt.items()},
        t_empty=math.exp(data["log_t_empty"]),
        cap=data["cap"],
        log_values=logt,
        log_t_empty=data["log_t_empty"],
        iterations=data["iterations"],
        residual=data["residual"],
        max_ratio=data["max_ratio"],
        log_t_empty_bracket=tuple(data["log_t_empty_bracket"]),
        meta=meta,
    )


def cached_solve(cfg: RunConfig, schedule, tol: float, cache_dir: Optional[Path]):
    """Solve the fixed point, reading and writing the cache when one is configured."""
    if cache_dir is None:
        return solve_t(cfg.spec, schedule, tol=tol), False
    path = _cache_file(cache_dir, cfg, tol)
    if path.exists():
        return tvector_from_json(json.loads(path.read_text())), True
    tv = solve_t(cfg.spec, schedule, tol=tol)
    cache_dir.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    tmp.write_text(json.dumps(tvector_to_json(tv), sort_keys=True))
    tmp.replace(path)
    return tv, False


# ---------------------------------------------------------------------------
# Helpers


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else str(obj)
    if isinstance(obj, (str, int, bool)) or obj is None:
        return obj
    return str(obj)


def _write_csv(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    Path(path).write_text(buf.getvalue())


def _opt(args, cfg, name, default):
    v = getattr(args, name, None)
    if v is not None:
        return v
    return cfg.option(name, default)


class Context:
    def __init__(self, args, cfg: RunConfig):
        self.args = args
        self.cfg = cfg
        self.spec = cfg.spec
        self.schedule = build_schedule(cfg.spec)
        cache = args.cache_dir or os.environ.get(CACHE_ENV)
        self.cache_dir = Path(cache) if cache else None
        self.cache_hit = None
        self._tvec = None

    def opt(self, name, default):
        return _opt(self.args, self.cfg, name, default)

    def tvec(self):
        if self._tvec is None:
            tv, hit = cached_solve(self.cfg, self.schedule, self.opt("tol", 1e-12), self.cache_dir)
            self.cache_hit = hit
            self._tvec = tv
        return self._tvec

    def measure(self):
        data = self.cfg.measure
        if data is None or data.get("type") == "optimal":
            return build_measure(self.spec, {"type": "optimal"}, self.schedule, self.tvec())
        return build_measure(self.spec, data, self.schedule)


# ---------------------------------------------------------------------------
# Commands


def cmd_schedule(ctx: Context) -> dict:
    return schedule_summary(ctx.schedule)


def cmd_hausdorff(ctx: Context) -> dict:
    tv = ctx.tvec()
    dim = hausdorff_dimension(ctx.spec, ctx.schedule, tv)
    first = tv.meta.get("first", [])
    return {
        "dimension": dim.as_dict(),
        "t_empty": tv.t_empty,
        "cap": tv.cap,
        "t_first": [[repr(k), tv.values[k]] for k in first],
        "bidirectional_gap": tv.meta.get("bidirectional_gap"),
    }


def cmd_minkowski(ctx: Context) -> dict:
    dim = minkowski_dimension(ctx.spec, ctx.schedule, terms=ctx.opt("terms", 40))
    rows = dim.meta["rows"]
    if ctx.args.csv:
        _write_csv(ctx.args.csv, ["p", "s", "t", "delta", "log_count", "contribution"],
                   [[r["p"], r["s"], r["t"], repr(r["delta"]), repr(r["log_count"]), repr(r["contribution"])]
                    for r in rows])
    out = {"dimension": {"value": dim.value, "lower": dim.lower, "upper": dim.upper,
                         "terms": dim.meta["terms"], "tail": dim.meta["tail"]}}
    if ctx.spec.d == 2:
        out["equality_conditions"] = equality_conditions(ctx.spec, ctx.schedule,
                                                         ctx.opt("depth", 12)).as_dict()
    return out


def cmd_entropy(ctx: Context) -> dict:
    mu = ctx.measure()
    dim = pmu_dimension_series(ctx.spec, mu, ctx.schedule, terms=ctx.opt("terms", 40))
    rows = dim.meta["rows"]
    if ctx.args.csv:
        _write_csv(ctx.args.csv, ["p", "family", "coefficient", "entropy", "contribution"],
                   [[r["p"], r["family"], repr(r["coefficient"]), repr(r["value"]), repr(r["contribution"])]
                    for r in rows])
    out = {"dimension": {"value": dim.value, "lower": dim.lower, "upper": dim.upper,
                         "terms": dim.meta["terms"], "tail": dim.meta["tail"]}}
    if ctx.spec.d == 2 and ctx.args.ly_depth:
        out["ledrappier_young"] = ly_check(ctx.spec, mu, ctx.args.ly_depth,
                                           terms=ctx.opt("terms", 40)).as_dict()
    return out


def cmd_optimal_measure(ctx: Context) -> dict:
    mu = build_measure(ctx.spec, {"type": "optimal"}, ctx.schedule, ctx.tvec())
    depth = ctx.opt("depth", 2)
    shape = tuple(int(x) for x in ctx.args.shape.split(",")) if ctx.args.shape else (depth,) * ctx.spec.d
    desc = measure_to_json(ctx.spec, mu, shape)
    if ctx.args.measure_out:
        Path(ctx.args.measure_out).write_text(json.dumps(desc, sort_keys=True, indent=1) + "\n")
        return {"shape": list(shape), "atoms": len(desc["masses"]), "file": str(ctx.args.measure_out)}
    return {"shape": list(shape), "measure": desc}


def cmd_sample(ctx: Context) -> dict:
    import random

    mu = ctx.measure()
    seed = ctx.opt("seed", 0)
    n = ctx.opt("n", 4)
    count = ctx.opt("samples", 10)
    rng = random.Random(seed)
    words = [sample_pmu(ctx.spec, mu, n, rng=rng, schedule=ctx.schedule) for _ in range(count)]
    rows = [[k] + ["".join(str(x) for x in w) for w in u.words] for k, u in enumerate(words)]
    if ctx.args.csv:
        _write_csv(ctx.args.csv, ["sample"] + [f"x{c + 1}" for c in range(ctx.spec.d)], rows)
        return {"seed": seed, "n": n, "samples": count, "file": str(ctx.args.csv)}
    return {"seed": seed, "n": n, "samples": count, "words": [word_to_json(u) for u in words]}


def cmd_render(ctx: Context) -> dict:
    rs = RenderSpec(ctx.opt("order", 4), ctx.opt("resolution", 256))
    bmp = render(ctx.spec, rs, ctx.schedule)
    path = ctx.args.pgm or "render.pgm"
    write_pgm(path, bmp)
    dark = sum(1 for v in bmp.pixels if v == 0)
    return {"file": str(path), "width": bmp.width, "height": bmp.height, "dark_pixels": dark,
            "sha256": bmp.sha256(), "meta": bmp.meta}


def cmd_box_count(ctx: Context) -> dict:
    lo, hi = ctx.opt("n_min", 2), ctx.opt("n_max", 8)
    method = ctx.args.method
    budget = ctx.opt("budget", 10 ** 7)
    counts = [(n, box_count(ctx.spec, n, method, budget, ctx.schedule)) for n in range(lo, hi + 1)]
    if ctx.args.csv:
        _write_csv(ctx.args.csv, ["n", "count"], counts)
    out = {"method": method, "counts": [[n, str(c)] for n, c in counts]}
    if hi > lo:
        out["slope"] = box_count_slope(ctx.spec, range(lo, hi + 1), method)
    if ctx.args.local_samples:
        mu = ctx.measure()
        est = estimate_local_dimension(ctx.spec, mu, ctx.args.local_samples, ctx.opt("n", 32),
                                       seed=ctx.opt("seed", 0), schedule=ctx.schedule)
        out["local_dimension"] = est.as_dict()
    return out


def cmd_verify(ctx: Context) -> dict:
    spec, sch = ctx.spec, ctx.schedule
    tol = ctx.opt("tol", 1e-12)
    terms = ctx.opt("terms", 40)
    checks = []

    def check(name, ok, **info):
        checks.append({"check": name, "pass": bool(ok), **info})

    tv = ctx.tvec()
    dim_h = hausdorff_dimension(spec, sch, tv)
    cert = contraction_certificate(spec, sch)
    check("contraction ratio", cert["max_ratio"] <= 1 / spec.q + 1e-12, max_ratio=cert["max_ratio"])
    gap = tv.meta.get("bidirectional_gap")
    if gap is not None:
        check("bidirectional convergence", gap <= max(2 * tol, 1e-11), gap=gap)
    dim_m = minkowski_dimension(spec, sch, terms=terms)
    check("dim_H <= dim_M", dim_h.lower <= dim_m.upper + 1e-8, dim_H=dim_h.value, dim_M=dim_m.value)
    check("dim_M <= d", dim_m.lower <= spec.d + 1e-8, dim_M=dim_m.value)
    mu = build_measure(spec, {"type": "optimal"}, sch, tv)
    series = pmu_dimension_series(spec, mu, sch, terms=terms)
    diff = abs(series.value - dim_h.value)
    check("optimal measure series = fixed point", diff <= 1e-6 + series.meta["tail"],
          series=series.value, dim_H=dim_h.value, difference=diff)
    if isinstance(spec.omega, Carpet) and spec.d == 2:
        m1, m2 = spec.m
        g = math.log(m2) / math.log(m1)
        ny = {}
        for x, y in spec.omega.allowed:
            ny[y] = ny.get(y, 0) + 1
        closed = math.fsum(v ** g for v in ny.values()) ** (spec.q / (spec.q - 1))
        rel = abs(tv.t_empty - closed) / tv.t_empty
        check("carpet closed form", rel <= 1e-10, t_empty=tv.t_empty, closed_form=closed, relative=rel)
    if spec.d == 2:
        eq = equality_conditions(spec, sch, ctx.opt("depth", 12))
        if eq.all_hold and eq.exact:
            d_gap = abs(dim_m.value - dim_h.value)
            check("equality conditions imply dim_H = dim_M",
                  d_gap <= 1e-8 + dim_m.meta["tail"] + (dim_h.upper - dim_h.lower), difference=d_gap)
    return {"passed": all(c["pass"] for c in checks), "checks": checks}


COMMANDS = {
    "schedule": cmd_schedule,
    "hausdorff": cmd_hausdorff,
    "minkowski": cmd_minkowski,
    "entropy": cmd_entropy,
    "optimal-measure": cmd_optimal_measure,
    "sample": cmd_sample,
    "render": cmd_render,
    "box-count": cmd_box_count,
    "verify": cmd_verify,
}


# ---------------------------------------------------------------------------
# Entry point


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="JSON configuration file")
    common.add_argument("--out", help="write the result envelope here instead of stdout")
    common.add_argument("--tol", type=float, help="fixed-point tolerance")
    common.add_argument("--terms", type=int, help="series truncation index")
    common.add_argument("--depth", type=int, help="depth for finite-depth checks and measure export")
    common.add_argument("--seed", type=int, help="random seed")
    common.add_argument("--cache-dir", help=f"fixed-point cache directory (default: ${CACHE_ENV})")

    parser = argparse.ArgumentParser(prog="multshift", description="Dimensions of multiplicative subshifts.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name in ("minkowski", "entropy", "sample", "box-count"):
            p.add_argument("--csv", help="write per-row data as CSV")
        if name == "entropy":
            p.add_argument("--ly-depth", type=int, default=0, help="also run the Ledrappier-Young check")
        if name == "optimal-measure":
            p.add_argument("--shape", help="comma-separated staircase shape of the exported cylinders")
            p.add_argument("--measure-out", help="write the cylinder measure JSON here")
        if name == "sample":
            p.add_argument("--n", type=int, help="scale index of the sampled balls")
            p.add_argument("--samples", type=int, help="number of points")
        if name == "render":
            p.add_argument("--order", type=int, help="approximation order")
            p.add_argument("--resolution", type=int, help="pixels per side")
            p.add_argument("--pgm", help="output image path")
        if name == "box-count":
            p.add_argument("--n-min", type=int)
            p.add_argument("--n-max", type=int)
            p.add_argument("--n", type=int, help="scale for the local dimension estimate")
            p.add_argument("--method", choices=["fibers", "brute"], default="fibers")
            p.add_argument("--budget", type=int)
            p.add_argument("--local-samples", type=int, default=0,
                           help="also estimate the local dimension with this many samples")
    return parser


def envelope(command: str, cfg: Optional[RunConfig], result, warn: list, elapsed: float, error=None,
             cache_hit=None) -> dict:
    timings = {"total_s": round(elapsed, 6)}
    if cache_hit is not None:
        # lives beside the timings so that cached and cold envelopes compare equal
        timings["fixed_point_cache"] = "hit" if cache_hit else "miss"
    env = {
        "command": command,
        "config_hash": cfg.content_hash if cfg else None,
        "tool_version": __version__,
        "warnings": warn,
        "timings": timings,
    }
    if error is not None:
        env["error"] = error
    else:
        env["result"] = _jsonable(result)
    return env


def run(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    args = build_parser().parse_args(argv)
    t0 = time.perf_counter()
    cfg = None
    code = 0
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            try:
                cfg = load_config(args.config)
                ctx = Context(args, cfg)
                result = COMMANDS[args.command](ctx)
            finally:
                # keep what was raised before an error too
                warn = [str(w.message) for w in caught]
        if args.command == "verify" and not result["passed"]:
            code = 1
        env = envelope(args.command, cfg, result, warn, time.perf_counter() - t0, cache_hit=ctx.cache_hit)
    except MultshiftError as exc:
        code = exc.exit_code
        err = {"type": type(exc).__name__, "message": str(exc), "exit_code": code}
        if getattr(exc, "bound", None) is not None:
            err["bound"] = str(exc.bound)
        env = envelope(args.command, cfg, None, warn, time.perf_counter() - t0, err)
    except OSError as exc:
        code = EXIT_CODES["ConfigError"]
        err = {"type": "ConfigError", "message": str(exc), "exit_code": code}
        env = envelope(args.command, cfg, None, warn, time.perf_counter() - t0, err)
    text = json.dumps(env, sort_keys=True, indent=1) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        stdout.write(text)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
