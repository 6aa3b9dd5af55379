"""Command-line front end: sweeps, engine cross-checks, crossovers and raw samples.

    fdisac sweep --config sweep.cfg --variable theta_db --start -60 --stop 0 --points 13 --out sweep.csv
    fdisac verify --config sweep.cfg --tolerance 0.03
    fdisac crossover --config range.cfg --variable r1 --start 1v --stop 12v
    fdisac simulate --config sweep.cfg --reps 10000 --out samples.csv
"""
from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import analysis, netsim
from .params import ParamError, Scenario, db_to_linear, default_scenario, load_config, parse_distance

log = logging.getLogger("fdisac")

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_CONFIG = 2
EXIT_IO = 4

SWEEP_VARIABLES = ("theta_db", "theta_b_db", "theta_u_db", "r1", "p_u", "zeta")
VERIFY_GRID_DB = tuple(range(-60, 1, 5))
JOINT = ("detect_bs_2nd_joint", "decode_bs_2nd_joint")
ORDER_QUANTITIES = {
    "decode-first": ("decode_bs_1st", "detect_bs_2nd_joint"),
    "detect-first": ("detect_bs_1st", "decode_bs_2nd_joint"),
}


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    start: float
    stop: float
    points: int
    spacing: str = "linear"
    engines: str = "both"      # analysis | sim | both
    order: str = "both"        # decode-first | detect-first | both

    def __post_init__(self):
        if self.variable not in SWEEP_VARIABLES:
            raise ParamError(f"unknown sweep variable {self.variable!r}")
        if not self.start < self.stop:
            raise ParamError("sweep start must be below stop")
        if self.points < 2:
            raise ParamError("a sweep needs at least 2 points")
        if self.spacing not in ("linear", "log"):
            raise ParamError("spacing must be linear or log")
        if self.spacing == "log" and self.start <= 0:
            raise ParamError("log spacing needs positive endpoints")
        if self.engines not in ("analysis", "sim", "both"):
            raise ParamError("engine must be analysis, sim or both")
        if self.order not in ("decode-first", "detect-first", "both"):
            raise ParamError("order must be decode-first, detect-first or both")

    def values(self) -> np.ndarray:
        if self.spacing == "log":
            return np.geomspace(self.start, self.stop, self.points)
        return np.linspace(self.start, self.stop, self.points)


def apply_variable(sc: Scenario, variable: str, x: float) -> Scenario:
    if variable == "theta_db":
        return sc.replace(theta_b=db_to_linear(x), theta_u=db_to_linear(x))
    if variable == "theta_b_db":
        return sc.replace(theta_b=db_to_linear(x))
    if variable == "theta_u_db":
        return sc.replace(theta_u=db_to_linear(x))
    return sc.replace(**{variable: x})


def csv_header(variable: str) -> list[str]:
    cols = [variable]
    for q in analysis.QUANTITIES:
        cols += [f"{q}_analytic", f"{q}_mc", f"{q}_mc_stderr"]
    return cols


def _fmt(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return f"{x:.10g}"


def _orders(order: str):
    if order == "both":
        return (analysis.SuicOrder.DECODE_FIRST, analysis.SuicOrder.DETECT_FIRST)
    return (analysis.SuicOrder(order),)


def _analysis_point(args):
    sc, order = args
    res = analysis.evaluate_all(sc, _orders(order))
    return {k: v.clamped() for k, v in res.items()}


def _workers() -> int:
    return netsim.worker_count()


def run_sweep(base: Scenario, spec: SweepSpec, out_path, reps=netsim.DEFAULT_REPS,
              seed=netsim.DEFAULT_SEED) -> list[list[str]]:
    """Evaluate the sweep and write the CSV; returns the rows written (header first)."""
    xs = spec.values()
    scenarios = [apply_variable(base, spec.variable, float(x)) for x in xs]
    wanted = set(analysis.QUANTITIES)
    if spec.order != "both":
        other = "detect-first" if spec.order == "decode-first" else "decode-first"
        wanted -= set(ORDER_QUANTITIES[other])

    analytic = [{} for _ in xs]
    if spec.engines in ("analysis", "both"):
        jobs = [(sc, spec.order) for sc in scenarios]
        workers = _workers()
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                analytic = list(pool.map(_analysis_point, jobs))
        else:
            analytic = [_analysis_point(j) for j in jobs]

    mc = [{} for _ in xs]
    if spec.engines in ("sim", "both"):
        batch = netsim.cached_batch(base.params, reps, seed)
        mc = [netsim.estimate_from_batch(batch, sc) for sc in scenarios]

    rows = [csv_header(spec.variable)]
    for x, a, m in zip(xs, analytic, mc):
        row = [_fmt(float(x))]
        for q in analysis.QUANTITIES:
            keep = q in wanted
            row.append(_fmt(a.get(q)) if keep else "")
            est = m.get(q) if keep else None
            row += [_fmt(est.value), _fmt(est.stderr)] if est else ["", ""]
        rows.append(row)
    with open(out_path, "w", newline="") as fh:
        for row in rows:
            fh.write(",".join(row) + "\n")
    return rows


def verify(base: Scenario, tolerance: float, joint_tolerance: float | None = None,
           reps=netsim.DEFAULT_REPS, seed=netsim.DEFAULT_SEED, out=None) -> bool:
    """Compare both engines over the -60..0 dB coupled-threshold grid."""
    joint_tolerance = tolerance if joint_tolerance is None else joint_tolerance
    out = sys.stdout if out is None else out
    batch = netsim.cached_batch(base.params, reps, seed)
    worst = {q: (0.0, None) for q in analysis.QUANTITIES}
    breaches = []
    for db in VERIFY_GRID_DB:
        sc = apply_variable(base, "theta_db", db)
        a = analysis.evaluate_all(sc)
        m = netsim.estimate_from_batch(batch, sc)
        for q in analysis.QUANTITIES:
            gap = abs(a[q].clamped() - m[q].value)
            tol = joint_tolerance if q in JOINT else tolerance
            if gap > worst[q][0] or worst[q][1] is None:
                worst[q] = (max(gap, worst[q][0]), db)
            if gap > tol:
                breaches.append((q, db, a[q].clamped(), m[q].value, m[q].stderr, tol))
    for q in analysis.QUANTITIES:
        gap, db = worst[q]
        tol = joint_tolerance if q in JOINT else tolerance
        status = "PASS" if gap <= tol else "FAIL"
        print(f"{status} {q:22s} max|analytic-mc| = {gap:.4f} (at {db} dB, tolerance {tol})", file=out)
    for q, db, a, m, se, tol in breaches:
        print(f"  breach: {q} at {db} dB: analytic {a:.4f} mc {m:.4f} +- {se:.4f} > {tol}", file=out)
    return not breaches


def _parse_sweep_bound(text: str, variable: str, v: float) -> float:
    if variable == "r1":
        return parse_distance(text, v)
    try:
        return float(text)
    except ValueError:
        raise ParamError(f"not a number: {text!r}") from None


def _load(args) -> Scenario:
    if args.config:
        return load_config(args.config)
    return default_scenario()


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fdisac", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, sim=True):
        p.add_argument("--config", help="key = value scenario file")
        if sim:
            p.add_argument("--seed", type=int, default=netsim.DEFAULT_SEED)
            p.add_argument("--reps", type=int, default=netsim.DEFAULT_REPS)

    p = sub.add_parser("sweep", help="sweep one variable and write a CSV")
    common(p)
    p.add_argument("--variable", required=True, choices=SWEEP_VARIABLES)
    p.add_argument("--start", required=True)
    p.add_argument("--stop", required=True)
    p.add_argument("--points", type=int, default=13)
    p.add_argument("--spacing", choices=("linear", "log"), default="linear")
    p.add_argument("--engine", choices=("analysis", "sim", "both"), default="both")
    p.add_argument("--order", choices=("decode-first", "detect-first", "both"), default="both")
    p.add_argument("--out", required=True)

    p = sub.add_parser("verify", help="check analysis against simulation on the threshold grid")
    common(p)
    p.add_argument("--tolerance", type=float, default=0.03)
    p.add_argument("--joint-tolerance", type=float, default=None,
                   help="tolerance for the two joint stage-2 quantities (default: --tolerance)")

    p = sub.add_parser("crossover", help="find where the better SuIC order flips")
    common(p, sim=False)
    p.add_argument("--variable", choices=("r1", "p_u"), default="r1")
    p.add_argument("--start", required=True)
    p.add_argument("--stop", required=True)

    p = sub.add_parser("simulate", help="dump per-realization SINRs")
    common(p)
    p.add_argument("--out", required=True)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        base = _load(args)
        if getattr(args, "reps", 1) < 1:
            raise ParamError("--reps must be at least 1")
        if args.command == "sweep":
            v = base.params.v
            spec = SweepSpec(args.variable, _parse_sweep_bound(args.start, args.variable, v),
                             _parse_sweep_bound(args.stop, args.variable, v), args.points,
                             args.spacing, args.engine, args.order)
            out_dir = os.path.dirname(os.path.abspath(args.out))
            if not os.access(out_dir, os.W_OK):
                print(f"error: cannot write to {args.out}", file=sys.stderr)
                return EXIT_IO
        elif args.command == "crossover":
            v = base.params.v
            lo = _parse_sweep_bound(args.start, args.variable, v)
            hi = _parse_sweep_bound(args.stop, args.variable, v)
            if not 0 < lo < hi:
                raise ParamError("crossover range must satisfy 0 < start < stop")
    except ParamError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    log.info("simulator backend: %s", netsim.backend_name())
    try:
        if args.command == "sweep":
            rows = run_sweep(base, spec, args.out, args.reps, args.seed)
            print(f"wrote {len(rows) - 1} rows to {args.out}")
            return EXIT_OK
        if args.command == "verify":
            ok = verify(base, args.tolerance, args.joint_tolerance, args.reps, args.seed)
            return EXIT_OK if ok else EXIT_VERIFY_FAILED
        if args.command == "crossover":
            x = analysis.find_crossover(base, args.variable, lo, hi)
            if x is None:
                print("none")
            elif args.variable == "r1":
                print(f"{x:.10g} ({x / v:.6g}v)")
            else:
                print(f"{x:.10g}")
            return EXIT_OK
        if args.command == "simulate":
            batch = netsim.simulate_batch(base.params, args.reps, args.seed)
            n = netsim.write_samples(args.out, batch, base)
            print(f"wrote {n} rows to {args.out}")
            return EXIT_OK
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_CONFIG  # pragma: no cover


if __name__ == "__main__":
    sys.exit(main())
