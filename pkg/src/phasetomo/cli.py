"""Command-line driver: simulate, estimate, reconstruct, roundtrip, validate.

Exit codes: 0 success, 1 I/O or other failure (including a failed round-trip
gate), 2 validation, 3 coverage, 4 estimation, 5 singular system.
"""
from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import io
from .errors import PhasetomoError, ValidationError
from .pipeline import (
    EstimationConfig,
    RunReport,
    estimate_tomogram,
    reconstruct_tomogram,
    roundtrip,
    simulate_samples,
    build_report,
)
from .recon_tomogram import Tomogram, analytic_tomogram
from .states import validate

log = logging.getLogger("phasetomo")


def _cfg(args) -> EstimationConfig:
    return EstimationConfig(radial_bins=args.bins, r_fit_max=args.rmax, poly_degree=args.degree,
                            min_count_per_bin=args.min_count)


def _write_report(args, report: RunReport, started: float):
    if args.timing:
        report.timing = dict(report.timing or {}, total=time.perf_counter() - started)
    if args.report:
        io.write_json(args.report, report.to_dict())


def cmd_simulate(args) -> int:
    rho = io.read_density(args.state)
    rep = validate(rho)
    if not rep.passed:
        raise ValidationError(f"{args.state}: " + "; ".join(rep.messages))
    out = Path(args.out)
    s_values = args.s if args.s else list(range(rho.dim))
    if args.mode == "analytic":
        t = analytic_tomogram(rho, s_values)
        target = out if out.suffix == ".json" else out / "tomogram.json"
        target.parent.mkdir(parents=True, exist_ok=True)
        io.write_tomogram(target, t)
        log.info("wrote %s", target)
        return 0
    out.mkdir(parents=True, exist_ok=True)
    for ss in simulate_samples(rho, s_values, args.count, args.seed, args.sample_rmax):
        path = out / f"samples_s{ss.s}.csv"
        io.write_samples(path, ss)
        for w in ss.warnings:
            log.warning("s=%d: %s", ss.s, w)
        log.info("wrote %s", path)
    return 0


def cmd_estimate(args) -> int:
    sets = [io.read_samples(p) for p in args.input]
    notes: list[str] = []
    t = estimate_tomogram(sets, args.dim, _cfg(args), notes)
    for n in notes:
        log.warning(n)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    io.write_tomogram(args.out, t)
    return 0


def _load_tomogram(args) -> tuple[Tomogram, dict, dict]:
    """Tomogram from JSON input or from sample CSVs (estimated on the fly)."""
    hashes = {str(p): io.file_hash(p) for p in args.input}
    if len(args.input) == 1 and args.input[0].endswith(".json"):
        t = io.read_tomogram(args.input[0])
        if args.dim is not None and args.dim != t.dim_hint:
            t = Tomogram(t.profiles, args.dim)
        return t, hashes, {}
    if args.dim is None:
        raise ValidationError("--dim is required when reconstructing from samples")
    sets = [io.read_samples(p) for p in args.input]
    t = estimate_tomogram(sets, args.dim, _cfg(args))
    return t, hashes, {ss.s: ss.truncated_mass for ss in sets}


def cmd_reconstruct(args) -> int:
    started = time.perf_counter()
    t, hashes, trunc = _load_tomogram(args)
    rho, rec = reconstruct_tomogram(t, args.method, args.s, None, args.degree)
    report = build_report(rec, "reconstruct", None)
    report.input_hashes = hashes
    report.truncated_mass = trunc
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    io.write_density(args.out, rho)
    for w in report.warnings:
        log.warning(w)
    _write_report(args, report, started)
    return 0


def cmd_roundtrip(args) -> int:
    started = time.perf_counter()
    count = None if args.mode == "analytic" else args.count
    s = args.s[0] if args.s else None
    truth, est, report = roundtrip(args.dim, args.seed, args.method, s, count, _cfg(args),
                                   args.sample_rmax, timing=args.timing)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        io.write_density(args.out, est)
    _write_report(args, report, started)
    verdict = "PASS" if report.gate["passed"] else "FAIL"
    print(f"roundtrip dim={args.dim} seed={args.seed} method={args.method}: "
          f"max error {report.max_error:.3e} [{verdict}]")
    return 0 if report.gate["passed"] else 1


def cmd_validate(args) -> int:
    rho = io.read_density(args.state)
    rep = validate(rho)
    if args.report:
        io.write_json(args.report, rep.to_dict())
    print("valid" if rep.passed else "invalid: " + "; ".join(rep.messages))
    return 0 if rep.passed else ValidationError.exit_code


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="phasetomo", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def fit_flags(sp):
        sp.add_argument("--bins", type=int, default=32, help="radial bins for sampled data")
        sp.add_argument("--rmax", type=float, default=None, help="fit radius (default: sampling disk)")
        sp.add_argument("--degree", type=int, default=None, help="override polynomial degree")
        sp.add_argument("--min-count", type=int, default=10, help="minimum samples per bin")

    sp = sub.add_parser("simulate", help="forward model: tomogram JSON or sample CSVs")
    sp.add_argument("--state", required=True)
    sp.add_argument("--s", type=int, nargs="+", help="observable indices (default 0..dim-1)")
    sp.add_argument("--mode", choices=["analytic", "samples"], default="analytic")
    sp.add_argument("--count", type=int, default=100_000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--sample-rmax", type=float, default=None, help="sampling disk radius")
    sp.add_argument("--out", required=True, help="directory (or .json file in analytic mode)")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("estimate", help="sample CSVs -> tomogram JSON")
    sp.add_argument("--input", nargs="+", required=True)
    sp.add_argument("--dim", type=int, required=True)
    sp.add_argument("--out", required=True)
    fit_flags(sp)
    sp.set_defaults(func=cmd_estimate)

    sp = sub.add_parser("reconstruct", help="tomogram JSON or sample CSVs -> density JSON")
    sp.add_argument("--input", nargs="+", required=True)
    sp.add_argument("--method", choices=["tomogram", "single"], default="tomogram")
    sp.add_argument("--s", type=int, default=None)
    sp.add_argument("--dim", type=int, default=None)
    sp.add_argument("--out", required=True)
    sp.add_argument("--report", default=None)
    sp.add_argument("--timing", action="store_true", help="record wall time in the report")
    fit_flags(sp)
    sp.set_defaults(func=cmd_reconstruct)

    sp = sub.add_parser("roundtrip", help="random state -> data -> reconstruction")
    sp.add_argument("--dim", type=int, default=3)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--method", choices=["tomogram", "single"], default="tomogram")
    sp.add_argument("--s", type=int, nargs=1, default=None)
    sp.add_argument("--mode", choices=["analytic", "samples"], default="analytic")
    sp.add_argument("--count", type=int, default=1_000_000)
    sp.add_argument("--sample-rmax", type=float, default=None)
    sp.add_argument("--out", default=None)
    sp.add_argument("--report", default=None)
    sp.add_argument("--timing", action="store_true")
    fit_flags(sp)
    sp.set_defaults(func=cmd_roundtrip)

    sp = sub.add_parser("validate", help="check a density-matrix JSON")
    sp.add_argument("--state", required=True)
    sp.add_argument("--report", default=None)
    sp.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    np.seterr(over="ignore")
    try:
        return args.func(args)
    except PhasetomoError as exc:
        log.error("%s", exc)
        return exc.exit_code
    except OSError as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
