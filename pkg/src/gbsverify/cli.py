"""Command line entry point: ``gbsverify {sample,exact,compare,density}``.

Exit codes: 0 success, 1 validation failure, 2 numerical abort.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from .core import (
    ConfigError,
    NumericalAbort,
    Representation,
    RunConfig,
    SingularEvaluationError,
    Weighting,
    derive_subensemble_seed,
)
from .engine import resolve_threads, run_counts, trajectory_observables
from .exact import exact_total_count_distribution
from .io import (
    CSVFormatError,
    RunReport,
    read_distribution,
    sidecar_path,
    write_density,
    write_distribution,
)
from .stats import compare, histogram_density

log = logging.getLogger("gbsverify")

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 1, 2


def _seeds(config: RunConfig) -> dict:
    return {
        "master": config.seed,
        "unitary": config.unitary.get("seed"),
        "subensembles": [derive_subensemble_seed(config.seed, i) for i in range(config.subensembles)],
    }


def cmd_sample(args) -> RunReport:
    config = RunConfig.from_json(args.config)
    t0 = time.perf_counter()
    dist = run_counts(config, resolve_threads(args.threads))
    wall = time.perf_counter() - t0
    write_distribution(dist, args.out)
    report = RunReport(
        "sample",
        config.to_dict(),
        wall_seconds=wall,
        seeds=_seeds(config),
        singular_evaluations=dist.meta["singular_evaluations"],
        imag_residue_max=dist.meta["imag_residue_max"],
        outputs=[str(args.out)],
        extra={"m_max": dist.m_max, "sum_probability": float(dist.probability.sum())},
    )
    report.write(sidecar_path(args.out))
    return report


def cmd_exact(args) -> RunReport:
    if args.modes is None or args.squeezing is None:
        raise ConfigError("exact needs --modes and --squeezing")
    # ExactParams raises ValueError on bad M or r
    dist = exact_total_count_distribution(args.modes, args.squeezing, args.mmax)
    write_distribution(dist, args.out)
    report = RunReport(
        "exact",
        {"modes": args.modes, "squeezing": args.squeezing, "m_max": dist.m_max},
        outputs=[str(args.out)],
        extra={"normalization": dist.meta["normalization"], "p": dist.meta["p"]},
    )
    report.write(sidecar_path(args.out))
    return report


def cmd_compare(args) -> RunReport:
    a, b = read_distribution(args.a), read_distribution(args.b)
    result = compare(a, b).to_dict()
    Path(args.out).write_text(json.dumps(result, indent=2, sort_keys=True) + "\n")
    report = RunReport(
        "compare", {"a": str(args.a), "b": str(args.b)}, outputs=[str(args.out)], extra=result
    )
    report.write(sidecar_path(args.out))
    return report


def _density_options(config_path: str, args) -> dict:
    doc = json.loads(Path(config_path).read_text()).get("density", {})
    opts = {
        "kernel": doc.get("kernel"),
        "m": doc.get("m"),
        "range": doc.get("range"),
        "bins": doc.get("bins"),
        "weighting": doc.get("weighting", "value"),
    }
    for key in opts:
        v = getattr(args, key.replace("range", "bin_range"))
        if v is not None:
            opts[key] = v
    if opts["m"] is None or opts["range"] is None or opts["bins"] is None:
        raise ConfigError("density needs m, range and bins (flags or config 'density' section)")
    if isinstance(opts["m"], bool) or not isinstance(opts["m"], int) or opts["m"] < 0:
        raise ConfigError("density m must be a non-negative integer")
    lo, hi = (float(x) for x in opts["range"])
    if not hi > lo:
        raise ConfigError(f"empty bin range [{lo}, {hi}]")
    if isinstance(opts["bins"], bool) or not isinstance(opts["bins"], int) or opts["bins"] < 1:
        raise ConfigError("bins must be a positive integer")
    opts["range"] = (lo, hi)
    try:
        opts["weighting"] = Weighting(opts["weighting"])
        if opts["kernel"] is not None:
            opts["kernel"] = Representation(opts["kernel"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return opts


def cmd_density(args) -> RunReport:
    config = RunConfig.from_json(args.config)
    opts = _density_options(args.config, args)
    t0 = time.perf_counter()
    values = trajectory_observables(config, opts["m"], opts["kernel"], resolve_threads(args.threads))
    lo, hi = opts["range"]
    hist = histogram_density(values, lo, hi, opts["bins"], opts["weighting"])
    wall = time.perf_counter() - t0
    write_density(hist, args.out)
    kernel = (opts["kernel"] or config.representation).value
    report = RunReport(
        "density",
        {**config.to_dict(), "density": {
            "kernel": kernel, "m": opts["m"], "range": [lo, hi],
            "bins": opts["bins"], "weighting": opts["weighting"].value,
        }},
        wall_seconds=wall,
        seeds=_seeds(config),
        imag_residue_max=float(abs(values.imag).max()),
        outputs=[str(args.out)],
        extra={
            "underflow": hist.underflow,
            "overflow": hist.overflow,
            "total": hist.total,
            "bin_width": hist.width,
            "mean_value": float(values.real.mean()),
        },
    )
    report.write(sidecar_path(args.out))
    return report


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gbsverify",
        description="Phase-space Monte Carlo verification of Gaussian boson sampling counts.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="estimate the total-count distribution")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=int)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("exact", help="exact total-count distribution")
    p.add_argument("--modes", type=int)
    p.add_argument("--squeezing", type=float)
    p.add_argument("--mmax", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("compare", help="compare two distribution CSVs")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("density", help="histogram of per-trajectory kernel values")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=int)
    p.add_argument("--kernel", choices=[r.value for r in Representation])
    p.add_argument("--m", type=int)
    p.add_argument("--range", dest="bin_range", nargs=2, type=float, metavar=("BMIN", "BMAX"))
    p.add_argument("--bins", type=int)
    p.add_argument("--weighting", choices=[w.value for w in Weighting])
    p.set_defaults(func=cmd_density)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        report = args.func(args)
    except (NumericalAbort, SingularEvaluationError) as exc:
        print(f"gbsverify: numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, CSVFormatError, ValueError, OSError) as exc:
        print(f"gbsverify: {exc}", file=sys.stderr)
        return EXIT_INVALID
    log.info("%s done in %.2fs -> %s", report.command, report.wall_seconds, ", ".join(report.outputs))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
