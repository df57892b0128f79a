"""Ten-thousand-mode matrix-P run against the exact total-count law.

Full run (hours on one core; needs about 3.5 GB of memory):

    python scripts/reproduce_scale.py --out runs/scale

Timing probe that runs only the first K sub-ensembles and extrapolates:

    python scripts/reproduce_scale.py --out runs/scale --probe 2
"""

from __future__ import annotations

import argparse
import json
import resource
import sys
import time
from pathlib import Path

import numpy as np

from gbsverify.cli import main as cli_main
from gbsverify.core import RunConfig
from gbsverify.engine import build_unitary, simulate_subensemble
from gbsverify.exact import exact_total_count_distribution
from gbsverify.io import read_distribution
from gbsverify.stats import SubEnsembleAccumulator

ROOT = Path(__file__).resolve().parents[1]
DEFAULT_CONFIG = ROOT / "configs" / "scale_1e4_matrix_p.json"


def relative_errors(est, ref):
    central = ref.probability > 0.1 * ref.probability.max()
    diff = np.abs(est.probability[: ref.probability.size] - ref.probability)
    rel = diff[central] / ref.probability[central]
    k = int(np.argmax(ref.probability))
    return {
        "central_bins": int(central.sum()),
        "median_rel_error": float(np.median(rel)),
        "max_rel_error": float(rel.max()),
        "peak_m": k,
        "peak_rel_error": float(diff[k] / ref.probability[k]),
        "peak_rel_sigma": float(est.sigma[k] / ref.probability[k]),
    }


def probe(config: RunConfig, k: int) -> dict:
    t0 = time.perf_counter()
    U = build_unitary(config)
    t_u = time.perf_counter() - t0
    acc = SubEnsembleAccumulator()
    times = []
    for i in range(k):
        t0 = time.perf_counter()
        acc.add(i, simulate_subensemble(config, i, U))
        times.append(time.perf_counter() - t0)
        print(f"sub-ensemble {i}: {times[-1]:.1f} s", flush=True)
    per = float(np.mean(times))
    out = {
        "probe_subensembles": k,
        "unitary_seconds": t_u,
        "seconds_per_subensemble": per,
        "extrapolated_hours": (t_u + per * config.subensembles) / 3600,
    }
    if k >= 2:
        est = acc.finalize(0)
        ref = exact_total_count_distribution(config.modes, float(config.squeezers.r[0]), est.m_max)
        out["partial_ensemble"] = k * config.per_subensemble
        out.update(relative_errors(est, ref))
    return out


def full(config_path: Path, out_dir: Path, threads: int | None) -> dict:
    doc = json.loads(config_path.read_text())
    sample, exact, report = out_dir / "scale.csv", out_dir / "exact.csv", out_dir / "compare.json"
    args = ["sample", "--config", str(config_path), "--out", str(sample)]
    if threads:
        args += ["--threads", str(threads)]
    t0 = time.perf_counter()
    if cli_main(args) != 0:
        raise SystemExit("sample failed")
    wall = time.perf_counter() - t0
    cli_main(["exact", "--modes", str(doc["modes"]), "--squeezing", str(doc["squeezing"]), "--out", str(exact)])
    cli_main(["compare", str(sample), str(exact), "--out", str(report)])
    out = {"wall_hours": wall / 3600, **json.loads(report.read_text())}
    out.update(relative_errors(read_distribution(sample), read_distribution(exact)))
    return out


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--config", type=Path, default=DEFAULT_CONFIG)
    ap.add_argument("--out", type=Path, required=True)
    ap.add_argument("--probe", type=int, metavar="K", help="run only K sub-ensembles and extrapolate")
    ap.add_argument("--threads", type=int)
    args = ap.parse_args(argv)
    args.out.mkdir(parents=True, exist_ok=True)
    config = RunConfig.from_json(args.config)
    if args.probe:
        summary = probe(config, args.probe)
    else:
        summary = full(args.config, args.out, args.threads)
    summary["peak_rss_gb"] = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 2**20
    (args.out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(json.dumps(summary, indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
