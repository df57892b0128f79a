"""Flat-file formats: count distributions, densities and run reports."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .core import CountDistribution, DensityHistogram

__all__ = [
    "CSVFormatError",
    "RunReport",
    "write_distribution",
    "read_distribution",
    "write_density",
    "sidecar_path",
]

COUNT_HEADER = ["m", "probability", "sigma"]
DENSITY_HEADER = ["bin_center", "density", "sigma"]


class CSVFormatError(ValueError):
    pass


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_distribution(dist: CountDistribution, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COUNT_HEADER)
        for m, p, s in zip(dist.m, dist.probability, dist.sigma):
            w.writerow([int(m), _fmt(p), _fmt(s)])


def read_distribution(path: str | Path) -> CountDistribution:
    """Read a ``m,probability,sigma`` CSV; counts must be consecutive."""
    path = Path(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip() for c in rows[0]] != COUNT_HEADER:
        raise CSVFormatError(f"{path}:1: expected header {','.join(COUNT_HEADER)}")
    ms, ps, ss = [], [], []
    for line, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 3:
            raise CSVFormatError(f"{path}:{line}: expected 3 fields, got {len(row)}")
        try:
            m, p, s = int(row[0]), float(row[1]), float(row[2])
        except ValueError:
            raise CSVFormatError(f"{path}:{line}: cannot parse {row!r}") from None
        if ms and m != ms[-1] + 1:
            raise CSVFormatError(f"{path}:{line}: count {m} does not follow {ms[-1]}")
        if m < 0:
            raise CSVFormatError(f"{path}:{line}: negative count {m}")
        ms.append(m)
        ps.append(p)
        ss.append(s)
    if not ms:
        raise CSVFormatError(f"{path}: no data rows")
    return CountDistribution(ms[0], np.array(ps), np.array(ss), {"source": str(path)})


def write_density(hist: DensityHistogram, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DENSITY_HEADER)
        for c, d, s in zip(hist.centers, hist.density, hist.sigma):
            w.writerow([_fmt(c), _fmt(d), _fmt(s)])


def sidecar_path(out: str | Path) -> Path:
    out = Path(out)
    return out.with_name(out.name + ".json")


def _jsonable(x: Any) -> Any:
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, np.generic):
        return x.item()
    return x


@dataclass
class RunReport:
    command: str
    config: dict[str, Any]
    wall_seconds: float = 0.0
    seeds: dict[str, Any] = field(default_factory=dict)
    singular_evaluations: int = 0
    imag_residue_max: float = 0.0
    outputs: list[str] = field(default_factory=list)
    extra: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return _jsonable(asdict(self))

    def write(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")
