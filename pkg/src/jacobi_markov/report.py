"""Verification reports and the CSV/JSON conventions shared by every table."""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np

__all__ = [
    "VerificationReport",
    "Check",
    "fmt",
    "write_csv",
    "csv_text",
    "Timer",
    "build_report",
]

CSV_COLUMNS = ["identity_id", "params", "grid", "max_abs_err", "max_rel_err", "tolerance", "pass"]


def fmt(x) -> str:
    """17 significant digits; integers and strings pass through."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return format(x, ".17g")
    return str(x)


def csv_text(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def write_csv(path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(csv_text(header, rows))


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    return v


@dataclass
class Check:
    """A secondary condition that must hold for a report to pass."""

    name: str
    value: float
    limit: float

    @property
    def ok(self) -> bool:
        return bool(self.value <= self.limit)


@dataclass
class VerificationReport:
    """Outcome of one numeric identity check.

    ``passed`` is true iff max_abs_err <= tolerance and every entry of
    ``checks`` holds.  ``rows`` holds per-grid-point detail for verbose CSV.
    """

    identity_id: str
    params: dict
    grid: str
    max_abs_err: float
    max_rel_err: float
    tolerance: float
    runtime_ms: float = 0.0
    checks: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    row_header: list = field(default_factory=list)
    rows: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        ok = bool(np.isfinite(self.max_abs_err) and self.max_abs_err <= self.tolerance)
        return ok and all(c.ok for c in self.checks)

    def summary_line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (
            f"{status} {self.identity_id} {self.params} max_abs_err={self.max_abs_err:.3e} "
            f"tol={self.tolerance:.1e}"
        )

    def to_dict(self) -> dict:
        return _jsonable(
            {
                "identity_id": self.identity_id,
                "params": self.params,
                "grid": self.grid,
                "max_abs_err": self.max_abs_err,
                "max_rel_err": self.max_rel_err,
                "tolerance": self.tolerance,
                "pass": self.passed,
                "runtime_ms": self.runtime_ms,
                "checks": [{"name": c.name, "value": c.value, "limit": c.limit, "ok": c.ok} for c in self.checks],
                "notes": list(self.notes),
            }
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def csv_row(self) -> list:
        params = ";".join(f"{k}={fmt(v)}" for k, v in self.params.items())
        return [self.identity_id, params, self.grid, self.max_abs_err, self.max_rel_err, self.tolerance, self.passed]

    def detail_csv(self) -> str:
        return csv_text(self.row_header, self.rows)


class Timer:
    def __init__(self):
        self.start = time.perf_counter()

    @property
    def ms(self) -> float:
        return (time.perf_counter() - self.start) * 1e3


def build_report(identity_id, params, grid, lhs, rhs, tolerance, timer=None, **kw) -> VerificationReport:
    """Report comparing two arrays of matching shape.

    The relative error skips entries whose exact side is below 1e-8 times
    the largest one (zeros of the identity, such as a = 0 with ell > 0).
    """
    lhs = np.asarray(lhs, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    diff = np.abs(lhs - rhs)
    max_abs = float(diff.max()) if diff.size else 0.0
    big = np.abs(lhs) > 1e-8 * (np.abs(lhs).max() if lhs.size else 0.0)
    max_rel = float((diff[big] / np.abs(lhs[big])).max()) if np.any(big) else 0.0
    if diff.size and not np.all(np.isfinite(diff)):
        max_abs = float("nan")
    return VerificationReport(
        identity_id=identity_id,
        params=dict(params),
        grid=grid,
        max_abs_err=max_abs,
        max_rel_err=max_rel,
        tolerance=float(tolerance),
        runtime_ms=timer.ms if timer else 0.0,
        **kw,
    )
