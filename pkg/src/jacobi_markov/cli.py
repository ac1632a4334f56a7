"""Command-line driver: verification suites, tables and kernel scans.

Every run writes CSV tables plus a JSON manifest to
``<out>/<suite>/<timestamp>`` (or ``<out>/<suite>/cfg-<hash>`` with
``--deterministic-paths``).  Exit codes: 0 all checks pass, 1 a check or
the numerics failed, 2 invalid configuration.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import hashlib
import json
import math
import sys
import time
from importlib import metadata
from pathlib import Path

import numpy as np

from . import bounds, simplex, verify
from .errors import NumericalError, ParameterDomainError, ResourceError, SingularInputError, UsageError
from .operators import OperatorKind, OperatorSpec, markov_sequence, operator_matrix
from .report import CSV_COLUMNS, VerificationReport, _jsonable, write_csv

__all__ = ["main", "build_parser", "config_hash", "parse_grid", "MANIFEST_VERSION"]

MANIFEST_VERSION = 1
TOOL_NAME = "jacobi-markov"

SUITES = ("gegenbauer", "gasper", "koornwinder", "laplace", "geometric", "biangle", "triangle", "selfadjoint")
TABLES = ("eigenvalues", "bounds", "trace")
SCANS = ("kernel-positivity", "kernel-negativity-ell")

JACOBI_SETS = [(1.5, 0.5), (2.0, 0.0), (3.25, 0.75), (2.0, 0.5)]
GAMMAS = [0.6, 1.0, 1.5, 2.5]
LAPLACE_BETAS = [0.5, 0.75, 1.0, 2.5]
BOUND_A = [-0.9, -0.5, 0.0, 0.5, 0.9]

# keys that select where and how fast a run happens, not what it computes
_NON_NUMERIC_KEYS = {"out", "deterministic_paths", "threads", "config"}

CONFIG_KEYS = (
    "alpha", "beta", "gamma", "ell", "a", "nmax", "grid", "tol", "seed", "threads",
    "integrator", "out", "deterministic_paths", "m", "N", "samples", "pairs", "qmc_log2",
)


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0.0.0"


def parse_grid(text) -> np.ndarray:
    """"lo:hi:n" (linspace) or a comma list of numbers."""
    if isinstance(text, (list, tuple)):
        return np.asarray(text, dtype=float)
    text = str(text).strip()
    if not text:
        return np.empty(0)
    try:
        if ":" in text:
            lo, hi, n = text.split(":")
            n = int(n)
            if n < 0:
                raise ValueError
            return np.linspace(float(lo), float(hi), n)
        return np.array([float(v) for v in text.split(",") if v.strip()])
    except ValueError as exc:
        raise UsageError(f"cannot parse grid {text!r}; use lo:hi:n or a comma list") from exc


def config_hash(cfg: dict) -> str:
    numeric = {k: v for k, v in cfg.items() if k not in _NON_NUMERIC_KEYS}
    blob = json.dumps(_jsonable(numeric), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("parameters")
    g.add_argument("--alpha", type=float)
    g.add_argument("--beta", type=float)
    g.add_argument("--gamma", type=float)
    g.add_argument("--ell", type=int)
    g.add_argument("--a", type=float)
    g.add_argument("--nmax", type=int)
    g.add_argument("--grid", help="lo:hi:n or comma list")
    g.add_argument("--tol", type=float)
    g.add_argument("--seed", type=int)
    g.add_argument("--threads", type=int, help="worker cap (all integrators here are single-threaded)")
    g.add_argument("--integrator", choices=["tensor", "qmc"])
    g.add_argument("--m", type=int, help="velocity dimension for the ball cases")
    g.add_argument("--N", type=int, help="particle count / sphere dimension")
    g.add_argument("--samples", type=int, help="Monte Carlo sample count")
    g.add_argument("--pairs", type=int, help="number of random point pairs")
    g.add_argument("--qmc-log2", dest="qmc_log2", type=int, help="log2 of the QMC point count")
    o = common.add_argument_group("output")
    o.add_argument("--out", help="output root (default ./reports)")
    o.add_argument("--deterministic-paths", dest="deterministic_paths", action="store_true", default=None)
    o.add_argument("--config", help="JSON file with the same keys; flags win")

    p = argparse.ArgumentParser(prog=TOOL_NAME, description="Markov-sequence identity checks")
    p.add_argument("--version", action="version", version=f"{TOOL_NAME} {_version()}")
    sub = p.add_subparsers(dest="command", required=True)
    for name, choices in (("verify", SUITES), ("table", TABLES), ("scan", SCANS)):
        sp = sub.add_parser(name, parents=[common])
        sp.add_argument("kind", choices=choices)
    return p


def _merge_config(args) -> dict:
    cfg = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise UsageError("config file must hold a JSON object")
        unknown = set(loaded) - set(CONFIG_KEYS)
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(loaded)
    for key in CONFIG_KEYS:
        v = getattr(args, key, None)
        if v is not None:
            cfg[key] = v
    if "tol" in cfg and not cfg["tol"] > 0:
        raise UsageError("tolerances must be positive")
    if "threads" in cfg and int(cfg["threads"]) < 1:
        raise UsageError("--threads must be at least 1")
    for key in ("nmax", "samples", "pairs"):
        if key in cfg and int(cfg[key]) < 0:
            raise UsageError(f"--{key} must be non-negative")
    return cfg


def _pair(cfg, default_sets):
    have_a, have_b = "alpha" in cfg, "beta" in cfg
    if have_a != have_b:
        raise UsageError("give --alpha and --beta together")
    if have_a:
        return [(float(cfg["alpha"]), float(cfg["beta"]))]
    return list(default_sets)


def _ells(cfg, default=range(4)):
    return [int(cfg["ell"])] if "ell" in cfg else list(default)


def _tol(cfg, default):
    return float(cfg.get("tol", default))


def _grid(cfg, default):
    return parse_grid(cfg["grid"]) if "grid" in cfg else np.asarray(default, dtype=float)


def _nonempty(grid):
    if grid.size == 0:
        raise UsageError("empty grid")
    return grid


# ---------------------------------------------------------------- verify suites


def _suite_gegenbauer(cfg):
    gammas = [float(cfg["gamma"])] if "gamma" in cfg else GAMMAS
    grid = _nonempty(_grid(cfg, verify.DEFAULT_GRID))
    return [
        verify.verify_gegenbauer(g, int(cfg.get("nmax", 20)), grid, grid, _tol(cfg, verify.ULTRASPHERICAL_TOL))
        for g in gammas
    ]


def _suite_gasper(cfg):
    grid = _nonempty(_grid(cfg, verify.DEFAULT_GRID))
    return [
        verify.verify_gasper_product(al, be, ell, int(cfg.get("nmax", 12)), grid, tolerance=_tol(cfg, verify.JACOBI_TOL))
        for al, be in _pair(cfg, JACOBI_SETS)
        for ell in _ells(cfg)
    ]


def _suite_koornwinder(cfg):
    t_grid = _nonempty(_grid(cfg, np.concatenate([verify.DEFAULT_GRID, [1.0]])))
    return [
        verify.verify_koornwinder(al, be, ell, int(cfg.get("nmax", 12)), t_grid, tolerance=_tol(cfg, verify.JACOBI_TOL))
        for al, be in _pair(cfg, JACOBI_SETS)
        for ell in _ells(cfg)
    ]


def _suite_laplace(cfg):
    betas = [float(cfg["beta"])] if "beta" in cfg else LAPLACE_BETAS
    x_grid = _grid(cfg, np.linspace(-0.95, 0.95, 39))
    return [
        verify.verify_laplace(b, int(cfg.get("nmax", 12)), _nonempty(x_grid), _tol(cfg, verify.ULTRASPHERICAL_TOL))
        for b in betas
    ]


def _suite_geometric(cfg):
    if "N" in cfg:
        m = int(cfg.get("m", 1))
        specs = [int(cfg["N"])] if m == 1 else [(m, int(cfg["N"]))]
    else:
        specs = [4, (3, 4)]
    a = float(cfg.get("a", 0.6))
    out = []
    for spec in specs:
        labels, funcs = verify.geometric_basis(spec, int(cfg.get("nmax", 3)))
        pairs = [(f, g) for f in funcs for g in funcs]
        names = [f"{x}|{y}" for x in labels for y in labels]
        out += verify.verify_geometric_pairs(
            spec, a, pairs, int(cfg.get("samples", 10**6)), int(cfg.get("seed", 0)), labels=names
        )
    return out


def _suite_biangle(cfg):
    al, be = _pair(cfg, [(2.0, 0.75)])[0]
    pairs = simplex.random_biangle_pairs(int(cfg.get("pairs", 5)), int(cfg.get("seed", 0)))
    if not pairs:
        raise UsageError("--pairs must be at least 1")
    indices = simplex.biangle_indices(int(cfg.get("nmax", 6)))
    tol = _tol(cfg, simplex.BIANGLE_TOLERANCE)
    y = pairs[0][1]
    reps = [simplex.verify_biangle_product(al, be, indices, pairs, tolerance=tol)]
    reps.append(simplex.biangle_symmetry_matrix(al, be, y, 4))
    reps += [simplex.biangle_preservation(al, be, y, d) for d in range(4)]
    return reps


def _suite_triangle(cfg):
    al = float(cfg.get("alpha", 4.0))
    be = float(cfg.get("beta", 1.0))
    ga = float(cfg.get("gamma", 0.5))
    integrator = cfg.get("integrator", "tensor")
    count = int(cfg.get("pairs", 5 if integrator == "tensor" else 2))
    pairs = simplex.random_triangle_pairs(count, int(cfg.get("seed", 0)))
    if not pairs:
        raise UsageError("--pairs must be at least 1")
    nmax = int(cfg.get("nmax", 3))
    indices = [simplex.TriangleIndex(n, k) for n in range(nmax + 1) for k in range(n + 1)]
    return [
        simplex.verify_triangle_product(
            al, be, ga, indices, pairs,
            integrator=integrator,
            log2_points=int(cfg.get("qmc_log2", 24)),
            seed=int(cfg.get("seed", 0)),
            tolerance=_tol(cfg, simplex.TRIANGLE_TOLERANCE),
        )
    ]


def _h1(x):
    return x**3 - 0.5 * x + 0.2


def _h2(x):
    return x**2 + 0.3 * x


def _suite_selfadjoint(cfg):
    a = float(cfg.get("a", 0.6))
    return [
        verify.verify_selfadjoint_symmetrized_form(al, be, ell, a, _h1, _h2, tolerance=_tol(cfg, 1e-9))
        for al, be in _pair(cfg, JACOBI_SETS)
        for ell in _ells(cfg)
    ]


_SUITE_FUNCS = {
    "gegenbauer": _suite_gegenbauer,
    "gasper": _suite_gasper,
    "koornwinder": _suite_koornwinder,
    "laplace": _suite_laplace,
    "geometric": _suite_geometric,
    "biangle": _suite_biangle,
    "triangle": _suite_triangle,
    "selfadjoint": _suite_selfadjoint,
}


# ---------------------------------------------------------------- tables and scans


def _spec_from(cfg) -> OperatorSpec:
    a = float(cfg.get("a", 0.6))
    if "gamma" in cfg:
        return OperatorSpec(OperatorKind.ULTRASPHERICAL_KA, a, gamma=float(cfg["gamma"]))
    if "m" in cfg or "N" in cfg:
        return OperatorSpec(OperatorKind.BALL_KA, a, m=int(cfg.get("m", 3)), N=int(cfg.get("N", 4)))
    al, be = _pair(cfg, [(2.0, 0.5)])[0]
    ell = int(cfg.get("ell", 0))
    kind = OperatorKind.GASPER_KA0 if ell == 0 else OperatorKind.GENERALIZED_KAL
    return OperatorSpec(kind, a, alpha=al, beta=be, ell=ell)


def _table_eigenvalues(cfg):
    spec = _spec_from(cfg)
    nmax = int(cfg.get("nmax", 20))
    formula = markov_sequence(spec, nmax, "Formula")
    diag = np.diag(operator_matrix(spec, nmax + 1).entries)
    tol = _tol(cfg, 1e-8)
    rows = [[n, formula.lambdas[n], diag[n], abs(formula.lambdas[n] - diag[n])] for n in range(nmax + 1)]
    err = float(max(r[3] for r in rows))
    summary = {"spec": spec.param_dict(), "label": formula.label, "max_abs_diff": err, "tolerance": tol, "pass": err <= tol}
    return ["n", "lambda_formula", "lambda_matrix", "abs_diff"], rows, summary


def _table_bounds(cfg):
    nmax = int(cfg.get("nmax", 200))
    a_list = [float(cfg["a"])] if "a" in cfg else BOUND_A
    rows = []
    if "gamma" in cfg or not ("alpha" in cfg or "beta" in cfg):
        for g in [float(cfg["gamma"])] if "gamma" in cfg else GAMMAS:
            for a in a_list:
                for r in bounds.ultraspherical_bound_table(g, a, nmax):
                    rows.append(["ultraspherical", g, "", "", 0, a, r.n, r.lhs, r.rhs, r.slack])
    if "gamma" not in cfg:
        for al, be in _pair(cfg, JACOBI_SETS):
            for ell in _ells(cfg):
                for a in a_list:
                    for r in bounds.jacobi_bound_table(al, be, ell, a, nmax):
                        rows.append(["jacobi", "", al, be, ell, a, r.n, r.lhs, r.rhs, r.slack])
    worst = float(min(r[-1] for r in rows))
    summary = {"min_slack": worst, "slack_floor": -bounds.SLACK_TOL, "rows": len(rows), "pass": worst >= -bounds.SLACK_TOL}
    header = ["family", "gamma", "alpha", "beta", "ell", "a", "n", "lhs", "rhs", "slack"]
    return header, rows, summary


def _table_trace(cfg):
    spec = _spec_from(cfg)
    nmax = int(cfg.get("nmax", 4096))
    thr = bounds.trace_class_diagnostic(spec, 1.0, nmax).threshold
    ps = [0.5 * thr, 0.75 * thr, thr, 1.25 * thr, 1.5 * thr, 2.0 * thr, math.inf]
    rows = []
    for p in ps:
        d = bounds.trace_class_diagnostic(spec, p, nmax)
        rows.append([p, thr, p == thr, d.partial_sums[-1], d.tail_ratio, d.looks_convergent])
    summary = {"spec": spec.param_dict(), "boundary_p": thr, "note": "tail ratios are heuristics on finite sums", "pass": True}
    return ["p", "boundary_p", "is_boundary", "partial_sum", "tail_ratio", "looks_convergent"], rows, summary


_TABLE_FUNCS = {"eigenvalues": _table_eigenvalues, "bounds": _table_bounds, "trace": _table_trace}


def _scan(kind, cfg):
    al, be = _pair(cfg, [(2.0, 0.5)])[0]
    ell = int(cfg.get("ell", 0 if kind == "kernel-positivity" else 1))
    if kind == "kernel-negativity-ell" and ell < 1:
        raise UsageError("the negativity scan needs ell >= 1")
    grid = _nonempty(_grid(cfg, np.linspace(-0.9, 0.9, 21)))
    eps = _tol(cfg, 1e-6)
    state, record = bounds.kernel_scan(al, be, ell, grid, eps)
    idx = np.indices(state.sums.shape).reshape(3, -1).T
    rows = [[grid[i], grid[j], grid[k], state.sums[i, j, k]] for i, j, k in idx]
    record["warnings"] = list(state.warnings)
    # the negativity search reports what it finds; only positivity is asserted
    record["pass"] = bool(record["minimum"] >= -eps) if kind == "kernel-positivity" else True
    return ["x", "y", "z", "kernel_sum"], rows, record


# ---------------------------------------------------------------- driver


def _out_dir(cfg, kind) -> Path:
    root = Path(cfg.get("out", "reports"))
    if cfg.get("deterministic_paths"):
        leaf = "cfg-" + config_hash({**cfg, "suite": kind})
    else:
        leaf = _dt.datetime.now(_dt.timezone.utc).strftime("%Y%m%dT%H%M%S%fZ")
    return root / kind / leaf


def _write_reports(out: Path, reports: list[VerificationReport]) -> list[str]:
    files = ["summary.csv"]
    write_csv(out / "summary.csv", CSV_COLUMNS, [r.csv_row() for r in reports])
    for i, r in enumerate(reports):
        if r.rows:
            name = f"detail_{i:03d}_{r.identity_id}.csv"
            write_csv(out / name, r.row_header, r.rows)
            files.append(name)
    return files


def _run(command, kind, cfg):
    """(passed, reports, None) for verify; (None, None, (header, rows, summary)) otherwise."""
    if command == "verify":
        reports = _SUITE_FUNCS[kind](cfg)
        return all(r.passed for r in reports), reports, None
    if command == "table":
        return None, None, _TABLE_FUNCS[kind](cfg)
    return None, None, _scan(kind, cfg)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) if exc.code in (0, None) else 2
    started = time.perf_counter()
    manifest = {
        "manifest_version": MANIFEST_VERSION,
        "tool": TOOL_NAME,
        "version": _version(),
        "command": args.command,
        "kind": args.kind,
    }
    out = None
    code = 0
    try:
        cfg = _merge_config(args)
        manifest["config"] = cfg
        manifest["config_hash"] = config_hash(cfg)
        out = _out_dir(cfg, args.kind)
        out.mkdir(parents=True, exist_ok=True)
        passed, reports, table = _run(args.command, args.kind, cfg)
        if reports is not None:
            manifest["files"] = _write_reports(out, reports)
            manifest["reports"] = [
                {"identity_id": r.identity_id, "params": r.params, "pass": r.passed, "max_abs_err": r.max_abs_err,
                 "tolerance": r.tolerance, "runtime_ms": r.runtime_ms, "notes": r.notes}
                for r in reports
            ]
            for r in reports:
                print(r.summary_line())
        else:
            header, rows, summary = table
            name = "table.csv" if args.command == "table" else "grid.csv"
            write_csv(out / name, header, rows)
            write_csv(out / "summary.csv", list(summary), [[_scalar(v) for v in summary.values()]])
            manifest["files"] = [name, "summary.csv"]
            manifest["summary"] = summary
            passed = bool(summary.get("pass", True))
            print(json.dumps(_jsonable(summary), sort_keys=True))
        manifest["all_pass"] = passed
        code = 0 if passed else 1
    except (UsageError, ParameterDomainError) as exc:
        manifest["error"] = f"invalid configuration: {exc}"
        code = 2
    except (NumericalError, ResourceError, SingularInputError) as exc:
        manifest["error"] = f"numerical failure: {exc}"
        code = 1
    manifest["exit_code"] = code
    manifest["wall_clock_s"] = time.perf_counter() - started
    if "error" in manifest:
        print(manifest["error"], file=sys.stderr)
    root = out if out is not None else Path(getattr(args, "out", None) or "reports") / args.kind / "failed"
    root.mkdir(parents=True, exist_ok=True)
    with open(root / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(_jsonable(manifest), fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"reports written to {root}")
    return code


def _scalar(v):
    if isinstance(v, (list, tuple, dict)):
        return json.dumps(_jsonable(v), sort_keys=True)
    return v


if __name__ == "__main__":
    sys.exit(main())
