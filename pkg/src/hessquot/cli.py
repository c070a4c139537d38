"""Command-line front end.

Exit codes: 0 all checks passed, 1 a check failed, 2 usage or config error,
3 solver failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from .config import CONFIG_SCHEMA, RunConfig, load_config
from .errors import ConfigError, ExpressionDomainError, NotAdmissibleError, SolverError
from .estimates import CATALOG, audit_solution, bounds_for, convergence_study, solution_table
from .inequalities import run_suite
from .solver import BoundaryMode, SolverConfig, solve_classical_neumann, solve_homotopy

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_SOLVER = 0, 1, 2, 3
SEED_ENV = "HESSQUOT_SEED"
ORDER_TARGET = 1.8
POLYNOMIAL_TOL = 1e-9


class _UsageError(Exception):
    pass


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    return obj


def _write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(payload), indent=2) + "\n", encoding="utf-8")


def _seed(default: int) -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw == "":
        return default
    try:
        return int(raw)
    except ValueError:
        raise _UsageError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _parse_ns(text: str) -> tuple:
    try:
        if ".." in text:
            lo, hi = (int(p) for p in text.split(".."))
            ns = tuple(range(lo, hi + 1))
        else:
            ns = tuple(int(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a range like 3..6 or a list like 3,5; got {text!r}") from None
    if not ns or any(n < 1 for n in ns):
        raise argparse.ArgumentTypeError(f"empty or invalid dimension list {text!r}")
    return ns


# --- subcommands ----------------------------------------------------------


def cmd_verify(args) -> int:
    seed = _seed(args.seed)
    out = Path(args.out)
    t0 = time.perf_counter()
    reports = run_suite(args.n, args.samples, seed, args.threads, args.delta, args.eps)
    elapsed = time.perf_counter() - t0
    failed = [r for r in reports if not r.passed]
    for r in failed:
        print(f"FAIL {r.name} {r.params} failures={r.failure_count} worst_margin={r.worst_margin:.3e}")
    passed = not failed
    _write_json(
        out / "report.json",
        {
            "command": "verify-inequalities",
            "passed": passed,
            "ns": list(args.n),
            "samples": args.samples,
            "seed": seed,
            "threads": args.threads,
            "seconds": elapsed,
            "reports": [r.to_dict() for r in reports],
        },
    )
    print(f"{len(reports) - len(failed)}/{len(reports)} checks passed in {elapsed:.1f} s")
    return EXIT_OK if passed else EXIT_CHECK


def _data(cfg: RunConfig, grid):
    fx, px, ex = cfg.expressions()
    f = np.broadcast_to(fx(grid.x), (grid.size,)).copy()
    phi = np.broadcast_to(px(grid.x), (grid.size,)).copy()
    if not np.all(np.isfinite(f)) or not np.all(np.isfinite(phi)):
        raise ConfigError("f or phi is not finite on the grid")
    if not np.all(f > 0):
        raise ConfigError("f must be positive at every node")
    exact = None if ex is None else np.broadcast_to(ex(grid.x), (grid.size,))
    return f, phi, exact


def _write_solution_csv(path: Path, table: dict) -> None:
    x, lam = table["x"], table["eigenvalues"]
    n = x.shape[1]
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["node", *(f"x{a + 1}" for a in range(n)), "u", "grad_norm", *(f"lambda{a + 1}" for a in range(n)), "residual", "boundary"])
        cols = np.column_stack([x, table["u"], table["grad_norm"], lam, table["residual"]]).tolist()
        for i, row in enumerate(cols):
            w.writerow([i, *map(repr, row), int(table["boundary"][i])])


def _solver_failure(out: Path, command: str, cfg: RunConfig, exc: Exception) -> int:
    diag = {"command": command, "passed": False, "error": type(exc).__name__, "message": str(exc), "config": cfg.to_dict()}
    for attr in ("last_t", "margin", "node"):
        if getattr(exc, attr, None) is not None:
            diag[attr] = getattr(exc, attr)
    rep = getattr(exc, "report", None)
    if rep is not None:
        diag["partial_report"] = {k: v for k, v in rep.to_dict().items() if k != "margin_history"}
    _write_json(out / "report.json", diag)
    print(f"solver failure: {exc}", file=sys.stderr)
    return EXIT_SOLVER


def cmd_solve(args) -> int:
    cfg = load_config(args.config)
    if cfg.mode != "robin":
        raise _UsageError("`solve` runs the Robin problem; use `classical` for mode 'classical'")
    out = Path(args.out or cfg.output_dir)
    grid = cfg.build_grid()
    f, phi, exact = _data(cfg, grid)
    pair = (cfg.k, cfg.l, cfg.n)
    mode = BoundaryMode.robin()
    t0 = time.perf_counter()
    try:
        rep = solve_homotopy(grid, f, phi, mode, pair, cfg.solver_config())
    except (SolverError, NotAdmissibleError) as exc:
        return _solver_failure(out, "solve", cfg, exc)
    elapsed = time.perf_counter() - t0
    bounds = bounds_for(rep, f, phi, pair)
    audit = audit_solution(rep, bounds, pair)
    error = None if exact is None else float(np.max(np.abs(rep.solution.values - exact)))
    passed = rep.converged and audit.passed
    payload = {
        "command": "solve",
        "passed": passed,
        "seconds": elapsed,
        "seed": _seed(cfg.seed),
        "config": cfg.to_dict(),
        "solve": rep.to_dict(),
        "bounds": bounds.to_dict(),
        "audit": audit.to_dict(),
        "max_error": error,
    }
    _write_json(out / "report.json", payload)
    _write_solution_csv(out / "solution.csv", solution_table(rep, f, phi, mode, pair))
    msg = f"converged in {rep.total_iterations} Newton iterations, residual {rep.final_residual:.2e}, audit {'passed' if audit.passed else 'FAILED'}"
    if error is not None:
        msg += f", max error {error:.3e}"
    print(msg)
    return EXIT_OK if passed else EXIT_CHECK


def cmd_classical(args) -> int:
    cfg = load_config(args.config)
    if cfg.mode != "classical":
        raise _UsageError("`classical` needs mode 'classical' in the config")
    out = Path(args.out or cfg.output_dir)
    grid = cfg.build_grid()
    f, phi, _ = _data(cfg, grid)
    pair = (cfg.k, cfg.l, cfg.n)
    t0 = time.perf_counter()
    try:
        rep = solve_classical_neumann(grid, f, phi, pair, cfg.solver_config())
    except (SolverError, NotAdmissibleError) as exc:
        return _solver_failure(out, "classical", cfg, exc)
    elapsed = time.perf_counter() - t0
    payload = {"command": "classical", "passed": rep.converged, "seconds": elapsed, "config": cfg.to_dict(), "solve": rep.to_dict()}
    _write_json(out / "report.json", payload)
    eps = rep.extra["epsilons"][-1]
    _write_solution_csv(out / "solution.csv", solution_table(rep, f, phi, BoundaryMode.epsilon(eps), pair))
    for e, c in zip(rep.extra["epsilons"], rep.extra["c_by_epsilon"]):
        print(f"eps = {e:<8g} c_eps = {c:.8f}")
    print(f"c = {rep.c_estimate:.6f}")
    return EXIT_OK if rep.converged else EXIT_CHECK


def cmd_converge(args) -> int:
    if args.list:
        for name, case in CATALOG.items():
            print(f"{name}: {case.domain.kind.value} (k, l) = ({case.k}, {case.l})")
        return EXIT_OK
    if args.case not in CATALOG:
        raise _UsageError(f"unknown case {args.case!r}; known: {', '.join(CATALOG)}")
    out = Path(args.out)
    cfg = SolverConfig.from_dict(json.loads(args.solver)) if args.solver else None
    try:
        study = convergence_study(args.case, args.refinements, cfg)
    except (SolverError, NotAdmissibleError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        _write_json(out / "report.json", {"command": "converge", "case": args.case, "passed": False, "error": type(exc).__name__, "message": str(exc)})
        return EXIT_SOLVER
    if study["polynomial"]:
        passed = study["max_error"] <= POLYNOMIAL_TOL
    else:
        passed = study["min_order"] is not None and study["min_order"] >= ORDER_TARGET
    study["passed"] = passed
    _write_json(out / "report.json", {"command": "converge", **study})
    with (out / "convergence.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["level", "shape", "h", "error", "order", "iterations"])
        for i, r in enumerate(study["rows"]):
            w.writerow([i, "x".join(map(str, r["shape"])), repr(float(r["h"])), repr(float(r["error"])), "" if r["order"] is None else repr(float(r["order"])), r["iterations"]])
    for r in study["rows"]:
        order = "n/a" if r["order"] is None else f"{r['order']:.3f}"
        print(f"{'x'.join(map(str, r['shape'])):>12}  error {r['error']:.3e}  order {order}")
    return EXIT_OK if passed else EXIT_CHECK


def cmd_report(args) -> int:
    sources = [Path(p) for p in (args.inputs or [args.out])]
    artifacts = {}
    verdicts = []
    for src in sources:
        files = sorted(src.glob("*.json")) + sorted(src.glob("*.csv")) if src.is_dir() else [src]
        for path in files:
            if path.name == "bundle.json" or not path.is_file():
                continue
            key = str(path)
            if path.suffix == ".json":
                data = json.loads(path.read_text(encoding="utf-8"))
                artifacts[key] = {"kind": "json", "content": data}
                if isinstance(data, dict) and "passed" in data:
                    verdicts.append(bool(data["passed"]))
            elif path.suffix == ".csv":
                with path.open(newline="", encoding="utf-8") as fh:
                    rows = list(csv.reader(fh))
                artifacts[key] = {"kind": "csv", "header": rows[0] if rows else [], "rows": rows[1:]}
    if not artifacts:
        raise _UsageError(f"no JSON/CSV artifacts found in {', '.join(map(str, sources))}")
    passed = all(verdicts)
    out = Path(args.out)
    _write_json(out / "bundle.json", {"passed": passed, "reports": len(verdicts), "artifacts": artifacts})
    print(f"bundled {len(artifacts)} artifacts into {out / 'bundle.json'}; {sum(verdicts)}/{len(verdicts)} reports passed")
    return EXIT_OK if passed else EXIT_CHECK


def cmd_schema(args) -> int:
    print(json.dumps(CONFIG_SCHEMA, indent=2))
    return EXIT_OK


# --- parser ----------------------------------------------------------------


def _defaults_epilog() -> str:
    lines = ["solver defaults (override in the config's \"solver\" object):"]
    lines += [f"  {k} = {v}" for k, v in SolverConfig().to_dict().items()]
    lines.append(f"environment: {SEED_ENV} overrides the seed.")
    lines.append("exit codes: 0 success, 1 check failure, 2 usage error, 3 solver failure.")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    p = argparse.ArgumentParser(
        prog="hessquot",
        description="Hessian quotient equations with Robin and Neumann boundary conditions.",
        epilog=_defaults_epilog(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify-inequalities", help="sample the symmetric-function inequality suite", formatter_class=fmt)
    v.add_argument("--n", type=_parse_ns, default=(3, 4, 5, 6), help="dimensions, as a range 3..6 or a list 3,5")
    v.add_argument("--samples", type=int, default=10_000, help="samples per check")
    v.add_argument("--seed", type=int, default=7, help="base seed")
    v.add_argument("--delta", type=float, default=0.1, help="delta of the ratio-bounded check")
    v.add_argument("--eps", type=float, default=0.1, help="epsilon of the ratio-bounded check")
    v.add_argument("--threads", type=int, default=os.cpu_count() or 1, help="worker threads")
    v.add_argument("--out", default="hessquot-out", help="output directory")
    v.set_defaults(func=cmd_verify)

    for name, func, text in (
        ("solve", cmd_solve, "homotopy solve of the Robin problem plus audit"),
        ("classical", cmd_classical, "vanishing-epsilon sweep for the Neumann constant"),
    ):
        s = sub.add_parser(name, help=text, epilog=_defaults_epilog(), formatter_class=argparse.RawDescriptionHelpFormatter)
        s.add_argument("--config", required=True, help="JSON run configuration (see `hessquot schema`)")
        s.add_argument("--out", default=None, help="output directory (default: the config's output_dir)")
        s.add_argument("--threads", type=int, default=os.cpu_count() or 1, help="accepted for uniformity; assembly is vectorised")
        s.set_defaults(func=func)

    c = sub.add_parser("converge", help="refinement study on a manufactured solution", formatter_class=fmt)
    c.add_argument("--case", default="quotient_disk_exp", help="catalog case id")
    c.add_argument("--refinements", type=int, default=None, help="grid levels (None uses the case's own)")
    c.add_argument("--solver", default=None, help="JSON object of solver overrides")
    c.add_argument("--list", action="store_true", help="list catalog cases and exit")
    c.add_argument("--out", default="hessquot-out", help="output directory")
    c.add_argument("--threads", type=int, default=os.cpu_count() or 1, help="accepted for uniformity")
    c.set_defaults(func=cmd_converge)

    r = sub.add_parser("report", help="bundle JSON/CSV artifacts into bundle.json", formatter_class=fmt)
    r.add_argument("inputs", nargs="*", help="artifact files or directories (default: --out)")
    r.add_argument("--out", default="hessquot-out", help="directory receiving bundle.json")
    r.set_defaults(func=cmd_report)

    sc = sub.add_parser("schema", help="print the JSON schema of run configurations")
    sc.set_defaults(func=cmd_schema)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "threads", 1) is not None and getattr(args, "threads", 1) < 1:
        print("hessquot: --threads must be at least 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (_UsageError, ConfigError, ExpressionDomainError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"hessquot: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"hessquot: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
