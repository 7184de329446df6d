"""Command-line front end.

Exit codes: 0 pass/success, 1 property violation, 2 usage or config error,
3 solver non-convergence or violated solver hypothesis.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import axiom_checker as ac
from . import fixed_point as fp
from . import sequence_analysis as sa
from .config import RunConfig, dumps_payload, load_config, write_report
from .exceptions import ConfigError, GnMetricError, SolverError

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE, EXIT_SOLVER = 0, 1, 2, 3

SUITES = ("g", "k", "metric", "prop", "ball")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _require_plan(cfg: RunConfig):
    if cfg.plan is None:
        raise ConfigError("this command needs a 'plan' section", "plan")
    return cfg.plan


def _emit(cfg: RunConfig, args, payload: dict, command: str) -> None:
    out = args.out or cfg.output
    if out:
        if cfg.source is not None and not args.out:
            p = Path(out)
            out = p if p.is_absolute() else cfg.source.parent / p
        write_report(out, payload, command)
    if not args.quiet:
        print(dumps_payload(payload) if args.verbose or not out else _summary(payload))


def _summary(payload: dict) -> str:
    return f"{payload.get('command')}: {payload.get('status')}"


def cmd_check_axioms(cfg: RunConfig, which: str) -> tuple[int, dict]:
    plan = _require_plan(cfg)
    g = cfg.metric
    suites = SUITES if which == "all" else (which,)
    reports = []
    for s in suites:
        if s == "g":
            reports.append(ac.check_g_axioms(g, plan, cfg.g3_rule))
        elif s == "k":
            reports.append(ac.check_k_axioms(g, plan, cfg.g3_rule))
        elif s == "metric":
            reports.append(ac.check_metric_axioms(g, plan))
        elif s == "prop":
            reports.append(ac.check_inequality_prop(g, plan))
        elif s == "ball":
            reports.append(ac.check_ball_inclusion(g, plan, cfg.radii))
    passed = all(r.passed for r in reports)
    payload = {
        "command": "check-axioms",
        "which": which,
        "metric": g.describe(),
        "seed": plan.seed,
        "status": "pass" if passed else "violation",
        "reports": [r.to_dict() for r in reports],
    }
    return (EXIT_OK if passed else EXIT_VIOLATION), payload


def _map(cfg: RunConfig, name: str, required=True):
    m = cfg.maps.get(name)
    if m is None and required:
        raise ConfigError(f"map {name!r} is required", f"maps.{name}")
    return m


def _solver_param(cfg: RunConfig, key: str, default=None):
    if key in cfg.solver:
        return cfg.solver[key]
    if default is None:
        raise ConfigError(f"missing solver parameter {key!r}", f"solver.{key}")
    return default


def cmd_solve(cfg: RunConfig, theorem: int) -> tuple[int, dict]:
    g = cfg.metric
    f = _map(cfg, "f")
    eps = _solver_param(cfg, "eps")
    max_iter = _solver_param(cfg, "max_iter", 10_000)
    start = _solver_param(cfg, "x0", 0.0)
    seed = cfg.plan.seed if cfg.plan is not None else 0
    gmap = None
    if theorem == 1:
        gmap = _map(cfg, "g")
        conf = fp.SolverConfig(1, f, eps, gmap=gmap, q=_solver_param(cfg, "q"), max_iter=max_iter, seed=seed)
    else:
        conf = fp.SolverConfig(2, f, eps, k=_solver_param(cfg, "k"), max_iter=max_iter)
    payload = {"command": "solve", "theorem": theorem, "metric": g.describe(), "map_f": f.describe()}
    if gmap is not None:
        payload["map_g"] = gmap.describe()
    try:
        trace = conf.run(g, start)
    except SolverError as exc:
        payload.update(status=exc.code, message=str(exc))
        return EXIT_SOLVER, payload
    payload["trace"] = trace.to_dict()
    payload["status"] = trace.termination
    if not trace.certified:
        return EXIT_SOLVER, payload
    tol = 2 * eps * g.arity
    payload["verified"] = fp.verify_fixed_point(g, f, gmap, trace.u, tol)
    payload["verify_tol"] = tol
    code = EXIT_OK
    seeds = cfg.solver.get("seeds")
    if seeds:
        try:
            uniq = fp.uniqueness_probe(g, conf, seeds, cfg.solver.get("uniqueness_tol", 1e-6))
        except SolverError as exc:
            payload.update(status=exc.code, message=str(exc))
            return EXIT_SOLVER, payload
        payload["uniqueness"] = uniq.to_dict()
        if not all(t.certified for t in uniq.traces):
            return EXIT_SOLVER, payload
        if not uniq.unique:
            code = EXIT_VIOLATION
    return code, payload


def cmd_analyze(cfg: RunConfig, analysis: str) -> tuple[int, dict]:
    g = cfg.metric
    a = cfg.analysis
    if not cfg.sequences:
        raise ConfigError("at least one sequence is required", "sequences")
    payload = {"command": "analyze", "analysis": analysis, "metric": g.describe()}
    try:
        if analysis == "convergence":
            if "limit" not in a:
                raise ConfigError("candidate limit is required", "analysis.limit")
            if "tol" not in a:
                raise ConfigError("tolerance is required", "analysis.tol")
            rep = sa.convergence_report(g, cfg.sequences[0], a["limit"], a.get("tail_start", 0), a["tol"])
            ok = rep.converged and rep.cross_bound_ok and rep.dg_bound_ok
        elif analysis == "cauchy":
            rep = sa.cauchy_report(
                g, cfg.sequences[0], a.get("N", 0), a.get("exhaustive_cap", sa.DEFAULT_EXHAUSTIVE_CAP),
                seed=cfg.plan.seed if cfg.plan is not None else 0,
            )
            ok = rep.amplification_ok
            if "tol" in a:
                ok = ok and rep.two_index_sup < a["tol"]
        else:
            if "limits" not in a:
                raise ConfigError("limits are required", "analysis.limits")
            rep = sa.continuity_probe(g, cfg.sequences, a["limits"], a.get("tail_start", 0))
            ok = rep.holds
    except ConfigError:
        raise
    except GnMetricError as exc:
        raise ConfigError(str(exc), "analysis") from None
    payload["report"] = rep.to_dict()
    payload["status"] = "pass" if ok else "fail"
    return (EXIT_OK if ok else EXIT_VIOLATION), payload


def cmd_derive_metric(cfg: RunConfig) -> tuple[int, dict]:
    g = cfg.metric
    if not cfg.pairs:
        raise ConfigError("list the point pairs to evaluate", "pairs")
    rows = []
    for i, (x, y) in enumerate(cfg.pairs):
        try:
            rows.append({"x": x, "y": y, "d_G": g.derived(x, y)})
        except GnMetricError as exc:
            raise ConfigError(str(exc), f"pairs[{i}]") from None
    return EXIT_OK, {"command": "derive-metric", "metric": g.describe(), "status": "ok", "values": rows}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gnmetric", description="Generalized n-metric toolkit")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="YAML/JSON run configuration")
    common.add_argument("--out", default=None, help="report path (overrides config 'output')")
    common.add_argument("--seed", type=int, default=None, help="override the config seed")
    common.add_argument("-v", "--verbose", action="store_true", help="print the full payload")
    common.add_argument("-q", "--quiet", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("check-axioms", parents=[common], help="run axiom suites")
    p.add_argument("--which", choices=SUITES + ("all",), default="all")
    p = sub.add_parser("solve", parents=[common], help="run a fixed-point solver")
    p.add_argument("--theorem", type=int, choices=(1, 2), required=True)
    p = sub.add_parser("analyze", parents=[common], help="sequence diagnostics")
    p.add_argument("--analysis", choices=("convergence", "cauchy", "continuity"), required=True)
    sub.add_parser("derive-metric", parents=[common], help="print d_G for listed pairs")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, seed_override=args.seed)
        if args.command == "check-axioms":
            code, payload = cmd_check_axioms(cfg, args.which)
        elif args.command == "solve":
            code, payload = cmd_solve(cfg, args.theorem)
        elif args.command == "analyze":
            code, payload = cmd_analyze(cfg, args.analysis)
        else:
            code, payload = cmd_derive_metric(cfg)
    except GnMetricError as exc:
        print(f"gnmetric: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    _emit(cfg, args, payload, args.command)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
