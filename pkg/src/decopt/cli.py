"""Command-line front end: run, sweep, verify, graph-info.

Exit codes: 0 on success, 1 for any configuration problem (bad flags, bad
config file, missing dataset), 2 when a verification check fails. Usage
errors from the argument parser are mapped to exit code 1 so that code 2
unambiguously means "the mathematics disagreed".
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .baselines import BaselineDivergence, sweep_step
from .dsadmm import DsAdmmParams
from .experiment import (
    ConfigError,
    _run_algorithm,
    build_graph,
    build_problem,
    config_for_sweep,
    load_config,
    run_experiment,
)
from .graphs import metropolis_weights, spectral_gap
from .oracle import verification_report
from .problems import reference_solution
from .prox import ProxError

__all__ = ["main", "build_parser"]


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # exit 1, not argparse's default 2
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


# flags shared by run/sweep/verify; dest names double as config keys
_OVERRIDE_FLAGS = (
    ("--algorithm", {"help": "dsadmm | pgextra | nids"}),
    ("--graph", {"help": "erdos | ring | complete"}),
    ("--p", {"help": "edge probability for erdos graphs"}),
    ("--beta", {"help": "agent-protocol penalty parameter"}),
    ("--r", {"help": "agent-protocol relaxation parameter"}),
    ("--tau", {"help": "agent-protocol proximal parameter"}),
    ("--seed", {"help": "partition / inner-solver seed"}),
    ("--max-iters", {"help": "iteration cap"}),
    ("--tol", {"help": "stopping tolerance"}),
    ("--output", {"help": "trajectory CSV path"}),
)


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("config", nargs="?", default=None, help="key = value config file")
    for flag, kwargs in _OVERRIDE_FLAGS:
        sub.add_argument(flag, default=None, **kwargs)
    sub.add_argument(
        "--verify",
        action="store_const",
        const="true",
        default=None,
        help="replay against the matrix-form recursion and report",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="decopt", description=__doc__.splitlines()[0])
    subs = parser.add_subparsers(dest="command", required=True)

    run_p = subs.add_parser("run", help="run one experiment, write CSV + summary")
    _add_common(run_p)

    sweep_p = subs.add_parser("sweep", help="tune the step parameter on the log grid")
    _add_common(sweep_p)
    sweep_p.add_argument(
        "--target", type=float, default=1e-6, help="suboptimality the sweep scores against"
    )

    verify_p = subs.add_parser("verify", help="full trajectory verification report")
    _add_common(verify_p)

    info_p = subs.add_parser("graph-info", help="describe a graph and its mixing matrix")
    info_p.add_argument("--graph", default=None, help="erdos | ring | complete")
    info_p.add_argument("--p", default=None, help="edge probability for erdos graphs")
    info_p.add_argument("--seed", default=None, help="graph seed")
    info_p.add_argument("--n-agents", default=None, help="vertex count")
    return parser


def _overrides(args: argparse.Namespace) -> dict[str, str]:
    out = {}
    for flag, _ in _OVERRIDE_FLAGS:
        name = flag.lstrip("-").replace("-", "_")
        value = getattr(args, name, None)
        if value is not None:
            out[name] = value
    if getattr(args, "verify", None) is not None:
        out["verify"] = args.verify
    return out


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = load_config(args.config, _overrides(args))
    summary = run_experiment(cfg)
    for line in summary.lines():
        print(line)
    return 0 if summary.passed else 2


def _cmd_sweep(args: argparse.Namespace) -> int:
    cfg = load_config(args.config, _overrides(args))
    problem = build_problem(cfg)
    mix = metropolis_weights(build_graph(cfg))
    _, f_star = reference_solution(problem, cache_dir=cfg.cache_dir or None)

    def runner(value: float, max_iters: int, target: float):
        trial = replace(config_for_sweep(cfg, value), max_iters=max_iters, tol=target)
        return _run_algorithm(trial, problem, mix, f_star)

    try:
        result = sweep_step(runner, target=args.target, max_iters=cfg.max_iters)
    except BaselineDivergence as exc:
        print(f"sweep failed: {exc}", file=sys.stderr)
        return 1
    print(result.summary())
    return 0


def _cmd_verify(args: argparse.Namespace) -> int:
    cfg = load_config(args.config, _overrides(args))
    if cfg.algorithm != "dsadmm":
        raise ConfigError("verify: requires algorithm = dsadmm")
    problem = build_problem(cfg)
    mix = metropolis_weights(build_graph(cfg))
    params = DsAdmmParams(beta=cfg.beta, r=cfg.r, tau=cfg.tau)
    report = verification_report(problem, mix, params, iters=min(200, cfg.max_iters))
    print(report.text())
    return 0 if report.passed else 2


def _cmd_graph_info(args: argparse.Namespace) -> int:
    raw = {}
    if args.graph is not None:
        raw["graph"] = args.graph
    if args.p is not None:
        raw["p"] = args.p
    if args.seed is not None:
        raw["graph_seed"] = args.seed
    if args.n_agents is not None:
        raw["n_agents"] = args.n_agents
    cfg = load_config(None, raw)
    graph = build_graph(cfg)
    mix = metropolis_weights(graph)
    degrees = [graph.degree(i) for i in range(graph.n)]
    print(f"graph = {cfg.graph}")
    print(f"n = {graph.n}")
    print(f"edges = {graph.n_edges}")
    print(f"degree_min = {min(degrees)}")
    print(f"degree_max = {max(degrees)}")
    print(f"spectral_gap = {spectral_gap(mix)!r}")
    return 0


_COMMANDS = {
    "run": _cmd_run,
    "sweep": _cmd_sweep,
    "verify": _cmd_verify,
    "graph-info": _cmd_graph_info,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"decopt: config error:\n{exc}", file=sys.stderr)
        return 1
    except (BaselineDivergence, ProxError) as exc:
        print(f"decopt: run failed: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"decopt: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
