"""Command-line entry point.

Exit codes::

    0  success
    1  invalid input (scenario, commodities, configuration) or I/O failure
    2  usage error
    3  recovered beam powers exceed P_max at some node
    4  solver diverged (non-finite iterate)
    5  a commodity has no route
    6  Armijo line search failed inside ADAL
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, replace
from pathlib import Path

from . import netmodel
from .adal import AdalConfig, ArmijoParams, solve_adal
from .errors import (BeamflowError, DivergenceError, LineSearchError, NoRouteError)
from .harness import compare_solvers, summarize
from .ospf import route_ospf
from .primal_dual import PrimalDualConfig, solve_pd
from .problem import (Commodity, build_problem, load_commodities, recover_powers,
                      write_power_report)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_DIVERGED = 4
EXIT_NO_ROUTE = 5
EXIT_LINE_SEARCH = 6

PAPER_ROWS = PAPER_COLS = 6
PAPER_SPACING_M = 40_000.0
PAPER_RATE = 9.0
PAPER_INNER_TOL = 1e-3
PAPER_VIOLATION_TOL = 1e-2

log = logging.getLogger("beamflow")


def paper_problem():
    """6x6 lattice, station at the centre, 1->36 and 6->31 at 9 bits/s/Hz."""
    sc = netmodel.grid_scenario(PAPER_ROWS, PAPER_COLS, spacing_m=PAPER_SPACING_M,
                                carrier_freq_hz=1e9, bandwidth_hz=5e6, p_max_watts=100.0)
    return build_problem(sc, [Commodity(1, 36, PAPER_RATE), Commodity(6, 31, PAPER_RATE)])


def _grid_args(p, required):
    p.add_argument("--rows", type=int, required=required)
    p.add_argument("--cols", type=int, required=required)
    p.add_argument("--spacing", type=float, default=netmodel.DEFAULT_SPACING_M, help="meters")
    p.add_argument("--jitter", type=float, default=0.0, help="uniform jitter amplitude, meters")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--p-max", type=float, default=netmodel.DEFAULT_P_MAX_W)
    p.add_argument("--carrier", type=float, default=netmodel.DEFAULT_CARRIER_HZ)
    p.add_argument("--bandwidth", type=float, default=netmodel.DEFAULT_BANDWIDTH_HZ)
    p.add_argument("--noise-temp", type=float, default=netmodel.DEFAULT_NOISE_TEMP_K)
    p.add_argument("--station", type=float, nargs=2, metavar=("X", "Y"))


def _solver_args(p):
    g = p.add_argument_group("primal-dual")
    g.add_argument("--alpha", type=float, default=PrimalDualConfig.alpha)
    g.add_argument("--log-every", type=int, default=1)
    g = p.add_argument_group("adal")
    g.add_argument("--rho", type=float, default=AdalConfig.rho)
    g.add_argument("--tau", type=float, default=None, help="default 0.9/d_max")
    g.add_argument("--inner-tol", type=float, default=None)
    g.add_argument("--inner-max-iters", type=int, default=AdalConfig.inner_max_iters)
    g.add_argument("--armijo-s", type=float, default=ArmijoParams.s)
    g.add_argument("--armijo-beta", type=float, default=ArmijoParams.beta)
    g.add_argument("--armijo-sigma", type=float, default=ArmijoParams.sigma)
    g.add_argument("--scaling", choices=["paper_diagonal", "full_diagonal", "unscaled"],
                   default="paper_diagonal")
    g.add_argument("--threads", type=int, default=None, help="overrides BEAMFLOW_THREADS")
    g = p.add_argument_group("common")
    g.add_argument("--max-iters", type=int, default=None)
    g.add_argument("--violation-tol", type=float, default=None)
    g.add_argument("--metric", choices=["distance", "hops"], default="distance",
                   help="OSPF edge metric")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="beamflow", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a grid scenario file")
    _grid_args(gen, required=True)
    gen.add_argument("--out", required=True)

    for name, helptext in (("solve", "run one solver"), ("compare", "run several solvers")):
        p = sub.add_parser(name, help=helptext)
        src = p.add_argument_group("scenario source (exactly one)")
        src.add_argument("--scenario", help="scenario JSON file")
        src.add_argument("--paper", action="store_true",
                         help="6x6 preset: R=9, P_max=100 W, 1 GHz, 5 MHz, eps=1e-3")
        _grid_args(src, required=False)
        p.add_argument("--commodities", help="commodity JSON file")
        if name == "solve":
            p.add_argument("--solver", choices=["pd", "adal", "ospf"], required=True)
        else:
            p.add_argument("--solvers", nargs="+", choices=["pd", "adal", "ospf"], required=True)
        p.add_argument("--out", required=True, help="output directory")
        _solver_args(p)
    return parser


def _load_problem(args, parser):
    sources = [bool(args.scenario), bool(args.paper), args.rows is not None or args.cols is not None]
    if sum(sources) != 1:
        parser.error("give exactly one of --scenario, --paper, or --rows/--cols")
    if args.paper:
        problem = paper_problem()
        if args.commodities:
            problem = build_problem(problem.scenario, load_commodities(args.commodities))
        return problem
    if not args.commodities:
        parser.error("--commodities is required unless --paper is given")
    if args.scenario:
        scenario = netmodel.load_scenario(args.scenario)
    else:
        if args.rows is None or args.cols is None:
            parser.error("--rows and --cols go together")
        scenario = _grid_from_args(args)
    return build_problem(scenario, load_commodities(args.commodities))


def _grid_from_args(args):
    return netmodel.grid_scenario(
        args.rows, args.cols, spacing_m=args.spacing, jitter_seed=args.seed,
        jitter_m=args.jitter, station=tuple(args.station) if args.station else None,
        carrier_freq_hz=args.carrier, bandwidth_hz=args.bandwidth,
        noise_temp_kelvin=args.noise_temp, p_max_watts=args.p_max,
    )


def _configs(args):
    pd = PrimalDualConfig(alpha=args.alpha, log_every=args.log_every)
    inner_tol = args.inner_tol if args.inner_tol is not None else (
        PAPER_INNER_TOL if args.paper else AdalConfig.inner_tol)
    adal = AdalConfig(
        rho=args.rho, tau=args.tau, inner_tol=inner_tol, inner_max_iters=args.inner_max_iters,
        armijo=ArmijoParams(args.armijo_s, args.armijo_beta, args.armijo_sigma),
        scaling=args.scaling, threads=args.threads,
    )
    common = {}
    if args.max_iters is not None:
        common["max_iters"] = args.max_iters
    if args.violation_tol is not None:
        common["violation_tol"] = args.violation_tol
    elif args.paper:
        common["violation_tol"] = PAPER_VIOLATION_TOL
    return {"pd": replace(pd, **common), "adal": replace(adal, **common),
            "ospf": {"metric": args.metric}}


def cmd_generate(args) -> int:
    scenario = _grid_from_args(args)
    out = Path(args.out)
    if out.parent != Path(""):
        out.parent.mkdir(parents=True, exist_ok=True)
    netmodel.save_scenario(scenario, out)
    print(f"nodes {scenario.n_nodes} arcs {len(scenario.edges)} -> {out}")
    return EXIT_OK


def cmd_solve(args, parser) -> int:
    problem = _load_problem(args, parser)
    configs = _configs(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    solver = args.solver
    if solver == "pd":
        x, trace = solve_pd(problem, configs["pd"])
    elif solver == "adal":
        x, trace = solve_adal(problem, configs["adal"])
    else:
        route = route_ospf(problem, **configs["ospf"])
        x, trace = route.x, None

    powers = recover_powers(problem, x)
    summary = summarize(problem, solver, x, trace)
    doc = {
        "summary": asdict(summary),
        "config": _jsonable(configs[solver]),
        "nodes": problem.n_nodes,
        "arcs": problem.n_arcs,
    }
    if solver == "ospf":
        doc["paths"] = [list(p) for p in route.paths]
    (out / "summary.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    write_power_report(problem, powers, out / "power_report.csv")
    if trace is not None:
        trace.write_csv(out / "trace.csv")
        if trace.armijo:
            trace.write_armijo_csv(out / "armijo.csv")

    print(f"{solver}: status={summary.status} objective={summary.final_objective:.6g} "
          f"violation={summary.final_violation:.3g} intra_power={summary.total_intra_power:.6g} W "
          f"R_C={summary.station_rate_bps / 1e6:.4g} Mbps")
    if not powers.all_feasible:
        print(f"P_max exceeded at nodes {summary.infeasible_nodes}", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_compare(args, parser) -> int:
    solvers = list(dict.fromkeys(args.solvers))
    if len(solvers) < 2:
        parser.error("compare needs at least two distinct solvers")
    problem = _load_problem(args, parser)
    configs = _configs(args)
    report = compare_solvers(problem, {s: configs[s] for s in solvers}, out_dir=args.out)
    for name, s in report.solvers.items():
        print(f"{name}: objective={s.final_objective:.6g} violation={s.final_violation:.3g} "
              f"intra_power={s.total_intra_power:.6g} W station={s.station_received_power:.6g} "
              f"to_1e-2={s.iterations_to['0.01']}")
    return EXIT_OK


def _jsonable(cfg):
    return asdict(cfg) if hasattr(cfg, "__dataclass_fields__") else dict(cfg)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "generate":
            return cmd_generate(args)
        if args.command == "solve":
            return cmd_solve(args, parser)
        return cmd_compare(args, parser)
    except NoRouteError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_ROUTE
    except LineSearchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_LINE_SEARCH
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (BeamflowError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc.filename or ''}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
