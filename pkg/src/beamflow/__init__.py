"""Distributed multi-beam power allocation via convex multicommodity flow."""

from .adal import AdalConfig, ArmijoParams, solve_adal
from .errors import (BeamflowError, CommodityError, DivergenceError, LineSearchError,
                     NoRouteError, ScenarioError)
from .harness import compare_solvers, oracle_solve_small
from .netmodel import NetworkScenario, Node, grid_scenario, load_scenario, save_scenario
from .ospf import route_ospf
from .primal_dual import PrimalDualConfig, solve_pd
from .problem import Commodity, build_problem, objective, recover_powers

__all__ = [
    "AdalConfig", "ArmijoParams", "BeamflowError", "Commodity", "CommodityError",
    "DivergenceError", "LineSearchError", "NetworkScenario", "NoRouteError", "Node",
    "PrimalDualConfig", "ScenarioError", "build_problem", "compare_solvers", "grid_scenario",
    "load_scenario", "objective", "oracle_solve_small", "recover_powers", "route_ospf",
    "save_scenario", "solve_adal", "solve_pd",
]
__version__ = "0.1.0"
