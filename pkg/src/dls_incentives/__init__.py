"""Incentive design for direct load scheduling.

Recruitment utilities for deferrable and thermostatic loads, the
single-crossing incentive menu as a concave QP, customer choice under private
risk types, a random-search baseline and welfare accounting.
"""

__version__ = "0.1.0"

from .choice import (calibrate_types, choice_bounds, choice_probabilities, decide_mode, decide_modes,
                     monte_carlo_choice)
from .exceptions import (DLSError, InfeasibleError, InputError, ParseError, SizeError,
                         UnsupportedPriorError)
from .learning import LearningRun, evaluate_candidate, propose_candidate, random_search
from .model import (Cluster, DeferrablePulse, IncentiveMenu, RiskModel, Task, TCLParams, TimeGrid,
                    UniformPrior, validate_diminishing, validate_single_crossing)
from .optimizer import assemble_qp, brute_force_menu, expected_profit, optimize_menu, solve_menu
from .pricing import PriceSeries, expand_prices, synth_prices
from .simulation import simulate_day, welfare_report
from .utility import deferrable_utility, tcl_preheat_cost, tcl_utility, utility_table

__all__ = [
    "calibrate_types", "choice_bounds", "choice_probabilities", "decide_mode", "decide_modes",
    "monte_carlo_choice", "DLSError", "InfeasibleError", "InputError", "ParseError", "SizeError",
    "UnsupportedPriorError", "LearningRun", "evaluate_candidate", "propose_candidate", "random_search",
    "Cluster", "DeferrablePulse", "IncentiveMenu", "RiskModel", "Task", "TCLParams", "TimeGrid",
    "UniformPrior", "validate_diminishing", "validate_single_crossing", "assemble_qp", "brute_force_menu",
    "expected_profit", "optimize_menu", "solve_menu", "PriceSeries", "expand_prices", "synth_prices",
    "simulate_day", "welfare_report", "deferrable_utility", "tcl_preheat_cost", "tcl_utility",
    "utility_table",
]
