"""Decision support for power system restoration: exact K-best
energising-path search over the transmission graph plus multi-attribute
ranking of the alternatives."""

from .grid import (
    Bus, Branch, Generator, Params, PowerNetwork, RestorationState,
    Scenario, ScenarioError, UnsolvableScenarioError, compute_islands,
    load_scenario, reactive_capability, scenario_to_document,
    transform_islands,
)
from .milp import (
    Constraint, MilpProblem, MilpSolution, Variable, make_problem,
    solve_lp, solve_milp,
)
from .pathsearch import (
    PathModel, ReactiveLimitWarning, Scheme, SearchTrace,
    UnreachableTargetError, add_exclusion_cut, add_naive_cut,
    build_path_model, iterate_schemes, radial_depth, single_target_path,
)
from .powerflow import (
    PFCase, PFResult, build_energized_case, check_voltage, newton_solve,
)
from .evaluation import (
    IndexVector, RankingResult, compute_indices, grey_coefficients,
    normalize, projections, rank, rank_rows, synthetic_projection,
)

__version__ = "0.1.0"
