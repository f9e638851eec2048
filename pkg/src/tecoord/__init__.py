"""Market-based coordination of distributed energy resources.

One scenario model, four coordination styles: competitive market
clearing, price-leader optimization, pricing-function (incentive)
design, and direct mechanisms over reported types — each paired with
independent verification of its equilibrium or mechanism guarantees.
"""

__version__ = "0.1.0"

from ._backend import BACKEND, NUMBA_ENABLED
from .errors import CoordinationError
from .model import (
    AgentSpec,
    CoordinatorSpec,
    InformationStructure,
    MarketOutcome,
    Scenario,
    TypePrior,
    build_decision_graph,
    build_type_graph,
    demand,
    load_scenario,
    save_scenario,
    supply,
    utility_value,
)
from .welfare import (
    Constant,
    ConvergenceTrace,
    Diminishing,
    SolverConfig,
    clear_auction,
    run_primal_dual,
    solve_social_welfare,
    verify_competitive_equilibrium,
)
from .games import (
    FiniteGame,
    GameSolution,
    SupplyBidProfile,
    bayesian_expected_payoff,
    clear_supply_function,
    epsilon_of_profile,
    is_dominant_profile,
    solve_nash_finite,
    supply_function_nash,
)
from .stackelberg import (
    IncentivePricing,
    StackelbergSolution,
    construct_linear_incentive,
    solve_price_stackelberg,
    solve_team_problem,
    verify_incentive_controllable,
)
from .mechanisms import (
    DirectMechanism,
    MechanismReport,
    SSVCGFamily,
    check_budget_balance,
    check_dictatorial,
    check_ic_bayesian,
    check_ic_dominant,
    check_interim_ir,
    dagva_outcome,
    ssvcg_solve,
    vcg_outcome,
)
from .corpus import generate_corpus
