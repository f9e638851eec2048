"""Competitive equilibrium: welfare optimum, auction clearing, primal-dual.

Because agent payoffs are quasi-linear in the uniform price, the
coordinator's bilevel price-setting problem collapses to the social
welfare optimum, whose balance multiplier is the market-clearing price.
Both the one-shot auction (intersect aggregate demand with supply) and
the iterative subgradient price update recover the same equilibrium.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import Infeasible
from .model import MarketOutcome, Scenario


@dataclass(frozen=True)
class Diminishing:
    """Step rule gamma(k) = gamma0 / k."""
    gamma0: float = 0.5

    def __post_init__(self):
        if not self.gamma0 > 0.0:
            raise ValueError("gamma0 must be > 0")


@dataclass(frozen=True)
class Constant:
    """Step rule gamma(k) = gamma0."""
    gamma0: float

    def __post_init__(self):
        if not self.gamma0 > 0.0:
            raise ValueError("gamma0 must be > 0")


@dataclass(frozen=True)
class SolverConfig:
    """Tolerances and iteration budget for the clearing solvers."""

    price_tolerance: float = 1e-8
    balance_tolerance: float = 1e-6
    max_iterations: int = 100_000
    step_rule: object = field(default_factory=Diminishing)
    initial_price: float = 0.0

    def __post_init__(self):
        if not (self.price_tolerance > 0.0 and self.balance_tolerance > 0.0):
            raise ValueError("tolerances must be > 0")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not isinstance(self.step_rule, (Diminishing, Constant)):
            raise ValueError("step_rule must be Diminishing or Constant")


@dataclass(frozen=True)
class ConvergenceTrace:
    """Primal-dual iteration log.

    ``iterations`` has one row (k, price, total_demand, supply,
    imbalance) per price update, k starting at 1. When ``converged`` the
    last imbalance is within the balance tolerance.
    """

    iterations: np.ndarray
    converged: bool
    final: MarketOutcome


@dataclass(frozen=True)
class EquilibriumReport:
    """Per-condition verdicts for the competitive-equilibrium definition."""

    consumers_optimal: bool
    supplier_optimal: bool
    balanced: bool

    @property
    def ok(self) -> bool:
        return self.consumers_optimal and self.supplier_optimal and self.balanced


def _check_feasible(scenario: Scenario) -> None:
    _, _, a_lo, a_hi = scenario.arrays()
    coord = scenario.coordinator
    if np.sum(a_lo) > coord.y_max or np.sum(a_hi) < coord.y_min:
        raise Infeasible(
            "allocation boxes cannot balance the supply range "
            f"[{coord.y_min}, {coord.y_max}]")


def _bracket(scenario: Scenario):
    # Sign change is guaranteed: at lo every demand sits at a_max and supply
    # at y_min, at hi every demand sits at a_min and supply covers sum(a_min).
    alpha, beta, _, a_hi = scenario.arrays()
    coord = scenario.coordinator
    lo = min(coord.c1, float(np.min(alpha - beta * a_hi))) - 1.0
    hi = max(coord.c1, float(np.max(alpha))) + coord.c2 * float(np.sum(a_hi)) + 1.0
    return lo, hi


def market_clearing_price(scenario: Scenario, config: SolverConfig | None = None):
    """Uniform price balancing aggregate demand and supply, by bisection.

    Returns (price, bisection iterations). Excess demand is nonincreasing
    in the price, so the bracket from `_bracket` pins the root to within
    a width that also meets the balance tolerance.
    """
    config = config or SolverConfig()
    _check_feasible(scenario)
    alpha, beta, a_lo, a_hi = scenario.arrays()
    coord = scenario.coordinator
    lo, hi = _bracket(scenario)
    # |excess demand| <= slope * bracket width; tighten the width so the
    # final imbalance is inside balance_tolerance as well.
    slope = float(np.sum(1.0 / beta)) + (1.0 / coord.c2 if coord.c2 > 0 else 0.0)
    width = min(config.price_tolerance, config.balance_tolerance / max(slope, 1.0))
    price, iters = _kernels.bisect_clearing_price(
        alpha, beta, a_lo, a_hi, coord.c1, coord.c2, coord.y_min, coord.y_max,
        lo, hi, width, 200)
    return float(price), int(iters)


def solve_social_welfare(scenario: Scenario, config: SolverConfig | None = None):
    """Maximize total utility minus supply cost subject to balance and boxes.

    Returns (allocations, supply, multiplier): the welfare-optimal
    allocation, the supplied energy, and the balance-constraint
    multiplier, which doubles as the competitive price.
    """
    config = config or SolverConfig()
    price, _ = market_clearing_price(scenario, config)
    alpha, beta, a_lo, a_hi = scenario.arrays()
    coord = scenario.coordinator
    alloc = np.asarray(_kernels.demand_profile(price, alpha, beta, a_lo, a_hi))
    if coord.c2 > 0.0:
        y = float(_kernels.supply_amount(price, coord.c1, coord.c2,
                                         coord.y_min, coord.y_max))
    else:
        # linear cost: supply is a step correspondence at c1; pick the
        # balancing point inside it
        y = float(min(max(np.sum(alloc), coord.y_min), coord.y_max))
    return alloc, y, price


def clear_auction(scenario: Scenario, config: SolverConfig | None = None) -> MarketOutcome:
    """One-shot market clearing from closed-form demand/supply curves.

    Payments are -price * allocation: consumers pay the coordinator.
    """
    alloc, y, price = solve_social_welfare(scenario, config)
    return MarketOutcome(allocations=alloc, supply=y, price=price,
                         payments=-price * alloc)


def run_primal_dual(scenario: Scenario, config: SolverConfig | None = None) -> ConvergenceTrace:
    """Iterative price discovery by subgradient steps on the imbalance.

    Agents respond to the broadcast price with closed-form demands, the
    coordinator with its supply curve, and the price moves by
    ``gamma(k) * (total demand - supply)``. Stops when the imbalance is
    inside the balance tolerance (converged), when the price step falls
    below the price tolerance (stalled), or at the iteration budget.
    The trace is returned either way; ``converged`` tells them apart.
    """
    config = config or SolverConfig()
    _check_feasible(scenario)
    alpha, beta, a_lo, a_hi = scenario.arrays()
    coord = scenario.coordinator
    diminishing = isinstance(config.step_rule, Diminishing)
    hist, lam, converged = _kernels.primal_dual_path(
        alpha, beta, a_lo, a_hi, coord.c1, coord.c2, coord.y_min, coord.y_max,
        config.initial_price, config.step_rule.gamma0, diminishing,
        config.balance_tolerance, config.price_tolerance, config.max_iterations)
    hist = np.asarray(hist)
    ks = np.arange(1, hist.shape[0] + 1, dtype=np.float64)
    iterations = np.column_stack([ks, hist])
    alloc = np.asarray(_kernels.demand_profile(lam, alpha, beta, a_lo, a_hi))
    y = float(_kernels.supply_amount(lam, coord.c1, coord.c2,
                                     coord.y_min, coord.y_max))
    final = MarketOutcome(allocations=alloc, supply=y, price=float(lam),
                          payments=-float(lam) * alloc)
    return ConvergenceTrace(iterations=iterations, converged=bool(converged),
                            final=final)


def verify_competitive_equilibrium(outcome: MarketOutcome, scenario: Scenario,
                                   tol: float = 1e-6) -> EquilibriumReport:
    """Check the three equilibrium conditions at a uniform-price outcome.

    (i) every allocation maximizes the agent's quasi-linear payoff at the
    posted price, (ii) supply maximizes the coordinator's profit, and
    (iii) total demand equals supply, all within ``tol``.
    """
    price = outcome.uniform_price()
    alpha, beta, a_lo, a_hi = scenario.arrays()
    best = np.asarray(_kernels.demand_profile(price, alpha, beta, a_lo, a_hi))
    consumers = bool(np.all(np.abs(np.asarray(outcome.allocations) - best) <= tol))
    coord = scenario.coordinator
    if coord.c2 > 0.0:
        y_best = float(_kernels.supply_amount(price, coord.c1, coord.c2,
                                              coord.y_min, coord.y_max))
        supplier = abs(outcome.supply - y_best) <= tol
    else:
        # any point of the step correspondence is optimal exactly at c1
        if abs(price - coord.c1) <= tol:
            supplier = coord.y_min - tol <= outcome.supply <= coord.y_max + tol
        else:
            y_best = coord.y_max if price > coord.c1 else coord.y_min
            supplier = abs(outcome.supply - y_best) <= tol
    balanced = abs(outcome.total_allocation() - outcome.supply) <= tol
    return EquilibriumReport(consumers_optimal=consumers,
                             supplier_optimal=bool(supplier),
                             balanced=bool(balanced))


def social_welfare_value(allocations, y: float, scenario: Scenario) -> float:
    """Total consumption utility minus the coordinator's supply cost."""
    alpha, beta, _, _ = scenario.arrays()
    a = np.asarray(allocations, dtype=np.float64)
    return float(np.sum(alpha * a - 0.5 * beta * a * a) - scenario.coordinator.cost(y))
