"""Price-leader and pricing-function-leader coordination.

The price leader posts a scalar price, anticipates closed-form follower
demands, and optimizes its own objective over the price axis (with an
optional capacity cap on total demand). The pricing-function leader goes
further: it first solves the unconstrained team problem jointly in
(allocation, price), then constructs a linear pricing rule whose induced
follower best response lands exactly on the team point. Outer problems
are solved by dense scanning plus refinement so optimality claims come
with grid certificates rather than stationarity conditions.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import GradientDegenerate, InfeasibleCapacity, \
    NotIncentiveControllable, UnboundedTeam
from .model import AgentSpec, MarketOutcome, Scenario, utility_value


@dataclass(frozen=True)
class StackelbergSolution:
    """Optimal posted price with the induced market outcome.

    ``scan`` has one row (price, leader payoff, feasible flag) per grid
    point, kept for plotting and as the optimality certificate.
    """

    price: float
    outcome: MarketOutcome
    leader_payoff: float
    scan: np.ndarray


@dataclass(frozen=True)
class IncentivePricing:
    """Linear pricing rule price(a) = team_price - slope * (a - team_allocation)."""

    team_allocation: float
    team_price: float
    slope: float

    def price_at(self, a: float):
        return self.team_price - self.slope * (np.asarray(a) - self.team_allocation)


def _leader_payoff_grid(lams, scenario: Scenario, objective: str) -> np.ndarray:
    alpha, beta, a_lo, a_hi = scenario.arrays()
    grid = lams[:, None]
    alloc = np.minimum(np.maximum((alpha[None, :] - grid) / beta[None, :],
                                  a_lo[None, :]), a_hi[None, :])
    total = alloc.sum(axis=1)
    cost = scenario.coordinator.c1 * total + 0.5 * scenario.coordinator.c2 * total ** 2
    if objective == "profit":
        return lams * total - cost
    if objective == "welfare":
        utility = (alpha[None, :] * alloc - 0.5 * beta[None, :] * alloc ** 2).sum(axis=1)
        return utility - cost
    raise ValueError(f"objective must be 'profit' or 'welfare', got {objective!r}")


def _min_feasible_price(scenario: Scenario, cap: float, hi: float) -> float:
    # Total demand is nonincreasing in the price, so the feasible set is
    # the interval [lam_cap, hi].
    alpha, beta, a_lo, a_hi = scenario.arrays()

    def total(lam):
        return float(np.sum(_kernels.demand_profile(lam, alpha, beta, a_lo, a_hi)))

    if total(0.0) <= cap:
        return 0.0
    if total(hi) > cap + 1e-12:
        raise InfeasibleCapacity(
            f"total demand exceeds capacity {cap} even at the price ceiling {hi}")
    lo = 0.0
    top = hi
    for _ in range(200):
        mid = 0.5 * (lo + top)
        if total(mid) > cap:
            lo = mid
        else:
            top = mid
    return top


def _golden_max(fun, lo: float, hi: float, tol: float = 1e-8) -> float:
    phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    x1 = b - phi * (b - a)
    x2 = a + phi * (b - a)
    f1, f2 = fun(x1), fun(x2)
    while b - a > tol:
        if f1 >= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - phi * (b - a)
            f1 = fun(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + phi * (b - a)
            f2 = fun(x2)
    return 0.5 * (a + b)


def solve_price_stackelberg(scenario: Scenario, objective: str = "profit",
                            grid_points: int = 20_001) -> StackelbergSolution:
    """Optimal uniform price for a leader anticipating follower demands.

    Scans prices on [0, max alpha], keeps only prices whose induced total
    demand respects the capacity limit (when one is set), and refines the
    best grid cell by golden section. With the welfare objective and no
    capacity this recovers the competitive price.
    """
    alpha, _, a_lo, _ = scenario.arrays()
    hi = float(np.max(alpha))
    cap = scenario.coordinator.capacity
    lo = 0.0
    if cap is not None:
        if float(np.sum(a_lo)) > cap:
            raise InfeasibleCapacity(
                f"minimum allocations already exceed the capacity {cap}")
        lo = _min_feasible_price(scenario, cap, hi)
    lams = np.linspace(lo, hi, grid_points)
    payoffs = _leader_payoff_grid(lams, scenario, objective)
    best = int(np.argmax(payoffs))  # first maximizer: ties go to the lowest price

    def at(lam):
        return float(_leader_payoff_grid(np.array([lam]), scenario, objective)[0])

    step = lams[1] - lams[0] if grid_points > 1 else 0.0
    price = _golden_max(at, max(lo, lams[best] - step), min(hi, lams[best] + step))
    if at(lams[best]) > at(price):
        price = float(lams[best])

    alloc = np.asarray(_kernels.demand_profile(price, *scenario.arrays()))
    total = float(np.sum(alloc))
    outcome = MarketOutcome(allocations=alloc, supply=total, price=price,
                            payments=-price * alloc)
    feasible = np.ones_like(lams) if cap is None else \
        (np.asarray([float(np.sum(_kernels.demand_profile(l, *scenario.arrays())))
                     for l in lams]) <= cap + 1e-12).astype(np.float64)
    scan = np.column_stack([lams, payoffs, feasible])
    return StackelbergSolution(price=float(price), outcome=outcome,
                               leader_payoff=at(price), scan=scan)


def solve_team_problem(payoff, a_box, lam_box, grid: int = 200,
                       zoom_passes: int = 6):
    """Joint maximizer of the leader payoff over an (allocation, price) box.

    Dense grid search with iterative zooming; ties break toward the
    smallest allocation, then the smallest price.
    """
    a_lo, a_hi = float(a_box[0]), float(a_box[1])
    l_lo, l_hi = float(lam_box[0]), float(lam_box[1])
    for v in (a_lo, a_hi, l_lo, l_hi):
        if not math.isfinite(v):
            raise UnboundedTeam("team search box must be finite")
    best_a, best_l = a_lo, l_lo
    for _ in range(zoom_passes):
        avals = np.linspace(a_lo, a_hi, grid)
        lvals = np.linspace(l_lo, l_hi, grid)
        vals = payoff(avals[:, None], lvals[None, :])
        vals = np.broadcast_to(np.asarray(vals, dtype=np.float64), (grid, grid))
        flat = int(np.argmax(vals))  # row-major: smallest a, then smallest price
        ia, il = divmod(flat, grid)
        best_a, best_l = float(avals[ia]), float(lvals[il])
        da = (a_hi - a_lo) / (grid - 1)
        dl = (l_hi - l_lo) / (grid - 1)
        a_lo, a_hi = max(a_lo, best_a - da), min(a_hi, best_a + da)
        l_lo, l_hi = max(l_lo, best_l - dl), min(l_hi, best_l + dl)
        if da == 0.0 and dl == 0.0:
            break
    return best_a, best_l


def construct_linear_incentive(agent: AgentSpec, team_point) -> IncentivePricing:
    """Linear pricing rule that makes the team point the follower's optimum.

    The slope is the tangency ratio of the follower's payoff gradient at
    the team point, grad_a / grad_lambda; the induced problem must come
    out strictly concave and is always re-verified by grid search before
    the pricing is returned.
    """
    a_tau, lam_tau = float(team_point[0]), float(team_point[1])
    grad_a = agent.alpha - agent.beta * a_tau - lam_tau
    grad_l = -a_tau
    if abs(grad_a) < 1e-12:
        raise GradientDegenerate(
            "follower allocation gradient vanishes at the team point")
    if abs(grad_l) < 1e-12:
        raise GradientDegenerate(
            "zero team allocation leaves the price gradient degenerate")
    slope = grad_a / grad_l
    if 2.0 * slope - agent.beta >= 0.0:
        raise NotIncentiveControllable(
            f"slope {slope:.6g} makes the induced follower problem non-concave")
    pricing = IncentivePricing(team_allocation=a_tau, team_price=lam_tau,
                               slope=slope)
    if not verify_incentive_controllable(pricing, agent, tol=1e-4):
        raise NotIncentiveControllable(
            "grid best response does not land on the team point")
    return pricing


def induced_best_response(pricing: IncentivePricing, agent: AgentSpec) -> float:
    """The follower's grid-searched optimum under a pricing rule.

    Maximizes V(a) - price(a)*a over the allocation box with 1e5 points
    plus zoom refinement, independent of any closed form.
    """
    lo, hi = agent.a_min, agent.a_max

    def induced(avals):
        return (utility_value(avals, agent.theta)
                - np.asarray(pricing.price_at(avals)) * avals)

    best = lo
    for _ in range(3):
        avals = np.linspace(lo, hi, 100_001)
        vals = induced(avals)
        best = float(avals[int(np.argmax(vals))])
        step = avals[1] - avals[0] if len(avals) > 1 else 0.0
        lo = max(agent.a_min, best - step)
        hi = min(agent.a_max, best + step)
        if step == 0.0:
            break
    return best


def verify_incentive_controllable(pricing: IncentivePricing, agent: AgentSpec,
                                  tol: float = 1e-4) -> bool:
    """Grid-certify that the follower's best response realizes the team point."""
    best = induced_best_response(pricing, agent)
    if abs(best - pricing.team_allocation) > tol:
        return False
    realized = float(pricing.price_at(best))
    return abs(realized - pricing.team_price) <= tol * abs(pricing.slope) + tol


def per_agent_linear_incentives(scenario: Scenario, payoff_factory, lam_box,
                                grid: int = 200):
    """Independent pricing functions, one per agent, via the one-agent design.

    ``payoff_factory(agent)`` returns that agent's leader payoff
    U0(a, price). Couplings across agents are out of scope; each pricing
    function is built and verified in isolation.
    """
    designs = []
    for agent in scenario.agents:
        payoff = payoff_factory(agent)
        team = solve_team_problem(payoff, (agent.a_min, agent.a_max), lam_box, grid)
        pricing = construct_linear_incentive(agent, team)
        designs.append((agent, team, pricing))
    return designs
