"""Direct mechanisms over reported types, and exhaustive property checkers.

Three allocation/payment constructions are provided: the pivot mechanism
(truthful in dominant strategies, weakly budget balanced), the expected
externality mechanism (truthful in Bayesian equilibrium, exactly budget
balanced), and the scalar-strategy pivot variant whose Nash equilibrium
aligns declared and true marginal utilities. The checkers enumerate
finite report grids, so incentive-compatibility, budget, participation,
and dictatorship claims are certified rather than assumed — and they can
also exhibit concrete profitable misreports for broken mechanisms.

Payments are money *to* agents throughout; consumers carry negative
payments.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import Infeasible, NeedTwoAgents, NotConverged, PriorRequired, \
    ScenarioInvalid
from .games import GameSolution
from .model import MarketOutcome, Scenario, TypePrior, utility_value


@dataclass(frozen=True)
class DirectMechanism:
    """Allocation and payment rules over reported type profiles.

    ``message_space[i]`` is agent i's finite grid of reportable types;
    both rules must be total on the product of those grids. ``utility``
    evaluates an agent's consumption utility ``utility(a_i, theta_i)``
    for the type family this mechanism runs on.
    """

    allocation_rule: object
    payment_rule: object
    message_space: tuple
    utility: object = utility_value


@dataclass(frozen=True)
class MechanismReport:
    """Outcome of one property check, with a counterexample on failure."""

    property: str  # IC-Dominant | IC-Bayesian | BudgetBalance | InterimIR | Dictatorial
    holds: bool
    witness: dict | None = None
    detail: str = ""

    def __post_init__(self):
        if not self.holds and self.witness is None:
            raise ValueError("a failing report must carry a witness")


@dataclass(frozen=True)
class SSVCGFamily:
    """Single-parameter declared-utility family sigma * log(1 + a).

    The shift keeps a = 0 admissible; for sigma > 0 the family is
    strictly concave, strictly increasing, and differentiable, and
    sigma = marginal * (1 + a) matches any positive marginal at any a.
    """

    shape: str = "log1p"

    def value(self, a, sigma):
        return sigma * np.log1p(a)

    def marginal(self, a, sigma):
        return sigma / (1.0 + a)

    def sigma_for(self, marginal, a):
        return marginal * (1.0 + a)


# --------------------------------------------------------------------------
# efficient allocation under a shared capacity


def _report_arrays(reports):
    alpha = np.array([r[0] for r in reports], dtype=np.float64)
    beta = np.array([r[1] for r in reports], dtype=np.float64)
    return alpha, beta


def efficient_allocation(reports, scenario: Scenario) -> np.ndarray:
    """Welfare-maximizing allocation for the reported types.

    Maximizes the reported utilities subject to the agents' boxes and the
    optional shared capacity, via bisection on the common marginal.
    """
    _, _, a_lo, a_hi = scenario.arrays()
    cap = scenario.coordinator.capacity
    cap = math.inf if cap is None else float(cap)
    if float(np.sum(a_lo)) > cap:
        raise Infeasible(f"minimum allocations exceed the capacity {cap}")
    alpha, beta = _report_arrays(reports)
    alloc, _ = _kernels.waterfill_bisect(alpha, beta, a_lo, a_hi, cap)
    return np.asarray(alloc)


def _welfare_without(i, reports, scenario: Scenario) -> float:
    """Best achievable reported welfare once agent i is removed."""
    _, _, a_lo, a_hi = scenario.arrays()
    keep = [j for j in range(len(reports)) if j != i]
    if not keep:
        return 0.0
    cap = scenario.coordinator.capacity
    cap = math.inf if cap is None else float(cap)
    alpha, beta = _report_arrays([reports[j] for j in keep])
    alloc, _ = _kernels.waterfill_bisect(alpha, beta, a_lo[keep], a_hi[keep], cap)
    alloc = np.asarray(alloc)
    return float(np.sum(alpha * alloc - 0.5 * beta * alloc ** 2))


def _per_agent_price(alloc, payments):
    alloc = np.asarray(alloc)
    out = np.zeros_like(alloc)
    mask = np.abs(alloc) > 1e-12
    out[mask] = np.asarray(payments)[mask] / alloc[mask]
    return out


def vcg_outcome(reports, scenario: Scenario) -> MarketOutcome:
    """Efficient allocation with pivot payments.

    Each agent receives the others' reported utility at the chosen
    allocation minus the welfare the others could reach without it, so
    every agent internalizes exactly its externality and truth-telling
    is dominant.
    """
    alloc = efficient_allocation(reports, scenario)
    alpha, beta = _report_arrays(reports)
    values = alpha * alloc - 0.5 * beta * alloc ** 2
    total = float(np.sum(values))
    payments = np.empty(len(reports))
    for i in range(len(reports)):
        others_here = total - float(values[i])
        payments[i] = others_here - _welfare_without(i, reports, scenario)
    return MarketOutcome(allocations=alloc, supply=float(np.sum(alloc)),
                         price=_per_agent_price(alloc, payments),
                         payments=payments)


def dagva_outcome(reports, prior: TypePrior, scenario: Scenario) -> MarketOutcome:
    """Efficient allocation with expected-externality payments.

    Each agent receives the expected externality of its own report (the
    others' expected utility under the efficient rule, with their types
    drawn from the prior) minus an equal share of everyone else's
    expected-externality terms. The shares telescope, so payments sum to
    zero on every report profile.
    """
    n = len(reports)
    if n < 2:
        raise NeedTwoAgents("the expected-externality mechanism needs N >= 2")
    _require_independent_prior(prior, n)
    xi = np.array([_expected_externality(i, reports[i], prior, scenario)
                   for i in range(n)])
    total_xi = float(np.sum(xi))
    payments = xi - (total_xi - xi) / (n - 1.0)
    alloc = efficient_allocation(reports, scenario)
    return MarketOutcome(allocations=alloc, supply=float(np.sum(alloc)),
                         price=_per_agent_price(alloc, payments),
                         payments=payments)


def _require_independent_prior(prior, n):
    if prior is None:
        raise PriorRequired("a discrete type prior is required")
    if not prior.independent:
        raise PriorRequired("the prior must be independent across agents")
    if prior.n_agents() != n:
        raise PriorRequired("prior does not cover every agent")


def _expected_externality(i, report_i, prior: TypePrior, scenario: Scenario) -> float:
    """E over others' types of the others' utility under the efficient rule."""
    n = prior.n_agents()
    others = [j for j in range(n) if j != i]
    total = 0.0
    for combo in itertools.product(*(range(len(prior.support[j])) for j in others)):
        weight = 1.0
        reports = [None] * n
        reports[i] = tuple(report_i)
        for j, idx in zip(others, combo):
            weight *= prior.weights[j][idx]
            reports[j] = tuple(prior.support[j][idx])
        alloc = efficient_allocation(reports, scenario)
        value = sum(utility_value(float(alloc[j]), reports[j]) for j in others)
        total += weight * value
    return total


# --------------------------------------------------------------------------
# scalar-strategy pivot mechanism


@dataclass(frozen=True)
class FixedPointConfig:
    """Damped marginal-matching iteration and its deviation certificate."""

    damping: float = 0.5
    tolerance: float = 1e-12
    max_iterations: int = 20_000
    deviation_grid: int = 10_001


def _declared_alloc(sigma, a_lo, a_hi, cap):
    alloc, _ = _kernels.declared_log_alloc(
        np.asarray(sigma, dtype=np.float64), a_lo, a_hi, cap)
    return np.asarray(alloc)


def _declared_alloc_batch(sigmas, a_lo, a_hi, cap):
    """Row-wise declared-utility allocations for a (G, N) matrix of profiles."""
    if float(np.sum(a_hi)) <= cap:
        return np.broadcast_to(a_hi, sigmas.shape).copy()
    lo = np.min(sigmas / (1.0 + a_hi), axis=1)
    hi = np.max(sigmas / (1.0 + a_lo), axis=1)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        a = np.clip(sigmas / mid[:, None] - 1.0, a_lo, a_hi)
        over = a.sum(axis=1) > cap
        lo = np.where(over, mid, lo)
        hi = np.where(over, hi, mid)
    return np.clip(sigmas / (0.5 * (lo + hi))[:, None] - 1.0, a_lo, a_hi)


def ssvcg_solve(scenario: Scenario, family: SSVCGFamily | None = None,
                config: FixedPointConfig | None = None):
    """Nash point of the scalar-strategy pivot mechanism.

    Iterates between the declared-utility allocation and the parameter
    choice that matches each declared marginal to the agent's true
    marginal at the current allocation. At the fixed point the
    allocation coincides with the true efficient one; the returned
    epsilon certifies that no unilateral parameter deviation on a fine
    grid gains more.
    """
    family = family or SSVCGFamily()
    config = config or FixedPointConfig()
    alpha, beta, a_lo, a_hi = scenario.arrays()
    cap = scenario.coordinator.capacity
    cap = math.inf if cap is None else float(cap)
    truth = [(a.alpha, a.beta) for a in scenario.agents]
    target = efficient_allocation(truth, scenario)
    marginals = alpha - beta * target
    if float(np.min(marginals)) <= 1e-9:
        raise ScenarioInvalid(
            "the efficient allocation must leave strictly positive marginals "
            "(add a binding capacity or tighter boxes)")

    sigma = family.sigma_for(alpha, np.zeros_like(alpha))  # declare V'(0) to start
    converged = False
    for _ in range(config.max_iterations):
        alloc = _declared_alloc(sigma, a_lo, a_hi, cap)
        want = family.sigma_for(np.maximum(alpha - beta * alloc, 1e-9), alloc)
        move = float(np.max(np.abs(want - sigma)))
        sigma = (1.0 - config.damping) * sigma + config.damping * want
        if move <= config.tolerance * (1.0 + float(np.max(np.abs(sigma)))):
            converged = True
            break
    if not converged:
        raise NotConverged("marginal-matching iteration exhausted its budget")

    alloc = _declared_alloc(sigma, a_lo, a_hi, cap)
    declared = family.value(alloc, sigma)
    payments = np.empty(scenario.n)
    for i in range(scenario.n):
        keep = [j for j in range(scenario.n) if j != i]
        if keep:
            sub, _ = _kernels.declared_log_alloc(sigma[keep], a_lo[keep],
                                                 a_hi[keep], cap)
            best_without = float(np.sum(family.value(np.asarray(sub), sigma[keep])))
        else:
            best_without = 0.0
        payments[i] = float(np.sum(declared) - declared[i]) - best_without

    eps = _sigma_deviation_epsilon(sigma, scenario, family, cap, config)
    outcome = MarketOutcome(allocations=alloc, supply=float(np.sum(alloc)),
                            price=_per_agent_price(alloc, payments),
                            payments=payments)
    solution = GameSolution(profile=tuple(float(s) for s in sigma),
                            concept="epsilon-nash", epsilon=eps)
    return sigma, outcome, solution


def _sigma_deviation_epsilon(sigma, scenario, family, cap, config) -> float:
    """Best unilateral parameter deviation found on a geometric grid."""
    alpha, beta, a_lo, a_hi = scenario.arrays()

    def agent_payoffs(i, sigma_dev):
        profiles = np.tile(sigma, (len(sigma_dev), 1))
        profiles[:, i] = sigma_dev
        allocs = _declared_alloc_batch(profiles, a_lo, a_hi, cap)
        own = alpha[i] * allocs[:, i] - 0.5 * beta[i] * allocs[:, i] ** 2
        others = family.value(allocs, profiles).sum(axis=1) \
            - family.value(allocs[:, i], profiles[:, i])
        return own + others  # the pivot term is constant in agent i's report

    eps = 0.0
    for i in range(scenario.n):
        here = float(agent_payoffs(i, np.array([sigma[i]]))[0])
        grid = np.geomspace(sigma[i] * 1e-2, sigma[i] * 1e2, config.deviation_grid)
        vals = agent_payoffs(i, grid)
        best = int(np.argmax(vals))
        gain = float(vals[best]) - here
        lo = grid[max(best - 1, 0)]
        hi = grid[min(best + 1, len(grid) - 1)]
        fine = np.linspace(lo, hi, config.deviation_grid)
        gain = max(gain, float(np.max(agent_payoffs(i, fine))) - here)
        eps = max(eps, gain)
    return max(eps, 0.0)


# --------------------------------------------------------------------------
# mechanism factories for the checkers


def default_type_grids(scenario: Scenario, points: int = 3):
    """Per-agent report grids spanning [alpha/2, 3*alpha/2] at fixed beta."""
    return tuple(
        tuple((float(a), agent.beta)
              for a in np.linspace(0.5 * agent.alpha, 1.5 * agent.alpha, points))
        for agent in scenario.agents)


def vcg_mechanism(scenario: Scenario, grids=None) -> DirectMechanism:
    """The pivot mechanism as a direct mechanism over finite report grids."""
    grids = grids or default_type_grids(scenario)
    cache = {}

    def solve(reports):
        key = tuple(reports)
        if key not in cache:
            cache[key] = vcg_outcome(list(reports), scenario)
        return cache[key]

    return DirectMechanism(
        allocation_rule=lambda reports: solve(reports).allocations,
        payment_rule=lambda reports: solve(reports).payments,
        message_space=grids)


def dagva_mechanism(scenario: Scenario, prior: TypePrior | None = None) -> DirectMechanism:
    """The expected-externality mechanism; reports live on the prior support."""
    prior = prior or scenario.prior
    _require_independent_prior(prior, scenario.n)
    cache = {}

    def solve(reports):
        key = tuple(reports)
        if key not in cache:
            cache[key] = dagva_outcome(list(reports), prior, scenario)
        return cache[key]

    return DirectMechanism(
        allocation_rule=lambda reports: solve(reports).allocations,
        payment_rule=lambda reports: solve(reports).payments,
        message_space=tuple(tuple(tuple(t) for t in types)
                            for types in prior.support))


def pay_your_bid_mechanism(scenario: Scenario, grids=None) -> DirectMechanism:
    """Broken-on-purpose variant: efficient allocation, pay your declared value.

    Charging alpha_reported * allocation makes underbidding profitable,
    so incentive-compatibility checks must find a witness against it.
    """
    grids = grids or default_type_grids(scenario)

    def alloc_rule(reports):
        return efficient_allocation(list(reports), scenario)

    def pay_rule(reports):
        alloc = efficient_allocation(list(reports), scenario)
        alphas = np.array([r[0] for r in reports])
        return -alphas * alloc

    return DirectMechanism(allocation_rule=alloc_rule, payment_rule=pay_rule,
                           message_space=grids)


def single_item_vcg(value_grids) -> DirectMechanism:
    """Second-price allocation of one indivisible item.

    Types are scalar values; feasible allocations give the item to at
    most one agent. Brute force over those N+1 allocations reproduces
    the familiar auction: highest report wins, winner pays the second
    highest report.
    """
    n = len(value_grids)

    def best_allocation(values, skip=None):
        best_welfare, best = 0.0, None  # "nobody" is feasible with welfare 0
        for i in range(n):
            if i == skip:
                continue
            if values[i] > best_welfare:
                best_welfare, best = values[i], i
        return best, best_welfare

    def alloc_rule(reports):
        winner, _ = best_allocation(list(reports))
        alloc = np.zeros(n)
        if winner is not None:
            alloc[winner] = 1.0
        return alloc

    def pay_rule(reports):
        values = list(reports)
        winner, _ = best_allocation(values)
        payments = np.zeros(n)
        for i in range(n):
            others_here = 0.0 if i == winner or winner is None else values[winner]
            _, without = best_allocation(values, skip=i)
            payments[i] = others_here - without
        return payments

    return DirectMechanism(
        allocation_rule=alloc_rule, payment_rule=pay_rule,
        message_space=tuple(tuple(float(v) for v in g) for g in value_grids),
        utility=lambda a, theta: theta * a)


# --------------------------------------------------------------------------
# property checkers


def _profiles(grids):
    return itertools.product(*(range(len(g)) for g in grids))


def _outcome_cache(mechanism):
    cache = {}
    grids = mechanism.message_space

    def get(profile):
        if profile not in cache:
            reports = tuple(grids[j][profile[j]] for j in range(len(grids)))
            cache[profile] = (np.asarray(mechanism.allocation_rule(reports)),
                              np.asarray(mechanism.payment_rule(reports)))
        return cache[profile]

    return get


def check_ic_dominant(mechanism: DirectMechanism, tol: float = 1e-9) -> MechanismReport:
    """Exhaustive dominant-strategy truthfulness over the message grids.

    Enumerates every (agent, true type, misreport, opponent profile)
    tuple; the first profitable misreport in lexicographic order becomes
    the witness.
    """
    grids = mechanism.message_space
    n = len(grids)
    outcome = _outcome_cache(mechanism)
    for i in range(n):
        other_ranges = [range(len(grids[j])) for j in range(n) if j != i]
        for true_idx in range(len(grids[i])):
            true_type = grids[i][true_idx]
            for dev_idx in range(len(grids[i])):
                if dev_idx == true_idx:
                    continue
                for opp in itertools.product(*other_ranges):
                    honest = opp[:i] + (true_idx,) + opp[i:]
                    lying = opp[:i] + (dev_idx,) + opp[i:]
                    a_h, t_h = outcome(honest)
                    a_l, t_l = outcome(lying)
                    gain = (mechanism.utility(float(a_l[i]), true_type) + t_l[i]) \
                        - (mechanism.utility(float(a_h[i]), true_type) + t_h[i])
                    if gain > tol:
                        return MechanismReport(
                            property="IC-Dominant", holds=False,
                            witness={"agent": i + 1, "true_type": true_type,
                                     "misreport": grids[i][dev_idx],
                                     "opponents": [grids[j][opp[k]] for k, j in
                                                   enumerate(jj for jj in range(n)
                                                             if jj != i)],
                                     "gain": float(gain)})
    return MechanismReport(property="IC-Dominant", holds=True)


def check_ic_bayesian(mechanism: DirectMechanism, prior: TypePrior,
                      tol: float = 1e-9) -> MechanismReport:
    """Interim truthfulness against truthful opponents drawn from the prior."""
    n = len(mechanism.message_space)
    _require_independent_prior(prior, n)
    outcome = _outcome_cache(mechanism)
    support = mechanism.message_space

    def interim(i, true_idx, report_idx):
        others = [j for j in range(n) if j != i]
        total = 0.0
        for combo in itertools.product(*(range(len(support[j])) for j in others)):
            weight = 1.0
            profile = [None] * n
            profile[i] = report_idx
            for j, idx in zip(others, combo):
                weight *= prior.weights[j][idx]
                profile[j] = idx
            a, t = outcome(tuple(profile))
            total += weight * (mechanism.utility(float(a[i]),
                                                 support[i][true_idx]) + t[i])
        return total

    for i in range(n):
        for true_idx in range(len(support[i])):
            honest = interim(i, true_idx, true_idx)
            for dev_idx in range(len(support[i])):
                if dev_idx == true_idx:
                    continue
                gain = interim(i, true_idx, dev_idx) - honest
                if gain > tol:
                    return MechanismReport(
                        property="IC-Bayesian", holds=False,
                        witness={"agent": i + 1,
                                 "true_type": support[i][true_idx],
                                 "misreport": support[i][dev_idx],
                                 "gain": float(gain)})
    return MechanismReport(property="IC-Bayesian", holds=True)


def check_budget_balance(mechanism: DirectMechanism, tol: float = 1e-9) -> MechanismReport:
    """Classify the payment sums over all report profiles.

    ``detail`` is "exact" when the sums vanish everywhere, "weak" when
    they are never positive; a positive sum is a violation with witness.
    """
    grids = mechanism.message_space
    outcome = _outcome_cache(mechanism)
    worst_abs, worst_pos, pos_profile = 0.0, -math.inf, None
    for profile in _profiles(grids):
        total = float(np.sum(outcome(profile)[1]))
        worst_abs = max(worst_abs, abs(total))
        if total > worst_pos:
            worst_pos, pos_profile = total, profile
    if worst_pos > tol:
        reports = [grids[j][pos_profile[j]] for j in range(len(grids))]
        return MechanismReport(property="BudgetBalance", holds=False,
                               witness={"reports": reports,
                                        "payment_sum": worst_pos},
                               detail="violated")
    detail = "exact" if worst_abs <= 1e-11 else "weak"
    return MechanismReport(property="BudgetBalance", holds=True, detail=detail)


def check_interim_ir(mechanism: DirectMechanism, prior: TypePrior,
                     tol: float = 1e-9) -> MechanismReport:
    """Every type's interim expected payoff under truthful play is >= 0."""
    n = len(mechanism.message_space)
    _require_independent_prior(prior, n)
    outcome = _outcome_cache(mechanism)
    support = mechanism.message_space
    for i in range(n):
        others = [j for j in range(n) if j != i]
        for true_idx in range(len(support[i])):
            total = 0.0
            for combo in itertools.product(*(range(len(support[j])) for j in others)):
                weight = 1.0
                profile = [None] * n
                profile[i] = true_idx
                for j, idx in zip(others, combo):
                    weight *= prior.weights[j][idx]
                    profile[j] = idx
                a, t = outcome(tuple(profile))
                total += weight * (mechanism.utility(float(a[i]),
                                                     support[i][true_idx]) + t[i])
            if total < -tol:
                return MechanismReport(
                    property="InterimIR", holds=False,
                    witness={"agent": i + 1, "true_type": support[i][true_idx],
                             "interim_payoff": float(total)})
    return MechanismReport(property="InterimIR", holds=True)


def check_dictatorial(choice, prefs) -> MechanismReport:
    """Look for an agent whose top outcome is selected at every profile.

    ``choice`` maps each type profile to the selected outcome label;
    ``prefs[(agent, profile)]`` maps outcome labels to that agent's
    utility. Dictatorship means membership of the chosen outcome in the
    agent's argmax set, profile by profile.
    """
    profiles = sorted(choice)
    if not profiles:
        raise ValueError("the social choice table is empty")
    n = len(profiles[0])
    failures = {}
    for agent in range(n):
        dictator = True
        for profile in profiles:
            utilities = prefs[(agent, profile)]
            top = max(utilities.values())
            if utilities[choice[profile]] < top:
                failures[agent + 1] = {"profile": profile,
                                       "chosen": choice[profile]}
                dictator = False
                break
        if dictator:
            return MechanismReport(property="Dictatorial", holds=True,
                                   detail=f"dictator={agent + 1}")
    return MechanismReport(property="Dictatorial", holds=False,
                           witness={"failures": failures},
                           detail="no agent's top outcome is always selected")
