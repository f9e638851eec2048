"""Solution concepts and the strategic supply-function bidding game.

Finite games are solved exhaustively, so every equilibrium claim doubles
as an enumeration certificate. The continuous bidding game is solved by
damped best-response iteration and certified by a fine-grid unilateral
deviation search, turning "Nash" into a checkable epsilon.
"""

import itertools
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import NeedTwoAgents, NoPureNash, NotConverged, ScenarioInvalid, \
    TypeOffSupport, ZeroBidSum
from .model import MarketOutcome, Scenario, TypePrior


@dataclass(frozen=True)
class FiniteGame:
    """A finite normal-form game.

    ``strategy_sets[i]`` lists player i's strategy labels; ``payoff``
    maps a profile of strategy indices to one payoff per player.
    """

    strategy_sets: tuple
    payoff: object

    def __post_init__(self):
        if any(len(s) == 0 for s in self.strategy_sets):
            raise ValueError("every strategy set must be nonempty")

    @property
    def n_players(self) -> int:
        return len(self.strategy_sets)

    def sizes(self):
        return tuple(len(s) for s in self.strategy_sets)

    def profiles(self):
        return itertools.product(*(range(len(s)) for s in self.strategy_sets))

    def payoff_table(self) -> np.ndarray:
        """Dense (s1, ..., sP, P) array of payoffs over all profiles."""
        table = np.empty(self.sizes() + (self.n_players,), dtype=np.float64)
        for profile in self.profiles():
            table[profile] = np.asarray(self.payoff(profile), dtype=np.float64)
        return table


@dataclass(frozen=True)
class GameSolution:
    """A strategy profile tagged with its solution concept.

    ``epsilon`` is the certified maximal unilateral improvement; zero
    means an exact equilibrium in the stated concept.
    """

    profile: tuple
    concept: str  # "nash" | "epsilon-nash" | "dominant" | "bayesian-nash"
    epsilon: float = 0.0

    def __post_init__(self):
        if self.epsilon < 0.0:
            raise ValueError("epsilon must be >= 0")


@dataclass(frozen=True)
class SupplyBidProfile:
    """Per-agent slopes of linear supply functions a_i = b_i * price."""

    bids: tuple

    def __post_init__(self):
        if any(b < 0.0 for b in self.bids):
            raise ValueError("bids must be nonnegative")

    def array(self) -> np.ndarray:
        return np.asarray(self.bids, dtype=np.float64)


def epsilon_of_profile(game: FiniteGame, profile) -> float:
    """Largest payoff gain any single player can get by deviating; 0 = Nash."""
    table = game.payoff_table()
    profile = tuple(profile)
    worst = 0.0
    for i, size in enumerate(game.sizes()):
        here = table[profile][i]
        for dev in range(size):
            alt = profile[:i] + (dev,) + profile[i + 1:]
            worst = max(worst, table[alt][i] - here)
    return float(worst)


def solve_nash_finite(game: FiniteGame, tol: float = 1e-12):
    """All pure-strategy Nash equilibria, by full enumeration."""
    solutions = [GameSolution(profile=p, concept="nash", epsilon=0.0)
                 for p in game.profiles()
                 if epsilon_of_profile(game, p) <= tol]
    if not solutions:
        raise NoPureNash("no pure-strategy Nash equilibrium exists")
    return solutions


def is_dominant_profile(game: FiniteGame, profile, tol: float = 1e-12) -> bool:
    """True iff each player's strategy is a best reply to *every* opponent profile."""
    table = game.payoff_table()
    profile = tuple(profile)
    for i, size in enumerate(game.sizes()):
        others = [range(len(s)) for j, s in enumerate(game.strategy_sets) if j != i]
        for opp in itertools.product(*others):
            full = opp[:i] + (profile[i],) + opp[i:]
            here = table[full][i]
            for dev in range(size):
                alt = opp[:i] + (dev,) + opp[i:]
                if table[alt][i] > here + tol:
                    return False
    return True


def bayesian_expected_payoff(game_family, prior: TypePrior, strategies,
                             player: int, theta) -> float:
    """Player's interim expected payoff under type-contingent strategies.

    ``game_family`` maps a full type profile to the FiniteGame played at
    those types; ``strategies[j]`` maps agent j's type to its strategy
    index. The expectation runs over opponents' types drawn independently
    from the prior, conditioned on ``player`` having type ``theta``.
    """
    theta = tuple(theta) if isinstance(theta, (list, tuple)) else theta
    support = [list(types) for types in prior.support]
    if theta not in support[player]:
        raise TypeOffSupport(f"type {theta!r} not on player {player}'s support")
    n = prior.n_agents()
    others = [j for j in range(n) if j != player]
    total = 0.0
    for combo in itertools.product(*(range(len(support[j])) for j in others)):
        weight = 1.0
        types = [None] * n
        types[player] = theta
        for j, idx in zip(others, combo):
            weight *= prior.weights[j][idx]
            types[j] = support[j][idx]
        game = game_family(tuple(types))
        profile = tuple(strategies[j][types[j]] for j in range(n))
        total += weight * float(game.payoff(profile)[player])
    return total


# --------------------------------------------------------------------------
# supply-function bidding


def clear_supply_function(bids, deficit: float) -> MarketOutcome:
    """Uniform price and shedding amounts for linear supply-function bids.

    The price makes committed shedding match the deficit exactly:
    price = d / sum(b), a_i = b_i * price. Agents are paid for shedding,
    so payments are +price * a_i.
    """
    b = bids.array() if isinstance(bids, SupplyBidProfile) else \
        np.asarray(bids, dtype=np.float64)
    total = float(np.sum(b))
    if total <= 0.0:
        raise ZeroBidSum("supply-function clearing needs sum(b) > 0")
    if not deficit > 0.0:
        raise ScenarioInvalid("deficit must be > 0")
    price = deficit / total
    if not np.isfinite(price):
        raise ZeroBidSum(f"bid sum {total!r} is too small to price the deficit")
    alloc = (b / total) * deficit  # shares first: stable for tiny bid sums
    return MarketOutcome(allocations=alloc, supply=float(np.sum(alloc)),
                         price=price, payments=price * alloc)


@dataclass(frozen=True)
class BestResponseConfig:
    """Knobs for the damped best-response solver and its epsilon certificate."""

    damping: float = 0.5
    epsilon_target: float = 1e-6
    max_iterations: int = 5_000_000
    chunk: int = 100_000
    deviation_grid: int = 10_001
    b_cap_factor: float = 10.0


def shedding_payoff(bid: float, others_sum: float, beta: float, deficit: float) -> float:
    """Payment received minus quadratic shedding cost at one's own bid."""
    total = bid + others_sum
    if total <= 0.0:
        return 0.0
    a = bid * deficit / total
    price = deficit / total
    return price * a - 0.5 * beta * a * a


def _deviation_epsilon(bids, beta, deficit, b_cap, grid_points):
    """Certified epsilon by per-agent deviation grids with one refinement pass.

    The grid is a union of a linear sweep of [0, b_cap] and a geometric
    sweep reaching three decades below the current bid, so gains hiding
    at small bid scales are resolved too.
    """
    eps = 0.0
    total = float(np.sum(bids))
    for i in range(len(bids)):
        s = total - bids[i]
        here = shedding_payoff(bids[i], s, beta[i], deficit)

        def batch(ts):
            tot = ts + s
            with np.errstate(divide="ignore", invalid="ignore"):
                a = np.where(tot > 0.0, ts * deficit / tot, 0.0)
                price = np.where(tot > 0.0, deficit / tot, 0.0)
            return price * a - 0.5 * beta[i] * a * a

        tiny = max(float(bids[i]) * 1e-3, 1e-12)
        ts = np.unique(np.concatenate([
            np.linspace(0.0, b_cap, grid_points),
            np.geomspace(tiny, b_cap, grid_points),
            np.asarray([float(bids[i])]),
        ]))
        vals = batch(ts)
        best = int(np.argmax(vals))
        gain = float(vals[best] - here)
        lo = ts[max(best - 1, 0)]
        hi = ts[min(best + 1, len(ts) - 1)]
        fine = np.linspace(lo, hi, grid_points)
        gain = max(gain, float(np.max(batch(fine)) - here))
        eps = max(eps, gain)
    return max(eps, 0.0)


def supply_function_nash(scenario: Scenario, config: BestResponseConfig | None = None):
    """Equilibrium bids of the strategic load-shedding game.

    Agent i's payoff is the clearing payment minus the shedding cost
    beta_i * a_i^2 / 2. Bids evolve by damped best response on
    [0, b_cap]; the returned epsilon comes from the independent
    deviation-grid search, not from the iteration itself.
    """
    config = config or BestResponseConfig()
    if scenario.n < 2:
        raise NeedTwoAgents("supply-function bidding needs at least two agents")
    deficit = scenario.coordinator.deficit
    if deficit is None:
        raise ScenarioInvalid("scenario must carry a deficit for the bidding game")
    _, beta, _, _ = scenario.arrays()
    b_cap = config.b_cap_factor * deficit / float(np.min(beta))
    bids = 1.0 / beta  # any positive start; scale-free for the dynamics
    spent = 0
    while spent < config.max_iterations:
        budget = min(config.chunk, config.max_iterations - spent)
        bids, done, _ = _kernels.supply_bid_fixed_point(
            beta, bids, b_cap, config.damping, 1e-15, budget)
        bids = np.asarray(bids)
        spent += int(done)
        eps = _deviation_epsilon(bids, beta, deficit, b_cap, config.deviation_grid)
        if eps <= config.epsilon_target:
            profile = SupplyBidProfile(bids=tuple(float(b) for b in bids))
            return profile, GameSolution(profile=tuple(bids),
                                         concept="epsilon-nash", epsilon=eps)
        if int(done) < budget:
            break  # fixed point reached but certificate above target
    raise NotConverged(
        f"best-response iteration spent {spent} iterations; epsilon {eps:.3g} "
        f"above target {config.epsilon_target:.3g}")


def efficient_shedding(scenario: Scenario) -> np.ndarray:
    """Cost-minimizing split of the deficit: marginal costs equalized."""
    deficit = scenario.coordinator.deficit
    if deficit is None:
        raise ScenarioInvalid("scenario must carry a deficit")
    _, beta, _, _ = scenario.arrays()
    inv = 1.0 / beta
    return deficit * inv / float(np.sum(inv))


def shedding_welfare(allocations, scenario: Scenario) -> float:
    """Negative total shedding cost of an allocation (transfers cancel)."""
    _, beta, _, _ = scenario.arrays()
    a = np.asarray(allocations, dtype=np.float64)
    return float(-np.sum(0.5 * beta * a * a))
