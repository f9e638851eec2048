"""Domain model: agents, coordinator, scenarios, and information structure.

A coordination instance is one coordinator (node 0) plus N resource
agents. Agent preferences over an energy allocation ``a`` are quadratic,
``V(a) = alpha*a - beta*a^2/2`` with ``beta > 0``, so marginal utility is
the line ``alpha - beta*a``. The coordinator procures energy ``y`` at
convex quadratic cost ``C(y) = c1*y + c2*y^2/2``. Both choices admit
closed-form demand and supply curves, which keeps every solver in this
package checkable against brute-force search.

All types are immutable after construction and every operation is pure.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import BadDimensions, DegenerateSupply, NotAPartition, ScenarioInvalid
from .jsonio import canonical_dumps


@dataclass(frozen=True)
class AgentSpec:
    """One flexible resource: utility type (alpha, beta) and allocation box.

    ``alpha`` is the marginal-utility intercept (currency per energy
    unit), ``beta`` the marginal-utility slope (currency per energy
    unit squared, strictly positive). Allocations live in
    ``[a_min, a_max]`` with ``0 <= a_min <= a_max``.
    """

    id: int
    alpha: float
    beta: float
    a_min: float
    a_max: float

    def __post_init__(self):
        if not math.isfinite(self.alpha):
            raise ScenarioInvalid(f"agent {self.id}: alpha must be finite")
        if not (self.beta > 0.0) or not math.isfinite(self.beta):
            raise ScenarioInvalid(f"agent {self.id}: beta must be > 0")
        if not (0.0 <= self.a_min <= self.a_max):
            raise ScenarioInvalid(
                f"agent {self.id}: bounds must satisfy 0 <= a_min <= a_max")

    @property
    def theta(self):
        return (self.alpha, self.beta)


@dataclass(frozen=True)
class CoordinatorSpec:
    """Coordinator cost C(y) = c1*y + c2*y^2/2 and supply range [y_min, y_max].

    ``capacity`` is the optional per-period energy limit D on total
    allocation; ``deficit`` is the optional load-shedding target d used
    by supply-function markets.
    """

    c1: float
    c2: float
    y_min: float
    y_max: float
    capacity: float | None = None
    deficit: float | None = None

    def __post_init__(self):
        if self.c2 < 0.0:
            raise ScenarioInvalid("coordinator: c2 must be >= 0")
        if self.y_min > self.y_max:
            raise ScenarioInvalid("coordinator: y_min must be <= y_max")
        if self.capacity is not None and not (self.capacity > 0.0):
            raise ScenarioInvalid("coordinator: capacity must be > 0 when present")
        if self.deficit is not None and not (self.deficit > 0.0):
            raise ScenarioInvalid("coordinator: deficit must be > 0 when present")

    def cost(self, y: float) -> float:
        return self.c1 * y + 0.5 * self.c2 * y * y


@dataclass(frozen=True)
class TypePrior:
    """Finite, per-agent type distribution (independent across agents).

    ``support[i]`` lists agent i's possible (alpha, beta) types and
    ``weights[i]`` the matching probabilities, which must sum to one.
    """

    support: tuple
    weights: tuple
    independent: bool = True

    def __post_init__(self):
        if len(self.support) != len(self.weights):
            raise ScenarioInvalid("prior: support and weights must align per agent")
        for i, (types, w) in enumerate(zip(self.support, self.weights)):
            if len(types) == 0 or len(types) != len(w):
                raise ScenarioInvalid(f"prior: agent {i + 1} support/weights mismatch")
            if any(p < 0.0 for p in w):
                raise ScenarioInvalid(f"prior: agent {i + 1} has negative weight")
            if abs(sum(w) - 1.0) > 1e-12:
                raise ScenarioInvalid(f"prior: agent {i + 1} weights must sum to 1")

    def n_agents(self) -> int:
        return len(self.support)


@dataclass(frozen=True)
class Scenario:
    """A full coordination instance: agents, coordinator, optional prior."""

    agents: tuple
    coordinator: CoordinatorSpec
    prior: TypePrior | None = None

    def __post_init__(self):
        if len(self.agents) == 0:
            raise ScenarioInvalid("scenario needs at least one agent")
        ids = [a.id for a in self.agents]
        if ids != list(range(1, len(ids) + 1)):
            raise ScenarioInvalid("agent ids must be contiguous 1..N in order")
        if self.prior is not None and self.prior.n_agents() != len(self.agents):
            raise ScenarioInvalid("prior must cover every agent")

    @property
    def n(self) -> int:
        return len(self.agents)

    def arrays(self):
        """(alpha, beta, a_min, a_max) as float64 arrays, agent order."""
        alpha = np.array([a.alpha for a in self.agents], dtype=np.float64)
        beta = np.array([a.beta for a in self.agents], dtype=np.float64)
        a_lo = np.array([a.a_min for a in self.agents], dtype=np.float64)
        a_hi = np.array([a.a_max for a in self.agents], dtype=np.float64)
        return alpha, beta, a_lo, a_hi


def _readonly(arr):
    out = np.asarray(arr, dtype=np.float64).copy()
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class MarketOutcome:
    """Allocations, supplied energy, price(s), and payments of one market run.

    ``price`` is a scalar for a uniform price or a length-N read-only
    array for per-agent prices. ``payments[i]`` is money paid *to* agent
    i; consumers therefore carry negative payments.
    """

    allocations: np.ndarray
    supply: float
    price: object
    payments: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "allocations", _readonly(self.allocations))
        object.__setattr__(self, "payments", _readonly(self.payments))
        if np.ndim(self.price) > 0:
            object.__setattr__(self, "price", _readonly(self.price))
            if len(self.price) != len(self.allocations):
                raise ScenarioInvalid("per-agent price vector must have length N")
        if len(self.payments) != len(self.allocations):
            raise ScenarioInvalid("payments must have length N")

    @property
    def uniform(self) -> bool:
        return np.ndim(self.price) == 0

    def uniform_price(self) -> float:
        if not self.uniform:
            raise ValueError("outcome carries per-agent prices, not a uniform one")
        return float(self.price)

    def total_allocation(self) -> float:
        return float(np.sum(self.allocations))


@dataclass(frozen=True)
class InformationStructure:
    """Who knows whose type and whose decision, over nodes 0..N.

    ``type_edges`` holds (j, i) when agent i knows agent j's type;
    ``decision_edges`` holds (j, i) when i observes j's decision, which
    happens exactly when i moves at a strictly later stage than j.
    """

    n_nodes: int
    type_edges: frozenset
    decision_edges: frozenset
    stages: tuple

    def __post_init__(self):
        expected = build_decision_graph(self.stages, n_nodes=self.n_nodes)
        if expected != self.decision_edges:
            raise ScenarioInvalid("decision edges inconsistent with stage order")


# --------------------------------------------------------------------------
# operations


def utility_value(a: float, theta) -> float:
    """Consumption utility alpha*a - beta*a^2/2 of allocation ``a``."""
    alpha, beta = theta
    return alpha * a - 0.5 * beta * a * a


def demand(price: float, agent: AgentSpec) -> float:
    """The agent's payoff-maximizing allocation at a posted uniform price.

    Unique maximizer of ``V(a) - price*a`` on the allocation box, i.e.
    ``(alpha - price)/beta`` clamped to ``[a_min, a_max]``.
    """
    return min(max((agent.alpha - price) / agent.beta, agent.a_min), agent.a_max)


def demand_vector(price: float, scenario: Scenario) -> np.ndarray:
    """Closed-form demands of every agent at one uniform price."""
    alpha, beta, a_lo, a_hi = scenario.arrays()
    return _kernels.demand_profile(price, alpha, beta, a_lo, a_hi)


def supply(price: float, coordinator: CoordinatorSpec) -> float:
    """The coordinator's profit-maximizing production at a given price.

    Maximizes ``price*y - C(y)`` over [y_min, y_max]. With linear cost
    (c2 = 0) the maximizer only exists when the relevant bound is
    finite; exact price ties resolve to y_min.
    """
    if coordinator.c2 == 0.0:
        if price > coordinator.c1 and not math.isfinite(coordinator.y_max):
            raise DegenerateSupply("linear cost, price above c1, unbounded above")
        if price < coordinator.c1 and not math.isfinite(coordinator.y_min):
            raise DegenerateSupply("linear cost, price below c1, unbounded below")
    return float(_kernels.supply_amount(price, coordinator.c1, coordinator.c2,
                                        coordinator.y_min, coordinator.y_max))


def build_type_graph(knowledge) -> frozenset:
    """Edges (j, i) of the type-dependence graph from a knowledge matrix.

    ``knowledge[i][j]`` is True when agent i knows agent j's type. The
    matrix is (N+1) x (N+1) with node 0 the coordinator; the diagonal
    must be True for resource agents (one knows one's own type). Self
    knowledge draws no edge.
    """
    mat = np.asarray(knowledge, dtype=bool)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise BadDimensions(f"knowledge matrix must be square, got {mat.shape}")
    n = mat.shape[0]
    for i in range(1, n):
        if not mat[i, i]:
            raise BadDimensions(f"resource agent {i} must know its own type")
    return frozenset((j, i) for i in range(n) for j in range(n)
                     if i != j and mat[i, j])


def build_decision_graph(stages, n_nodes: int | None = None) -> frozenset:
    """Edges (j, i) whenever i decides at a strictly later stage than j.

    ``stages`` is an ordered partition of node ids {0..N}; raises
    NotAPartition on overlaps or gaps.
    """
    seen = set()
    for group in stages:
        for node in group:
            if node in seen:
                raise NotAPartition(f"node {node} appears in two stages")
            seen.add(node)
    if n_nodes is None:
        n_nodes = len(seen)
    if seen != set(range(n_nodes)):
        raise NotAPartition(f"stages must cover exactly nodes 0..{n_nodes - 1}")
    edges = []
    for m, group in enumerate(stages):
        for earlier in stages[:m]:
            edges.extend((j, i) for j in earlier for i in group)
    return frozenset(edges)


# --------------------------------------------------------------------------
# scenario files

_AGENT_KEYS = {"id", "alpha", "beta", "a_min", "a_max"}
_COORD_KEYS = {"c1", "c2", "y_min", "y_max", "capacity", "deficit"}
_PRIOR_KEYS = {"support", "weights", "independent"}
_TOP_KEYS = {"agents", "coordinator", "prior"}


def _require_keys(mapping, allowed, required, where):
    unknown = set(mapping) - allowed
    if unknown:
        raise ScenarioInvalid(f"{where}: unknown keys {sorted(unknown)}")
    missing = required - set(mapping)
    if missing:
        raise ScenarioInvalid(f"{where}: missing keys {sorted(missing)}")


def _num(value, where):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioInvalid(f"{where}: expected a number, got {value!r}")
    return float(value)


def scenario_from_dict(doc) -> Scenario:
    """Build and validate a Scenario from a parsed JSON document."""
    if not isinstance(doc, dict):
        raise ScenarioInvalid("scenario document must be a JSON object")
    _require_keys(doc, _TOP_KEYS, {"agents", "coordinator"}, "scenario")

    agents = []
    for entry in doc["agents"]:
        _require_keys(entry, _AGENT_KEYS, _AGENT_KEYS, "agent")
        agents.append(AgentSpec(
            id=int(entry["id"]),
            alpha=_num(entry["alpha"], "agent.alpha"),
            beta=_num(entry["beta"], "agent.beta"),
            a_min=_num(entry["a_min"], "agent.a_min"),
            a_max=_num(entry["a_max"], "agent.a_max"),
        ))

    coord = doc["coordinator"]
    _require_keys(coord, _COORD_KEYS, {"c1", "c2", "y_min", "y_max"}, "coordinator")
    coordinator = CoordinatorSpec(
        c1=_num(coord["c1"], "coordinator.c1"),
        c2=_num(coord["c2"], "coordinator.c2"),
        y_min=_num(coord["y_min"], "coordinator.y_min"),
        y_max=_num(coord["y_max"], "coordinator.y_max"),
        capacity=_num(coord["capacity"], "capacity") if "capacity" in coord else None,
        deficit=_num(coord["deficit"], "deficit") if "deficit" in coord else None,
    )

    prior = None
    if "prior" in doc and doc["prior"] is not None:
        p = doc["prior"]
        _require_keys(p, _PRIOR_KEYS, {"support", "weights"}, "prior")
        support = tuple(
            tuple((_num(t[0], "prior support"), _num(t[1], "prior support"))
                  for t in agent_types)
            for agent_types in p["support"])
        weights = tuple(tuple(_num(w, "prior weight") for w in agent_w)
                        for agent_w in p["weights"])
        prior = TypePrior(support=support, weights=weights,
                          independent=bool(p.get("independent", True)))

    return Scenario(agents=tuple(agents), coordinator=coordinator, prior=prior)


def scenario_to_dict(scenario: Scenario) -> dict:
    doc = {
        "agents": [
            {"id": a.id, "alpha": a.alpha, "beta": a.beta,
             "a_min": a.a_min, "a_max": a.a_max}
            for a in scenario.agents
        ],
        "coordinator": {
            "c1": scenario.coordinator.c1,
            "c2": scenario.coordinator.c2,
            "y_min": scenario.coordinator.y_min,
            "y_max": scenario.coordinator.y_max,
        },
    }
    if scenario.coordinator.capacity is not None:
        doc["coordinator"]["capacity"] = scenario.coordinator.capacity
    if scenario.coordinator.deficit is not None:
        doc["coordinator"]["deficit"] = scenario.coordinator.deficit
    if scenario.prior is not None:
        doc["prior"] = {
            "support": [[list(t) for t in types] for types in scenario.prior.support],
            "weights": [list(w) for w in scenario.prior.weights],
            "independent": scenario.prior.independent,
        }
    return doc


def load_scenario(path) -> Scenario:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ScenarioInvalid(f"scenario file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ScenarioInvalid(f"scenario file {path} is not valid JSON: {exc}")
    return scenario_from_dict(doc)


def save_scenario(path, scenario: Scenario) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(scenario_dumps(scenario))


def scenario_dumps(scenario: Scenario) -> str:
    return canonical_dumps(scenario_to_dict(scenario))
