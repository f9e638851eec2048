"""Deterministic random-scenario generation for the property suites.

Same seed, same shape parameters: identical scenarios and identical
files, byte for byte.
"""

import os

import numpy as np

from .model import AgentSpec, CoordinatorSpec, Scenario, TypePrior, save_scenario


def random_scenario(rng, n_agents: int | None = None, capacity: bool = True,
                    deficit: bool = False, prior: bool = True) -> Scenario:
    """Draw one scenario: alpha in [4,16], beta in [0.5,2], boxes [0, 2*alpha/beta].

    The optional capacity sits at 60% of the unconstrained total demand
    at price zero, so it always binds; the optional shedding deficit at
    40% of the same total. The prior is a uniform two-point spread of
    each agent's alpha.
    """
    n = int(n_agents) if n_agents else int(rng.integers(2, 4))
    alpha = rng.uniform(4.0, 16.0, n)
    beta = rng.uniform(0.5, 2.0, n)
    a_max = 2.0 * alpha / beta
    free_demand = float(np.sum(alpha / beta))
    c2 = float(rng.uniform(0.5, 2.0))
    agents = tuple(
        AgentSpec(id=i + 1, alpha=float(alpha[i]), beta=float(beta[i]),
                  a_min=0.0, a_max=float(a_max[i]))
        for i in range(n))
    coordinator = CoordinatorSpec(
        c1=0.0, c2=c2, y_min=0.0, y_max=float(np.sum(a_max)),
        capacity=0.6 * free_demand if capacity else None,
        deficit=0.4 * free_demand if deficit else None)
    type_prior = None
    if prior:
        type_prior = TypePrior(
            support=tuple(((0.8 * a.alpha, a.beta), (1.2 * a.alpha, a.beta))
                          for a in agents),
            weights=tuple((0.5, 0.5) for _ in agents),
            independent=True)
    return Scenario(agents=agents, coordinator=coordinator, prior=type_prior)


def generate_corpus(seed: int, count: int, n_agents: int | None = None,
                    capacity: bool = True, deficit: bool = False,
                    prior: bool = True):
    """A reproducible list of scenarios drawn from one seeded stream."""
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(seed)
    return [random_scenario(rng, n_agents=n_agents, capacity=capacity,
                            deficit=deficit, prior=prior)
            for _ in range(count)]


def write_corpus(out_dir, seed: int, count: int, **shape):
    """Write scenario_###.json files under ``out_dir``; returns the paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for k, scenario in enumerate(generate_corpus(seed, count, **shape)):
        path = os.path.join(out_dir, f"scenario_{k:03d}.json")
        save_scenario(path, scenario)
        paths.append(path)
    return paths
