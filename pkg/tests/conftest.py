import pytest

from tecoord.model import AgentSpec, CoordinatorSpec, Scenario, TypePrior


def two_agent_scenario(capacity=None, deficit=None):
    """The canonical pair: types (10,1) and (8,1), cost y^2/2."""
    return Scenario(
        agents=(AgentSpec(1, 10.0, 1.0, 0.0, 10.0),
                AgentSpec(2, 8.0, 1.0, 0.0, 10.0)),
        coordinator=CoordinatorSpec(0.0, 1.0, 0.0, 100.0,
                                    capacity=capacity, deficit=deficit))


@pytest.fixture
def canonical():
    return two_agent_scenario()


@pytest.fixture
def capacity_scenario():
    return two_agent_scenario(capacity=4.0)


@pytest.fixture
def two_type_prior():
    return TypePrior(
        support=(((8.0, 1.0), (12.0, 1.0)), ((6.0, 1.0), (10.0, 1.0))),
        weights=((0.5, 0.5), (0.5, 0.5)))
