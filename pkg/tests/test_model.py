import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tecoord.errors import BadDimensions, DegenerateSupply, NotAPartition, \
    ScenarioInvalid
from tecoord.model import AgentSpec, CoordinatorSpec, InformationStructure, \
    Scenario, TypePrior, build_decision_graph, build_type_graph, demand, \
    load_scenario, scenario_dumps, scenario_from_dict, supply, utility_value

from oracles import demand_oracle, supply_oracle


def agent(alpha=10.0, beta=1.0, lo=0.0, hi=10.0, id=1):
    return AgentSpec(id=id, alpha=alpha, beta=beta, a_min=lo, a_max=hi)


class TestUtility:
    def test_zero_allocation(self):
        assert utility_value(0.0, (10.0, 1.0)) == 0.0
        assert utility_value(0.0, (-3.0, 2.5)) == 0.0

    def test_known_value(self):
        assert utility_value(4.0, (10.0, 1.0)) == pytest.approx(32.0)

    def test_vertex(self):
        # unconstrained maximum at alpha/beta with value alpha^2/(2 beta)
        assert utility_value(10.0, (10.0, 1.0)) == pytest.approx(50.0)
        grid = np.linspace(0, 20, 20001)
        assert np.max(utility_value(grid, (10.0, 1.0))) <= 50.0 + 1e-12


class TestDemand:
    def test_interior(self):
        # frozen from the grid oracle: argmax of V(a) - 6a on [0, 10]
        oracle = demand_oracle(6.0, 10.0, 1.0, 0.0, 10.0)
        assert oracle == pytest.approx(4.0, abs=1e-3)
        assert demand(6.0, agent()) == pytest.approx(4.0)

    def test_priced_out(self):
        assert demand(10.0, agent()) == 0.0
        assert demand(12.0, agent()) == 0.0

    def test_clamped_at_cap(self):
        assert demand(0.0, agent(hi=4.0)) == pytest.approx(4.0)

    @settings(deadline=None, max_examples=50)
    @given(price=st.floats(-5, 25), alpha=st.floats(1, 20), beta=st.floats(0.1, 5),
           hi=st.floats(0.5, 30))
    def test_matches_grid_oracle(self, price, alpha, beta, hi):
        a = agent(alpha=alpha, beta=beta, lo=0.0, hi=hi)
        assert demand(price, a) == pytest.approx(
            demand_oracle(price, alpha, beta, 0.0, hi), abs=hi * 2e-5 + 1e-9)

    @settings(deadline=None, max_examples=30)
    @given(alpha=st.floats(1, 20), beta=st.floats(0.1, 5))
    def test_nonincreasing_in_price(self, alpha, beta):
        a = agent(alpha=alpha, beta=beta)
        prices = np.linspace(-5, 25, 101)
        curve = [demand(p, a) for p in prices]
        assert all(x >= y - 1e-12 for x, y in zip(curve, curve[1:]))


class TestSupply:
    def test_interior(self):
        coord = CoordinatorSpec(0.0, 1.0, 0.0, 100.0)
        oracle = supply_oracle(6.0, 0.0, 1.0, 0.0, 100.0)
        assert oracle == pytest.approx(6.0, abs=1e-2)
        assert supply(6.0, coord) == pytest.approx(6.0)

    def test_price_at_marginal_cost(self):
        assert supply(3.0, CoordinatorSpec(3.0, 2.0, 0.0, 50.0)) == 0.0

    def test_clamped_at_cap(self):
        assert supply(20.0, CoordinatorSpec(0.0, 1.0, 0.0, 10.0)) == 10.0

    def test_nondecreasing_in_price(self):
        coord = CoordinatorSpec(1.0, 0.7, 0.0, 40.0)
        prices = np.linspace(-5, 40, 101)
        curve = [supply(p, coord) for p in prices]
        assert all(x <= y + 1e-12 for x, y in zip(curve, curve[1:]))

    def test_degenerate_linear_cost(self):
        unbounded = CoordinatorSpec(2.0, 0.0, 0.0, math.inf)
        with pytest.raises(DegenerateSupply):
            supply(3.0, unbounded)
        # exact tie resolves to the lower bound
        assert supply(2.0, unbounded) == 0.0
        bounded = CoordinatorSpec(2.0, 0.0, 1.0, 9.0)
        assert supply(3.0, bounded) == 9.0
        assert supply(1.0, bounded) == 1.0


class TestTypeGraph:
    def test_coordinator_knows_all(self):
        n = 3
        know = np.eye(n + 1, dtype=bool)
        know[0, :] = True  # the coordinator knows every type
        edges = build_type_graph(know)
        assert edges == frozenset({(1, 0), (2, 0), (3, 0)})

    def test_private_types(self):
        know = np.eye(4, dtype=bool)
        assert build_type_graph(know) == frozenset()

    def test_self_knowledge_draws_no_edge(self):
        assert build_type_graph(np.eye(2, dtype=bool)) == frozenset()

    def test_rejects_bad_shapes(self):
        with pytest.raises(BadDimensions):
            build_type_graph(np.ones((2, 3), dtype=bool))
        missing_self = np.zeros((3, 3), dtype=bool)
        with pytest.raises(BadDimensions):
            build_type_graph(missing_self)


class TestDecisionGraph:
    def test_leader_then_followers(self):
        edges = build_decision_graph([{0}, {1, 2, 3}])
        assert edges == frozenset({(0, 1), (0, 2), (0, 3)})

    def test_simultaneous_play(self):
        assert build_decision_graph([{0, 1, 2}]) == frozenset()

    def test_total_order(self):
        edges = build_decision_graph([{0}, {1}, {2}])
        assert edges == frozenset({(0, 1), (0, 2), (1, 2)})

    def test_rejects_overlap_and_gap(self):
        with pytest.raises(NotAPartition):
            build_decision_graph([{0, 1}, {1, 2}])
        with pytest.raises(NotAPartition):
            build_decision_graph([{0}, {2}], n_nodes=3)

    def test_acyclic_and_transitively_closed(self):
        stages = [{2}, {0, 3}, {1}, {4}]
        edges = build_decision_graph(stages)
        stage_of = {node: m for m, group in enumerate(stages) for node in group}
        # edges only run forward in stage order: no cycles possible
        assert all(stage_of[j] < stage_of[i] for j, i in edges)
        # transitive closure over the stage order
        for (j, i) in edges:
            for (jj, ii) in edges:
                if i == jj:
                    assert (j, ii) in edges

    def test_information_structure_consistency(self):
        stages = ({0}, {1, 2})
        good = build_decision_graph(stages)
        InformationStructure(3, frozenset(), good, stages)
        with pytest.raises(ScenarioInvalid):
            InformationStructure(3, frozenset(), frozenset({(1, 0)}), stages)


class TestValidation:
    def test_beta_positive(self):
        with pytest.raises(ScenarioInvalid):
            AgentSpec(1, 10.0, 0.0, 0.0, 1.0)

    def test_bounds_ordered(self):
        with pytest.raises(ScenarioInvalid):
            AgentSpec(1, 10.0, 1.0, 5.0, 1.0)
        with pytest.raises(ScenarioInvalid):
            AgentSpec(1, 10.0, 1.0, -1.0, 1.0)

    def test_agent_ids_contiguous(self):
        coord = CoordinatorSpec(0.0, 1.0, 0.0, 10.0)
        with pytest.raises(ScenarioInvalid):
            Scenario(agents=(agent(id=2),), coordinator=coord)
        with pytest.raises(ScenarioInvalid):
            Scenario(agents=(), coordinator=coord)

    def test_prior_weights_sum(self):
        with pytest.raises(ScenarioInvalid):
            TypePrior(support=(((10.0, 1.0),),), weights=((0.7,),))
        with pytest.raises(ScenarioInvalid):
            TypePrior(support=(((10.0, 1.0), (8.0, 1.0)),), weights=((1.2, -0.2),))


class TestScenarioFiles:
    def doc(self):
        return {
            "agents": [
                {"id": 1, "alpha": 10.0, "beta": 1.0, "a_min": 0.0, "a_max": 10.0},
                {"id": 2, "alpha": 8.0, "beta": 1.0, "a_min": 0.0, "a_max": 10.0},
            ],
            "coordinator": {"c1": 0.0, "c2": 1.0, "y_min": 0.0, "y_max": 100.0,
                            "capacity": 4.0},
            "prior": {"support": [[[10.0, 1.0]], [[8.0, 1.0]]],
                      "weights": [[1.0], [1.0]], "independent": True},
        }

    def test_round_trip(self, tmp_path):
        scenario = scenario_from_dict(self.doc())
        path = tmp_path / "s.json"
        path.write_text(scenario_dumps(scenario))
        again = load_scenario(path)
        assert again == scenario
        # serialization is canonical: a second round trip is byte-identical
        assert scenario_dumps(again) == scenario_dumps(scenario)

    def test_unknown_keys_rejected(self):
        doc = self.doc()
        doc["comment"] = "nope"
        with pytest.raises(ScenarioInvalid):
            scenario_from_dict(doc)
        doc = self.doc()
        doc["agents"][0]["color"] = "red"
        with pytest.raises(ScenarioInvalid):
            scenario_from_dict(doc)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ScenarioInvalid):
            load_scenario(tmp_path / "nope.json")

    def test_numbers_only(self):
        doc = self.doc()
        doc["coordinator"]["c1"] = "zero"
        with pytest.raises(ScenarioInvalid):
            scenario_from_dict(doc)
