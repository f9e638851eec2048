import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tecoord.corpus import generate_corpus
from tecoord.errors import NeedTwoAgents, NoPureNash, ScenarioInvalid, \
    TypeOffSupport, ZeroBidSum
from tecoord.games import BestResponseConfig, FiniteGame, GameSolution, \
    SupplyBidProfile, bayesian_expected_payoff, clear_supply_function, \
    efficient_shedding, epsilon_of_profile, is_dominant_profile, \
    shedding_welfare, solve_nash_finite, supply_function_nash
from tecoord.model import AgentSpec, CoordinatorSpec, Scenario, TypePrior

from conftest import two_agent_scenario


def matrix_game(rows):
    """Two-player game from a list-of-lists of payoff pairs."""
    return FiniteGame(
        strategy_sets=(tuple(range(len(rows))), tuple(range(len(rows[0])))),
        payoff=lambda p: rows[p[0]][p[1]])


PRISONERS = matrix_game([[(-1, -1), (-3, 0)], [(0, -3), (-2, -2)]])
PENNIES = matrix_game([[(1, -1), (-1, 1)], [(-1, 1), (1, -1)]])
COORDINATION = matrix_game([[(2, 2), (0, 0)], [(0, 0), (1, 1)]])


class TestEpsilon:
    def test_defection_is_exact(self):
        assert epsilon_of_profile(PRISONERS, (1, 1)) == 0.0

    def test_cooperation_gap(self):
        # both unilateral deviations gain 0 - (-1) = 1
        assert epsilon_of_profile(PRISONERS, (0, 0)) == pytest.approx(1.0)

    def test_single_player_argmax(self):
        game = FiniteGame(strategy_sets=((0, 1, 2),),
                          payoff=lambda p: (float(p[0] * (2 - p[0])),))
        assert epsilon_of_profile(game, (1,)) == 0.0
        assert epsilon_of_profile(game, (0,)) == pytest.approx(1.0)


class TestNashEnumeration:
    def test_prisoners_dilemma(self):
        solutions = solve_nash_finite(PRISONERS)
        assert [s.profile for s in solutions] == [(1, 1)]

    def test_matching_pennies_has_none(self):
        with pytest.raises(NoPureNash):
            solve_nash_finite(PENNIES)

    def test_coordination_has_two(self):
        profiles = {s.profile for s in solve_nash_finite(COORDINATION)}
        assert profiles == {(0, 0), (1, 1)}

    def test_agrees_with_epsilon_definition(self):
        rng = np.random.default_rng(50)
        for _ in range(50):
            shape = rng.integers(2, 4, size=int(rng.integers(2, 4)))
            table = rng.integers(-3, 4, size=(*shape, len(shape))).astype(float)
            game = FiniteGame(
                strategy_sets=tuple(tuple(range(s)) for s in shape),
                payoff=lambda p, t=table: t[p])
            by_eps = {p for p in game.profiles()
                      if epsilon_of_profile(game, p) <= 1e-12}
            try:
                found = {s.profile for s in solve_nash_finite(game)}
            except NoPureNash:
                found = set()
            assert found == by_eps


class TestDominance:
    def test_prisoners_dilemma(self):
        assert is_dominant_profile(PRISONERS, (1, 1))

    def test_coordination_is_not_dominant(self):
        assert not is_dominant_profile(COORDINATION, (0, 0))

    def test_single_player(self):
        game = FiniteGame(strategy_sets=((0, 1),), payoff=lambda p: (float(p[0]),))
        assert is_dominant_profile(game, (1,))

    def test_dominant_implies_nash(self):
        rng = np.random.default_rng(51)
        for _ in range(40):
            shape = rng.integers(2, 4, size=2)
            table = rng.integers(-3, 4, size=(*shape, 2)).astype(float)
            game = FiniteGame(
                strategy_sets=tuple(tuple(range(s)) for s in shape),
                payoff=lambda p, t=table: t[p])
            for profile in game.profiles():
                if is_dominant_profile(game, profile):
                    assert epsilon_of_profile(game, profile) <= 1e-12


class TestBayesianPayoff:
    def prior(self):
        return TypePrior(support=(("L", "H"), ("L", "H")),
                         weights=((0.5, 0.5), (0.25, 0.75)))

    def test_deterministic_prior_reduces_to_complete_information(self):
        prior = TypePrior(support=(("x",), ("y",)), weights=((1.0,), (1.0,)))
        game = matrix_game([[(3, 0), (1, 2)], [(0, 0), (2, 2)]])
        value = bayesian_expected_payoff(
            lambda types: game, prior,
            strategies=({"x": 0}, {"y": 1}), player=0, theta="x")
        assert value == pytest.approx(1.0)

    def test_constant_payoff_across_types(self):
        game = matrix_game([[(7, 7), (7, 7)], [(7, 7), (7, 7)]])
        value = bayesian_expected_payoff(
            lambda types: game, self.prior(),
            strategies=({"L": 0, "H": 1}, {"L": 0, "H": 1}),
            player=0, theta="L")
        assert value == pytest.approx(7.0)

    def test_hand_enumerated_expectation(self):
        # payoff to player 0 depends on the opponent's type through the game
        def family(types):
            bonus = 10.0 if types[1] == "H" else 0.0
            return matrix_game([[(1 + bonus, 0), (2 + bonus, 0)],
                                [(3 + bonus, 0), (4 + bonus, 0)]])

        strategies = ({"L": 0, "H": 1}, {"L": 0, "H": 1})
        value = bayesian_expected_payoff(family, self.prior(), strategies,
                                         player=0, theta="L")
        # opponent L (w=.25): plays 0 -> payoff 1; opponent H (w=.75): plays 1 -> 12
        assert value == pytest.approx(0.25 * 1.0 + 0.75 * 12.0)

    def test_off_support_type(self):
        with pytest.raises(TypeOffSupport):
            bayesian_expected_payoff(lambda t: PRISONERS, self.prior(),
                                     ({"L": 0, "H": 0}, {"L": 0, "H": 0}),
                                     player=0, theta="M")


class TestSupplyFunctionClearing:
    def test_symmetric_bids(self):
        out = clear_supply_function([1.0, 1.0], 6.0)
        assert out.uniform_price() == pytest.approx(3.0)
        assert out.allocations == pytest.approx([3.0, 3.0])

    def test_direct_substitution(self):
        out = clear_supply_function([3.0, 1.0], 8.0)
        assert out.uniform_price() == pytest.approx(2.0)
        assert out.allocations == pytest.approx([6.0, 2.0])
        assert out.payments == pytest.approx([12.0, 4.0])  # paid for shedding

    def test_zero_bid_sum(self):
        with pytest.raises(ZeroBidSum):
            clear_supply_function([0.0, 0.0], 5.0)

    @settings(deadline=None, max_examples=100)
    @given(bids=st.lists(st.floats(0.0, 50.0), min_size=2, max_size=6),
           deficit=st.floats(0.1, 100.0))
    def test_deficit_met_exactly(self, bids, deficit):
        b = np.asarray(bids)
        if b.sum() <= 0.0 or not np.isfinite(deficit / b.sum()):
            with pytest.raises(ZeroBidSum):
                clear_supply_function(b, deficit)
            return
        out = clear_supply_function(b, deficit)
        scale = len(b) * np.spacing(max(deficit, 1.0))
        assert abs(out.total_allocation() - deficit) <= 4 * scale
        # allocations proportional to bids (skip underflow-tiny bids)
        pos = b > 1e-12 * b.max()
        ratios = np.asarray(out.allocations)[pos] / b[pos]
        assert np.ptp(ratios) <= 1e-9 * (1.0 + ratios.max())


def shedding_scenario(betas, deficit):
    agents = tuple(AgentSpec(i + 1, 10.0, b, 0.0, 100.0)
                   for i, b in enumerate(betas))
    coord = CoordinatorSpec(0.0, 1.0, 0.0, 1000.0, deficit=deficit)
    return Scenario(agents=agents, coordinator=coord)


class TestSupplyFunctionNash:
    def test_symmetric_pair_splits_evenly(self):
        bids, solution = supply_function_nash(shedding_scenario((1.0, 1.0), 2.0))
        out = clear_supply_function(bids, 2.0)
        assert out.allocations == pytest.approx([1.0, 1.0], abs=1e-6)
        assert solution.epsilon <= 1e-6
        assert solution.concept == "epsilon-nash"

    def test_cheaper_agent_sheds_more(self):
        bids, solution = supply_function_nash(shedding_scenario((1.0, 2.0), 3.0))
        out = clear_supply_function(bids, 3.0)
        assert out.allocations[0] > out.allocations[1]
        assert solution.epsilon <= 1e-6

    def test_single_agent_rejected(self):
        with pytest.raises(NeedTwoAgents):
            supply_function_nash(shedding_scenario((1.0,), 2.0))

    def test_deficit_required(self):
        scenario = two_agent_scenario()
        with pytest.raises(ScenarioInvalid):
            supply_function_nash(scenario)

    def test_never_beats_the_efficient_split(self):
        for scenario in generate_corpus(31, 5, n_agents=3, capacity=False,
                                        deficit=True, prior=False):
            bids, solution = supply_function_nash(scenario)
            out = clear_supply_function(bids, scenario.coordinator.deficit)
            realized = shedding_welfare(out.allocations, scenario)
            best = shedding_welfare(efficient_shedding(scenario), scenario)
            assert realized <= best + 1e-9
            assert solution.epsilon <= 1e-6
