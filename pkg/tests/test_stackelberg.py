import math

import numpy as np
import pytest

from tecoord.errors import GradientDegenerate, InfeasibleCapacity, \
    NotIncentiveControllable, UnboundedTeam
from tecoord.model import AgentSpec, CoordinatorSpec, Scenario
from tecoord.stackelberg import IncentivePricing, construct_linear_incentive, \
    induced_best_response, per_agent_linear_incentives, solve_price_stackelberg, \
    solve_team_problem, verify_incentive_controllable
from tecoord.welfare import solve_social_welfare

from conftest import two_agent_scenario
from oracles import stackelberg_price_oracle


AGENT = AgentSpec(1, 10.0, 1.0, 0.0, 10.0)


class TestPriceLeader:
    def test_capacity_binds(self, capacity_scenario):
        # oracle: dense 1e-4 price scan with the capacity filter
        lam, payoff = stackelberg_price_oracle(capacity_scenario, "profit")
        assert lam == pytest.approx(7.0, abs=1e-3)
        assert payoff == pytest.approx(20.0, abs=1e-3)
        sol = solve_price_stackelberg(capacity_scenario, "profit")
        assert sol.price == pytest.approx(7.0, abs=1e-6)
        assert sol.outcome.allocations == pytest.approx([3.0, 1.0], abs=1e-6)
        assert sol.leader_payoff == pytest.approx(20.0, abs=1e-6)
        assert sol.outcome.total_allocation() <= 4.0 + 1e-9

    def test_unconstrained_profit(self, canonical):
        lam, payoff = stackelberg_price_oracle(canonical, "profit")
        assert lam == pytest.approx(6.75, abs=1e-3)
        sol = solve_price_stackelberg(canonical, "profit")
        assert sol.price == pytest.approx(6.75, abs=1e-6)
        assert sol.outcome.supply == pytest.approx(4.5, abs=1e-6)
        assert sol.leader_payoff == pytest.approx(20.25, abs=1e-8)

    def test_welfare_objective_recovers_competitive_price(self, canonical):
        sol = solve_price_stackelberg(canonical, "welfare")
        _, _, lam = solve_social_welfare(canonical)
        assert sol.price == pytest.approx(lam, abs=1e-4)

    def test_scan_certificate(self, capacity_scenario):
        sol = solve_price_stackelberg(capacity_scenario, "profit")
        feasible = sol.scan[sol.scan[:, 2] > 0.5]
        assert sol.leader_payoff >= feasible[:, 1].max() - 1e-9

    def test_infeasible_capacity(self):
        scenario = Scenario(
            agents=(AgentSpec(1, 10.0, 1.0, 3.0, 10.0),
                    AgentSpec(2, 8.0, 1.0, 3.0, 10.0)),
            coordinator=CoordinatorSpec(0.0, 1.0, 0.0, 100.0, capacity=4.0))
        with pytest.raises(InfeasibleCapacity):
            solve_price_stackelberg(scenario, "profit")

    def test_bad_objective(self, canonical):
        with pytest.raises(ValueError):
            solve_price_stackelberg(canonical, "revenue")


class TestTeamProblem:
    def test_bullseye(self):
        a, lam = solve_team_problem(lambda a, l: -(a - 5.0) ** 2 - (l - 6.0) ** 2,
                                    (0.0, 10.0), (0.0, 10.0))
        assert (a, lam) == pytest.approx((5.0, 6.0), abs=1e-6)

    def test_monotone_hits_the_corner(self):
        # payoff is float-flat within a grid step of the vertex, so the
        # smallest-coordinate tie-break sits just inside the corner
        a, lam = solve_team_problem(lambda a, l: l * a - 0.5 * a * a,
                                    (0.0, 10.0), (0.0, 10.0))
        assert (a, lam) == pytest.approx((10.0, 10.0), abs=1e-6)

    def test_constant_tie_break(self):
        a, lam = solve_team_problem(lambda a, l: 0.0 * a * l, (2.0, 9.0), (1.0, 4.0))
        assert (a, lam) == (2.0, 1.0)

    def test_unbounded_box(self):
        with pytest.raises(UnboundedTeam):
            solve_team_problem(lambda a, l: a + l, (0.0, math.inf), (0.0, 1.0))


class TestLinearIncentive:
    def test_worked_example(self):
        pricing = construct_linear_incentive(AGENT, (5.0, 6.0))
        # gradients (-1, -5) at the team point give slope 0.2
        assert pricing.slope == pytest.approx(0.2, abs=1e-12)
        assert float(pricing.price_at(5.0)) == pytest.approx(6.0)
        assert float(pricing.price_at(0.0)) == pytest.approx(7.0)

    def test_best_response_lands_on_team_point(self):
        pricing = construct_linear_incentive(AGENT, (5.0, 6.0))
        best = induced_best_response(pricing, AGENT)
        assert best == pytest.approx(5.0, abs=1e-4)
        induced_value = (10.0 * best - 0.5 * best ** 2
                         - float(pricing.price_at(best)) * best)
        assert induced_value == pytest.approx(7.5, abs=1e-6)

    def test_gradient_degenerate(self):
        # alpha - beta*a - lam = 10 - 4 - 6 = 0
        with pytest.raises(GradientDegenerate):
            construct_linear_incentive(AGENT, (4.0, 6.0))
        # zero team allocation kills the price gradient
        with pytest.raises(GradientDegenerate):
            construct_linear_incentive(AGENT, (0.0, 6.0))

    def test_non_concave_induced_problem_rejected(self):
        # team point (2, 10): slope 1.0 >= beta/2 flips the curvature
        with pytest.raises(NotIncentiveControllable):
            construct_linear_incentive(AGENT, (2.0, 10.0))

    def test_verify_accepts_constructed_pricing(self):
        pricing = construct_linear_incentive(AGENT, (5.0, 6.0))
        assert verify_incentive_controllable(pricing, AGENT, tol=1e-4)

    def test_verify_rejects_perturbed_slope(self):
        bad = IncentivePricing(team_allocation=5.0, team_price=6.0, slope=1.0)
        assert not verify_incentive_controllable(bad, AGENT, tol=1e-4)

    def test_flat_pricing_at_the_demand_point(self):
        # with slope 0, the team allocation must equal the myopic demand
        flat = IncentivePricing(team_allocation=4.0, team_price=6.0, slope=0.0)
        assert verify_incentive_controllable(flat, AGENT, tol=1e-4)
        off = IncentivePricing(team_allocation=5.0, team_price=6.0, slope=0.0)
        assert not verify_incentive_controllable(off, AGENT, tol=1e-4)

    def test_leader_value_reaches_team_value(self):
        # once the pricing verifies, the leader realizes the team payoff
        def payoff(a, lam):
            return -(a - 5.0) ** 2 - (lam - 6.0) ** 2

        team = solve_team_problem(payoff, (AGENT.a_min, AGENT.a_max), (0.0, 20.0))
        pricing = construct_linear_incentive(AGENT, team)
        best = induced_best_response(pricing, AGENT)
        leader_value = payoff(best, float(pricing.price_at(best)))
        assert leader_value == pytest.approx(payoff(*reversed(team)), abs=1e-6) or \
            leader_value == pytest.approx(payoff(team[0], team[1]), abs=1e-6)

    def test_per_agent_designs(self):
        scenario = two_agent_scenario()

        def factory(agent):
            target = agent.alpha / 2.0 - 1.0
            return lambda a, lam: -(a - target) ** 2 - (lam - 4.0) ** 2

        designs = per_agent_linear_incentives(scenario, factory, (0.0, 20.0))
        assert len(designs) == 2
        for agent, team, pricing in designs:
            assert verify_incentive_controllable(pricing, agent, tol=1e-4)
            assert float(pricing.price_at(team[0])) == pytest.approx(team[1])
