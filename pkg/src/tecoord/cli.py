"""Command-line interface: scenario ingestion, dispatch, report emission.

Reports are canonical JSON (sorted keys, 17-significant-digit floats):
identical inputs and seed give byte-identical reports. Iteration traces
and scan grids go to CSV sidecars instead of being embedded. Exit codes:
0 success, 2 validation error, 3 solver non-convergence.
"""

import argparse
import dataclasses
import json
import sys
import time

import numpy as np

from . import __version__, corpus, games, mechanisms, stackelberg, welfare
from .errors import CoordinationError, NotConverged, ScenarioInvalid
from .jsonio import canonical_dumps, write_csv
from .model import Scenario, load_scenario


def _common_flags(sub):
    sub.add_argument("--out", help="write the JSON report here (default: stdout)")
    sub.add_argument("--seed", type=int, default=0, help="seed echoed in the report")
    sub.add_argument("--quiet", action="store_true",
                     help="suppress the report on stdout when --out is given")
    sub.add_argument("--timing", action="store_true",
                     help="include wall time in the report (breaks byte-level "
                          "report reproducibility)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tecoord",
        description="Market-based coordination of distributed energy resources")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("clear", help="competitive market clearing")
    p.add_argument("--scenario", required=True)
    p.add_argument("--method", choices=["auction", "primal-dual"], default="auction")
    p.add_argument("--tol", type=float, default=1e-6,
                   help="balance tolerance on |total demand - supply|")
    p.add_argument("--max-iters", type=int, default=100_000)
    p.add_argument("--gamma0", type=float, default=0.5,
                   help="step scale of the price update")
    p.add_argument("--step", choices=["diminishing", "constant"],
                   default="diminishing")
    p.add_argument("--trace", help="CSV sidecar with the per-iteration trace")
    _common_flags(p)

    p = subs.add_parser("supply-game", help="strategic supply-function bidding")
    p.add_argument("--scenario", required=True)
    _common_flags(p)

    p = subs.add_parser("stackelberg", help="optimal posted price for a leader")
    p.add_argument("--scenario", required=True)
    p.add_argument("--objective", choices=["profit", "welfare"], default="profit")
    p.add_argument("--capacity", type=float,
                   help="override the scenario's capacity limit")
    p.add_argument("--scan", help="CSV sidecar with the price scan grid")
    _common_flags(p)

    p = subs.add_parser("reverse-stackelberg",
                        help="linear pricing-function design via the team problem")
    p.add_argument("--scenario", required=True)
    p.add_argument("--leader-payoff", default="profit",
                   help="'profit' or 'bullseye:<allocation>,<price>'")
    p.add_argument("--lambda-max", type=float,
                   help="upper bound of the price search box (default 2*max alpha)")
    _common_flags(p)

    p = subs.add_parser("mechanism", help="run a direct mechanism and its checks")
    p.add_argument("--kind", choices=["vcg", "dagva", "ssvcg"], required=True)
    p.add_argument("--scenario", required=True)
    p.add_argument("--reports", default="truthful",
                   help="'truthful' or a JSON file with [[alpha, beta], ...]")
    p.add_argument("--check", default="",
                   help="comma list from ic-dom,ic-bayes,budget,ir")
    _common_flags(p)

    p = subs.add_parser("corpus", help="generate deterministic random scenarios")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--dir", required=True, help="directory for scenario files")
    p.add_argument("--agents", type=int, help="fixed agent count (default: 2-3)")
    p.add_argument("--capacity", choices=["on", "off"], default="on")
    p.add_argument("--deficit", choices=["on", "off"], default="off")
    p.add_argument("--prior", choices=["on", "off"], default="on")
    _common_flags(p)

    p = subs.add_parser("verify",
                        help="cross-check the clearing routes on one scenario")
    p.add_argument("--scenario", required=True)
    p.add_argument("--tol", type=float, default=1e-4,
                   help="agreement tolerance across the three routes")
    p.add_argument("--gamma0", type=float, default=0.5)
    _common_flags(p)

    return parser


def _floats(values) -> list:
    return [float(v) for v in np.asarray(values).ravel()]


def _load(args) -> Scenario:
    return load_scenario(args.scenario)


def _cmd_clear(args):
    scenario = _load(args)
    step = welfare.Diminishing(args.gamma0) if args.step == "diminishing" \
        else welfare.Constant(args.gamma0)
    config = welfare.SolverConfig(balance_tolerance=args.tol,
                                  max_iterations=args.max_iters,
                                  step_rule=step)
    if args.method == "auction":
        price, iters = welfare.market_clearing_price(scenario, config)
        outcome = welfare.clear_auction(scenario, config)
        converged = True
        trace_rows = []
    else:
        trace = welfare.run_primal_dual(scenario, config)
        outcome = trace.final
        price = outcome.uniform_price()
        iters = trace.iterations.shape[0]
        converged = trace.converged
        trace_rows = trace.iterations
    if args.trace:
        write_csv(args.trace,
                  ["k", "lambda", "total_demand", "supply", "imbalance"],
                  [[int(r[0]), r[1], r[2], r[3], r[4]] for r in trace_rows])
    payload = {
        "price": price,
        "allocations": _floats(outcome.allocations),
        "supply": outcome.supply,
        "payments": _floats(outcome.payments),
        "iterations": int(iters),
        "converged": converged,
    }
    return payload, {}, (0 if converged else 3)


def _cmd_supply_game(args):
    scenario = _load(args)
    bids, solution = games.supply_function_nash(scenario)
    outcome = games.clear_supply_function(bids, scenario.coordinator.deficit)
    efficient = games.efficient_shedding(scenario)
    payload = {
        "bids": _floats(bids.bids),
        "price": outcome.uniform_price(),
        "allocations": _floats(outcome.allocations),
        "payments": _floats(outcome.payments),
        "epsilon": solution.epsilon,
        "efficient_welfare": games.shedding_welfare(efficient, scenario),
        "realized_welfare": games.shedding_welfare(outcome.allocations, scenario),
    }
    return payload, {"epsilon_certified": solution.epsilon <= 1e-6}, 0


def _cmd_stackelberg(args):
    scenario = _load(args)
    if args.capacity is not None:
        coord = dataclasses.replace(scenario.coordinator, capacity=args.capacity)
        scenario = dataclasses.replace(scenario, coordinator=coord)
    solution = stackelberg.solve_price_stackelberg(scenario, args.objective)
    if args.scan:
        write_csv(args.scan, ["lambda", "leader_payoff", "feasible"],
                  [[r[0], r[1], int(r[2])] for r in solution.scan])
    payload = {
        "objective": args.objective,
        "price": solution.price,
        "allocations": _floats(solution.outcome.allocations),
        "supply": solution.outcome.supply,
        "payments": _floats(solution.outcome.payments),
        "leader_payoff": solution.leader_payoff,
        "capacity": scenario.coordinator.capacity,
        "scan_points": int(solution.scan.shape[0]),
    }
    return payload, {}, 0


def _parse_leader_payoff(spec: str, scenario: Scenario):
    if spec == "profit":
        coord = scenario.coordinator

        def factory(agent):
            return lambda a, lam: lam * a - (coord.c1 * a + 0.5 * coord.c2 * a * a)

        return factory
    if spec.startswith("bullseye:"):
        try:
            a_t, l_t = (float(v) for v in spec.split(":", 1)[1].split(","))
        except ValueError:
            raise ScenarioInvalid(
                f"--leader-payoff {spec!r} is not 'bullseye:<allocation>,<price>'")

        def factory(agent):
            return lambda a, lam: -((a - a_t) ** 2) - ((lam - l_t) ** 2)

        return factory
    raise ScenarioInvalid(f"unknown leader payoff {spec!r}")


def _cmd_reverse_stackelberg(args):
    scenario = _load(args)
    lam_hi = args.lambda_max
    if lam_hi is None:
        lam_hi = 2.0 * max(a.alpha for a in scenario.agents)
    factory = _parse_leader_payoff(args.leader_payoff, scenario)
    designs = stackelberg.per_agent_linear_incentives(
        scenario, factory, (0.0, lam_hi))
    rows = []
    all_verified = True
    for agent, (a_tau, lam_tau), pricing in designs:
        payoff = factory(agent)
        response = stackelberg.induced_best_response(pricing, agent)
        realized = float(pricing.price_at(response))
        verified = stackelberg.verify_incentive_controllable(pricing, agent)
        all_verified = all_verified and verified
        rows.append({
            "agent": agent.id,
            "team_allocation": a_tau,
            "team_price": lam_tau,
            "slope": pricing.slope,
            "best_response": response,
            "leader_value": float(payoff(response, realized)),
            "team_value": float(payoff(a_tau, lam_tau)),
            "verified": verified,
        })
    payload = {"leader_payoff": args.leader_payoff, "designs": rows}
    return payload, {"all_verified": all_verified}, 0


def _parse_reports(args, scenario: Scenario):
    if args.reports == "truthful":
        return [(a.alpha, a.beta) for a in scenario.agents]
    try:
        with open(args.reports, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        return [(float(r[0]), float(r[1])) for r in raw]
    except FileNotFoundError:
        raise ScenarioInvalid(f"reports file not found: {args.reports}")
    except (ValueError, TypeError, IndexError, json.JSONDecodeError) as exc:
        raise ScenarioInvalid(f"reports file {args.reports} is malformed: {exc}")


def _report_to_dict(report: mechanisms.MechanismReport) -> dict:
    doc = {"property": report.property, "holds": report.holds,
           "detail": report.detail}
    if report.witness is not None:
        doc["witness"] = {k: (list(v) if isinstance(v, tuple) else v)
                          for k, v in report.witness.items()}
    return doc


def _cmd_mechanism(args):
    scenario = _load(args)
    checks = [c for c in args.check.split(",") if c]
    unknown = set(checks) - {"ic-dom", "ic-bayes", "budget", "ir"}
    if unknown:
        raise ScenarioInvalid(f"unknown checks: {sorted(unknown)}")
    reports = _parse_reports(args, scenario)
    properties = {}

    if args.kind == "ssvcg":
        if set(checks) - {"budget"}:
            raise ScenarioInvalid(
                "only the 'budget' check applies to the continuous-message "
                "scalar-strategy mechanism")
        sigma, outcome, solution = mechanisms.ssvcg_solve(scenario)
        truth = [(a.alpha, a.beta) for a in scenario.agents]
        target = mechanisms.efficient_allocation(truth, scenario)
        payload = {
            "kind": "ssvcg",
            "sigma": _floats(sigma),
            "allocations": _floats(outcome.allocations),
            "payments": _floats(outcome.payments),
            "epsilon": solution.epsilon,
            "efficiency_gap": float(np.max(np.abs(
                np.asarray(outcome.allocations) - target))),
        }
        if "budget" in checks:
            total = float(np.sum(outcome.payments))
            properties["budget"] = {"property": "BudgetBalance",
                                    "holds": total <= 1e-9,
                                    "detail": "exact" if abs(total) <= 1e-11
                                    else ("weak" if total <= 1e-9 else "violated"),
                                    "payment_sum": total}
        return payload, properties, 0

    if args.kind == "vcg":
        outcome = mechanisms.vcg_outcome(reports, scenario)
        mech = mechanisms.vcg_mechanism(scenario)
    else:
        prior = scenario.prior
        outcome = mechanisms.dagva_outcome(reports, prior, scenario)
        mech = mechanisms.dagva_mechanism(scenario, prior)

    payload = {
        "kind": args.kind,
        "reports": [list(r) for r in reports],
        "allocations": _floats(outcome.allocations),
        "payments": _floats(outcome.payments),
        "payment_sum": float(np.sum(outcome.payments)),
    }
    for check in checks:
        if check == "ic-dom":
            result = mechanisms.check_ic_dominant(mech)
        elif check == "budget":
            result = mechanisms.check_budget_balance(mech)
        elif check == "ic-bayes":
            result = mechanisms.check_ic_bayesian(mech, scenario.prior)
        else:
            result = mechanisms.check_interim_ir(mech, scenario.prior)
        properties[check] = _report_to_dict(result)
    return payload, properties, 0


def _cmd_corpus(args):
    paths = corpus.write_corpus(
        args.dir, args.seed, args.count,
        n_agents=args.agents,
        capacity=args.capacity == "on",
        deficit=args.deficit == "on",
        prior=args.prior == "on")
    payload = {"count": len(paths), "files": paths}
    return payload, {}, 0


def _cmd_verify(args):
    scenario = _load(args)
    config = welfare.SolverConfig(step_rule=welfare.Diminishing(args.gamma0))
    alloc, y, lam = welfare.solve_social_welfare(scenario, config)
    auction = welfare.clear_auction(scenario, config)
    trace = welfare.run_primal_dual(scenario, config)
    prices = [lam, auction.uniform_price(), trace.final.uniform_price()]
    spread = max(prices) - min(prices)
    report = welfare.verify_competitive_equilibrium(auction, scenario, tol=args.tol)
    payload = {
        "welfare_price": lam,
        "auction_price": auction.uniform_price(),
        "primal_dual_price": trace.final.uniform_price(),
        "allocations": _floats(auction.allocations),
        "supply": y,
        "primal_dual_iterations": int(trace.iterations.shape[0]),
    }
    properties = {
        "prices_agree": spread <= args.tol,
        "price_spread": spread,
        "consumers_optimal": report.consumers_optimal,
        "supplier_optimal": report.supplier_optimal,
        "balanced": report.balanced,
        "primal_dual_converged": trace.converged,
    }
    return payload, properties, (0 if trace.converged else 3)


_HANDLERS = {
    "clear": _cmd_clear,
    "supply-game": _cmd_supply_game,
    "stackelberg": _cmd_stackelberg,
    "reverse-stackelberg": _cmd_reverse_stackelberg,
    "mechanism": _cmd_mechanism,
    "corpus": _cmd_corpus,
    "verify": _cmd_verify,
}


def run(argv=None) -> int:
    """Parse argv, dispatch, emit the report; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    started = time.perf_counter()
    try:
        payload, properties, code = _HANDLERS[args.command](args)
    except NotConverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except CoordinationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    report = {
        "command": args.command,
        "version": __version__,
        "seed": int(args.seed),
        "request": {"argv": list(argv) if argv is not None else sys.argv[1:]},
        "outcome": payload,
        "properties": properties,
    }
    if args.timing:
        report["wall_time_s"] = time.perf_counter() - started
    text = canonical_dumps(report)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        if not args.quiet:
            sys.stdout.write(text)
    else:
        sys.stdout.write(text)
    return code


def main() -> None:
    sys.exit(run())
