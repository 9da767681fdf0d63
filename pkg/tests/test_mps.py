import numpy as np
import pytest

from decmdp import CapacityError, Planner, SolveConfig, evaluate_policy, solve
from decmdp.bench import gen_meeting_grid, gen_random_model, gen_recycling
from decmdp.oracle import best_markov

from conftest import toy, zero_reward


def root_value(model, policy):
    return float(model.initial @ evaluate_policy(model, policy).values[0])


@pytest.mark.parametrize("mode", ["cop", "exhaustive"])
@pytest.mark.parametrize("horizon", [1, 2, 4])
def test_zero_reward_closes_in_one_trial(mode, horizon):
    sol = solve(zero_reward(horizon), SolveConfig(mode=mode))
    assert sol.lower == sol.upper == 0.0
    assert sol.trials <= 1 and sol.converged


@pytest.mark.parametrize("mode", ["cop", "exhaustive"])
def test_toy_value(mode):
    sol = solve(toy(), SolveConfig(mode=mode, epsilon=1e-9))
    assert sol.converged and sol.lower == pytest.approx(1.0)
    assert root_value(toy(), sol.policy) == pytest.approx(sol.lower)


def test_first_trial_already_finds_the_toy_optimum():
    planner = Planner(toy(), SolveConfig(seed=None))
    planner.trial()
    assert planner.lower() == pytest.approx(1.0)


@pytest.mark.parametrize("seed", range(100))
def test_trials_never_widen_a_gap(seed):
    model = gen_random_model(seed, max_policies=20000)
    planner = Planner(model, SolveConfig(epsilon=1e-6, inner_cap=1))
    for _ in range(200):
        if planner.upper() - planner.lower() <= 1e-6:
            break
        trace = planner.trial()
        for _tau, before, after in trace.visits:
            assert after <= before + 1e-9
    else:
        pytest.fail("no convergence within 200 trials")


def test_returned_policy_achieves_lower_bound():
    model = gen_recycling().with_horizon(3)
    sol = solve(model, SolveConfig(epsilon=1e-6))
    assert sol.converged
    assert root_value(model, sol.policy) == pytest.approx(sol.lower, abs=1e-9)
    assert sol.lower == pytest.approx(best_markov(model)[0], abs=1e-6)


def test_trial_cap_reports_not_converged():
    model = gen_recycling().with_horizon(6)
    sol = solve(model, SolveConfig(trial_cap=1, inner_cap=1))
    assert sol.trials == 1 and not sol.converged and not sol.timed_out
    assert sol.lower <= sol.upper


def test_time_limit_keeps_valid_bounds():
    model = gen_meeting_grid(3, 0.1, horizon=8)
    sol = solve(model, SolveConfig(time_limit=0.5))
    assert sol.timed_out and not sol.converged
    assert root_value(model, sol.policy) == pytest.approx(sol.lower)
    assert sol.lower <= sol.upper


def test_exhaustive_refuses_large_rule_spaces():
    with pytest.raises(CapacityError, match="cop"):
        solve(gen_meeting_grid(3, 0.1, horizon=2), SolveConfig(mode="exhaustive"))


def test_bad_config():
    with pytest.raises(ValueError):
        SolveConfig(epsilon=0.0)
    with pytest.raises(ValueError):
        SolveConfig(mode="greedy")


def test_meeting_grid_values_with_reward_before_moving():
    # co-location counted on arrival at a stage: corners are 4 moves apart
    grid = gen_meeting_grid(3, 0.4, reward_on="before", horizon=2)
    assert solve(grid, SolveConfig(epsilon=1e-6)).upper == pytest.approx(0.0, abs=1e-9)
    sol = solve(grid.with_horizon(3), SolveConfig(epsilon=1e-6))
    assert sol.converged and abs(sol.lower - 0.13) <= 0.01


def test_meeting_grid_reward_after_moving():
    sol = solve(gen_meeting_grid(3, 0.1, horizon=2), SolveConfig(epsilon=1e-6))
    assert sol.converged
    assert sol.lower == pytest.approx(0.6561, abs=1e-9)   # 0.9**4: all four moves must succeed
