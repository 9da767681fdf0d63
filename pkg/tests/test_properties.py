"""Property checks over generated instances."""
import numpy as np
from hypothesis import given, settings, strategies as st

from decmdp import (DecisionRule, Occupancy, SolveConfig, advance, evaluate_policy,
                    initial_occupancy, key_of, random_policy, rule_count, solve)
from decmdp.bench import gen_random_model
from decmdp.occupancy import step
from decmdp.oracle import best_markov, mdp_value

seeds = st.integers(0, 2**32 - 1)


@settings(max_examples=50, deadline=None)
@given(seed=seeds)
def test_occupancies_stay_distributions(seed):
    model = gen_random_model(seed, n_agents=2 + seed % 2, horizon=(1, 4))
    eta = initial_occupancy(model)
    for rule in random_policy(model, seed).rules:
        eta = step(model, eta, rule)
        assert np.all(eta.probs >= 0)
        assert abs(eta.probs.sum() - 1.0) <= 1e-9


@settings(max_examples=40, deadline=None)
@given(seed=seeds, mode=st.sampled_from(["cop", "exhaustive"]))
def test_solve_is_bracketed_by_oracles(seed, mode):
    model = gen_random_model(seed, max_policies=5000)
    sol = solve(model, SolveConfig(epsilon=1e-6, mode=mode))
    optimum, _ = best_markov(model)
    assert sol.converged
    assert abs(sol.lower - optimum) <= 1e-6
    assert optimum - 1e-9 <= sol.upper <= mdp_value(model) + 1e-9
    achieved = float(model.initial @ evaluate_policy(model, sol.policy).values[0])
    assert abs(achieved - sol.lower) <= 1e-9


@settings(max_examples=50, deadline=None)
@given(seed=seeds, data=st.data())
def test_rule_index_round_trip(seed, data):
    model = gen_random_model(seed, n_agents=3)
    idx = data.draw(st.integers(0, 3 ** 9))
    idx %= rule_count(model)
    assert DecisionRule.from_index(model, idx).index(model) == idx


@settings(max_examples=50, deadline=None)
@given(probs=st.lists(st.floats(0.0, 1.0), min_size=4, max_size=4).filter(lambda p: sum(p) > 0.1))
def test_keys_ignore_tiny_noise(probs):
    p = np.array(probs) / np.sum(probs)
    assert key_of(Occupancy(p)) == key_of(Occupancy(p + 1e-14))


@settings(max_examples=30, deadline=None)
@given(seed=seeds)
def test_values_are_linear_in_the_occupancy(seed):
    model = gen_random_model(seed, horizon=(2, 3))
    table = evaluate_policy(model, random_policy(model, seed))
    rng = np.random.default_rng(seed)
    a, b = rng.dirichlet(np.ones(model.n_states), size=2)
    w = rng.uniform()
    mix = w * a + (1 - w) * b
    v = table.values[0]
    assert np.isclose(mix @ v, w * (a @ v) + (1 - w) * (b @ v))
    rule = random_policy(model, seed + 1)[0]
    mixed = advance(model, Occupancy(mix), rule).probs
    parts = (w * advance(model, Occupancy(a), rule).probs
             + (1 - w) * advance(model, Occupancy(b), rule).probs)
    assert np.allclose(mixed, parts, atol=1e-12)
