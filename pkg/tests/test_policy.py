import numpy as np
import pytest

from decmdp import (DecisionRule, LocalAgentModel, MarkovPolicy, Occupancy, enumerate_rules,
                    evaluate_policy, make_model, random_policy, rule_count, value_at)
from decmdp.bench import gen_meeting_grid, gen_random_model, gen_recycling
from decmdp.policy import StateValueTable

from conftest import toy, zero_reward


def test_rule_counts():
    assert rule_count(toy()) == 16
    assert rule_count(gen_recycling()) == 81
    assert rule_count(gen_meeting_grid(3, 0.1)) == 5 ** 18


def test_enumeration_is_sorted_and_complete():
    rules = list(enumerate_rules(toy()))
    assert len(rules) == 16
    assert [r.index(toy()) for r in rules] == list(range(16))
    assert len(list(enumerate_rules(gen_recycling()))) == 81


def test_singleton_actions_give_one_rule():
    agent = LocalAgentModel(("a", "b"), ("noop",), np.array([[[1.0, 0.0]], [[0.0, 1.0]]]))
    model = make_model([agent, agent], {}, 2, initial_factors=[np.ones(2) / 2] * 2)
    assert len(list(enumerate_rules(model))) == 1
    assert random_policy(model, 0) == random_policy(model, 99)


def test_index_round_trip():
    model = gen_recycling()
    for idx in (0, 17, 80):
        assert DecisionRule.from_index(model, idx).index(model) == idx


def test_toy_flip_then_stay_is_worth_one():
    flip_first = DecisionRule([[0, 0], [1, 1]])
    stay = DecisionRule([[1, 1], [1, 1]])
    table = evaluate_policy(toy(), MarkovPolicy([flip_first, stay]))
    assert float(toy().initial @ table.values[0]) == 1.0


def test_zero_reward_table():
    table = evaluate_policy(zero_reward(), random_policy(zero_reward(), 3))
    assert not table.values.any()


def test_value_at_cases():
    table = StateValueTable(np.array([[2.0, 4.0], [0.0, 0.0]]))
    assert value_at(table, 0, Occupancy(np.array([0.5, 0.5]))) == 3.0
    assert value_at(table, 0, Occupancy(np.array([0.0, 1.0]))) == 4.0
    assert value_at(table, 1, Occupancy(np.array([0.5, 0.5]))) == 0.0


def simulate(model, policy, n, rng):
    """Vectorised rollouts of per-agent chains; returns per-rollout totals."""
    starts = rng.choice(model.n_states, size=n, p=model.initial)
    obs = model.state_obs[starts].copy()
    totals = np.zeros(n)
    R = model.reward_matrix
    for rule in policy.rules:
        acts = np.stack([rule.arrays[i][obs[:, i]] for i in range(model.n_agents)], axis=1)
        s = obs @ np.array(model.state_radix)
        a = acts @ np.array(model.action_radix)
        totals += R[s, a]
        for i, ag in enumerate(model.agents):
            cdf = np.cumsum(ag.transition[obs[:, i], acts[:, i]], axis=1)
            u = rng.random(n)[:, None]
            obs[:, i] = np.minimum((u > cdf).sum(axis=1), ag.n_obs - 1)
    return totals


@pytest.mark.parametrize("seed", range(20))
def test_value_matches_simulation(seed):
    model = gen_random_model(seed, horizon=(1, 4))
    policy = random_policy(model, seed)
    exact = float(model.initial @ evaluate_policy(model, policy).values[0])
    totals = simulate(model, policy, 100_000, np.random.default_rng(seed))
    err = totals.std() / np.sqrt(totals.size)
    assert abs(totals.mean() - exact) <= 3 * err + 1e-12


def test_random_policy_is_seeded_and_uniform():
    model = gen_recycling()
    assert random_policy(model, 0) == random_policy(model, 0)
    counts = np.zeros(3)
    for seed in range(10_000):
        counts[random_policy(model, seed).action(0, 0, 0)] += 1
    sigma = np.sqrt(10_000 * (1 / 3) * (2 / 3))
    assert np.all(np.abs(counts - 10_000 / 3) <= 3 * sigma)
