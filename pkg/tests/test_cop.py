import itertools

import numpy as np
import pytest

from decmdp import (BoundStore, CopProblem, DecisionRule, HorizonError, LocalAgentModel,
                    Occupancy, build_backup_cop, build_mdp_heuristic, exhaustive_backup,
                    initial_occupancy, make_model, solve_cop)
from decmdp.cop import q_mdp
from decmdp.policy import constant_policy

from conftest import toy


def brute_force(problem):
    """Best objective and first maximizing rule over every assignment of the variables."""
    best, first = -np.inf, None
    ranges = [range(problem.action_sizes[i]) for i, _ in problem.variables]
    for combo in itertools.product(*ranges):
        rows = [[0] * z for z in problem.obs_sizes]
        for (i, z), a in zip(problem.variables, combo):
            rows[i][z] = a
        rule = DecisionRule(rows)
        value = problem.evaluate(rule)
        if value > best + 1e-9:
            best, first = value, rule
    return best, first


def random_problem(rng, n_agents, n_corrections=0):
    obs = tuple(int(rng.integers(1, 4)) for _ in range(n_agents))
    acts = tuple(int(rng.integers(1, 4)) for _ in range(n_agents))
    k = int(rng.integers(1, int(np.prod(obs)) + 1))
    flat = np.sort(rng.choice(int(np.prod(obs)), size=k, replace=False))
    scopes = np.array([np.unravel_index(s, obs) for s in flat], dtype=np.intp).reshape(k, n_agents)
    weights = rng.dirichlet(np.ones(k))
    tables = np.round(rng.uniform(-1, 1, size=(k, int(np.prod(acts)))), int(rng.integers(1, 4)))
    variables = sorted({(i, int(z)) for i in range(n_agents) for z in scopes[:, i]})
    problem = CopProblem(obs, acts, variables, flat, scopes, weights, tables)
    for _ in range(n_corrections):
        rows = [[0] * z for z in obs]
        for i, z in variables:
            rows[i][z] = int(rng.integers(acts[i]))
        rule = DecisionRule(rows)
        if all(rule != r for r, _ in problem.corrections):
            problem.corrections.append((rule, -float(rng.uniform(0, 0.5))))
    return problem


def test_single_variable():
    problem = CopProblem((1,), (2,), [(0, 0)], np.array([0]), np.array([[0]]), np.array([1.0]),
                         np.array([[1.0, 2.0]]))
    sol = solve_cop(problem)
    assert sol.rule.actions == ((1,),)
    assert sol.value == 2.0


@pytest.mark.parametrize("seed", range(200))
def test_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    problem = random_problem(rng, int(rng.integers(2, 4)), int(rng.integers(0, 4)))
    best, first = brute_force(problem)
    sol = solve_cop(problem)
    assert sol.value == pytest.approx(best, abs=1e-9)
    assert sol.rule == first


def test_correction_on_winner():
    # two candidates for one variable: 1.0 and 0.8
    base = dict(obs_sizes=(1, 1), action_sizes=(2, 1), variables=[(0, 0), (1, 0)],
                states=np.array([0]), scopes=np.array([[0, 0]]), weights=np.array([1.0]),
                tables=np.array([[1.0, 0.8]]))
    winner = DecisionRule([[0], [0]])
    small = CopProblem(**base, corrections=[(winner, -0.1)])
    assert solve_cop(small).rule == winner
    large = CopProblem(**base, corrections=[(winner, -0.5)])
    sol = solve_cop(large)
    assert sol.rule == DecisionRule([[1], [0]]) and sol.value == pytest.approx(0.8)


def test_ties_go_to_the_smallest_rule():
    problem = CopProblem((2, 1), (2, 2), [(0, 0), (0, 1), (1, 0)], np.array([0, 1]),
                         np.array([[0, 0], [1, 0]]), np.array([0.5, 0.5]), np.ones((2, 4)))
    assert solve_cop(problem).rule == DecisionRule([[0, 0], [0]])


def toy_store(model):
    return BoundStore(model, build_mdp_heuristic(model), constant_policy(model))


def test_toy_program_shape():
    model = toy()
    store = toy_store(model)
    problem = build_backup_cop(model, store, 0, initial_occupancy(model))
    assert problem.variables == [(0, 0), (1, 1)]
    assert problem.tables.shape == (1, 4)
    assert problem.corrections == []
    assert "var\t0\t0" in problem.dump()


def test_empty_store_objective_is_centralized_q():
    model = toy()
    store = toy_store(model)
    eta = initial_occupancy(model)
    problem = build_backup_cop(model, store, 0, eta)
    for a0, a1 in itertools.product(range(2), repeat=2):
        rule = DecisionRule([[a0, 0], [0, a1]])
        assert problem.evaluate(rule) == pytest.approx(q_mdp(model, store, 0, eta, rule))


def test_correction_is_zero_when_nothing_was_learned():
    model = toy()
    store = toy_store(model)
    eta = initial_occupancy(model)
    rule = DecisionRule([[0, 0], [1, 1]])
    store.ub_update(0, eta, rule, q_mdp(model, store, 0, eta, rule))
    problem = build_backup_cop(model, store, 0, eta)
    assert problem.corrections == [(store.restrict(store.node(0, eta), rule), 0.0)]


def test_backup_past_horizon():
    model = toy()
    with pytest.raises(HorizonError):
        build_backup_cop(model, toy_store(model), 2, Occupancy(model.initial, 2))
    with pytest.raises(HorizonError):
        exhaustive_backup(model, toy_store(model), 2, Occupancy(model.initial, 2))


def test_exhaustive_toy_picks_a_flip():
    model = toy()
    rule, value = exhaustive_backup(model, toy_store(model), 0, initial_occupancy(model))
    assert value == 1.0
    flips = (rule.actions[0][0], rule.actions[1][1]).count(0)
    assert flips == 1


def test_exhaustive_singleton_rule_space():
    agent = LocalAgentModel(("z",), ("noop",), np.ones((1, 1, 1)))
    model = make_model([agent, agent], {(0, 0): 2.0}, 1, initial_factors=[[1.0], [1.0]])
    rule, value = exhaustive_backup(model, toy_store(model), 0, initial_occupancy(model))
    assert rule == DecisionRule([[0], [0]]) and value == 2.0
