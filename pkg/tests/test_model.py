import itertools

import numpy as np
import pytest

from decmdp import (LocalAgentModel, ModelError, joint_transition, make_model, reward, validate)
from decmdp.bench import gen_meeting_grid, gen_random_model, gen_random_team, gen_recycling
from decmdp.bench import RecyclingParams, interaction_events
from decmdp.model import check, decode, encode

from conftest import flip_stay_agent, toy


def test_mixed_radix_puts_agent_zero_first():
    assert encode((1, 0), (2, 3)) == 3
    assert decode(5, (2, 3)) == (1, 2)
    for idx in range(24):
        assert encode(decode(idx, (2, 3, 4)), (2, 3, 4)) == idx


def test_short_row_is_named():
    P = flip_stay_agent().transition.copy()
    P[0, 0] = [0.0, 0.9]
    bad = LocalAgentModel(("0", "1"), ("flip", "stay"), P)
    model = make_model([bad, flip_stay_agent()], {}, 1, initial_factors=[np.ones(2) / 2] * 2)
    report = validate(model)
    assert not report.ok
    assert any("z=0, a=flip" in issue and "0.9" in issue for issue in report.issues)
    with pytest.raises(ModelError):
        check(model)


def test_initial_mass_above_one_is_flagged():
    agent = flip_stay_agent()
    model = make_model([agent, agent], {}, 1, initial=[0.5, 0.2, 0.2, 0.2])
    assert any("initial occupancy" in issue for issue in validate(model).issues)


@pytest.mark.parametrize("model", [
    gen_recycling(), gen_meeting_grid(3, 0.1), gen_meeting_grid(2, 0.0, 1, reward_on="before"),
    gen_random_team(2, 1, 4), gen_random_team(3, 3, 0),
], ids=lambda m: m.name)
def test_generators_validate(model):
    assert validate(model).ok


def test_joint_transition_is_product_of_locals():
    P0 = np.array([[[0.5, 0.5]], [[0.0, 1.0]]])
    P1 = np.array([[[0.4, 0.6]], [[1.0, 0.0]]])
    a0 = LocalAgentModel(("x", "y"), ("go",), P0)
    a1 = LocalAgentModel(("x", "y"), ("go",), P1)
    model = make_model([a0, a1], {}, 1, initial_factors=[np.ones(2) / 2] * 2)
    assert joint_transition(model, (0, 0), (0, 0), (1, 0)) == pytest.approx(0.2)


@pytest.mark.parametrize("seed", range(5))
def test_joint_transition_rows_sum_to_one(seed):
    model = gen_random_model(seed, n_agents=3)
    for s, a in itertools.product(range(model.n_states), range(model.n_actions)):
        total = sum(joint_transition(model, s, a, s2) for s2 in range(model.n_states))
        assert total == pytest.approx(1.0, abs=1e-9)


def test_joint_transition_range_error():
    with pytest.raises((IndexError, ValueError)):
        joint_transition(toy(), 4, 0, 0)


def test_reward_lookup():
    model = toy()
    assert reward(model, (0, 1), (0, 1)) == 0.0
    assert reward(model, (1, 1), (0, 1)) == 1.0


def test_reward_at_interaction_event():
    events = interaction_events(2, 1, 11)
    silent = RecyclingParams(r_search=0.0, r_wait=0.0, r_rescue=0.0, team_search_bonus=0.0)
    model = gen_random_team(2, 1, 11, params=silent)
    assert events
    for ev in events:
        assert reward(model, ev.state, ev.action) == ev.value
