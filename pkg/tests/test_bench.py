import numpy as np
import pytest

from decmdp import SolveConfig, solve
from decmdp.bench import (RecyclingParams, event_band, gen_meeting_grid, gen_random_team,
                          gen_recycling, interaction_events)
from decmdp.oracle import best_markov


def test_recycling_shapes():
    model = gen_recycling()
    assert (model.n_states, model.n_actions) == (4, 9)


def test_recycling_without_rewards_is_worth_nothing():
    silent = RecyclingParams(r_search=0.0, r_wait=0.0, r_rescue=0.0, team_search_bonus=0.0,
                             horizon=4)
    sol = solve(gen_recycling(silent), SolveConfig())
    assert sol.lower == sol.upper == 0.0


def test_team_shapes():
    model = gen_random_team(3, 2, 7)
    assert (model.n_states, model.n_actions) == (8, 27)


@pytest.mark.parametrize("klass", range(4))
def test_event_counts_stay_in_their_band(klass):
    e_max = 4 * 9
    lo, hi = event_band(klass, e_max)
    assert (lo, hi) == (klass * 9, (klass + 1) * 9)
    for seed in range(100):
        assert lo <= len(interaction_events(2, klass, seed)) < hi


def test_event_bands_partition_the_pairs():
    for e_max in (36, 216, 5):
        edges = [event_band(k, e_max) for k in range(4)]
        assert edges[0][0] == 0
        for (_, hi), (lo, _) in zip(edges, edges[1:]):
            assert hi <= lo + 1


def test_denser_classes_touch_more_pairs():
    def mean_nonzero(klass):
        return np.mean([np.count_nonzero(gen_random_team(2, klass, s, horizon=1).reward_matrix)
                        for s in range(100)])
    counts = [len(interaction_events(2, k, 0)) for k in range(4)]
    assert counts == sorted(counts)
    assert mean_nonzero(3) > mean_nonzero(0)


def test_team_generation_is_deterministic():
    a = gen_random_team(3, 1, 42).reward_matrix
    b = gen_random_team(3, 1, 42).reward_matrix
    assert a.tobytes() == b.tobytes()
    assert gen_random_team(3, 1, 43).reward_matrix.tobytes() != a.tobytes()


def test_grid_shapes():
    assert (gen_meeting_grid(3).n_states, gen_meeting_grid(3).n_actions) == (81, 25)
    assert gen_meeting_grid(8, horizon=1).n_states == 4096


@pytest.mark.parametrize("slip", [0.0, 0.1, 0.3, 0.7])
def test_grid_rows_are_exact(slip):
    P = gen_meeting_grid(4, slip).agents[0].transition
    assert np.all(P.sum(axis=2) == 1.0)


def test_adjacent_agents_meet_in_one_step():
    model = gen_meeting_grid(2, 0.0, horizon=1, starts=((0, 0), (0, 1)))
    assert best_markov(model)[0] == 1.0


def test_bad_grid_parameters():
    with pytest.raises(ValueError):
        gen_meeting_grid(1)
    with pytest.raises(ValueError):
        gen_meeting_grid(3, slip=1.0)
    with pytest.raises(ValueError):
        event_band(4, 10)
