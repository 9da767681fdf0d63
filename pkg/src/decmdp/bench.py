"""Benchmark generators: recycling robots, random interaction teams, meeting grids.

The published benchmark files are not bundled. Every dynamics or reward
number these generators use is a parameter with a documented default;
none of the defaults is claimed to reproduce published values.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .model import FactoredDecMdp, LocalAgentModel, check, joint_initial, make_model


def _split(p):
    """``(p, 1 - p)`` adjusted so that the pair sums to exactly 1.0."""
    if p >= 0.5:
        return p, 1.0 - p
    q = 1.0 - p
    return 1.0 - q, q


# recycling robot -----------------------------------------------------------
@dataclass(frozen=True)
class RecyclingParams:
    """Battery dynamics and rewards of one recycling robot plus team coupling.

    ``alpha``: P(battery stays high | high, search). ``beta``: P(stays low |
    low, search); otherwise the battery dies, the robot is rescued (reward
    ``r_rescue``) and comes back high. ``team_search_bonus`` is added when
    every agent searches at once.
    """

    alpha: float = 0.7
    beta: float = 0.6
    r_search: float = 2.0
    r_wait: float = 1.0
    r_rescue: float = -3.0
    team_search_bonus: float = 1.5
    horizon: int = 10


RECYCLING_OBS = ("high", "low")
RECYCLING_ACTIONS = ("search", "wait", "recharge")


def recycling_agent(alpha: float, beta: float) -> LocalAgentModel:
    P = np.zeros((2, 3, 2))
    P[0, 0, 0], P[0, 0, 1] = _split(alpha)
    P[0, 1, 0] = 1.0
    P[0, 2, 0] = 1.0
    P[1, 0, 1], P[1, 0, 0] = _split(beta)
    P[1, 1, 1] = 1.0
    P[1, 2, 0] = 1.0
    return LocalAgentModel(RECYCLING_OBS, RECYCLING_ACTIONS, P)


def recycling_local_reward(params: RecyclingParams) -> np.ndarray:
    """Expected local reward table ``[obs, action]``."""
    low_search = params.beta * params.r_search + (1.0 - params.beta) * params.r_rescue
    return np.array([[params.r_search, params.r_wait, 0.0],
                     [low_search, params.r_wait, 0.0]])


def _team_reward(n_agents, local, bonus):
    rewards = {}
    for s in itertools.product(range(2), repeat=n_agents):
        for a in itertools.product(range(3), repeat=n_agents):
            v = sum(local[z, act] for z, act in zip(s, a))
            if bonus and all(act == 0 for act in a):
                v += bonus
            if v != 0.0:
                rewards[(s, a)] = v
    return rewards


def gen_recycling(params: RecyclingParams = RecyclingParams(), n_agents: int = 2) -> FactoredDecMdp:
    """Team of recycling robots, all starting with a high battery."""
    agent = recycling_agent(params.alpha, params.beta)
    rewards = _team_reward(n_agents, recycling_local_reward(params), params.team_search_bonus)
    start = [np.array([1.0, 0.0])] * n_agents
    model = make_model([agent] * n_agents, rewards, params.horizon,
                       initial_factors=start, name=f"recycling-{n_agents}")
    return check(model)


# random interaction teams ---------------------------------------------------
@dataclass(frozen=True)
class InteractionEvent:
    state: int
    action: int
    value: float


def event_band(klass: int, e_max: int):
    """Half-open range ``[lo, hi)`` of event counts for interaction class ``klass``."""
    if klass not in (0, 1, 2, 3):
        raise ValueError("klass must be 0, 1, 2 or 3")
    lo = klass * e_max // 4
    hi = (klass + 1) * e_max // 4
    return lo, max(hi, lo + 1)


def interaction_events(n_agents: int, klass: int, seed: int):
    """Seeded interaction events over the ``2^n x 3^n`` (state, action) pairs.

    Draw order from one PCG64 stream: the event count, the distinct pair
    indices, then one uniform [0, 1) reward per event in sorted pair order.
    """
    n_states, n_actions = 2 ** n_agents, 3 ** n_agents
    e_max = n_states * n_actions
    rng = np.random.Generator(np.random.PCG64(seed))
    lo, hi = event_band(klass, e_max)
    e = int(rng.integers(lo, hi))
    picks = np.sort(rng.choice(e_max, size=e, replace=False))
    values = rng.uniform(0.0, 1.0, size=e)
    return [InteractionEvent(int(p // n_actions), int(p % n_actions), float(v))
            for p, v in zip(picks, values)]


def gen_random_team(n_agents: int, klass: int, seed: int, horizon: int = 10,
                    params: RecyclingParams = RecyclingParams(team_search_bonus=0.0)) -> FactoredDecMdp:
    """Recycling robots coupled by random interaction events.

    Event rewards are added to the independent local rewards.
    """
    if n_agents < 2:
        raise ValueError("need at least two agents")
    agent = recycling_agent(params.alpha, params.beta)
    rewards = _team_reward(n_agents, recycling_local_reward(params), params.team_search_bonus)
    model = make_model([agent] * n_agents, rewards, horizon,
                       initial_factors=[np.array([1.0, 0.0])] * n_agents)
    merged = dict(model.reward)
    for ev in interaction_events(n_agents, klass, seed):
        merged[(ev.state, ev.action)] = merged.get((ev.state, ev.action), 0.0) + ev.value
    model = make_model(model.agents, merged, horizon, initial_factors=model.initial_factors,
                       name=f"random-team-n{n_agents}-k{klass}-s{seed}")
    return check(model)


# meeting in a grid ----------------------------------------------------------
GRID_ACTIONS = ("stay", "north", "south", "west", "east")
_MOVES = ((0, 0), (-1, 0), (1, 0), (0, -1), (0, 1))


def grid_agent(side: int, slip: float) -> LocalAgentModel:
    """Agent on a ``side x side`` grid; a move fails with probability ``slip``."""
    n = side * side
    P = np.zeros((n, len(GRID_ACTIONS), n))
    move, stay = _split(1.0 - slip)
    for r, c in itertools.product(range(side), repeat=2):
        z = r * side + c
        for a, (dr, dc) in enumerate(_MOVES):
            rr, cc = r + dr, c + dc
            if a == 0 or not (0 <= rr < side and 0 <= cc < side):
                P[z, a, z] = 1.0
            else:
                P[z, a, rr * side + cc] = move
                P[z, a, z] = stay
    obs = tuple(f"r{r}c{c}" for r, c in itertools.product(range(side), repeat=2))
    return LocalAgentModel(obs, GRID_ACTIONS, P)


def gen_meeting_grid(side: int = 3, slip: float = 0.1, horizon: int = 5, starts=None,
                     reward_on: str = "after") -> FactoredDecMdp:
    """Two agents that should end up in the same cell.

    Parameters
    ----------
    side : int
        Grid side; each agent has ``side**2`` observations and 5 actions.
    slip : float
        Probability that a move leaves the agent in place.
    starts : pair of (row, col), optional
        Start cells; defaults to opposite corners.
    reward_on : {"after", "before"}
        ``"after"`` pays the probability of sharing a cell after the joint
        move, ``"before"`` pays 1 whenever the current cells coincide.
    """
    if side < 2:
        raise ValueError("side must be at least 2")
    if not 0.0 <= slip < 1.0:
        raise ValueError("slip must lie in [0, 1)")
    if reward_on not in ("after", "before"):
        raise ValueError("reward_on must be 'after' or 'before'")
    agent = grid_agent(side, slip)
    n, na = side * side, len(GRID_ACTIONS)
    if starts is None:
        starts = ((0, 0), (side - 1, side - 1))
    factors = []
    for r, c in starts:
        f = np.zeros(n)
        f[r * side + c] = 1.0
        factors.append(f)
    flat = agent.transition.reshape(n * na, n)
    if reward_on == "after":
        meet = (flat @ flat.T).reshape(n, na, n, na)     # [z0, a0, z1, a1]
        table = meet.transpose(0, 2, 1, 3).reshape(n * n, na * na)
    else:
        table = np.zeros((n * n, na * na))
        for z in range(n):
            table[z * n + z, :] = 1.0
    rewards = {(int(s), int(a)): float(table[s, a]) for s, a in zip(*np.nonzero(table))}
    model = FactoredDecMdp((agent, agent), rewards, int(horizon), joint_initial(factors),
                           tuple(factors), name=f"meeting-grid-{side}")
    return check(model)


BENCHMARKS = ("recycling", "random-team", "meeting-grid")


# generic random instances ---------------------------------------------------
def gen_random_model(seed: int, n_agents: int = 2, obs=(1, 3), actions=(1, 3), horizon=(1, 3),
                     density: float = 0.5, product_start: bool | None = None,
                     max_policies: int | None = None) -> FactoredDecMdp:
    """Small random transition-independent model for cross-checks.

    Sizes are drawn uniformly from the inclusive ``(lo, hi)`` ranges. When
    ``max_policies`` is given, the horizon is lowered until the number of
    Markov policies fits. Rewards are uniform in [-1, 1] on a ``density``
    fraction of (state, action) pairs.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    agents = []
    for _ in range(n_agents):
        nz = int(rng.integers(obs[0], obs[1] + 1))
        na = int(rng.integers(actions[0], actions[1] + 1))
        P = rng.dirichlet(np.full(nz, 0.5), size=(nz, na))
        P /= P.sum(axis=2, keepdims=True)
        agents.append(LocalAgentModel(tuple(f"o{z}" for z in range(nz)),
                                      tuple(f"a{a}" for a in range(na)), P))
    T = int(rng.integers(horizon[0], horizon[1] + 1))
    if max_policies is not None:
        rules = 1
        for ag in agents:
            rules *= ag.n_actions ** ag.n_obs
        while T > 1 and rules ** T > max_policies:
            T -= 1
    n_states = int(np.prod([ag.n_obs for ag in agents]))
    n_actions = int(np.prod([ag.n_actions for ag in agents]))
    mask = rng.uniform(size=(n_states, n_actions)) < density
    values = rng.uniform(-1.0, 1.0, size=(n_states, n_actions))
    rewards = {(int(s), int(a)): float(values[s, a]) for s, a in zip(*np.nonzero(mask))}
    if product_start is None:
        product_start = bool(rng.integers(0, 2))
    if product_start:
        factors = [rng.dirichlet(np.ones(ag.n_obs)) for ag in agents]
        model = make_model(agents, rewards, T, initial_factors=factors, name=f"random-{seed}")
    else:
        init = rng.dirichlet(np.ones(n_states))
        init /= init.sum()
        model = make_model(agents, rewards, T, initial=init, name=f"random-{seed}")
    return check(model)
