"""Brute-force optimal values for tiny instances.

Everything here works on dense joint tables built directly from the local
models, so it shares no code path with the search. ``best_markov``
enumerates Markov policies; ``best_history`` enumerates policies that may
condition on each agent's full local observation sequence. Under a
deterministic policy an agent's past actions are functions of its past
observations, so observation sequences index the same reachable
action-observation histories.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import CapacityError
from .model import FactoredDecMdp
from .policy import DecisionRule, MarkovPolicy

ORACLE_CAP = 10**7
TIE = 1e-9


@dataclass(frozen=True, eq=False)
class DenseDecMdp:
    """Dec-MDP given by a joint transition tensor ``P[s, a, s2]``.

    Joint states and actions use the same mixed-radix order as
    :class:`~decmdp.model.FactoredDecMdp`. Transitions need not factor.
    """

    obs_sizes: tuple
    action_sizes: tuple
    P: np.ndarray
    R: np.ndarray
    initial: np.ndarray
    horizon: int

    @property
    def n_agents(self):
        return len(self.obs_sizes)

    @property
    def n_states(self):
        return math.prod(self.obs_sizes)

    @property
    def n_actions(self):
        return math.prod(self.action_sizes)

    def with_horizon(self, horizon):
        return DenseDecMdp(self.obs_sizes, self.action_sizes, self.P, self.R, self.initial, horizon)


def dense_from_factored(model: FactoredDecMdp) -> DenseDecMdp:
    """Multiply out the local transition tables state by state."""
    states = list(itertools.product(*[range(n) for n in model.obs_sizes]))
    actions = list(itertools.product(*[range(n) for n in model.action_sizes]))
    P = np.zeros((len(states), len(actions), len(states)))
    for si, s in enumerate(states):
        for ai, a in enumerate(actions):
            for s2i, s2 in enumerate(states):
                p = 1.0
                for ag, z, act, z2 in zip(model.agents, s, a, s2):
                    p *= ag.transition[z, act, z2]
                P[si, ai, s2i] = p
    R = np.zeros((len(states), len(actions)))
    for (s, a), v in model.reward.items():
        R[s, a] = v
    return DenseDecMdp(model.obs_sizes, model.action_sizes, P, R,
                       np.array(model.initial, dtype=float), model.horizon)


def _as_dense(model):
    return model if isinstance(model, DenseDecMdp) else dense_from_factored(model)


def _state_tuples(dense):
    return list(itertools.product(*[range(n) for n in dense.obs_sizes]))


def _action_index(dense, acts):
    idx = 0
    for a, n in zip(acts, dense.action_sizes):
        idx = idx * n + a
    return idx


def _all_rules(dense):
    slots = [range(dense.action_sizes[i]) for i in range(dense.n_agents)
             for _ in range(dense.obs_sizes[i])]
    rules = []
    for flat in itertools.product(*slots):
        rows, pos = [], 0
        for n in dense.obs_sizes:
            rows.append(flat[pos:pos + n])
            pos += n
        rules.append(rows)
    return rules


def best_markov(model, cap: int = ORACLE_CAP):
    """Optimal value over Markov policies and the first maximizer.

    Every rule sequence is scored by forward propagation of the state
    distribution; the last stage is scored for all rules at once.
    Sequences are visited in lexicographic canonical order and a later
    sequence wins only if it is better by more than ``1e-9``.

    Returns
    -------
    value : float
    policy : MarkovPolicy
    """
    T = model.horizon
    n_rules = math.prod(na ** nz for na, nz in zip(model.action_sizes, model.obs_sizes))
    if n_rules ** T > cap:
        raise CapacityError(f"{n_rules}^{T} Markov policies exceed the oracle cap {cap}")
    dense = _as_dense(model)
    rules = _all_rules(dense)
    states = _state_tuples(dense)
    rows = np.arange(dense.n_states)
    ja = np.array([[_action_index(dense, [r[i][s[i]] for i in range(dense.n_agents)])
                    for s in states] for r in rules], dtype=np.intp)
    rew = dense.R[rows[None, :], ja]                 # (rules, S)
    trans = dense.P[rows[None, :], ja]               # (rules, S, S)

    best = [-np.inf, None]
    prefix = []

    def dfs(tau, eta, acc):
        if tau == T - 1:
            vals = acc + rew @ eta
            top = vals.max()
            if top > best[0] + TIE:
                first = int(np.flatnonzero(vals >= top - TIE)[0])
                best[0] = float(vals[first])
                best[1] = prefix + [first]
            return
        for r in range(n_rules):
            prefix.append(r)
            dfs(tau + 1, eta @ trans[r], acc + float(rew[r] @ eta))
            prefix.pop()

    dfs(0, dense.initial, 0.0)
    policy = MarkovPolicy([DecisionRule(rules[r]) for r in best[1]])
    return best[0], policy


@dataclass(frozen=True)
class HistoryPolicy:
    """``tables[i][tau]`` maps agent ``i``'s observation sequence ``(z_0..z_tau)`` to an action."""

    tables: tuple


def _history_slots(dense, agent):
    T = dense.horizon
    n = dense.obs_sizes[agent]
    return [list(itertools.product(range(n), repeat=tau + 1)) for tau in range(T)]


def history_policy_count(model) -> int:
    total = 1
    for nz, na in zip(model.obs_sizes, model.action_sizes):
        slots = sum(nz ** (tau + 1) for tau in range(model.horizon))
        total *= na ** slots
    return total


def evaluate_history_policy(model, policy: HistoryPolicy) -> float:
    """Expected total reward by expanding every joint trajectory."""
    dense = _as_dense(model)
    states = _state_tuples(dense)
    total = 0.0

    def expand(tau, s_idx, hists, prob):
        nonlocal total
        if tau == dense.horizon or prob == 0.0:
            return
        acts = [policy.tables[i][tau][hists[i]] for i in range(dense.n_agents)]
        a = _action_index(dense, acts)
        total += prob * dense.R[s_idx, a]
        for s2 in np.flatnonzero(dense.P[s_idx, a]):
            nxt = tuple(h + (states[s2][i],) for i, h in enumerate(hists))
            expand(tau + 1, s2, nxt, prob * dense.P[s_idx, a, s2])

    for s0 in np.flatnonzero(dense.initial):
        expand(0, s0, tuple((z,) for z in states[s0]), dense.initial[s0])
    return total


def best_history(model, cap: int = ORACLE_CAP) -> float:
    """Optimal value over decentralized history-dependent policies."""
    count = history_policy_count(model)
    if count > cap:
        raise CapacityError(f"{count} history policies exceed the oracle cap {cap}")
    dense = _as_dense(model)
    per_agent = []
    for i in range(dense.n_agents):
        slots = _history_slots(dense, i)
        keys = [(tau, h) for tau, level in enumerate(slots) for h in level]
        choices = []
        for flat in itertools.product(range(dense.action_sizes[i]), repeat=len(keys)):
            table = [dict() for _ in range(dense.horizon)]
            for (tau, h), a in zip(keys, flat):
                table[tau][h] = a
            choices.append(tuple(table))
        per_agent.append(choices)
    best = -np.inf
    for combo in itertools.product(*per_agent):
        best = max(best, evaluate_history_policy(dense, HistoryPolicy(combo)))
    return best


def markov_as_history(model, policy: MarkovPolicy) -> HistoryPolicy:
    """History policy that reads only the latest observation."""
    dense = _as_dense(model)
    tables = []
    for i in range(dense.n_agents):
        levels = []
        for tau, level in enumerate(_history_slots(dense, i)):
            levels.append({h: policy[tau].actions[i][h[-1]] for h in level})
        tables.append(tuple(levels))
    return HistoryPolicy(tuple(tables))


def mdp_value(model) -> float:
    """Centralized optimum (full joint observability, joint control)."""
    dense = _as_dense(model)
    v = np.zeros(dense.n_states)
    for _ in range(dense.horizon):
        v = (dense.R + dense.P @ v).max(axis=1)
    return float(dense.initial @ v)


def dependent_instance(seed: int, obs=2, actions=2, horizon=2) -> DenseDecMdp:
    """Two-agent instance whose agent-0 dynamics read agent 1's observation.

    Agent 0's next observation is drawn from a row chosen by the pair
    (own observation, agent 1's observation), so agent 0's history leaks
    information about agent 1 and the premise of transition independence
    fails.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    sizes = (obs, obs)
    acts = (actions, actions)
    p0 = rng.dirichlet(np.full(obs, 0.3), size=(obs, obs, actions))   # [z0, z1, a0, z0']
    p1 = rng.dirichlet(np.full(obs, 0.3), size=(obs, actions))        # [z1, a1, z1']
    S, A = obs * obs, actions * actions
    P = np.zeros((S, A, S))
    for z0, z1, a0, a1, n0, n1 in itertools.product(range(obs), range(obs), range(actions),
                                                     range(actions), range(obs), range(obs)):
        P[z0 * obs + z1, a0 * actions + a1, n0 * obs + n1] = p0[z0, z1, a0, n0] * p1[z1, a1, n1]
    R = rng.uniform(0.0, 1.0, size=(S, A))
    init = rng.dirichlet(np.ones(S))
    return DenseDecMdp(sizes, acts, P, R, init, horizon)
