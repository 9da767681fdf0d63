"""Decentralized Markov decision rules, policies and exact policy evaluation."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .exceptions import CapacityError
from .model import FactoredDecMdp

ENUMERATION_CAP = 10**7


@dataclass(frozen=True)
class DecisionRule:
    """One local action per (agent, observation) slot.

    ``actions[i][z]`` is agent ``i``'s action when it observes ``z``.
    Equality and hashing are by value; tuple ordering of :attr:`flat`
    coincides with canonical-index ordering.
    """

    actions: tuple

    def __post_init__(self):
        object.__setattr__(self, "actions", tuple(tuple(int(a) for a in row) for row in self.actions))

    @cached_property
    def arrays(self) -> tuple:
        out = []
        for row in self.actions:
            arr = np.array(row, dtype=np.intp)
            arr.setflags(write=False)
            out.append(arr)
        return tuple(out)

    @property
    def flat(self) -> tuple:
        return tuple(itertools.chain.from_iterable(self.actions))

    def __call__(self, agent: int, obs: int) -> int:
        return self.actions[agent][obs]

    def index(self, model: FactoredDecMdp) -> int:
        """Canonical mixed-radix index; slot (agent 0, obs 0) is most significant."""
        idx = 0
        for i, row in enumerate(self.actions):
            base = model.action_sizes[i]
            for a in row:
                idx = idx * base + a
        return idx

    def is_valid_for(self, model: FactoredDecMdp) -> bool:
        if len(self.actions) != model.n_agents:
            return False
        for row, ag in zip(self.actions, model.agents):
            if len(row) != ag.n_obs or any(not 0 <= a < ag.n_actions for a in row):
                return False
        return True

    @classmethod
    def from_index(cls, model: FactoredDecMdp, index: int) -> "DecisionRule":
        slots = [(i, z) for i, ag in enumerate(model.agents) for z in range(ag.n_obs)]
        digits = []
        for i, _ in reversed(slots):
            index, d = divmod(index, model.action_sizes[i])
            digits.append(d)
        if index:
            raise IndexError("rule index out of range")
        digits.reverse()
        rows, pos = [], 0
        for ag in model.agents:
            rows.append(digits[pos:pos + ag.n_obs])
            pos += ag.n_obs
        return cls(rows)

    def restricted(self, supported) -> "DecisionRule":
        """Copy with action 0 on every slot whose observation is unsupported.

        ``supported[i]`` is a boolean mask over agent ``i``'s observations.
        """
        rows = []
        for row, mask in zip(self.actions, supported):
            rows.append(tuple(a if m else 0 for a, m in zip(row, mask)))
        return DecisionRule(rows)

    def canonical(self, maps) -> "DecisionRule":
        """Copy with every action replaced by its class representative.

        ``maps[i][z, a]`` is the representative of action ``a`` at agent
        ``i``'s observation ``z``.
        """
        rows = []
        for row, table in zip(self.actions, maps):
            rows.append(tuple(int(table[z, a]) for z, a in enumerate(row)))
        return DecisionRule(rows)


@dataclass(frozen=True)
class MarkovPolicy:
    """Horizon-indexed sequence of decentralized decision rules."""

    rules: tuple

    def __post_init__(self):
        object.__setattr__(self, "rules", tuple(self.rules))

    def __len__(self):
        return len(self.rules)

    def __getitem__(self, tau):
        return self.rules[tau]

    def action(self, tau: int, agent: int, obs: int) -> int:
        return self.rules[tau].actions[agent][obs]


@dataclass(frozen=True, eq=False)
class StateValueTable:
    """Per-stage value vectors ``values[tau, s]`` for ``tau = 0..T``; the last row is zero."""

    values: np.ndarray

    @property
    def horizon(self) -> int:
        return self.values.shape[0] - 1


def rule_count(model: FactoredDecMdp) -> int:
    """Number of decentralized decision rules, ``prod_i |A^i|^|Z^i|`` (exact integer)."""
    return math.prod(ag.n_actions ** ag.n_obs for ag in model.agents)


def enumerate_rules(model: FactoredDecMdp, cap: int = ENUMERATION_CAP):
    """Yield every decision rule once, in increasing canonical index."""
    count = rule_count(model)
    if count > cap:
        raise CapacityError(
            f"{count} decision rules exceed the enumeration cap {cap}; use the cop backup mode"
        )
    slot_ranges = [range(ag.n_actions) for ag in model.agents for _ in range(ag.n_obs)]
    sizes = model.obs_sizes
    for flat in itertools.product(*slot_ranges):
        rows, pos = [], 0
        for n in sizes:
            rows.append(flat[pos:pos + n])
            pos += n
        yield DecisionRule(rows)


def rule_table(model: FactoredDecMdp, cap: int = ENUMERATION_CAP) -> np.ndarray:
    """All rules as a ``(count, n_slots)`` action array in canonical order."""
    count = rule_count(model)
    if count > cap:
        raise CapacityError(f"{count} decision rules exceed the enumeration cap {cap}")
    bases = [ag.n_actions for ag in model.agents for _ in range(ag.n_obs)]
    grid = np.indices(bases, dtype=np.intp).reshape(len(bases), -1).T
    return np.ascontiguousarray(grid)


def _expect_next(model: FactoredDecMdp, values: np.ndarray, rule: DecisionRule) -> np.ndarray:
    # E[v(s') | s, rule(s)] for every s, contracting one agent axis at a time
    tensor = values.reshape(model.obs_sizes)
    for i, (ag, acts) in enumerate(zip(model.agents, rule.arrays)):
        m = ag.transition[np.arange(ag.n_obs), acts, :]
        tensor = np.moveaxis(np.tensordot(tensor, m, axes=([i], [1])), -1, i)
    return np.ascontiguousarray(tensor).ravel()


def evaluate_policy(model: FactoredDecMdp, pi: MarkovPolicy) -> StateValueTable:
    """Backward induction of a Markov policy over joint states."""
    T = model.horizon
    if len(pi) != T:
        raise ValueError(f"policy has {len(pi)} rules, horizon is {T}")
    values = np.zeros((T + 1, model.n_states))
    rows = np.arange(model.n_states)
    R = model.reward_matrix
    for tau in range(T - 1, -1, -1):
        rule = pi[tau]
        ja = np.zeros(model.n_states, dtype=np.intp)
        for i, (acts, w) in enumerate(zip(rule.arrays, model.action_radix)):
            ja += acts[model.state_obs[:, i]] * w
        values[tau] = R[rows, ja] + _expect_next(model, values[tau + 1], rule)
    values.setflags(write=False)
    return StateValueTable(values)


def value_at(table: StateValueTable, tau: int, eta) -> float:
    """Value of the evaluated policy from stage ``tau`` at occupancy ``eta``."""
    if not 0 <= tau <= table.horizon:
        raise IndexError(f"stage {tau} outside [0, {table.horizon}]")
    return float(np.asarray(eta.probs) @ table.values[tau])


def random_policy(model: FactoredDecMdp, seed: int = 0) -> MarkovPolicy:
    """Uniformly random Markov policy from a PCG64 stream seeded with ``seed``."""
    rng = np.random.Generator(np.random.PCG64(seed))
    rules = []
    for _ in range(model.horizon):
        rows = [rng.integers(0, ag.n_actions, size=ag.n_obs) for ag in model.agents]
        rules.append(DecisionRule(rows))
    return MarkovPolicy(rules)


def constant_policy(model: FactoredDecMdp, action: int = 0) -> MarkovPolicy:
    """Policy taking local action ``action`` everywhere (deterministic fallback)."""
    rule = DecisionRule([[action] * ag.n_obs for ag in model.agents])
    return MarkovPolicy([rule] * model.horizon)
