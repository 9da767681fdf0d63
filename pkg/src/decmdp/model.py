"""Factored, transition-independent decentralized MDPs.

A joint state is the tuple of the agents' local observations and a joint
action the tuple of their local actions. Both are linearised with a
mixed-radix code in which agent 0 is the most significant digit, so the
linear order matches ``itertools.product`` over the agents' sets.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from .exceptions import ModelError

TOL = 1e-9


@dataclass(frozen=True, eq=False)
class LocalAgentModel:
    """One agent's local observation set, action set and transition table.

    ``transition[z, a, z2]`` is the probability that the agent observes
    ``z2`` next after taking ``a`` while observing ``z``.
    """

    observations: tuple
    actions: tuple
    transition: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "observations", tuple(self.observations))
        object.__setattr__(self, "actions", tuple(self.actions))
        table = np.array(self.transition, dtype=np.float64)
        table.setflags(write=False)
        object.__setattr__(self, "transition", table)

    @property
    def n_obs(self) -> int:
        return len(self.observations)

    @property
    def n_actions(self) -> int:
        return len(self.actions)


def _radices(sizes):
    # weight of each digit, agent 0 most significant
    weights = [1] * len(sizes)
    for i in range(len(sizes) - 2, -1, -1):
        weights[i] = weights[i + 1] * sizes[i + 1]
    return tuple(weights)


def encode(digits: Sequence[int], sizes: Sequence[int]) -> int:
    """Mixed-radix linear index of ``digits`` (first digit most significant)."""
    if len(digits) != len(sizes):
        raise IndexError(f"expected {len(sizes)} digits, got {len(digits)}")
    index = 0
    for d, size in zip(digits, sizes):
        d = int(d)
        if not 0 <= d < size:
            raise IndexError(f"digit {d} out of range [0, {size})")
        index = index * size + d
    return index


def decode(index: int, sizes: Sequence[int]) -> tuple:
    """Inverse of :func:`encode`."""
    total = math.prod(sizes)
    if not 0 <= index < total:
        raise IndexError(f"index {index} out of range [0, {total})")
    digits = []
    for size in reversed(sizes):
        index, d = divmod(index, size)
        digits.append(d)
    return tuple(reversed(digits))


@dataclass(frozen=True, eq=False)
class FactoredDecMdp:
    """An n-agent Dec-MDP with independent transitions and observations.

    Parameters
    ----------
    agents : sequence of LocalAgentModel
        Local models in canonical agent order.
    reward : mapping
        Sparse joint reward ``{(state_index, action_index): value}``; absent
        pairs are worth 0.
    horizon : int
        Number of decision steps ``T``.
    initial : (|S|,) array_like
        Initial state occupancy over joint states.
    initial_factors : sequence of arrays, optional
        Per-agent marginals when the initial occupancy is a product. Set
        automatically when ``initial`` factorises.
    name : str
        Free-form label, used in reports.
    """

    agents: tuple
    reward: Mapping
    horizon: int
    initial: np.ndarray
    initial_factors: tuple | None = None
    name: str = "model"
    _factor_check: bool = field(default=True, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(self.agents))
        rewards = {(int(s), int(a)): float(v) for (s, a), v in dict(self.reward).items() if v != 0.0}
        object.__setattr__(self, "reward", rewards)
        init = np.array(self.initial, dtype=np.float64).ravel()
        init.setflags(write=False)
        object.__setattr__(self, "initial", init)
        if self.initial_factors is not None:
            factors = tuple(np.array(f, dtype=np.float64) for f in self.initial_factors)
            for f in factors:
                f.setflags(write=False)
            object.__setattr__(self, "initial_factors", factors)
        elif self._factor_check:
            object.__setattr__(self, "initial_factors", factorize(init, self.obs_sizes))

    # shapes -----------------------------------------------------------------
    @property
    def n_agents(self) -> int:
        return len(self.agents)

    @cached_property
    def obs_sizes(self) -> tuple:
        return tuple(ag.n_obs for ag in self.agents)

    @cached_property
    def action_sizes(self) -> tuple:
        return tuple(ag.n_actions for ag in self.agents)

    @cached_property
    def n_states(self) -> int:
        return math.prod(self.obs_sizes)

    @cached_property
    def n_actions(self) -> int:
        return math.prod(self.action_sizes)

    @cached_property
    def state_radix(self) -> tuple:
        return _radices(self.obs_sizes)

    @cached_property
    def action_radix(self) -> tuple:
        return _radices(self.action_sizes)

    @cached_property
    def state_obs(self) -> np.ndarray:
        """``(|S|, n)`` array of the local observation of each agent in each joint state."""
        grids = np.indices(self.obs_sizes).reshape(self.n_agents, -1).T
        grids = np.ascontiguousarray(grids, dtype=np.intp)
        grids.setflags(write=False)
        return grids

    @cached_property
    def reward_matrix(self) -> np.ndarray:
        """Dense ``(|S|, |A|)`` reward table."""
        table = np.zeros((self.n_states, self.n_actions))
        for (s, a), v in self.reward.items():
            table[s, a] = v
        table.setflags(write=False)
        return table

    # indexing ---------------------------------------------------------------
    def state_index(self, state) -> int:
        if isinstance(state, (int, np.integer)):
            if not 0 <= state < self.n_states:
                raise IndexError(f"state index {state} out of range")
            return int(state)
        return encode(state, self.obs_sizes)

    def action_index(self, action) -> int:
        if isinstance(action, (int, np.integer)):
            if not 0 <= action < self.n_actions:
                raise IndexError(f"action index {action} out of range")
            return int(action)
        return encode(action, self.action_sizes)

    def state_tuple(self, index: int) -> tuple:
        return decode(index, self.obs_sizes)

    def action_tuple(self, index: int) -> tuple:
        return decode(index, self.action_sizes)

    def with_horizon(self, horizon: int) -> "FactoredDecMdp":
        return replace(self, horizon=int(horizon))

    def with_initial(self, initial, factors=None) -> "FactoredDecMdp":
        return replace(self, initial=initial, initial_factors=factors)


def factorize(joint, sizes, tol=1e-12):
    """Return per-agent marginals if ``joint`` is their outer product, else None."""
    joint = np.asarray(joint, dtype=np.float64)
    if joint.size != math.prod(sizes) or len(sizes) < 1:
        return None
    tensor = joint.reshape(sizes)
    factors = []
    for i in range(len(sizes)):
        axes = tuple(j for j in range(len(sizes)) if j != i)
        factors.append(tensor.sum(axis=axes))
    product = factors[0]
    for f in factors[1:]:
        product = np.multiply.outer(product, f)
    if np.max(np.abs(product.ravel() - joint)) > tol:
        return None
    return tuple(factors)


def joint_initial(factors) -> np.ndarray:
    """Outer product of per-agent initial marginals, flattened in canonical order."""
    product = np.asarray(factors[0], dtype=np.float64)
    for f in factors[1:]:
        product = np.multiply.outer(product, np.asarray(f, dtype=np.float64))
    return product.ravel()


def make_model(agents, reward, horizon, initial=None, initial_factors=None, name="model"):
    """Build a model, accepting tuple-keyed rewards and factored starts.

    ``reward`` keys may be linear ``(s, a)`` indices or ``(state_tuple,
    action_tuple)`` pairs.
    """
    agents = tuple(agents)
    obs_sizes = tuple(a.n_obs for a in agents)
    act_sizes = tuple(a.n_actions for a in agents)
    sparse = {}
    for (s, a), v in dict(reward).items():
        si = encode(s, obs_sizes) if isinstance(s, tuple) else int(s)
        ai = encode(a, act_sizes) if isinstance(a, tuple) else int(a)
        if v != 0.0:
            sparse[(si, ai)] = sparse.get((si, ai), 0.0) + float(v)
    if initial is None:
        if initial_factors is None:
            raise ValueError("need initial or initial_factors")
        initial = joint_initial(initial_factors)
    return FactoredDecMdp(agents, sparse, int(horizon), initial, initial_factors, name)


# validation -----------------------------------------------------------------
@dataclass
class ValidationReport:
    """Invariant violations found in a model; empty when the model is valid."""

    issues: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.issues

    def __bool__(self):
        return self.ok

    def __str__(self):
        return "valid" if self.ok else "\n".join(self.issues)


def validate(model: FactoredDecMdp) -> ValidationReport:
    """Check every model invariant and list the violations."""
    issues = []
    if model.n_agents < 2:
        issues.append(f"agents: need at least 2 agents, got {model.n_agents}")
    for i, ag in enumerate(model.agents):
        if not ag.observations:
            issues.append(f"agent {i}: empty observation set")
        if not ag.actions:
            issues.append(f"agent {i}: empty action set")
        if len(set(ag.observations)) != len(ag.observations):
            issues.append(f"agent {i}: duplicate observation identifiers")
        if len(set(ag.actions)) != len(ag.actions):
            issues.append(f"agent {i}: duplicate action identifiers")
        shape = (ag.n_obs, ag.n_actions, ag.n_obs)
        if ag.transition.shape != shape:
            issues.append(f"agent {i}: transition shape {ag.transition.shape}, expected {shape}")
            continue
        bad = (ag.transition < 0) | (ag.transition > 1) | ~np.isfinite(ag.transition)
        for z, a, z2 in zip(*np.nonzero(bad)):
            issues.append(
                f"agent {i}: transition({ag.observations[z]}, {ag.actions[a]}, "
                f"{ag.observations[z2]}) = {float(ag.transition[z, a, z2])!r} outside [0, 1]"
            )
        sums = ag.transition.sum(axis=2)
        for z, a in zip(*np.nonzero(np.abs(sums - 1.0) > TOL)):
            issues.append(
                f"agent {i}: transition row (z={ag.observations[z]}, a={ag.actions[a]}) "
                f"sums to {float(sums[z, a])!r}"
            )
    if model.horizon < 1:
        issues.append(f"horizon: must be positive, got {model.horizon}")
    if model.initial.shape != (model.n_states,):
        issues.append(f"initial occupancy: length {model.initial.size}, expected {model.n_states}")
    else:
        if np.any(model.initial < 0) or not np.all(np.isfinite(model.initial)):
            issues.append("initial occupancy: negative or non-finite entries")
        total = model.initial.sum()
        if abs(total - 1.0) > TOL:
            issues.append(f"initial occupancy: sums to {float(total)!r}")
    for (s, a), v in model.reward.items():
        if not (0 <= s < model.n_states and 0 <= a < model.n_actions):
            issues.append(f"reward: entry (s={s}, a={a}) out of range")
        elif not np.isfinite(v):
            issues.append(f"reward: entry (s={s}, a={a}) is not finite")
    return ValidationReport(issues)


def check(model: FactoredDecMdp) -> FactoredDecMdp:
    """Raise :class:`ModelError` unless ``model`` is valid; return it otherwise."""
    report = validate(model)
    if not report.ok:
        raise ModelError("invalid model:\n" + str(report), report.issues)
    return model


# elementary queries ---------------------------------------------------------
def joint_transition(model: FactoredDecMdp, s, a, s2) -> float:
    """Probability of moving from joint state ``s`` to ``s2`` under joint action ``a``.

    The product of the local factors is taken in canonical agent order.
    """
    zs = model.state_tuple(model.state_index(s))
    acts = model.action_tuple(model.action_index(a))
    zs2 = model.state_tuple(model.state_index(s2))
    p = 1.0
    for ag, z, act, z2 in zip(model.agents, zs, acts, zs2):
        p *= float(ag.transition[z, act, z2])
    return p


def reward(model: FactoredDecMdp, s, a) -> float:
    """Reward of joint action ``a`` in joint state ``s`` (0 when not stored)."""
    return model.reward.get((model.state_index(s), model.action_index(a)), 0.0)
