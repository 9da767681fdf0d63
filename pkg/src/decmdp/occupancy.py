"""State-occupancy distributions and their deterministic dynamics."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np

from .exceptions import HorizonError
from .model import FactoredDecMdp, joint_initial

KEY_DECIMALS = 10


@dataclass(frozen=True, eq=False)
class Occupancy:
    """Probability vector over joint states at a given stage."""

    probs: np.ndarray
    stage: int = 0

    def __post_init__(self):
        p = np.array(self.probs, dtype=np.float64)   # private copy; frozen below
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    def join(self) -> "Occupancy":
        return self


@dataclass(frozen=True, eq=False)
class FactoredOccupancy:
    """Product-form occupancy kept as one marginal per agent."""

    factors: tuple
    stage: int = 0

    def __post_init__(self):
        fs = []
        for f in self.factors:
            f = np.array(f, dtype=np.float64)
            f.setflags(write=False)
            fs.append(f)
        object.__setattr__(self, "factors", tuple(fs))

    @cached_property
    def probs(self) -> np.ndarray:
        p = joint_initial(self.factors)
        p.setflags(write=False)
        return p

    def join(self) -> Occupancy:
        return Occupancy(self.probs, self.stage)


class OccupancyKey(NamedTuple):
    stage: int
    digest: bytes


def initial_occupancy(model: FactoredDecMdp, factored: bool = True):
    """Stage-0 occupancy; factored when the model's start is a product."""
    if factored and model.initial_factors is not None:
        return FactoredOccupancy(model.initial_factors, 0)
    return Occupancy(model.initial, 0)


def local_matrices(model: FactoredDecMdp, rule):
    """Per-agent ``(|Z^i|, |Z^i|)`` transition matrices induced by a decision rule."""
    mats = []
    for ag, acts in zip(model.agents, rule.arrays):
        mats.append(ag.transition[np.arange(ag.n_obs), acts, :])
    return mats


def _check_stage(model, stage):
    if stage >= model.horizon:
        raise HorizonError(f"cannot advance occupancy at stage {stage} (horizon {model.horizon})")


def advance(model: FactoredDecMdp, eta, rule) -> Occupancy:
    """Joint occupancy one stage later under decision rule ``rule``."""
    _check_stage(model, eta.stage)
    tensor = np.asarray(eta.probs).reshape(model.obs_sizes)
    for i, m in enumerate(local_matrices(model, rule)):
        tensor = np.moveaxis(np.tensordot(tensor, m, axes=([i], [0])), -1, i)
    return Occupancy(np.ascontiguousarray(tensor).ravel(), eta.stage + 1)


def advance_factored(model: FactoredDecMdp, feta: FactoredOccupancy, rule) -> FactoredOccupancy:
    """Advance each agent's marginal with its own local chain."""
    _check_stage(model, feta.stage)
    mats = local_matrices(model, rule)
    return FactoredOccupancy(tuple(f @ m for f, m in zip(feta.factors, mats)), feta.stage + 1)


def step(model, eta, rule):
    """Advance either representation, keeping it."""
    if isinstance(eta, FactoredOccupancy):
        return advance_factored(model, eta, rule)
    return advance(model, eta, rule)


def joint_actions(model: FactoredDecMdp, rule) -> np.ndarray:
    """Joint action index chosen by ``rule`` in every joint state."""
    ja = np.zeros(model.n_states, dtype=np.intp)
    for i, (acts, w) in enumerate(zip(rule.arrays, model.action_radix)):
        ja += acts[model.state_obs[:, i]] * w
    return ja


def expected_reward(model: FactoredDecMdp, eta, rule) -> float:
    """Expected immediate reward ``sum_s eta(s) r(s, rule(s))``."""
    p = eta.probs
    if p.shape != (model.n_states,):
        raise ValueError(f"occupancy has length {p.size}, model has {model.n_states} states")
    rewards = model.reward_matrix[np.arange(model.n_states), joint_actions(model, rule)]
    return float(p @ rewards)


def key_of(eta) -> OccupancyKey:
    """Hashable key of an occupancy, rounded to ``KEY_DECIMALS`` digits."""
    rounded = np.round(np.asarray(eta.probs, dtype=np.float64), KEY_DECIMALS) + 0.0
    digest = hashlib.blake2b(rounded.tobytes(), digest_size=16).digest()
    return OccupancyKey(int(eta.stage), digest)


def marginal(model: FactoredDecMdp, eta, agent: int) -> np.ndarray:
    """Agent ``agent``'s marginal distribution over its local observations."""
    if isinstance(eta, FactoredOccupancy):
        return np.asarray(eta.factors[agent])
    tensor = np.asarray(eta.probs).reshape(model.obs_sizes)
    axes = tuple(j for j in range(model.n_agents) if j != agent)
    return tensor.sum(axis=axes)
