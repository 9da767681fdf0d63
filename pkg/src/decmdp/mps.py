"""Markov Policy Search: LRTA*-style trials over occupancy states."""
from __future__ import annotations

import sys
import time
from dataclasses import dataclass, field

from . import cop
from .exceptions import CapacityError
from .heuristics import STORE_CAP, BoundStore, build_mdp_heuristic
from .model import FactoredDecMdp
from .occupancy import expected_reward, initial_occupancy, step
from .policy import (ENUMERATION_CAP, MarkovPolicy, constant_policy, random_policy,
                     rule_count)

MODES = ("exhaustive", "cop")


@dataclass
class SolveConfig:
    """Solver settings.

    ``inner_cap`` bounds the backups performed at one occupancy within a
    single trial; ``None`` means the rule count (exhaustive) or 10**4 (cop).
    ``time_limit`` (seconds) stops the search between two backups; the
    bounds reached so far are still valid and the solution is reported as
    not converged.
    """

    epsilon: float = 1e-4
    mode: str = "cop"
    trial_cap: int = 10**6
    seed: int | None = 0
    enumeration_cap: int = ENUMERATION_CAP
    store_cap: int = STORE_CAP
    inner_cap: int | None = None
    factored: bool = True
    time_limit: float | None = None

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.time_limit is not None and not self.time_limit > 0:
            raise ValueError("time_limit must be positive")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")


class OutOfTime(Exception):
    """Raised inside a trial when the configured time limit has passed."""


@dataclass
class TrialTrace:
    """Greedy path of one trial plus every visit's gap on entry and exit."""

    path: list = field(default_factory=list)
    visits: list = field(default_factory=list)  # (tau, gap_before, gap_after)


@dataclass
class Solution:
    policy: MarkovPolicy
    lower: float
    upper: float
    trials: int
    backups: int
    wall_seconds: float
    converged: bool
    trace: list = field(default_factory=list)  # (trial, lower, upper, seconds)
    timed_out: bool = False

    @property
    def gap(self) -> float:
        return self.upper - self.lower


class Planner:
    """Holds the bound store for one model and runs trials against it.

    Parameters
    ----------
    model : FactoredDecMdp
    config : SolveConfig
    on_trial : callable, optional
        Called as ``on_trial(planner, trial_index)`` after every trial.
    """

    def __init__(self, model: FactoredDecMdp, config: SolveConfig = None, on_trial=None,
                 store: BoundStore = None, eta0=None):
        self.model = model
        self.config = config or SolveConfig()
        if self.config.mode == "exhaustive":
            count = rule_count(model)
            if count > self.config.enumeration_cap:
                raise CapacityError(
                    f"{count} decision rules exceed the enumeration cap; use the cop mode")
            backup = self._exhaustive
            default_inner = count
        else:
            backup = cop.cop_store_backup
            default_inner = 10**4
        self.inner_cap = self.config.inner_cap or default_inner
        self._backup_fn = backup
        if store is None:
            if self.config.seed is None:
                start = constant_policy(model)
            else:
                start = random_policy(model, self.config.seed)
            store = BoundStore(model, build_mdp_heuristic(model), start,
                               cap=self.config.store_cap)
        store.backup = self._counted_backup
        self.store = store
        self.heuristic = store.heuristic
        if eta0 is None:
            eta0 = initial_occupancy(model, factored=self.config.factored)
        self.eta0 = eta0
        self.on_trial = on_trial
        self.trials = 0
        self.deadline = None
        if self.config.time_limit is not None:
            self.deadline = time.perf_counter() + self.config.time_limit

    def _exhaustive(self, store, tau, eta):
        return cop.exhaustive_backup(store.model, store, tau, eta, cap=self.config.enumeration_cap)

    def _counted_backup(self, store, tau, eta):
        if self.deadline is not None and time.perf_counter() > self.deadline:
            raise OutOfTime
        store.n_backups += 1
        rule, value = self._backup_fn(store, tau, eta)
        node = store.node(tau, eta)
        store.set_upper(node, value)
        return rule, node.upper

    # bounds at the root -----------------------------------------------------
    def lower(self) -> float:
        return self.store.incumbent_root

    def upper(self) -> float:
        return self.store.ub_value(0, self.eta0)

    # one trial --------------------------------------------------------------
    def trial(self) -> TrialTrace:
        """One descent from the start occupancy; the incumbent is updated afterwards.

        Raises
        ------
        OutOfTime
            When the time limit passes mid-trial. Bounds stay valid.
        """
        trace = TrialTrace()
        limit = sys.getrecursionlimit()
        if self.model.horizon + 100 > limit:
            sys.setrecursionlimit(self.model.horizon * 2 + 200)
        try:
            self._visit(0, self.eta0, trace)
        finally:
            sys.setrecursionlimit(limit)
            self._harvest()
        self.trials += 1
        if self.on_trial is not None:
            self.on_trial(self, self.trials)
        return trace

    def _harvest(self):
        # the best complete tail found from the root becomes the incumbent if better
        root = self.store.node(0, self.eta0, create=False)
        if root is not None and root.tail_rules is not None:
            self.store.lb_update(self.model, MarkovPolicy(root.tail_rules))

    def _gap(self, tau, eta, node):
        up = self.store.node_upper(node) if node is not None else self.store.ub_value(tau, eta)
        low, _ = self.store.lower_tail(tau, eta, node)
        return up - low

    def _visit(self, tau, eta, trace):
        store, eps = self.store, self.config.epsilon
        if tau == self.model.horizon:
            trace.visits.append((tau, 0.0, 0.0))
            return
        node = store.node(tau, eta, create=False)
        before = self._gap(tau, eta, node)
        if before <= eps:
            trace.visits.append((tau, before, before))
            return
        node = store.node(tau, eta)
        iterations = 0
        while True:
            rule, up = self._counted_backup(store, tau, eta)
            low, _ = store.lower_tail(tau, eta, node)
            if up - low <= eps or iterations >= self.inner_cap:
                break
            iterations += 1
            rule = store.restrict(node, rule)
            if len(trace.path) <= tau:
                trace.path.append(rule)
            child = node.children.get(rule)
            if child is None:
                child = step(self.model, eta, rule)
                node.children[rule] = child
            self._visit(tau + 1, child, trace)
            r = expected_reward(self.model, eta, rule)
            store.ub_update(tau, eta, rule, r + store.ub_value(tau + 1, child))
            child_low, child_tail = store.lower_tail(tau + 1, child)
            store.offer_tail(node, r + child_low, (rule,) + tuple(child_tail))
        trace.visits.append((tau, before, self._gap(tau, eta, node)))


def solve(model: FactoredDecMdp, config: SolveConfig = None, on_trial=None) -> Solution:
    """Run trials until the root gap is at most epsilon or the trial cap is hit."""
    config = config or SolveConfig()
    t0 = time.perf_counter()
    planner = Planner(model, config, on_trial)
    trace = [(0, planner.lower(), planner.upper(), time.perf_counter() - t0)]
    timed_out = False
    while planner.upper() - planner.lower() > config.epsilon and planner.trials < config.trial_cap:
        try:
            planner.trial()
        except OutOfTime:
            timed_out = True
            break
        trace.append((planner.trials, planner.lower(), planner.upper(), time.perf_counter() - t0))
    planner.deadline = None   # a stale root bound may need one more backup
    lower, upper = planner.lower(), planner.upper()
    return Solution(
        policy=planner.store.incumbent,
        lower=lower,
        upper=upper,
        trials=planner.trials,
        backups=planner.store.n_backups,
        wall_seconds=time.perf_counter() - t0,
        converged=upper - lower <= config.epsilon,
        trace=trace,
        timed_out=timed_out,
    )


def trial(model, store, eta0, config) -> TrialTrace:
    """Run a single trial on an existing store (see :class:`Planner`)."""
    return Planner(model, config, store=store, eta0=eta0).trial()
