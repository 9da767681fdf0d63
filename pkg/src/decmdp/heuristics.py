"""Upper and lower bounds on the optimal value over occupancy states.

The upper bound starts from the fully centralized MDP and is tightened at
visited occupancies by storing backed-up Q-values of decision rules. The
lower bound is the value of concrete policies: the incumbent policy
(linear in the occupancy) and the best tail policy found from each visited
occupancy.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import CapacityError
from .model import FactoredDecMdp
from .occupancy import key_of, marginal
from .policy import MarkovPolicy, evaluate_policy

JOINT_ACTION_CAP = 10**6
STORE_CAP = 10**7


@dataclass(frozen=True, eq=False)
class MdpHeuristic:
    """Finite-horizon value of the centralized MDP underlying the Dec-MDP.

    Attributes
    ----------
    values : (T+1, |S|) ndarray
        ``values[tau, s]``, zero at ``tau = T``.
    q : (T, |S|, |A|) ndarray
        ``q[tau, s, a] = r(s, a) + E[values[tau+1] | s, a]``; these are the
        soft-constraint tables of the backup program.
    greedy : (T, |S|) ndarray
        Smallest maximizing joint action index.
    floor : (T+1, |S|) ndarray
        Worst centralized value; where it equals ``values`` every policy
        earns the same from that state.
    """

    values: np.ndarray
    q: np.ndarray
    greedy: np.ndarray
    floor: np.ndarray


def expected_next_values(model: FactoredDecMdp, values: np.ndarray) -> np.ndarray:
    """``E[v(s') | s, a]`` as an ``(|S|, |A|)`` array, using the product form."""
    n = model.n_agents
    tensor = values.reshape(model.obs_sizes)
    for ag in model.agents:
        # contract the leading next-observation axis, append (z, a) of this agent
        tensor = np.tensordot(tensor, ag.transition, axes=([0], [2]))
    order = [2 * i for i in range(n)] + [2 * i + 1 for i in range(n)]
    return np.ascontiguousarray(tensor.transpose(order)).reshape(model.n_states, model.n_actions)


def build_mdp_heuristic(model: FactoredDecMdp, cap: int = JOINT_ACTION_CAP) -> MdpHeuristic:
    """Backward induction on the centralized MDP."""
    if model.n_actions > cap:
        raise CapacityError(f"{model.n_actions} joint actions exceed the cap {cap}")
    T = model.horizon
    values = np.zeros((T + 1, model.n_states))
    q = np.empty((T, model.n_states, model.n_actions))
    greedy = np.empty((T, model.n_states), dtype=np.intp)
    floor = np.zeros((T + 1, model.n_states))
    R = model.reward_matrix
    for tau in range(T - 1, -1, -1):
        q[tau] = R + expected_next_values(model, values[tau + 1])
        greedy[tau] = np.argmax(q[tau], axis=1)
        values[tau] = q[tau][np.arange(model.n_states), greedy[tau]]
        floor[tau] = (R + expected_next_values(model, floor[tau + 1])).min(axis=1)
    for arr in (values, q, greedy, floor):
        arr.setflags(write=False)
    return MdpHeuristic(values, q, greedy, floor)


def action_classes(model: FactoredDecMdp, heuristic: MdpHeuristic, tau: int, eta) -> tuple:
    """Representative action of every (agent, observation, action) at ``eta``.

    Two rules that differ only by representatives earn exactly the same
    value under every continuation, so the search only needs the
    representatives. A state is *active* when it has mass and its best and
    worst centralized values differ. Slots named by no active state map
    every action to 0. Elsewhere two actions share a class when the
    agent's transition rows coincide and so do the rewards in every active
    state, for every choice of the other agents; the class representative
    is its smallest action.

    Returns
    -------
    tuple of (|Z^i|, |A^i|) int arrays
    """
    probs = np.asarray(eta.probs)
    states = np.flatnonzero(probs > 0)
    active = states[heuristic.values[tau, states] > heuristic.floor[tau, states]]
    rewards = model.reward_matrix[active].reshape((len(active),) + model.action_sizes)
    obs = model.state_obs[active]
    maps = []
    for i, ag in enumerate(model.agents):
        table = np.zeros((ag.n_obs, ag.n_actions), dtype=np.intp)
        for z in np.unique(obs[:, i]):
            slab = np.moveaxis(rewards[obs[:, i] == z], 1 + i, 0).reshape(ag.n_actions, -1)
            rows = ag.transition[z]
            rep = list(range(ag.n_actions))
            for a in range(1, ag.n_actions):
                for b in range(a):
                    if (rep[b] == b and np.array_equal(rows[a], rows[b])
                            and np.array_equal(slab[a], slab[b])):
                        rep[a] = b
                        break
            table[z] = rep
        table.setflags(write=False)
        maps.append(table)
    return tuple(maps)


class Node:
    """Bookkeeping for one visited occupancy."""

    __slots__ = ("tau", "eta", "key", "bag", "upper", "tail_value", "tail_rules",
                 "children", "supported", "canon", "mdp_q", "_mdp_default")

    def __init__(self, tau, eta, key, supported, mdp_default, canon=None):
        self.tau = tau
        self.eta = eta
        self.key = key
        self.bag = {}             # restricted DecisionRule -> stored upper Q-value
        self.upper = None         # last backed-up value; None when stale
        self.tail_value = -np.inf
        self.tail_rules = None
        self.children = {}        # restricted DecisionRule -> next occupancy
        self.supported = supported
        self.canon = canon        # per-agent representative-action tables
        self.mdp_q = {}           # restricted DecisionRule -> centralized-MDP Q-value
        self._mdp_default = mdp_default

    @property
    def mdp_default(self) -> float:
        return self._mdp_default


class BoundStore:
    """Per-stage tables of visited occupancies plus the incumbent policy.

    Parameters
    ----------
    model : FactoredDecMdp
    heuristic : MdpHeuristic
    incumbent : MarkovPolicy
        Initial lower-bound policy.
    backup : callable, optional
        ``backup(store, tau, eta) -> (rule, value)`` returning the greedy
        rule and the current upper bound at ``eta``. Used to refresh stale
        upper bounds lazily; without it a stale bound falls back to the
        max of the stored values and the MDP default.
    cap : int
        Maximum number of stored (occupancy, rule) entries.
    """

    def __init__(self, model, heuristic, incumbent, backup=None, cap=STORE_CAP):
        self.model = model
        self.heuristic = heuristic
        self.backup = backup
        self.cap = cap
        self.levels = [dict() for _ in range(model.horizon + 1)]
        self.n_entries = 0
        self.n_backups = 0
        self.incumbent = None
        self.incumbent_table = None
        self.incumbent_root = -np.inf
        self._set_incumbent(incumbent)

    # nodes ------------------------------------------------------------------
    def node(self, tau, eta, create=True):
        key = key_of(eta)
        node = self.levels[tau].get(key)
        if node is None and create:
            supported = tuple(marginal(self.model, eta, i) > 0 for i in range(self.model.n_agents))
            canon = action_classes(self.model, self.heuristic, tau, eta)
            node = Node(tau, eta, key, supported, self._mdp_value(tau, eta), canon)
            self.levels[tau][key] = node
        return node

    def _mdp_value(self, tau, eta):
        return float(np.asarray(eta.probs) @ self.heuristic.values[tau])

    def mdp_default(self, tau, eta) -> float:
        """Centralized-MDP bound ``sum_s eta(s) v_mdp[tau, s]``."""
        return self._mdp_value(tau, eta)

    def restrict(self, node, rule):
        """Canonical representative of ``rule`` at ``node`` (see :func:`action_classes`)."""
        return rule.canonical(node.canon)

    def canon(self, tau, eta) -> tuple:
        """Representative-action tables at ``eta``, cached on visited nodes."""
        node = self.node(tau, eta, create=False)
        if node is not None:
            return node.canon
        return action_classes(self.model, self.heuristic, tau, eta)

    # upper bound ------------------------------------------------------------
    def ub_value(self, tau, eta) -> float:
        """Current upper bound on the optimal value from ``eta`` at stage ``tau``."""
        if tau >= self.model.horizon:
            return 0.0
        node = self.node(tau, eta, create=False)
        if node is None:
            return self.mdp_default(tau, eta)
        return self.node_upper(node)

    def node_upper(self, node) -> float:
        if node.upper is not None:
            return node.upper
        if not node.bag:
            return node.mdp_default
        if self.backup is None:
            return max(max(node.bag.values()), node.mdp_default)
        _, value = self.backup(self, node.tau, node.eta)
        return value

    def set_upper(self, node, value):
        node.upper = min(float(value), node.mdp_default)

    def ub_update(self, tau, eta, rule, new_q) -> float:
        """Store ``min(previous, new_q)`` for ``rule`` at ``eta``; return the stored value."""
        node = self.node(tau, eta)
        rule = self.restrict(node, rule)
        old = node.bag.get(rule)
        if old is None:
            if self.n_entries >= self.cap:
                raise CapacityError(f"bound store exceeded {self.cap} entries")
            self.n_entries += 1
            node.bag[rule] = float(new_q)
        else:
            node.bag[rule] = min(old, float(new_q))
        node.upper = None
        return node.bag[rule]

    def stored(self, tau, eta):
        """Mapping of restricted rule to stored upper Q-value at ``eta`` (empty if unvisited)."""
        node = self.node(tau, eta, create=False)
        return {} if node is None else dict(node.bag)

    # lower bound ------------------------------------------------------------
    def _set_incumbent(self, policy):
        table = evaluate_policy(self.model, policy)
        self.incumbent = policy
        self.incumbent_table = table
        self.incumbent_root = float(self.model.initial @ table.values[0])

    def incumbent_value(self, tau, eta) -> float:
        """Value of the incumbent's tail from stage ``tau`` at ``eta``."""
        if tau >= self.model.horizon:
            return 0.0
        return float(np.asarray(eta.probs) @ self.incumbent_table.values[tau])

    def lower_tail(self, tau, eta, node=None):
        """Best known lower bound at ``eta`` and the tail rules achieving it."""
        if tau >= self.model.horizon:
            return 0.0, ()
        inc = self.incumbent_value(tau, eta)
        if node is None:
            node = self.node(tau, eta, create=False)
        if node is not None and node.tail_value > inc:
            return node.tail_value, node.tail_rules
        return inc, tuple(self.incumbent.rules[tau:])

    def lb_value(self, tau, eta) -> float:
        return self.lower_tail(tau, eta)[0]

    def offer_tail(self, node, value, rules) -> bool:
        """Record a tail policy from ``node`` if it beats the best one so far."""
        if value > node.tail_value:
            node.tail_value = float(value)
            node.tail_rules = tuple(rules)
            return True
        return False

    def lb_update(self, model, candidate: MarkovPolicy) -> bool:
        """Replace the incumbent iff ``candidate`` is strictly better at the start."""
        if len(candidate) != model.horizon:
            raise ValueError("candidate policy length differs from the horizon")
        table = evaluate_policy(model, candidate)
        value = float(model.initial @ table.values[0])
        if value > self.incumbent_root:
            self.incumbent = candidate
            self.incumbent_table = table
            self.incumbent_root = value
            return True
        return False

    # introspection ----------------------------------------------------------
    def snapshot(self):
        """Copy of every stored value keyed by ``(tau, key, rule)``."""
        out = {}
        for tau, level in enumerate(self.levels):
            for key, node in level.items():
                for rule, q in node.bag.items():
                    out[(tau, key, rule)] = q
        return out
