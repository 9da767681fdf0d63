"""Greedy decision-rule selection at an occupancy.

Two interchangeable backups are provided: explicit enumeration of every
decentralized decision rule, and a weighted constraint optimization
problem solved exactly by depth-first branch and bound.

Rules are compared through their canonical form at the occupancy (see
:func:`decmdp.heuristics.action_classes`): every action is replaced by the
smallest action that is interchangeable with it there, and slots that
cannot affect any value are pinned to action 0. Only canonical rules are
searched and stored rules are looked up by canonical form.
Among rules whose value is within ``TIE_TOL`` of the maximum, the one with
the smallest canonical index is returned; both backups implement the same
selection so they agree rule for rule.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import HorizonError
from .occupancy import joint_actions, marginal
from .policy import ENUMERATION_CAP, DecisionRule, rule_table

TIE_TOL = 1e-9
_EXCLUDED = -1e200   # score of a non-representative action; survives finite sums


@dataclass(eq=False)
class CopProblem:
    """Backup program at one occupancy.

    Attributes
    ----------
    obs_sizes, action_sizes : tuple
        Shape of the rule space.
    variables : list of (agent, obs)
        One variable per supported (agent, observation) slot, canonical order.
    states : (k,) ndarray
        Joint states with positive mass; one soft constraint each.
    scopes : (k, n) ndarray
        Local observation of every agent in each constrained state.
    weights : (k,) ndarray
        Occupancy mass of each constrained state.
    tables : (k, |A|) ndarray
        Soft-constraint values ``c(s, a)`` (unweighted).
    corrections : list of (DecisionRule, float)
        Full-scope corrections ``g <= 0`` for stored rules (canonical form).
    canon : tuple of (|Z^i|, |A^i|) int arrays, optional
        Representative action of every slot and action; an action is in
        its variable's domain iff it is its own representative. ``None``
        keeps full domains.
    """

    obs_sizes: tuple
    action_sizes: tuple
    variables: list
    states: np.ndarray
    scopes: np.ndarray
    weights: np.ndarray
    tables: np.ndarray
    corrections: list = field(default_factory=list)
    canon: tuple | None = None

    def __post_init__(self):
        if self.canon is None:
            self.canon = tuple(np.tile(np.arange(na), (nz, 1))
                               for nz, na in zip(self.obs_sizes, self.action_sizes))

    @property
    def n_agents(self) -> int:
        return len(self.obs_sizes)

    def domain(self, agent: int, obs: int) -> tuple:
        """Actions searched for the variable ``(agent, obs)``."""
        row = self.canon[agent][obs]
        return tuple(a for a in range(len(row)) if row[a] == a)

    @property
    def supported(self) -> tuple:
        masks = [np.zeros(n, dtype=bool) for n in self.obs_sizes]
        for i, z in self.variables:
            masks[i][z] = True
        return tuple(masks)

    def joint_action_index(self, rule: DecisionRule) -> np.ndarray:
        ja = np.zeros(len(self.states), dtype=np.intp)
        for i in range(self.n_agents):
            ja = ja * self.action_sizes[i] + rule.arrays[i][self.scopes[:, i]]
        return ja

    def base_value(self, rule: DecisionRule) -> float:
        """``sum_s eta(s) c(s, rule(s))`` over the constrained states."""
        ja = self.joint_action_index(rule)
        return float(self.weights @ self.tables[np.arange(len(self.states)), ja])

    def correction(self, rule: DecisionRule) -> float:
        canonical = rule.canonical(self.canon)
        for stored, g in self.corrections:
            if stored == canonical:
                return g
        return 0.0

    def evaluate(self, rule: DecisionRule) -> float:
        """Objective of a complete assignment."""
        return self.base_value(rule) + self.correction(rule)

    def dump(self) -> str:
        """Tab-separated listing of variables, constraint tables and corrections."""
        lines = []
        for i, z in self.variables:
            dom = ",".join(str(a) for a in self.domain(i, z))
            lines.append(f"var\t{i}\t{z}\t{dom}")
        n_joint = self.tables.shape[1]
        for s, scope, w, row in zip(self.states, self.scopes, self.weights, self.tables):
            scope_txt = ",".join(str(int(z)) for z in scope)
            for a in range(n_joint):
                lines.append(f"c\t{int(s)}\t{scope_txt}\t{w!r}\t{a}\t{row[a]!r}")
        for rule, g in self.corrections:
            txt = ";".join(",".join(str(a) for a in row) for row in rule.actions)
            lines.append(f"g\t{txt}\t{g!r}")
        return "\n".join(lines) + "\n"


@dataclass
class CopSolution:
    rule: DecisionRule
    value: float
    nodes: int
    proved: bool = True


def _check_tau(model, tau):
    if tau >= model.horizon:
        raise HorizonError(f"no backup at stage {tau} (horizon {model.horizon})")


def q_mdp(model, store, tau, eta, rule) -> float:
    """Upper Q-value of ``rule`` at ``eta`` under the centralized-MDP tail.

    Equals ``r(eta, rule) + v_mdp(advance(eta, rule))`` and is read off the
    heuristic's Q-table as ``sum_s eta(s) q[tau, s, rule(s)]``.
    """
    probs = np.asarray(eta.probs)
    states = np.flatnonzero(probs > 0)
    ja = joint_actions(model, rule)[states]
    return float(probs[states] @ store.heuristic.q[tau][states, ja])


def build_backup_cop(model, store, tau, eta) -> CopProblem:
    """Constraint program whose maximizer is the greedy rule at ``eta``."""
    _check_tau(model, tau)
    probs = np.asarray(eta.probs)
    states = np.flatnonzero(probs > 0)
    variables = []
    for i in range(model.n_agents):
        for z in np.flatnonzero(marginal(model, eta, i) > 0):
            variables.append((i, int(z)))
    tables = store.heuristic.q[tau][states]
    corrections = []
    node = store.node(tau, eta, create=False)
    if node is not None:
        cache = node.mdp_q
        for rule, q in node.bag.items():
            base = cache.get(rule)
            if base is None:
                base = cache[rule] = q_mdp(model, store, tau, eta, rule)
            corrections.append((rule, min(0.0, q - base)))
    return CopProblem(
        obs_sizes=model.obs_sizes,
        action_sizes=model.action_sizes,
        variables=variables,
        states=states,
        scopes=model.state_obs[states],
        weights=probs[states],
        tables=tables,
        corrections=corrections,
        canon=store.canon(tau, eta),
    )


class _Search:
    """Branch and bound over every agent but the last.

    Once agents ``0..n-2`` are fixed, the objective separates over the last
    agent's observations, so its variables are optimized in closed form.
    The node bound keeps that separation for the last agent and relaxes
    unassigned slots of the other agents independently in every constraint.
    """

    def __init__(self, problem: CopProblem, order_by_mass=True):
        self.p = problem
        n = problem.n_agents
        self.n = n
        A = problem.action_sizes
        k = len(problem.states)
        self.scopes = problem.scopes
        W = (problem.weights[:, None] * problem.tables).reshape((k,) + tuple(A))
        allowed = np.ones(W.shape, dtype=bool)
        for i in range(n):
            own = problem.canon[i] == np.arange(A[i])          # (Z_i, A_i)
            shape = [k] + [1] * n
            shape[1 + i] = A[i]
            allowed &= own[self.scopes[:, i]].reshape(shape)
        self.W = np.where(allowed, W, _EXCLUDED)
        last = n - 1
        self.last_obs = sorted(z for i, z in problem.variables if i == last)
        pos = {z: j for j, z in enumerate(self.last_obs)}
        self.lz = np.array([pos[z] for z in self.scopes[:, last]], dtype=np.intp)
        self.m_last = len(self.last_obs)
        self.A_last = A[last]

        self.vars = []
        for i in range(n - 1):
            zs = sorted(z for j, z in problem.variables if j == i)
            if order_by_mass:
                mass = {z: problem.weights[self.scopes[:, i] == z].sum() for z in zs}
                zs = sorted(zs, key=lambda z: (-mass[z], z))
            for z in zs:
                rows = np.flatnonzero(self.scopes[:, i] == z)
                U, inv = np.unique(self.lz[rows], return_inverse=True)
                G = np.zeros((len(U), len(rows)))
                G[inv, np.arange(len(rows))] = 1.0
                own = problem.canon[i][z] == np.arange(A[i])
                self.vars.append((i, z, rows, U, G, own))

        axes = tuple(range(1, n))
        self.c = self.W.max(axis=axes) if n > 1 else self.W
        self.M = np.zeros((self.m_last, self.A_last))
        np.add.at(self.M, self.lz, self.c)
        self.assign = [np.full(z, -1, dtype=np.intp) for z in problem.obs_sizes]

        self.slot_of = {}
        for j, (i, z) in enumerate(problem.variables):
            self.slot_of[(i, z)] = j
        nc = len(problem.corrections)
        self.corr_g = np.array([g for _, g in problem.corrections]) if nc else np.zeros(0)
        self.corr_slots = np.zeros((nc, len(problem.variables)), dtype=np.intp)
        for r, (rule, _) in enumerate(problem.corrections):
            for j, (i, z) in enumerate(problem.variables):
                self.corr_slots[r, j] = rule.actions[i][z]
        self.last_slots = [self.slot_of[(last, z)] for z in self.last_obs]
        self.alive = np.ones(nc, dtype=bool)
        self.nodes = 0

    # bound bookkeeping ------------------------------------------------------
    def _candidates(self, var):
        """Bounds after assigning each action to ``var`` and the deltas to apply.

        Non-representative actions get a bound of ``-inf``.
        """
        i, z, rows, U, G, own = var
        n = self.n
        idx = (rows,) + tuple(self.assign[j][self.scopes[rows, j]] for j in range(i))
        X = self.W[idx]
        if n - i > 2:
            X = X.max(axis=tuple(range(2, n - i)))
        # X: (g, A_i, A_last)
        delta = X - self.c[rows][:, None, :]
        D = np.einsum("ug,gal->aul", G, delta)
        MU = self.M[U]
        newU = MU[None, :, :] + D
        base = self.M.max(axis=1).sum() - MU.max(axis=1).sum()
        bounds = base + newU.max(axis=2).sum(axis=1)
        bounds[~own] = -np.inf
        return bounds, X, newU

    def _push(self, var, a, X, newU):
        i, z, rows, U = var[:4]
        saved = (rows, self.c[rows].copy(), U, self.M[U].copy(), self.alive.copy())
        self.c[rows] = X[:, a, :]
        self.M[U] = newU[a]
        self.assign[i][z] = a
        if len(self.alive):
            self.alive &= self.corr_slots[:, self.slot_of[(i, z)]] == a
        return saved

    def _pop(self, var, saved):
        i, z = var[0], var[1]
        rows, c_old, U, M_old, alive = saved
        self.c[rows] = c_old
        self.M[U] = M_old
        self.alive = alive
        self.assign[i][z] = -1

    def _leaf_corrections(self):
        out = {}
        for r in np.flatnonzero(self.alive):
            out[tuple(int(self.corr_slots[r, j]) for j in self.last_slots)] = float(self.corr_g[r])
        return out

    # last agent in closed form ---------------------------------------------
    def _leaf_best(self):
        M = self.M
        F = self._leaf_corrections()
        rowmax = M.max(axis=1)
        if not F:
            return float(rowmax.sum())
        best = -np.inf
        for x, g in F.items():
            best = max(best, float(M[np.arange(self.m_last), list(x)].sum()) + g)
        order = [np.argsort(-M[j], kind="stable") for j in range(self.m_last)]
        suffix = np.concatenate([np.cumsum(rowmax[::-1])[::-1], [0.0]])
        choice = [0] * self.m_last

        def dfs(j, partial):
            nonlocal best
            if partial + suffix[j] <= best:
                return
            if j == self.m_last:
                if tuple(choice) not in F:
                    best = partial
                return
            for a in order[j]:
                choice[j] = int(a)
                dfs(j + 1, partial + M[j, a])

        dfs(0, 0.0)
        return best

    def _leaf_first(self, target):
        M = self.M
        F = self._leaf_corrections()
        rowmax = M.max(axis=1)
        suffix = np.concatenate([np.cumsum(rowmax[::-1])[::-1], [0.0]])
        choice = [0] * self.m_last

        def dfs(j, partial):
            if partial + suffix[j] < target:
                return None
            if j == self.m_last:
                x = tuple(choice)
                if partial + F.get(x, 0.0) >= target:
                    return x
                return None
            for a in range(self.A_last):
                choice[j] = a
                found = dfs(j + 1, partial + M[j, a])
                if found is not None:
                    return found
            return None

        return dfs(0, 0.0)

    # searches ---------------------------------------------------------------
    def maximize(self) -> float:
        best = -np.inf

        def dfs(d):
            nonlocal best
            self.nodes += 1
            if d == len(self.vars):
                best = max(best, self._leaf_best())
                return
            var = self.vars[d]
            bounds, X, newU = self._candidates(var)
            for a in np.argsort(-bounds, kind="stable"):
                if bounds[a] <= best:
                    break
                saved = self._push(var, a, X, newU)
                dfs(d + 1)
                self._pop(var, saved)

        dfs(0)
        return best


def solve_cop(problem: CopProblem, tol: float = TIE_TOL) -> CopSolution:
    """Exact maximizer of a backup program with canonical tie-breaking."""
    search = _Search(problem, order_by_mass=True)
    best = search.maximize()
    canon = _Search(problem, order_by_mass=False)
    rule = _first_rule(canon, best - tol)
    return CopSolution(rule, problem.evaluate(rule), search.nodes + canon.nodes, True)


def _first_rule(search: _Search, target):
    n = search.n
    result = {}

    def dfs(d):
        search.nodes += 1
        if d == len(search.vars):
            last = search._leaf_first(target)
            if last is None:
                return False
            result["assign"] = [a.copy() for a in search.assign]
            result["last"] = last
            return True
        var = search.vars[d]
        bounds, X, newU = search._candidates(var)
        for a in range(len(bounds)):
            if not bounds[a] >= target:
                continue
            saved = search._push(var, a, X, newU)
            ok = dfs(d + 1)
            search._pop(var, saved)
            if ok:
                return True
        return False

    if not dfs(0):
        raise RuntimeError("branch and bound lost the optimum; bound is inconsistent")
    rows = [[0] * z for z in search.p.obs_sizes]
    for i, z in search.p.variables:
        if i < n - 1:
            rows[i][z] = int(result["assign"][i][z])
    for j, z in enumerate(search.last_obs):
        rows[n - 1][z] = int(result["last"][j])
    return DecisionRule(rows)


def cop_backup(model, store, tau, eta):
    """Greedy rule and upper bound at ``eta`` via the constraint program."""
    problem = build_backup_cop(model, store, tau, eta)
    sol = solve_cop(problem)
    return sol.rule, sol.value


def exhaustive_backup(model, store, tau, eta, cap: int = ENUMERATION_CAP, chunk: int = 1 << 16):
    """Greedy rule by scoring every decision rule.

    Rules whose canonical form is stored are scored by the stored Q-value,
    all others by the centralized-MDP Q-value. The first rule in canonical
    order within ``TIE_TOL`` of the best score is returned in canonical form.
    """
    _check_tau(model, tau)
    table = rule_table(model, cap)
    probs = np.asarray(eta.probs)
    states = np.flatnonzero(probs > 0)
    w = probs[states]
    Q = store.heuristic.q[tau][states]
    obs = model.state_obs[states]
    offsets = np.cumsum((0,) + model.obs_sizes[:-1])
    canon = store.canon(tau, eta)
    slot_maps = [canon[i][z] for i in range(model.n_agents) for z in range(model.obs_sizes[i])]
    weights = np.ones(len(slot_maps), dtype=np.int64)
    for j in range(len(slot_maps) - 2, -1, -1):
        weights[j] = weights[j + 1] * len(slot_maps[j + 1])

    node = store.node(tau, eta, create=False)
    stored = {}
    if node is not None:
        for rule, q in node.bag.items():
            stored[int(np.asarray(rule.flat, dtype=np.int64) @ weights)] = q

    scores = np.empty(len(table))
    cols = np.arange(len(states))
    for start in range(0, len(table), chunk):
        part = table[start:start + chunk]
        ja = np.zeros((len(part), len(states)), dtype=np.intp)
        for i in range(model.n_agents):
            ja = ja * model.action_sizes[i] + part[:, offsets[i] + obs[:, i]]
        scores[start:start + len(part)] = Q[cols[None, :], ja] @ w
        if stored:
            canon_idx = np.zeros(len(part), dtype=np.int64)
            for j, m in enumerate(slot_maps):
                canon_idx += m[part[:, j]] * weights[j]
            view = scores[start:start + len(part)]
            for idx, q in stored.items():
                view[canon_idx == idx] = q
    best = scores.max()
    pick = int(np.flatnonzero(scores >= best - TIE_TOL)[0])
    flat = table[pick]
    rows, pos = [], 0
    for n in model.obs_sizes:
        rows.append(flat[pos:pos + n])
        pos += n
    rule = DecisionRule(rows).canonical(canon)
    return rule, float(scores[int(np.asarray(rule.flat, dtype=np.int64) @ weights)])


def exhaustive_store_backup(store, tau, eta):
    return exhaustive_backup(store.model, store, tau, eta)


def cop_store_backup(store, tau, eta):
    return cop_backup(store.model, store, tau, eta)
