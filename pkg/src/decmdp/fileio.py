"""Text formats: problem files, policy files, and CSV reports.

Problem file (``#`` starts a comment, tokens are whitespace separated)::

    agents 2
    obs high low            # agent 0
    actions search wait
    t high search low 0.3   # z a z' p; unlisted triples are 0
    ...
    obs ...                 # agent 1
    actions ...
    reward high low search wait 1.5   # z^1..z^n a^1..a^n value
    start 1 0 0 0           # or: start-factored, then one line per agent
    horizon 10

Observations and actions are named by identifier; a bare integer that is
not an identifier of the agent is read as an index. Every float is written
with 17 significant digits so that a serialized model parses back to
identical tables.
"""
from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass

import numpy as np

from .exceptions import DecMdpError
from .model import TOL, FactoredDecMdp, LocalAgentModel, decode, encode, joint_initial, validate
from .policy import DecisionRule, MarkovPolicy

POLICY_HEADER = "mps-policy v1"
STATS_COLUMNS = ("problem", "n_agents", "horizon", "epsilon", "mode", "lower", "upper", "gap",
                 "trials", "backups", "wall_seconds")
TRACE_COLUMNS = ("trial", "lower", "upper", "seconds")

_NUMBER = re.compile(r"[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")


class FormatError(DecMdpError):
    """A problem or policy file is malformed.

    Attributes
    ----------
    line, column : int
        1-based position of the offending token.
    kind : {"syntax", "semantic"}
    """

    def __init__(self, message, line, column, kind="syntax"):
        super().__init__(f"line {line}, column {column}: {kind} error: {message}")
        self.line = line
        self.column = column
        self.kind = kind
        self.reason = message


def fmt(x: float) -> str:
    """Lossless decimal text for a float."""
    return format(float(x), ".17g")


# tokenizing -----------------------------------------------------------------
@dataclass(frozen=True)
class _Tok:
    text: str
    line: int
    col: int


def _lines(text):
    """Yield ``(line_no, [tokens])`` for every non-empty line."""
    for no, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0]
        toks = [_Tok(m.group(), no, m.start() + 1) for m in re.finditer(r"\S+", body)]
        if toks:
            yield no, toks


def _number(tok) -> float:
    if not _NUMBER.match(tok.text):
        raise FormatError(f"expected a number, got {tok.text!r}", tok.line, tok.col)
    value = float(tok.text)
    if not math.isfinite(value):
        raise FormatError(f"number {tok.text!r} is not finite", tok.line, tok.col)
    return value


def _integer(tok) -> int:
    if not re.fullmatch(r"[+-]?\d+", tok.text):
        raise FormatError(f"expected an integer, got {tok.text!r}", tok.line, tok.col)
    return int(tok.text)


def _lookup(tok, names, what):
    try:
        return names.index(tok.text)
    except ValueError:
        pass
    if re.fullmatch(r"\d+", tok.text) and int(tok.text) < len(names):
        return int(tok.text)
    raise FormatError(f"unknown {what} {tok.text!r}", tok.line, tok.col)


def _expect_count(toks, n, usage):
    if len(toks) != n:
        last = toks[-1]
        raise FormatError(f"expected '{usage}' ({n - 1} fields), got {len(toks) - 1}",
                          last.line, last.col)


# parsing --------------------------------------------------------------------
class _AgentDraft:
    def __init__(self, obs_tok, obs, actions_tok=None, actions=None):
        self.obs_tok = obs_tok
        self.obs = obs
        self.actions_tok = actions_tok
        self.actions = actions
        self.table = None
        self.row_tok = {}         # (z, a) -> first token of that row
        self.seen = set()

    def start_table(self):
        self.table = np.zeros((len(self.obs), len(self.actions), len(self.obs)))


def _identifiers(toks, what):
    names = [t.text for t in toks[1:]]
    if not names:
        raise FormatError(f"empty {what} list", toks[0].line, toks[0].col)
    seen = set()
    for t in toks[1:]:
        if t.text in seen:
            raise FormatError(f"duplicate {what} identifier {t.text!r}", t.line, t.col)
        seen.add(t.text)
    return tuple(names)


def parse_problem(text: str, name: str = "model") -> FactoredDecMdp:
    """Parse a problem file into a validated model.

    Raises
    ------
    FormatError
        With the line and column of the first syntax or semantic error.
    """
    n_agents = None
    drafts = []
    rewards = {}
    reward_tok = {}
    initial = None
    factors = None
    start_tok = None
    horizon = None
    phase = "agents"           # agents -> body -> rewards -> start -> horizon -> done
    pending_factors = 0
    last_line = 0

    for no, toks in _lines(text):
        last_line = no
        head = toks[0]
        kw = head.text

        if pending_factors:
            vec = np.array([_number(t) for t in toks])
            factors.append((vec, head))
            pending_factors -= 1
            continue

        if phase == "agents":
            if kw != "agents":
                raise FormatError(f"expected 'agents <n>', got {kw!r}", head.line, head.col)
            _expect_count(toks, 2, "agents <n>")
            n_agents = _integer(toks[1])
            if n_agents < 2:
                raise FormatError(f"need at least 2 agents, got {n_agents}", toks[1].line,
                                  toks[1].col, "semantic")
            phase = "body"
        elif kw == "obs" and phase == "body":
            if drafts and drafts[-1].actions is None:
                raise FormatError("expected 'actions' before the next 'obs'", head.line, head.col)
            if len(drafts) == n_agents:
                raise FormatError(f"more than {n_agents} agents declared", head.line, head.col)
            drafts.append(_AgentDraft(head, _identifiers(toks, "observation")))
        elif kw == "actions" and phase == "body":
            if not drafts or drafts[-1].actions is not None:
                raise FormatError("'actions' must follow an 'obs' line", head.line, head.col)
            d = drafts[-1]
            d.actions_tok = head
            d.actions = _identifiers(toks, "action")
            d.start_table()
        elif kw == "t" and phase == "body":
            if not drafts or drafts[-1].actions is None:
                raise FormatError("'t' line before the agent's 'obs' and 'actions'",
                                  head.line, head.col)
            _expect_count(toks, 5, "t <z> <a> <z'> <p>")
            d = drafts[-1]
            z = _lookup(toks[1], d.obs, "observation")
            a = _lookup(toks[2], d.actions, "action")
            z2 = _lookup(toks[3], d.obs, "observation")
            p = _number(toks[4])
            if not 0.0 <= p <= 1.0:
                raise FormatError(f"probability {toks[4].text} outside [0, 1]", toks[4].line,
                                  toks[4].col, "semantic")
            if (z, a, z2) in d.seen:
                raise FormatError("duplicate transition entry", head.line, head.col, "semantic")
            d.seen.add((z, a, z2))
            d.row_tok.setdefault((z, a), head)
            d.table[z, a, z2] = p
        elif kw == "reward" and phase in ("body", "rewards"):
            if phase == "body":
                _close_agents(drafts, n_agents, head)
                phase = "rewards"
            _expect_count(toks, 2 + 2 * n_agents, "reward <z...> <a...> <value>")
            zs = tuple(_lookup(toks[1 + i], drafts[i].obs, "observation") for i in range(n_agents))
            acts = tuple(_lookup(toks[1 + n_agents + i], drafts[i].actions, "action")
                         for i in range(n_agents))
            key = (zs, acts)
            if key in reward_tok:
                raise FormatError("duplicate reward entry", head.line, head.col, "semantic")
            reward_tok[key] = head
            rewards[key] = _number(toks[-1])
        elif kw in ("start", "start-factored") and phase in ("body", "rewards"):
            if phase == "body":
                _close_agents(drafts, n_agents, head)
            start_tok = head
            if kw == "start":
                n_states = math.prod(len(d.obs) for d in drafts)
                if len(toks) - 1 != n_states:
                    raise FormatError(f"start needs {n_states} probabilities, got {len(toks) - 1}",
                                      head.line, head.col, "semantic")
                initial = np.array([_number(t) for t in toks[1:]])
            else:
                _expect_count(toks, 1, "start-factored")
                factors = []
                pending_factors = n_agents
            phase = "start"
        elif kw == "horizon" and phase == "start":
            _expect_count(toks, 2, "horizon <T>")
            horizon = _integer(toks[1])
            if horizon < 1:
                raise FormatError(f"horizon must be positive, got {horizon}", toks[1].line,
                                  toks[1].col, "semantic")
            phase = "done"
        elif kw in ("obs", "actions", "t", "reward", "start", "start-factored", "horizon", "agents"):
            raise FormatError(f"'{kw}' is out of order here", head.line, head.col)
        else:
            raise FormatError(f"unknown keyword {kw!r}", head.line, head.col)

    end = last_line + 1
    if pending_factors:
        raise FormatError(f"start-factored needs {pending_factors} more line(s)", end, 1)
    if phase != "done":
        missing = {"agents": "agents", "body": "start", "rewards": "start", "start": "horizon"}[phase]
        raise FormatError(f"missing '{missing}' section", end, 1)

    # semantic checks with locations
    for i, d in enumerate(drafts):
        sums = d.table.sum(axis=2)
        for z, a in zip(*np.nonzero(np.abs(sums - 1.0) > TOL)):
            tok = d.row_tok.get((z, a), d.actions_tok)
            raise FormatError(
                f"agent {i}: transition row (z={d.obs[z]}, a={d.actions[a]}) sums to {float(sums[z, a])!r}",
                tok.line, tok.col, "semantic")
    if factors is not None:
        for i, (vec, tok) in enumerate(factors):
            _check_distribution(vec, len(drafts[i].obs), tok, f"start factor of agent {i}")
        factor_arrays = tuple(v for v, _ in factors)
        initial = joint_initial(factor_arrays)
    else:
        factor_arrays = None
        _check_distribution(initial, len(initial), start_tok, "start")

    agents = tuple(LocalAgentModel(d.obs, d.actions, d.table) for d in drafts)
    obs_sizes = tuple(len(d.obs) for d in drafts)
    act_sizes = tuple(len(d.actions) for d in drafts)
    sparse = {(encode(zs, obs_sizes), encode(acts, act_sizes)): v
              for (zs, acts), v in rewards.items()}
    model = FactoredDecMdp(agents, sparse, horizon, initial, factor_arrays, name)
    report = validate(model)
    if not report.ok:
        raise FormatError(report.issues[0], end, 1, "semantic")
    return model


def _close_agents(drafts, n_agents, tok):
    if len(drafts) != n_agents or drafts[-1].actions is None:
        raise FormatError(f"expected {n_agents} agents with 'obs' and 'actions', got {len(drafts)}",
                          tok.line, tok.col)


def _check_distribution(vec, size, tok, what):
    if len(vec) != size:
        raise FormatError(f"{what}: expected {size} probabilities, got {len(vec)}",
                          tok.line, tok.col, "semantic")
    if np.any(vec < 0):
        raise FormatError(f"{what}: negative probability", tok.line, tok.col, "semantic")
    if abs(vec.sum() - 1.0) > TOL:
        raise FormatError(f"{what}: sums to {float(vec.sum())!r}", tok.line, tok.col, "semantic")


def read_problem(path) -> FactoredDecMdp:
    """Parse the problem file at ``path``; the model is named after the file."""
    from pathlib import Path

    path = Path(path)
    return parse_problem(path.read_text(encoding="utf-8"), name=path.stem)


# serializing ----------------------------------------------------------------
def serialize_problem(model: FactoredDecMdp) -> str:
    """Canonical text of ``model``: agents, then observations, then actions ascending."""
    out = [f"agents {model.n_agents}"]
    for ag in model.agents:
        out.append("obs " + " ".join(ag.observations))
        out.append("actions " + " ".join(ag.actions))
        for z, a, z2 in zip(*np.nonzero(ag.transition)):
            out.append(f"t {ag.observations[z]} {ag.actions[a]} {ag.observations[z2]} "
                       f"{fmt(ag.transition[z, a, z2])}")
    for (s, a) in sorted(model.reward):
        zs = decode(s, model.obs_sizes)
        acts = decode(a, model.action_sizes)
        names = [model.agents[i].observations[z] for i, z in enumerate(zs)]
        names += [model.agents[i].actions[x] for i, x in enumerate(acts)]
        out.append("reward " + " ".join(names) + " " + fmt(model.reward[(s, a)]))
    factors = model.initial_factors
    # factors are written only when they rebuild the joint start bit for bit
    if factors is not None and np.array_equal(joint_initial(factors), model.initial):
        out.append("start-factored")
        for f in model.initial_factors:
            out.append(" ".join(fmt(p) for p in f))
    else:
        out.append("start " + " ".join(fmt(p) for p in model.initial))
    out.append(f"horizon {model.horizon}")
    return "\n".join(out) + "\n"


# policy files ---------------------------------------------------------------
@dataclass(frozen=True)
class PolicyFile:
    """A Markov policy plus the bounds it was certified with."""

    policy: MarkovPolicy
    lower: float = float("nan")
    upper: float = float("nan")
    epsilon: float = float("nan")
    seed: int | None = None


def serialize_policy(pf: PolicyFile) -> str:
    """``mps-policy v1`` text: metadata, then one ``tau agent obs action`` line per slot."""
    rules = pf.policy.rules
    out = [POLICY_HEADER,
           f"horizon {len(rules)}",
           f"lower {fmt(pf.lower)}",
           f"upper {fmt(pf.upper)}",
           f"epsilon {fmt(pf.epsilon)}",
           f"seed {'none' if pf.seed is None else int(pf.seed)}"]
    for tau, rule in enumerate(rules):
        for i, row in enumerate(rule.actions):
            for z, a in enumerate(row):
                out.append(f"{tau} {i} {z} {a}")
    return "\n".join(out) + "\n"


_POLICY_META = ("horizon", "lower", "upper", "epsilon", "seed")


def parse_policy(text: str, model: FactoredDecMdp | None = None) -> PolicyFile:
    """Parse a policy file; the result is checked to be total.

    With ``model`` given, observation and action indices are also checked
    against its sizes.
    """
    lines = _lines(text)
    first = next(lines, None)
    if first is None or " ".join(t.text for t in first[1]) != POLICY_HEADER:
        no = first[0] if first else 1
        raise FormatError(f"expected header '{POLICY_HEADER}'", no, 1)
    meta = {}
    entries = {}
    for no, toks in lines:
        head = toks[0]
        if head.text in _POLICY_META:
            _expect_count(toks, 2, f"{head.text} <value>")
            if head.text in meta:
                raise FormatError(f"duplicate '{head.text}' line", head.line, head.col)
            meta[head.text] = toks[1]
            continue
        if not re.fullmatch(r"\d+", head.text):
            raise FormatError(f"unknown keyword {head.text!r}", head.line, head.col)
        _expect_count(toks, 4, "tau agent obs action")
        tau, agent, z, a = (_integer(t) for t in toks)
        if min(tau, agent, z, a) < 0:
            raise FormatError("negative index", head.line, head.col)
        key = (tau, agent, z)
        if key in entries:
            raise FormatError(f"duplicate entry for stage {tau}, agent {agent}, obs {z}",
                              head.line, head.col, "semantic")
        entries[key] = (a, head)
    if "horizon" not in meta:
        raise FormatError("missing 'horizon' line", 1, 1)
    horizon = _integer(meta["horizon"])
    n_agents = 1 + max((k[1] for k in entries), default=-1)
    obs_sizes = []
    for i in range(n_agents):
        obs_sizes.append(1 + max(k[2] for k in entries if k[1] == i) if any(
            k[1] == i for k in entries) else 0)
    if model is not None:
        if n_agents != model.n_agents or tuple(obs_sizes) != model.obs_sizes:
            raise FormatError("policy shape does not match the model", 1, 1, "semantic")
        if horizon != model.horizon:
            raise FormatError(f"policy horizon {horizon} differs from the model's {model.horizon}",
                              meta["horizon"].line, meta["horizon"].col, "semantic")
    rules = []
    for tau in range(horizon):
        rows = []
        for i in range(n_agents):
            row = []
            for z in range(obs_sizes[i]):
                if (tau, i, z) not in entries:
                    raise FormatError(f"no action for stage {tau}, agent {i}, obs {z}", 1, 1,
                                      "semantic")
                a, tok = entries[(tau, i, z)]
                if model is not None and a >= model.action_sizes[i]:
                    raise FormatError(f"action {a} out of range for agent {i}", tok.line, tok.col,
                                      "semantic")
                row.append(a)
            rows.append(row)
        rules.append(DecisionRule(rows))
    extra = [k for k in entries if k[0] >= horizon]
    if extra:
        tok = entries[min(extra)][1]
        raise FormatError(f"stage {min(extra)[0]} beyond the horizon", tok.line, tok.col, "semantic")

    def real(key):
        return _number(meta[key]) if key in meta and meta[key].text != "nan" else float("nan")

    seed = None
    if "seed" in meta and meta["seed"].text != "none":
        seed = _integer(meta["seed"])
    return PolicyFile(MarkovPolicy(rules), real("lower"), real("upper"), real("epsilon"), seed)


# CSV reports ----------------------------------------------------------------
def _csv_text(columns, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def stats_csv(problem: str, model: FactoredDecMdp, config, solution) -> str:
    """One-row CSV of final metrics for a solve."""
    row = (problem, model.n_agents, model.horizon, float(config.epsilon), config.mode,
           float(solution.lower), float(solution.upper), float(solution.gap),
           solution.trials, solution.backups, float(solution.wall_seconds))
    return _csv_text(STATS_COLUMNS, [row])


def trace_csv(solution) -> str:
    """Per-trial bounds and elapsed seconds."""
    rows = [(int(t), float(lo), float(up), float(sec)) for t, lo, up, sec in solution.trace]
    return _csv_text(TRACE_COLUMNS, rows)
