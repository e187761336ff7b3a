"""Agents, Born-rule statements and the consistency checker behind the no-go runs.

Statements are plain outcome constraints owned by an agent.  What they
constrain depends on the assumption set: under absoluteness of observed
events every measurement has one value shared by all agents; under personal
knowledge each agent has its own copy of every measurement it assigns, and
the copies are tied together only by equalities created when agents
communicate.  Born practicality keeps a statement only once its owner has
actually asked for the outcomes it mentions.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from .empirical import DEFAULT_EPS, possibilistic, model_from_protocol
from .scenario import (
    HARDY_CONTEXTS, OK, FAIL, FriendMeasure, Protocol, ScenarioError, SuperMeasure,
    fr_protocol, ghz_fr_protocol, joint_distribution, recorded_labs, run_protocol,
    validate_context,
)
from .qsim import project

MAX_VARIABLES = 24


class ReasoningError(ValueError):
    pass


class Flag(enum.Enum):
    AOE = "AOE"
    BORN_COMPAT_AOE = "BORN_COMPAT_AOE"
    PERSONAL_KNOWLEDGE = "PERSONAL_KNOWLEDGE"
    CLASSICAL_AGREEMENT = "CLASSICAL_AGREEMENT"
    BORN_COMPAT_PERSK = "BORN_COMPAT_PERSK"
    BORN_PRACTICALITY = "BORN_PRACTICALITY"


_REQUIRES = {
    Flag.BORN_COMPAT_AOE: Flag.AOE,
    Flag.BORN_COMPAT_PERSK: Flag.PERSONAL_KNOWLEDGE,
    Flag.CLASSICAL_AGREEMENT: Flag.PERSONAL_KNOWLEDGE,
}


@dataclass(frozen=True)
class AssumptionSet:
    flags: frozenset = frozenset()

    def __post_init__(self):
        flags = frozenset(Flag(f) for f in self.flags)
        object.__setattr__(self, "flags", flags)
        for f, needed in _REQUIRES.items():
            if f in flags and needed not in flags:
                raise ReasoningError(f"{f.value} requires {needed.value}")
        if Flag.BORN_PRACTICALITY in flags and flags & {Flag.BORN_COMPAT_AOE, Flag.BORN_COMPAT_PERSK}:
            raise ReasoningError("BORN_PRACTICALITY replaces Born compatibility; do not combine them")

    @classmethod
    def of(cls, *flags) -> "AssumptionSet":
        return cls(frozenset(Flag(f) for f in flags))

    def __contains__(self, flag) -> bool:
        return Flag(flag) in self.flags

    def without(self, flag) -> "AssumptionSet":
        """Drop ``flag`` and every flag that depends on it."""
        gone = {Flag(flag)}
        gone |= {f for f, needed in _REQUIRES.items() if needed in gone}
        return AssumptionSet(self.flags - gone)

    @property
    def per_agent(self) -> bool:
        return Flag.PERSONAL_KNOWLEDGE in self.flags and Flag.AOE not in self.flags

    def names(self) -> list[str]:
        return sorted(f.value for f in self.flags)


TRUTH = AssumptionSet.of(Flag.AOE, Flag.BORN_COMPAT_AOE)
AGREEMENT = AssumptionSet.of(Flag.PERSONAL_KNOWLEDGE, Flag.CLASSICAL_AGREEMENT, Flag.BORN_COMPAT_PERSK)
PRACTICALITY = AssumptionSet.of(Flag.BORN_PRACTICALITY)


# ---------------------------------------------------------------- agents

@dataclass(frozen=True)
class Agent:
    name: str
    classical: bool
    accessible: frozenset


def agents_of(protocol: Protocol, extra: Sequence[str] = ("Zeno",)) -> dict[str, Agent]:
    """Agents of ``protocol`` plus non-measuring ``extra`` observers.

    Friends whose lab is supermeasured are modelled quantumly and so are not
    classical.  A superobserver can gather its own outcome and the outcome
    of every friend except the one it supermeasures; other superobservers
    are invisible to it.  Extra observers may gather anything.
    """
    ms = protocol.measurements()
    supered = {s.lab for s in protocol.super_steps}
    out: dict[str, Agent] = {}
    for s in protocol.steps:
        if isinstance(s, FriendMeasure):
            classical = s.lab not in supered
            prev = out.get(s.agent)
            acc = {s.measurement} | (set(prev.accessible) if prev else set())
            out[s.agent] = Agent(s.agent, classical and (prev.classical if prev else True), frozenset(acc))
    for s in protocol.super_steps:
        acc = {s.measurement} | {m.name for m in ms.values() if m.kind == "friend" and m.lab != s.lab}
        prev = out.get(s.agent)
        if prev:
            acc |= set(prev.accessible)
        out[s.agent] = Agent(s.agent, True, frozenset(acc))
    for name in extra:
        if name not in out:
            out[name] = Agent(name, True, frozenset(ms))
    return out


def natural_contexts(protocol: Protocol, agent: str) -> list[tuple[str, ...]]:
    """Contexts an agent reasons about by default.

    A superobserver takes its own outcome with every friend it does not
    supermeasure; a non-measuring observer takes all supermeasurements
    together and all friend measurements together.
    """
    ms = protocol.measurements()
    own = [m for m in ms.values() if m.agent == agent]
    friends = tuple(m.name for m in ms.values() if m.kind == "friend")
    supers = tuple(m.name for m in ms.values() if m.kind == "super")
    if any(m.kind == "super" for m in own):
        out = []
        for m in own:
            if m.kind == "super":
                out.append((m.name,) + tuple(f for f in friends if ms[f].lab != m.lab))
        return out
    if own:
        return [tuple(m.name for m in own)]
    return [c for c in (supers, friends) if len(c) > 1]


# ---------------------------------------------------------------- constraints

@dataclass(frozen=True)
class Parity:
    """XOR of ``vars`` equals ``rhs``."""

    vars: tuple[str, ...]
    rhs: int

    def holds(self, values: Mapping[str, int]) -> bool:
        return sum(values[v] for v in self.vars) % 2 == self.rhs


@dataclass(frozen=True)
class ForbiddenSet:
    """The joint outcomes in ``excluded`` (ordered like ``vars``) never occur."""

    vars: tuple[str, ...]
    excluded: frozenset

    def holds(self, values: Mapping[str, int]) -> bool:
        return tuple(values[v] for v in self.vars) not in self.excluded


Constraint = Union[Parity, ForbiddenSet]


@dataclass(frozen=True)
class Condition:
    """``asker`` must learn the outcomes of ``gather`` for the statement to apply."""

    asker: str
    gather: tuple[str, ...]
    premise: tuple[tuple[str, int], ...] = ()


@dataclass(frozen=True)
class Statement:
    owner: str
    constraint: Constraint
    # None means unconditional
    condition: Condition | None = None
    holders: frozenset = frozenset()

    @property
    def scope(self) -> tuple[str, ...]:
        return self.constraint.vars

    def held_by(self, agent: str) -> bool:
        return agent == self.owner or agent in self.holders


@dataclass(frozen=True)
class Equality:
    """f_left_agent(measurement) = f_right_agent(measurement)."""

    measurement: str
    left: str
    right: str

    def key(self):
        return (self.measurement,) + tuple(sorted((self.left, self.right)))


Item = Union[Statement, Equality]


def _parity_form(vars_: Sequence[str], support: set) -> Parity | None:
    """Parity when ``support`` is exactly one parity class over binary outcomes."""
    n = len(vars_)
    full = set(itertools.product((0, 1), repeat=n))
    if not support or support == full:
        return None
    for k in range(1, n + 1):
        for subset in itertools.combinations(range(n), k):
            for rhs in (0, 1):
                cls = {o for o in full if sum(o[i] for i in subset) % 2 == rhs}
                if cls == support:
                    return Parity(tuple(vars_[i] for i in subset), rhs)
    return None


def derive_statements(protocol: Protocol, agent: Agent | str, contexts: Iterable[Sequence[str]] | None = None,
                      given: Mapping[str, int] | None = None, eps: float = DEFAULT_EPS,
                      agents: Mapping[str, Agent] | None = None) -> list[Statement]:
    """Born-rule statements of ``agent`` for each context.

    The complement of each context's support becomes a forbidden set, or a
    parity when the support is one parity class.  ``given`` holds the
    agent's own observed outcomes; the statement is then restricted to
    those values.  The condition lists the quantum-recorded outcomes the
    owner would have to ask for.
    """
    agents = agents or agents_of(protocol)
    if isinstance(agent, str):
        if agent not in agents:
            raise ReasoningError(f"unknown agent {agent!r}")
        agent = agents[agent]
    ms = protocol.measurements()
    given = dict(given or {})
    if contexts is None:
        contexts = natural_contexts(protocol, agent.name)
    out = []
    for ctx in contexts:
        ctx = tuple(ctx)
        missing = set(ctx) - agent.accessible
        if missing:
            raise ReasoningError(f"{agent.name} cannot gather {sorted(missing)}")
        why = validate_context(protocol, ctx)
        if why is not None:
            raise ScenarioError(f"context {list(ctx)} is not gatherable: {why}")
        for m in given:
            if m not in ctx or ms[m].agent != agent.name:
                raise ReasoningError(f"{agent.name} can only condition on own outcomes in the context, not {m}")
        dist = joint_distribution(protocol, ctx)
        grid = set(itertools.product((0, 1), repeat=len(ctx)))
        support = {o for o, p in dist.items() if p > eps and o in grid}
        stray = sum(p for o, p in dist.items() if o not in grid)
        if stray > eps:
            raise ReasoningError(f"context {ctx} puts {stray:.3g} on non-binary outcomes")
        rows = {o for o in grid if all(o[ctx.index(m)] == v for m, v in given.items())}
        forbidden = rows - support
        if not forbidden:
            continue
        constraint = None if given else _parity_form(ctx, support)
        if constraint is None:
            constraint = ForbiddenSet(ctx, frozenset(forbidden))
        gather = tuple(m for m in ctx if ms[m].agent != agent.name and not agents[ms[m].agent].classical)
        cond = Condition(agent.name, gather, tuple(sorted(given.items()))) if gather else None
        out.append(Statement(agent.name, constraint, cond))
    return out


def assignment_scope(items: Iterable[Item], agent: str) -> set[str]:
    """Measurements ``agent`` assigns values to through statements it authored."""
    return {m for s in items if isinstance(s, Statement) and s.owner == agent for m in s.scope}


def communicate(sender: Agent, receiver: Agent, statements: Sequence[Item],
                assumptions: AssumptionSet) -> tuple[list[Item], list[Equality]]:
    """Hand the sender's statements to the receiver.

    Returns the updated statement list (receiver added as holder) and the
    overlap equalities f_sender(m) = f_receiver(m).
    """
    if Flag.CLASSICAL_AGREEMENT not in assumptions.flags:
        raise ReasoningError("communication needs CLASSICAL_AGREEMENT")
    for a in (sender, receiver):
        if not a.classical:
            raise ReasoningError(f"{a.name} is modelled quantumly and cannot take part in classical agreement")
    if sender.name == receiver.name:
        return list(statements), []
    updated = []
    for s in statements:
        if isinstance(s, Statement) and s.held_by(sender.name) and not s.held_by(receiver.name):
            s = replace(s, holders=s.holders | {receiver.name})
        updated.append(s)
    overlap = assignment_scope(statements, sender.name) & assignment_scope(statements, receiver.name)
    eqs = [Equality(m, sender.name, receiver.name) for m in sorted(overlap)]
    return updated, eqs


# ---------------------------------------------------------------- solving

def _var(assumptions: AssumptionSet, agent: str, m: str) -> str:
    return f"f_{agent}({m})" if assumptions.per_agent else m


def _gathered(stmt: Statement, protocol: Protocol | None) -> bool:
    if stmt.condition is None:
        return True
    if protocol is None:
        return False
    asked = recorded_labs(protocol).get(stmt.condition.asker, set())
    ms = protocol.measurements()
    return all(ms[m].lab in asked for m in stmt.condition.gather)


def active_items(items: Sequence[Item], assumptions: AssumptionSet,
                 protocol: Protocol | None = None) -> list[Item]:
    """The constraints that bind under ``assumptions``, in input order."""
    f = assumptions.flags
    compat = (Flag.BORN_COMPAT_AOE in f) or (Flag.BORN_COMPAT_PERSK in f)
    practical = Flag.BORN_PRACTICALITY in f
    out = []
    for it in items:
        if isinstance(it, Equality):
            if assumptions.per_agent and Flag.CLASSICAL_AGREEMENT in f:
                out.append(it)
        elif compat or (practical and _gathered(it, protocol)):
            out.append(it)
    return out


@dataclass(frozen=True)
class _Compiled:
    variables: tuple[str, ...]
    checks: tuple  # (kind, indices, payload) per item


def _compile(items: Sequence[Item], assumptions: AssumptionSet) -> _Compiled:
    variables: dict[str, int] = {}

    def idx(name):
        return variables.setdefault(name, len(variables))

    checks = []
    for it in items:
        if isinstance(it, Equality):
            checks.append(("eq", (idx(_var(assumptions, it.left, it.measurement)),
                                  idx(_var(assumptions, it.right, it.measurement))), None))
        else:
            c = it.constraint
            ix = tuple(idx(_var(assumptions, it.owner, m)) for m in c.vars)
            if isinstance(c, Parity):
                checks.append(("parity", ix, c.rhs))
            else:
                checks.append(("forbid", ix, c.excluded))
    return _Compiled(tuple(variables), tuple(checks))


def _satisfying(compiled: _Compiled, chosen: Sequence[int] | None = None) -> int | None:
    """Index of the first satisfying assignment (bit i of the index = variable i), or None."""
    n = len(compiled.variables)
    if n > MAX_VARIABLES:
        raise ReasoningError(f"{n} variables exceed the brute-force bound of {MAX_VARIABLES}")
    checks = compiled.checks if chosen is None else [compiled.checks[i] for i in chosen]
    step = 1 << 20
    for start in range(0, 1 << n, step):
        a = np.arange(start, min(1 << n, start + step), dtype=np.int64)
        ok = np.ones(a.size, dtype=bool)
        for kind, ix, payload in checks:
            bits = [(a >> i) & 1 for i in ix]
            if kind == "eq":
                ok &= bits[0] == bits[1]
            elif kind == "parity":
                acc = np.zeros(a.size, dtype=np.int64)
                for b in bits:
                    acc ^= b
                ok &= acc == payload
            else:
                for row in payload:
                    hit = np.ones(a.size, dtype=bool)
                    for b, v in zip(bits, row):
                        hit &= b == v
                    ok &= ~hit
            if not ok.any():
                break
        hits = np.flatnonzero(ok)
        if hits.size:
            return int(a[hits[0]])
    return None


@dataclass
class Verdict:
    sat: bool
    model: dict[str, int] | None = None
    certificate: list[Item] | None = None
    active: list[Item] = field(default_factory=list)
    variables: tuple[str, ...] = ()

    @property
    def label(self) -> str:
        return "SAT" if self.sat else "UNSAT"


def check_consistency(items: Sequence[Item], assumptions: AssumptionSet,
                      protocol: Protocol | None = None) -> Verdict:
    """Brute-force satisfiability of the active constraints.

    UNSAT verdicts carry a minimal certificate found by deleting constraints
    one at a time in input order and keeping each deletion that leaves the
    rest unsatisfiable.
    """
    active = active_items(items, assumptions, protocol)
    compiled = _compile(active, assumptions)
    hit = _satisfying(compiled)
    if hit is not None:
        model = {v: (hit >> i) & 1 for i, v in enumerate(compiled.variables)}
        return Verdict(True, model, None, active, compiled.variables)
    keep = list(range(len(active)))
    for i in range(len(active)):
        trial = [j for j in keep if j != i]
        if _satisfying(compiled, trial) is None:
            keep = trial
    return Verdict(False, None, [active[j] for j in keep], active, compiled.variables)


def gf2_sum(parities: Iterable[Parity]) -> tuple[tuple[str, ...], int]:
    """Sum of parity equations over GF(2): (variables left with odd count, rhs)."""
    count: dict[str, int] = {}
    rhs = 0
    for p in parities:
        rhs ^= p.rhs
        for v in p.vars:
            count[v] = count.get(v, 0) + 1
    return tuple(sorted(v for v, c in count.items() if c % 2)), rhs


# ---------------------------------------------------------------- no-go pipelines

SUPEROBSERVER_ORDER = ("Ursula", "Valentina", "Wigner")


@dataclass
class NoGoRun:
    variant: str
    assumptions: AssumptionSet
    statements: list[Statement]
    equalities: list[Equality]
    verdict: Verdict
    expected_sat: bool
    trace: list[str] = field(default_factory=list)

    @property
    def reproduced(self) -> bool:
        return self.verdict.sat == self.expected_sat


def _reasoners(protocol: Protocol, agents: Mapping[str, Agent]) -> list[str]:
    supers = [s.agent for s in protocol.super_steps]
    others = [a for a, ag in agents.items() if a not in supers and ag.classical
              and not any(m.agent == a for m in protocol.measurements().values())]
    return supers + others


def derive_all(protocol: Protocol, agents: Mapping[str, Agent] | None = None) -> list[Statement]:
    agents = agents or agents_of(protocol)
    out = []
    for name in _reasoners(protocol, agents):
        out += derive_statements(protocol, name, agents=agents)
    return out


def truth_nogo(protocol: Protocol | None = None) -> NoGoRun:
    protocol = protocol or ghz_fr_protocol()
    stmts = derive_all(protocol)
    verdict = check_consistency(stmts, TRUTH, protocol)
    return NoGoRun("truth", TRUTH, stmts, [], verdict, expected_sat=False)


def agreement_pattern(protocol: Protocol, agents: Mapping[str, Agent]) -> list[tuple[str, str]]:
    """Superobservers talk pairwise, then each reports to the other observers."""
    supers = [s.agent for s in protocol.super_steps]
    rest = [a for a in _reasoners(protocol, agents) if a not in supers]
    pairs = list(itertools.combinations(supers, 2))
    pairs += [(s, z) for z in rest for s in supers]
    return pairs


def agreement_nogo(protocol: Protocol | None = None,
                   assumptions: AssumptionSet = AGREEMENT) -> NoGoRun:
    protocol = protocol or ghz_fr_protocol()
    agents = agents_of(protocol)
    stmts: list[Item] = derive_all(protocol, agents)
    eqs: dict = {}
    trace = []
    if Flag.CLASSICAL_AGREEMENT in assumptions.flags:
        for a, b in agreement_pattern(protocol, agents):
            stmts, new = communicate(agents[a], agents[b], stmts, assumptions)
            for e in new:
                if e.key() not in eqs:
                    eqs[e.key()] = e
                    trace.append(f"{a} -> {b}: {render_equality(e)}")
    items = list(stmts) + list(eqs.values())
    verdict = check_consistency(items, assumptions, protocol)
    return NoGoRun("agreement", assumptions, list(stmts), list(eqs.values()), verdict,
                   expected_sat=False, trace=trace)


def practicality_run(protocol: Protocol | None = None) -> NoGoRun:
    protocol = protocol or ghz_fr_protocol()
    if protocol.name == "fr":
        stmts = fr_resolution_statements(protocol)
    else:
        stmts = derive_all(protocol)
    verdict = check_consistency(stmts, PRACTICALITY, protocol)
    return NoGoRun("practicality", PRACTICALITY, stmts, [], verdict, expected_sat=True)


NOGO_VARIANTS = {"truth": truth_nogo, "agreement": agreement_nogo, "practicality": practicality_run}


# ---------------------------------------------------------------- FR reasoning

FR_PATH = (("U", "B"), ("A", "B"), ("A", "W"))


@dataclass
class ChainStep:
    context: tuple[str, ...]
    variable: str
    forced: int | None  # None: several values stay possible
    possible: tuple[int, ...]


@dataclass
class FRChain:
    u: int
    w: int
    probability: float
    steps: list[ChainStep]
    contradiction: bool
    statements: list[Statement]
    verdict: Verdict


def _postselect_probability(protocol: Protocol, u: int, w: int, eps: float) -> float:
    p = joint_distribution(protocol, ["U", "W"]).get((u, w), 0.0)
    if p <= eps:
        raise ReasoningError(f"cannot post-select on u={u}, w={w}: probability {p:.3g}")
    return p


def fr_chain(u: int = OK, w: int = OK, eps: float = DEFAULT_EPS, protocol: Protocol | None = None) -> FRChain:
    """Unit propagation u -> b -> a -> w over the FR possibility table."""
    protocol = protocol or fr_protocol()
    p = _postselect_probability(protocol, u, w, eps)
    pm = possibilistic(model_from_protocol(protocol, HARDY_CONTEXTS), eps)
    known = {"U": u}
    steps = []
    for ctx in FR_PATH:
        support = pm.supports[tuple(ctx)]
        unknown = [m for m in ctx if m not in known]
        if len(unknown) != 1:
            break
        var = unknown[0]
        i = ctx.index(var)
        vals = sorted({o[i] for o in support
                       if all(o[ctx.index(m)] == known[m] for m in ctx if m in known)})
        forced = vals[0] if len(vals) == 1 else None
        steps.append(ChainStep(ctx, var, forced, tuple(vals)))
        if forced is None:
            break
        known[var] = forced
    contradiction = "W" in known and known["W"] != w
    owners = {("U", "B"): "Ursula", ("A", "B"): "Bob", ("A", "W"): "Alice"}
    stmts = [Statement("Ursula", Parity(("U",), u)), Statement("Wigner", Parity(("W",), w))]
    for ctx in FR_PATH:
        grid = set(itertools.product((0, 1), repeat=2))
        stmts.append(Statement(owners[ctx], ForbiddenSet(ctx, frozenset(grid - pm.supports[ctx]))))
    verdict = check_consistency(stmts, TRUTH)
    return FRChain(u, w, p, steps, contradiction, stmts, verdict)


def fr_resolution_statements(protocol: Protocol | None = None, u: int = OK) -> list[Statement]:
    """Ursula's three conditional statements for the FR chain under Born practicality."""
    protocol = protocol or fr_protocol()
    pm = possibilistic(model_from_protocol(protocol, HARDY_CONTEXTS))
    grid = set(itertools.product((0, 1), repeat=2))
    out = []
    known = {"U": u}
    askers = {("U", "B"): ("Ursula", "B"), ("A", "B"): ("Bob", "A"), ("A", "W"): ("Alice", "W")}
    for ctx in FR_PATH:
        asker, target = askers[ctx]
        premise_var = next(m for m in ctx if m != target)
        pv = known[premise_var]
        i, j = ctx.index(premise_var), ctx.index(target)
        forbidden = frozenset(o for o in grid - pm.supports[ctx] if o[i] == pv)
        vals = {o[j] for o in pm.supports[ctx] if o[i] == pv}
        if len(vals) != 1:
            break
        known[target] = vals.pop()
        out.append(Statement("Ursula", ForbiddenSet(ctx, forbidden),
                             Condition(asker, (target,), ((premise_var, pv),))))
    return out


@dataclass
class ModifiedFR:
    projections: dict[str, float]
    statements: list[Statement]
    verdict: Verdict


def modified_fr(u: int = OK, w: int = OK, eps: float = DEFAULT_EPS) -> ModifiedFR:
    """Ursula, Wigner and Zeno each exclude one event; together with u, w: UNSAT."""
    proto = fr_protocol()
    _postselect_probability(proto, u, w, eps)
    psi = run_protocol(proto, 2)
    okv = proto.step_for("U").basis.vector(OK)
    k00 = np.array([1, 0, 0, 0], dtype=complex)
    k11 = np.array([0, 0, 0, 1], dtype=complex)
    sa, sb = ["S_A", "L_A"], ["S_B", "L_B"]
    projections = {
        "Ursula: <ok|<00| psi": project(psi, np.kron(okv, k00), sa + sb)[0],
        "Wigner: <11|<ok| psi": project(psi, np.kron(k11, okv), sa + sb)[0],
        "Zeno: <00|<11| psi": project(psi, np.kron(k00, k11), sa + sb)[0],
    }
    agents = agents_of(proto)
    stmts = [Statement("Ursula", Parity(("U",), u)), Statement("Wigner", Parity(("W",), w))]
    stmts += derive_statements(proto, agents["Ursula"], [("U", "B")], {"U": u}, eps, agents)
    stmts += derive_statements(proto, agents["Wigner"], [("W", "A")], {"W": w}, eps, agents)
    stmts += derive_statements(proto, agents["Zeno"], [("A", "B")], None, eps, agents)
    return ModifiedFR(projections, stmts, check_consistency(stmts, TRUTH))


# ---------------------------------------------------------------- Specker triangle

def specker_triangle(u: int, v: int, w: int, protocol: Protocol | None = None,
                     eps: float = DEFAULT_EPS) -> tuple[list[Parity], Verdict]:
    """The three superobserver parities with (u, v, w) substituted."""
    protocol = protocol or ghz_fr_protocol()
    if joint_distribution(protocol, ["U", "V", "W"]).get((u, v, w), 0.0) <= eps:
        raise ReasoningError(f"(u, v, w) = ({u}, {v}, {w}) never occurs")
    parities = [Parity(("B", "C"), 1 ^ u), Parity(("A", "C"), 1 ^ v), Parity(("A", "B"), 1 ^ w)]
    owners = ("Ursula", "Valentina", "Wigner")
    verdict = check_consistency([Statement(o, p) for o, p in zip(owners, parities)], TRUTH)
    return parities, verdict


# ---------------------------------------------------------------- rendering

CAVEAT = "as long as our records of our own outcomes stay intact"


@dataclass
class RenderedStatement:
    owner: str
    text: str
    scope: tuple[str, ...]
    condition: dict
    caveat: str
    machine: str


def _lower(m: str) -> str:
    return m.lower()


def _outcome_name(protocol: Protocol | None, m: str, v: int) -> str:
    if protocol is not None:
        s = protocol.step_for(m)
        if isinstance(s, SuperMeasure) and s.outcome_names and v < len(s.outcome_names):
            return s.outcome_names[v]
    return str(v)


def render_constraint(c: Constraint, own: Sequence[str] = (), protocol: Protocol | None = None,
                      premise: Mapping[str, int] | None = None) -> str:
    """Human-readable text, e.g. ``b ⊕ c = 1 ⊕ u`` or ``a = 1``."""
    premise = dict(premise or {})
    if isinstance(c, Parity):
        left = [_lower(v) for v in c.vars if v not in own]
        right = [_lower(v) for v in c.vars if v in own]
        if not left:
            left, right = right, []
        rhs = ([str(c.rhs)] if c.rhs or not right else []) + right
        return f"{' ⊕ '.join(left)} = {' ⊕ '.join(rhs)}"
    grid = set(itertools.product((0, 1), repeat=len(c.vars)))
    rows = {o for o in grid if all(o[c.vars.index(m)] == v for m, v in premise.items() if m in c.vars)}
    allowed = rows - c.excluded
    free = [i for i, m in enumerate(c.vars) if m not in premise]
    if len(free) == 1 and len({o[free[0]] for o in allowed}) == 1:
        m = c.vars[free[0]]
        val = next(iter(allowed))[free[0]]
        return f"{_lower(m)} = {_outcome_name(protocol, m, val)}"
    parts = []
    for o in sorted(c.excluded):
        parts.append("¬(" + " ∧ ".join(f"{_lower(m)} = {_outcome_name(protocol, m, x)}"
                                       for m, x in zip(c.vars, o)) + ")")
    return " ∧ ".join(parts)


def machine_form(it: Item) -> str:
    if isinstance(it, Equality):
        return render_equality(it)
    c = it.constraint
    if isinstance(c, Parity):
        body = f"Parity({' ^ '.join(c.vars)} = {c.rhs})"
    else:
        rows = ", ".join("(" + ",".join(map(str, o)) + ")" for o in sorted(c.excluded))
        body = f"Forbidden[{','.join(c.vars)}]{{{rows}}}"
    return f"K_{it.owner}: {body}"


def render_equality(e: Equality) -> str:
    return f"f_{e.left}({e.measurement}) = f_{e.right}({e.measurement})"


def _names(agents: list[str]) -> str:
    return agents[0] if len(agents) == 1 else ", ".join(agents[:-1]) + " and " + agents[-1]


def render_resolution_statements(protocol: Protocol, agent: str,
                                 statements: Sequence[Statement] | None = None) -> list[RenderedStatement]:
    """Conditional (ask-first) wording of ``agent``'s statements.

    Only statements with a gathering condition are rendered.  Without
    explicit ``statements`` the agent's default statements are derived; for
    the FR protocol Ursula's default is the three-step chain.
    """
    if statements is None:
        if protocol.name == "fr" and agent == "Ursula":
            statements = fr_resolution_statements(protocol)
        else:
            agents = agents_of(protocol)
            if agent not in agents or agent not in _reasoners(protocol, agents):
                return []
            statements = derive_statements(protocol, agent, agents=agents)
    ms = protocol.measurements()
    out = []
    for s in statements:
        if s.owner != agent or s.condition is None:
            continue
        cond = s.condition
        friends = [ms[m].agent for m in cond.gather]
        outs = ", ".join(_lower(m) for m in cond.gather)
        premise = dict(cond.premise)
        own = [m for m in s.scope if ms[m].agent == agent]
        claim = render_constraint(s.constraint, own, protocol, premise)
        noun = "outcome" if len(friends) == 1 else "outcomes"
        if cond.asker == agent:
            text = (f"If I ({agent}) ask {_names(friends)} for their {noun} {outs}, "
                    f"I will find that {claim} ({CAVEAT}).")
        else:
            prem = " and ".join(f"{_lower(m)} = {_outcome_name(protocol, m, v)}" for m, v in cond.premise)
            whose = _names([f + "'s" for f in friends])
            text = (f"{agent}: If {cond.asker} obtains {prem} and then learns "
                    f"{whose} {noun} {outs}, {cond.asker} finds {claim} ({CAVEAT}).")
        out.append(RenderedStatement(
            agent, text, s.scope,
            {"asker": cond.asker, "gather": list(cond.gather), "premise": dict(cond.premise)},
            CAVEAT, machine_form(s)))
    return out
