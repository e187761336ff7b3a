"""Extended Wigner's-friend protocols: description, execution and Born statistics.

A protocol is an initial state over the shared systems plus an ordered list
of steps.  Every friend measurement writes into a one-qubit lab register
(``L_x`` next to ``S_x``) through :func:`ewfs.qsim.friend_unitary`;
supermeasurements act on a (system, lab) pair and are never applied to the
state, only queried through :func:`joint_distribution`.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import cos, pi, sin
from typing import Sequence, Union

import numpy as np

from .qsim import (
    KET0, KET1, X_BASIS, Y_BASIS, Z_BASIS, OrthonormalBasis, StateVector,
    apply_unitary, basis_state, complete_basis, friend_unitary, make_state, measure_joint,
)


class ScenarioError(ValueError):
    """A protocol, Bell scenario or context violates its structural rules."""


# The Hardy support table labels ok (= U|->|0>) as 0 and fail (= U|+>|0>) as 1.
XSWAP_BASIS = X_BASIS.relabel((1, 0), "Xswap")

SETTING_BASES = {"Z": Z_BASIS, "X": X_BASIS, "Y": Y_BASIS, "Xswap": XSWAP_BASIS}
OK, FAIL = 0, 1
YES, NO = 0, 1
OK_FAIL_NAMES = ("ok", "fail")
YES_NO_NAMES = ("yes", "no")


def lift_basis(friend_basis: OrthonormalBasis, setting: OrthonormalBasis) -> OrthonormalBasis:
    """Supermeasurement basis ``{U|s>|0> : s in setting}`` on (system, lab), completed.

    ``U`` is the friend unitary of ``friend_basis``.  Outcome labels follow
    ``setting``; the two completing vectors get fresh integer labels.
    """
    u = friend_unitary(friend_basis).matrix
    vecs = [u @ np.kron(s, KET0) for s in setting.vectors]
    return complete_basis(vecs, setting.labels, f"lift({friend_basis.name},{setting.name})")


@dataclass(frozen=True)
class FriendMeasure:
    agent: str
    measurement: str
    system: str
    lab: str
    basis: OrthonormalBasis = field(compare=False)


@dataclass(frozen=True)
class SuperMeasure:
    agent: str
    measurement: str
    system: str
    lab: str
    basis: OrthonormalBasis = field(compare=False)
    # display names for labels 0, 1 (e.g. ok/fail)
    outcome_names: tuple[str, ...] = ()


@dataclass(frozen=True)
class Ask:
    """``agent`` learns the outcome recorded in ``lab`` (asks the friend)."""

    agent: str
    lab: str


Step = Union[FriendMeasure, SuperMeasure, Ask]


@dataclass(frozen=True)
class MeasurementId:
    name: str
    kind: str  # "friend" | "super"
    agent: str
    lab: str


@dataclass(frozen=True, eq=False)
class Protocol:
    systems: tuple[str, ...]
    initial_state: StateVector
    steps: tuple[Step, ...] = ()
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "systems", tuple(self.systems))
        object.__setattr__(self, "steps", tuple(self.steps))
        if self.initial_state.registers != self.systems:
            raise ScenarioError(
                f"initial state registers {self.initial_state.registers} != systems {self.systems}")
        self._validate()

    def _validate(self):
        friend_of: dict[str, FriendMeasure] = {}
        supered: set[str] = set()
        names: set[str] = set()
        for i, step in enumerate(self.steps):
            if isinstance(step, (FriendMeasure, SuperMeasure)):
                if step.measurement in names:
                    raise ScenarioError(f"duplicate measurement name {step.measurement!r}")
                names.add(step.measurement)
                if step.system not in self.systems:
                    raise ScenarioError(f"step {i}: unknown system {step.system!r}")
            if isinstance(step, FriendMeasure):
                if step.lab in friend_of:
                    raise ScenarioError(f"step {i}: lab {step.lab!r} already holds a friend measurement")
                if step.lab in self.systems or any(f.system == step.system for f in friend_of.values()):
                    raise ScenarioError(f"step {i}: system {step.system!r} already measured by a friend")
                if step.basis.arity != 1:
                    raise ScenarioError(f"step {i}: friend basis must be single-qubit")
                friend_of[step.lab] = step
            elif isinstance(step, SuperMeasure):
                f = friend_of.get(step.lab)
                if f is None or f.system != step.system:
                    raise ScenarioError(
                        f"step {i}: supermeasurement {step.measurement!r} must target the "
                        f"(system, lab) pair of an earlier friend measurement")
                if step.lab in supered:
                    raise ScenarioError(f"step {i}: lab {step.lab!r} supermeasured twice")
                if step.basis.dim != 4:
                    raise ScenarioError(f"step {i}: supermeasurement basis must be two-qubit")
                supered.add(step.lab)
            elif isinstance(step, Ask):
                if step.lab not in friend_of:
                    raise ScenarioError(f"step {i}: ask targets {step.lab!r} before any friend measured there")
                if step.lab in supered:
                    raise ScenarioError(
                        f"step {i}: cannot ask about {step.lab!r} after it was supermeasured "
                        f"(memory superposed or erased)")
            else:
                raise ScenarioError(f"step {i}: unknown step type {type(step).__name__}")

    @property
    def friend_steps(self) -> list[FriendMeasure]:
        return [s for s in self.steps if isinstance(s, FriendMeasure)]

    @property
    def super_steps(self) -> list[SuperMeasure]:
        return [s for s in self.steps if isinstance(s, SuperMeasure)]

    @property
    def registers(self) -> tuple[str, ...]:
        """Systems in order, each followed by the lab measuring it."""
        lab = {f.system: f.lab for f in self.friend_steps}
        regs = []
        for s in self.systems:
            regs.append(s)
            if s in lab:
                regs.append(lab[s])
        return tuple(regs)

    def measurements(self) -> dict[str, MeasurementId]:
        out = {}
        for s in self.steps:
            if isinstance(s, FriendMeasure):
                out[s.measurement] = MeasurementId(s.measurement, "friend", s.agent, s.lab)
            elif isinstance(s, SuperMeasure):
                out[s.measurement] = MeasurementId(s.measurement, "super", s.agent, s.lab)
        return out

    def step_for(self, measurement: str) -> FriendMeasure | SuperMeasure:
        for s in self.steps:
            if isinstance(s, (FriendMeasure, SuperMeasure)) and s.measurement == measurement:
                return s
        raise KeyError(f"unknown measurement {measurement!r}")

    def agents(self) -> list[str]:
        seen = []
        for s in self.steps:
            if s.agent not in seen:
                seen.append(s.agent)
        return seen

    def with_steps(self, steps: Sequence[Step], name: str | None = None) -> "Protocol":
        return Protocol(self.systems, self.initial_state, tuple(steps),
                        self.name if name is None else name)


def initial_full_state(protocol: Protocol) -> StateVector:
    """Initial state with every lab register in |0>, in ``protocol.registers`` order."""
    labs = [f.lab for f in protocol.friend_steps]
    if not labs:
        return protocol.initial_state
    full = protocol.initial_state.tensor(basis_state(labs, [0] * len(labs)))
    return full.reorder(protocol.registers)


def run_protocol(protocol: Protocol, upto_step: int | None = None) -> StateVector:
    """State after executing the first ``upto_step`` steps (all when None).

    Friend measurements are applied unitarily; supermeasurements and asks
    leave the state untouched.
    """
    steps = protocol.steps if upto_step is None else protocol.steps[:upto_step]
    state = initial_full_state(protocol)
    for s in steps:
        if isinstance(s, FriendMeasure):
            state = apply_unitary(state, friend_unitary(s.basis), [s.system, s.lab])
    return state


def recorded_labs(protocol: Protocol, upto_step: int | None = None) -> dict[str, set[str]]:
    """Agent -> labs whose outcome the agent has asked for."""
    steps = protocol.steps if upto_step is None else protocol.steps[:upto_step]
    out: dict[str, set[str]] = {}
    for s in steps:
        if isinstance(s, Ask):
            out.setdefault(s.agent, set()).add(s.lab)
    return out


def validate_context(protocol: Protocol, variables: Sequence[str]) -> str | None:
    """None when ``variables`` can be gathered together, else the reason why not.

    The only exclusion is a friend measurement together with the
    supermeasurement of that friend's lab.  Unknown names raise KeyError.
    """
    ms = protocol.measurements()
    for v in variables:
        if v not in ms:
            raise KeyError(f"unknown measurement {v!r}")
    if len(set(variables)) != len(variables):
        return f"repeated variable in {list(variables)}"
    for v in variables:
        m = ms[v]
        if m.kind != "friend":
            continue
        for w in variables:
            if ms[w].kind == "super" and ms[w].lab == m.lab:
                return (f"{w} supermeasures {m.agent}'s lab {m.lab}: outcomes {v} and {w} "
                        f"can never be stored together in one memory")
    return None


def sub_protocol(protocol: Protocol, variables: Sequence[str]) -> Protocol:
    """Minimal protocol producing ``variables``; other supermeasurements are dropped."""
    ms = protocol.measurements()
    labs = {ms[v].lab for v in variables}
    keep = []
    for s in protocol.steps:
        if isinstance(s, FriendMeasure) and s.lab in labs:
            keep.append(s)
        elif isinstance(s, SuperMeasure) and s.measurement in variables:
            keep.append(s)
    return protocol.with_steps(keep)


def joint_distribution(protocol: Protocol, variables: Sequence[str]) -> dict[tuple, float]:
    """Born distribution of the outcomes of ``variables`` (keys ordered like ``variables``).

    Friend outcomes are read from the lab memory; the memory value k maps to
    the k-th label of the friend's basis.
    """
    why = validate_context(protocol, variables)
    if why is not None:
        raise ScenarioError(f"context {list(variables)} is not gatherable: {why}")
    sub = sub_protocol(protocol, variables)
    state = run_protocol(sub)
    meas = []
    for v in variables:
        s = sub.step_for(v)
        if isinstance(s, FriendMeasure):
            memory = OrthonormalBasis(np.array([KET0, KET1]), s.basis.labels)
            meas.append((memory, [s.lab]))
        else:
            meas.append((s.basis, [s.system, s.lab]))
    return measure_joint(state, meas)


def ok_fail_basis() -> OrthonormalBasis:
    return lift_basis(Z_BASIS, XSWAP_BASIS)


def yes_no_basis() -> OrthonormalBasis:
    return lift_basis(Y_BASIS, X_BASIS)


HARDY_AMPS = (1, 0, 1, 1)
GHZ_AMPS = (1, 0, 0, 0, 0, 0, 0, 1)


def fr_protocol() -> Protocol:
    """Entanglement version of the Frauchiger-Renner protocol."""
    okf = ok_fail_basis()
    return Protocol(
        ("S_A", "S_B"),
        make_state(("S_A", "S_B"), HARDY_AMPS),
        (
            FriendMeasure("Alice", "A", "S_A", "L_A", Z_BASIS),
            FriendMeasure("Bob", "B", "S_B", "L_B", Z_BASIS),
            SuperMeasure("Ursula", "U", "S_A", "L_A", okf, OK_FAIL_NAMES),
            SuperMeasure("Wigner", "W", "S_B", "L_B", okf, OK_FAIL_NAMES),
        ),
        "fr",
    )


def ghz_fr_protocol() -> Protocol:
    """GHZ state, friends measuring Y, superobservers in the yes/no basis."""
    yn = yes_no_basis()
    systems = ("S_A", "S_B", "S_C")
    return Protocol(
        systems,
        make_state(systems, GHZ_AMPS),
        (
            FriendMeasure("Alice", "A", "S_A", "L_A", Y_BASIS),
            FriendMeasure("Bob", "B", "S_B", "L_B", Y_BASIS),
            FriendMeasure("Charlie", "C", "S_C", "L_C", Y_BASIS),
            SuperMeasure("Ursula", "U", "S_A", "L_A", yn, YES_NO_NAMES),
            SuperMeasure("Valentina", "V", "S_B", "L_B", yn, YES_NO_NAMES),
            SuperMeasure("Wigner", "W", "S_C", "L_C", yn, YES_NO_NAMES),
        ),
        "ghz-fr",
    )


# ---------------------------------------------------------------- Bell scenarios

@dataclass(frozen=True)
class Setting:
    measurement: str
    basis: OrthonormalBasis = field(compare=False)


@dataclass(frozen=True)
class BellParty:
    name: str
    settings: tuple[Setting, Setting]
    friend: str = ""
    superobserver: str = ""
    # protocol variable names for (setting 0, setting 1); default: setting names
    ewfs_names: tuple[str, ...] = ()

    def ewfs_name(self, measurement: str) -> str:
        names = self.ewfs_names or tuple(s.measurement for s in self.settings)
        return names[[s.measurement for s in self.settings].index(measurement)]

    @property
    def system(self) -> str:
        return f"S_{self.name}"

    @property
    def lab(self) -> str:
        return f"L_{self.name}"


@dataclass(frozen=True, eq=False)
class BellScenario:
    """(n,2,2) Bell scenario; party i owns register ``S_<name>`` of the state."""

    parties: tuple[BellParty, ...]
    shared_state: StateVector
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "parties", tuple(self.parties))
        if not self.parties:
            raise ScenarioError("a Bell scenario needs at least one party")
        regs = tuple(p.system for p in self.parties)
        if self.shared_state.registers != regs:
            raise ScenarioError(f"shared state registers {self.shared_state.registers} != {regs}")
        names = set()
        for p in self.parties:
            if len(p.settings) != 2:
                raise ScenarioError(f"party {p.name} needs exactly two settings")
            for s in p.settings:
                if s.basis.arity != 1 or len(s.basis.labels) != 2:
                    raise ScenarioError(f"setting {s.measurement} must be a two-outcome qubit basis")
                if s.measurement in names:
                    raise ScenarioError(f"duplicate measurement name {s.measurement!r}")
                names.add(s.measurement)

    def contexts(self) -> list[tuple[str, ...]]:
        """All maximal contexts, one setting per party, setting-0 first."""
        return [tuple(p.settings[i].measurement for p, i in zip(self.parties, choice))
                for choice in itertools.product((0, 1), repeat=len(self.parties))]

    def setting(self, measurement: str) -> tuple[BellParty, Setting]:
        for p in self.parties:
            for s in p.settings:
                if s.measurement == measurement:
                    return p, s
        raise KeyError(f"unknown measurement {measurement!r}")


def bell_distribution(bell: BellScenario, context: Sequence[str]) -> dict[tuple, float]:
    """Direct Born statistics of one Bell context (one measurement per party)."""
    meas = []
    parties = set()
    for m in context:
        p, s = bell.setting(m)
        if p.name in parties:
            raise ScenarioError(f"context {list(context)} uses party {p.name} twice")
        parties.add(p.name)
        meas.append((s.basis, [p.system]))
    return measure_joint(bell.shared_state, meas)


def compile_bell_to_ewfs(bell: BellScenario) -> tuple[Protocol, dict[tuple[str, ...], tuple[str, ...]]]:
    """Turn each party into a friend (setting 0) and a superobserver (setting 1).

    Returns the protocol and the map from each Bell context to the tuple of
    protocol variables realising it.
    """
    friends, supers = [], []
    for p in bell.parties:
        s0, s1 = p.settings
        friends.append(FriendMeasure(p.friend or f"friend_{p.name}", p.ewfs_name(s0.measurement),
                                     p.system, p.lab, s0.basis))
        supers.append(SuperMeasure(p.superobserver or f"super_{p.name}", p.ewfs_name(s1.measurement),
                                   p.system, p.lab, lift_basis(s0.basis, s1.basis)))
    proto = Protocol(tuple(p.system for p in bell.parties), bell.shared_state,
                     tuple(friends + supers), f"{bell.name}-ewfs" if bell.name else "")
    mapping = {ctx: tuple(bell.setting(m)[0].ewfs_name(m) for m in ctx) for ctx in bell.contexts()}
    return proto, mapping


def compiled_deviation(bell: BellScenario) -> float:
    """Max |P_compiled - P_bell| over every context and joint outcome.

    Completion outcomes of supermeasurements count as deviations too.
    """
    proto, mapping = compile_bell_to_ewfs(bell)
    worst = 0.0
    for ctx, variables in mapping.items():
        direct = bell_distribution(bell, ctx)
        compiled = joint_distribution(proto, variables)
        for key in set(direct) | set(compiled):
            worst = max(worst, abs(direct.get(key, 0.0) - compiled.get(key, 0.0)))
    return worst


def _rotated(theta: float) -> OrthonormalBasis:
    """Eigenbasis of cos(theta) Z + sin(theta) X (+1 eigenvector labelled 0)."""
    c, s = cos(theta / 2), sin(theta / 2)
    return OrthonormalBasis(np.array([[c, s], [-s, c]]), (0, 1), f"R({float(theta)!r})")


def hardy_bell() -> BellScenario:
    parties = (
        BellParty("A", (Setting("A", Z_BASIS), Setting("U", XSWAP_BASIS)), "Alice", "Ursula"),
        BellParty("B", (Setting("B", Z_BASIS), Setting("W", XSWAP_BASIS)), "Bob", "Wigner"),
    )
    return BellScenario(parties, make_state(("S_A", "S_B"), HARDY_AMPS), "hardy")


def ghz_bell() -> BellScenario:
    parties = tuple(
        BellParty(p, (Setting(f"Y_{p}", Y_BASIS), Setting(f"X_{p}", X_BASIS)), fa, sa, (f, s))
        for p, f, s, fa, sa in [("A", "A", "U", "Alice", "Ursula"),
                                ("B", "B", "V", "Bob", "Valentina"),
                                ("C", "C", "W", "Charlie", "Wigner")])
    return BellScenario(parties, make_state(("S_A", "S_B", "S_C"), GHZ_AMPS), "ghz")


def chsh_bell() -> BellScenario:
    """Singlet with Z, X for one party and (Z +- X)/sqrt(2) for the other."""
    parties = (
        BellParty("A", (Setting("A0", Z_BASIS), Setting("A1", X_BASIS))),
        BellParty("B", (Setting("B0", _rotated(pi / 4)), Setting("B1", _rotated(-pi / 4)))),
    )
    singlet = make_state(("S_A", "S_B"), (0, 1, -1, 0))
    return BellScenario(parties, singlet, "chsh")


def product_bell(state_a=KET0, state_b=KET0) -> BellScenario:
    parties = (
        BellParty("A", (Setting("A0", Z_BASIS), Setting("A1", X_BASIS))),
        BellParty("B", (Setting("B0", Z_BASIS), Setting("B1", X_BASIS))),
    )
    state = make_state(("S_A", "S_B"), np.kron(state_a, state_b))
    return BellScenario(parties, state, "product")


CANONICAL_BELL = {"hardy": hardy_bell, "ghz": ghz_bell, "chsh": chsh_bell, "product": product_bell}
CANONICAL_PROTOCOLS = {"fr": fr_protocol, "ghz-fr": ghz_fr_protocol}

# Contexts of the possibility tables, in the tables' row order.
HARDY_CONTEXTS = (("A", "B"), ("A", "W"), ("U", "B"), ("U", "W"))
GHZ_CONTEXTS = (("U", "V", "W"), ("U", "B", "C"), ("A", "V", "C"), ("A", "B", "W"))
GHZ_CONTEXT_NAMES = ("XXX", "XYY", "YXY", "YYX")
GHZ_BELL_CONTEXTS = (("X_A", "X_B", "X_C"), ("X_A", "Y_B", "Y_C"),
                     ("Y_A", "X_B", "Y_C"), ("Y_A", "Y_B", "X_C"))
# protocol variable -> GHZ-Mermin measurement it stands for
GHZ_FR_TO_MERMIN = {"U": "X_A", "V": "X_B", "W": "X_C", "A": "Y_A", "B": "Y_B", "C": "Y_C"}
