"""JSON file formats for protocols, Bell scenarios, empirical models and reports.

Bases are written by name whenever the name parses back to the same basis
(``Z``, ``X``, ``Y``, ``Xswap``, ``R(theta)``, ``lift(F,S)``) and as explicit
vectors otherwise.  Complex numbers are ``[re, im]`` pairs of Python float
reprs, so parsing what was printed gives back identical arrays.
"""
from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .empirical import EmpiricalModel, ModelError, PossibilisticModel, model_from_json, model_to_json
from .qsim import NORM_TOL, OrthonormalBasis, SimulationError, StateVector, make_state
from .scenario import (
    GHZ_AMPS, HARDY_AMPS, SETTING_BASES, Ask, BellParty, BellScenario, FriendMeasure, Protocol,
    ScenarioError, Setting, SuperMeasure, _rotated, lift_basis,
)

FORMAT_VERSION = 1
PROTOCOL_FORMAT = "ewfs-protocol"
BELL_FORMAT = "ewfs-bell"
MODEL_FORMAT = "ewfs-model"
REPORT_FORMAT = "ewfs-report"
NAMED_STATES = {"ghz": GHZ_AMPS, "hardy_fr": HARDY_AMPS}


class FormatError(ValueError):
    """A file does not follow one of the formats below."""


# ---------------------------------------------------------------- numbers and bases

def _complex_out(z) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def _complex_in(v) -> complex:
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, (list, tuple)) and len(v) == 2 and all(isinstance(x, (int, float)) for x in v):
        return complex(v[0], v[1])
    raise FormatError(f"expected a number or [re, im], got {v!r}")


def _split_args(inner: str) -> list[str]:
    depth, start, parts = 0, 0, []
    for i, ch in enumerate(inner):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch == "," and depth == 0:
            parts.append(inner[start:i])
            start = i + 1
    parts.append(inner[start:])
    return [p.strip() for p in parts]


def basis_from_name(name: str) -> OrthonormalBasis:
    if name in SETTING_BASES:
        return SETTING_BASES[name]
    m = re.fullmatch(r"R\((.+)\)", name)
    if m:
        try:
            return _rotated(float(m.group(1)))
        except ValueError as exc:
            raise FormatError(f"bad angle in basis name {name!r}") from exc
    m = re.fullmatch(r"lift\((.*)\)", name)
    if m:
        args = _split_args(m.group(1))
        if len(args) == 2:
            return lift_basis(basis_from_name(args[0]), basis_from_name(args[1]))
    raise FormatError(f"unknown basis name {name!r}")


def _same_basis(a: OrthonormalBasis, b: OrthonormalBasis) -> bool:
    return a.labels == b.labels and a.vectors.shape == b.vectors.shape and np.array_equal(a.vectors, b.vectors)


def basis_to_json(basis: OrthonormalBasis):
    if basis.name:
        try:
            if _same_basis(basis_from_name(basis.name), basis):
                return basis.name
        except (FormatError, SimulationError):
            pass
    return {
        "name": basis.name,
        "labels": list(basis.labels),
        "vectors": [[_complex_out(z) for z in v] for v in basis.vectors],
    }


def basis_from_json(data) -> OrthonormalBasis:
    if isinstance(data, str):
        return basis_from_name(data)
    if not isinstance(data, Mapping) or "vectors" not in data:
        raise FormatError(f"basis must be a name or an object with vectors, got {data!r}")
    vecs = np.array([[_complex_in(z) for z in v] for v in data["vectors"]], dtype=complex)
    labels = data.get("labels", list(range(len(vecs))))
    try:
        return OrthonormalBasis(vecs, tuple(labels), data.get("name", ""))
    except SimulationError as exc:
        raise FormatError(str(exc)) from exc


def state_to_json(state: StateVector):
    for name, amps in NAMED_STATES.items():
        if len(amps) == state.amps.size:
            ref = make_state(state.registers, amps)
            if np.array_equal(ref.amps, state.amps):
                return name
    return {"amplitudes": [_complex_out(z) for z in state.amps]}


def state_from_json(data, registers) -> StateVector:
    try:
        if isinstance(data, str):
            if data not in NAMED_STATES:
                raise FormatError(f"unknown named state {data!r} (known: {sorted(NAMED_STATES)})")
            return make_state(registers, NAMED_STATES[data])
        if isinstance(data, Mapping) and "amplitudes" in data:
            amps = np.array([_complex_in(z) for z in data["amplitudes"]], dtype=complex)
            if amps.shape == (2 ** len(registers),) and abs(np.linalg.norm(amps) - 1) <= NORM_TOL:
                # already normalized: keep the written values bit for bit
                return StateVector(tuple(registers), amps)
            return make_state(registers, amps)
    except SimulationError as exc:
        raise FormatError(str(exc)) from exc
    raise FormatError(f"initial state must be a name or {{'amplitudes': [...]}}, got {data!r}")


# ---------------------------------------------------------------- protocols

def _step_to_json(step) -> dict:
    if isinstance(step, Ask):
        return {"type": "ask", "agent": step.agent, "lab": step.lab}
    out = {
        "type": "friend" if isinstance(step, FriendMeasure) else "super",
        "agent": step.agent,
        "measurement": step.measurement,
        "system": step.system,
        "lab": step.lab,
        "basis": basis_to_json(step.basis),
    }
    if isinstance(step, SuperMeasure) and step.outcome_names:
        out["outcome_names"] = list(step.outcome_names)
    return out


def _need(d: Mapping, key: str, where: str):
    if key not in d:
        raise FormatError(f"{where}: missing {key!r}")
    return d[key]


def _step_from_json(d: Mapping, i: int):
    where = f"step {i}"
    kind = _need(d, "type", where)
    if kind == "ask":
        return Ask(_need(d, "agent", where), _need(d, "lab", where))
    if kind not in ("friend", "super"):
        raise FormatError(f"{where}: unknown step type {kind!r}")
    args = [_need(d, k, where) for k in ("agent", "measurement", "system", "lab")]
    basis = basis_from_json(_need(d, "basis", where))
    if kind == "friend":
        return FriendMeasure(*args, basis)
    return SuperMeasure(*args, basis, tuple(d.get("outcome_names", ())))


def protocol_to_json(protocol: Protocol, contexts=None) -> dict:
    out = {
        "format": PROTOCOL_FORMAT,
        "version": FORMAT_VERSION,
        "name": protocol.name,
        "systems": list(protocol.systems),
        "initial_state": state_to_json(protocol.initial_state),
        "steps": [_step_to_json(s) for s in protocol.steps],
    }
    if contexts:
        out["contexts"] = [list(c) for c in contexts]
    return out


def protocol_from_json(data: Mapping) -> tuple[Protocol, list[tuple[str, ...]]]:
    """The protocol and its declared contexts (possibly empty)."""
    _check_format(data, PROTOCOL_FORMAT)
    systems = tuple(_need(data, "systems", "protocol"))
    state = state_from_json(_need(data, "initial_state", "protocol"), systems)
    steps = [_step_from_json(s, i) for i, s in enumerate(_need(data, "steps", "protocol"))]
    try:
        proto = Protocol(systems, state, tuple(steps), data.get("name", ""))
    except ScenarioError as exc:
        raise FormatError(str(exc)) from exc
    contexts = [tuple(c) for c in data.get("contexts", [])]
    return proto, contexts


# ---------------------------------------------------------------- Bell scenarios

def bell_to_json(bell: BellScenario) -> dict:
    parties = []
    for p in bell.parties:
        d = {"name": p.name,
             "settings": [{"measurement": s.measurement, "basis": basis_to_json(s.basis)} for s in p.settings]}
        if p.friend:
            d["friend"] = p.friend
        if p.superobserver:
            d["superobserver"] = p.superobserver
        if p.ewfs_names:
            d["ewfs_names"] = list(p.ewfs_names)
        parties.append(d)
    return {
        "format": BELL_FORMAT,
        "version": FORMAT_VERSION,
        "name": bell.name,
        "state": state_to_json(bell.shared_state),
        "parties": parties,
    }


def bell_from_json(data: Mapping) -> BellScenario:
    _check_format(data, BELL_FORMAT)
    parties = []
    for i, d in enumerate(_need(data, "parties", "bell")):
        where = f"party {i}"
        settings = tuple(Setting(_need(s, "measurement", where), basis_from_json(_need(s, "basis", where)))
                         for s in _need(d, "settings", where))
        parties.append(BellParty(_need(d, "name", where), settings, d.get("friend", ""),
                                 d.get("superobserver", ""), tuple(d.get("ewfs_names", ()))))
    regs = tuple(f"S_{p.name}" for p in parties)
    state = state_from_json(_need(data, "state", "bell"), regs)
    try:
        return BellScenario(tuple(parties), state, data.get("name", ""))
    except ScenarioError as exc:
        raise FormatError(str(exc)) from exc


# ---------------------------------------------------------------- models and dispatch

def model_file_json(model: EmpiricalModel | PossibilisticModel) -> dict:
    return {"format": MODEL_FORMAT, "version": FORMAT_VERSION, **model_to_json(model)}


def model_file_from_json(data: Mapping) -> EmpiricalModel | PossibilisticModel:
    _check_format(data, MODEL_FORMAT)
    try:
        return model_from_json(data)
    except (ModelError, KeyError, TypeError) as exc:
        raise FormatError(f"bad model: {exc}") from exc


def _check_format(data, expected: str) -> None:
    if not isinstance(data, Mapping):
        raise FormatError("top level must be a JSON object")
    if data.get("format") != expected:
        raise FormatError(f"expected format {expected!r}, got {data.get('format')!r}")
    if data.get("version", FORMAT_VERSION) != FORMAT_VERSION:
        raise FormatError(f"unsupported version {data.get('version')!r}")


def read_json(path: str | Path):
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from exc


def load_file(path: str | Path):
    """Parse any supported file; returns (format, object) where object is a
    model, a Bell scenario or a (protocol, contexts) pair."""
    data = read_json(path)
    fmt = data.get("format") if isinstance(data, Mapping) else None
    if fmt == MODEL_FORMAT:
        return fmt, model_file_from_json(data)
    if fmt == BELL_FORMAT:
        return fmt, bell_from_json(data)
    if fmt == PROTOCOL_FORMAT:
        return fmt, protocol_from_json(data)
    raise FormatError(f"{path}: unknown format {fmt!r}")


def dumps(data) -> str:
    """Canonical JSON text: sorted keys, two-space indent, trailing newline."""
    return json.dumps(data, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def digest(data) -> str:
    return hashlib.sha256(json.dumps(data, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


# ---------------------------------------------------------------- reports

@dataclass(frozen=True)
class Report:
    command: tuple[str, ...]
    inputs_digest: str
    result: Any
    version: str

    def to_json(self) -> dict:
        return {
            "format": REPORT_FORMAT,
            "command": list(self.command),
            "inputs_digest": self.inputs_digest,
            "result": self.result,
            "version": self.version,
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "Report":
        if not isinstance(data, Mapping) or data.get("format") != REPORT_FORMAT:
            raise FormatError("not a report")
        return cls(tuple(data["command"]), data["inputs_digest"], data["result"], data["version"])
