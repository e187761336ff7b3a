"""Empirical and possibilistic models over a measurement scenario.

An empirical model assigns a probability table to every maximal context; the
possibilistic model keeps only which joint outcomes are possible.  Joint
outcomes are tuples ordered like the context they belong to.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Hashable, Mapping, Sequence

from .scenario import (
    GHZ_BELL_CONTEXTS, HARDY_CONTEXTS, BellScenario, Protocol, ScenarioError,
    bell_distribution, joint_distribution, validate_context,
)

Context = tuple[str, ...]
Outcome = tuple[Hashable, ...]

SUM_TOL = 1e-10
NEG_TOL = 1e-12
DEFAULT_EPS = 1e-9


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class MeasurementScenarioSpec:
    measurements: tuple[str, ...]
    outcomes: tuple[Hashable, ...]
    contexts: tuple[Context, ...]

    def __post_init__(self):
        object.__setattr__(self, "measurements", tuple(self.measurements))
        object.__setattr__(self, "outcomes", tuple(self.outcomes))
        object.__setattr__(self, "contexts", tuple(tuple(c) for c in self.contexts))
        ms = set(self.measurements)
        if len(ms) != len(self.measurements):
            raise ModelError("duplicate measurement names")
        covered = set()
        for c in self.contexts:
            if len(set(c)) != len(c):
                raise ModelError(f"context {c} repeats a measurement")
            unknown = set(c) - ms
            if unknown:
                raise ModelError(f"context {c} uses unknown measurements {sorted(unknown)}")
            covered |= set(c)
        if covered != ms:
            raise ModelError(f"measurements {sorted(ms - covered)} appear in no context")
        for c, d in itertools.permutations(self.contexts, 2):
            if set(c) <= set(d):
                raise ModelError(f"context {c} is not maximal (contained in {d})")

    def joint_outcomes(self, context: Sequence[str]) -> list[Outcome]:
        return list(itertools.product(self.outcomes, repeat=len(context)))

    def same_as(self, other: "MeasurementScenarioSpec") -> bool:
        return (set(self.measurements) == set(other.measurements)
                and self.outcomes == other.outcomes and self.contexts == other.contexts)


@dataclass(frozen=True, eq=False)
class EmpiricalModel:
    spec: MeasurementScenarioSpec
    tables: Mapping[Context, Mapping[Outcome, float]]

    def __post_init__(self):
        tables = {}
        for c in self.spec.contexts:
            if c not in self.tables:
                raise ModelError(f"no table for context {c}")
            t = dict(self.tables[c])
            extra = set(t) - set(self.spec.joint_outcomes(c))
            if extra:
                raise ModelError(f"context {c}: outcomes {sorted(extra)} outside the outcome set")
            row = {o: t.get(o, 0.0) for o in self.spec.joint_outcomes(c)}
            if min(row.values()) < -NEG_TOL:
                raise ModelError(f"context {c}: negative probability {min(row.values())}")
            if abs(sum(row.values()) - 1) > SUM_TOL:
                raise ModelError(f"context {c}: probabilities sum to {sum(row.values())}")
            tables[c] = row
        object.__setattr__(self, "tables", tables)

    def rename(self, mapping: Mapping[str, str], contexts: Sequence[Context] | None = None) -> "EmpiricalModel":
        spec, order = _renamed_spec(self.spec, mapping, contexts)
        tables = {}
        for c in spec.contexts:
            src, perm = order[c]
            tables[c] = {tuple(o[i] for i in perm): p for o, p in self.tables[src].items()}
        return EmpiricalModel(spec, tables)


@dataclass(frozen=True)
class PossibilisticModel:
    spec: MeasurementScenarioSpec
    supports: Mapping[Context, frozenset]

    def __post_init__(self):
        sup = {}
        for c in self.spec.contexts:
            s = frozenset(tuple(o) for o in self.supports.get(c, ()))
            if not s:
                raise ModelError(f"context {c} has empty support")
            allowed = set(self.spec.joint_outcomes(c))
            if not s <= allowed:
                raise ModelError(f"context {c}: support has outcomes outside the outcome set")
            sup[c] = s
        object.__setattr__(self, "supports", sup)

    def __eq__(self, other):
        if not isinstance(other, PossibilisticModel):
            return NotImplemented
        return self.spec.same_as(other.spec) and self.supports == other.supports

    def __hash__(self):
        return hash((self.spec.contexts, tuple(sorted(self.supports.items()))))

    def cell(self, context: Context, outcome: Outcome) -> int:
        return int(tuple(outcome) in self.supports[tuple(context)])

    def grid(self) -> list[list[int]]:
        """0/1 rows in context order, columns in lexicographic outcome order."""
        return [[self.cell(c, o) for o in self.spec.joint_outcomes(c)] for c in self.spec.contexts]

    def rename(self, mapping: Mapping[str, str], contexts: Sequence[Context] | None = None) -> "PossibilisticModel":
        spec, order = _renamed_spec(self.spec, mapping, contexts)
        sup = {}
        for c in spec.contexts:
            src, perm = order[c]
            sup[c] = frozenset(tuple(o[i] for i in perm) for o in self.supports[src])
        return PossibilisticModel(spec, sup)


def _renamed_spec(spec, mapping, contexts):
    """Rename measurements; optionally reorder/permute contexts to ``contexts``."""
    ren = {m: mapping.get(m, m) for m in spec.measurements}
    renamed = {tuple(ren[m] for m in c): c for c in spec.contexts}
    if contexts is None:
        contexts = list(renamed)
    order = {}
    for c in contexts:
        c = tuple(c)
        match = [r for r in renamed if set(r) == set(c)]
        if not match:
            raise ModelError(f"context {c} not present after renaming")
        r = match[0]
        order[c] = (renamed[r], [r.index(m) for m in c])
    if len(order) != len(spec.contexts):
        raise ModelError("context list must cover every context exactly once")
    new = MeasurementScenarioSpec(tuple(ren[m] for m in spec.measurements), spec.outcomes, tuple(order))
    return new, order


def model_from_bell(bell: BellScenario, contexts: Sequence[Context] | None = None) -> EmpiricalModel:
    contexts = [tuple(c) for c in (contexts or bell.contexts())]
    used = [m for c in contexts for m in c]
    measurements = tuple(dict.fromkeys(
        s.measurement for p in bell.parties for s in p.settings if s.measurement in used))
    spec = MeasurementScenarioSpec(measurements, (0, 1), tuple(contexts))
    return EmpiricalModel(spec, {c: bell_distribution(bell, c) for c in contexts})


def model_from_protocol(protocol: Protocol, contexts: Sequence[Sequence[str]],
                        outcomes: Sequence[Hashable] = (0, 1), extra_tol: float = DEFAULT_EPS) -> EmpiricalModel:
    """Tables from :func:`joint_distribution`, restricted to ``outcomes``.

    Outcomes of basis-completion vectors must carry total probability below
    ``extra_tol``; they are then dropped.
    """
    contexts = [tuple(c) for c in contexts]
    for c in contexts:
        why = validate_context(protocol, c)
        if why is not None:
            raise ScenarioError(f"context {list(c)} is not gatherable: {why}")
    allowed = set(outcomes)
    tables = {}
    for c in contexts:
        dist = joint_distribution(protocol, c)
        stray = sum(p for o, p in dist.items() if not set(o) <= allowed)
        if stray > extra_tol:
            raise ModelError(f"context {c}: {stray:.3g} probability on outcomes outside {sorted(allowed)}")
        tables[c] = {o: p for o, p in dist.items() if set(o) <= allowed}
    order = [m for m in protocol.measurements() if any(m in c for c in contexts)]
    return EmpiricalModel(MeasurementScenarioSpec(tuple(order), tuple(outcomes), tuple(contexts)), tables)


def possibilistic(model: EmpiricalModel, eps: float = DEFAULT_EPS) -> PossibilisticModel:
    return PossibilisticModel(model.spec, {
        c: frozenset(o for o, p in t.items() if p > eps) for c, t in model.tables.items()})


def _from_grid(measurements, contexts, grid) -> PossibilisticModel:
    spec = MeasurementScenarioSpec(measurements, (0, 1), contexts)
    sup = {}
    for c, row in zip(spec.contexts, grid):
        outs = spec.joint_outcomes(c)
        sup[c] = frozenset(o for o, bit in zip(outs, row) if bit)
    return PossibilisticModel(spec, sup)


def canonical_hardy() -> PossibilisticModel:
    """Hardy support table, typed in by hand (rows AB, AW, UB, UW; columns 00 01 10 11)."""
    return _from_grid(("A", "B", "U", "W"), HARDY_CONTEXTS, [
        [1, 0, 1, 1],
        [1, 1, 0, 1],
        [0, 1, 1, 1],
        [1, 1, 1, 1],
    ])


def canonical_ghz_mermin() -> PossibilisticModel:
    """GHZ-Mermin support table, typed in by hand (rows XXX, XYY, YXY, YYX; columns 000 .. 111)."""
    return _from_grid(("X_A", "X_B", "X_C", "Y_A", "Y_B", "Y_C"), GHZ_BELL_CONTEXTS, [
        [1, 0, 0, 1, 0, 1, 1, 0],
        [0, 1, 1, 0, 1, 0, 0, 1],
        [0, 1, 1, 0, 1, 0, 0, 1],
        [0, 1, 1, 0, 1, 0, 0, 1],
    ])


@dataclass(frozen=True)
class NoSignallingReport:
    max_deviation: float
    worst: tuple | None  # (context, context, shared variables, marginal outcome)
    tol: float

    @property
    def ok(self) -> bool:
        return self.max_deviation <= self.tol


def marginal(table: Mapping[Outcome, float], context: Context, keep: Sequence[str]) -> dict[Outcome, float]:
    idx = [context.index(m) for m in keep]
    out: dict[Outcome, float] = {}
    for o, p in table.items():
        k = tuple(o[i] for i in idx)
        out[k] = out.get(k, 0.0) + p
    return out


def check_no_signalling(model: EmpiricalModel, tol: float = SUM_TOL) -> NoSignallingReport:
    """Largest disagreement between marginals of overlapping contexts."""
    worst, where = 0.0, None
    for c, d in itertools.combinations(model.spec.contexts, 2):
        shared = [m for m in c if m in d]
        if not shared:
            continue
        mc = marginal(model.tables[c], c, shared)
        md = marginal(model.tables[d], d, shared)
        for k in set(mc) | set(md):
            dev = abs(mc.get(k, 0.0) - md.get(k, 0.0))
            if dev > worst:
                worst, where = dev, (c, d, tuple(shared), k)
    return NoSignallingReport(worst, where, tol)


# ---------------------------------------------------------------- serialization

def _key(o: Outcome) -> str:
    return ",".join(str(x) for x in o)


def model_to_json(model: EmpiricalModel | PossibilisticModel) -> dict:
    """Rows are contexts, columns joint outcomes; cells are probabilities or 0/1."""
    spec = model.spec
    rows = []
    for c in spec.contexts:
        outs = spec.joint_outcomes(c)
        if isinstance(model, EmpiricalModel):
            cells = [model.tables[c][o] for o in outs]
        else:
            cells = [model.cell(c, o) for o in outs]
        rows.append({"context": list(c), "columns": [_key(o) for o in outs], "cells": cells})
    return {
        "kind": "empirical" if isinstance(model, EmpiricalModel) else "possibilistic",
        "measurements": list(spec.measurements),
        "outcomes": list(spec.outcomes),
        "rows": rows,
    }


def model_from_json(data: Mapping) -> EmpiricalModel | PossibilisticModel:
    kind = data.get("kind")
    if kind not in ("empirical", "possibilistic"):
        raise ModelError(f"unknown model kind {kind!r}")
    outcomes = tuple(data["outcomes"])
    contexts = tuple(tuple(r["context"]) for r in data["rows"])
    spec = MeasurementScenarioSpec(tuple(data["measurements"]), outcomes, contexts)
    by_str = {str(o): o for o in outcomes}
    content = {}
    for r in data["rows"]:
        c = tuple(r["context"])
        if len(r["columns"]) != len(r["cells"]):
            raise ModelError(f"row {c}: {len(r['columns'])} columns but {len(r['cells'])} cells")
        cells = {}
        for col, v in zip(r["columns"], r["cells"]):
            parts = col.split(",")
            if len(parts) != len(c) or any(p not in by_str for p in parts):
                raise ModelError(f"row {c}: bad column {col!r}")
            cells[tuple(by_str[p] for p in parts)] = v
        content[c] = cells
    if kind == "empirical":
        return EmpiricalModel(spec, {c: {o: float(p) for o, p in t.items()} for c, t in content.items()})
    return PossibilisticModel(spec, {c: frozenset(o for o, v in t.items() if v) for c, t in content.items()})
