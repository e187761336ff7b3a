"""Place empirical models in the hierarchy noncontextual < probabilistic < logical < strong.

Logical and strong contextuality are decided by enumerating every global
assignment of outcomes to measurements.  Probabilistic contextuality asks
whether some probability distribution over those assignments marginalises
to every context table; that linear system is solved in exact rationals
after snapping each probability to a nearby fraction.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Mapping

import numpy as np

from .empirical import DEFAULT_EPS, EmpiricalModel, PossibilisticModel, possibilistic
from .lp import feasible_point

MAX_ASSIGNMENTS = 2 ** 24
SNAP_DENOMINATOR = 10 ** 6
SNAP_TOL = 1e-9
_CHUNK = 1 << 18


class ScenarioTooLarge(ValueError):
    pass


class SnapError(ValueError):
    pass


class HierarchyLevel(enum.IntEnum):
    NONCONTEXTUAL = 0
    PROBABILISTIC = 1
    LOGICAL = 2
    STRONG = 3


@dataclass(frozen=True)
class GlobalAssignment(Mapping):
    """Total map measurement -> outcome; hashable."""

    items_: tuple[tuple[str, object], ...]

    @classmethod
    def of(cls, mapping: Mapping) -> "GlobalAssignment":
        return cls(tuple(sorted(mapping.items())))

    def __getitem__(self, k):
        for m, v in self.items_:
            if m == k:
                return v
        raise KeyError(k)

    def __iter__(self):
        return (m for m, _ in self.items_)

    def __len__(self):
        return len(self.items_)

    def __repr__(self):
        return "{" + ", ".join(f"{m}->{v}" for m, v in self.items_) + "}"


def _check_size(spec) -> int:
    total = len(spec.outcomes) ** len(spec.measurements)
    if total > MAX_ASSIGNMENTS:
        raise ScenarioTooLarge(
            f"{len(spec.outcomes)}^{len(spec.measurements)} global assignments exceed {MAX_ASSIGNMENTS}")
    return total


def _digits(idx: np.ndarray, spec) -> list[np.ndarray]:
    """Outcome index of each measurement for assignment numbers ``idx`` (first = most significant)."""
    k, n = len(spec.outcomes), len(spec.measurements)
    return [(idx // k ** (n - 1 - i)) % k for i in range(n)]


def _context_codes(spec, digits, context) -> np.ndarray:
    k = len(spec.outcomes)
    pos = {m: i for i, m in enumerate(spec.measurements)}
    code = np.zeros_like(digits[0])
    for m in context:
        code = code * k + digits[pos[m]]
    return code


def _lookup(spec, context, outcomes) -> np.ndarray:
    """Boolean table over context codes marking ``outcomes``."""
    k = len(spec.outcomes)
    oi = {o: i for i, o in enumerate(spec.outcomes)}
    table = np.zeros(k ** len(context), dtype=bool)
    for o in outcomes:
        code = 0
        for x in o:
            code = code * k + oi[x]
        table[code] = True
    return table


def _consistent_indices(pm: PossibilisticModel) -> Iterator[np.ndarray]:
    spec = pm.spec
    total = _check_size(spec)
    lookups = [(c, _lookup(spec, c, pm.supports[c])) for c in spec.contexts]
    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(total, start + _CHUNK), dtype=np.int64)
        digits = _digits(idx, spec)
        ok = np.ones(idx.size, dtype=bool)
        for c, table in lookups:
            ok &= table[_context_codes(spec, digits, c)]
        yield idx[ok]


def _assignment(spec, index: int) -> GlobalAssignment:
    k, n = len(spec.outcomes), len(spec.measurements)
    vals = {}
    for i, m in enumerate(spec.measurements):
        vals[m] = spec.outcomes[(index // k ** (n - 1 - i)) % k]
    return GlobalAssignment.of(vals)


def consistent_globals(pm: PossibilisticModel) -> set[GlobalAssignment]:
    """Global assignments whose restriction to every context is possible."""
    return {_assignment(pm.spec, int(i)) for chunk in _consistent_indices(pm) for i in chunk}


def count_consistent_globals(pm: PossibilisticModel) -> int:
    return sum(int(chunk.size) for chunk in _consistent_indices(pm))


def is_strongly_contextual(pm: PossibilisticModel) -> bool:
    return count_consistent_globals(pm) == 0


def is_logically_contextual(pm: PossibilisticModel):
    """``(True, (context, section))`` for the first possible section with no
    consistent global extension, else ``(False, None)``.

    Contexts are scanned in declaration order, sections lexicographically.
    """
    spec = pm.spec
    extendable = {c: set() for c in spec.contexts}
    for chunk in _consistent_indices(pm):
        digits = _digits(chunk, spec)
        for c in spec.contexts:
            extendable[c].update(np.unique(_context_codes(spec, digits, c)).tolist())
    k = len(spec.outcomes)
    oi = {o: i for i, o in enumerate(spec.outcomes)}
    for c in spec.contexts:
        for section in sorted(pm.supports[c], key=lambda o: [oi[x] for x in o]):
            code = 0
            for x in section:
                code = code * k + oi[x]
            if code not in extendable[c]:
                return True, (c, dict(zip(c, section)))
    return False, None


# ---------------------------------------------------------------- probabilistic level

def snap(p: float) -> Fraction:
    """Nearest fraction with denominator <= 10**6; must lie within 1e-9 of ``p``."""
    f = Fraction(float(p)).limit_denominator(SNAP_DENOMINATOR)
    if abs(float(f) - p) > SNAP_TOL:
        raise SnapError(f"no fraction with denominator <= {SNAP_DENOMINATOR} within {SNAP_TOL} of {p!r}")
    return f


@dataclass
class ProbabilisticResult:
    contextual: bool
    # exact: the snapped tables are reproduced exactly; otherwise only within snap_tol.
    # Only meaningful when a mixture was found.
    exact: bool
    weights: dict[GlobalAssignment, Fraction] | None = None
    snapped: dict = field(default_factory=dict)
    snap_tol: Fraction = Fraction(1, 10 ** 9)

    def max_residual(self, model: EmpiricalModel) -> Fraction:
        """Largest |sum of weights - snapped table entry| (0 for exact mixtures)."""
        if self.weights is None:
            raise ValueError("no mixture to check")
        worst = Fraction(0)
        for c, row in self.snapped.items():
            for o, p in row.items():
                got = sum((w for g, w in self.weights.items()
                           if tuple(g[m] for m in c) == o), Fraction(0))
                worst = max(worst, abs(got - p))
        return worst


def probabilistic_analysis(em: EmpiricalModel) -> ProbabilisticResult:
    """Search for a noncontextual mixture of global assignments, exactly.

    First the snapped tables must be matched exactly.  If that fails (which
    snapping alone can cause when probabilities are irrational), every
    entry may move by at most 1e-9; the model is contextual only if even
    that relaxed system is infeasible.
    """
    spec = em.spec
    total = _check_size(spec)
    snapped = {c: {o: snap(p) for o, p in row.items()} for c, row in em.tables.items()}
    idx = np.arange(total, dtype=np.int64)
    digits = _digits(idx, spec)
    k = len(spec.outcomes)
    oi = {o: i for i, o in enumerate(spec.outcomes)}
    rows, rhs = [], []
    for c in spec.contexts:
        codes = _context_codes(spec, digits, c)
        for o, p in snapped[c].items():
            code = 0
            for x in o:
                code = code * k + oi[x]
            rows.append((codes == code).astype(int).tolist())
            rhs.append(p)
    norm_row = [1] * total

    x = feasible_point([norm_row] + rows, [1] + rhs)
    exact = x is not None
    tol = Fraction(1, 10 ** 9)
    if x is None:
        a_ub = rows + [[-v for v in r] for r in rows]
        b_ub = [p + tol for p in rhs] + [-(p - tol) for p in rhs]
        x = feasible_point([norm_row], [1], a_ub, b_ub)
    if x is None:
        return ProbabilisticResult(True, False, None, snapped, tol)
    weights = {_assignment(spec, i): w for i, w in enumerate(x) if w}
    return ProbabilisticResult(False, exact, weights, snapped, tol)


def is_probabilistically_contextual(em: EmpiricalModel) -> bool:
    return probabilistic_analysis(em).contextual


# ---------------------------------------------------------------- classification

@dataclass
class Classification:
    level: HierarchyLevel
    consistent_globals: int
    total_globals: int
    witness: tuple | None = None  # (context, section) when LOGICAL
    probabilistic: ProbabilisticResult | None = None

    def to_json(self) -> dict:
        out = {
            "level": self.level.name,
            "consistent_globals": self.consistent_globals,
            "total_globals": self.total_globals,
            "witness": None,
            "lp": None,
        }
        if self.witness is not None:
            c, section = self.witness
            out["witness"] = {"context": list(c), "section": {m: section[m] for m in c}}
        if self.probabilistic is not None:
            pr = self.probabilistic
            out["lp"] = {
                "feasible": not pr.contextual,
                "exact": pr.exact,
                "mixture": None if pr.weights is None else [
                    {"assignment": dict(g), "weight": str(w)} for g, w in sorted(
                        pr.weights.items(), key=lambda kv: kv[0].items_)],
            }
        return out


def classification_report(em: EmpiricalModel, eps: float = DEFAULT_EPS) -> Classification:
    pm = possibilistic(em, eps)
    total = _check_size(em.spec)
    count = count_consistent_globals(pm)
    if count == 0:
        return Classification(HierarchyLevel.STRONG, 0, total)
    logical, witness = is_logically_contextual(pm)
    if logical:
        return Classification(HierarchyLevel.LOGICAL, count, total, witness)
    pr = probabilistic_analysis(em)
    level = HierarchyLevel.PROBABILISTIC if pr.contextual else HierarchyLevel.NONCONTEXTUAL
    return Classification(level, count, total, None, pr)


def classify(em: EmpiricalModel, eps: float = DEFAULT_EPS) -> HierarchyLevel:
    return classification_report(em, eps).level
