"""Exact small-register statevector simulation.

Registers are single qubits identified by name.  Amplitude indices are
big-endian in declaration order, so ``registers=("S_A", "L_A")`` puts
``S_A`` on the most significant bit and ``|10>`` means S_A=1, L_A=0.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import sqrt
from typing import Hashable, Iterable, Sequence

import numpy as np

NORM_TOL = 1e-12
ORTHO_TOL = 1e-10
UNITARY_TOL = 1e-10
ZERO_PROB = 1e-12


class SimulationError(ValueError):
    """Raised for malformed states, unitaries, bases or register lists."""


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=complex)
    if not np.all(np.isfinite(arr)):
        raise SimulationError("amplitudes must be finite")
    arr.setflags(write=False)
    return arr


def _num_qubits(dim: int) -> int:
    n = dim.bit_length() - 1
    if dim < 1 or (1 << n) != dim:
        raise SimulationError(f"dimension {dim} is not a power of two")
    return n


@dataclass(frozen=True, eq=False)
class StateVector:
    registers: tuple[str, ...]
    amps: np.ndarray

    def __post_init__(self):
        regs = tuple(self.registers)
        if len(set(regs)) != len(regs):
            raise SimulationError(f"duplicate register names in {regs}")
        amps = _frozen(self.amps)
        if amps.shape != (2 ** len(regs),):
            raise SimulationError(
                f"expected {2 ** len(regs)} amplitudes for {len(regs)} registers, got {amps.shape}")
        object.__setattr__(self, "registers", regs)
        object.__setattr__(self, "amps", amps)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def index(self, register: str) -> int:
        try:
            return self.registers.index(register)
        except ValueError:
            raise SimulationError(f"unknown register {register!r}") from None

    def tensor(self, other: "StateVector") -> "StateVector":
        return StateVector(self.registers + other.registers, np.kron(self.amps, other.amps))

    def reorder(self, registers: Sequence[str]) -> "StateVector":
        """Same state with registers permuted into ``registers`` order."""
        if sorted(registers) != sorted(self.registers):
            raise SimulationError(f"{list(registers)} is not a permutation of {list(self.registers)}")
        n = len(self.registers)
        t = self.amps.reshape((2,) * n) if n else self.amps
        axes = [self.index(r) for r in registers]
        return StateVector(tuple(registers), np.transpose(t, axes).reshape(-1))

    def allclose(self, other: "StateVector", atol: float = 1e-12) -> bool:
        if self.registers != other.registers:
            other = other.reorder(self.registers)
        return bool(np.allclose(self.amps, other.amps, rtol=0, atol=atol))

    def __repr__(self):
        terms = []
        n = len(self.registers)
        for i, a in enumerate(self.amps):
            if abs(a) > 1e-12:
                terms.append(f"({a.real:+.4f}{a.imag:+.4f}j)|{i:0{n}b}>")
        return f"StateVector({' '.join(self.registers)}: {' '.join(terms) or '0'})"


def make_state(registers: Sequence[str], amplitudes: Iterable[complex]) -> StateVector:
    """Normalized state over ``registers`` from (unnormalized) amplitudes."""
    amps = np.asarray(list(amplitudes), dtype=complex)
    if amps.shape != (2 ** len(registers),):
        raise SimulationError(
            f"amplitude list has length {amps.size}, expected {2 ** len(registers)}")
    norm = np.linalg.norm(amps)
    if not np.isfinite(norm) or norm == 0:
        raise SimulationError("cannot normalize a zero (or non-finite) vector")
    return StateVector(tuple(registers), amps / norm)


def basis_state(registers: Sequence[str], bits: str | Sequence[int]) -> StateVector:
    bits = [int(b) for b in bits]
    if len(bits) != len(registers):
        raise SimulationError("one bit per register required")
    amps = np.zeros(2 ** len(registers), dtype=complex)
    amps[int("".join(map(str, bits)) or "0", 2)] = 1
    return StateVector(tuple(registers), amps)


@dataclass(frozen=True, eq=False)
class Unitary:
    matrix: np.ndarray
    name: str = ""

    def __post_init__(self):
        m = _frozen(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise SimulationError(f"unitary must be square, got shape {m.shape}")
        _num_qubits(m.shape[0])
        dev = np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0])))
        if dev > UNITARY_TOL:
            raise SimulationError(f"matrix is not unitary (max |U^dag U - I| = {dev:.3g})")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def arity(self) -> int:
        return _num_qubits(self.dim)

    @property
    def dagger(self) -> "Unitary":
        return Unitary(self.matrix.conj().T, f"{self.name}^dag" if self.name else "")

    def __matmul__(self, other: "Unitary") -> "Unitary":
        return Unitary(self.matrix @ other.matrix)


def identity(arity: int) -> Unitary:
    return Unitary(np.eye(2 ** arity), "I")


CNOT = Unitary(np.array([[1, 0, 0, 0],
                         [0, 1, 0, 0],
                         [0, 0, 0, 1],
                         [0, 0, 1, 0]]), "CNOT")


def _move_to_front(state: StateVector, targets: Sequence[str]) -> tuple[np.ndarray, list[int]]:
    if len(set(targets)) != len(targets):
        raise SimulationError(f"target registers must be distinct: {list(targets)}")
    n = len(state.registers)
    idx = [state.index(t) for t in targets]
    rest = [i for i in range(n) if i not in idx]
    perm = idx + rest
    t = state.amps.reshape((2,) * n) if n else state.amps
    return np.transpose(t, perm), perm


def apply_unitary(state: StateVector, unitary: Unitary, targets: Sequence[str]) -> StateVector:
    """Apply ``unitary`` to ``targets`` (in that order) and identity elsewhere."""
    if unitary.arity != len(targets):
        raise SimulationError(
            f"unitary acts on {unitary.arity} registers but {len(targets)} targets given")
    t, perm = _move_to_front(state, targets)
    k = len(targets)
    flat = t.reshape(2 ** k, -1)
    out = (unitary.matrix @ flat).reshape(t.shape)
    out = np.transpose(out, np.argsort(perm))
    return StateVector(state.registers, out.reshape(-1))


@dataclass(frozen=True, eq=False)
class OrthonormalBasis:
    """Complete orthonormal basis; ``vectors[k]`` has outcome ``labels[k]``."""

    vectors: np.ndarray
    labels: tuple[Hashable, ...]
    name: str = ""

    def __post_init__(self):
        v = _frozen(self.vectors)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise SimulationError(f"basis needs dim vectors of length dim, got shape {v.shape}")
        _num_qubits(v.shape[1])
        labels = tuple(self.labels)
        if len(labels) != v.shape[0] or len(set(labels)) != len(labels):
            raise SimulationError("need one distinct label per basis vector")
        _check_orthonormal(v)
        object.__setattr__(self, "vectors", v)
        object.__setattr__(self, "labels", labels)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @property
    def arity(self) -> int:
        return _num_qubits(self.dim)

    def vector(self, label) -> np.ndarray:
        return self.vectors[self.labels.index(label)]

    def relabel(self, labels: Sequence[Hashable], name: str = "") -> "OrthonormalBasis":
        return OrthonormalBasis(self.vectors, tuple(labels), name)


def _check_orthonormal(vectors: np.ndarray) -> None:
    gram = vectors.conj() @ vectors.T
    diag = np.abs(np.diag(gram) - 1)
    if diag.size and diag.max() > NORM_TOL:
        raise SimulationError(f"basis vector not unit-norm (deviation {diag.max():.3g})")
    off = np.abs(gram - np.diag(np.diag(gram)))
    if off.size and off.max() > ORTHO_TOL:
        raise SimulationError(f"basis vectors not orthogonal (max overlap {off.max():.3g})")


_S2 = 1 / sqrt(2)
KET0 = np.array([1, 0], dtype=complex)
KET1 = np.array([0, 1], dtype=complex)
PLUS = np.array([_S2, _S2], dtype=complex)
MINUS = np.array([_S2, -_S2], dtype=complex)
PLUS_I = np.array([_S2, 1j * _S2], dtype=complex)
MINUS_I = np.array([_S2, -1j * _S2], dtype=complex)

# +1 eigenvector -> outcome 0, -1 eigenvector -> outcome 1
Z_BASIS = OrthonormalBasis(np.array([KET0, KET1]), (0, 1), "Z")
X_BASIS = OrthonormalBasis(np.array([PLUS, MINUS]), (0, 1), "X")
Y_BASIS = OrthonormalBasis(np.array([PLUS_I, MINUS_I]), (0, 1), "Y")
NAMED_BASES = {"Z": Z_BASIS, "X": X_BASIS, "Y": Y_BASIS}


def computational_basis(arity: int) -> OrthonormalBasis:
    return OrthonormalBasis(np.eye(2 ** arity), tuple(range(2 ** arity)), "Z" if arity == 1 else "")


def friend_unitary(basis: OrthonormalBasis) -> Unitary:
    """Unitary model of a friend measuring ``basis`` into a one-qubit memory.

    Acts on (system, memory) as ``|b_k>|m> -> |b_k>|m xor k>``, where k is
    the position of the vector in ``basis``.
    """
    if basis.arity != 1:
        raise SimulationError("friend measurements act on a single qubit")
    proj = [np.outer(b, b.conj()) for b in basis.vectors]
    flip = [np.eye(2), np.array([[0, 1], [1, 0]])]
    m = sum(np.kron(p, f) for p, f in zip(proj, flip))
    return Unitary(m, f"U[{basis.name}]" if basis.name else "U")


def measure_joint(state: StateVector,
                  measurements: Sequence[tuple[OrthonormalBasis, Sequence[str]]]) -> dict[tuple, float]:
    """Born distribution for several commuting measurements on disjoint registers.

    Keys are tuples of outcome labels, one per measurement, in the order given.
    """
    targets = [r for _, regs in measurements for r in regs]
    for basis, regs in measurements:
        if basis.dim != 2 ** len(regs):
            raise SimulationError(
                f"basis of dimension {basis.dim} does not fit {len(regs)} target registers")
    t, _ = _move_to_front(state, targets)
    dims = [b.dim for b, _ in measurements]
    t = t.reshape(dims + [-1])
    for axis, (basis, _) in enumerate(measurements):
        t = np.moveaxis(np.tensordot(basis.vectors.conj(), t, axes=([1], [axis])), 0, axis)
    probs = np.sum(np.abs(t) ** 2, axis=-1)
    out = {}
    for idx in np.ndindex(*dims):
        key = tuple(measurements[i][0].labels[k] for i, k in enumerate(idx))
        out[key] = float(probs[idx])
    return out


def measure_distribution(state: StateVector, basis: OrthonormalBasis,
                         targets: Sequence[str]) -> dict[Hashable, float]:
    joint = measure_joint(state, [(basis, targets)])
    return {k[0]: p for k, p in joint.items()}


def project(state: StateVector, vector, targets: Sequence[str]):
    """Probability of projecting ``targets`` onto ``vector`` and the post-state.

    The post-state is ``None`` when the probability is below 1e-12.
    """
    v = np.asarray(vector, dtype=complex)
    if v.shape != (2 ** len(targets),):
        raise SimulationError(
            f"vector of length {v.size} does not fit {len(targets)} target registers")
    if abs(np.linalg.norm(v) - 1) > NORM_TOL:
        raise SimulationError("projection vector must be unit-norm")
    t, perm = _move_to_front(state, targets)
    flat = t.reshape(v.size, -1)
    overlap = v.conj() @ flat
    prob = float(np.sum(np.abs(overlap) ** 2))
    if prob <= ZERO_PROB:
        return prob, None
    post = np.outer(v, overlap).reshape(t.shape) / sqrt(prob)
    post = np.transpose(post, np.argsort(perm)).reshape(-1)
    return prob, StateVector(state.registers, post)


def complete_basis(partial: Sequence, labels: Sequence[Hashable] | None = None,
                   name: str = "") -> OrthonormalBasis:
    """Extend orthonormal ``partial`` vectors to a full basis.

    Canonical vectors e_0, e_1, ... are orthogonalized in order against the
    running set; those leaving a residual are kept.  Added vectors receive
    the smallest integer labels not already in use.
    """
    vecs = [np.asarray(v, dtype=complex) for v in partial]
    if not vecs:
        raise SimulationError("need at least one vector to complete")
    dim = vecs[0].size
    _num_qubits(dim)
    if any(v.shape != (dim,) for v in vecs):
        raise SimulationError("partial basis vectors differ in length")
    if len(vecs) > dim:
        raise SimulationError("more vectors than the dimension")
    _check_orthonormal(np.array(vecs))
    labels = list(range(len(vecs)) if labels is None else labels)
    if len(labels) != len(vecs):
        raise SimulationError("one label per partial vector required")
    basis = list(vecs)
    for k in range(dim):
        if len(basis) == dim:
            break
        e = np.zeros(dim, dtype=complex)
        e[k] = 1
        for b in basis:
            e = e - (b.conj() @ e) * b
        for b in basis:  # second pass keeps round-off well below 1e-12
            e = e - (b.conj() @ e) * b
        nrm = np.linalg.norm(e)
        if nrm > 1e-8:
            basis.append(e / nrm)
    used = set(labels)
    fresh = (i for i in range(10 * dim) if i not in used)
    labels += [next(fresh) for _ in range(dim - len(vecs))]
    return OrthonormalBasis(np.array(basis), tuple(labels), name)


__all__ = [
    "SimulationError", "StateVector", "Unitary", "OrthonormalBasis", "make_state", "basis_state",
    "apply_unitary", "friend_unitary", "measure_joint", "measure_distribution", "project",
    "complete_basis", "computational_basis", "identity", "CNOT", "Z_BASIS", "X_BASIS", "Y_BASIS",
    "NAMED_BASES", "KET0", "KET1", "PLUS", "MINUS", "PLUS_I", "MINUS_I",
]
