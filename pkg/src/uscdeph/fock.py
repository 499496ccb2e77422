"""Truncated-Fock operator construction and dense Hermitian linear algebra.

Conventions used throughout the library:

- tensor-product ordering is (matter x field): the qubit (or matter mode)
  is the slow index, the photon mode the fast one;
- qubit basis is ordered (|e>, |g>) so that sigma_z = diag(+1, -1);
- energies are expressed in units of the cavity frequency omega_c.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Tuple, Union

import numpy as np

from .exceptions import ContractViolationError, InvalidCutoffError

HERMITICITY_ATOL = 1e-12


@dataclass(frozen=True)
class TwoLevel:
    """A two-dimensional (qubit) factor."""

    @property
    def dim(self) -> int:
        return 2


@dataclass(frozen=True)
class Boson(object):
    """A bosonic mode truncated to Fock states 0..cutoff-1."""

    cutoff: int

    def __post_init__(self):
        if self.cutoff < 2:
            raise InvalidCutoffError(f"boson cutoff must be >= 2, got {self.cutoff}")

    @property
    def dim(self) -> int:
        return self.cutoff


Factor = Union[TwoLevel, Boson]


@dataclass(frozen=True)
class SpaceDescriptor:
    """Ordered tensor product of TwoLevel / Boson factors."""

    factors: Tuple[Factor, ...]

    @property
    def dim(self) -> int:
        d = 1
        for f in self.factors:
            d *= f.dim
        return d

    def __mul__(self, other: "SpaceDescriptor") -> "SpaceDescriptor":
        return SpaceDescriptor(self.factors + other.factors)


def qubit_space() -> SpaceDescriptor:
    return SpaceDescriptor((TwoLevel(),))


def boson_space(cutoff: int) -> SpaceDescriptor:
    return SpaceDescriptor((Boson(cutoff),))


@dataclass(frozen=True)
class Operator:
    """Dense complex operator attached to a SpaceDescriptor.

    `hermitian` is a promise checked by the spectral routines, not a
    property inferred from the matrix.
    """

    space: SpaceDescriptor
    matrix: np.ndarray
    hermitian: bool = False

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ContractViolationError(f"operator matrix must be square, got {m.shape}")
        if m.shape[0] != self.space.dim:
            raise ContractViolationError(
                f"matrix dimension {m.shape[0]} does not match space dimension {self.space.dim}"
            )
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.space.dim

    def dagger(self) -> "Operator":
        return Operator(self.space, self.matrix.conj().T, self.hermitian)

    def __matmul__(self, other: "Operator") -> "Operator":
        _require_same_space(self, other)
        return Operator(self.space, self.matrix @ other.matrix)

    def __add__(self, other: "Operator") -> "Operator":
        _require_same_space(self, other)
        return Operator(
            self.space, self.matrix + other.matrix, self.hermitian and other.hermitian
        )

    def __sub__(self, other: "Operator") -> "Operator":
        _require_same_space(self, other)
        return Operator(
            self.space, self.matrix - other.matrix, self.hermitian and other.hermitian
        )

    def __mul__(self, scalar: complex) -> "Operator":
        herm = self.hermitian and complex(scalar).imag == 0.0
        return Operator(self.space, self.matrix * scalar, herm)

    __rmul__ = __mul__

    def hermiticity_defect(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))


def _require_same_space(a: Operator, b: Operator) -> None:
    if a.space != b.space:
        raise ContractViolationError("operators live on different spaces")


def _check_hermitian(op: Operator, what: str) -> None:
    if not op.hermitian:
        raise ContractViolationError(f"{what} must be Hermitian-flagged")
    defect = op.hermiticity_defect()
    if defect >= HERMITICITY_ATOL:
        raise ContractViolationError(
            f"{what} flagged Hermitian but max|A - A^dag| = {defect:.3e}"
        )


def identity(space: SpaceDescriptor) -> Operator:
    return Operator(space, np.eye(space.dim, dtype=complex), hermitian=True)


def annihilation(cutoff: int) -> Operator:
    """Lowering operator on a truncated Fock space: <n-1|a|n> = sqrt(n)."""
    if cutoff < 2:
        raise InvalidCutoffError(f"annihilation requires cutoff >= 2, got {cutoff}")
    m = np.diag(np.sqrt(np.arange(1, cutoff, dtype=float)), k=1).astype(complex)
    return Operator(boson_space(cutoff), m)


def number(cutoff: int) -> Operator:
    m = np.diag(np.arange(cutoff, dtype=float)).astype(complex)
    return Operator(boson_space(cutoff), m, hermitian=True)


_PAULI = {
    "x": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    "z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}


def pauli(axis: str) -> Operator:
    """Pauli matrix in the (|e>, |g>) basis: sigma_z|e> = +|e>."""
    try:
        m = _PAULI[axis]
    except KeyError:
        raise ContractViolationError(f"unknown Pauli axis {axis!r}") from None
    return Operator(qubit_space(), m.copy(), hermitian=True)


def tensor(a: Operator, b: Operator) -> Operator:
    """Kronecker product; the left factor is the slow (matter) index."""
    return Operator(
        a.space * b.space, np.kron(a.matrix, b.matrix), a.hermitian and b.hermitian
    )


@dataclass(frozen=True)
class Spectrum:
    """Eigendecomposition of a Hermitian operator, eigenvalues ascending.

    Eigenvector phases are fixed so the largest-magnitude component of
    each column is real positive (first such index on ties).
    """

    values: np.ndarray
    vectors: np.ndarray
    space: SpaceDescriptor

    def excitations(self) -> np.ndarray:
        """Eigenvalues measured from the ground state."""
        return self.values - self.values[0]


def _fix_phases(vectors: np.ndarray) -> np.ndarray:
    out = np.array(vectors, dtype=complex)
    for k in range(out.shape[1]):
        col = out[:, k]
        idx = int(np.argmax(np.abs(col)))
        pivot = col[idx]
        if np.abs(pivot) > 0:
            out[:, k] = col * (np.abs(pivot) / pivot)
    return out


def hermitian_eig(op: Operator) -> Spectrum:
    """Eigendecomposition with the repo-wide phase convention."""
    _check_hermitian(op, "hermitian_eig input")
    values, vectors = np.linalg.eigh(op.matrix)
    vectors = _fix_phases(vectors)
    vectors.setflags(write=False)
    values.setflags(write=False)
    return Spectrum(values, vectors, op.space)


def hermitian_matfunc(op: Operator, fn: Callable[[np.ndarray], np.ndarray]) -> Operator:
    """Apply a scalar function to a Hermitian operator by spectral calculus."""
    _check_hermitian(op, "hermitian_matfunc input")
    values, vectors = np.linalg.eigh(op.matrix)
    fvals = np.asarray(fn(values))
    m = (vectors * fvals) @ vectors.conj().T
    herm = bool(np.all(np.isreal(fvals)))
    if herm:
        m = 0.5 * (m + m.conj().T)
    return Operator(op.space, m, hermitian=herm)


def expm_hermitian_generator(generator: Operator, scale: float = 1.0) -> Operator:
    """exp(-i * scale * A) for Hermitian A, via eigendecomposition."""
    _check_hermitian(generator, "expm generator")
    values, vectors = np.linalg.eigh(generator.matrix)
    phases = np.exp(-1j * scale * values)
    m = (vectors * phases) @ vectors.conj().T
    return Operator(generator.space, m)


def relative_drift(a: np.ndarray, b: np.ndarray) -> float:
    """Max relative difference between two eigenvalue sets (floor 1 on scale)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    scale = np.maximum(np.maximum(np.abs(a), np.abs(b)), 1.0)
    return float(np.max(np.abs(a - b) / scale))
