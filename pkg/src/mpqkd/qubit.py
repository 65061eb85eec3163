"""Single-qubit linear algebra.

States, unitaries and Bloch vectors are thin immutable wrappers around 2x2
(or length-3) numpy arrays. Spectra of 2x2 Hermitian matrices are computed
with the closed-form quadratic rather than a general eigensolver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidBlochVector, InvalidStateError, NotUnitaryError

STRUCT_TOL = 1e-12
DERIVED_TOL = 1e-10

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (I2, X, Y, Z)

for _m in PAULIS:
    _m.flags.writeable = False


def _frozen(a, dtype=complex) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.flags.writeable = False
    return arr


def hermitian_eigvals(m: np.ndarray) -> tuple[float, float]:
    """Eigenvalues (ascending) of a 2x2 Hermitian matrix via the quadratic formula."""
    a = m[0, 0].real
    d = m[1, 1].real
    b = m[0, 1]
    mean = 0.5 * (a + d)
    rad = math.hypot(0.5 * (a - d), abs(b))
    return mean - rad, mean + rad


def hermitian_eigh(m: np.ndarray) -> tuple[tuple[float, float], np.ndarray]:
    """Closed-form eigendecomposition of a 2x2 Hermitian matrix.

    Returns ``(eigvals, vecs)`` with eigenvalues ascending and the matching
    normalised eigenvectors as the columns of ``vecs``. Uses the Bloch form
    m = c I + v . sigma, whose eigenvectors are the pure states along +-v.
    """
    lo, hi = hermitian_eigvals(m)
    v = np.array([m[0, 1].real, -m[0, 1].imag, 0.5 * (m[0, 0].real - m[1, 1].real)])
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        return (lo, hi), np.eye(2, dtype=complex)
    n = v / norm
    up = _ket_along(n)
    down = _ket_along(-n)
    return (lo, hi), np.column_stack([down, up])


def _ket_along(n: np.ndarray) -> np.ndarray:
    # +1 eigenvector of n . sigma; pick the branch away from the pole for stability.
    nx, ny, nz = (float(c) for c in n)
    k = np.array([1 + nz, nx + 1j * ny]) if nz >= 0 else np.array([nx - 1j * ny, 1 - nz])
    return k / np.linalg.norm(k)


@dataclass(frozen=True, eq=False)
class BlochVector:
    r: np.ndarray

    def __post_init__(self):
        r = _frozen(self.r, dtype=float)
        if r.shape != (3,):
            raise InvalidBlochVector(f"Bloch vector must have 3 components, got shape {r.shape}")
        if not np.all(np.isfinite(r)) or np.linalg.norm(r) > 1 + STRUCT_TOL:
            raise InvalidBlochVector(f"|r| = {np.linalg.norm(r):.15g} exceeds 1")
        object.__setattr__(self, "r", r)

    def to_state(self) -> DensityMatrix:
        x, y, z = self.r
        return DensityMatrix(0.5 * (I2 + x * X + y * Y + z * Z))

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.r))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A 2x2 Hermitian, unit-trace, positive semidefinite operator."""

    data: np.ndarray

    def __post_init__(self):
        m = _frozen(self.data)
        if m.shape != (2, 2):
            raise InvalidStateError(f"expected a 2x2 matrix, got shape {m.shape}")
        if np.max(np.abs(m - m.conj().T)) > STRUCT_TOL:
            raise InvalidStateError("matrix is not Hermitian")
        if abs(np.trace(m) - 1) > STRUCT_TOL:
            raise InvalidStateError(f"trace {np.trace(m).real:.15g} != 1")
        if hermitian_eigvals(m)[0] < -STRUCT_TOL:
            raise InvalidStateError("matrix has a negative eigenvalue")
        object.__setattr__(self, "data", m)

    @classmethod
    def from_ket(cls, ket: Sequence[complex]) -> DensityMatrix:
        v = np.asarray(ket, dtype=complex)
        v = v / np.linalg.norm(v)
        return cls(np.outer(v, v.conj()))

    @classmethod
    def from_bloch(cls, r: Sequence[float]) -> DensityMatrix:
        return BlochVector(np.asarray(r, dtype=float)).to_state()

    @classmethod
    def maximally_mixed(cls) -> DensityMatrix:
        return cls(0.5 * I2)

    @property
    def bloch(self) -> BlochVector:
        m = self.data
        return BlochVector(np.array([2 * m[0, 1].real, -2 * m[0, 1].imag, (m[0, 0] - m[1, 1]).real]))

    def eigenvalues(self) -> tuple[float, float]:
        return hermitian_eigvals(self.data)

    def allclose(self, other: DensityMatrix, atol: float = DERIVED_TOL) -> bool:
        return bool(np.allclose(self.data, other.data, atol=atol, rtol=0))

    def __repr__(self):
        return f"DensityMatrix(bloch={np.round(self.bloch.r, 12).tolist()})"


@dataclass(frozen=True, eq=False)
class Unitary2:
    """A 2x2 unitary. The global phase is kept as given."""

    data: np.ndarray

    def __post_init__(self):
        u = _frozen(self.data)
        if u.shape != (2, 2):
            raise NotUnitaryError(f"expected a 2x2 matrix, got shape {u.shape}")
        if np.max(np.abs(u.conj().T @ u - I2)) > STRUCT_TOL:
            raise NotUnitaryError("U^dag U != I")
        object.__setattr__(self, "data", u)

    @property
    def dag(self) -> Unitary2:
        return Unitary2(self.data.conj().T)

    def __matmul__(self, other: Unitary2) -> Unitary2:
        return Unitary2(self.data @ other.data)


@dataclass(frozen=True, eq=False)
class PauliTransferMatrix:
    """Real 4x4 matrix R_ij = tr[s_i N(s_j)] / 2 in the basis (I, X, Y, Z)."""

    R: np.ndarray

    def __post_init__(self):
        r = _frozen(self.R, dtype=float)
        if r.shape != (4, 4):
            raise ValueError(f"PTM must be 4x4, got {r.shape}")
        object.__setattr__(self, "R", r)

    def is_trace_preserving(self, tol: float = STRUCT_TOL) -> bool:
        return bool(np.allclose(self.R[0], [1, 0, 0, 0], atol=tol, rtol=0))

    def act(self, r: Sequence[float]) -> np.ndarray:
        """Image of the Bloch vector ``r`` under the affine map encoded by R."""
        return (self.R @ np.concatenate([[1.0], np.asarray(r, dtype=float)]))[1:]


def conjugate(u: Unitary2, rho: DensityMatrix) -> DensityMatrix:
    """Return U rho U^dag."""
    m = u.data @ rho.data @ u.data.conj().T
    return DensityMatrix(0.5 * (m + m.conj().T))


def trace_norm(m: np.ndarray) -> float:
    """Sum of absolute eigenvalues of a 2x2 Hermitian matrix."""
    lo, hi = hermitian_eigvals(m)
    return abs(lo) + abs(hi)


def trace_distance(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    return 0.5 * trace_norm(rho.data - sigma.data)


def ket0() -> DensityMatrix:
    return DensityMatrix.from_ket([1, 0])


def ket1() -> DensityMatrix:
    return DensityMatrix.from_ket([0, 1])


def ket_plus() -> DensityMatrix:
    return DensityMatrix.from_ket([1, 1])


def ket_minus() -> DensityMatrix:
    return DensityMatrix.from_ket([1, -1])
