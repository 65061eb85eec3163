"""Qubit channels: Pauli, Kraus and depolarizing representations."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import CPViolation, NotAPauliChannel, OutOfRange
from .qubit import DERIVED_TOL, I2, PAULIS, STRUCT_TOL, DensityMatrix, PauliTransferMatrix, _frozen, hermitian_eigh

KRAUS_TOL = 1e-10
_PAULI_VEC = np.stack(PAULIS).reshape(4, 4).T


@dataclass(frozen=True, eq=False)
class PauliChannel:
    """rho -> p0 rho + px X rho X + py Y rho Y + pz Z rho Z."""

    p: np.ndarray

    def __post_init__(self):
        p = _frozen(self.p, dtype=float)
        if p.shape != (4,):
            raise ValueError(f"Pauli probability vector needs 4 entries, got {p.shape}")
        if np.any(p < -STRUCT_TOL) or abs(p.sum() - 1) > STRUCT_TOL:
            raise ValueError(f"not a probability vector: {p.tolist()}")
        object.__setattr__(self, "p", p)

    @classmethod
    def identity(cls) -> PauliChannel:
        return cls(np.array([1.0, 0.0, 0.0, 0.0]))

    p0 = property(lambda self: float(self.p[0]))
    px = property(lambda self: float(self.p[1]))
    py = property(lambda self: float(self.p[2]))
    pz = property(lambda self: float(self.p[3]))

    def kraus(self) -> np.ndarray:
        return np.sqrt(np.clip(self.p, 0, None))[:, None, None] * np.stack(PAULIS)

    def __repr__(self):
        return f"PauliChannel(p={self.p.tolist()})"


@dataclass(frozen=True, eq=False)
class KrausChannel:
    """rho -> sum_k K rho K^dag, trace preserving."""

    kraus_ops: np.ndarray

    def __post_init__(self):
        ops = _frozen(self.kraus_ops)
        if ops.ndim != 3 or ops.shape[1:] != (2, 2) or ops.shape[0] == 0:
            raise ValueError(f"expected a nonempty stack of 2x2 matrices, got shape {ops.shape}")
        completeness = np.einsum("kji,kjl->il", ops.conj(), ops)
        if np.max(np.abs(completeness - I2)) > KRAUS_TOL:
            raise CPViolation("sum of K^dag K differs from the identity")
        object.__setattr__(self, "kraus_ops", ops)

    def kraus(self) -> np.ndarray:
        return self.kraus_ops

    def __len__(self):
        return self.kraus_ops.shape[0]


@dataclass(frozen=True, eq=False)
class DepolarizingChannel:
    """rho -> (1 - eta) rho + eta I/2 with 0 <= eta <= 4/3."""

    eta: float

    def __post_init__(self):
        eta = float(self.eta)
        if not (-STRUCT_TOL <= eta <= 4 / 3 + STRUCT_TOL):
            raise OutOfRange(f"eta = {eta} outside the completely positive range [0, 4/3]")
        object.__setattr__(self, "eta", eta)

    def as_pauli(self) -> PauliChannel:
        q = self.eta / 4
        return PauliChannel(np.array([1 - 3 * q, q, q, q]))

    def kraus(self) -> np.ndarray:
        return self.as_pauli().kraus()


Channel = Union[PauliChannel, KrausChannel, DepolarizingChannel]


def as_kraus(channel: Channel) -> KrausChannel:
    if isinstance(channel, KrausChannel):
        return channel
    return KrausChannel(channel.kraus())


def apply_matrix(channel: Channel, m: np.ndarray) -> np.ndarray:
    """Apply the (linear) channel to an arbitrary 2x2 matrix."""
    if isinstance(channel, DepolarizingChannel):
        return (1 - channel.eta) * m + channel.eta * np.trace(m) * I2 / 2
    if isinstance(channel, PauliChannel):
        return sum(pk * s @ m @ s for pk, s in zip(channel.p, PAULIS))
    ops = channel.kraus_ops
    return np.einsum("kij,jl,kml->im", ops, m, ops.conj())


def apply(channel: Channel, rho: DensityMatrix) -> DensityMatrix:
    out = apply_matrix(channel, rho.data)
    return DensityMatrix(0.5 * (out + out.conj().T))


def y_flip(p: float) -> PauliChannel:
    """The channel rho -> (1 - p) rho + p Y rho Y for p in [0, 1/2]."""
    if not 0 <= p <= 0.5:
        raise OutOfRange(f"y_flip requires 0 <= p <= 1/2, got {p}")
    return PauliChannel(np.array([1 - p, 0.0, p, 0.0]))


def ptm(channel: Channel) -> PauliTransferMatrix:
    if isinstance(channel, PauliChannel):
        p0, px, py, pz = channel.p
        return PauliTransferMatrix(np.diag([1.0, p0 + px - py - pz, p0 - px + py - pz, p0 - px - py + pz]))
    if isinstance(channel, DepolarizingChannel):
        c = 1 - channel.eta
        return PauliTransferMatrix(np.diag([1.0, c, c, c]))
    ops = channel.kraus_ops
    # Row-stacked superoperator sum_k K (x) conj(K), then R_ij = <vec s_i, S vec s_j> / 2.
    sup = np.einsum("kab,kcd->acbd", ops, ops.conj()).reshape(4, 4)
    R = 0.5 * (_PAULI_VEC.conj().T @ sup @ _PAULI_VEC).real
    return PauliTransferMatrix(R)


def pauli_from_ptm(R: PauliTransferMatrix | np.ndarray) -> PauliChannel:
    """Invert the PTM of a Pauli channel back to its probability vector."""
    m = R.R if isinstance(R, PauliTransferMatrix) else np.asarray(R, dtype=float)
    off = m - np.diag(np.diag(m))
    if np.max(np.abs(off)) > DERIVED_TOL or abs(m[0, 0] - 1) > DERIVED_TOL:
        raise NotAPauliChannel("PTM is not diag(1, a, b, c)")
    _, a, b, c = np.diag(m)
    p = np.array([1 + a + b + c, 1 + a - b - c, 1 - a + b - c, 1 - a - b + c]) / 4
    if np.any(p < -DERIVED_TOL):
        raise NotAPauliChannel(f"implied probabilities are negative: {p.tolist()}")
    p = np.clip(p, 0, None)
    return PauliChannel(p / p.sum())


def random_kraus_channel(rng: np.random.Generator, n_ops: int | None = None) -> KrausChannel:
    """Draw 2-4 Ginibre Kraus operators and renormalise by (sum K^dag K)^(-1/2)."""
    k = int(rng.integers(2, 5)) if n_ops is None else n_ops
    ops = rng.normal(size=(k, 2, 2)) + 1j * rng.normal(size=(k, 2, 2))
    s = np.einsum("kji,kjl->il", ops.conj(), ops)
    w, v = hermitian_eigh(s)
    inv_sqrt = v @ np.diag(np.asarray(w) ** -0.5) @ v.conj().T
    return KrausChannel(ops @ inv_sqrt)


def random_pauli_channel(rng: np.random.Generator) -> PauliChannel:
    return PauliChannel(rng.dirichlet(np.ones(4)))


def random_state(rng: np.random.Generator) -> DensityMatrix:
    """A state with Bloch vector uniform in the unit ball."""
    v = rng.normal(size=3)
    v *= rng.random() ** (1 / 3) / np.linalg.norm(v)
    return DensityMatrix.from_bloch(v)
