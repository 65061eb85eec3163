"""Entanglement-picture security analysis for Pauli channels.

A Pauli channel with probabilities (p0, px, py, pz) acting on half of
|phi1> = (|00> + |11>)/sqrt(2) gives the Bell-diagonal state with weights
(p0, pz, px, py) on (phi1, phi2, phi3, phi4). Error rates, distillability and
entanglement are all functions of those four weights.

Every "secure" / "distillable" / "entangled" predicate here is a strict
inequality; points on the boundary evaluate to False.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import Callable

import numpy as np

from .channels import Channel, PauliChannel, apply_matrix
from .discrimination import protected_channel
from .errors import InvalidParametrization, OutOfRange
from .qubit import STRUCT_TOL, _frozen
from .twirl import TwirlSet

# Guards strict comparisons against round-off at exact boundary points.
BOUNDARY_TOL = 1e-12
BISECT_TOL = 1e-9

_s = 1 / math.sqrt(2)
BELL_BASIS = np.array(
    [
        [_s, 0, 0, _s],  # phi1 = (|00> + |11>)/sqrt2
        [_s, 0, 0, -_s],  # phi2 = (|00> - |11>)/sqrt2
        [0, _s, _s, 0],  # phi3 = (|01> + |10>)/sqrt2
        [0, _s, -_s, 0],  # phi4 = (|01> - |10>)/sqrt2
    ],
    dtype=complex,
)
BELL_BASIS.flags.writeable = False


@dataclass(frozen=True, eq=False)
class BellDiagonalState:
    """Weights on (phi1, phi2, phi3, phi4)."""

    weights: np.ndarray

    def __post_init__(self):
        w = _frozen(self.weights, dtype=float)
        if w.shape != (4,) or np.any(w < -STRUCT_TOL) or abs(w.sum() - 1) > STRUCT_TOL:
            raise ValueError(f"Bell-diagonal weights must be a probability 4-vector, got {w.tolist()}")
        object.__setattr__(self, "weights", w)

    def matrix(self) -> np.ndarray:
        return np.einsum("k,ki,kj->ij", self.weights, BELL_BASIS, BELL_BASIS.conj())


@dataclass(frozen=True)
class ThresholdTable:
    """Critical QBER values for BB84-family protocols.

    ``cpp`` marks classical pre-processing; ``mp`` marks measurement
    protection. Entries without a closed form here are stored, not derived.
    """

    oneway_bb84: float = 0.11
    oneway_bb84_cpp: float = 0.124
    oneway_sixstate: float = 0.127
    oneway_sixstate_cpp: float = 0.141
    mp_oneway_bb84: float = 0.10
    mp_oneway_bb84_cpp: float = 0.112
    twoway_bb84: float = 0.20
    mp_twoway_bb84: float = 0.207
    mp_twoway_depol: float = 0.276
    ent_bb84: float = 0.25
    ent_depol: float = 1 / 3

    def items(self):
        return [(f.name, getattr(self, f.name)) for f in fields(self)]


THRESHOLDS = ThresholdTable()


# -- channels and states ------------------------------------------------------


def bb84_channel(Q: float, x: float) -> PauliChannel:
    """Symmetric BB84 channel p0 = 1 - 2Q + x, px = pz = Q - x, py = x."""
    if not (0 <= x <= Q <= 0.5):
        raise InvalidParametrization(f"need 0 <= x <= Q <= 1/2, got Q={Q}, x={x}")
    p = np.array([1 - 2 * Q + x, Q - x, x, Q - x])
    if np.any(p < 0):
        raise InvalidParametrization(f"negative channel probability for Q={Q}, x={x}")
    return PauliChannel(p)


def six_state_channel(Q: float) -> PauliChannel:
    """Depolarizing Pauli channel with QBER Q: p0 = 1 - 3Q/2, px = py = pz = Q/2."""
    if not 0 <= Q <= 2 / 3:
        raise InvalidParametrization(f"six-state QBER must lie in [0, 2/3], got {Q}")
    return PauliChannel(np.array([1 - 1.5 * Q, Q / 2, Q / 2, Q / 2]))


def shared_state(c: PauliChannel) -> BellDiagonalState:
    p0, px, py, pz = c.p
    return BellDiagonalState(np.array([p0, pz, px, py]))


def choi_state(c: Channel) -> np.ndarray:
    """(id x c)|phi1><phi1| as an explicit 4x4 matrix."""
    phi = BELL_BASIS[0]
    rho = np.outer(phi, phi.conj()).reshape(2, 2, 2, 2)
    out = np.empty_like(rho)
    for a in range(2):
        for b in range(2):
            out[a, :, b, :] = apply_matrix(c, rho[a, :, b, :])
    return out.reshape(4, 4)


def bell_weights(rho: np.ndarray) -> np.ndarray:
    """Diagonal of a two-qubit matrix in the Bell basis (phi1..phi4)."""
    return np.einsum("ki,ij,kj->k", BELL_BASIS.conj(), rho, BELL_BASIS).real


def partial_transpose(rho: np.ndarray) -> np.ndarray:
    """Transpose on the second qubit."""
    return rho.reshape(2, 2, 2, 2).transpose(0, 3, 2, 1).reshape(4, 4)


def ppt_min_eigenvalue(rho: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(partial_transpose(rho))[0])


def is_entangled(s: BellDiagonalState) -> bool:
    """A Bell-diagonal state is entangled iff its largest weight exceeds 1/2."""
    return bool(np.max(s.weights) > 0.5 + BOUNDARY_TOL)


# -- error rates ----------------------------------------------------------------


def qber(c: PauliChannel) -> float:
    return c.px + c.py


def mp_qber(c: PauliChannel) -> float:
    """Error rate after measurement protection: (2/3)(Q + pz)."""
    return 2 / 3 * (qber(c) + c.pz)


def mp_qber_advantage(c: PauliChannel) -> bool:
    return mp_qber(c) < qber(c) - BOUNDARY_TOL


def mp_oneway_relation(q_mp: float) -> float:
    """Unprotected BB84 QBER matching a protected QBER, taking x = Q^2."""
    if not 0 <= q_mp <= 2 / 3:
        raise OutOfRange(f"protected QBER must lie in [0, 2/3], got {q_mp}")
    return 1 - math.sqrt(1 - 1.5 * q_mp)


def twoway_distillable(c: PauliChannel) -> bool:
    """(p0 - pz)^2 > (p0 + pz)(px + py)."""
    p0, px, py, pz = c.p
    return bool((p0 - pz) ** 2 - (p0 + pz) * (px + py) > BOUNDARY_TOL)


def mp_twoway_threshold() -> tuple[float, float]:
    """Closed-form boundary of two-way distillability after protection.

    Returns ``(p0*, q*)`` with p0* = (5 + 3 sqrt5)/20 and q* = 2(1 - p0*)/3.
    """
    p0 = (5 + 3 * math.sqrt(5)) / 20
    return p0, 2 * (1 - p0) / 3


def binary_entropy(q: float) -> float:
    if q <= 0 or q >= 1:
        return 0.0
    return -q * math.log2(q) - (1 - q) * math.log2(1 - q)


def oneway_key_rate(Q: float) -> float:
    """Asymptotic one-way BB84 rate 1 - 2h(Q); negative above the threshold."""
    if not 0 <= Q <= 0.5:
        raise OutOfRange(f"QBER must lie in [0, 1/2], got {Q}")
    return 1 - 2 * binary_entropy(Q)


# -- threshold recomputation ------------------------------------------------------


def bisect_boundary(pred: Callable[[float], bool], lo: float, hi: float, tol: float = BISECT_TOL) -> float:
    """Locate where a monotone predicate flips from pred(lo) to not pred(lo)."""
    at_lo = pred(lo)
    if pred(hi) == at_lo:
        raise ValueError(f"predicate does not change sign on [{lo}, {hi}]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if pred(mid) == at_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def protect(c: PauliChannel, twirl_set: TwirlSet | None = None) -> PauliChannel:
    return protected_channel(c, twirl_set)


def recompute_thresholds() -> dict[str, float | None]:
    """Recompute every table entry that has a formula; None where only stored."""
    return {
        "oneway_bb84": bisect_boundary(lambda q: oneway_key_rate(q) > 0, 0.0, 0.5),
        "oneway_bb84_cpp": None,
        "oneway_sixstate": None,
        "oneway_sixstate_cpp": None,
        "mp_oneway_bb84": mp_oneway_relation(THRESHOLDS.oneway_sixstate),
        "mp_oneway_bb84_cpp": mp_oneway_relation(THRESHOLDS.oneway_sixstate_cpp),
        "twoway_bb84": bisect_boundary(lambda q: twoway_distillable(bb84_channel(q, 0.0)), 0.0, 0.5),
        "mp_twoway_bb84": bisect_boundary(lambda q: twoway_distillable(protect(bb84_channel(q, 0.0))), 0.0, 0.5),
        "mp_twoway_depol": bisect_boundary(lambda q: twoway_distillable(six_state_channel(q)), 0.0, 1 / 3),
        "ent_bb84": bisect_boundary(lambda q: is_entangled(shared_state(bb84_channel(q, 0.0))), 0.0, 0.5),
        "ent_depol": bisect_boundary(lambda q: is_entangled(shared_state(six_state_channel(q))), 0.0, 2 / 3),
    }
