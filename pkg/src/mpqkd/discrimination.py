"""Minimum-error discrimination of qubit ensembles, optionally through a channel."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .channels import Channel, PauliChannel, apply, pauli_from_ptm, ptm
from .errors import ArityMismatch, UnsupportedEnsemble
from .qubit import DERIVED_TOL, I2, STRUCT_TOL, DensityMatrix, _frozen, hermitian_eigh, hermitian_eigvals, ket0, ket1, ket_minus, ket_plus, trace_norm
from .twirl import TwirlSet, default_protection, twirl

DEFAULT_GRID = (400, 800)


@dataclass(frozen=True, eq=False)
class Ensemble:
    priors: tuple[float, ...]
    states: tuple[DensityMatrix, ...]

    def __post_init__(self):
        priors = tuple(float(q) for q in self.priors)
        states = tuple(self.states)
        if not states or len(priors) != len(states):
            raise ArityMismatch("an ensemble needs one prior per state and at least one member")
        if min(priors) < 0 or abs(sum(priors) - 1) > STRUCT_TOL:
            raise ValueError(f"priors must be a probability vector, got {priors}")
        object.__setattr__(self, "priors", priors)
        object.__setattr__(self, "states", states)

    @classmethod
    def uniform(cls, states: Sequence[DensityMatrix]) -> Ensemble:
        n = len(states)
        return cls(tuple([1 / n] * n), tuple(states))

    def __len__(self):
        return len(self.states)

    def map(self, fn) -> Ensemble:
        return Ensemble(self.priors, tuple(fn(s) for s in self.states))


@dataclass(frozen=True, eq=False)
class Measurement:
    """A POVM; element i answers hypothesis i."""

    elements: tuple[np.ndarray, ...]

    def __post_init__(self):
        els = tuple(_frozen(e) for e in self.elements)
        if not els:
            raise ValueError("a measurement needs at least one element")
        for e in els:
            if e.shape != (2, 2) or np.max(np.abs(e - e.conj().T)) > STRUCT_TOL:
                raise ValueError("POVM elements must be 2x2 Hermitian")
            if hermitian_eigvals(e)[0] < -STRUCT_TOL:
                raise ValueError("POVM element is not positive semidefinite")
        if np.max(np.abs(sum(els) - I2)) > DERIVED_TOL:
            raise ValueError("POVM elements do not sum to the identity")
        object.__setattr__(self, "elements", els)

    @classmethod
    def projective(cls, kets: Sequence[Sequence[complex]]) -> Measurement:
        vs = [np.asarray(k, dtype=complex) / np.linalg.norm(k) for k in kets]
        return cls(tuple(np.outer(v, v.conj()) for v in vs))

    def __len__(self):
        return len(self.elements)


def s4() -> Ensemble:
    return Ensemble.uniform([ket0(), ket1(), ket_plus(), ket_minus()])


def s2() -> Ensemble:
    return Ensemble.uniform([ket0(), ket1()])


def s0plus() -> Ensemble:
    return Ensemble.uniform([ket0(), ket_plus()])


def m4() -> Measurement:
    """The four BB84 projectors, each weighted by 1/2 so they form a POVM."""
    vs = [np.asarray(k, dtype=complex) / np.linalg.norm(k) for k in ([1, 0], [0, 1], [1, 1], [1, -1])]
    return Measurement(tuple(0.5 * np.outer(v, v.conj()) for v in vs))


def m_z() -> Measurement:
    return Measurement.projective(([1, 0], [0, 1]))


def m_x() -> Measurement:
    return Measurement.projective(([1, 1], [1, -1]))


def m0plus() -> Measurement:
    a, b = math.pi / 8, 3 * math.pi / 8
    return Measurement.projective(([math.cos(a), -math.sin(a)], [math.cos(b), math.sin(b)]))


def guess_prob(e: Ensemble, m: Measurement) -> float:
    if len(e) != len(m):
        raise ArityMismatch(f"{len(e)} hypotheses but {len(m)} measurement outcomes")
    return float(sum(q * np.trace(mi @ rho.data).real for q, rho, mi in zip(e.priors, e.states, m.elements)))


def helstrom(q0: float, rho0: DensityMatrix, q1: float, rho1: DensityMatrix) -> tuple[float, Measurement]:
    """Optimal two-state success probability and a measurement attaining it."""
    if abs(q0 + q1 - 1) > STRUCT_TOL:
        raise ValueError("priors must sum to 1")
    gamma = q0 * rho0.data - q1 * rho1.data
    if np.max(np.abs(gamma)) <= STRUCT_TOL:
        return 0.5, m_z()
    (lo, hi), vecs = hermitian_eigh(gamma)
    proj = np.zeros((2, 2), dtype=complex)
    for lam, v in zip((lo, hi), vecs.T):
        if lam > 0:
            proj += np.outer(v, v.conj())
    p = 0.5 * (q0 + q1 + trace_norm(gamma))
    return p, Measurement((proj, I2 - proj))


def protected_channel(c: Channel, twirl_set: TwirlSet | None = None) -> Channel:
    """The twirled channel; Pauli inputs are reduced back to a Pauli channel."""
    tw = twirl(c, twirl_set or default_protection())
    if isinstance(c, PauliChannel):
        return pauli_from_ptm(ptm(tw))
    return tw


def transmit(e: Ensemble, c: Channel, protected: bool = False, twirl_set: TwirlSet | None = None) -> Ensemble:
    channel = protected_channel(c, twirl_set) if protected else c
    return e.map(lambda rho: apply(channel, rho))


def guess_prob_through(e: Ensemble, c: Channel, protected: bool, m: Measurement, twirl_set: TwirlSet | None = None) -> float:
    if len(e) != len(m):
        raise ArityMismatch(f"{len(e)} hypotheses but {len(m)} measurement outcomes")
    return guess_prob(transmit(e, c, protected, twirl_set), m)


def helstrom_through(e: Ensemble, c: Channel, protected: bool, twirl_set: TwirlSet | None = None) -> tuple[float, Measurement]:
    if len(e) != 2:
        raise UnsupportedEnsemble("Helstrom bound applies to two-member ensembles")
    out = transmit(e, c, protected, twirl_set)
    return helstrom(out.priors[0], out.states[0], out.priors[1], out.states[1])


def brute_force_optimal(
    e: Ensemble,
    c: Channel,
    protected: bool,
    grid: tuple[int, int] = DEFAULT_GRID,
    twirl_set: TwirlSet | None = None,
) -> float:
    """Grid search over projective measurements {P_n, I - P_n}.

    P_n projects onto the pure state with Bloch direction n(theta, phi).
    Each candidate is scored with the Born rule on the transmitted Bloch
    vectors, without reference to the Helstrom operator.
    """
    if len(e) != 2:
        raise UnsupportedEnsemble("the oracle only handles two-member ensembles")
    n_theta, n_phi = grid
    if n_theta * n_phi < 10_000:
        raise ValueError("oracle grid needs at least 1e4 points")
    out = transmit(e, c, protected, twirl_set)
    r0, r1 = (s.bloch.r for s in out.states)
    q0, q1 = out.priors
    theta = np.linspace(0.0, math.pi, n_theta)
    phi = np.linspace(0.0, 2 * math.pi, n_phi, endpoint=False)
    st = np.sin(theta)[:, None]
    n = np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)[:, None] * np.ones(n_phi)])
    score = q0 * 0.5 * (1 + np.tensordot(r0, n, 1)) + q1 * 0.5 * (1 - np.tensordot(r1, n, 1))
    return float(score.ravel()[np.argmax(score)])


def grid_slack(grid: tuple[int, int] = DEFAULT_GRID) -> float:
    """Upper bound on how far the grid maximum can sit below the true optimum.

    The score is (const + n.v)/2 with |v| <= 1; an angular miss of delta
    costs at most (1 - cos delta)/2 <= delta^2/4.
    """
    n_theta, n_phi = grid
    delta = math.hypot(math.pi / (n_theta - 1), 2 * math.pi / n_phi)
    return delta**2 / 4


def s2_guess_unprotected(p: float) -> float:
    return 0.5 + (1 - 2 * p) / 2


def s2_guess_protected(p: float) -> float:
    return 0.5 + (3 - 4 * p) / 6


def s0plus_guess_unprotected(p: float) -> float:
    return 0.5 + (1 - 2 * p) / (2 * math.sqrt(2))


def s0plus_guess_protected(p: float) -> float:
    return 0.5 + (3 - 4 * p) / (6 * math.sqrt(2))
