"""Channel twirling over a finite set of unitaries.

The supermap sends a channel N to rho -> mean_j V_j^dag N(V_j rho V_j^dag) V_j.
Averaged over the 12-element qubit 2-design this yields a depolarizing
channel for every input; for Pauli inputs one element from each of the three
cosets {U1..U4}, {U5..U8}, {U9..U12} already suffices.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .channels import Channel, DepolarizingChannel, KrausChannel, PauliChannel, as_kraus, ptm
from .errors import NotDepolarizing
from .qubit import X, Y, Z, I2, Unitary2

DEFAULT_FIT_TOL = 1e-9

_h = 0.5
# Entries exactly as tabulated for U5..U12 (rows first).
_DESIGN_ENTRIES = [
    I2,
    1j * X,
    1j * Y,
    1j * Z,
    _h * np.array([[1 - 1j, -1 - 1j], [1 - 1j, 1 + 1j]]),
    _h * np.array([[1 + 1j, 1 - 1j], [-1 - 1j, 1 - 1j]]),
    _h * np.array([[1 + 1j, -1 + 1j], [1 + 1j, 1 - 1j]]),
    _h * np.array([[1 - 1j, 1 + 1j], [-1 + 1j, 1 + 1j]]),
    _h * np.array([[-1 - 1j, -1 - 1j], [1 - 1j, -1 + 1j]]),
    _h * np.array([[-1 + 1j, 1 - 1j], [-1 - 1j, -1 - 1j]]),
    _h * np.array([[-1 + 1j, -1 + 1j], [1 + 1j, -1 - 1j]]),
    _h * np.array([[-1 - 1j, 1 + 1j], [-1 + 1j, -1 + 1j]]),
]

DESIGN: tuple[Unitary2, ...] = tuple(Unitary2(m) for m in _DESIGN_ENTRIES)
COSETS = ((1, 2, 3, 4), (5, 6, 7, 8), (9, 10, 11, 12))

Kind = Literal["full-design", "three-element", "custom"]


@dataclass(frozen=True, eq=False)
class TwirlSet:
    """Ordered unitaries applied uniformly at random before and after a channel.

    ``labels`` records the 1-based design indices for sets built from the
    standard design; it is ``None`` for custom sets.
    """

    unitaries: tuple[Unitary2, ...]
    kind: Kind = "custom"
    labels: tuple[int, ...] | None = None

    def __post_init__(self):
        us = tuple(u if isinstance(u, Unitary2) else Unitary2(u) for u in self.unitaries)
        if not us:
            raise ValueError("a twirl set needs at least one unitary")
        object.__setattr__(self, "unitaries", us)
        if self.kind == "full-design":
            if len(us) != 12 or not all(np.array_equal(u.data, d.data) for u, d in zip(us, DESIGN)):
                raise ValueError("full-design set must be U1..U12 in order")
        elif self.kind == "three-element":
            if len(us) != 3:
                raise ValueError("three-element set must have exactly 3 unitaries")
            for u, coset in zip(us, COSETS):
                if not any(np.array_equal(u.data, DESIGN[i - 1].data) for i in coset):
                    raise ValueError(f"element not drawn from U{coset[0]}..U{coset[-1]}")

    def __len__(self):
        return len(self.unitaries)

    def __getitem__(self, j) -> Unitary2:
        return self.unitaries[j]

    def matrices(self) -> np.ndarray:
        return np.stack([u.data for u in self.unitaries])

    @property
    def name(self) -> str:
        if self.labels is None:
            return f"custom[{len(self)}]"
        return "{" + ",".join(f"U{i}" for i in self.labels) + "}"

    @classmethod
    def from_labels(cls, labels: Sequence[int]) -> TwirlSet:
        """Build a set from 1-based indices into the standard design."""
        labels = tuple(int(i) for i in labels)
        if any(not 1 <= i <= 12 for i in labels):
            raise ValueError(f"design indices must lie in 1..12, got {labels}")
        us = tuple(DESIGN[i - 1] for i in labels)
        if labels == tuple(range(1, 13)):
            kind = "full-design"
        elif len(labels) == 3 and all(i in c for i, c in zip(labels, COSETS)):
            kind = "three-element"
        else:
            kind = "custom"
        return cls(us, kind, labels)


def standard_2design() -> TwirlSet:
    return TwirlSet(DESIGN, "full-design", tuple(range(1, 13)))


def three_element_sets() -> list[TwirlSet]:
    """All 64 sets {U, V, W}, one per coset, in lexicographic index order."""
    return [TwirlSet.from_labels(t) for t in itertools.product(*COSETS)]


def default_protection() -> TwirlSet:
    return TwirlSet.from_labels((1, 5, 9))


def twirl(channel: Channel, twirl_set: TwirlSet) -> KrausChannel:
    """Twirled channel in Kraus form, with operators V_j^dag K V_j / sqrt(|V|)."""
    ks = as_kraus(channel).kraus_ops
    vs = twirl_set.matrices()
    ops = np.einsum("jba,kbc,jcd->jkad", vs.conj(), ks, vs).reshape(-1, 2, 2)
    return KrausChannel(ops / np.sqrt(len(vs)))


def isotropy_deviation(channel: Channel) -> tuple[float, float]:
    """Return ``(c, deviation)`` where c is the mean Bloch contraction."""
    R = ptm(channel).R
    c = float(np.trace(R[1:, 1:]) / 3)
    target = np.diag([1.0, c, c, c])
    return c, float(np.max(np.abs(R - target)))


def depolarizing_fit(channel: Channel, tol: float = DEFAULT_FIT_TOL) -> float:
    """Return eta if the channel is depolarizing within ``tol``.

    Raises:
        NotDepolarizing: carrying the observed deviation.
    """
    c, dev = isotropy_deviation(channel)
    if dev > tol:
        raise NotDepolarizing(dev, tol)
    return 1.0 - c


def twirl_to_depolarizing(channel: Channel, twirl_set: TwirlSet, tol: float = DEFAULT_FIT_TOL) -> DepolarizingChannel:
    eta = depolarizing_fit(twirl(channel, twirl_set), tol)
    return DepolarizingChannel(min(max(eta, 0.0), 4 / 3))


def expected_eta(channel: PauliChannel) -> float:
    return 4 / 3 * (1 - channel.p0)
