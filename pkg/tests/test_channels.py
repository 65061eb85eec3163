import numpy as np
import pytest

from mpqkd.channels import (
    DepolarizingChannel,
    KrausChannel,
    PauliChannel,
    apply,
    apply_matrix,
    pauli_from_ptm,
    ptm,
    random_kraus_channel,
    random_pauli_channel,
    random_state,
    y_flip,
)
from mpqkd.errors import CPViolation, NotAPauliChannel, OutOfRange
from mpqkd.qubit import PAULIS, DensityMatrix, ket0


def ptm_oracle(channel):
    """Entry-by-entry PTM from the defining trace formula."""
    return np.array([[0.5 * np.trace(si @ apply_matrix(channel, sj)).real for sj in PAULIS] for si in PAULIS])


def test_identity_channel(rng):
    rho = random_state(rng)
    assert apply(PauliChannel.identity(), rho).allclose(rho)


def test_full_depolarization():
    assert apply(DepolarizingChannel(1.0), ket0()).allclose(DensityMatrix.maximally_mixed())


def test_half_y_flip_mixes_z_states():
    assert apply(y_flip(0.5), ket0()).allclose(DensityMatrix.maximally_mixed())


@pytest.mark.parametrize("p, expected", [(0, [1, 0, 0, 0]), (0.5, [0.5, 0, 0.5, 0]), (0.1, [0.9, 0, 0.1, 0])])
def test_y_flip(p, expected):
    assert np.allclose(y_flip(p).p, expected)


@pytest.mark.parametrize("p", [-0.01, 0.51])
def test_y_flip_range(p):
    with pytest.raises(OutOfRange):
        y_flip(p)


def test_depolarizing_range():
    DepolarizingChannel(4 / 3)
    with pytest.raises(OutOfRange):
        DepolarizingChannel(1.4)


def test_cp_violation():
    with pytest.raises(CPViolation):
        KrausChannel(np.array([np.eye(2) * 1.1]))


def test_ptm_examples():
    assert np.allclose(ptm(PauliChannel.identity()).R, np.eye(4))
    eta = 0.3
    assert np.allclose(ptm(DepolarizingChannel(eta)).R, np.diag([1, 1 - eta, 1 - eta, 1 - eta]))
    for p in (0.1, 0.37):
        R = ptm_oracle(y_flip(p))
        assert np.allclose(R, np.diag([1, 1 - 2 * p, 1, 1 - 2 * p]), atol=1e-15)
        assert np.allclose(ptm(y_flip(p)).R, R, atol=1e-15)


def test_ptm_matches_oracle_for_kraus(rng):
    for _ in range(50):
        c = random_kraus_channel(rng)
        assert np.allclose(ptm(c).R, ptm_oracle(c), atol=1e-13)
        assert ptm(c).is_trace_preserving()


def test_pauli_from_ptm_examples():
    assert np.allclose(pauli_from_ptm(np.eye(4)).p, [1, 0, 0, 0])
    p = 0.23
    assert np.allclose(pauli_from_ptm(np.diag([1, 1 - 2 * p, 1, 1 - 2 * p])).p, y_flip(p).p, atol=1e-15)
    eta = 0.6
    got = pauli_from_ptm(np.diag([1, 1 - eta, 1 - eta, 1 - eta])).p
    assert np.allclose(got, [1 - 3 * eta / 4, eta / 4, eta / 4, eta / 4], atol=1e-15)


def test_pauli_from_ptm_rejects():
    R = np.eye(4)
    R[1, 2] = 1e-6
    with pytest.raises(NotAPauliChannel):
        pauli_from_ptm(R)
    with pytest.raises(NotAPauliChannel):
        pauli_from_ptm(np.diag([1, -1, -1, 1.0]) * np.array([1, 1, 1, -1]))


def test_ptm_apply_consistency(rng):
    for i in range(1000):
        c = random_kraus_channel(rng) if i % 2 else random_pauli_channel(rng)
        rho = random_state(rng)
        direct = apply(c, rho).bloch.r
        via_ptm = ptm(c).act(rho.bloch.r)
        assert np.max(np.abs(direct - via_ptm)) < 1e-10


def test_pauli_roundtrip(rng):
    for _ in range(500):
        c = random_pauli_channel(rng)
        assert np.max(np.abs(pauli_from_ptm(ptm(c)).p - c.p)) < 1e-12


def test_apply_yields_valid_states(rng):
    for _ in range(300):
        out = apply(random_kraus_channel(rng), random_state(rng))
        lo, _ = out.eigenvalues()
        assert lo > -1e-12
        assert abs(np.trace(out.data) - 1) < 1e-12
