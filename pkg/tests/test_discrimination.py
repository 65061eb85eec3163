import math

import numpy as np
import pytest

from mpqkd.channels import PauliChannel, random_pauli_channel, y_flip
from mpqkd.discrimination import (
    Ensemble,
    Measurement,
    brute_force_optimal,
    grid_slack,
    guess_prob,
    guess_prob_through,
    helstrom,
    helstrom_through,
    m0plus,
    m4,
    m_x,
    m_z,
    s0plus,
    s0plus_guess_protected,
    s0plus_guess_unprotected,
    s2,
    s2_guess_protected,
    s2_guess_unprotected,
    s4,
)
from mpqkd.errors import ArityMismatch, UnsupportedEnsemble
from mpqkd.qubit import I2, ket0, ket1, ket_plus


def test_noiseless_guessing():
    assert guess_prob(s2(), m_z()) == pytest.approx(1, abs=1e-15)
    assert guess_prob(s0plus(), m0plus()) == pytest.approx(0.5 + 1 / (2 * math.sqrt(2)), abs=1e-15)
    assert guess_prob(s4(), m4()) == pytest.approx(0.5, abs=1e-15)


def test_arity_mismatch():
    with pytest.raises(ArityMismatch):
        guess_prob(s4(), m_z())
    with pytest.raises(ArityMismatch):
        guess_prob_through(s2(), y_flip(0.1), False, m4())


def test_measurement_validation():
    with pytest.raises(ValueError):
        Measurement((I2, I2))
    with pytest.raises(ValueError):
        Ensemble(np.array([0.7, 0.7]), (ket0(), ket1()))


def test_helstrom_examples():
    p, _ = helstrom(0.5, ket0(), 0.5, ket1())
    assert p == pytest.approx(1, abs=1e-15)
    p, m = helstrom(0.5, ket0(), 0.5, ket_plus())
    assert p == pytest.approx(0.5 + 1 / (2 * math.sqrt(2)), abs=1e-14)
    assert guess_prob(s0plus(), m) == pytest.approx(p, abs=1e-14)
    p, _ = helstrom(0.5, ket0(), 0.5, ket0())
    assert p == 0.5


def test_helstrom_needs_two_states():
    with pytest.raises(UnsupportedEnsemble):
        helstrom_through(s4(), y_flip(0.1), False)


@pytest.mark.parametrize("p", [0.0, 0.1, 0.25, 0.4, 0.5])
def test_closed_forms(p):
    c = y_flip(p)
    assert guess_prob_through(s2(), c, False, m_z()) == pytest.approx(s2_guess_unprotected(p), abs=1e-12)
    assert guess_prob_through(s2(), c, True, m_z()) == pytest.approx(s2_guess_protected(p), abs=1e-12)
    assert guess_prob_through(s0plus(), c, False, m0plus()) == pytest.approx(s0plus_guess_unprotected(p), abs=1e-12)
    assert guess_prob_through(s0plus(), c, True, m0plus()) == pytest.approx(s0plus_guess_protected(p), abs=1e-12)


def test_half_flip_values():
    assert s2_guess_unprotected(0.5) == 0.5
    assert s2_guess_protected(0.5) == pytest.approx(2 / 3, abs=1e-15)


def test_x_measurement_is_useless_for_z_states():
    assert guess_prob_through(s2(), y_flip(0.2), True, m_x()) == pytest.approx(0.5, abs=1e-14)


@pytest.mark.parametrize("p", [0.0, 0.15, 0.5])
@pytest.mark.parametrize("protected", [False, True])
def test_oracle_brackets_helstrom(p, protected):
    for e in (s2(), s0plus()):
        h, _ = helstrom_through(e, y_flip(p), protected)
        o = brute_force_optimal(e, y_flip(p), protected)
        assert o <= h + 1e-12
        assert h - o <= grid_slack()


def test_oracle_on_random_channels(rng):
    for _ in range(10):
        c = random_pauli_channel(rng)
        h, _ = helstrom_through(s0plus(), c, True)
        assert abs(brute_force_optimal(s0plus(), c, True) - h) <= grid_slack()


def test_protection_keeps_fixed_measurement_optimal(rng):
    # Holds while the twirled channel contracts rather than inverts, i.e. p0 >= 1/4.
    for _ in range(50):
        c = random_pauli_channel(rng)
        if c.p0 < 0.25:
            continue
        for e, m in ((s2(), m_z()), (s0plus(), m0plus())):
            h, _ = helstrom_through(e, c, True)
            assert guess_prob_through(e, c, True, m) == pytest.approx(h, abs=1e-10)


def test_inverting_channel_flips_best_guess():
    c = PauliChannel(np.array([0.0, 0.4, 0.3, 0.3]))
    h, _ = helstrom_through(s2(), c, True)
    assert guess_prob_through(s2(), c, True, m_z()) == pytest.approx(1 - h, abs=1e-12)


def test_unprotected_fixed_measurement_can_be_suboptimal():
    c = PauliChannel(np.array([0.5, 0.5, 0, 0]))
    h, _ = helstrom_through(s0plus(), c, False)
    assert guess_prob_through(s0plus(), c, False, m0plus()) < h - 1e-3
