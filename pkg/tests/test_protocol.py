import math
from dataclasses import replace
from fractions import Fraction

import numpy as np
import pytest

from mpqkd.channels import PauliChannel, y_flip
from mpqkd.errors import InsufficientBits
from mpqkd.protocol import (
    AdConfig,
    SiftedRecord,
    SiftedRecords,
    SimulationConfig,
    ad_enumerated_stats,
    ad_exact_stats,
    advantage_distillation,
    analytic_qber,
    iid_records,
    photon_number_loss_db,
    pulses_for_sifted,
    run,
    signal_qber,
)
from mpqkd.security import oneway_key_rate
from mpqkd.twirl import default_protection, standard_2design


def ideal(**kw):
    return SimulationConfig(**kw).ideal()


def within(rep, target, k=4):
    return abs(rep.qber_estimate - target) <= k * rep.qber_stderr


def test_noiseless_run():
    rep = run(ideal(n_pulses=10**6))
    assert rep.n_errors == 0 and rep.qber_estimate == 0
    assert rep.n_detected == 10**6


def test_protected_y_flip():
    rep = run(ideal(n_pulses=10**6, channel=y_flip(0.1), protection=default_protection(), seed=3))
    assert rep.analytic_qber == pytest.approx(0.2 / 3, abs=1e-15)
    assert within(rep, 0.2 / 3)


def test_unprotected_y_flip():
    rep = run(ideal(n_pulses=10**6, channel=y_flip(0.1), seed=4))
    assert within(rep, 0.1)


def test_full_design_protection():
    c = PauliChannel(np.array([0.8, 0.05, 0.1, 0.05]))
    rep = run(ideal(n_pulses=10**6, channel=c, protection=standard_2design(), seed=5))
    assert within(rep, 2 / 3 * 0.2)


def test_two_state_protocol():
    cfg = ideal(protocol="two-state", n_pulses=10**6, channel=y_flip(0.2), protection=default_protection(), seed=6)
    rep = run(cfg)
    assert rep.n_sifted == rep.n_detected
    assert within(rep, signal_qber(cfg))


def test_sifting_rate():
    rep = run(ideal(n_pulses=400_000, seed=9))
    f = rep.n_sifted / rep.n_detected
    assert abs(f - 0.5) <= 4 * math.sqrt(0.25 / rep.n_detected)


def test_analytic_model():
    cfg = SimulationConfig(channel=y_flip(0.1), dark_count_prob=0)
    assert analytic_qber(cfg) == signal_qber(cfg)
    dark = SimulationConfig(channel=y_flip(0.1), detector_efficiency=0.0, dark_count_prob=1e-3)
    assert analytic_qber(dark) == pytest.approx(0.5, abs=1e-15)
    qs = [analytic_qber(SimulationConfig(channel=y_flip(0.1), loss_db=L)) for L in (0, 10, 20, 30, 35)]
    assert qs[-2] > signal_qber(SimulationConfig(channel=y_flip(0.1)))
    assert all(a < b for a, b in zip(qs, qs[1:]))


def test_dark_count_mc():
    cfg = SimulationConfig(channel=y_flip(0.05), loss_db=30, dark_count_prob=2e-4, seed=11)
    cfg = replace(cfg, n_pulses=pulses_for_sifted(cfg, 200_000))
    rep = run(cfg)
    assert rep.analytic_qber > 0.06
    assert within(rep, rep.analytic_qber)


def test_photon_number_loss():
    assert photon_number_loss_db(1e6) == pytest.approx(0, abs=1e-12)
    assert photon_number_loss_db(0.1) == pytest.approx(-10 * math.log10(1 - math.exp(-0.1)))


def test_config_validation():
    with pytest.raises(ValueError):
        SimulationConfig(loss_db=-1)
    with pytest.raises(ValueError):
        SimulationConfig(dark_count_prob=1.5)
    with pytest.raises(ValueError):
        SimulationConfig(seed=-1)


def test_reproducible_and_worker_dependent():
    cfg = SimulationConfig(channel=y_flip(0.1), n_pulses=200_000, seed=42, workers=3)
    a, b = run(cfg, keep_records=True), run(cfg, keep_records=True)
    assert a.as_row() == b.as_row()
    assert np.array_equal(a.records.bob_bits, b.records.bob_bits)


def test_records_roundtrip():
    cfg = ideal(n_pulses=1000, channel=y_flip(0.2), protection=default_protection(), seed=1)
    rep = run(cfg, keep_records=True)
    recs = list(rep.records)
    assert len(recs) == rep.n_sifted
    assert sum(r.alice_bit != r.bob_bit for r in recs) == rep.n_errors
    assert all(r.twirl_index in (0, 1, 2) and r.basis in "ZX" for r in recs)


# -- advantage distillation -----------------------------------------------------------


def test_ad_error_free():
    bits = SiftedRecords.from_bits(np.zeros(999), np.zeros(999))
    for k in (1, 4, 7):
        pairs, st = advantage_distillation(bits, AdConfig(k))
        assert st.acceptance_rate == 1 and st.post_error == 0
        assert len(pairs) == 999 // k


def test_ad_accepts_record_lists():
    recs = [SiftedRecord(1, 0, "Z", None), SiftedRecord(0, 1, "X", None)]
    _, st = advantage_distillation(recs, AdConfig(2))
    assert st.n_accepted == 1 and st.n_errors == 1


def test_ad_insufficient_bits():
    with pytest.raises(InsufficientBits):
        advantage_distillation(SiftedRecords.from_bits([0, 1], [0, 1]), AdConfig(3))
    with pytest.raises(ValueError):
        AdConfig(0)


def test_ad_example(rng):
    acc, err = ad_exact_stats(0.2, 3)
    assert acc == pytest.approx(0.52, abs=1e-15)
    assert err == pytest.approx(0.015384615384615385, abs=1e-15)
    _, st = advantage_distillation(iid_records(0.2, 10**6, rng), AdConfig(3), seed=2)
    assert abs(st.acceptance_rate - acc) <= 4 * st.acceptance_stderr
    assert abs(st.post_error - err) <= 4 * st.post_error_stderr


def test_ad_symmetric_point(rng):
    _, st = advantage_distillation(iid_records(0.5, 200_000, rng), AdConfig(4), seed=3)
    assert abs(st.post_error - 0.5) <= 4 * st.post_error_stderr


def test_ad_exact_equals_enumeration():
    for eps in (Fraction(0), Fraction(1, 20), Fraction(1, 5), Fraction(69, 250), Fraction(1, 2), Fraction(1)):
        for k in range(1, 13):
            assert ad_exact_stats(eps, k) == ad_enumerated_stats(eps, k)
    assert ad_exact_stats(Fraction(3, 10), 1) == (1, Fraction(3, 10))


def test_ad_reaches_oneway_regime_below_twoway_bound():
    eps = 0.27
    ks = [k for k in range(1, 51) if oneway_key_rate(ad_exact_stats(eps, k)[1]) > 0]
    assert ks and ks[0] > 1
    assert oneway_key_rate(eps if eps <= 0.5 else 0.5) < 0
