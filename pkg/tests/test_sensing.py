"""Detector design math: Q function, thresholds, sample counts."""

import math

import numpy as np
import pytest
from scipy.stats import norm

from vdsasim.errors import DomainError, InfeasibleSensing
from vdsasim.sensing import (
    SensingParams,
    pd,
    pfa,
    q_function,
    q_inverse,
    required_samples,
    threshold,
)


def test_q_at_zero_is_half():
    assert q_function(0.0) == 0.5


def test_q_matches_normal_tail():
    assert abs(q_function(1.6449) - 0.05) < 1e-4


def test_q_complement_identity():
    rng = np.random.default_rng(3)
    for x in rng.uniform(-4.0, 4.0, size=50):
        assert q_function(x) + q_function(-x) == pytest.approx(1.0, abs=1e-12)


def test_q_inverse_at_half_is_zero():
    assert q_inverse(0.5) == pytest.approx(0.0, abs=1e-12)


def test_q_inverse_round_trip():
    assert q_inverse(q_function(2.0)) == pytest.approx(2.0, abs=1e-8)


def test_q_inverse_tail_value():
    assert q_inverse(0.05) == pytest.approx(1.6449, abs=1e-4)


def test_q_inverse_rejects_out_of_domain():
    for p in (0.0, 1.0, -0.2, 1.3):
        with pytest.raises(DomainError):
            q_inverse(p)


def test_threshold_approaches_idle_power_for_huge_sample_count():
    params = SensingParams(noise_power_mw=0.7, dtt_power_mw=0.3,
                           sample_count=10**12, target_pfa=0.01)
    assert threshold(params) == pytest.approx(1.0, rel=1e-4)


def test_threshold_at_even_odds_equals_idle_power():
    params = SensingParams(noise_power_mw=1.0, dtt_power_mw=0.0,
                           sample_count=2, target_pfa=0.5)
    assert threshold(params) == pytest.approx(1.0, abs=1e-12)


def test_threshold_hand_value():
    # idle power 1 mW, 50 samples, 1% false alarms
    params = SensingParams(noise_power_mw=1.0, dtt_power_mw=0.0,
                           sample_count=50, target_pfa=0.01)
    assert threshold(params) == pytest.approx(1.4653, abs=1e-3)


def test_threshold_increases_with_dtt_power():
    prev = 0.0
    for dtt in (0.0, 0.5, 1.0, 5.0):
        params = SensingParams(noise_power_mw=1.0, dtt_power_mw=dtt,
                               sample_count=100, target_pfa=0.01)
        g = threshold(params)
        assert g > prev
        prev = g


def test_pfa_at_idle_power_is_half():
    params = SensingParams(noise_power_mw=1.0, dtt_power_mw=0.0, sample_count=64)
    assert pfa(params, 1.0) == pytest.approx(0.5, abs=1e-12)


def test_pfa_of_designed_threshold_hits_target():
    params = SensingParams(noise_power_mw=0.4, dtt_power_mw=0.9,
                           sample_count=80, target_pfa=0.037)
    assert pfa(params, threshold(params)) == pytest.approx(0.037, abs=1e-10)


def test_pfa_pd_hand_values():
    # unit signal over unit idle power, 100 samples, threshold 1.5 mW;
    # expected values from the standard-normal survival function
    params = SensingParams(noise_power_mw=1.0, dtt_power_mw=0.0,
                           signal_power_mw=1.0, sample_count=100)
    sd = math.sqrt(2.0 / 100)
    assert pfa(params, 1.5) == pytest.approx(float(norm.sf(0.5 / sd)), rel=1e-9)
    assert pd(params, 1.5) == pytest.approx(float(norm.sf(-0.5 / (sd * 2.0))), rel=1e-9)
    assert pfa(params, 1.5) == pytest.approx(2.035e-4, abs=2e-6)
    assert pd(params, 1.5) == pytest.approx(0.9615, abs=1e-4)


def test_required_samples_degenerate_targets_clamp_to_one():
    assert required_samples(1.0, 0.5, 0.5) == 1


def test_required_samples_at_zero_db():
    assert required_samples(1.0, 0.01, 0.99) == 98


def test_required_samples_low_snr_quadrupling():
    n1 = required_samples(0.01, 0.01, 0.99, max_samples=10**8)
    n2 = required_samples(0.005, 0.01, 0.99, max_samples=10**8)
    assert n2 / n1 == pytest.approx(4.0, rel=0.1)


def test_required_samples_clamps_at_cap():
    assert required_samples(0.005, 0.01, 0.99, max_samples=10**6) == 10**6


def test_required_samples_rejects_nonpositive_sinr():
    with pytest.raises(DomainError):
        required_samples(0.0, 0.01, 0.99)


def test_required_samples_infeasible_targets():
    with pytest.raises(InfeasibleSensing):
        required_samples(1.0, 0.4, 0.1)


def test_pd_of_designed_threshold_meets_target():
    rng = np.random.default_rng(11)
    for _ in range(100):
        sinr = float(rng.uniform(0.05, 5.0))
        target_pfa = float(rng.uniform(0.001, 0.2))
        target_pd = float(rng.uniform(0.8, 0.999))
        n_s = required_samples(sinr, target_pfa, target_pd)
        params = SensingParams(noise_power_mw=1.0, dtt_power_mw=0.0,
                               signal_power_mw=sinr, sample_count=n_s,
                               target_pfa=target_pfa, target_pd=target_pd)
        gamma = threshold(params)
        assert pfa(params, gamma) == pytest.approx(target_pfa, abs=1e-10)
        assert pd(params, gamma) >= target_pd - 1e-12
