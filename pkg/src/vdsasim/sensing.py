"""CFAR energy-detection math: Q function, thresholds and sample counts.

The detector averages N_s power samples; under the Gaussian approximation
of the chi-square statistic,

    T | H0 ~ N(s0, (2/N_s) s0^2),      s0 = sigma_i^2 + sigma_n^2
    T | H1 ~ N(s0 + s, (2/N_s) (s0 + s)^2)

which gives the closed forms for P_fa, P_d, the CFAR threshold gamma and
the required sample count implemented below.  All powers are linear mW.
Everything is stateless pure math.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .errors import DomainError, InfeasibleSensing, InvariantViolation

log = logging.getLogger(__name__)

DEFAULT_MAX_SAMPLES = 1_000_000


@dataclass(frozen=True)
class SensingParams:
    noise_power_mw: float
    dtt_power_mw: float
    signal_power_mw: float = 0.0
    sample_count: int = 100
    target_pfa: float = 0.01
    target_pd: float = 0.99

    def __post_init__(self):
        if min(self.noise_power_mw, self.dtt_power_mw, self.signal_power_mw) < 0:
            raise InvariantViolation("powers must be >= 0")
        if not (0.0 < self.target_pfa < 1.0 and 0.0 < self.target_pd < 1.0):
            raise InvariantViolation("target probabilities must be in (0, 1)")
        if self.sample_count < 1:
            raise InvariantViolation("sample count must be >= 1")

    @property
    def idle_power_mw(self) -> float:
        return self.dtt_power_mw + self.noise_power_mw


def q_function(x: float) -> float:
    """Gaussian tail probability Q(x) = P(Z > x)."""
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def q_inverse(p: float) -> float:
    """Inverse of q_function on (0, 1)."""
    if not 0.0 < p < 1.0:
        raise DomainError(f"q_inverse domain is (0, 1), got {p}")
    return float(-ndtri(p))


def threshold(params: SensingParams) -> float:
    """CFAR detection threshold gamma (linear mW) for the target P_fa."""
    s0 = params.idle_power_mw
    return s0 * (math.sqrt(2.0 / params.sample_count) * q_inverse(params.target_pfa) + 1.0)


def pfa(params: SensingParams, gamma_mw: float) -> float:
    """False-alarm probability of threshold gamma under H0."""
    s0 = params.idle_power_mw
    return q_function((gamma_mw - s0) / (math.sqrt(2.0 / params.sample_count) * s0))


def pd(params: SensingParams, gamma_mw: float) -> float:
    """Detection probability of threshold gamma under H1."""
    s1 = params.idle_power_mw + params.signal_power_mw
    return q_function((gamma_mw - s1) / (math.sqrt(2.0 / params.sample_count) * s1))


def required_samples(
    sinr: float,
    target_pfa: float,
    target_pd: float,
    max_samples: int = DEFAULT_MAX_SAMPLES,
) -> int:
    """Sample count meeting (P_fa, P_d) at the given sensed SINR (linear).

    Obtained by equating the H0 and H1 threshold expressions:

        N_s = ceil( 2 (Q^-1(P_fa) - (1 + SINR) Q^-1(P_d))^2 / SINR^2 )

    clamped to [1, max_samples].  Hitting the cap is logged: at low SINR
    the required sensing time outgrows the vehicular time budget (the
    SNR-wall regime).
    """
    if sinr <= 0:
        raise DomainError("sinr must be > 0")
    if not (0.0 < target_pfa < 1.0 and 0.0 < target_pd < 1.0):
        raise DomainError("target probabilities must be in (0, 1)")
    x = q_inverse(target_pfa) - (1.0 + sinr) * q_inverse(target_pd)
    if x < 0.0:
        raise InfeasibleSensing(
            f"(pfa={target_pfa}, pd={target_pd}) unattainable at sinr={sinr}"
        )
    n = math.ceil(2.0 * x * x / (sinr * sinr))
    if n > max_samples:
        log.warning(
            "required_samples clamped: %d > cap %d (sinr=%g)", n, max_samples, sinr
        )
        return max_samples
    return max(n, 1)


def simulate_detector(
    params: SensingParams,
    gamma_mw: float,
    trials: int,
    rng: np.random.Generator,
    statistic: str = "gaussian_approx",
) -> tuple[float, float]:
    """Monte-Carlo (empirical P_fa, empirical P_d) for threshold gamma.

    statistic="gaussian_approx" draws the averaged-power statistic from
    the same Gaussian model the closed forms assume, so the empirical
    rates estimate the designed probabilities directly.

    statistic="exact_energy" draws N_s zero-mean Gaussian time samples
    per trial and averages their squared magnitudes, i.e. the true
    (chi-square) energy statistic.  For small N_s its tail probabilities
    deviate from the Gaussian-approximation targets by design; it is kept
    as an independent check of that approximation error.
    """
    n = params.sample_count
    s0 = params.idle_power_mw
    s1 = s0 + params.signal_power_mw
    if statistic == "gaussian_approx":
        sd = math.sqrt(2.0 / n)
        z0 = rng.standard_normal(trials)
        z1 = rng.standard_normal(trials)
        emp_pfa = np.count_nonzero(s0 * (1.0 + sd * z0) > gamma_mw) / trials
        emp_pd = np.count_nonzero(s1 * (1.0 + sd * z1) > gamma_mw) / trials
        return float(emp_pfa), float(emp_pd)
    if statistic != "exact_energy":
        raise DomainError(f"unknown statistic {statistic!r}")
    hits0 = 0
    hits1 = 0
    chunk = max(1, min(trials, 10_000_000 // max(n, 1)))
    done = 0
    while done < trials:
        m = min(chunk, trials - done)
        y0 = rng.standard_normal((m, n))
        t0 = s0 * np.mean(y0 * y0, axis=1)
        hits0 += int(np.count_nonzero(t0 > gamma_mw))
        y1 = rng.standard_normal((m, n))
        t1 = s1 * np.mean(y1 * y1, axis=1)
        hits1 += int(np.count_nonzero(t1 > gamma_mw))
        done += m
    return hits0 / trials, hits1 / trials
