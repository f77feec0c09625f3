"""Hot numeric kernels for the MAC event loop.

Two implementations of each kernel: a numba ``@njit`` version (default)
and a pure-numpy fallback selected by setting the environment variable
``VDSA_NO_NUMBA=1`` (or when numba is unavailable).  Both are exercised by
the test suite and compared by ``benchmarks/bench_kernels.py``.

Shadowing is counter-based: a deterministic hash of (seed, endpoint ids,
allocation period) feeds a Box-Muller draw, so any caller gets the same
per-link, per-period shadowing value without storing state.  Links are
keyed on the ordered id pair (reciprocity).
"""

from __future__ import annotations

import math
import os

import numpy as np

_U64 = np.uint64
_MASK = _U64(0xFFFFFFFFFFFFFFFF)
_SM_GAMMA = _U64(0x9E3779B97F4A7C15)
_M1 = _U64(0xBF58476D1CE4E5B9)
_M2 = _U64(0x94D049BB133111EB)
_K_A = _U64(0xC2B2AE3D27D4EB4F)
_K_B = _U64(0x165667B19E3779F9)
_K_P = _U64(0x27D4EB2F165667C5)

USE_NUMBA = os.environ.get("VDSA_NO_NUMBA", "0") != "1"
if USE_NUMBA:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover
        USE_NUMBA = False

_TWO_PI = 2.0 * math.pi
_INV_2_53 = 1.0 / 9007199254740992.0


def _py_splitmix(x):
    # uint64 wraparound is intentional
    with np.errstate(over="ignore"):
        x = _U64(x) + _SM_GAMMA
        x = (x ^ (x >> _U64(30))) * _M1
        x = (x ^ (x >> _U64(27))) * _M2
        return x ^ (x >> _U64(31))


def _py_shadow_db(seed, id_a, id_b, period, sigma_db):
    if sigma_db == 0.0:
        return 0.0
    lo = id_a if id_a < id_b else id_b
    hi = id_b if id_a < id_b else id_a
    with np.errstate(over="ignore"):
        k = (
            _U64(seed) * _K_A
            ^ _U64(lo + 1) * _K_B
            ^ _U64(hi + 1) * _M1
            ^ _U64(period + 1) * _K_P
        )
        h2_in = k + _SM_GAMMA
    h1 = _py_splitmix(k)
    h2 = _py_splitmix(h2_in)
    u1 = (float(h1 >> _U64(11)) + 0.5) * _INV_2_53
    u2 = (float(h2 >> _U64(11)) + 0.5) * _INV_2_53
    z = math.sqrt(-2.0 * math.log(u1)) * math.cos(_TWO_PI * u2)
    return sigma_db * z


def _py_path_gain(dx, dy, ring_l, d0, ref_loss, g1, g2, dc):
    """Linear gain of the dual/single-slope model over the ring road."""
    adx = abs(dx)
    if ring_l > 0.0 and adx > 0.5 * ring_l:
        adx = ring_l - adx
    d = math.sqrt(adx * adx + dy * dy)
    if d < d0:
        d = d0
    loss = ref_loss + 10.0 * g1 * math.log10(d / d0)
    if d > dc:
        loss += 10.0 * g2 * math.log10(d / dc)
    return 10.0 ** (-loss / 10.0)


def _py_acir_lookup(offsets, values, offset):
    i = 0
    for j in range(1, offsets.shape[0]):
        if offsets[j] <= offset:
            i = j
        else:
            break
    return values[i]


def _py_sense(
    n,
    xs,
    ys,
    pw_mw,
    f_hz,
    starts,
    ends,
    src_ids,
    t,
    detect_lag,
    rx_x,
    rx_y,
    rx_id,
    rx_f,
    exclude_src,
    ring_l,
    d0,
    ref_loss,
    g1,
    g2,
    dc,
    sigma_db,
    shadow_seed,
    period,
    acir_off,
    acir_val,
    gamma_mw,
):
    """Received power sum over detectable transmissions, plus defer hints.

    Returns (power_mw, latest end among individually-audible transmissions
    or -1, earliest end among detectable transmissions or -1).
    """
    total = 0.0
    max_end_strong = -1.0
    min_end_any = -1.0
    for i in range(n):
        if src_ids[i] == exclude_src:
            continue
        if starts[i] > t - detect_lag:
            continue
        gain = _py_path_gain(xs[i] - rx_x, ys[i] - rx_y, ring_l, d0, ref_loss, g1, g2, dc)
        sh = _py_shadow_db(shadow_seed, src_ids[i], rx_id, period, sigma_db)
        a = _py_acir_lookup(acir_off, acir_val, abs(f_hz[i] - rx_f))
        p = pw_mw[i] * gain * 10.0 ** (-sh / 10.0) * a
        total += p
        if p > gamma_mw and ends[i] > max_end_strong:
            max_end_strong = ends[i]
        if min_end_any < 0.0 or ends[i] < min_end_any:
            min_end_any = ends[i]
    return total, max_end_strong, min_end_any


if USE_NUMBA:

    @njit(cache=True)
    def _splitmix(x):
        x = _U64(x) + _SM_GAMMA
        x = (x ^ (x >> _U64(30))) * _M1
        x = (x ^ (x >> _U64(27))) * _M2
        return x ^ (x >> _U64(31))

    @njit(cache=True)
    def shadow_db(seed, id_a, id_b, period, sigma_db):
        if sigma_db == 0.0:
            return 0.0
        lo = id_a if id_a < id_b else id_b
        hi = id_b if id_a < id_b else id_a
        k = (
            _U64(seed) * _K_A
            ^ _U64(lo + 1) * _K_B
            ^ _U64(hi + 1) * _M1
            ^ _U64(period + 1) * _K_P
        )
        h1 = _splitmix(k)
        h2 = _splitmix(k + _SM_GAMMA)
        u1 = (float(h1 >> _U64(11)) + 0.5) * _INV_2_53
        u2 = (float(h2 >> _U64(11)) + 0.5) * _INV_2_53
        z = math.sqrt(-2.0 * math.log(u1)) * math.cos(_TWO_PI * u2)
        return sigma_db * z

    path_gain = njit(cache=True)(_py_path_gain)
    acir_lookup = njit(cache=True)(_py_acir_lookup)

    @njit(cache=True)
    def sense(
        n,
        xs,
        ys,
        pw_mw,
        f_hz,
        starts,
        ends,
        src_ids,
        t,
        detect_lag,
        rx_x,
        rx_y,
        rx_id,
        rx_f,
        exclude_src,
        ring_l,
        d0,
        ref_loss,
        g1,
        g2,
        dc,
        sigma_db,
        shadow_seed,
        period,
        acir_off,
        acir_val,
        gamma_mw,
    ):
        total = 0.0
        max_end_strong = -1.0
        min_end_any = -1.0
        for i in range(n):
            if src_ids[i] == exclude_src:
                continue
            if starts[i] > t - detect_lag:
                continue
            gain = path_gain(xs[i] - rx_x, ys[i] - rx_y, ring_l, d0, ref_loss, g1, g2, dc)
            sh = shadow_db(shadow_seed, src_ids[i], rx_id, period, sigma_db)
            a = acir_lookup(acir_off, acir_val, abs(f_hz[i] - rx_f))
            p = pw_mw[i] * gain * 10.0 ** (-sh / 10.0) * a
            total += p
            if p > gamma_mw and ends[i] > max_end_strong:
                max_end_strong = ends[i]
            if min_end_any < 0.0 or ends[i] < min_end_any:
                min_end_any = ends[i]
        return total, max_end_strong, min_end_any

else:
    shadow_db = _py_shadow_db
    path_gain = _py_path_gain
    acir_lookup = _py_acir_lookup
    sense = _py_sense


def warmup():
    """Trigger JIT compilation up front so run timings stay flat."""
    off = np.array([0.0, 8e6], dtype=np.float64)
    val = np.array([1.0, 0.01], dtype=np.float64)
    xs = np.zeros(1)
    sense(
        1, xs, xs, np.ones(1), np.full(1, 5.9e9), np.zeros(1), np.ones(1),
        np.zeros(1, dtype=np.int64), 1.0, 13e-6, 10.0, 3.0, 7, 5.9e9, -1,
        10000.0, 10.0, 67.9, 2.1, 3.8, 100.0, 3.0, 1, 0, off, val, 1e-8,
    )
    shadow_db(1, 2, 3, 4, 3.0)
    path_gain(5.0, 1.0, 1000.0, 10.0, 67.9, 2.1, 3.8, 100.0)
