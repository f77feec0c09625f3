"""Acceptance gate: one test per top-level claim, one printed verdict each.

The heavyweight simulation criteria run real scenarios and take several
minutes in total; run this file with ``pytest -s`` to watch the verdicts.
"""

import dataclasses
import math
import time

import numpy as np
import pytest

from conftest import make_rem
from vdsasim.allocator import allocate, max_ue_power
from vdsasim.channel import PathlossModel, link_gain
from vdsasim.cli import _random_fixture, brute_force_allocate, main
from vdsasim.engine import (
    COL_DECODED,
    COL_INTENDED,
    SimulationConfig,
    build_allocation_input_from_config,
    run,
)
from vdsasim.rem import DttReceiver, ProtectionParams
from vdsasim.sensing import (
    SensingParams,
    pd,
    pfa,
    required_samples,
    simulate_detector,
    threshold,
)
from vdsasim.units import dbm_to_mw

POSITIONS = tuple(range(1, 8))
SEEDS = (1, 2, 3, 4, 5)


def verdict(ok: bool, name: str, detail: str = "") -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] {name}"
    if detail:
        line += f" — {detail}"
    print(line)
    assert ok, line


def dtt_fraction_below(metrics, limit_db=39.5):
    total = sum(len(v) for v in metrics.dtt_samples.values())
    below = sum(1 for v in metrics.dtt_samples.values() for s in v if s < limit_db)
    return below, total


def pooled_leader_ratios(cfg, kind, seeds=SEEDS):
    counts = {p: [0, 0] for p in POSITIONS}
    for s in seeds:
        m = run(dataclasses.replace(cfg, seed=s))
        for p in POSITIONS:
            row = m.counters[(kind, "leader", p)]
            counts[p][0] += row[COL_INTENDED]
            counts[p][1] += row[COL_DECODED]
    return {p: dec / intended for p, (intended, dec) in counts.items()}


def test_criterion_1_sensing_monte_carlo():
    """Closed-form P_fa/P_d match Monte-Carlo within 3 binomial SE."""
    trials = 100_000
    t0 = time.time()
    ok = True
    details = []
    rng = np.random.default_rng(1234)
    for target_pfa, target_pd, sinr_db in ((0.01, 0.99, 0.0),
                                           (0.05, 0.90, -3.0),
                                           (0.01, 0.99, 10.0)):
        sinr = 10.0 ** (sinr_db / 10.0)
        n_s = required_samples(sinr, target_pfa, target_pd)
        params = SensingParams(noise_power_mw=1.0, dtt_power_mw=0.0,
                               signal_power_mw=sinr, sample_count=n_s,
                               target_pfa=target_pfa, target_pd=target_pd)
        gamma = threshold(params)
        emp_pfa, emp_pd = simulate_detector(params, gamma, trials, rng)
        for design, emp in ((pfa(params, gamma), emp_pfa),
                            (pd(params, gamma), emp_pd)):
            se = math.sqrt(design * (1.0 - design) / trials)
            ok = ok and abs(emp - design) <= 3.0 * se
        details.append(f"sinr {sinr_db:g} dB: N_s={n_s}")
    elapsed = time.time() - t0
    ok = ok and elapsed < 30.0
    verdict(ok, "criterion 1: sensing closed forms vs Monte-Carlo",
            f"{'; '.join(details)}; {elapsed:.1f} s")


def test_criterion_2_sample_count_round_trip():
    """Detectors built from required_samples meet both targets exactly."""
    rng = np.random.default_rng(77)
    ok = True
    for _ in range(100):
        sinr = float(rng.uniform(0.05, 10.0))
        t_pfa = float(rng.uniform(0.001, 0.2))
        t_pd = float(rng.uniform(0.8, 0.999))
        n_s = required_samples(sinr, t_pfa, t_pd)
        params = SensingParams(noise_power_mw=1.0, dtt_power_mw=0.0,
                               signal_power_mw=sinr, sample_count=n_s,
                               target_pfa=t_pfa, target_pd=t_pd)
        gamma = threshold(params)
        ok = ok and abs(pfa(params, gamma) - t_pfa) < 1e-10
        ok = ok and pd(params, gamma) >= t_pd - 1e-12
    verdict(ok, "criterion 2: sample-count round trip", "100 random draws")


def test_criterion_3_dtt_protection():
    """Power control keeps DTT SIR above the limit; uncapped power on the
    stressed map drives most samples below it."""
    base = SimulationConfig(duration_s=140.0, background_density=0.0)
    results = []
    ok = True
    for label, kw, check in (
        ("c zero-shadow", dict(use_case="c", shadow_sigma_tvws_db=0.0),
         lambda b, t: b == 0),
        ("c shadowed", dict(use_case="c"),
         lambda b, t: t - b >= 0.95 * t),
        ("b stressed", dict(use_case="b", rem_kind="stressed"),
         lambda b, t: b >= 0.5 * t),
    ):
        t0 = time.time()
        m = run(dataclasses.replace(base, **kw))
        elapsed = time.time() - t0
        below, total = dtt_fraction_below(m)
        ok = ok and total > 0 and check(below, total) and elapsed < 120.0
        results.append(f"{label}: {below}/{total} below, {elapsed:.0f} s")
    verdict(ok, "criterion 3: DTT protection", "; ".join(results))


def test_criterion_4_reliability_ordering():
    """Dedicated-channel CACC beats control-channel CAM at every position;
    denser background degrades CAM at the worst position."""
    base = SimulationConfig(duration_s=60.0, platoon_count=1)
    a_dense = pooled_leader_ratios(
        dataclasses.replace(base, use_case="a", background_density=50.0), "CAM")
    a_mod = pooled_leader_ratios(
        dataclasses.replace(base, use_case="a", background_density=20.0), "CAM")
    c_dense = pooled_leader_ratios(
        dataclasses.replace(base, use_case="c", background_density=50.0), "CACC")
    every_pos = all(c_dense[p] > a_dense[p] for p in POSITIONS)
    worst = min(POSITIONS, key=lambda p: a_dense[p])
    density_hurts = a_dense[worst] < a_mod[worst]
    ok = every_pos and density_hurts
    verdict(ok, "criterion 4: reliability ordering",
            f"worst pos {worst}: CAM dense {a_dense[worst]:.3f} < "
            f"moderate {a_mod[worst]:.3f}; CACC dense min "
            f"{min(c_dense.values()):.3f}")


def test_criterion_5_band_change_rate():
    """Dropping power control at least halves frequency stability."""
    base = SimulationConfig(duration_s=140.0, background_density=0.0)
    means = {}
    for uc in ("b", "c"):
        changes = []
        for s in SEEDS:
            m = run(dataclasses.replace(base, use_case=uc, seed=s))
            changes.extend(m.band_changes)
        means[uc] = float(np.mean(changes))
    ok = means["b"] >= 1.5 * means["c"]
    verdict(ok, "criterion 5: band-change rate",
            f"mean without control {means['b']:.1f} vs with {means['c']:.1f}")


def test_criterion_6_allocator_oracle_equivalence():
    """allocate() agrees with a plain-loop exhaustive oracle."""
    rng = np.random.default_rng(99)
    ok = True
    for _ in range(10):
        inp = _random_fixture(rng)
        decision = allocate(inp)
        chosen = tuple(p.frequency_hz for p in decision.platoons)
        oracle_tuple, oracle_obj = brute_force_allocate(inp)
        tol = 1e-9 * max(1.0, abs(oracle_obj))
        ok = ok and chosen == oracle_tuple
        ok = ok and abs(decision.objective_db - oracle_obj) <= tol
    verdict(ok, "criterion 6: allocator oracle equivalence", "10 random fixtures")


def test_criterion_7_power_cap_fixed_point():
    """A binding power cap puts the protected receiver exactly on the limit."""
    pl = PathlossModel.tvws_log_distance()
    prot = ProtectionParams()
    sir_min = 10.0 ** (prot.sir_min_db / 10.0)
    rng = np.random.default_rng(5)
    ok = True
    checked = 0
    for _ in range(50):
        rx_pos = (float(rng.uniform(100.0, 4800.0)), float(rng.uniform(100.0, 450.0)))
        vehicle = (float(rng.uniform(100.0, 4800.0)), 0.0)
        p_dtt = float(rng.uniform(-75.0, -50.0))
        rem = make_rem({1: p_dtt}, receivers=[DttReceiver(1, *rx_pos, 1)])
        cap = max_ue_power(vehicle, 1, rem, prot, 23.0, pl)
        if cap >= 23.0:
            continue  # constraint not binding for this draw
        checked += 1
        sir = dbm_to_mw(p_dtt) / (dbm_to_mw(cap) * link_gain(pl, vehicle, rx_pos))
        ok = ok and abs(sir - sir_min) <= 1e-9 * sir_min
    ok = ok and checked >= 10
    verdict(ok, "criterion 7: power-cap fixed point",
            f"{checked} binding geometries at exactly SIR_min")


def test_criterion_8_byte_identical_outputs(tmp_path):
    """Identical config and seed give byte-identical CSV files."""
    cfg_text = ("run.use_case = c\nrun.duration_s = 8.0\n"
                "background.density_per_km_lane = 0\n")
    cfg_path = tmp_path / "scenario.cfg"
    cfg_path.write_text(cfg_text)
    outs = []
    for name in ("one", "two"):
        out = tmp_path / name
        assert main(["run", "--config", str(cfg_path), "--out", str(out),
                     "--seeds", "3"]) == 0
        outs.append(out)
    names = ("reception_vs_position.csv", "dtt_sir_samples.csv",
             "band_changes.csv", "summary.csv")
    ok = all((outs[0] / "seed_3" / n).read_bytes()
             == (outs[1] / "seed_3" / n).read_bytes() for n in names)
    verdict(ok, "criterion 8: deterministic CSV outputs",
            "two invocations, four files compared")


def test_criterion_9_full_scale_runtime():
    """The full two-platoon dense scenario finishes inside the budget."""
    cfg = SimulationConfig(use_case="c", duration_s=140.0,
                           background_density=50.0, platoon_count=2, seed=1)
    assert len(cfg.candidate_frequencies()) == 33
    t0 = time.time()
    m = run(cfg)
    run_s = time.time() - t0
    inp = build_allocation_input_from_config(cfg)
    t0 = time.time()
    allocate(inp)
    alloc_s = time.time() - t0
    ok = run_s < 300.0 and alloc_s < 1.0 and m.allocations == 140
    verdict(ok, "criterion 9: full-scale runtime",
            f"run {run_s:.0f} s (< 300), one allocation {alloc_s * 1e3:.0f} ms (< 1000)")
