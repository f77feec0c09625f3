"""Path loss, ACIR step tables and the aggregated DTT interference term."""

import numpy as np
import pytest

from conftest import make_rem
from vdsasim.channel import (
    AcirTable,
    PathlossModel,
    acir,
    default_acir_dtt_v,
    default_acir_v_dtt,
    default_acir_v_v,
    dtt_interference_at,
    link_gain,
    ring_distance,
)
from vdsasim.errors import DegenerateGeometry, InvariantViolation, PositionOutsideMap
from vdsasim.rem import RemDatabase


def test_gain_at_reference_distance():
    m = PathlossModel.dual_slope_5g9()
    g = link_gain(m, (0.0, 0.0), (m.d0_m, 0.0))
    assert g == pytest.approx(10.0 ** (-m.reference_loss_db / 10.0), rel=1e-12)


def test_dual_slope_continuity_at_breakpoint():
    m = PathlossModel.dual_slope_5g9()
    lo = m.loss_db(m.dc_m * (1.0 - 1e-12))
    hi = m.loss_db(m.dc_m * (1.0 + 1e-12))
    assert hi == pytest.approx(lo, rel=1e-10)


def test_single_slope_hand_value():
    # square-law decay from 1 m: loss(100 m) = 47.86 + 20*2 = 87.86 dB
    m = PathlossModel(variant="test", d0_m=1.0, reference_loss_db=47.86,
                      gamma1=2.0, gamma2=2.0, dc_m=1e9, shadowing_sigma_db=0.0)
    assert m.loss_db(100.0) == pytest.approx(87.86, abs=1e-9)
    g = link_gain(m, (0.0, 0.0), (100.0, 0.0))
    assert g == pytest.approx(10.0 ** -8.786, rel=1e-9)


def test_loss_monotone_in_distance():
    m = PathlossModel.dual_slope_5g9()
    dists = np.linspace(1.0, 3000.0, 400)
    losses = [m.loss_db(d) for d in dists]
    assert all(b >= a for a, b in zip(losses, losses[1:]))


def test_ring_distance_wraps():
    assert ring_distance((100.0, 0.0), (4900.0, 0.0), 5000.0) == pytest.approx(200.0)
    assert ring_distance((100.0, 0.0), (4900.0, 0.0), None) == pytest.approx(4800.0)


def test_coincident_positions_rejected():
    m = PathlossModel.dual_slope_5g9()
    with pytest.raises(DegenerateGeometry):
        link_gain(m, (5.0, 1.0), (5.0, 1.0))


def test_acir_co_channel_is_unity():
    assert acir(default_acir_v_v(), 500e6, 500e6) == 1.0


def test_acir_step_rule_between_breakpoints():
    table = AcirTable(offsets_hz=(0.0, 4e6, 8e6), values=(1.0, 0.1, 0.01))
    assert acir(table, 505e6, 500e6) == 0.1
    assert acir(table, 500e6, 500e6 + 3.999e6) == 1.0
    assert acir(table, 500e6, 530e6) == 0.01  # beyond last breakpoint


def test_acir_symmetric():
    rng = np.random.default_rng(5)
    table = default_acir_dtt_v()
    for _ in range(1000):
        fa, fb = rng.uniform(470e6, 530e6, size=2)
        assert acir(table, fa, fb) == acir(table, fb, fa)


def test_acir_table_validation():
    with pytest.raises(InvariantViolation):
        AcirTable(offsets_hz=(1e6,), values=(1.0,))  # no co-channel entry
    with pytest.raises(InvariantViolation):
        AcirTable(offsets_hz=(0.0, 4e6), values=(0.5, 1.0))  # increasing values
    with pytest.raises(InvariantViolation):
        AcirTable(offsets_hz=(0.0,), values=(1.5,))  # above unity


def test_default_tables_shape():
    for table in (default_acir_v_v(), default_acir_dtt_v(), default_acir_v_dtt()):
        assert table.offsets_hz[0] == 0.0
        assert table.values[0] == 1.0
        assert all(0.0 < v <= 1.0 for v in table.values)


def test_dtt_interference_identity_coupling():
    rem = make_rem({1: -60.0}, centers_hz={1: 500e6})
    table = AcirTable(offsets_hz=(0.0,), values=(1.0,))
    assert dtt_interference_at((100.0, 0.0), 500e6, rem, table) \
        == pytest.approx(1e-6, rel=1e-12)


def test_dtt_interference_sums_linear():
    rem = make_rem({1: -60.0, 2: -60.0}, centers_hz={1: 500e6, 2: 516e6})
    table = AcirTable(offsets_hz=(0.0,), values=(0.5,))
    assert dtt_interference_at((100.0, 0.0), 508e6, rem, table) \
        == pytest.approx(1e-6, rel=1e-12)


def test_dtt_interference_empty_set_is_zero():
    rem = RemDatabase([], [], 100.0, (0.0, -500.0), 10, 10, {})
    assert dtt_interference_at((100.0, 0.0), 500e6, rem, default_acir_dtt_v()) == 0.0


def test_dtt_interference_outside_map():
    rem = make_rem({1: -60.0})
    with pytest.raises(PositionOutsideMap):
        dtt_interference_at((1e6, 0.0), 500e6, rem, default_acir_dtt_v())
