"""Propagation and adjacent-channel coupling.

Two parametric path-loss shapes: a dual-slope model for the 5.9 GHz
control channel and a single-slope log-distance model for TVWS V2V links.
Adjacent-channel coupling is a piecewise-constant table over absolute
frequency offset, one table per direction (V->V, DTT->V, V->DTT).

Everything here is a pure function of immutable parameters; shadowing is
an explicit dB draw passed in by the caller, so the module itself is
deterministic and safe to call concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGeometry, InvariantViolation
from .rem import RemDatabase

SPEED_OF_LIGHT = 299_792_458.0


def free_space_loss_db(distance_m: float, freq_hz: float) -> float:
    return 20.0 * math.log10(4.0 * math.pi * distance_m * freq_hz / SPEED_OF_LIGHT)


@dataclass(frozen=True)
class PathlossModel:
    """Dual-slope log-distance loss with optional shadowing sigma.

    Loss below the breakpoint dc uses exponent gamma1 referenced to d0;
    beyond dc the gamma2 slope is added on top, so the curve is continuous
    at dc.  A single-slope model is the special case dc = inf (or
    gamma2 == gamma1).
    """

    variant: str
    d0_m: float
    reference_loss_db: float
    gamma1: float
    gamma2: float
    dc_m: float
    shadowing_sigma_db: float = 0.0

    def __post_init__(self):
        if self.d0_m <= 0:
            raise InvariantViolation("d0 must be > 0")
        if self.dc_m < self.d0_m:
            raise InvariantViolation("dc must be >= d0")
        if self.gamma1 < 0 or self.gamma2 < 0:
            raise InvariantViolation("pathloss exponents must be >= 0")
        if self.shadowing_sigma_db < 0:
            raise InvariantViolation("shadowing sigma must be >= 0")

    def loss_db(self, distance_m: float) -> float:
        d = max(distance_m, self.d0_m)
        loss = self.reference_loss_db + 10.0 * self.gamma1 * math.log10(d / self.d0_m)
        if d > self.dc_m:
            loss += 10.0 * self.gamma2 * math.log10(d / self.dc_m)
        return loss

    @classmethod
    def dual_slope_5g9(
        cls,
        freq_hz: float = 5.9e9,
        d0_m: float = 10.0,
        gamma1: float = 2.1,
        gamma2: float = 3.8,
        dc_m: float = 100.0,
        shadowing_sigma_db: float = 3.0,
    ) -> "PathlossModel":
        return cls(
            variant="dual_slope_5g9",
            d0_m=d0_m,
            reference_loss_db=free_space_loss_db(d0_m, freq_hz),
            gamma1=gamma1,
            gamma2=gamma2,
            dc_m=dc_m,
            shadowing_sigma_db=shadowing_sigma_db,
        )

    @classmethod
    def tvws_log_distance(
        cls,
        freq_hz: float = 500e6,
        d0_m: float = 10.0,
        gamma: float = 2.0,
        shadowing_sigma_db: float = 3.0,
    ) -> "PathlossModel":
        return cls(
            variant="tvws_log_distance",
            d0_m=d0_m,
            reference_loss_db=free_space_loss_db(d0_m, freq_hz),
            gamma1=gamma,
            gamma2=gamma,
            dc_m=math.inf,
            shadowing_sigma_db=shadowing_sigma_db,
        )


def ring_distance(
    a: tuple[float, float], b: tuple[float, float], road_length_m: float | None
) -> float:
    dx = abs(a[0] - b[0])
    if road_length_m is not None:
        dx = min(dx, road_length_m - dx)
    return math.hypot(dx, a[1] - b[1])


def link_gain(
    model: PathlossModel,
    tx_pos: tuple[float, float],
    rx_pos: tuple[float, float],
    shadowing_draw_db: float = 0.0,
    road_length_m: float | None = None,
) -> float:
    """Linear power gain |h|^2 of the tx->rx link (distances below d0 clamp)."""
    d = ring_distance(tx_pos, rx_pos, road_length_m)
    if d == 0.0:
        raise DegenerateGeometry("tx and rx positions coincide")
    loss = model.loss_db(d) + shadowing_draw_db
    return 10.0 ** (-loss / 10.0)


@dataclass(frozen=True)
class AcirTable:
    """Step function of absolute frequency offset, in linear scale.

    Breakpoints are ascending offsets; the value for an offset is the one
    at the greatest breakpoint <= offset, and offsets beyond the last
    breakpoint keep the last value.  A co-channel entry (offset 0) is
    mandatory and values must lie in (0, 1] and be non-increasing.
    """

    offsets_hz: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        if len(self.offsets_hz) != len(self.values) or not self.offsets_hz:
            raise InvariantViolation("ACIR table: offsets/values length mismatch")
        if self.offsets_hz[0] != 0.0:
            raise InvariantViolation("ACIR table: co-channel entry (offset 0) required")
        if any(b <= a for a, b in zip(self.offsets_hz, self.offsets_hz[1:])):
            raise InvariantViolation("ACIR table: offsets must be strictly increasing")
        if any(not (0.0 < v <= 1.0) for v in self.values):
            raise InvariantViolation("ACIR table: values must be in (0, 1]")
        if any(b > a for a, b in zip(self.values, self.values[1:])):
            raise InvariantViolation("ACIR table: values must be non-increasing")

    def offsets_array(self) -> np.ndarray:
        return np.asarray(self.offsets_hz, dtype=np.float64)

    def values_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.float64)


def acir(table: AcirTable, f_a_hz: float, f_b_hz: float) -> float:
    """Linear coupling ratio for the |f_a - f_b| frequency offset."""
    offset = abs(f_a_hz - f_b_hz)
    idx = int(np.searchsorted(table.offsets_hz, offset, side="right")) - 1
    return table.values[idx]


# Default tables.  DTT coupling floors are consistent with the 39.5 dB
# protection scale: one TV channel width away the isolation is 39.5 dB,
# two or more away 60 dB.
TV_CHANNEL_WIDTH_HZ = 8e6


def default_acir_v_v() -> AcirTable:
    return AcirTable(
        offsets_hz=(0.0, TV_CHANNEL_WIDTH_HZ, 2 * TV_CHANNEL_WIDTH_HZ),
        values=(1.0, 1e-2, 1e-3),
    )


def default_acir_dtt_v() -> AcirTable:
    return AcirTable(
        offsets_hz=(0.0, TV_CHANNEL_WIDTH_HZ, 2 * TV_CHANNEL_WIDTH_HZ),
        values=(1.0, 10.0 ** -3.95, 1e-6),
    )


def default_acir_v_dtt() -> AcirTable:
    return AcirTable(
        offsets_hz=(0.0, TV_CHANNEL_WIDTH_HZ, 2 * TV_CHANNEL_WIDTH_HZ),
        values=(1.0, 10.0 ** -3.95, 1e-6),
    )


def dtt_interference_at(
    vehicle_pos: tuple[float, float],
    f_k_hz: float,
    rem: RemDatabase,
    table: AcirTable,
) -> float:
    """DTT-to-vehicle interference in linear mW at the vehicle position.

    Sums the stored per-channel DTT power over all transmitters, weighted
    by the DTT->V coupling at the transmitter/platoon frequency offset.
    Channels below the protection threshold are included: the sum has no
    gamma filter.
    """
    total = 0.0
    for t in rem.transmitters:
        p_mw = rem.lookup_dtt_power_mw(vehicle_pos, t.channel)
        total += p_mw * acir(table, t.center_freq_hz, f_k_hz)
    return total
