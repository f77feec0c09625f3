"""Shared fixtures: small hand-built radio environment maps."""

import numpy as np
import pytest

from vdsasim.rem import DttReceiver, DttTransmitter, ProtectionParams, RemDatabase


def make_rem(
    power_dbm: dict,
    receivers=(),
    cell_size_m: float = 100.0,
    origin=(0.0, -500.0),
    nx: int = 50,
    ny: int = 10,
    centers_hz=None,
):
    """Uniform-power REM with one tower per channel.

    ``power_dbm`` maps channel index -> stored power; ``centers_hz``
    optionally overrides the per-channel center frequencies.
    """
    centers_hz = centers_hz or {}
    towers = [
        DttTransmitter(ch, 2000.0, 30000.0, ch,
                       centers_hz.get(ch, 470e6 + 8e6 * ch), 8e6, 80.0)
        for ch in power_dbm
    ]
    grids = {
        ch: np.full((nx, ny), p, dtype=float) for ch, p in power_dbm.items()
    }
    return RemDatabase(towers, list(receivers), cell_size_m, origin, nx, ny, grids)


@pytest.fixture
def quiet_rem():
    """Both channels far below the protection limit everywhere."""
    return make_rem({1: -120.0, 2: -120.0})


@pytest.fixture
def protection():
    return ProtectionParams()
