"""Bundled synthetic radio-environment maps for the ring-road scenarios.

Two DTT stations sit far off-road on 495 and 517 MHz.  The default map
alternates the channel-1 field strength along the road in fixed-length
patches while channel 2 stays flat, and places protection receivers on
both sides of the road.  The stressed variant silences channel 1 on the
road entirely (so co-channel frequencies look maximally attractive to a
selector that ignores receiver protection) and biases the receiver
population toward channel 1.
"""

from __future__ import annotations

import numpy as np

from .rem import DttReceiver, DttTransmitter, RemDatabase

CELL_SIZE_M = 100.0
ORIGIN_Y_M = -2700.0
GRID_ROWS = 55
# Rows covering y in [-100, 100): all lanes, including the y = 0 cell
# boundary, which the lower-index rule assigns to the row below.
ROAD_ROWS = (26, 27)
RECEIVER_OFFSET_M = 2500.0
PATCH_LENGTH_M = 300.0

CH1_CENTER_HZ = 495e6
CH2_CENTER_HZ = 517e6
OFF_ROAD_DBM = -60.0


def _transmitters() -> list[DttTransmitter]:
    return [
        DttTransmitter(id=1, x=2500.0, y=30000.0, channel=1,
                       center_freq_hz=CH1_CENTER_HZ, bandwidth_hz=8e6, eirp_dbm=85.0),
        DttTransmitter(id=2, x=2500.0, y=-30000.0, channel=2,
                       center_freq_hz=CH2_CENTER_HZ, bandwidth_hz=8e6, eirp_dbm=85.0),
    ]


def _receivers(road_length_m: float, ch1_count: int) -> list[DttReceiver]:
    """Ten receivers alternating road side; the first ch1_count use channel 1."""
    out = []
    step = road_length_m / 10.0
    for i in range(10):
        out.append(
            DttReceiver(
                id=i + 1,
                x=step / 2.0 + i * step,
                y=RECEIVER_OFFSET_M if i % 2 == 0 else -RECEIVER_OFFSET_M,
                channel=1 if i < ch1_count else 2,
            )
        )
    return out


def _base_grids(nx: int) -> dict[int, np.ndarray]:
    return {
        1: np.full((nx, GRID_ROWS), OFF_ROAD_DBM),
        2: np.full((nx, GRID_ROWS), OFF_ROAD_DBM),
    }


def build_default_rem(road_length_m: float = 5000.0) -> RemDatabase:
    """Patchy channel-1 road field, flat channel 2, receivers 5/5."""
    nx = int(round(road_length_m / CELL_SIZE_M))
    grids = _base_grids(nx)
    for ix in range(nx):
        patch = int((ix * CELL_SIZE_M) // PATCH_LENGTH_M) % 2
        for row in ROAD_ROWS:
            grids[1][ix, row] = -79.5 if patch == 0 else -70.5
            grids[2][ix, row] = -75.0
    rx = _receivers(road_length_m, ch1_count=5)
    # interleave channels so both road sides carry both channels
    rx = [DttReceiver(id=r.id, x=r.x, y=r.y, channel=1 if (r.id % 2) else 2)
          for r in rx]
    return RemDatabase(
        transmitters=_transmitters(),
        receivers=rx,
        cell_size_m=CELL_SIZE_M,
        origin=(0.0, ORIGIN_Y_M),
        nx=nx,
        ny=GRID_ROWS,
        grid_power_dbm=grids,
    )


def build_stressed_rem(road_length_m: float = 5000.0) -> RemDatabase:
    """Channel 1 silent on the road, channel 2 loud; receivers mostly ch 1."""
    nx = int(round(road_length_m / CELL_SIZE_M))
    grids = _base_grids(nx)
    for row in ROAD_ROWS:
        grids[1][:, row] = -150.0
        grids[2][:, row] = -45.0
    return RemDatabase(
        transmitters=_transmitters(),
        receivers=_receivers(road_length_m, ch1_count=8),
        cell_size_m=CELL_SIZE_M,
        origin=(0.0, ORIGIN_Y_M),
        nx=nx,
        ny=GRID_ROWS,
        grid_power_dbm=grids,
    )
