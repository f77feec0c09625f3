"""Radio environment map: DTT transmitters, receivers and the received-power grid.

The map is a road-local Cartesian frame (x along the motorway, y
perpendicular).  The DTT power field is a uniform rectangular grid with
nearest-cell lookup and no interpolation; the cell containing a point is
found with the lower-index rule at exact cell boundaries.  A loaded map
is immutable and safe for concurrent reads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvariantViolation, ParseError, PositionOutsideMap, UnknownChannel
from .units import dbm_to_mw


@dataclass(frozen=True)
class DttTransmitter:
    id: int
    x: float
    y: float
    channel: int
    center_freq_hz: float
    bandwidth_hz: float
    eirp_dbm: float

    def __post_init__(self):
        if self.bandwidth_hz <= 0:
            raise InvariantViolation(f"TX {self.id}: bandwidth must be > 0")
        if self.center_freq_hz <= 0:
            raise InvariantViolation(f"TX {self.id}: center frequency must be > 0")


@dataclass(frozen=True)
class DttReceiver:
    id: int
    x: float
    y: float
    channel: int


@dataclass(frozen=True)
class ProtectionParams:
    """DTT protection thresholds.

    gamma_dtt_dbm: minimum power at which a DTT signal counts as protected
    (strict > comparison).  sir_min_db: minimum SIR the DTT reception must
    keep.  worst_case_rx_distance_m: lateral offset of the optional
    synthetic worst-case receiver.
    """

    gamma_dtt_dbm: float = -80.0
    sir_min_db: float = 39.5
    worst_case_rx_distance_m: float = 60.0

    def __post_init__(self):
        if self.worst_case_rx_distance_m <= 0:
            raise InvariantViolation("worst_case_rx_distance must be > 0")


@dataclass
class RemDatabase:
    """In-memory REM: transmitter/receiver records plus the power grid.

    ``grid_power_dbm`` maps channel index -> (nx, ny) array of received DTT
    power.  Cell (ix, iy) covers [origin + i*cell, origin + (i+1)*cell).
    """

    transmitters: list[DttTransmitter]
    receivers: list[DttReceiver]
    cell_size_m: float
    origin: tuple[float, float]
    nx: int
    ny: int
    grid_power_dbm: dict[int, np.ndarray]
    grid_power_mw: dict[int, np.ndarray] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.cell_size_m <= 0:
            raise InvariantViolation("cell_size must be > 0")
        ids = [t.id for t in self.transmitters]
        if len(ids) != len(set(ids)):
            raise InvariantViolation("duplicate transmitter id")
        rids = [r.id for r in self.receivers]
        if len(rids) != len(set(rids)):
            raise InvariantViolation("duplicate receiver id")
        tx_channels = {t.channel for t in self.transmitters}
        for r in self.receivers:
            if r.channel not in tx_channels:
                raise InvariantViolation(
                    f"RX {r.id}: served channel {r.channel} has no transmitter"
                )
        for ch, arr in self.grid_power_dbm.items():
            if arr.shape != (self.nx, self.ny):
                raise InvariantViolation(f"channel {ch}: grid shape mismatch")
            if not np.all(np.isfinite(arr)):
                raise InvariantViolation(f"channel {ch}: non-finite grid power")
        for ch in tx_channels:
            if ch not in self.grid_power_dbm:
                raise InvariantViolation(f"channel {ch}: no grid layer")
        # cache linear-scale grids for the hot paths
        self.grid_power_mw = {
            ch: np.power(10.0, arr / 10.0) for ch, arr in self.grid_power_dbm.items()
        }

    @property
    def channels(self) -> list[int]:
        return sorted(self.grid_power_dbm)

    def channel_center_hz(self, channel: int) -> float:
        for t in self.transmitters:
            if t.channel == channel:
                return t.center_freq_hz
        raise UnknownChannel(f"channel {channel}")

    def cell_index(self, x: float, y: float) -> tuple[int, int]:
        ox, oy = self.origin
        ux = (x - ox) / self.cell_size_m
        uy = (y - oy) / self.cell_size_m
        if ux < 0 or uy < 0 or ux > self.nx or uy > self.ny:
            raise PositionOutsideMap(f"({x}, {y}) outside grid extent")
        # boundary points belong to the lower-index cell
        ix = math.ceil(ux) - 1 if ux > 0 else 0
        iy = math.ceil(uy) - 1 if uy > 0 else 0
        return min(ix, self.nx - 1), min(iy, self.ny - 1)

    def lookup_dtt_power(self, position: tuple[float, float], channel: int) -> float:
        """Stored DTT power (dBm) of the cell containing ``position``."""
        if channel not in self.grid_power_dbm:
            raise UnknownChannel(f"channel {channel}")
        ix, iy = self.cell_index(*position)
        return float(self.grid_power_dbm[channel][ix, iy])

    def lookup_dtt_power_mw(self, position: tuple[float, float], channel: int) -> float:
        if channel not in self.grid_power_mw:
            raise UnknownChannel(f"channel {channel}")
        ix, iy = self.cell_index(*position)
        return float(self.grid_power_mw[channel][ix, iy])

    def protected_channels_at(
        self, position: tuple[float, float], params: ProtectionParams
    ) -> set[tuple[int, int]]:
        """(transmitter id, channel) pairs whose power at ``position`` exceeds Γ.

        The comparison is strict: a stored power exactly at Γ does not count.
        """
        gamma_mw = dbm_to_mw(params.gamma_dtt_dbm)
        out = set()
        for t in self.transmitters:
            if self.lookup_dtt_power_mw(position, t.channel) > gamma_mw:
                out.add((t.id, t.channel))
        return out


def load_rem(path) -> RemDatabase:
    """Parse a REM text file (TX / RX / GRID / CELL records)."""
    transmitters: list[DttTransmitter] = []
    receivers: list[DttReceiver] = []
    grid_header = None
    cells: list[tuple[int, int, int, float]] = []

    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            kind = parts[0].upper()
            try:
                if kind == "TX":
                    if len(parts) != 8:
                        raise ValueError("expected 7 fields after TX")
                    transmitters.append(
                        DttTransmitter(
                            id=int(parts[1]),
                            x=float(parts[2]),
                            y=float(parts[3]),
                            channel=int(parts[4]),
                            center_freq_hz=float(parts[5]),
                            bandwidth_hz=float(parts[6]),
                            eirp_dbm=float(parts[7]),
                        )
                    )
                elif kind == "RX":
                    if len(parts) != 5:
                        raise ValueError("expected 4 fields after RX")
                    receivers.append(
                        DttReceiver(
                            id=int(parts[1]),
                            x=float(parts[2]),
                            y=float(parts[3]),
                            channel=int(parts[4]),
                        )
                    )
                elif kind == "GRID":
                    if len(parts) != 6:
                        raise ValueError("expected 5 fields after GRID")
                    grid_header = (
                        float(parts[1]),
                        (float(parts[2]), float(parts[3])),
                        int(parts[4]),
                        int(parts[5]),
                    )
                elif kind == "CELL":
                    if len(parts) != 5:
                        raise ValueError("expected 4 fields after CELL")
                    cells.append(
                        (int(parts[1]), int(parts[2]), int(parts[3]), float(parts[4]))
                    )
                else:
                    raise ValueError(f"unknown record kind {kind!r}")
            except (ValueError, IndexError) as exc:
                raise ParseError(str(exc), line_no) from exc

    if grid_header is None:
        raise InvariantViolation("REM file has no GRID record")
    cell_size, origin, nx, ny = grid_header

    channels = {t.channel for t in transmitters}
    grids = {ch: np.full((nx, ny), np.nan) for ch in channels}
    for ix, iy, ch, p in cells:
        if ch not in grids:
            raise InvariantViolation(f"CELL references unknown channel {ch}")
        if not (0 <= ix < nx and 0 <= iy < ny):
            raise InvariantViolation(f"CELL ({ix},{iy}) outside grid")
        grids[ch][ix, iy] = p
    for ch, arr in grids.items():
        if np.isnan(arr).any():
            raise InvariantViolation(f"channel {ch}: grid has unset cells")

    return RemDatabase(
        transmitters=transmitters,
        receivers=receivers,
        cell_size_m=cell_size,
        origin=origin,
        nx=nx,
        ny=ny,
        grid_power_dbm=grids,
    )


def save_rem(db: RemDatabase, path) -> None:
    """Write ``db`` back to the text format; reload compares equal field-by-field."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# REM database\n")
        for t in db.transmitters:
            fh.write(
                f"TX {t.id} {t.x:.3f} {t.y:.3f} {t.channel} "
                f"{t.center_freq_hz:.1f} {t.bandwidth_hz:.1f} {t.eirp_dbm:.2f}\n"
            )
        for r in db.receivers:
            fh.write(f"RX {r.id} {r.x:.3f} {r.y:.3f} {r.channel}\n")
        ox, oy = db.origin
        fh.write(f"GRID {db.cell_size_m:.3f} {ox:.3f} {oy:.3f} {db.nx} {db.ny}\n")
        for ch in db.channels:
            arr = db.grid_power_dbm[ch]
            for ix in range(db.nx):
                for iy in range(db.ny):
                    fh.write(f"CELL {ix} {iy} {ch} {arr[ix, iy]:.1f}\n")
