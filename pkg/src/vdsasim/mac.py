"""Packet-level CSMA-CA, reception resolution and DTT SIR sampling.

The medium is a set of concurrently active transmissions per radio, kept
in flat parallel arrays so carrier sensing can run through the compiled
kernels.  Reception outcomes are resolved at transmission end from the
worst interference level seen during the burst; a receiver that was
itself transmitting on the same radio during the overlap loses the
packet outright (half-duplex).

Stations detect a new transmission only after one slot of airtime, which
is what makes same-slot backoff choices collide.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .channel import AcirTable, PathlossModel, acir
from .rem import RemDatabase
from .units import linear_to_db

OUTCOME_DECODED = "decoded"
OUTCOME_SINR_FAIL = "sinr_fail"
OUTCOME_COLLISION_FAIL = "collision_fail"

ROLE_LEADER = "leader_link"
ROLE_PRECEDING = "preceding_link"
ROLE_OTHER = "other"


@dataclass
class RadioConfig:
    """Static per-radio PHY/MAC parameters (radio 0 = CCH, radio 1 = TVWS)."""

    radio_id: int
    center_frequency_hz: float
    bandwidth_hz: float
    bitrate: float
    sensing_threshold_mw: float
    cw_min: int = 15
    cw_max: int = 1023
    slot_time_s: float = 13e-6
    aifs_s: float = 58e-6
    preamble_s: float = 40e-6
    decode_threshold_db: float = 8.0

    def __post_init__(self):
        if self.bitrate <= 0:
            raise ValueError("bitrate must be > 0")
        if self.sensing_threshold_mw <= 0:
            raise ValueError("sensing threshold must be > 0")
        if self.cw_min > self.cw_max:
            raise ValueError("cw_min must be <= cw_max")

    def airtime_s(self, payload_bytes: int) -> float:
        return self.preamble_s + payload_bytes * 8.0 / self.bitrate


@dataclass(frozen=True)
class Message:
    kind: str  # "CAM" | "CACC"
    source: int
    payload_bytes: int
    generation_time: float
    radio_id: int
    msg_id: int = 0


@dataclass
class Transmission:
    message: Message
    src: int
    x: float
    y: float
    power_mw: float
    f_hz: float
    t_start: float
    t_end: float
    slot: int = -1
    tracked: bool = False


@dataclass
class ReceptionRecord:
    message: Message
    receiver: int
    sinr_db: float
    outcome: str
    receiver_role: str


@dataclass
class DttSirSample:
    dtt_receiver: int
    time: float
    sir_db: float
    channel: int


class ActiveSet:
    """Parallel-array view of the in-flight transmissions on one radio."""

    def __init__(self, capacity: int = 64):
        self.n = 0
        self.xs = np.zeros(capacity)
        self.ys = np.zeros(capacity)
        self.pw = np.zeros(capacity)
        self.f = np.zeros(capacity)
        self.starts = np.zeros(capacity)
        self.ends = np.zeros(capacity)
        self.src = np.zeros(capacity, dtype=np.int64)
        self.txs: list[Transmission | None] = [None] * capacity

    def _grow(self):
        cap = 2 * len(self.txs)
        for name in ("xs", "ys", "pw", "f", "starts", "ends"):
            arr = np.zeros(cap)
            arr[: self.n] = getattr(self, name)[: self.n]
            setattr(self, name, arr)
        src = np.zeros(cap, dtype=np.int64)
        src[: self.n] = self.src[: self.n]
        self.src = src
        self.txs.extend([None] * (cap - len(self.txs)))

    def add(self, tx: Transmission) -> None:
        if self.n == len(self.txs):
            self._grow()
        i = self.n
        self.xs[i] = tx.x
        self.ys[i] = tx.y
        self.pw[i] = tx.power_mw
        self.f[i] = tx.f_hz
        self.starts[i] = tx.t_start
        self.ends[i] = tx.t_end
        self.src[i] = tx.src
        self.txs[i] = tx
        tx.slot = i
        self.n += 1

    def remove(self, tx: Transmission) -> None:
        i = tx.slot
        last = self.n - 1
        if i != last:
            for name in ("xs", "ys", "pw", "f", "starts", "ends", "src"):
                arr = getattr(self, name)
                arr[i] = arr[last]
            moved = self.txs[last]
            self.txs[i] = moved
            moved.slot = i
        self.txs[last] = None
        self.n = last
        tx.slot = -1

    def transmitting(self, vehicle: int) -> bool:
        return bool((self.src[: self.n] == vehicle).any())

    def __iter__(self):
        return iter(self.txs[: self.n])


@dataclass
class CsmaState:
    """Per-(station, radio) access state; transitions driven by the engine."""

    queue: deque = field(default_factory=deque)
    queue_limit: int = 8
    pending: bool = False  # an attempt or tx-start event is scheduled
    busy_streak: int = 0
    drops: int = 0

    def enqueue(self, msg: Message) -> Message | None:
        """Queue a message; returns the dropped one on overflow."""
        dropped = None
        if len(self.queue) >= self.queue_limit:
            dropped = self.queue.popleft()
            self.drops += 1
        self.queue.append(msg)
        return dropped


@dataclass
class RadioEnv:
    """Propagation context shared by all senses on one radio."""

    pathloss: PathlossModel
    acir_offsets: np.ndarray
    acir_values: np.ndarray
    shadow_seed: int
    shadow_sigma_db: float
    noise_mw: float
    road_length_m: float

    @classmethod
    def build(cls, pathloss: PathlossModel, table: AcirTable, shadow_seed: int,
              noise_mw: float, road_length_m: float) -> "RadioEnv":
        return cls(
            pathloss=pathloss,
            acir_offsets=np.asarray(table.offsets_hz, dtype=np.float64),
            acir_values=np.asarray(table.values, dtype=np.float64),
            shadow_seed=shadow_seed,
            shadow_sigma_db=pathloss.shadowing_sigma_db,
            noise_mw=noise_mw,
            road_length_m=road_length_m,
        )


def sense_channel(
    active: ActiveSet,
    env: RadioEnv,
    rx_x: float,
    rx_y: float,
    rx_id: int,
    rx_f: float,
    t: float,
    detect_lag_s: float,
    period: int,
    gamma_mw: float,
    dtt_mw: float = 0.0,
    statistic_scale: float = 0.0,
    z: float = 0.0,
) -> tuple[bool, float, float, float]:
    """Energy-detection carrier sense at one position.

    Returns (busy, measured_mw, max_end_strong, min_end_any).  With
    statistic_scale > 0 the measurement carries the finite-sample noise
    of an N_s-sample energy detector: measured = power*(1 + z*scale).
    """
    pl = env.pathloss
    total, max_end_strong, min_end_any = _kernels.sense(
        active.n, active.xs, active.ys, active.pw, active.f,
        active.starts, active.ends, active.src,
        t, detect_lag_s, rx_x, rx_y, rx_id, rx_f, rx_id,
        env.road_length_m, pl.d0_m, pl.reference_loss_db,
        pl.gamma1, pl.gamma2, pl.dc_m,
        env.shadow_sigma_db, env.shadow_seed, period,
        env.acir_offsets, env.acir_values, gamma_mw,
    )
    measured = total + dtt_mw + env.noise_mw
    if statistic_scale > 0.0:
        measured *= 1.0 + z * statistic_scale
    return measured > gamma_mw, measured, max_end_strong, min_end_any


def link_gain_shadowed(env: RadioEnv, tx_id: int, rx_id: int,
                       tx_pos, rx_pos, period: int) -> float:
    pl = env.pathloss
    g = _kernels.path_gain(
        tx_pos[0] - rx_pos[0], tx_pos[1] - rx_pos[1], env.road_length_m,
        pl.d0_m, pl.reference_loss_db, pl.gamma1, pl.gamma2, pl.dc_m,
    )
    sh = _kernels.shadow_db(env.shadow_seed, tx_id, rx_id, period,
                            env.shadow_sigma_db)
    return g * 10.0 ** (-sh / 10.0)


class ReceptionTracker:
    """Running worst-case interference per tracked (transmission, receiver).

    Interference only has to be followed for transmissions whose receptions
    feed the metrics; everything else contributes as an interferer.  For a
    tracked transmission the maximum of the interference sum over the burst
    decides the SINR, because departures only lower the sum.
    """

    def __init__(self, env_by_radio: dict[int, RadioEnv],
                 decode_threshold_db: float):
        self.envs = env_by_radio
        self.decode_threshold = 10.0 ** (decode_threshold_db / 10.0)
        # tx -> state dict
        self.states: dict[int, dict] = {}
        self._next_key = 0

    def on_tracked_start(
        self,
        tx: Transmission,
        receivers: list[tuple[int, float, float, str]],
        active: ActiveSet,
        baseline_mw: list[float],
        period: int,
    ) -> int:
        """Begin tracking tx toward (vehicle, x, y, role) receivers.

        baseline_mw holds per-receiver noise + DTT interference.  The
        current active set (minus tx itself) forms the starting
        interference level; receivers already transmitting are doomed.
        """
        env = self.envs[tx.message.radio_id]
        n_rx = len(receivers)
        cur = np.array(baseline_mw, dtype=np.float64)
        doomed = [False] * n_rx
        for other in active:
            if other is tx:
                continue
            for i, (rid, rx_x, rx_y, _role) in enumerate(receivers):
                if other.src == rid:
                    doomed[i] = True
                    continue
                cur[i] += self._contribution(env, other, rid, rx_x, rx_y,
                                             tx.f_hz, period)
        key = self._next_key
        self._next_key += 1
        self.states[key] = {
            "tx": tx,
            "receivers": receivers,
            "cur": cur,
            "max": cur.copy(),
            "doomed": doomed,
            "contrib": {},  # interferer key id -> per-receiver array
            "period": period,
        }
        return key

    @staticmethod
    def _contribution(env: RadioEnv, other: Transmission, rid: int,
                      rx_x: float, rx_y: float, victim_f: float,
                      period: int) -> float:
        g = link_gain_shadowed(env, other.src, rid, (other.x, other.y),
                               (rx_x, rx_y), period)
        a = _kernels.acir_lookup(env.acir_offsets, env.acir_values,
                                 abs(other.f_hz - victim_f))
        return other.power_mw * g * a

    def on_any_start(self, new_tx: Transmission) -> None:
        radio = new_tx.message.radio_id
        env = self.envs[radio]
        for key, st in self.states.items():
            tx = st["tx"]
            if tx is new_tx or tx.message.radio_id != radio:
                continue
            adds = np.zeros(len(st["receivers"]))
            for i, (rid, rx_x, rx_y, _role) in enumerate(st["receivers"]):
                if new_tx.src == rid:
                    st["doomed"][i] = True
                    continue
                adds[i] = self._contribution(env, new_tx, rid, rx_x, rx_y,
                                             tx.f_hz, st["period"])
            st["cur"] += adds
            np.maximum(st["max"], st["cur"], out=st["max"])
            st["contrib"][id(new_tx)] = adds

    def on_any_end(self, ended: Transmission) -> None:
        k = id(ended)
        for st in self.states.values():
            adds = st["contrib"].pop(k, None)
            if adds is not None:
                st["cur"] -= adds

    def on_tracked_end(self, key: int, baseline_mw: list[float]) -> list[ReceptionRecord]:
        st = self.states.pop(key)
        tx = st["tx"]
        env = self.envs[tx.message.radio_id]
        out = []
        for i, (rid, rx_x, rx_y, role) in enumerate(st["receivers"]):
            g = link_gain_shadowed(env, tx.src, rid, (tx.x, tx.y),
                                   (rx_x, rx_y), st["period"])
            signal = tx.power_mw * g
            sinr = signal / st["max"][i]
            sinr_db = linear_to_db(sinr)
            if st["doomed"][i]:
                outcome = OUTCOME_COLLISION_FAIL
            elif sinr >= self.decode_threshold:
                outcome = OUTCOME_DECODED
            elif signal / baseline_mw[i] >= self.decode_threshold:
                outcome = OUTCOME_COLLISION_FAIL
            else:
                outcome = OUTCOME_SINR_FAIL
            out.append(ReceptionRecord(tx.message, rid, sinr_db, outcome, role))
        return out


def sample_dtt_sir(
    rem: RemDatabase,
    active_tvws: ActiveSet,
    env: RadioEnv,
    acir_v_dtt: AcirTable,
    t: float,
    period: int,
    receiver_id_offset: int = 1 << 20,
) -> list[DttSirSample]:
    """SIR at every REM receiver versus the currently active TVWS bursts.

    No samples are produced when nothing is on the air.  Receiver shadow
    identities are offset so they never collide with vehicle ids.
    """
    if active_tvws.n == 0:
        return []
    out = []
    for r in rem.receivers:
        center = rem.channel_center_hz(r.channel)
        interference = 0.0
        for tx in active_tvws:
            g = link_gain_shadowed(env, tx.src, r.id + receiver_id_offset,
                                   (tx.x, tx.y), (r.x, r.y), period)
            interference += tx.power_mw * g * acir(acir_v_dtt, tx.f_hz, center)
        if interference <= 0.0:
            continue
        p_dtt = rem.lookup_dtt_power_mw((r.x, r.y), r.channel)
        sir_db = linear_to_db(p_dtt / interference)
        if not math.isfinite(sir_db):
            continue
        out.append(DttSirSample(r.id, t, sir_db, r.channel))
    return out
