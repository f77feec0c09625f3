"""Discrete-event simulation run: mobility, periodic allocation, dual-radio
CSMA traffic, and metric aggregation.

Events are processed in (timestamp, event id) order; ids increase
monotonically with scheduling order, which makes a run a pure function of
its configuration and seed.  Background vehicles only load the control
channel; reception bookkeeping is kept for platoon-sourced messages,
whose intended receivers are the other members of the same platoon.
"""

from __future__ import annotations

import dataclasses
import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from . import mobility
from .allocator import AllocationInput, PlatoonSnapshot, allocate
from .channel import (
    PathlossModel,
    default_acir_dtt_v,
    default_acir_v_dtt,
    default_acir_v_v,
    dtt_interference_at,
)
from .errors import ConfigError, NoData
from .mac import (
    ActiveSet,
    CsmaState,
    Message,
    RadioConfig,
    RadioEnv,
    ReceptionTracker,
    Transmission,
    OUTCOME_COLLISION_FAIL,
    OUTCOME_DECODED,
    OUTCOME_SINR_FAIL,
    ROLE_LEADER,
    ROLE_OTHER,
    ROLE_PRECEDING,
    sample_dtt_sir,
    sense_channel,
)
from .rem import ProtectionParams, RemDatabase, load_rem
from .scenario import build_default_rem, build_stressed_rem
from .units import dbm_to_mw

KIND_CAM = "CAM"
KIND_CACC = "CACC"

# disposition column indices in the reception counters
COL_INTENDED = 0
COL_DECODED = 1
COL_SINR_FAIL = 2
COL_COLLISION_FAIL = 3
COL_DROPPED = 4
COL_UNRESOLVED = 5

_EV_MOBILITY = 0
_EV_ALLOC = 1
_EV_GEN = 2
_EV_ATTEMPT = 3
_EV_TXSTART = 4
_EV_TXEND = 5


@dataclass
class SimulationConfig:
    use_case: str = "c"
    duration_s: float = 140.0
    warmup_s: float = 5.0
    allocation_period_s: float = 1.0
    mobility_dt_s: float = 0.05
    seed: int = 1

    road_length_m: float = 10000.0
    lane_width_m: float = 3.5
    background_density: float = 50.0  # cars/km/lane
    background_lanes: tuple = (1, 2, 3)
    background_speed_kmh: float = 110.0

    platoon_count: int = 2
    platoon_size: int = 8
    platoon_gap_m: float = 10.0
    platoon_standoff_m: float = 50.0
    platoon_lane: int = 0
    platoon_spacing_m: float = 2500.0
    jammer_v_high_kmh: float = 130.0
    jammer_v_low_kmh: float = 100.0
    jammer_cycle_s: float = 30.0

    rem_kind: str = "default"  # default | stressed | file
    rem_path: str | None = None

    freq_start_hz: float = 490e6
    freq_stop_hz: float = 522e6
    freq_step_hz: float = 1e6

    gamma_dtt_dbm: float = -80.0
    sir_min_db: float = 39.5
    inject_worst_case_rx: bool = False

    p_max_dbm: float = 23.0
    noise_dbm: float = -95.0
    decode_threshold_db: float = 8.0

    cam_bytes: int = 300
    cacc_bytes: int = 200
    cam_rate_a_hz: float = 10.0
    cam_rate_bc_hz: float = 5.0
    cacc_rate_hz: float = 5.0
    background_cam_rate_hz: float = 10.0

    cch_bitrate: float = 6e6
    tvws_bitrate: float = 6e6
    slot_time_s: float = 13e-6
    aifs_s: float = 58e-6
    cw_min: int = 15
    preamble_s: float = 40e-6
    cch_gamma_dbm: float = -85.0

    sensing_samples: int = 100
    target_pfa: float = 0.01

    shadow_sigma_5g9_db: float = 3.0
    shadow_sigma_tvws_db: float = 3.0

    queue_limit: int = 8
    patience_cap: int = 64

    def validate(self) -> None:
        if self.use_case not in ("a", "b", "c"):
            raise ConfigError(f"unknown use case {self.use_case!r}")
        if self.duration_s <= 0:
            raise ConfigError("duration must be > 0")
        if self.allocation_period_s <= 0:
            raise ConfigError("allocation period must be > 0")
        if self.mobility_dt_s <= 0:
            raise ConfigError("mobility step must be > 0")
        if self.freq_step_hz <= 0:
            raise ConfigError("frequency step must be > 0")
        if self.freq_stop_hz < self.freq_start_hz:
            raise ConfigError("frequency range is empty")
        if self.rem_kind not in ("default", "stressed", "file"):
            raise ConfigError(f"unknown rem kind {self.rem_kind!r}")
        if self.rem_kind == "file" and not self.rem_path:
            raise ConfigError("rem.kind = file requires rem.path")
        if self.platoon_size < 2:
            raise ConfigError("platoon size must be >= 2")
        if self.warmup_s >= self.duration_s and self.duration_s > 1.0:
            raise ConfigError("warmup must be shorter than the run")

    def candidate_frequencies(self) -> tuple[float, ...]:
        n = int(math.floor((self.freq_stop_hz - self.freq_start_hz)
                           / self.freq_step_hz + 1e-9)) + 1
        return tuple(self.freq_start_hz + i * self.freq_step_hz for i in range(n))


@dataclass
class MetricsStore:
    counters: dict = field(default_factory=dict)
    dtt_samples: dict = field(default_factory=dict)
    band_changes: list = field(default_factory=list)
    busy: dict = field(default_factory=dict)
    generated: dict = field(default_factory=dict)
    background_generated: int = 0
    allocations: int = 0
    alloc_log: list = field(default_factory=list)
    drops: dict = field(default_factory=dict)

    def bump(self, kind: str, role: str, pos: int, col: int, by: int = 1) -> None:
        row = self.counters.get((kind, role, pos))
        if row is None:
            row = [0, 0, 0, 0, 0, 0]
            self.counters[(kind, role, pos)] = row
        row[col] += by


def reception_ratio(metrics: MetricsStore, kind: str, source_role: str,
                    position: int) -> float:
    row = metrics.counters.get((kind, source_role, position))
    if row is None or row[COL_INTENDED] == 0:
        raise NoData(f"no receptions recorded for {(kind, source_role, position)}")
    return row[COL_DECODED] / row[COL_INTENDED]


def sir_ecdf(metrics: MetricsStore, channel: int) -> list[tuple[float, float]]:
    samples = metrics.dtt_samples.get(channel)
    if not samples:
        raise NoData(f"no DTT SIR samples for channel {channel}")
    xs = sorted(samples)
    n = len(xs)
    return [(x, (i + 1) / n) for i, x in enumerate(xs)]


def _roles(src: int, rx: int, leader: int) -> list[str]:
    roles = []
    if src == leader:
        roles.append("leader")
    if rx == src + 1:
        roles.append("preceding")
    if not roles:
        roles.append("other")
    return roles


def _build_rem(cfg: SimulationConfig) -> RemDatabase:
    if cfg.rem_kind == "default":
        return build_default_rem(cfg.road_length_m)
    if cfg.rem_kind == "stressed":
        return build_stressed_rem(cfg.road_length_m)
    return load_rem(cfg.rem_path)


def build_allocation_input_from_config(
    cfg: SimulationConfig, max_frequencies: int | None = None
) -> AllocationInput:
    """One-shot allocation input for the configured scenario at t = 0.

    Used by the allocator verification command; platoons sit at their
    initial positions and the candidate list may be truncated to keep an
    exhaustive oracle cheap.
    """
    cfg.validate()
    rem = _build_rem(cfg)
    freqs = cfg.candidate_frequencies()
    if max_frequencies is not None:
        freqs = freqs[:max_frequencies]
    pl_tvws = dataclasses.replace(
        PathlossModel.tvws_log_distance(), shadowing_sigma_db=cfg.shadow_sigma_tvws_db
    )
    snaps = []
    vid = 0
    y = cfg.platoon_lane * cfg.lane_width_m
    for k in range(cfg.platoon_count):
        x0 = k * cfg.platoon_spacing_m
        positions = tuple(
            ((x0 - i * cfg.platoon_gap_m) % cfg.road_length_m, y)
            for i in range(cfg.platoon_size)
        )
        snaps.append(PlatoonSnapshot(positions, tuple(range(vid, vid + cfg.platoon_size))))
        vid += cfg.platoon_size
    return AllocationInput(
        platoons=tuple(snaps),
        rem=rem,
        candidate_frequencies_hz=freqs,
        protection=ProtectionParams(
            gamma_dtt_dbm=cfg.gamma_dtt_dbm, sir_min_db=cfg.sir_min_db
        ),
        p_max_dbm=cfg.p_max_dbm,
        noise_mw=dbm_to_mw(cfg.noise_dbm),
        acir_v_v=default_acir_v_v(),
        acir_dtt_v=default_acir_dtt_v(),
        acir_v_dtt=default_acir_v_dtt(),
        pathloss=pl_tvws,
        target_pfa=cfg.target_pfa,
        sensing_samples=cfg.sensing_samples,
        power_control=(cfg.use_case == "c"),
        road_length_m=cfg.road_length_m,
        inject_worst_case_rx=cfg.inject_worst_case_rx,
    )


def run(cfg: SimulationConfig) -> MetricsStore:
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    rem = _build_rem(cfg)
    metrics = MetricsStore()

    pl_cch = dataclasses.replace(
        PathlossModel.dual_slope_5g9(), shadowing_sigma_db=cfg.shadow_sigma_5g9_db
    )
    pl_tvws = dataclasses.replace(
        PathlossModel.tvws_log_distance(), shadowing_sigma_db=cfg.shadow_sigma_tvws_db
    )
    acir_vv = default_acir_v_v()
    acir_dv = default_acir_dtt_v()
    acir_vd = default_acir_v_dtt()
    noise_mw = dbm_to_mw(cfg.noise_dbm)
    protection = ProtectionParams(
        gamma_dtt_dbm=cfg.gamma_dtt_dbm, sir_min_db=cfg.sir_min_db
    )
    freqs = cfg.candidate_frequencies()

    jam = mobility.JammerProfile(
        v_high_mps=cfg.jammer_v_high_kmh / 3.6,
        v_low_mps=cfg.jammer_v_low_kmh / 3.6,
        cycle_duration_s=cfg.jammer_cycle_s,
    )
    pcs = [
        mobility.PlatoonConfig(
            size=cfg.platoon_size,
            intra_gap_m=cfg.platoon_gap_m,
            standoff_m=cfg.platoon_standoff_m,
            lane=cfg.platoon_lane,
            direction=1,
            initial_x_m=k * cfg.platoon_spacing_m,
        )
        for k in range(cfg.platoon_count)
    ]
    world = mobility.build_world(
        pcs, jam, cfg.background_density, list(cfg.background_lanes),
        cfg.road_length_m, cfg.lane_width_m, rng,
        background_speed_mps=cfg.background_speed_kmh / 3.6,
    )
    n = world.n_vehicles
    members = [world.platoon_members(k) for k in range(cfg.platoon_count)]
    member_set = set(int(i) for m in members for i in m)
    leader_of = {}
    platoon_of_member = {}
    for k, m in enumerate(members):
        for i in m:
            leader_of[int(i)] = int(m[0])
            platoon_of_member[int(i)] = k
    metrics.band_changes = [0] * cfg.platoon_count

    cch = RadioConfig(
        radio_id=0, center_frequency_hz=5.9e9, bandwidth_hz=10e6,
        bitrate=cfg.cch_bitrate, sensing_threshold_mw=dbm_to_mw(cfg.cch_gamma_dbm),
        cw_min=cfg.cw_min, slot_time_s=cfg.slot_time_s, aifs_s=cfg.aifs_s,
        preamble_s=cfg.preamble_s, decode_threshold_db=cfg.decode_threshold_db,
    )
    tvws = RadioConfig(
        radio_id=1, center_frequency_hz=freqs[0], bandwidth_hz=8e6,
        bitrate=cfg.tvws_bitrate, sensing_threshold_mw=noise_mw,
        cw_min=cfg.cw_min, slot_time_s=cfg.slot_time_s, aifs_s=cfg.aifs_s,
        preamble_s=cfg.preamble_s, decode_threshold_db=cfg.decode_threshold_db,
    )
    env0 = RadioEnv.build(pl_cch, acir_vv, cfg.seed * 4 + 1, noise_mw,
                          cfg.road_length_m)
    env1 = RadioEnv.build(pl_tvws, acir_vv, cfg.seed * 4 + 2, noise_mw,
                          cfg.road_length_m)
    envs = {0: env0, 1: env1}
    active = {0: ActiveSet(), 1: ActiveSet()}
    tracker = ReceptionTracker(envs, cfg.decode_threshold_db)

    states0 = [CsmaState(queue_limit=cfg.queue_limit) for _ in range(n)]
    states1 = {i: CsmaState(queue_limit=cfg.queue_limit) for i in member_set}
    states = {0: states0, 1: states1}
    radios = {0: cch, 1: tvws}

    p_max_mw = dbm_to_mw(cfg.p_max_dbm)
    cur_f1 = np.full(n, freqs[0])
    pw1 = np.full(n, p_max_mw)
    gamma1 = np.full(n, tvws.sensing_threshold_mw)
    dtt1 = np.zeros(n)
    cur_freq_platoon: list[float | None] = [None] * cfg.platoon_count

    statistic_scale = math.sqrt(2.0 / cfg.sensing_samples)
    radio1_on = cfg.use_case in ("b", "c")
    heap: list = []
    eid = 0

    def push(t, code, payload):
        nonlocal eid
        heapq.heappush(heap, (t, eid, code, payload))
        eid += 1

    # --- initial schedule -------------------------------------------------
    if radio1_on:
        push(0.0, _EV_ALLOC, None)
    push(cfg.mobility_dt_s, _EV_MOBILITY, None)

    msg_counter = 0
    gen_plan = {}  # (vehicle, kind) -> (radio, rate, payload)
    for v in range(n):
        if world.kind[v] == mobility.KIND_JAMMER:
            continue
        if v in member_set:
            cam_rate = cfg.cam_rate_a_hz if cfg.use_case == "a" else cfg.cam_rate_bc_hz
            gen_plan[(v, KIND_CAM)] = (0, cam_rate, cfg.cam_bytes)
            if radio1_on:
                gen_plan[(v, KIND_CACC)] = (1, cfg.cacc_rate_hz, cfg.cacc_bytes)
        else:
            gen_plan[(v, KIND_CAM)] = (0, cfg.background_cam_rate_hz, cfg.cam_bytes)
    for (v, kind), (_radio, rate, _b) in sorted(gen_plan.items()):
        if rate <= 0:
            continue
        push(float(rng.uniform(0.0, 1.0 / rate)), _EV_GEN, (v, kind))

    def record_dispositions(msg: Message, col: int) -> None:
        if msg.generation_time < cfg.warmup_s:
            return
        src = msg.source
        k = platoon_of_member[src]
        m = members[k]
        leader = int(m[0])
        for rx in m:
            rx = int(rx)
            if rx == src:
                continue
            pos = rx - leader
            for role in _roles(src, rx, leader):
                metrics.bump(msg.kind, role, pos, col)

    def schedule_attempt(state: CsmaState, t: float, radio: int, v: int) -> None:
        state.pending = True
        push(t, _EV_ATTEMPT, (v, radio))

    def defer(state: CsmaState, t: float, radio: int, v: int,
              max_end_strong: float) -> None:
        state.busy_streak += 1
        r = radios[radio]
        base = max_end_strong if max_end_strong > t else t
        window = r.cw_min * r.slot_time_s * min(state.busy_streak, cfg.patience_cap)
        push(base + r.aifs_s + float(rng.random()) * window, _EV_ATTEMPT, (v, radio))

    def do_sense(v: int, radio: int, t: float, lag: float):
        env = envs[radio]
        x = float(world.x[v])
        y = float(world.lane[v]) * cfg.lane_width_m
        period = int(t // cfg.allocation_period_s)
        if radio == 1:
            return sense_channel(
                active[1], env, x, y, v, float(cur_f1[v]), t, lag, period,
                float(gamma1[v]), dtt_mw=float(dtt1[v]),
                statistic_scale=statistic_scale,
                z=float(rng.standard_normal()),
            )
        return sense_channel(
            active[0], env, x, y, v, cch.center_frequency_hz, t, lag, period,
            cch.sensing_threshold_mw,
        )

    def begin_tx(v: int, radio: int, t: float) -> None:
        state = states[radio][v]
        msg = state.queue.popleft()
        r = radios[radio]
        dur = r.airtime_s(msg.payload_bytes)
        x = float(world.x[v])
        y = float(world.lane[v]) * cfg.lane_width_m
        if radio == 1:
            f = float(cur_f1[v])
            pw = float(pw1[v])
        else:
            f = r.center_frequency_hz
            pw = p_max_mw
        tx = Transmission(msg, v, x, y, pw, f, t, t + dur)
        tracker.on_any_start(tx)
        active[radio].add(tx)
        period = int(t // cfg.allocation_period_s)
        key = -1
        baseline = None
        if v in member_set:
            tx.tracked = True
            k = platoon_of_member[v]
            m = members[k]
            leader = int(m[0])
            receivers = []
            baseline = []
            for rx in m:
                rx = int(rx)
                if rx == v:
                    continue
                if v == leader:
                    role = ROLE_LEADER
                elif rx == v + 1:
                    role = ROLE_PRECEDING
                else:
                    role = ROLE_OTHER
                receivers.append(
                    (rx, float(world.x[rx]),
                     float(world.lane[rx]) * cfg.lane_width_m, role)
                )
                baseline.append(
                    noise_mw + (float(dtt1[rx]) if radio == 1 else 0.0)
                )
            key = tracker.on_tracked_start(tx, receivers, active[radio],
                                           baseline, period)
        if radio == 1 and t >= cfg.warmup_s:
            for s in sample_dtt_sir(rem, active[1], env1, acir_vd, t, period):
                metrics.dtt_samples.setdefault(s.channel, []).append(s.sir_db)
        push(t + dur, _EV_TXEND, (tx, key, baseline))

    def run_alloc(t: float) -> None:
        snaps = []
        for k in range(cfg.platoon_count):
            m = members[k]
            snaps.append(
                PlatoonSnapshot(
                    positions=tuple(
                        (float(world.x[i]),
                         float(world.lane[i]) * cfg.lane_width_m)
                        for i in m
                    ),
                    vehicle_ids=tuple(int(i) for i in m),
                )
            )
        inp = AllocationInput(
            platoons=tuple(snaps),
            rem=rem,
            candidate_frequencies_hz=freqs,
            protection=protection,
            p_max_dbm=cfg.p_max_dbm,
            noise_mw=noise_mw,
            acir_v_v=acir_vv,
            acir_dtt_v=acir_dv,
            acir_v_dtt=acir_vd,
            pathloss=pl_tvws,
            target_pfa=cfg.target_pfa,
            sensing_samples=cfg.sensing_samples,
            power_control=(cfg.use_case == "c"),
            road_length_m=cfg.road_length_m,
            inject_worst_case_rx=cfg.inject_worst_case_rx,
        )
        decision = allocate(inp)
        chosen = []
        for k, pal in enumerate(decision.platoons):
            f_new = pal.frequency_hz
            chosen.append(f_new)
            if (cur_freq_platoon[k] is not None
                    and f_new != cur_freq_platoon[k] and t >= cfg.warmup_s):
                metrics.band_changes[k] += 1
            cur_freq_platoon[k] = f_new
            for i, va in zip(members[k], pal.vehicles):
                i = int(i)
                cur_f1[i] = f_new
                pw1[i] = min(dbm_to_mw(va.power_cap_dbm), p_max_mw)
                gamma1[i] = va.sensing_threshold_mw
                pos = (float(world.x[i]),
                       float(world.lane[i]) * cfg.lane_width_m)
                dtt1[i] = dtt_interference_at(pos, f_new, rem, acir_dv)
        metrics.allocations += 1
        metrics.alloc_log.append((t, tuple(chosen)))

    # --- event loop -------------------------------------------------------
    while heap:
        t, _eid, code, payload = heapq.heappop(heap)
        if t > cfg.duration_s:
            break

        if code == _EV_ATTEMPT:
            v, radio = payload
            state = states[radio][v]
            if not state.queue:
                state.pending = False
                continue
            r = radios[radio]
            busy, _m, max_end_strong, _me = do_sense(v, radio, t, r.slot_time_s)
            if busy:
                defer(state, t, radio, v, max_end_strong)
            else:
                state.busy_streak = 0
                k = int(rng.integers(0, r.cw_min + 1))
                push(t + k * r.slot_time_s, _EV_TXSTART, (v, radio))
            continue

        if code == _EV_TXSTART:
            v, radio = payload
            state = states[radio][v]
            if not state.queue:
                state.pending = False
                continue
            r = radios[radio]
            busy, _m, max_end_strong, _me = do_sense(v, radio, t, r.slot_time_s)
            if busy:
                defer(state, t, radio, v, max_end_strong)
            else:
                begin_tx(v, radio, t)
            continue

        if code == _EV_TXEND:
            tx, key, baseline = payload
            radio = tx.message.radio_id
            active[radio].remove(tx)
            tracker.on_any_end(tx)
            if tx.tracked:
                for rec in tracker.on_tracked_end(key, baseline):
                    if rec.message.generation_time >= cfg.warmup_s:
                        src = rec.message.source
                        k = platoon_of_member[src]
                        leader = int(members[k][0])
                        pos = rec.receiver - leader
                        col = {
                            OUTCOME_DECODED: COL_DECODED,
                            OUTCOME_SINR_FAIL: COL_SINR_FAIL,
                            OUTCOME_COLLISION_FAIL: COL_COLLISION_FAIL,
                        }[rec.outcome]
                        for role in _roles(src, rec.receiver, leader):
                            metrics.bump(rec.message.kind, role, pos, col)
            state = states[radio][tx.src]
            if state.queue:
                schedule_attempt(state, t + radios[radio].aifs_s, radio, tx.src)
            else:
                state.pending = False
            continue

        if code == _EV_GEN:
            v, kind = payload
            radio, rate, payload_bytes = gen_plan[(v, kind)]
            msg = Message(kind, v, payload_bytes, t, radio, msg_counter)
            msg_counter += 1
            if v in member_set:
                if t >= cfg.warmup_s:
                    metrics.generated[kind] = metrics.generated.get(kind, 0) + 1
                    record_dispositions(msg, COL_INTENDED)
            else:
                metrics.background_generated += 1
            state = states[radio][v]
            dropped = state.enqueue(msg)
            if dropped is not None:
                metrics.drops[kind] = metrics.drops.get(kind, 0) + 1
                if dropped.source in member_set:
                    record_dispositions(dropped, COL_DROPPED)
            if not state.pending:
                schedule_attempt(state, t + radios[radio].aifs_s, radio, v)
            nxt = t + 1.0 / rate
            if nxt <= cfg.duration_s:
                push(nxt, _EV_GEN, (v, kind))
            continue

        if code == _EV_MOBILITY:
            mobility.step(world, cfg.mobility_dt_s)
            world.t = t
            if t >= cfg.warmup_s:
                lead = int(members[0][0])
                busy0, *_ = do_sense(lead, 0, t, 0.0)
                b = metrics.busy.setdefault(0, [0, 0])
                b[0] += int(busy0)
                b[1] += 1
                if radio1_on:
                    x = float(world.x[lead])
                    y = float(world.lane[lead]) * cfg.lane_width_m
                    period = int(t // cfg.allocation_period_s)
                    busy1, *_ = sense_channel(
                        active[1], env1, x, y, lead, float(cur_f1[lead]),
                        t, 0.0, period, float(gamma1[lead]),
                        dtt_mw=float(dtt1[lead]),
                    )
                    b = metrics.busy.setdefault(1, [0, 0])
                    b[0] += int(busy1)
                    b[1] += 1
            if t + cfg.mobility_dt_s <= cfg.duration_s + 1e-9:
                push(t + cfg.mobility_dt_s, _EV_MOBILITY, None)
            continue

        if code == _EV_ALLOC:
            run_alloc(t)
            nxt = t + cfg.allocation_period_s
            if nxt < cfg.duration_s - 1e-9:
                push(nxt, _EV_ALLOC, None)
            continue

    # --- flush: unsent/unresolved dispositions ----------------------------
    for radio in (0, 1):
        pool = states[radio]
        items = pool.items() if isinstance(pool, dict) else enumerate(pool)
        for v, state in items:
            if v in member_set:
                for msg in state.queue:
                    record_dispositions(msg, COL_UNRESOLVED)
    for st in tracker.states.values():
        record_dispositions(st["tx"].message, COL_UNRESOLVED)
    return metrics
