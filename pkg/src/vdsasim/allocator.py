"""Centralized joint power/frequency allocation for the platoons.

Exhaustive search over per-platoon frequency tuples maximizing the
minimum predicted worst-case SINR across platoons, subject to DTT
protection caps on per-vehicle transmit power.  All channel estimates
here use zero shadowing; the simulator applies shadowed gains, and that
estimation/realization mismatch is deliberate.

Pure function of its input snapshot: identical inputs give identical
decisions (ties between frequency tuples break to the lexicographically
smallest tuple).  ``max_ue_power`` / ``vehicle_power_cap`` /
``predicted_min_sinr`` are the reference formulations; ``allocate``
evaluates the same quantities from precomputed tables so a period stays
well under a second at full scale (|F| = 33, K = 2).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .channel import AcirTable, PathlossModel, acir, dtt_interference_at, link_gain
from .errors import EmptyCandidateSet
from .rem import ProtectionParams, RemDatabase
from .sensing import SensingParams, threshold
from .units import dbm_to_mw, linear_to_db, mw_to_dbm

POWER_FLOOR_MW = dbm_to_mw(-40.0)  # caps below this are reported as effectively zero


@dataclass(frozen=True)
class PlatoonSnapshot:
    """Ordered member positions (leader first) with stable vehicle ids."""

    positions: tuple[tuple[float, float], ...]
    vehicle_ids: tuple[int, ...]
    leader_index: int = 0


@dataclass(frozen=True)
class AllocationInput:
    platoons: tuple[PlatoonSnapshot, ...]
    rem: RemDatabase
    candidate_frequencies_hz: tuple[float, ...]
    protection: ProtectionParams
    p_max_dbm: float
    noise_mw: float
    acir_v_v: AcirTable
    acir_dtt_v: AcirTable
    acir_v_dtt: AcirTable
    pathloss: PathlossModel
    target_pfa: float = 0.01
    sensing_samples: int = 100
    power_control: bool = True
    road_length_m: float | None = None
    inject_worst_case_rx: bool = False

    def __post_init__(self):
        if not self.candidate_frequencies_hz:
            raise EmptyCandidateSet("no candidate frequencies")
        for p in self.platoons:
            if len(p.positions) < 2:
                raise EmptyCandidateSet("platoon needs >= 2 vehicles")


@dataclass
class VehicleAllocation:
    vehicle_id: int
    power_cap_dbm: float
    sensing_threshold_mw: float
    effectively_silent: bool


@dataclass
class PlatoonAllocation:
    frequency_hz: float
    predicted_min_sinr_db: float
    vehicles: list[VehicleAllocation] = field(default_factory=list)


@dataclass
class AllocationDecision:
    platoons: list[PlatoonAllocation]
    objective_db: float


def _worst_case_rx(inp: AllocationInput, vehicle_pos):
    if not inp.inject_worst_case_rx:
        return None
    return [(vehicle_pos[0], vehicle_pos[1] + inp.protection.worst_case_rx_distance_m)]


def max_ue_power(
    vehicle_pos: tuple[float, float],
    channel_w: int,
    rem: RemDatabase,
    protection: ProtectionParams,
    p_max_dbm: float,
    pathloss: PathlossModel,
    road_length_m: float | None = None,
    extra_rx_positions: list[tuple[float, float]] | None = None,
) -> float:
    """Max allowed transmit power (dBm) of a vehicle on DTT channel w.

    For each DTT receiver the SIR it would see at full power is estimated
    with zero shadowing; if the receiver is protected (stored DTT power
    strictly above gamma) and the estimate falls short of SIR_min, the
    candidate power is scaled down so the estimate lands exactly on
    SIR_min.  The result is the minimum candidate over receivers.
    """
    p_max_mw = dbm_to_mw(p_max_dbm)
    gamma_mw = dbm_to_mw(protection.gamma_dtt_dbm)
    sir_min = 10.0 ** (protection.sir_min_db / 10.0)
    positions = [(r.x, r.y) for r in rem.receivers]
    if extra_rx_positions:
        positions = positions + list(extra_rx_positions)
    best_mw = p_max_mw
    for pos in positions:
        p_dtt_mw = rem.lookup_dtt_power_mw(pos, channel_w)
        gain = link_gain(pathloss, vehicle_pos, pos, 0.0, road_length_m)
        sir_est = p_dtt_mw / (p_max_mw * gain)
        if sir_est < sir_min and p_dtt_mw > gamma_mw:
            cand = p_max_mw * sir_est / sir_min
        else:
            cand = p_max_mw
        if cand < best_mw:
            best_mw = cand
    return mw_to_dbm(max(best_mw, 0.0))


def vehicle_power_cap(
    vehicle_pos: tuple[float, float],
    f_k_hz: float,
    protected_set: set[tuple[int, int]],
    rem: RemDatabase,
    protection: ProtectionParams,
    p_max_dbm: float,
    acir_v_dtt: AcirTable,
    pathloss: PathlossModel,
    road_length_m: float | None = None,
    extra_rx_positions: list[tuple[float, float]] | None = None,
) -> float:
    """Transmit power cap (dBm) on frequency f_k: min over protected channels
    of the per-channel limit divided by the V->DTT coupling, clipped to the
    hardware maximum."""
    p_max_mw = dbm_to_mw(p_max_dbm)
    best_mw = p_max_mw
    for _, w in sorted(protected_set):
        per_channel_dbm = max_ue_power(
            vehicle_pos, w, rem, protection, p_max_dbm, pathloss,
            road_length_m, extra_rx_positions,
        )
        coupling = acir(acir_v_dtt, f_k_hz, rem.channel_center_hz(w))
        cand = dbm_to_mw(per_channel_dbm) / coupling
        if cand < best_mw:
            best_mw = cand
    return mw_to_dbm(best_mw)


def predicted_min_sinr(
    platoon: PlatoonSnapshot,
    f_k_hz: float,
    caps_mw: list[float],
    other_platoons: list[tuple[PlatoonSnapshot, float, list[float]]],
    rem: RemDatabase,
    acir_v_v: AcirTable,
    acir_dtt_v: AcirTable,
    pathloss: PathlossModel,
    noise_mw: float,
    road_length_m: float | None = None,
) -> float:
    """Worst predicted per-vehicle SINR (dB) inside a platoon on f_k.

    Per non-leader vehicle the useful power is the weaker of the leader
    link and the preceding-car link at the respective caps; interference
    is the REM-derived DTT term plus the worst-case single interferer
    among other platoons' vehicles at their caps (conditional transmit
    probability replaced by 1, as the worst-case approximation demands).
    """
    li = platoon.leader_index
    worst = None
    for i, pos in enumerate(platoon.positions):
        if i == li:
            continue
        g_lead = link_gain(pathloss, platoon.positions[li], pos, 0.0, road_length_m)
        prev = i - 1
        g_prev = link_gain(pathloss, platoon.positions[prev], pos, 0.0, road_length_m)
        num = min(caps_mw[li] * g_lead, caps_mw[prev] * g_prev)
        i_dtt = dtt_interference_at(pos, f_k_hz, rem, acir_dtt_v)
        i_vv = 0.0
        for other, f_l, other_caps in other_platoons:
            coupling = acir(acir_v_v, f_k_hz, f_l)
            for j, opos in enumerate(other.positions):
                g = link_gain(pathloss, opos, pos, 0.0, road_length_m)
                val = other_caps[j] * g * coupling
                if val > i_vv:
                    i_vv = val
        sinr = num / (noise_mw + i_dtt + i_vv)
        if worst is None or sinr < worst:
            worst = sinr
    return linear_to_db(worst)


class _Tables:
    """Per-period precomputation shared by every frequency tuple."""

    def __init__(self, inp: AllocationInput):
        self.inp = inp
        freqs = inp.candidate_frequencies_hz
        nf = len(freqs)
        k_n = len(inp.platoons)
        p_max_mw = dbm_to_mw(inp.p_max_dbm)

        # caps_mw[k]: (nf, n_vehicles)
        self.caps_mw: list[np.ndarray] = []
        for p in inp.platoons:
            n_i = len(p.positions)
            caps = np.full((nf, n_i), p_max_mw)
            if inp.power_control:
                for vi, pos in enumerate(p.positions):
                    prot = inp.rem.protected_channels_at(pos, inp.protection)
                    prot_channels = sorted({w for _, w in prot})
                    if not prot_channels:
                        continue
                    extra = _worst_case_rx(inp, pos)
                    per_ch_mw = {
                        w: dbm_to_mw(
                            max_ue_power(
                                pos, w, inp.rem, inp.protection, inp.p_max_dbm,
                                inp.pathloss, inp.road_length_m, extra,
                            )
                        )
                        for w in prot_channels
                    }
                    for fi, f in enumerate(freqs):
                        best = p_max_mw
                        for w in prot_channels:
                            cand = per_ch_mw[w] / acir(
                                inp.acir_v_dtt, f, inp.rem.channel_center_hz(w)
                            )
                            if cand < best:
                                best = cand
                        caps[fi, vi] = best
            self.caps_mw.append(caps)

        # intra-platoon gains and the numerator min-link table
        self.num_mw: list[np.ndarray] = []  # [k]: (nf, n_followers)
        self.i_dtt: list[np.ndarray] = []  # [k]: (nf, n_followers)
        for k, p in enumerate(inp.platoons):
            li = p.leader_index
            followers = [i for i in range(len(p.positions)) if i != li]
            g_lead = np.array(
                [
                    link_gain(inp.pathloss, p.positions[li], p.positions[i], 0.0, inp.road_length_m)
                    for i in followers
                ]
            )
            g_prev = np.array(
                [
                    link_gain(inp.pathloss, p.positions[i - 1], p.positions[i], 0.0, inp.road_length_m)
                    for i in followers
                ]
            )
            caps = self.caps_mw[k]
            prev_idx = [i - 1 for i in followers]
            num = np.minimum(
                caps[:, [li] * len(followers)] * g_lead[None, :],
                caps[:, prev_idx] * g_prev[None, :],
            )
            self.num_mw.append(num)
            idtt = np.empty((nf, len(followers)))
            for c, i in enumerate(followers):
                for fi, f in enumerate(freqs):
                    idtt[fi, c] = dtt_interference_at(
                        p.positions[i], f, inp.rem, inp.acir_dtt_v
                    )
            self.i_dtt.append(idtt)
            # keep follower order for later reporting
        self.followers = [
            [i for i in range(len(p.positions)) if i != p.leader_index]
            for p in inp.platoons
        ]

        # worst single-interferer term: max over other platoon's vehicles of
        # cap * cross gain, per (source platoon l, f_l, victim vehicle)
        self.cross_max: dict[tuple[int, int], np.ndarray] = {}
        for l in range(k_n):
            for k in range(k_n):
                if l == k:
                    continue
                src = inp.platoons[l]
                dst = inp.platoons[k]
                g = np.array(
                    [
                        [
                            link_gain(inp.pathloss, sp, dp, 0.0, inp.road_length_m)
                            for dp in [dst.positions[i] for i in self.followers[k]]
                        ]
                        for sp in src.positions
                    ]
                )  # (n_src, n_followers_k)
                # (nf, n_src) x (n_src, n_followers) -> max over sources
                self.cross_max[(l, k)] = np.max(
                    self.caps_mw[l][:, :, None] * g[None, :, :], axis=1
                )

        self.vv = np.empty((nf, nf))
        for a, fa in enumerate(freqs):
            for b, fb in enumerate(freqs):
                self.vv[a, b] = acir(inp.acir_v_v, fa, fb)
        self.noise = inp.noise_mw

    def platoon_min_sinr(self, k: int, fi: int, tup) -> float:
        num = self.num_mw[k][fi]
        denom = self.noise + self.i_dtt[k][fi]
        i_vv = 0.0
        for l in range(len(self.inp.platoons)):
            if l == k:
                continue
            term = self.vv[fi, tup[l]] * self.cross_max[(l, k)][tup[l]]
            i_vv = np.maximum(i_vv, term)
        return float(np.min(num / (denom + i_vv)))


def allocate(inp: AllocationInput) -> AllocationDecision:
    """Run the REM-based allocation for one period."""
    freqs = inp.candidate_frequencies_hz
    k_n = len(inp.platoons)
    tables = _Tables(inp)

    best_obj = None
    best_tuple = None
    best_sinrs = None
    for tup in itertools.product(range(len(freqs)), repeat=k_n):
        sinrs = [tables.platoon_min_sinr(k, tup[k], tup) for k in range(k_n)]
        obj = min(sinrs)
        if best_obj is None or obj > best_obj:
            best_obj = obj
            best_tuple = tup
            best_sinrs = sinrs

    decision = AllocationDecision(
        platoons=[], objective_db=linear_to_db(best_obj)
    )
    for k, p in enumerate(inp.platoons):
        fi = best_tuple[k]
        f_star = freqs[fi]
        pal = PlatoonAllocation(
            frequency_hz=f_star,
            predicted_min_sinr_db=linear_to_db(best_sinrs[k]),
        )
        for vi, pos in enumerate(p.positions):
            cap_mw = float(tables.caps_mw[k][fi, vi])
            sigma_i = dtt_interference_at(pos, f_star, inp.rem, inp.acir_dtt_v)
            gamma = threshold(
                SensingParams(
                    noise_power_mw=inp.noise_mw,
                    dtt_power_mw=sigma_i,
                    sample_count=inp.sensing_samples,
                    target_pfa=inp.target_pfa,
                )
            )
            pal.vehicles.append(
                VehicleAllocation(
                    vehicle_id=p.vehicle_ids[vi],
                    power_cap_dbm=mw_to_dbm(cap_mw),
                    sensing_threshold_mw=gamma,
                    effectively_silent=cap_mw < POWER_FLOOR_MW,
                )
            )
        decision.platoons.append(pal)
    return decision
