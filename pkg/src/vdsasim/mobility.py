"""Vehicle kinematics: platoons behind jammer cars, background traffic.

The road is a ring of configurable length (positions wrap modulo the
length) so that traffic density stays constant over a run.  Platoon
longitudinal control is a deterministic constant-gap tracker with bounded
acceleration, not a full CACC law: packet outcomes never feed back into
kinematics, the simulator only needs plausible message-source motion.

World state lives in parallel numpy arrays; stepping is single-threaded
and deterministic for a given seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

KIND_BACKGROUND = 0
KIND_JAMMER = 1
KIND_LEADER = 2
KIND_MEMBER = 3


@dataclass(frozen=True)
class JammerProfile:
    v_high_mps: float = 130.0 / 3.6
    v_low_mps: float = 100.0 / 3.6
    cycle_duration_s: float = 30.0

    def __post_init__(self):
        if not self.v_high_mps > self.v_low_mps > 0:
            raise ConfigError("jammer profile requires v_high > v_low > 0")


@dataclass(frozen=True)
class PlatoonConfig:
    size: int = 8
    intra_gap_m: float = 10.0
    standoff_m: float = 50.0
    lane: int = 0
    direction: int = 1
    initial_x_m: float = 0.0
    cruise_speed_mps: float = 130.0 / 3.6

    def __post_init__(self):
        if self.size < 2:
            raise ConfigError("platoon size must be >= 2")
        if self.intra_gap_m <= 0:
            raise ConfigError("intra gap must be > 0")


def jammer_speed(t: float, profile: JammerProfile) -> float:
    """Triangular speed profile: v_high -> v_low over the first half cycle."""
    if t < 0:
        raise ConfigError("t must be >= 0")
    half = profile.cycle_duration_s / 2.0
    phase = t % profile.cycle_duration_s
    span = profile.v_high_mps - profile.v_low_mps
    if phase <= half:
        return profile.v_high_mps - span * (phase / half)
    return profile.v_low_mps + span * ((phase - half) / half)


def spawn_background(
    density_per_km_lane: float,
    lanes: list[int],
    road_length_m: float,
    rng: np.random.Generator,
    speed_mps: float = 110.0 / 3.6,
) -> tuple[np.ndarray, np.ndarray]:
    """(x positions, lane indices) for uniformly distributed background cars.

    Per lane the count is round(density * length_km); positions are i.i.d.
    uniform along the road.  Deterministic for a given generator state.
    """
    if density_per_km_lane < 0:
        raise ConfigError("density must be >= 0")
    per_lane = int(round(density_per_km_lane * road_length_m / 1000.0))
    xs = []
    lane_idx = []
    for lane in lanes:
        xs.append(rng.uniform(0.0, road_length_m, size=per_lane))
        lane_idx.append(np.full(per_lane, lane, dtype=np.int64))
    if not xs:
        return np.empty(0), np.empty(0, dtype=np.int64)
    _ = speed_mps
    return np.concatenate(xs), np.concatenate(lane_idx)


@dataclass
class World:
    """Flat vehicle arrays plus platoon bookkeeping.

    Vehicle order: for each platoon, jammer then leader then followers;
    background vehicles last.  ``platoon_slices[k]`` covers the platoon's
    jammer..last-follower block.
    """

    road_length_m: float
    lane_width_m: float
    x: np.ndarray
    lane: np.ndarray
    speed: np.ndarray
    direction: np.ndarray
    kind: np.ndarray
    platoon_id: np.ndarray
    platoon_slices: list[slice]
    jammer_profile: JammerProfile
    platoon_configs: list[PlatoonConfig]
    accel_limit: float = 3.0
    kp: float = 0.5
    kv: float = 1.5
    t: float = 0.0
    _bg: slice = field(default=slice(0, 0))

    @property
    def n_vehicles(self) -> int:
        return self.x.shape[0]

    def y_of(self, i: int) -> float:
        return self.lane[i] * self.lane_width_m

    def position(self, i: int) -> tuple[float, float]:
        return (float(self.x[i]), float(self.lane[i]) * self.lane_width_m)

    def platoon_members(self, k: int) -> np.ndarray:
        """Indices of leader + followers of platoon k (jammer excluded)."""
        s = self.platoon_slices[k]
        return np.arange(s.start + 1, s.stop)

    def forward_gap(self, behind: int, ahead: int) -> float:
        d = (self.x[ahead] - self.x[behind]) * self.direction[behind]
        return float(d % self.road_length_m)


def build_world(
    platoon_configs: list[PlatoonConfig],
    jammer_profile: JammerProfile,
    background_density: float,
    background_lanes: list[int],
    road_length_m: float,
    lane_width_m: float,
    rng: np.random.Generator,
    background_speed_mps: float = 110.0 / 3.6,
) -> World:
    xs: list[float] = []
    lanes: list[int] = []
    speeds: list[float] = []
    dirs: list[int] = []
    kinds: list[int] = []
    pids: list[int] = []
    slices: list[slice] = []

    for k, pc in enumerate(platoon_configs):
        start = len(xs)
        v0 = jammer_speed(0.0, jammer_profile)
        # jammer ahead of the leader by the standoff, leader ahead of followers
        xs.append(pc.initial_x_m + pc.direction * pc.standoff_m)
        lanes.append(pc.lane)
        speeds.append(v0)
        dirs.append(pc.direction)
        kinds.append(KIND_JAMMER)
        pids.append(k)
        for i in range(pc.size):
            xs.append(pc.initial_x_m - pc.direction * i * pc.intra_gap_m)
            lanes.append(pc.lane)
            speeds.append(v0)
            dirs.append(pc.direction)
            kinds.append(KIND_LEADER if i == 0 else KIND_MEMBER)
            pids.append(k)
        slices.append(slice(start, len(xs)))

    bg_start = len(xs)
    bg_x, bg_lane = spawn_background(
        background_density, background_lanes, road_length_m, rng
    )
    xs.extend(bg_x.tolist())
    lanes.extend(bg_lane.tolist())
    speeds.extend([background_speed_mps] * len(bg_x))
    dirs.extend([1 if l < 3 else -1 for l in bg_lane])
    kinds.extend([KIND_BACKGROUND] * len(bg_x))
    pids.extend([-1] * len(bg_x))

    world = World(
        road_length_m=road_length_m,
        lane_width_m=lane_width_m,
        x=np.asarray(xs, dtype=np.float64) % road_length_m,
        lane=np.asarray(lanes, dtype=np.int64),
        speed=np.asarray(speeds, dtype=np.float64),
        direction=np.asarray(dirs, dtype=np.int64),
        kind=np.asarray(kinds, dtype=np.int64),
        platoon_id=np.asarray(pids, dtype=np.int64),
        platoon_slices=slices,
        jammer_profile=jammer_profile,
        platoon_configs=platoon_configs,
    )
    world._bg = slice(bg_start, len(xs))
    return world


def step(world: World, dt: float) -> None:
    """Advance the world by dt (in place).

    Jammers follow the triangular speed profile exactly; leaders track
    their jammer at the standoff gap and followers track their
    predecessor at the intra-platoon gap, both with bounded acceleration;
    background cars hold constant speed.  Speeds clamp at zero and
    same-lane platoon vehicles cannot swap order.
    """
    if dt <= 0:
        raise ConfigError("dt must be > 0")
    t_new = world.t + dt
    v_j = jammer_speed(t_new, world.jammer_profile)
    a_max = world.accel_limit

    for k, pc in enumerate(world.platoon_configs):
        s = world.platoon_slices[k]
        jam = s.start
        world.speed[jam] = v_j
        prev = jam
        for idx in range(s.start + 1, s.stop):
            target_gap = pc.standoff_m if idx == s.start + 1 else pc.intra_gap_m
            gap = world.forward_gap(idx, prev)
            dv = world.speed[prev] - world.speed[idx]
            acc = world.kp * (gap - target_gap) + world.kv * dv
            acc = min(max(acc, -a_max), a_max)
            v = max(world.speed[idx] + acc * dt, 0.0)
            # hard guard: never close more than the available gap
            max_adv = gap - 0.1 + world.speed[prev] * dt
            if v * dt > max_adv:
                v = max(max_adv, 0.0) / dt
            world.speed[idx] = v
            prev = idx

    world.x += world.direction * world.speed * dt
    np.mod(world.x, world.road_length_m, out=world.x)
    world.t = t_new
