"""Line-oriented scenario configuration files.

The format is deliberately tiny: one ``section.key = value`` assignment per
line, ``#`` comments, and ``include <path>`` directives resolved relative to
the including file.  Later assignments override earlier ones, so a scenario
file can include a shared baseline and tweak a handful of keys.
"""

from __future__ import annotations

import dataclasses
from pathlib import Path

from .engine import SimulationConfig
from .errors import ConfigError

# config key -> SimulationConfig field name, in documentation order
KEY_MAP = {
    "run.use_case": "use_case",
    "run.duration_s": "duration_s",
    "run.warmup_s": "warmup_s",
    "run.allocation_period_s": "allocation_period_s",
    "run.mobility_dt_s": "mobility_dt_s",
    "run.seed": "seed",
    "road.length_m": "road_length_m",
    "road.lane_width_m": "lane_width_m",
    "background.density_per_km_lane": "background_density",
    "background.lanes": "background_lanes",
    "background.speed_kmh": "background_speed_kmh",
    "background.cam_rate_hz": "background_cam_rate_hz",
    "platoon.count": "platoon_count",
    "platoon.size": "platoon_size",
    "platoon.gap_m": "platoon_gap_m",
    "platoon.standoff_m": "platoon_standoff_m",
    "platoon.lane": "platoon_lane",
    "platoon.spacing_m": "platoon_spacing_m",
    "jammer.v_high_kmh": "jammer_v_high_kmh",
    "jammer.v_low_kmh": "jammer_v_low_kmh",
    "jammer.cycle_s": "jammer_cycle_s",
    "rem.kind": "rem_kind",
    "rem.path": "rem_path",
    "freq.start_hz": "freq_start_hz",
    "freq.stop_hz": "freq_stop_hz",
    "freq.step_hz": "freq_step_hz",
    "protection.gamma_dtt_dbm": "gamma_dtt_dbm",
    "protection.sir_min_db": "sir_min_db",
    "protection.inject_worst_case_rx": "inject_worst_case_rx",
    "radio.p_max_dbm": "p_max_dbm",
    "radio.noise_dbm": "noise_dbm",
    "radio.decode_threshold_db": "decode_threshold_db",
    "radio.cch_bitrate": "cch_bitrate",
    "radio.tvws_bitrate": "tvws_bitrate",
    "radio.slot_time_s": "slot_time_s",
    "radio.aifs_s": "aifs_s",
    "radio.cw_min": "cw_min",
    "radio.preamble_s": "preamble_s",
    "radio.cch_gamma_dbm": "cch_gamma_dbm",
    "radio.queue_limit": "queue_limit",
    "radio.patience_cap": "patience_cap",
    "traffic.cam_bytes": "cam_bytes",
    "traffic.cacc_bytes": "cacc_bytes",
    "traffic.cam_rate_a_hz": "cam_rate_a_hz",
    "traffic.cam_rate_bc_hz": "cam_rate_bc_hz",
    "traffic.cacc_rate_hz": "cacc_rate_hz",
    "sensing.samples": "sensing_samples",
    "sensing.target_pfa": "target_pfa",
    "shadowing.sigma_5g9_db": "shadow_sigma_5g9_db",
    "shadowing.sigma_tvws_db": "shadow_sigma_tvws_db",
}

_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(SimulationConfig)}


def _parse_bool(raw: str, where: str) -> bool:
    low = raw.lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ConfigError(f"{where}: expected a boolean, got {raw!r}")


def _convert(key: str, raw: str, where: str):
    name = KEY_MAP[key]
    tp = _FIELD_TYPES[name]
    try:
        if tp == "int":
            return int(raw)
        if tp == "float":
            return float(raw)
        if tp == "bool":
            return _parse_bool(raw, where)
        if tp == "tuple":
            if not raw.strip():
                return ()
            return tuple(int(p) for p in raw.split(","))
        if tp == "str | None":
            return None if raw.lower() == "none" else raw
        return raw  # plain strings
    except ValueError as exc:
        raise ConfigError(f"{where}: bad value for {key}: {exc}") from exc


def _read_lines(path: Path, seen: set, out: list) -> None:
    path = path.resolve()
    if path in seen:
        raise ConfigError(f"circular include of {path}")
    seen.add(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if stripped.startswith("include"):
            target = stripped[len("include"):].strip()
            if not target:
                raise ConfigError(f"{path}:{lineno}: include without a path")
            _read_lines(path.parent / target, seen, out)
            continue
        out.append((f"{path}:{lineno}", stripped))
    seen.remove(path)


def parse_assignments(lines) -> dict:
    """Turn ``(where, "section.key = value")`` pairs into config overrides."""
    overrides = {}
    for where, stripped in lines:
        if "=" not in stripped:
            raise ConfigError(f"{where}: expected 'section.key = value', "
                              f"got {stripped!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key not in KEY_MAP:
            raise ConfigError(f"{where}: unknown config key {key!r}")
        overrides[KEY_MAP[key]] = _convert(key, raw, where)
    return overrides


def load_config(path, **extra_overrides) -> SimulationConfig:
    """Read a config file (with includes) into a validated SimulationConfig."""
    lines: list = []
    _read_lines(Path(path), set(), lines)
    overrides = parse_assignments(lines)
    overrides.update(extra_overrides)
    cfg = SimulationConfig(**overrides)
    cfg.validate()
    return cfg


def dump_config(cfg: SimulationConfig) -> str:
    """Render a config in the same format `load_config` reads."""
    out = []
    section = None
    for key, name in KEY_MAP.items():
        sec = key.split(".", 1)[0]
        if sec != section:
            if section is not None:
                out.append("")
            out.append(f"# [{sec}]")
            section = sec
        value = getattr(cfg, name)
        if isinstance(value, tuple):
            rendered = ",".join(str(v) for v in value)
        elif value is None:
            rendered = "none"
        elif isinstance(value, bool):
            rendered = "true" if value else "false"
        else:
            rendered = repr(value) if isinstance(value, float) else str(value)
        out.append(f"{key} = {rendered}")
    return "\n".join(out) + "\n"
