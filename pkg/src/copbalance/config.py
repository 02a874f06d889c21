"""Flat key-value run configuration.

Config files hold one ``section.key = value`` pair per line (``#``
comments allowed); command-line flags override file values.  Unknown keys
are rejected so typos fail loudly.
"""

from __future__ import annotations

from pathlib import Path

from .errors import ConfigError


def _as_bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _as_optional_float(raw: str):
    return None if raw.strip().lower() in ("none", "off") else float(raw)


def _as_pulses(raw: str) -> list[tuple[float, float, float]]:
    """``start:duration:torque`` triples separated by semicolons."""
    out = []
    for chunk in raw.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.split(":")
        if len(parts) != 3:
            raise ValueError(f"pulse must be start:duration:torque, got {chunk!r}")
        out.append(tuple(float(p) for p in parts))
    return out


def _as_vertices(raw: str) -> list[float]:
    """Four colon-separated trapezoid vertices."""
    parts = [float(p) for p in raw.split(":")]
    if len(parts) != 4:
        raise ValueError(f"expected four colon-separated vertices, got {raw!r}")
    return parts


# key -> caster; every key a config file or the CLI may set
KNOWN_KEYS = {
    "analyze.source": str,
    "filter.cutoff_hz": _as_optional_float,
    "filter.order": int,
    "ingest.min_load_n": float,
    "distance.metric": str,
    "zones.foot_length_cm": float,
    "zones.center_frac": float,
    "zones.d1_hp": float,
    "zones.d2_hp": float,
    "zones.d1_lp": float,
    "zones.d2_lp": float,
    "zones.d1_ud": float,
    "zones.d2_ud": float,
    "fuzzy.threshold": float,
    "fuzzy.small": _as_vertices,
    "fuzzy.big": _as_vertices,
    "fuzzy.inactive": _as_vertices,
    "fuzzy.active": _as_vertices,
    "pid.kp": float,
    "pid.ki": float,
    "pid.kd": float,
    "pid.u_max": float,
    "pid.windup_limit": float,
    "plant.mass_kg": float,
    "plant.com_height_m": float,
    "plant.inertia": float,
    "plant.damping": float,
    "plant.torque_per_intensity": float,
    "plant.gravity": float,
    "plant.dt_s": float,
    "plant.cop_y_amplitude_cm": float,
    "plant.cop_y_freq_hz": float,
    "plant.noise_std_cm": float,
    "sim.duration_s": float,
    "sim.seed": int,
    "sim.pulses": _as_pulses,
    "sim.control_enabled": _as_bool,
    "sim.interior_is_safe": _as_bool,
    "sim.map_semi_x_cm": float,
    "sim.map_semi_y_cm": float,
    "tune.plant": str,
    "tune.kp_min": float,
    "tune.kp_max": float,
    "tune.horizon_s": float,
    "tune.dt_s": float,
    "tune.preset": str,
}


def parse_config_text(text: str, origin: str = "<config>") -> dict:
    """Typed dict from config text; unknown keys and bad values raise
    ConfigError naming the line."""
    out: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{origin}:{lineno}: expected 'key = value'")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key not in KNOWN_KEYS:
            raise ConfigError(f"{origin}:{lineno}: unknown key {key!r}")
        try:
            out[key] = KNOWN_KEYS[key](raw)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"{origin}:{lineno}: bad value for {key}: {exc}")
    return out


def load_config(path: str | Path | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    return parse_config_text(p.read_text(), origin=str(p))
