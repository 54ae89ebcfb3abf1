"""Flat key-value configuration documents.

One ``key = value`` entry per line (``:`` also accepted, entries may also be
separated by commas); ``#`` starts a comment. List values are
whitespace-separated. Unknown keys are rejected so typos fail loudly.
"""
from __future__ import annotations

from pathlib import Path

from .core import ConfigError, SystemParams, ValidationError, to_angular

_FLOAT = float
_INT = int


def _floats(text: str) -> tuple[float, ...]:
    parts = text.replace(";", " ").split()
    if not parts:
        raise ValueError("empty list")
    return tuple(float(p) for p in parts)


def _int(text: str) -> int:
    value = float(text)
    if value != int(value):
        raise ValueError(f"{text!r} is not an integer")
    return int(value)


# key -> parser
KEYS = {
    "delta_mhz": _FLOAT,
    "chi_mhz": _FLOAT,
    "kappa_mhz": _FLOAT,
    "eps0_mhz": _FLOAT,
    "duration_ns": _FLOAT,
    "samples": _int,
    "shape": str,
    "orientation": str,
    # sweep grids
    "t_min_ns": _FLOAT,
    "t_max_ns": _FLOAT,
    "t_step_ns": _FLOAT,
    "eps0_min_mhz": _FLOAT,
    "eps0_max_mhz": _FLOAT,
    "eps0_points": _int,
    "delta_min_mhz": _FLOAT,
    "delta_max_mhz": _FLOAT,
    "delta_step_mhz": _FLOAT,
    "durations_ns": _floats,
    "fit_t_min_ns": _FLOAT,
    "fit_order": _int,
    "n_truncation": _int,
}

BASE_KEYS = ("delta_mhz", "chi_mhz", "kappa_mhz", "eps0_mhz", "duration_ns", "samples", "shape", "orientation")

DEFAULTS = {"chi_mhz": -1.0, "kappa_mhz": 0.0}


def parse_entry(entry: str) -> tuple[str, object]:
    for sep in ("=", ":"):
        if sep in entry:
            key, _, raw = entry.partition(sep)
            break
    else:
        raise ConfigError(f"expected key=value, got {entry!r}")
    key, raw = key.strip(), raw.strip()
    if key not in KEYS:
        raise ConfigError(f"unknown configuration key {key!r}")
    try:
        value = KEYS[key](raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {raw!r} ({exc})") from None
    if isinstance(value, str) and not value:
        raise ConfigError(f"empty value for {key}")
    return key, value


def load_config(text: str) -> dict:
    """Parse a configuration document into a typed dict (only keys present)."""
    config: dict = {}
    for line in text.splitlines():
        line = line.split("#", 1)[0]
        for entry in line.split(","):
            if entry.strip():
                key, value = parse_entry(entry)
                config[key] = value
    return config


def read_config(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise ConfigError(f"configuration file not found: {path}") from None
    except OSError as exc:
        raise ConfigError(f"cannot read configuration file {path}: {exc}") from None
    return load_config(text)


def params_from_mapping(config: dict) -> SystemParams:
    if "delta_mhz" not in config:
        raise ConfigError("configuration is missing required key 'delta_mhz'")
    merged = {**DEFAULTS, **config}
    try:
        return SystemParams(
            delta=to_angular(merged["delta_mhz"]),
            chi=to_angular(merged["chi_mhz"]),
            kappa=to_angular(merged["kappa_mhz"]),
        )
    except ValidationError as exc:
        # report the configuration key, not the internal field name
        key = {"delta": "delta_mhz", "chi": "chi_mhz", "kappa": "kappa_mhz"}.get(exc.field, exc.field)
        raise ValidationError(f"{key}: {exc}", field=key) from None


def params_from_config(text: str) -> SystemParams:
    """Build :class:`SystemParams` from a configuration document.

    MHz entries are cyclic frequencies and are converted to rad/ns;
    ``chi_mhz`` defaults to -1.0 and ``kappa_mhz`` to 0.
    """
    return params_from_mapping(load_config(text))


def format_config(config: dict) -> str:
    """Render a config dict back to the text format (sorted keys)."""
    lines = []
    for key in sorted(config):
        value = config[key]
        if isinstance(value, tuple):
            value = " ".join(repr(v) for v in value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"
