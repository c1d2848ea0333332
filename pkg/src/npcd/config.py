"""Plain-text key=value configuration with CLI overrides.

Defaults follow the tuned operating point: h_c=32, delta=0.5, epsilon=0.2,
s_t=0.6, s_l=0.4, s_h=0.6, a 0.2 m anchor grid over [0,70]x[-35,35], and 512
proposals kept at inference.
"""

import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .errors import ConfigError


@dataclass
class Config:
    # patch resampling and selection
    h_c: int = 32
    delta: float = 0.5
    epsilon: float = 0.2
    enlarge_slack: int = 0
    budget: int = 512
    nms_iou: float | None = None
    # anchor grid
    grid_spacing_m: float = 0.2
    grid_z_min_m: float = 0.0
    grid_z_max_m: float = 70.0
    grid_x_min_m: float = -35.0
    grid_x_max_m: float = 35.0
    grid_yaws: tuple = (0.0, math.pi / 2.0)
    anchor_class: str = "Car"
    anchor_lwh: tuple = (3.9, 1.6, 1.56)
    # ground plane fitting
    ransac_iterations: int = 200
    ransac_threshold_m: float = 0.15
    ransac_seed: int = 0
    ground_height_prior_m: float = 1.65
    # front-view map
    map_width: int = 1242
    map_height: int = 375
    # supervision rectification
    s_t: float = 0.6
    slope_k: float = 50.0
    s_l: float = 0.4
    s_h: float = 0.6
    rotation_bins: int = 16
    # evaluation
    eval_iou: float = 0.1
    ap_points: int = 11
    budgets: tuple = (10, 50, 100)


def _parse_float_list(value: str) -> tuple:
    return tuple(float(tok) for tok in value.replace(",", " ").split())


def _parse_int_list(value: str) -> tuple:
    return tuple(int(tok) for tok in value.replace(",", " ").split())


def _parse_optional_float(value: str):
    if value.strip().lower() in ("", "none", "off"):
        return None
    return float(value)


# config-file key -> (Config attribute, parser)
KEYS = {
    "upm.h_c": ("h_c", int),
    "upm.delta": ("delta", float),
    "upm.epsilon": ("epsilon", float),
    "upm.slack": ("enlarge_slack", int),
    "upm.budget": ("budget", int),
    "upm.nms_iou": ("nms_iou", _parse_optional_float),
    "grid.spacing_m": ("grid_spacing_m", float),
    "grid.z_min_m": ("grid_z_min_m", float),
    "grid.z_max_m": ("grid_z_max_m", float),
    "grid.x_min_m": ("grid_x_min_m", float),
    "grid.x_max_m": ("grid_x_max_m", float),
    "grid.yaws": ("grid_yaws", _parse_float_list),
    "anchor.class": ("anchor_class", str),
    "anchor.size_lwh": ("anchor_lwh", _parse_float_list),
    "ransac.iterations": ("ransac_iterations", int),
    "ransac.threshold_m": ("ransac_threshold_m", float),
    "ransac.seed": ("ransac_seed", int),
    "ground.height_prior_m": ("ground_height_prior_m", float),
    "map.width": ("map_width", int),
    "map.height": ("map_height", int),
    "distill.s_t": ("s_t", float),
    "distill.k": ("slope_k", float),
    "distill.s_l": ("s_l", float),
    "distill.s_h": ("s_h", float),
    "distill.bins": ("rotation_bins", int),
    "eval.iou": ("eval_iou", float),
    "eval.ap_points": ("ap_points", int),
    "eval.budgets": ("budgets", _parse_int_list),
}

_ATTR_TO_KEY = {attr: key for key, (attr, _) in KEYS.items()}


def load_config(path) -> Config:
    """Read a key=value file; '#' starts a comment; unknown keys are rejected."""
    cfg = Config()
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        attr, parser = KEYS[key]
        try:
            setattr(cfg, attr, parser(value))
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {exc}") from exc
    return cfg


def apply_overrides(cfg: Config, overrides: dict) -> Config:
    """Apply attribute overrides (already-typed values), skipping Nones."""
    updates = {k: v for k, v in overrides.items() if v is not None}
    for k in updates:
        if k not in {f.name for f in fields(Config)}:
            raise ConfigError(f"unknown config attribute {k!r}")
    return replace(cfg, **updates)


def _format_value(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, tuple):
        return ",".join(repr(v) if isinstance(v, float) else str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dump_config(cfg: Config) -> str:
    """Render the effective configuration in the file format, sorted by key."""
    lines = []
    for key in sorted(KEYS):
        attr, _ = KEYS[key]
        lines.append(f"{key}={_format_value(getattr(cfg, attr))}")
    return "\n".join(lines) + "\n"
