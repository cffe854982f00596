"""Pipeline tunables, loaded from a ``key = value`` text file.

Lines starting with ``#`` or ``;`` are comments. Unknown keys are an error.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .events import HIT_FRAME_MODES
from .metrics import TASKS


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    # trajectory cleanup
    jump_window: int = 7
    jump_threshold: float = 50.0
    motion_eps: float = 5.0
    min_static_run: int = 10
    max_gap: int = 12
    heatmap_sigma: float = 3.0
    # events
    clip_len: int = 5
    smooth_window: int = 3
    min_run_len: int = 2
    hit_frame_mode: str = "inverse"
    # geometry
    frame_width: int = 1280
    frame_height: int = 720
    expand_fw: float = 1.8
    expand_fh: float = 1.4
    strip_frac: float = 0.15
    lower_player: str = "A"
    # defaults for attributes that come from classifiers
    default_round_head: int = 2
    default_backhand: int = 2
    default_ball_height: int = 2
    default_ball_type: int = 1
    # scoring
    location_tol: float = 10.0
    hit_frame_tol: int = 2
    task_weights: str = ""
    # cost accounting
    flops_per_mac: int = 2
    # synthetic data
    seed: int = 0

    def validate(self) -> "PipelineConfig":
        def need(cond, msg):
            if not cond:
                raise ConfigError(msg)

        need(self.jump_window >= 3 and self.jump_window % 2 == 1, "jump_window must be odd and >= 3")
        need(self.jump_threshold > 0, "jump_threshold must be > 0")
        need(self.motion_eps > 0, "motion_eps must be > 0")
        need(self.min_static_run >= 1, "min_static_run must be >= 1")
        need(self.max_gap >= 0, "max_gap must be >= 0")
        need(self.heatmap_sigma > 0, "heatmap_sigma must be > 0")
        need(self.clip_len >= 3, "clip_len must be >= 3")
        need(self.smooth_window >= 3 and self.smooth_window % 2 == 1, "smooth_window must be odd and >= 3")
        need(self.min_run_len >= 1, "min_run_len must be >= 1")
        need(self.hit_frame_mode in HIT_FRAME_MODES, f"hit_frame_mode must be one of {HIT_FRAME_MODES}")
        need(self.frame_width >= 1 and self.frame_height >= 1, "frame size must be positive")
        need(self.expand_fw >= 1 and self.expand_fh >= 1, "expansion factors must be >= 1")
        need(0 < self.strip_frac < 0.5, "strip_frac must be in (0, 0.5)")
        need(self.lower_player in ("A", "B"), "lower_player must be A or B")
        for name in ("default_round_head", "default_backhand", "default_ball_height"):
            need(getattr(self, name) in (1, 2), f"{name} must be 1 or 2")
        need(1 <= self.default_ball_type <= 9, "default_ball_type must be in 1..9")
        need(self.location_tol >= 0, "location_tol must be >= 0")
        need(self.hit_frame_tol >= 0, "hit_frame_tol must be >= 0")
        need(self.flops_per_mac in (1, 2), "flops_per_mac must be 1 or 2")
        self.weights()
        return self

    def weights(self) -> dict[str, float]:
        """Task weights; ``task_weights`` is ``task:weight`` pairs, comma separated."""
        weights = {t: 1.0 for t in TASKS}
        if not self.task_weights.strip():
            return weights
        for item in self.task_weights.split(","):
            try:
                task, value = item.split(":")
                task = task.strip()
                value = float(value)
            except ValueError:
                raise ConfigError(f"bad task weight entry {item!r}") from None
            if task not in weights:
                raise ConfigError(f"unknown task {task!r} in task_weights")
            if value < 0:
                raise ConfigError("task weights must be >= 0")
            weights[task] = value
        if sum(weights.values()) <= 0:
            raise ConfigError("task weights must have a positive sum")
        return weights

    def updated(self, **overrides) -> "PipelineConfig":
        known = {f.name: f.type for f in fields(self)}
        clean = {}
        for key, value in overrides.items():
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
            clean[key] = _coerce(key, value, type(getattr(self, key)))
        return replace(self, **clean)


def _coerce(key, value, kind):
    if isinstance(value, kind) and not (kind is int and isinstance(value, bool)):
        return value
    try:
        if kind is int:
            return int(str(value).strip())
        if kind is float:
            return float(str(value).strip())
        return str(value).strip()
    except ValueError:
        raise ConfigError(f"{key}: cannot read {value!r} as {kind.__name__}") from None


def load_config(path=None, **overrides) -> PipelineConfig:
    """Defaults, then the file at ``path`` (if any), then ``overrides``; validated."""
    cfg = PipelineConfig()
    if path is not None:
        path = Path(path)
        parser = configparser.ConfigParser(
            comment_prefixes=("#", ";"), inline_comment_prefixes=("#",), interpolation=None
        )
        try:
            parser.read_string("[pipeline]\n" + path.read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from None
        cfg = cfg.updated(**dict(parser["pipeline"]))
    overrides = {k: v for k, v in overrides.items() if v is not None}
    return cfg.updated(**overrides).validate()
