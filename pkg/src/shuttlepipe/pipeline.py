"""End-to-end assembly of shot records from detector and clip-classifier outputs."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Optional

from . import events as ev
from . import features as ft
from . import io_streams as ios
from . import trajectory as tr
from .config import PipelineConfig

ATTRIBUTE_COLUMNS = (
    "RoundHead",
    "Backhand",
    "BallHeight",
    "BallType",
    "Winner",
    "HitterDX",
    "HitterDY",
    "DefenderDX",
    "DefenderDY",
    "LandingDX",
    "LandingDY",
)


@dataclass
class PredictResult:
    shots: list[ios.ShotRecord]
    events: list[ev.HitEvent]
    trajectory: list[tr.TrajectoryPoint]
    interval: tuple[int, int]
    rois: Optional[dict[str, ft.BoundingBox]] = None
    num_frames: int = 0


@dataclass
class DenoiseResult:
    raw: list[tr.TrajectoryPoint]
    jump_cleaned: list[tr.TrajectoryPoint]
    interval: tuple[int, int]
    final: list[tr.TrajectoryPoint] = field(default_factory=list)


def denoise_points(points, cfg: PipelineConfig) -> DenoiseResult:
    jumped = tr.remove_jumps(points, cfg.jump_window, cfg.jump_threshold)
    interval, trimmed = tr.trim_static_ends(jumped, cfg.motion_eps, cfg.min_static_run)
    final = tr.interpolate_gaps(trimmed, cfg.max_gap)
    return DenoiseResult(list(points), jumped, interval, final)


def parse_attributes(text: str) -> dict[int, dict[str, str]]:
    """Per-shot classifier outputs keyed by ShotSeq; every column is optional."""
    reader = csv.DictReader(io.StringIO(text))
    if not reader.fieldnames or "ShotSeq" not in reader.fieldnames:
        raise ios.StreamParseError(1, "attributes file needs a ShotSeq column")
    unknown = set(reader.fieldnames) - set(ATTRIBUTE_COLUMNS) - {"ShotSeq", "VideoName"}
    if unknown:
        raise ios.StreamParseError(1, f"unknown attribute columns {sorted(unknown)}")
    out = {}
    for lineno, row in enumerate(reader, start=2):
        try:
            seq = int(row["ShotSeq"])
        except ValueError:
            raise ios.StreamParseError(lineno, f"bad ShotSeq {row['ShotSeq']!r}") from None
        if seq in out:
            raise ios.StreamParseError(lineno, f"duplicate ShotSeq {seq}")
        out[seq] = {k: v.strip() for k, v in row.items() if k in ATTRIBUTE_COLUMNS and v and v.strip()}
    return out


def _player_box(frames_by_index, frame: int, pid: str) -> Optional[ft.BoundingBox]:
    """The player's box in the frame closest to ``frame`` that has one."""
    best, best_d = None, None
    for f, fd in frames_by_index.items():
        for b in fd.boxes:
            if b.cls == "player" and b.player_id == pid:
                d = abs(f - frame)
                if best_d is None or d < best_d or (d == best_d and f < best[0]):
                    best, best_d = (f, ft.BoundingBox(b.x_min, b.y_min, b.x_max, b.y_max)), d
    return None if best is None else best[1]


def _last_rois(frames, cfg: PipelineConfig):
    for fd in reversed(frames):
        courts, nets = fd.boxes_of("court"), fd.boxes_of("net")
        if courts and nets:
            c = max(courts, key=lambda b: b.confidence)
            n = max(nets, key=lambda b: b.confidence)
            court = ft.BoundingBox(c.x_min, c.y_min, c.x_max, c.y_max)
            net = ft.BoundingBox(n.x_min, n.y_min, n.x_max, n.y_max)
            try:
                return ft.winner_rois(court, net, cfg.strip_frac, cfg.frame_width, cfg.frame_height)
            except ValueError:
                return None
    return None


def predict(
    frames: list[ios.FrameDetections],
    clips: list[ev.ClipPrediction],
    cfg: PipelineConfig,
    attributes: Optional[dict[int, dict[str, str]]] = None,
) -> PredictResult:
    attributes = attributes or {}
    frames = ios.assign_player_ids(frames, cfg.lower_player)
    num_frames = 0
    if frames:
        num_frames = frames[-1].frame_index + 1
    if clips:
        num_frames = max(num_frames, clips[-1].clip_start + cfg.clip_len)
    points = tr.from_detections(frames, num_frames)
    den = denoise_points(points, cfg)
    hits = ev.detect_shots(clips, cfg.smooth_window, cfg.min_run_len, cfg.clip_len, cfg.hit_frame_mode)
    by_index = {fd.frame_index: fd for fd in frames}
    frame_center = (cfg.frame_width / 2.0, cfg.frame_height / 2.0)
    W, H = cfg.frame_width, cfg.frame_height

    def shuttle_at(frame):
        pos = tr.nearest_position(den.final, frame)
        if pos is None:
            pos = tr.nearest_position(den.jump_cleaned, frame)
        return pos if pos is not None else frame_center

    def offset(attrs, prefix):
        return ft.OffsetPair(float(attrs.get(prefix + "DX", 0.0)), float(attrs.get(prefix + "DY", 0.0)))

    shots = []
    for i, hit in enumerate(hits):
        seq = i + 1
        attrs = attributes.get(seq, {})
        shuttle = shuttle_at(hit.hit_frame)
        defender = "B" if hit.hitter == "A" else "A"
        locations = {}
        for role, pid in (("Hitter", hit.hitter), ("Defender", defender)):
            box = _player_box(by_index, hit.hit_frame, pid)
            corner = ft.nearest_lower_corner(box, shuttle) if box is not None else shuttle
            locations[role] = ft.apply_offset(corner, offset(attrs, role), W, H)
        if i + 1 < len(hits):
            land = shuttle_at(hits[i + 1].hit_frame)
        else:
            # where the shuttle comes to rest, before static-end trimming
            land = tr.nearest_position(den.jump_cleaned, num_frames - 1) or shuttle
        landing = ft.apply_offset(land, offset(attrs, "Landing"), W, H)
        winner = attrs.get("Winner") if seq == len(hits) else None
        if winner in ("none", "X", ""):
            winner = None
        shots.append(
            ios.ShotRecord(
                shot_seq=seq,
                hit_frame=hit.hit_frame,
                hitter=hit.hitter,
                round_head=int(attrs.get("RoundHead", cfg.default_round_head)),
                backhand=int(attrs.get("Backhand", cfg.default_backhand)),
                ball_height=int(attrs.get("BallHeight", cfg.default_ball_height)),
                landing_x=landing[0],
                landing_y=landing[1],
                hitter_x=locations["Hitter"][0],
                hitter_y=locations["Hitter"][1],
                defender_x=locations["Defender"][0],
                defender_y=locations["Defender"][1],
                ball_type=int(attrs.get("BallType", cfg.default_ball_type)),
                winner=winner,
            )
        )
    return PredictResult(shots, hits, den.final, den.interval, _last_rois(frames, cfg), num_frames)
