"""Scoring of shot predictions against ground truth, and detection F1."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from .io_streams import ShotRecord

TASKS = (
    "shot_count",
    "hit_frame",
    "hitter",
    "round_head",
    "backhand",
    "ball_height",
    "landing",
    "hitter_location",
    "defender_location",
    "ball_type",
    "winner",
)

_EXACT_FIELDS = {
    "hitter": "hitter",
    "round_head": "round_head",
    "backhand": "backhand",
    "ball_height": "ball_height",
    "ball_type": "ball_type",
    "winner": "winner",
}
_LOCATION_FIELDS = {
    "landing": ("landing_x", "landing_y"),
    "hitter_location": ("hitter_x", "hitter_y"),
    "defender_location": ("defender_x", "defender_y"),
}


def location_error(pred: tuple[float, float], gt: tuple[float, float]) -> float:
    return math.hypot(pred[0] - gt[0], pred[1] - gt[1])


def _by_seq(shots: Sequence[ShotRecord], who: str) -> list[ShotRecord]:
    seen = {}
    for s in shots:
        if s.shot_seq in seen:
            raise ValueError(f"duplicate shot_seq {s.shot_seq} in {who}")
        seen[s.shot_seq] = s
    return [seen[k] for k in sorted(seen)]


def score_video(
    pred: Sequence[ShotRecord],
    gt: Sequence[ShotRecord],
    location_tol: float = 10.0,
    hit_frame_tol: int = 2,
) -> dict[str, float]:
    """Per-task scores in [0, 1] for one video.

    A shot-count mismatch scores 0 on every task, since shots cannot be
    paired. Otherwise shots pair by ``shot_seq``.
    """
    pred = _by_seq(pred, "predictions")
    gt = _by_seq(gt, "ground truth")
    if len(pred) != len(gt):
        return {t: 0.0 for t in TASKS}
    scores = {"shot_count": 1.0}
    n = len(gt)
    if n == 0:
        scores.update({t: 1.0 for t in TASKS[1:]})
        return scores
    pairs = list(zip(pred, gt))
    scores["hit_frame"] = sum(abs(p.hit_frame - g.hit_frame) <= hit_frame_tol for p, g in pairs) / n
    for task, attr in _EXACT_FIELDS.items():
        scores[task] = sum(getattr(p, attr) == getattr(g, attr) for p, g in pairs) / n
    for task, (ax, ay) in _LOCATION_FIELDS.items():
        hits = 0
        for p, g in pairs:
            err = location_error((getattr(p, ax), getattr(p, ay)), (getattr(g, ax), getattr(g, ay)))
            hits += err <= location_tol
        scores[task] = hits / n
    return {t: scores[t] for t in TASKS}


@dataclass
class ScoreReport:
    per_video: dict[str, dict[str, float]]
    weights: dict[str, float]
    location_tol: float
    hit_frame_tol: int
    per_task: dict[str, float] = field(init=False)
    aggregate: float = field(init=False)

    def __post_init__(self):
        videos = list(self.per_video.values())
        self.per_task = {
            t: (sum(v[t] for v in videos) / len(videos)) if videos else 0.0 for t in TASKS
        }
        total_w = sum(self.weights.values())
        self.aggregate = sum(self.per_task[t] * self.weights[t] for t in TASKS) / total_w

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["VideoName", *TASKS, "aggregate"])
        total_w = sum(self.weights.values())
        for video in sorted(self.per_video):
            s = self.per_video[video]
            agg = sum(s[t] * self.weights[t] for t in TASKS) / total_w
            writer.writerow([video, *(f"{s[t]:.6f}" for t in TASKS), f"{agg:.6f}"])
        return buf.getvalue()

    def summary(self) -> str:
        lines = [
            f"# configured: location_tol={self.location_tol:g}px "
            f"hit_frame_tol={self.hit_frame_tol} weights="
            + ("equal" if len(set(self.weights.values())) == 1 else repr(self.weights)),
            f"{'task':<20}{'score':>8}",
        ]
        for t in TASKS:
            lines.append(f"{t:<20}{self.per_task[t]:>8.4f}")
        lines.append(f"{'aggregate':<20}{self.aggregate:>8.4f}")
        lines.append(f"videos: {len(self.per_video)}")
        return "\n".join(lines) + "\n"


def score_all(
    pred: Mapping[str, Sequence[ShotRecord]],
    gt: Mapping[str, Sequence[ShotRecord]],
    location_tol: float = 10.0,
    hit_frame_tol: int = 2,
    weights: Optional[Mapping[str, float]] = None,
) -> ScoreReport:
    """Score every ground-truth video; videos without predictions count as zero shots."""
    if weights is None:
        weights = {t: 1.0 for t in TASKS}
    weights = {t: float(weights.get(t, 0.0)) for t in TASKS}
    if any(w < 0 for w in weights.values()) or sum(weights.values()) <= 0:
        raise ValueError("task weights must be non-negative with a positive sum")
    per_video = {
        video: score_video(pred.get(video, []), shots, location_tol, hit_frame_tol)
        for video, shots in gt.items()
    }
    return ScoreReport(per_video, weights, location_tol, hit_frame_tol)


def detection_f1(pred, gt, dist_thresh: float = 4.0) -> tuple[float, float, float]:
    """Per-frame precision, recall and F1 of shuttlecock detections.

    ``pred`` and ``gt`` are sequences of trajectory points (anything with
    ``frame_index``, ``position`` and ``present``). A frame is a true
    positive when both are present within ``dist_thresh`` pixels.
    """
    p_map = {p.frame_index: p.position for p in pred if p.present}
    g_map = {g.frame_index: g.position for g in gt if g.present}
    tp = fp = fn = 0
    for f in set(p_map) | set(g_map):
        pp, gp = p_map.get(f), g_map.get(f)
        if pp is not None and gp is not None and location_error(pp, gp) <= dist_thresh:
            tp += 1
            continue
        if pp is not None:
            fp += 1
        if gp is not None:
            fn += 1
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1
