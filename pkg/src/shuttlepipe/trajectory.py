"""Shuttlecock trajectory cleanup: jump removal, static-end trimming, gap filling.

A trajectory is a dense list of :class:`TrajectoryPoint`, one per frame with
consecutive frame indices. Cleanup never moves a detected point; it only
changes provenance flags and fills gaps.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from . import _kernels

DETECTED = "detected"
INTERPOLATED = "interpolated"
REMOVED = "removed"
MISSING = "missing"
PROVENANCES = (DETECTED, INTERPOLATED, REMOVED, MISSING)


@dataclass(frozen=True)
class TrajectoryPoint:
    frame_index: int
    position: Optional[tuple[float, float]] = None
    confidence: float = 0.0
    provenance: str = MISSING

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")
        if (self.provenance == MISSING) != (self.position is None):
            raise ValueError("position must be absent exactly when provenance is 'missing'")

    @property
    def present(self) -> bool:
        """True for points that count as a shuttle location (detected or interpolated)."""
        return self.provenance in (DETECTED, INTERPOLATED)


@dataclass
class Heatmap:
    width: int
    height: int
    sigma: float
    values: np.ndarray  # shape (height, width)

    def value(self, u: int, v: int) -> float:
        return float(self.values[v, u])


def from_detections(frames, num_frames: Optional[int] = None) -> list[TrajectoryPoint]:
    """Build a dense trajectory from parsed detection frames.

    The highest-confidence shuttle candidate of each frame is used; frames
    absent from the stream or with no candidate become missing points.
    """
    by_frame = {fd.frame_index: fd for fd in frames}
    if num_frames is None:
        num_frames = max(by_frame) + 1 if by_frame else 0
    points = []
    for f in range(num_frames):
        fd = by_frame.get(f)
        best = fd.best_shuttle() if fd is not None else None
        if best is None:
            points.append(TrajectoryPoint(f))
        else:
            points.append(TrajectoryPoint(f, (best.x, best.y), best.confidence, DETECTED))
    return points


def _check_dense(points: Sequence[TrajectoryPoint]) -> None:
    for prev, cur in zip(points, points[1:]):
        if cur.frame_index != prev.frame_index + 1:
            raise ValueError(
                f"trajectory frames must be consecutive ({prev.frame_index} -> {cur.frame_index})"
            )


def _arrays(points):
    n = len(points)
    xs = np.zeros(n)
    ys = np.zeros(n)
    present = np.zeros(n, dtype=bool)
    for i, p in enumerate(points):
        if p.provenance == DETECTED:
            xs[i], ys[i] = p.position
            present[i] = True
    return xs, ys, present


def remove_jumps(
    points: Sequence[TrajectoryPoint], window: int = 7, threshold: float = 50.0
) -> list[TrajectoryPoint]:
    """Mark detected points far from their local median as removed.

    The median is taken per component over the detected points in a
    centered window of ``window`` frames. A point needs at least two detected
    neighbours in its window to be judged; otherwise it is kept.
    """
    if window < 3 or window % 2 == 0:
        raise ValueError(f"window must be an odd integer >= 3, got {window}")
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    _check_dense(points)
    xs, ys, present = _arrays(points)
    mask = _kernels.jump_mask(xs, ys, present, window, threshold)
    return [replace(p, provenance=REMOVED) if m else p for p, m in zip(points, mask)]


def trim_static_ends(
    points: Sequence[TrajectoryPoint], motion_eps: float = 5.0, min_run: int = 10
) -> tuple[tuple[int, int], list[TrajectoryPoint]]:
    """Cut static runs off both ends of the rally.

    Only detected points take part. A prefix (suffix) run is the longest
    stretch of detected points, starting at the first (last) one, whose
    consecutive displacements are all at most ``motion_eps``. Runs with at
    least ``min_run`` points are cut.

    Returns ``((start_frame, end_frame), points)`` where the interval is
    half-open and empty when ``start_frame == end_frame``. Detected points
    outside the interval are marked removed.
    """
    if motion_eps <= 0:
        raise ValueError("motion_eps must be positive")
    if min_run < 1:
        raise ValueError("min_run must be >= 1")
    _check_dense(points)
    points = list(points)
    if not points:
        return (0, 0), points
    first, last = points[0].frame_index, points[-1].frame_index + 1
    idx = [i for i, p in enumerate(points) if p.provenance == DETECTED]
    if not idx:
        return (first, first), points

    def run_length(order):
        n = 1
        for a, b in zip(order, order[1:]):
            (xa, ya), (xb, yb) = points[a].position, points[b].position
            if math.hypot(xb - xa, yb - ya) > motion_eps:
                break
            n += 1
        return n

    head = run_length(idx)
    if head == len(idx):
        start, end = (first, first) if head >= min_run else (first, last)
    else:
        start, end = first, last
        if head >= min_run:
            start = points[idx[head]].frame_index
        tail = run_length(idx[::-1])
        if tail >= min_run:
            end = max(start, points[idx[-tail - 1]].frame_index + 1)
    out = []
    for p in points:
        if p.provenance == DETECTED and not start <= p.frame_index < end:
            p = replace(p, provenance=REMOVED)
        out.append(p)
    return (start, end), out


def interpolate_gaps(points: Sequence[TrajectoryPoint], max_gap: int = 12) -> list[TrajectoryPoint]:
    """Linearly fill short gaps between detected points.

    Gaps longer than ``max_gap`` frames, or touching either end of the
    sequence, are left alone. Detected points are never altered.
    """
    if max_gap < 0:
        raise ValueError("max_gap must be >= 0")
    _check_dense(points)
    out = list(points)
    anchors = [i for i, p in enumerate(out) if p.provenance == DETECTED]
    for a, b in zip(anchors, anchors[1:]):
        gap = b - a - 1
        if gap == 0 or gap > max_gap:
            continue
        (xa, ya), (xb, yb) = out[a].position, out[b].position
        span = b - a
        for k in range(1, span):
            t = k / span
            pos = (xa + (xb - xa) * t, ya + (yb - ya) * t)
            out[a + k] = TrajectoryPoint(out[a + k].frame_index, pos, 0.0, INTERPOLATED)
    return out


def denoise(
    points: Sequence[TrajectoryPoint],
    window: int = 7,
    threshold: float = 50.0,
    motion_eps: float = 5.0,
    min_run: int = 10,
    max_gap: int = 12,
) -> tuple[tuple[int, int], list[TrajectoryPoint]]:
    """Full cleanup: jump removal, then static-end trimming, then gap filling."""
    cleaned = remove_jumps(points, window, threshold)
    interval, cleaned = trim_static_ends(cleaned, motion_eps, min_run)
    return interval, interpolate_gaps(cleaned, max_gap)


def render_heatmap(
    target: Optional[tuple[float, float]], sigma: float, width: int, height: int
) -> Heatmap:
    """Gaussian supervision target peaked at ``target`` (all zeros without one)."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    values = np.zeros((height, width))
    if target is not None:
        x, y = target
        if not (0 <= x < width and 0 <= y < height):
            raise ValueError(f"target {target} outside {width}x{height} grid")
        u = np.arange(width, dtype=np.float64)
        v = np.arange(height, dtype=np.float64)
        gx = np.exp(-((u - x) ** 2) / (2.0 * sigma**2))
        gy = np.exp(-((v - y) ** 2) / (2.0 * sigma**2))
        values = np.outer(gy, gx)
    return Heatmap(width, height, sigma, values)


def nearest_position(points: Sequence[TrajectoryPoint], frame: int) -> Optional[tuple[float, float]]:
    """Position of the present point closest in time to ``frame`` (earlier wins ties)."""
    best = None
    best_d = None
    for p in points:
        if not p.present:
            continue
        d = abs(p.frame_index - frame)
        if best_d is None or d < best_d:
            best, best_d = p.position, d
    return best


def dump_csv(points: Sequence[TrajectoryPoint]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["frame", "x", "y", "provenance"])
    for p in points:
        if p.position is None:
            writer.writerow([p.frame_index, "", "", p.provenance])
        else:
            writer.writerow([p.frame_index, repr(p.position[0]), repr(p.position[1]), p.provenance])
    return buf.getvalue()
