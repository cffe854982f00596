"""Synthetic rallies with ground truth, for closed-loop checks of cleanup and event logic.

All randomness comes from ``numpy.random.default_rng(seed)`` (PCG64), so a
seed reproduces the same rally and corruption log on any platform.

Rally shape: the shuttle sits still, moves for a few frames in the
direction opposite to the first shot (so the first hit reverses it like
every later one), then flies between hitting points along arcs with
constant downward image-space acceleration. Each arc is monotone in y, so
the y-velocity changes sign exactly at the hit frames. After the last hit
the shuttle flies to a landing point and rests there.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .events import ClipPrediction, HitEvent, clips_from_labels, label_windows
from .features import BoundingBox, nearest_lower_corner
from .io_streams import DetectionBox, FrameDetections, ShotRecord, ShuttleCandidate
from .trajectory import DETECTED, TrajectoryPoint

CLEAN, JUMPED, DROPPED, JITTERED = "clean", "jumped", "dropped", "jittered"


@dataclass(frozen=True)
class NoiseSpec:
    jump_rate: float = 0.0
    dropout_rate: float = 0.0
    jitter_sigma: float = 0.0
    jump_min: float = 100.0
    jump_max: float = 250.0

    def __post_init__(self):
        for name in ("jump_rate", "dropout_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        if self.jump_rate + self.dropout_rate > 1.0:
            raise ValueError("jump_rate + dropout_rate must not exceed 1")
        if self.jitter_sigma < 0:
            raise ValueError("jitter_sigma must be >= 0")
        if not 0 < self.jump_min <= self.jump_max:
            raise ValueError("need 0 < jump_min <= jump_max")


@dataclass(frozen=True)
class RallySpec:
    num_shots: int = 10
    frames_per_shot: tuple[int, int] = (30, 50)
    frame_size: tuple[int, int] = (1280, 720)
    court: BoundingBox = BoundingBox(300.0, 180.0, 980.0, 680.0)
    net: BoundingBox = BoundingBox(280.0, 360.0, 1000.0, 420.0)
    static_frames: tuple[int, int] = (20, 40)
    toss_frames: int = 8
    toss_speed: float = 7.0
    arc_bend: float = 0.5
    player_size: tuple[float, float] = (70.0, 160.0)
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    seed: int = 0

    def __post_init__(self):
        if self.num_shots < 0:
            raise ValueError("num_shots must be >= 0")
        lo, hi = self.frames_per_shot
        if not 6 <= lo <= hi:
            raise ValueError("frames_per_shot must satisfy 6 <= low <= high")
        fw, fh = self.frame_size
        c, n = self.court, self.net
        if c.width <= 0 or c.height <= 0:
            raise ValueError("court has zero area")
        if c.x_min < 0 or c.y_min < 0 or c.x_max > fw or c.y_max > fh:
            raise ValueError("court must lie inside the frame")
        if n.x_max < c.x_min or n.x_min > c.x_max:
            raise ValueError("net does not overlap the court horizontally")
        if not c.y_min < n.center[1] < c.y_max:
            raise ValueError("net must sit between the court's far and near baselines")
        if not 0 <= self.arc_bend < 1:
            raise ValueError("arc_bend must be in [0, 1)")


@dataclass
class Rally:
    spec: RallySpec
    num_frames: int
    clean: list[TrajectoryPoint]
    events: list[HitEvent]
    players: dict[str, list[BoundingBox]]
    clips: list[ClipPrediction]
    shots: list[ShotRecord]
    motion: tuple[int, int]  # half-open frame span where the shuttle moves


@dataclass
class NoisyStream:
    points: list[TrajectoryPoint]
    log: list[str]  # one entry per frame: clean / jumped / dropped / jittered


def _arc(p0, p1, n, bend):
    """Positions for frames 1..n of a flight from p0 to p1 lasting n frames.

    x is linear; y has constant acceleration ``bend * 2|dy| / n**2`` toward
    the bottom of the image, which keeps y monotone over the flight.
    """
    (x0, y0), (x1, y1) = p0, p1
    dy = y1 - y0
    acc = bend * 2.0 * abs(dy) / (n * n)
    v0 = dy / n - 0.5 * acc * n
    t = np.arange(1, n + 1, dtype=np.float64)
    xs = x0 + (x1 - x0) * t / n
    ys = y0 + v0 * t + 0.5 * acc * t * t
    xs[-1], ys[-1] = x1, y1
    return xs, ys


def generate_rally(spec: RallySpec) -> Rally:
    rng = np.random.default_rng(spec.seed)
    c = spec.court
    net_y = spec.net.center[1]
    pw, ph = spec.player_size

    def hit_point(player):
        x = rng.uniform(c.x_min + 0.15 * c.width, c.x_max - 0.15 * c.width)
        if player == "A":  # near side, bottom of the image
            y = rng.uniform(net_y + 0.45 * (c.y_max - net_y), c.y_max - 0.1 * (c.y_max - net_y))
        else:
            y = rng.uniform(c.y_min + 0.1 * (net_y - c.y_min), net_y - 0.45 * (net_y - c.y_min))
        return (float(x), float(y))

    first = "A" if rng.random() < 0.5 else "B"
    hitters = [first if i % 2 == 0 else ("B" if first == "A" else "A") for i in range(spec.num_shots)]
    pad_lo, pad_hi = spec.static_frames
    lead = int(rng.integers(pad_lo, pad_hi + 1))
    tail = int(rng.integers(pad_lo, pad_hi + 1))

    xs: list[float] = []
    ys: list[float] = []
    events = []
    hit_positions = []
    if spec.num_shots == 0:
        rest = hit_point("A")
        total = lead + tail
        xs = [rest[0]] * total
        ys = [rest[1]] * total
        motion = (lead, lead)
    else:
        points = [hit_point(h) for h in hitters]
        other = "B" if hitters[-1] == "A" else "A"
        landing = hit_point(other)
        # toss: move against the first shot's vertical direction
        first_dir = math.copysign(1.0, (landing if spec.num_shots == 1 else points[1])[1] - points[0][1])
        toss_len = spec.toss_frames
        start = (points[0][0], points[0][1] + first_dir * spec.toss_speed * toss_len)
        xs += [start[0]] * lead
        ys += [start[1]] * lead
        for k in range(1, toss_len + 1):
            xs.append(start[0])
            ys.append(start[1] - first_dir * spec.toss_speed * k)
        motion_start = lead
        targets = points[1:] + [landing]
        lo, hi = spec.frames_per_shot
        for i, (p0, p1) in enumerate(zip(points, targets)):
            frame = len(xs) - 1
            events.append(HitEvent(frame, hitters[i], 0, 0))
            hit_positions.append(p0)
            n = int(rng.integers(lo, hi + 1))
            ax, ay = _arc(p0, p1, n, spec.arc_bend)
            xs.extend(ax.tolist())
            ys.extend(ay.tolist())
        motion = (motion_start, len(xs))
        xs += [landing[0]] * tail
        ys += [landing[1]] * tail
    num_frames = len(xs)
    fw, fh = spec.frame_size
    xs = np.clip(xs, 0, fw - 1).tolist()
    ys = np.clip(ys, 0, fh - 1).tolist()
    clean = [TrajectoryPoint(i, (xs[i], ys[i]), 1.0, DETECTED) for i in range(num_frames)]

    # players stand so the shuttle meets them at their upper body on hit frames
    players = _player_tracks(spec, events, hit_positions, num_frames, rng)

    labels = label_windows([(e.hit_frame, e.hitter) for e in events], num_frames)
    clips = clips_from_labels(labels)
    shots = _ground_truth_shots(events, clean, players, spec)
    return Rally(spec, num_frames, clean, events, players, clips, shots, motion)


def _player_tracks(spec, events, hit_positions, num_frames, rng):
    pw, ph = spec.player_size
    c = spec.court
    net_y = spec.net.center[1]
    home = {
        "A": (c.center[0], (net_y + c.y_max) / 2.0),
        "B": (c.center[0], (c.y_min + net_y) / 2.0),
    }
    tracks = {}
    for pid in ("A", "B"):
        keys = [(0, home[pid])]
        for e, pos in zip(events, hit_positions):
            if e.hitter == pid:
                # shuttle sits a third of the way down the box, off to one side
                side = 1.0 if rng.random() < 0.5 else -1.0
                cx = pos[0] + side * 0.3 * pw
                cy = pos[1] + ph / 2.0 - ph / 3.0
                keys.append((e.hit_frame, (cx, cy)))
        keys.append((num_frames - 1, keys[-1][1]))
        frames = np.array([k[0] for k in keys], dtype=np.float64)
        cxs = np.array([k[1][0] for k in keys])
        cys = np.array([k[1][1] for k in keys])
        f = np.arange(num_frames, dtype=np.float64)
        px = np.interp(f, frames, cxs)
        py = np.interp(f, frames, cys)
        tracks[pid] = [
            BoundingBox(px[i] - pw / 2, py[i] - ph / 2, px[i] + pw / 2, py[i] + ph / 2)
            for i in range(num_frames)
        ]
    return tracks


def _ground_truth_shots(events, clean, players, spec):
    shots = []
    for i, e in enumerate(events):
        hitter_box = players[e.hitter][e.hit_frame]
        defender = "B" if e.hitter == "A" else "A"
        defender_box = players[defender][e.hit_frame]
        shuttle = clean[e.hit_frame].position
        land_frame = events[i + 1].hit_frame if i + 1 < len(events) else len(clean) - 1
        landing = clean[land_frame].position
        hx, hy = nearest_lower_corner(hitter_box, shuttle)
        dx, dy = nearest_lower_corner(defender_box, shuttle)
        shots.append(
            ShotRecord(
                shot_seq=i + 1,
                hit_frame=e.hit_frame,
                hitter=e.hitter,
                landing_x=float(landing[0]),
                landing_y=float(landing[1]),
                hitter_x=float(hx),
                hitter_y=float(hy),
                defender_x=float(dx),
                defender_y=float(dy),
            )
        )
    return shots


def inject_noise(
    clean: list[TrajectoryPoint],
    noise: NoiseSpec,
    seed: int = 0,
    frame_size: tuple[int, int] = (1280, 720),
) -> NoisyStream:
    """Corrupt a clean stream frame by frame.

    Each present frame draws once: below ``dropout_rate`` it goes missing;
    in the next ``jump_rate`` it is displaced by ``jump_min``..``jump_max``
    pixels in a uniform direction (redrawn until it lands in the frame, up
    to 1000 tries);
    otherwise it gets Gaussian jitter of ``jitter_sigma`` per axis.
    """
    rng = np.random.default_rng(seed)
    fw, fh = frame_size
    out = []
    log = []
    for p in clean:
        if p.position is None:
            out.append(p)
            log.append(CLEAN)
            continue
        u = rng.random()
        if u < noise.dropout_rate:
            out.append(TrajectoryPoint(p.frame_index))
            log.append(DROPPED)
        elif u < noise.dropout_rate + noise.jump_rate:
            # points far outside the frame may never land inside; keep the last draw then
            for _ in range(1000):
                r = rng.uniform(noise.jump_min, noise.jump_max)
                theta = rng.uniform(0.0, 2.0 * math.pi)
                x = p.position[0] + r * math.cos(theta)
                y = p.position[1] + r * math.sin(theta)
                if 0 <= x < fw and 0 <= y < fh:
                    break
            out.append(TrajectoryPoint(p.frame_index, (x, y), p.confidence, DETECTED))
            log.append(JUMPED)
        elif noise.jitter_sigma > 0:
            jx, jy = rng.normal(0.0, noise.jitter_sigma, size=2)
            pos = (p.position[0] + float(jx), p.position[1] + float(jy))
            out.append(TrajectoryPoint(p.frame_index, pos, p.confidence, DETECTED))
            log.append(JITTERED)
        else:
            out.append(p)
            log.append(CLEAN)
    return NoisyStream(out, log)


def to_frame_detections(rally: Rally, points: list[TrajectoryPoint]) -> list[FrameDetections]:
    """Detection-stream records for a (possibly noisy) rally."""
    c, n = rally.spec.court, rally.spec.net
    frames = []
    for p in points:
        cands = ()
        if p.position is not None and p.provenance == DETECTED:
            cands = (ShuttleCandidate(p.position[0], p.position[1], 0.9),)
        boxes = [
            DetectionBox("court", c.x_min, c.y_min, c.x_max, c.y_max, 0.99),
            DetectionBox("net", n.x_min, n.y_min, n.x_max, n.y_max, 0.99),
        ]
        for pid in ("A", "B"):
            b = rally.players[pid][p.frame_index]
            boxes.append(DetectionBox("player", b.x_min, b.y_min, b.x_max, b.y_max, 0.95, pid))
        frames.append(FrameDetections(p.frame_index, cands, tuple(boxes)))
    return frames


def corruptions_csv(log: list[str]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["frame", "corruption"])
    for i, kind in enumerate(log):
        if kind != CLEAN:
            writer.writerow([i, kind])
    return buf.getvalue()


def y_velocity_reversals(points: list[TrajectoryPoint]) -> list[int]:
    """Frames at which the sign of the y-velocity flips (zero steps are skipped).

    The reported frame is the turning point: the last frame before the new
    direction starts.
    """
    ys = [p.position[1] for p in points]
    out = []
    last_sign: Optional[float] = None
    for i in range(1, len(ys)):
        d = ys[i] - ys[i - 1]
        if d == 0:
            continue
        s = math.copysign(1.0, d)
        if last_sign is not None and s != last_sign:
            out.append(i - 1)
        last_sign = s
    return out
