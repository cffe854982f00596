"""Readers and writers for detector streams, clip predictions and prediction CSVs.

Detection streams are line-delimited JSON, one object per frame::

    {"frame": 12, "shuttle": [[640.0, 360.0, 0.9]],
     "boxes": [{"cls": "player", "bbox": [500, 400, 580, 620], "conf": 0.95, "player": "A"}]}

A frame without a shuttlecock carries an empty ``shuttle`` list. Clip
predictions are CSV rows ``clip_start,label[,p_none,p_a,p_b]`` with labels
``N``, ``A`` or ``B``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Optional

from .events import ClipPrediction

BOX_CLASSES = ("player", "court", "net", "racket")
PLAYERS = ("A", "B")
CLIP_LABELS = {"N": None, "A": "A", "B": "B"}

PREDICTION_COLUMNS = [
    "VideoName",
    "ShotSeq",
    "HitFrame",
    "Hitter",
    "RoundHead",
    "Backhand",
    "BallHeight",
    "LandingX",
    "LandingY",
    "HitterLocationX",
    "HitterLocationY",
    "DefenderLocationX",
    "DefenderLocationY",
    "BallType",
    "Winner",
]


class StreamParseError(ValueError):
    """Raised for malformed input records; carries the 1-based line number."""

    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class ShuttleCandidate(NamedTuple):
    x: float
    y: float
    confidence: float


@dataclass(frozen=True)
class DetectionBox:
    cls: str
    x_min: float
    y_min: float
    x_max: float
    y_max: float
    confidence: float = 1.0
    player_id: Optional[str] = None

    def __post_init__(self):
        if self.cls not in BOX_CLASSES:
            raise ValueError(f"unknown box class {self.cls!r}")
        if self.x_min > self.x_max or self.y_min > self.y_max:
            raise ValueError(
                f"inverted box ({self.x_min}, {self.y_min}, {self.x_max}, {self.y_max})"
            )
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")
        if self.player_id is not None and self.player_id not in PLAYERS:
            raise ValueError(f"player_id must be 'A' or 'B', got {self.player_id!r}")

    @property
    def center(self) -> tuple[float, float]:
        return ((self.x_min + self.x_max) / 2.0, (self.y_min + self.y_max) / 2.0)


@dataclass(frozen=True)
class FrameDetections:
    frame_index: int
    shuttle_candidates: tuple[ShuttleCandidate, ...] = ()
    boxes: tuple[DetectionBox, ...] = ()

    def __post_init__(self):
        if self.frame_index < 0:
            raise ValueError("frame_index must be >= 0")
        for c in self.shuttle_candidates:
            if not 0.0 <= c.confidence <= 1.0:
                raise ValueError(f"confidence {c.confidence} outside [0, 1]")

    def best_shuttle(self) -> Optional[ShuttleCandidate]:
        if not self.shuttle_candidates:
            return None
        return max(self.shuttle_candidates, key=lambda c: c.confidence)

    def boxes_of(self, cls: str) -> list[DetectionBox]:
        return [b for b in self.boxes if b.cls == cls]


@dataclass(frozen=True)
class ShotRecord:
    """One shot's challenge targets."""

    shot_seq: int
    hit_frame: int
    hitter: str
    round_head: int = 2
    backhand: int = 2
    ball_height: int = 2
    landing_x: float = 0.0
    landing_y: float = 0.0
    hitter_x: float = 0.0
    hitter_y: float = 0.0
    defender_x: float = 0.0
    defender_y: float = 0.0
    ball_type: int = 1
    winner: Optional[str] = None

    def __post_init__(self):
        if self.shot_seq < 1:
            raise ValueError("shot_seq must be >= 1")
        if self.hit_frame < 0:
            raise ValueError("hit_frame must be >= 0")
        if self.hitter not in PLAYERS:
            raise ValueError(f"hitter must be 'A' or 'B', got {self.hitter!r}")
        for name in ("round_head", "backhand", "ball_height"):
            if getattr(self, name) not in (1, 2):
                raise ValueError(f"{name} must be 1 or 2")
        if not 1 <= self.ball_type <= 9:
            raise ValueError(f"ball_type must be in 1..9, got {self.ball_type}")
        if self.winner is not None and self.winner not in PLAYERS:
            raise ValueError(f"winner must be 'A', 'B' or None, got {self.winner!r}")


# -- detection streams -------------------------------------------------------


def _parse_box(obj) -> DetectionBox:
    bbox = obj["bbox"]
    if len(bbox) != 4:
        raise ValueError("bbox needs 4 numbers")
    return DetectionBox(
        cls=obj["cls"],
        x_min=float(bbox[0]),
        y_min=float(bbox[1]),
        x_max=float(bbox[2]),
        y_max=float(bbox[3]),
        confidence=float(obj.get("conf", 1.0)),
        player_id=obj.get("player"),
    )


def parse_detection_stream(text: str) -> list[FrameDetections]:
    """Parse a line-delimited JSON detection stream, sorted by frame index.

    Frames may be missing from the stream. Blank lines are ignored.
    """
    frames: dict[int, FrameDetections] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            frame = obj["frame"]
            if not isinstance(frame, int) or isinstance(frame, bool):
                raise ValueError("frame must be an integer")
            cands = []
            for c in obj.get("shuttle", []):
                if len(c) != 3:
                    raise ValueError("shuttle candidate needs [x, y, confidence]")
                cands.append(ShuttleCandidate(float(c[0]), float(c[1]), float(c[2])))
            boxes = tuple(_parse_box(b) for b in obj.get("boxes", []))
            record = FrameDetections(frame, tuple(cands), boxes)
        except (ValueError, KeyError, TypeError) as exc:
            raise StreamParseError(lineno, str(exc)) from exc
        if frame in frames:
            raise StreamParseError(lineno, f"duplicate frame index {frame}")
        frames[frame] = record
    return [frames[k] for k in sorted(frames)]


def dump_detection_stream(frames: Iterable[FrameDetections]) -> str:
    lines = []
    for fd in sorted(frames, key=lambda f: f.frame_index):
        obj = {
            "frame": fd.frame_index,
            "shuttle": [[c.x, c.y, c.confidence] for c in fd.shuttle_candidates],
            "boxes": [],
        }
        for b in fd.boxes:
            box = {"cls": b.cls, "bbox": [b.x_min, b.y_min, b.x_max, b.y_max], "conf": b.confidence}
            if b.player_id is not None:
                box["player"] = b.player_id
            obj["boxes"].append(box)
        lines.append(json.dumps(obj, separators=(",", ":")))
    return "".join(line + "\n" for line in lines)


def assign_player_ids(
    frames: list[FrameDetections], lower_player: str = "A"
) -> list[FrameDetections]:
    """Fill missing player ids from court position.

    The player whose box center lies below the court's horizontal midline gets
    ``lower_player``; the other one gets the opposite id. Frames without a
    court box reuse the last court seen; before any court is seen the frame
    midline of the boxes themselves is used.
    """
    if lower_player not in PLAYERS:
        raise ValueError("lower_player must be 'A' or 'B'")
    upper_player = "B" if lower_player == "A" else "A"
    midline = None
    out = []
    for fd in frames:
        courts = fd.boxes_of("court")
        if courts:
            court = max(courts, key=lambda b: b.confidence)
            midline = court.center[1]
        players = [b for b in fd.boxes if b.cls == "player" and b.player_id is None]
        if not players:
            out.append(fd)
            continue
        line = midline
        if line is None:
            ys = [b.center[1] for b in players]
            line = (min(ys) + max(ys)) / 2.0
        boxes = []
        for b in fd.boxes:
            if b.cls == "player" and b.player_id is None:
                pid = lower_player if b.center[1] > line else upper_player
                b = DetectionBox(b.cls, b.x_min, b.y_min, b.x_max, b.y_max, b.confidence, pid)
            boxes.append(b)
        out.append(FrameDetections(fd.frame_index, fd.shuttle_candidates, tuple(boxes)))
    return out


# -- clip predictions --------------------------------------------------------


def parse_clip_predictions(text: str, stride: int = 1) -> list[ClipPrediction]:
    """Parse ``clip_start,label[,p_none,p_a,p_b]`` rows.

    A leading header row (first field not an integer) is skipped. The result
    is sorted by clip start; starts must be consecutive at ``stride``.
    """
    preds = {}
    reader = csv.reader(io.StringIO(text))
    for lineno, row in enumerate(reader, start=1):
        if not row or not "".join(row).strip():
            continue
        row = [f.strip() for f in row]
        if lineno == 1 and not row[0].lstrip("-").isdigit():
            continue
        try:
            start = int(row[0])
        except ValueError:
            raise StreamParseError(lineno, f"bad clip start {row[0]!r}") from None
        if len(row) < 2 or row[1] not in CLIP_LABELS:
            label = row[1] if len(row) > 1 else ""
            raise StreamParseError(lineno, f"unknown clip label {label!r}")
        probs = None
        if len(row) > 2:
            if len(row) != 5:
                raise StreamParseError(lineno, "expected three class probabilities")
            try:
                probs = tuple(float(p) for p in row[2:])
            except ValueError:
                raise StreamParseError(lineno, "non-numeric probability") from None
            if any(not 0.0 <= p <= 1.0 for p in probs):
                raise StreamParseError(lineno, "probability outside [0, 1]")
            if abs(math.fsum(probs) - 1.0) > 1e-6:
                raise StreamParseError(lineno, f"probabilities sum to {math.fsum(probs)!r}")
        if start in preds:
            raise StreamParseError(lineno, f"duplicate clip start {start}")
        preds[start] = ClipPrediction(start, CLIP_LABELS[row[1]], probs)
    out = [preds[k] for k in sorted(preds)]
    for prev, cur in zip(out, out[1:]):
        if cur.clip_start - prev.clip_start != stride:
            raise ValueError(
                f"clip starts {prev.clip_start} and {cur.clip_start} are not consecutive"
            )
    return out


def dump_clip_predictions(preds: Iterable[ClipPrediction]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["clip_start", "label"])
    codes = {None: "N", "A": "A", "B": "B"}
    for p in preds:
        row = [p.clip_start, codes[p.label]]
        if p.probs is not None:
            row.extend(repr(float(v)) for v in p.probs)
        writer.writerow(row)
    return buf.getvalue()


# -- prediction CSV ----------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, float):
        if v.is_integer():
            return str(int(v))
        return repr(v)
    return str(v)


def emit_predictions(video_name: str, shots: list[ShotRecord]) -> str:
    """Render shots as challenge-format CSV text (header plus one row per shot)."""
    for i, shot in enumerate(shots, start=1):
        if shot.shot_seq != i:
            raise ValueError(
                f"shot_seq must run 1..{len(shots)} contiguously, got {shot.shot_seq} at row {i}"
            )
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(PREDICTION_COLUMNS)
    for s in shots:
        writer.writerow(
            [
                video_name,
                s.shot_seq,
                s.hit_frame,
                s.hitter,
                s.round_head,
                s.backhand,
                s.ball_height,
                _fmt(float(s.landing_x)),
                _fmt(float(s.landing_y)),
                _fmt(float(s.hitter_x)),
                _fmt(float(s.hitter_y)),
                _fmt(float(s.defender_x)),
                _fmt(float(s.defender_y)),
                s.ball_type,
                s.winner if s.winner is not None else "none",
            ]
        )
    return buf.getvalue()


def parse_predictions(text: str) -> dict[str, list[ShotRecord]]:
    """Parse a prediction or ground-truth CSV into shots grouped by video.

    Shots within a video come back sorted by ``shot_seq``; duplicates raise.
    """
    reader = csv.DictReader(io.StringIO(text))
    missing = [c for c in PREDICTION_COLUMNS if c not in (reader.fieldnames or [])]
    if missing:
        raise StreamParseError(1, f"missing columns {missing}")
    videos: dict[str, dict[int, ShotRecord]] = {}
    for lineno, row in enumerate(reader, start=2):
        try:
            winner = row["Winner"].strip()
            shot = ShotRecord(
                shot_seq=int(row["ShotSeq"]),
                hit_frame=int(row["HitFrame"]),
                hitter=row["Hitter"].strip(),
                round_head=int(row["RoundHead"]),
                backhand=int(row["Backhand"]),
                ball_height=int(row["BallHeight"]),
                landing_x=float(row["LandingX"]),
                landing_y=float(row["LandingY"]),
                hitter_x=float(row["HitterLocationX"]),
                hitter_y=float(row["HitterLocationY"]),
                defender_x=float(row["DefenderLocationX"]),
                defender_y=float(row["DefenderLocationY"]),
                ball_type=int(row["BallType"]),
                winner=None if winner in ("", "none", "X") else winner,
            )
        except (ValueError, TypeError) as exc:
            raise StreamParseError(lineno, str(exc)) from exc
        shots = videos.setdefault(row["VideoName"], {})
        if shot.shot_seq in shots:
            raise StreamParseError(lineno, f"duplicate ShotSeq {shot.shot_seq}")
        shots[shot.shot_seq] = shot
    return {v: [s[k] for k in sorted(s)] for v, s in videos.items()}
