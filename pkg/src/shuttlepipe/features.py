"""Box geometry and input encodings for the location, RoundHead, BallType and Winner models."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence


@dataclass(frozen=True)
class BoundingBox:
    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        if self.x_min > self.x_max or self.y_min > self.y_max:
            raise ValueError(f"inverted box {tuple(self)}")

    def __iter__(self):
        return iter((self.x_min, self.y_min, self.x_max, self.y_max))

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def center(self) -> tuple[float, float]:
        return ((self.x_min + self.x_max) / 2.0, (self.y_min + self.y_max) / 2.0)

    def clip(self, frame_w: float, frame_h: float) -> "BoundingBox":
        return BoundingBox(
            min(max(self.x_min, 0.0), frame_w),
            min(max(self.y_min, 0.0), frame_h),
            min(max(self.x_max, 0.0), frame_w),
            min(max(self.y_max, 0.0), frame_h),
        )


class OffsetPair(NamedTuple):
    dx: float
    dy: float


def nearest_lower_corner(box: BoundingBox, shuttle: tuple[float, float]) -> tuple[float, float]:
    """The bottom corner of ``box`` closest to ``shuttle``; the left one on ties."""
    left = (box.x_min, box.y_max)
    right = (box.x_max, box.y_max)
    sx, sy = shuttle
    d_left = (left[0] - sx) ** 2 + (left[1] - sy) ** 2
    d_right = (right[0] - sx) ** 2 + (right[1] - sy) ** 2
    return right if d_right < d_left else left


def expand_box_unclipped(box: BoundingBox, fw: float = 1.8, fh: float = 1.4) -> BoundingBox:
    if fw < 1 or fh < 1:
        raise ValueError("expansion factors must be >= 1")
    cx, cy = box.center
    half_w = box.width * fw / 2.0
    half_h = box.height * fh / 2.0
    return BoundingBox(cx - half_w, cy - half_h, cx + half_w, cy + half_h)


def expand_box(
    box: BoundingBox, fw: float = 1.8, fh: float = 1.4, frame_w: float = 1280, frame_h: float = 720
) -> BoundingBox:
    """Scale ``box`` about its center by ``fw`` x ``fh`` and clip it to the frame."""
    return expand_box_unclipped(box, fw, fh).clip(frame_w, frame_h)


def offset_label(corner: tuple[float, float], ground_truth: tuple[float, float]) -> OffsetPair:
    return OffsetPair(ground_truth[0] - corner[0], ground_truth[1] - corner[1])


def apply_offset(
    corner: tuple[float, float],
    offset: OffsetPair,
    frame_w: float = 1280,
    frame_h: float = 720,
) -> tuple[float, float]:
    """Corner plus predicted offset, clamped to the frame."""
    x = corner[0] + offset[0]
    y = corner[1] + offset[1]
    return (min(max(x, 0.0), frame_w), min(max(y, 0.0), frame_h))


def winner_rois(
    court: BoundingBox,
    net: BoundingBox,
    strip_frac: float = 0.15,
    frame_w: Optional[float] = None,
    frame_h: Optional[float] = None,
) -> dict[str, BoundingBox]:
    """Net area plus four strips along the court boundary.

    Left/right strips are ``strip_frac`` of the court width wide and span the
    court height; top/bottom strips are ``strip_frac`` of the court height
    tall and span the court width.
    """
    if court.width <= 0 or court.height <= 0:
        raise ValueError("court box has zero area")
    if not 0 < strip_frac < 0.5:
        raise ValueError("strip_frac must be in (0, 0.5)")
    if net.x_max < court.x_min or net.x_min > court.x_max:
        raise ValueError("net does not overlap the court horizontally")
    sw = strip_frac * court.width
    sh = strip_frac * court.height
    rois = {
        "net": net,
        "left": BoundingBox(court.x_min, court.y_min, court.x_min + sw, court.y_max),
        "right": BoundingBox(court.x_max - sw, court.y_min, court.x_max, court.y_max),
        "top": BoundingBox(court.x_min, court.y_min, court.x_max, court.y_min + sh),
        "bottom": BoundingBox(court.x_min, court.y_max - sh, court.x_max, court.y_max),
    }
    if frame_w is not None and frame_h is not None:
        rois = {k: b.clip(frame_w, frame_h) for k, b in rois.items()}
    return rois


def rois_csv(rois: dict[str, BoundingBox]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["name", "x_min", "y_min", "x_max", "y_max"])
    for name, b in rois.items():
        writer.writerow([name, *(repr(float(v)) for v in b)])
    return buf.getvalue()


def encode_hint(player: str) -> list[float]:
    """Player indicator for the RoundHead model: A -> [1, 0], B -> [0, 1]."""
    if player == "A":
        return [1.0, 0.0]
    if player == "B":
        return [0.0, 1.0]
    raise ValueError(f"player must be 'A' or 'B', got {player!r}")


def pad_tokens(
    seq: Sequence[Sequence[float]],
    target_len: int,
    sentinel: float = -100.0,
    dim: Optional[int] = None,
) -> list[list[float]]:
    """Right-pad a token sequence with sentinel-filled vectors.

    ``dim`` is only needed for an empty ``seq``. Sequences longer than
    ``target_len`` are an error rather than being truncated.
    """
    if len(seq) > target_len:
        raise ValueError(f"sequence of {len(seq)} tokens exceeds target length {target_len}")
    if seq:
        dims = {len(t) for t in seq}
        if len(dims) != 1:
            raise ValueError("tokens have inconsistent dimensions")
        dim = dims.pop()
    elif dim is None:
        raise ValueError("dim is required to pad an empty sequence")
    out = [list(t) for t in seq]
    out.extend([sentinel] * dim for _ in range(target_len - len(seq)))
    return out


def box_distance(box: BoundingBox, point: tuple[float, float]) -> float:
    """Distance from ``point`` to the nearest point of ``box`` (0 inside)."""
    dx = max(box.x_min - point[0], 0.0, point[0] - box.x_max)
    dy = max(box.y_min - point[1], 0.0, point[1] - box.y_max)
    return math.hypot(dx, dy)
