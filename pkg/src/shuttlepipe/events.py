"""Hit-event localization from sliding-window clip classifications.

Each clip covers ``clip_len`` consecutive frames starting at ``clip_start``
and carries one of three labels: ``None`` (nothing happens), ``"A"`` (player
A hits) or ``"B"`` (player B hits).
"""

from __future__ import annotations

import csv
import io
import math
from typing import NamedTuple, Optional, Sequence

import numpy as np

from . import _kernels

LABELS = (None, "A", "B")
_CODE = {label: i for i, label in enumerate(LABELS)}

HIT_FRAME_MODES = ("inverse", "run_start")


class ClipPrediction(NamedTuple):
    # labels are checked where streams enter: parsing, clips_from_labels, smoothing
    clip_start: int
    label: Optional[str]
    probs: Optional[tuple[float, float, float]] = None


def _codes(labels) -> np.ndarray:
    try:
        return np.fromiter((_CODE[lab] for lab in labels), dtype=np.int64, count=len(labels))
    except KeyError as exc:
        raise ValueError(f"unknown clip label {exc.args[0]!r}") from None


class HitEvent(NamedTuple):
    hit_frame: int
    hitter: str
    run_start: int
    run_len: int


class Run(NamedTuple):
    label: str
    start: int
    length: int


def label_windows(
    hit_frames: Sequence[tuple[int, str]], num_frames: int, clip_len: int = 5
) -> list[Optional[str]]:
    """Training labels for every clip start in a ``num_frames`` video.

    Clip ``[s, s + clip_len - 1]`` takes the hitter's label when a hit frame
    lies strictly inside it. A clip touching two hits takes the earlier one.
    """
    if clip_len < 3:
        raise ValueError(f"clip_len must be >= 3, got {clip_len}")
    prev = None
    for frame, hitter in hit_frames:
        if hitter not in ("A", "B"):
            raise ValueError(f"hitter must be 'A' or 'B', got {hitter!r}")
        if not 0 <= frame < num_frames:
            raise ValueError(f"hit frame {frame} outside [0, {num_frames})")
        if prev is not None and frame <= prev:
            raise ValueError("hit frames must be strictly increasing")
        prev = frame
    n_clips = max(0, num_frames - clip_len + 1)
    labels: list[Optional[str]] = [None] * n_clips
    # later hits first so the earlier hit wins on overlap
    for frame, hitter in reversed(list(hit_frames)):
        for s in range(max(0, frame - clip_len + 2), min(n_clips, frame)):
            labels[s] = hitter
    return labels


def smooth_predictions(seq: Sequence, window: int = 3) -> list:
    """Centered sliding-mode filter over clip labels.

    Accepts either labels or :class:`ClipPrediction` objects and returns the
    same kind. The sequence is padded by repeating its edge labels, so every
    window has full width; ties prefer None, then A, then B.
    """
    if window < 3 or window % 2 == 0:
        raise ValueError(f"window must be an odd integer >= 3, got {window}")
    if not seq:
        return []
    is_clip = isinstance(seq[0], ClipPrediction)
    labels = [p.label for p in seq] if is_clip else list(seq)
    codes = _codes(labels)
    smoothed = [LABELS[c] for c in _kernels.mode_filter(codes, window, len(LABELS))]
    if is_clip:
        return [ClipPrediction(p.clip_start, lab, p.probs) for p, lab in zip(seq, smoothed)]
    return smoothed


def extract_events(seq: Sequence) -> list[Run]:
    """Maximal runs of identical non-None labels, as ``(label, start_index, length)``."""
    labels = [p.label if isinstance(p, ClipPrediction) else p for p in seq]
    runs = []
    i = 0
    while i < len(labels):
        j = i
        while j + 1 < len(labels) and labels[j + 1] == labels[i]:
            j += 1
        if labels[i] is not None:
            runs.append(Run(labels[i], i, j - i + 1))
        i = j + 1
    return runs


def run_to_hit_frame(run_start: int, run_len: int, clip_len: int = 5, mode: str = "inverse") -> int:
    """Map a run of positive clip starts back to a hit frame.

    ``inverse`` undoes :func:`label_windows`: the floored median start plus
    ``ceil((clip_len - 1) / 2)`` (2 for five-frame clips). ``run_start``
    returns the first start of the run unchanged.
    """
    if run_len < 1:
        raise ValueError("run_len must be >= 1")
    if mode == "run_start":
        return run_start
    if mode != "inverse":
        raise ValueError(f"unknown hit-frame mode {mode!r}")
    median = math.floor(run_start + (run_len - 1) / 2)
    return median + math.ceil((clip_len - 1) / 2)


def detect_shots(
    seq: Sequence[ClipPrediction],
    smooth_window: int = 3,
    min_run_len: int = 2,
    clip_len: int = 5,
    mode: str = "inverse",
) -> list[HitEvent]:
    """Smooth, find runs, drop short ones and turn each run into a hit event.

    Clip starts are assumed consecutive (stride 1); ``run_start`` on the
    returned events is a clip start, not a list index.
    """
    if not seq:
        return []
    smoothed = smooth_predictions([p.label for p in seq], smooth_window)
    origin = seq[0].clip_start
    events = []
    for run in extract_events(smoothed):
        if run.length < min_run_len:
            continue
        start = origin + run.start
        frame = run_to_hit_frame(start, run.length, clip_len, mode)
        events.append(HitEvent(frame, run.label, start, run.length))
    return events


def dump_events_csv(events: Sequence[HitEvent]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["hit_frame", "hitter", "run_start", "run_len"])
    for e in events:
        writer.writerow([e.hit_frame, e.hitter, e.run_start, e.run_len])
    return buf.getvalue()


def clips_from_labels(labels: Sequence[Optional[str]], origin: int = 0) -> list[ClipPrediction]:
    _codes(labels)
    return [ClipPrediction(origin + i, lab) for i, lab in enumerate(labels)]
