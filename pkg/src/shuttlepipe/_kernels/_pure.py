"""Pure-Python versions of the hot loops.

These are the reference implementations; the Cython module in ``_fast.pyx``
must produce identical results on every input.
"""

import numpy as np


def _median(values):
    values = sorted(values)
    n = len(values)
    mid = n // 2
    if n % 2:
        return values[mid]
    return (values[mid - 1] + values[mid]) / 2.0


def jump_mask(xs, ys, present, window, threshold):
    """Flag present points that sit farther than ``threshold`` from the local median.

    Medians are taken per component over the present points in the centered
    window (the point itself included). Points with fewer than two present
    neighbours are never flagged.
    """
    xs = np.asarray(xs, dtype=np.float64).tolist()
    ys = np.asarray(ys, dtype=np.float64).tolist()
    present = np.asarray(present, dtype=bool).tolist()
    n = len(xs)
    half = window // 2
    thr2 = float(threshold) * float(threshold)
    out = np.zeros(n, dtype=bool)
    for i in range(n):
        if not present[i]:
            continue
        lo = max(0, i - half)
        hi = min(n, i + half + 1)
        wx = [xs[j] for j in range(lo, hi) if present[j]]
        if len(wx) - 1 < 2:
            continue
        wy = [ys[j] for j in range(lo, hi) if present[j]]
        dx = xs[i] - _median(wx)
        dy = ys[i] - _median(wy)
        if dx * dx + dy * dy > thr2:
            out[i] = True
    return out


def mode_filter(codes, window, n_codes=3):
    """Centered sliding mode over small integer codes; ties go to the lowest code.

    The sequence is padded by repeating its first and last codes, so every
    window has full width.
    """
    codes = np.asarray(codes, dtype=np.int64)
    n = len(codes)
    if n == 0:
        return np.empty(0, dtype=np.int64)
    half = window // 2
    padded = np.pad(codes, half, mode="edge")
    onehot = np.zeros((len(padded) + 1, n_codes), dtype=np.int64)
    onehot[np.arange(1, len(padded) + 1), padded] = 1
    csum = np.cumsum(onehot, axis=0)
    counts = csum[window: window + n] - csum[:n]
    # argmax returns the first maximum, i.e. the lowest tied code
    return np.argmax(counts, axis=1).astype(np.int64)
