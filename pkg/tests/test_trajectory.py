import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_points
from shuttlepipe.trajectory import (
    DETECTED,
    INTERPOLATED,
    MISSING,
    REMOVED,
    TrajectoryPoint,
    dump_csv,
    from_detections,
    interpolate_gaps,
    remove_jumps,
    render_heatmap,
    trim_static_ends,
)
from shuttlepipe.io_streams import FrameDetections, ShuttleCandidate


def brute_force_jumps(coords, window, threshold):
    """Indices a sliding componentwise median filter would reject."""
    half = window // 2
    out = set()
    for i, c in enumerate(coords):
        if c is None:
            continue
        nb = [coords[j] for j in range(max(0, i - half), min(len(coords), i + half + 1)) if coords[j] is not None]
        if len(nb) < 3:
            continue
        mx = np.median([p[0] for p in nb])
        my = np.median([p[1] for p in nb])
        if np.hypot(c[0] - mx, c[1] - my) > threshold:
            out.add(i)
    return out


def removed(points):
    return {i for i, p in enumerate(points) if p.provenance == REMOVED}


class TestRemoveJumps:
    def test_single_spike(self):
        coords = [(t, t) for t in range(11)]
        coords[5] = (5, 300)
        expected = brute_force_jumps(coords, 5, 50)
        assert expected == {5}
        out = remove_jumps(make_points(coords), window=5, threshold=50)
        assert removed(out) == expected
        for p, c in zip(out, coords):
            assert p.position == (float(c[0]), float(c[1]))

    def test_constant_sequence_unchanged(self):
        pts = make_points([(100, 100)] * 20)
        assert remove_jumps(pts, 5, 10) == pts

    def test_all_missing_unchanged(self):
        pts = make_points([None] * 12)
        assert remove_jumps(pts, 7, 50) == pts

    @pytest.mark.parametrize("window", [2, 4, 1, 0])
    def test_bad_window(self, window):
        with pytest.raises(ValueError):
            remove_jumps(make_points([(0, 0)] * 5), window, 50)

    def test_bad_threshold(self):
        with pytest.raises(ValueError):
            remove_jumps(make_points([(0, 0)] * 5), 5, 0)

    def test_sparse_neighbourhood_is_kept(self):
        coords = [None, None, (0, 0), None, (500, 500), None, None]
        assert removed(remove_jumps(make_points(coords), 5, 10)) == set()

    def test_non_consecutive_frames_rejected(self):
        pts = [TrajectoryPoint(0, (0, 0), 1, DETECTED), TrajectoryPoint(2, (0, 0), 1, DETECTED)]
        with pytest.raises(ValueError):
            remove_jumps(pts, 3, 5)

    def test_second_pass_removes_nothing_on_clean_suite(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            t = np.arange(80)
            coords = [(float(400 + 6 * s), float(300 + 4 * s)) for s in t]
            for k in rng.choice(80, size=4, replace=False):
                coords[k] = (coords[k][0] + 200.0, coords[k][1])
            first = remove_jumps(make_points(coords), 7, 50)
            second = remove_jumps(first, 7, 50)
            assert removed(first) == removed(second)

    def test_matches_oracle_on_random_sequences(self):
        rng = np.random.default_rng(2024)
        for _ in range(1000):
            n = int(rng.integers(0, 40))
            window = int(rng.choice([3, 5, 7, 9]))
            threshold = float(rng.uniform(5, 120))
            coords = []
            for i in range(n):
                if rng.random() < 0.15:
                    coords.append(None)
                elif rng.random() < 0.1:
                    coords.append(tuple(rng.uniform(0, 1280, size=2)))
                else:
                    coords.append((300 + 5.0 * i + rng.normal(0, 3), 200 + 2.0 * i + rng.normal(0, 3)))
            got = removed(remove_jumps(make_points(coords), window, threshold))
            assert got == brute_force_jumps(coords, window, threshold)


class TestTrim:
    def test_static_moving_static(self):
        coords = [(100.0, 100.0)] * 30
        coords += [(100.0 + 8 * (k + 1), 100.0 + 6 * (k + 1)) for k in range(100)]
        end = coords[-1]
        coords += [(end[0] + 8, end[1] + 6)] * 30
        # by hand: frames 0..29 static, 30..129 moving, 130..159 static again
        (start, stop), out = trim_static_ends(make_points(coords), 5.0, 10)
        assert (start, stop) == (30, 130)
        assert removed(out) == set(range(30)) | set(range(130, 160))

    def test_fully_static(self):
        (start, stop), out = trim_static_ends(make_points([(5, 5)] * 40), 5.0, 10)
        assert start == stop
        assert all(p.provenance == REMOVED for p in out)

    def test_moving_from_start(self):
        coords = [(10.0 * i, 0.0) for i in range(50)]
        (start, stop), out = trim_static_ends(make_points(coords), 5.0, 10)
        assert (start, stop) == (0, 50)
        assert removed(out) == set()

    def test_short_static_run_not_trimmed(self):
        coords = [(0.0, 0.0)] * 5 + [(10.0 * i, 0.0) for i in range(1, 30)]
        (start, _), _ = trim_static_ends(make_points(coords), 5.0, 10)
        assert start == 0

    def test_missing_frames_skipped(self):
        coords = [(0.0, 0.0) if i % 3 else None for i in range(30)] + [(20.0 * i, 0.0) for i in range(1, 20)]
        (start, stop), out = trim_static_ends(make_points(coords), 5.0, 10)
        assert start == 30 and stop == 49
        assert all(out[i].provenance == MISSING for i in range(0, 30, 3))

    def test_bad_args(self):
        with pytest.raises(ValueError):
            trim_static_ends(make_points([(0, 0)]), 0, 10)
        with pytest.raises(ValueError):
            trim_static_ends(make_points([(0, 0)]), 1, 0)


class TestInterpolate:
    def test_midpoint(self):
        out = interpolate_gaps(make_points([(0, 0), None, (2, 2)]), max_gap=3)
        assert out[1].position == (1.0, 1.0)
        assert out[1].provenance == INTERPOLATED

    def test_long_gap_left_missing(self):
        coords = [(0, 0)] + [None] * 4 + [(5, 5)]
        out = interpolate_gaps(make_points(coords), max_gap=3)
        assert all(p.provenance == MISSING for p in out[1:5])
        out = interpolate_gaps(make_points(coords), max_gap=4)
        assert all(p.provenance == INTERPOLATED for p in out[1:5])

    def test_no_extrapolation(self):
        out = interpolate_gaps(make_points([None, None, (1, 1), None, (3, 3), None]), max_gap=5)
        assert [p.provenance for p in out] == [MISSING, MISSING, DETECTED, INTERPOLATED, DETECTED, MISSING]

    def test_removed_points_are_filled(self):
        pts = make_points([(0, 0), (50, 900), (2, 2)])
        pts[1] = TrajectoryPoint(1, (50.0, 900.0), 0.9, REMOVED)
        assert interpolate_gaps(pts, 2)[1].position == (1.0, 1.0)

    @settings(max_examples=200, deadline=None)
    @given(
        st.lists(
            st.one_of(st.none(), st.tuples(st.floats(0, 1280), st.floats(0, 720))),
            max_size=40,
        ),
        st.integers(0, 10),
    )
    def test_detected_preserved_and_collinear(self, coords, max_gap):
        pts = make_points(coords)
        out = interpolate_gaps(pts, max_gap)
        anchors = [i for i, p in enumerate(pts) if p.provenance == DETECTED]
        for i in anchors:
            assert out[i] == pts[i]
        for a, b in zip(anchors, anchors[1:]):
            (xa, ya), (xb, yb) = pts[a].position, pts[b].position
            for k in range(a + 1, b):
                p = out[k]
                if b - a - 1 > max_gap:
                    assert p.provenance == MISSING
                    continue
                x, y = p.position
                cross = (xb - xa) * (y - ya) - (yb - ya) * (x - xa)
                scale = max(1.0, math.hypot(xb - xa, yb - ya))
                assert abs(cross) / scale < 1e-9
                assert min(xa, xb) - 1e-9 <= x <= max(xa, xb) + 1e-9


class TestHeatmap:
    def test_peak(self):
        hm = render_heatmap((10, 10), 3.0, 32, 24)
        assert hm.value(10, 10) == 1.0
        assert hm.values.max() == 1.0
        assert np.unravel_index(hm.values.argmax(), hm.values.shape) == (10, 10)

    def test_no_target(self):
        assert not render_heatmap(None, 3.0, 16, 16).values.any()

    def test_closed_form(self):
        hm = render_heatmap((10, 10), 3.0, 32, 24)
        assert hm.value(13, 10) == pytest.approx(math.exp(-9 / 18), abs=1e-15)
        assert hm.value(12, 11) == pytest.approx(math.exp(-(4 + 1) / 18), rel=1e-12)

    def test_symmetry(self):
        hm = render_heatmap((15, 9), 2.5, 31, 20)
        for d in range(1, 16):
            assert hm.value(15 + d, 9) == hm.value(15 - d, 9)

    def test_outside_grid(self):
        with pytest.raises(ValueError):
            render_heatmap((40, 4), 3.0, 32, 24)
        with pytest.raises(ValueError):
            render_heatmap((4, 4), 0.0, 32, 24)


def test_from_detections_fills_missing_frames():
    frames = [
        FrameDetections(1, (ShuttleCandidate(5, 6, 0.4), ShuttleCandidate(7, 8, 0.8))),
        FrameDetections(3),
    ]
    pts = from_detections(frames, num_frames=5)
    assert [p.provenance for p in pts] == [MISSING, DETECTED, MISSING, MISSING, MISSING]
    assert pts[1].position == (7, 8)


def test_point_invariant():
    with pytest.raises(ValueError):
        TrajectoryPoint(0, None, 0.0, DETECTED)
    with pytest.raises(ValueError):
        TrajectoryPoint(0, (1.0, 1.0), 0.0, MISSING)


def test_dump_csv():
    text = dump_csv(make_points([(1.5, 2), None]))
    assert text.splitlines() == ["frame,x,y,provenance", "0,1.5,2.0,detected", "1,,,missing"]
