import random
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shuttlepipe.events import (
    ClipPrediction,
    HitEvent,
    Run,
    clips_from_labels,
    detect_shots,
    dump_events_csv,
    extract_events,
    label_windows,
    run_to_hit_frame,
    smooth_predictions,
)

N, A, B = None, "A", "B"
PRIORITY = {None: 0, "A": 1, "B": 2}


def brute_force_mode(labels, window):
    half = window // 2
    out = []
    for i in range(len(labels)):
        padded = [labels[min(max(j, 0), len(labels) - 1)] for j in range(i - half, i + half + 1)]
        counts = Counter(padded)
        best = max(counts.values())
        out.append(min((lab for lab, c in counts.items() if c == best), key=PRIORITY.get))
    return out


class TestLabelWindows:
    def test_hit_at_five(self):
        labels = label_windows([(5, "A")], 20, clip_len=5)
        assert [s for s, lab in enumerate(labels) if lab == "A"] == [2, 3, 4]
        assert all(lab is None for s, lab in enumerate(labels) if s not in (2, 3, 4))

    def test_no_hits(self):
        assert label_windows([], 12) == [None] * 8

    def test_boundary_hit(self):
        # s < 1 < s + 4 has s in {-2, -1, 0}; only 0 exists
        labels = label_windows([(1, "B")], 12)
        assert [s for s, lab in enumerate(labels) if lab] == [0]

    def test_overlap_goes_to_earlier_hit(self):
        labels = label_windows([(5, "A"), (7, "B")], 20)
        assert labels[2:7] == ["A", "A", "A", "B", "B"]

    def test_errors(self):
        with pytest.raises(ValueError):
            label_windows([(5, "A")], 20, clip_len=2)
        with pytest.raises(ValueError):
            label_windows([(5, "A"), (5, "B")], 20)
        with pytest.raises(ValueError):
            label_windows([(25, "A")], 20)


class TestSmooth:
    def test_fills_hole(self):
        assert brute_force_mode([A, N, A, A, N], 3) == [A, A, A, A, N]
        assert smooth_predictions([A, N, A, A, N], 3) == [A, A, A, A, N]

    def test_edges_repeat(self):
        assert smooth_predictions([A, N, N], 3) == [A, N, N]
        assert smooth_predictions([A, B, N, N, N], 5) == [A, N, N, N, N]

    def test_constant(self):
        assert smooth_predictions([B] * 9, 5) == [B] * 9

    def test_isolated_flip_removed(self):
        assert brute_force_mode([N, A, N], 3) == [N, N, N]
        assert smooth_predictions([N, A, N], 3) == [N, N, N]

    def test_tie_breaks(self):
        assert smooth_predictions([N, A, B], 3) == [N, N, B]
        assert smooth_predictions([A, B, N, A, B], 5) == [A, A, A, B, B]

    def test_even_window(self):
        with pytest.raises(ValueError):
            smooth_predictions([A, B], 4)

    def test_keeps_clip_objects(self):
        clips = [ClipPrediction(10, A, (0, 1, 0)), ClipPrediction(11, N), ClipPrediction(12, A)]
        out = smooth_predictions(clips, 3)
        assert [c.label for c in out] == [A, A, A]
        assert [c.clip_start for c in out] == [10, 11, 12]
        assert out[0].probs == (0, 1, 0)

    def test_matches_oracle_on_random_sequences(self):
        rng = random.Random(11)
        for _ in range(1000):
            seq = [rng.choice([N, N, A, B]) for _ in range(rng.randint(0, 50))]
            window = rng.choice([3, 5, 7, 9])
            assert smooth_predictions(seq, window) == brute_force_mode(seq, window)


class TestRuns:
    def test_example_sequence(self):
        assert extract_events([N, N, A, A, A, N, N]) == [Run("A", 2, 3)]

    def test_all_none(self):
        assert extract_events([N] * 6) == []

    def test_adjacent(self):
        assert extract_events([A, A, B, B]) == [Run("A", 0, 2), Run("B", 2, 2)]

    def test_run_to_hit_frame(self):
        assert run_to_hit_frame(2, 3, clip_len=5) == 5
        assert run_to_hit_frame(7, 1) == 9
        assert run_to_hit_frame(10, 4) == 13  # median of 10..13 floors to 11
        assert run_to_hit_frame(2, 3, mode="run_start") == 2
        with pytest.raises(ValueError):
            run_to_hit_frame(2, 0)
        with pytest.raises(ValueError):
            run_to_hit_frame(2, 3, mode="middle")

    @pytest.mark.parametrize("clip_len", [3, 4, 5, 6, 7, 9])
    def test_inverse_for_other_clip_lengths(self, clip_len):
        for h in range(clip_len, 60):
            [run] = extract_events(label_windows([(h, "A")], 80, clip_len))
            assert run_to_hit_frame(run.start, run.length, clip_len) == h


class TestDetectShots:
    def test_example_sequence(self):
        events = detect_shots(clips_from_labels([N, N, A, A, A, N, N]))
        assert len(events) == 1
        assert events[0].hitter == "A"
        assert events[0] == HitEvent(5, "A", 2, 3)

    def test_empty(self):
        assert detect_shots([]) == []

    def test_two_runs_alternate(self):
        labels = label_windows([(10, "A"), (40, "B")], 60)
        events = detect_shots(clips_from_labels(labels))
        assert [(e.hit_frame, e.hitter) for e in events] == [(10, "A"), (40, "B")]

    def test_short_runs_dropped(self):
        events = detect_shots(clips_from_labels([N, N, A, A, N, N, B, N, N]), smooth_window=3)
        assert [e.hitter for e in events] == ["A"]

    def test_origin_offset(self):
        labels = label_windows([(10, "A")], 30)
        events = detect_shots(clips_from_labels(labels[5:], origin=5))
        assert events[0].hit_frame == 10 and events[0].run_start == 7

    def test_round_trip_every_frame(self):
        num_frames = 1000
        for h in range(3, num_frames - 3):
            for p in ("A", "B"):
                labels = label_windows([(h, p)], num_frames)
                events = detect_shots(clips_from_labels(labels))
                assert [(e.hit_frame, e.hitter) for e in events] == [(h, p)]

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.sampled_from([N, A, B]), max_size=60))
    def test_runs_never_overlap(self, labels):
        events = detect_shots(clips_from_labels(labels))
        spans = [(e.run_start, e.run_start + e.run_len) for e in events]
        assert all(a[1] <= b[0] for a, b in zip(spans, spans[1:]))
        smoothed = smooth_predictions(labels, 3)
        assert len(events) == sum(r.length >= 2 for r in extract_events(smoothed))


def test_dump_events_csv():
    text = dump_events_csv([HitEvent(5, "A", 2, 3)])
    assert text == "hit_frame,hitter,run_start,run_len\n5,A,2,3\n"
