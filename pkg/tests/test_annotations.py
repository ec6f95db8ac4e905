import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from moodval.annotations import (
    AnnotationError,
    DeltaLabel,
    FrameRecord,
    MoodLabel,
    NoUsableFramesError,
    ParseError,
    ValenceBand,
    ValenceTimeline,
    band_of,
    derive_delta,
    derive_mood,
    filter_confidence,
    load_timeline,
    resolve_mood,
    save_timeline,
)

from conftest import make_timeline
from oracles import longest_run_band

valence = st.floats(min_value=-1.0, max_value=1.0, allow_nan=False)


class TestBandOf:
    def test_positive_range(self):
        assert band_of(0.5) is ValenceBand.POSITIVE

    def test_boundary_belongs_to_neutral(self):
        assert band_of(0.3) is ValenceBand.NEUTRAL
        assert band_of(-0.3) is ValenceBand.NEUTRAL

    def test_extremes(self):
        assert band_of(-1.0) is ValenceBand.NEGATIVE
        assert band_of(1.0) is ValenceBand.POSITIVE

    def test_out_of_range_rejected(self):
        with pytest.raises(AnnotationError):
            band_of(1.5)
        with pytest.raises(AnnotationError):
            band_of(-1.0000001)

    def test_dense_grid_partition(self):
        # every point of [-1, 1] maps to exactly one band
        grid = np.linspace(-1.0, 1.0, 100_000)
        bands = np.array([int(band_of(float(v))) for v in grid])
        assert set(np.unique(bands)) <= {-1, 0, 1}
        assert (bands[grid > 0.3] == 1).all()
        assert (bands[grid < -0.3] == -1).all()
        assert (bands[(grid >= -0.3) & (grid <= 0.3)] == 0).all()


class TestDeriveMood:
    def test_single_run(self):
        assert derive_mood(make_timeline([0.5] * 8)) is MoodLabel.POSITIVE

    def test_longest_run_wins(self):
        # frozen from the run-length oracle: runs of 10 / 20 / 5 frames
        tl = make_timeline([0.6] * 10 + [0.0] * 20 + [-0.8] * 5)
        assert longest_run_band(tl.valences()) == 0
        assert derive_mood(tl) is MoodLabel.NEUTRAL

    def test_tie_goes_to_earliest_run(self):
        tl = make_timeline([0.4] * 5 + [-0.4] * 5)
        assert longest_run_band(tl.valences()) == 1
        assert derive_mood(tl) is MoodLabel.POSITIVE

    def test_matches_oracle_on_random_timelines(self, rng):
        for _ in range(300):
            n = int(rng.integers(1, 120))
            vals = rng.uniform(-1, 1, size=n)
            tl = make_timeline(vals)
            assert int(derive_mood(tl)) == longest_run_band(vals)

    def test_shorter_appended_run_is_ignored(self, rng):
        tl = make_timeline([0.8] * 6 + [0.0] * 3)
        extended = make_timeline([0.8] * 6 + [0.0] * 3 + [-0.9] * 5)
        assert derive_mood(tl) is derive_mood(extended) is MoodLabel.POSITIVE


class TestResolveMood:
    def test_header_mood_overrides_derivation(self):
        tl = make_timeline([0.9] * 10, mood=MoodLabel.NEUTRAL)
        assert derive_mood(tl) is MoodLabel.POSITIVE
        assert resolve_mood(tl) is MoodLabel.NEUTRAL

    def test_falls_back_to_derivation(self):
        assert resolve_mood(make_timeline([0.9] * 10)) is MoodLabel.POSITIVE


class TestDeriveDelta:
    def test_signs(self):
        assert derive_delta(0.2, 0.7) is DeltaLabel.POSITIVE
        assert derive_delta(0.5, -0.1) is DeltaLabel.NEGATIVE

    @given(valence)
    def test_zero_differential(self, v):
        assert derive_delta(v, v) is DeltaLabel.NEUTRAL

    @given(valence, valence)
    def test_antisymmetric(self, a, b):
        assert int(derive_delta(a, b)) == -int(derive_delta(b, a))

    def test_deadzone(self):
        assert derive_delta(0.0, 0.05, deadzone=0.1) is DeltaLabel.NEUTRAL
        assert derive_delta(0.0, 0.2, deadzone=0.1) is DeltaLabel.POSITIVE

    def test_out_of_range_rejected(self):
        with pytest.raises(AnnotationError):
            derive_delta(1.2, 0.0)


class TestFilterConfidence:
    def test_noop_when_all_confident(self):
        tl = make_timeline([0.1, 0.2, 0.3])
        assert filter_confidence(tl) == tl

    def test_threshold_085(self):
        tl = make_timeline([0.1, 0.2, 0.3], confidences=[0.9, 0.5, 0.99])
        kept = filter_confidence(tl)
        assert [f.frame_index for f in kept.frames] == [0, 2]

    def test_preserves_original_indices(self):
        tl = make_timeline([0.1, 0.2, 0.3, 0.4], confidences=[0.9, 0.1, 0.1, 0.99])
        kept = filter_confidence(tl)
        assert [f.frame_index for f in kept.frames] == [0, 3]

    def test_all_dropped_raises(self):
        tl = make_timeline([0.1, 0.2], confidences=[0.1, 0.1])
        with pytest.raises(NoUsableFramesError):
            filter_confidence(tl)

    @given(st.lists(st.floats(min_value=0, max_value=1, allow_nan=False), min_size=1, max_size=40))
    @settings(max_examples=50)
    def test_idempotent(self, confs):
        tl = make_timeline([0.0] * len(confs), confidences=confs)
        try:
            once = filter_confidence(tl)
        except NoUsableFramesError:
            return
        assert filter_confidence(once) == once


class TestTimelineValidation:
    def test_empty_rejected(self):
        with pytest.raises(AnnotationError):
            ValenceTimeline("v", ())

    def test_non_monotonic_rejected(self):
        frames = (FrameRecord(3, 0.0), FrameRecord(3, 0.1))
        with pytest.raises(AnnotationError):
            ValenceTimeline("v", frames)

    def test_record_bounds(self):
        with pytest.raises(AnnotationError):
            FrameRecord(0, 1.5)
        with pytest.raises(AnnotationError):
            FrameRecord(0, 0.0, confidence=-0.1)
        with pytest.raises(AnnotationError):
            FrameRecord(-1, 0.0)


class TestTimelineIO:
    def test_round_trip(self, tmp_path):
        tl = make_timeline([0.1, -0.5, 0.9], confidences=[1.0, 0.9, 0.86],
                           mood=MoodLabel.NEGATIVE)
        path = tmp_path / "vid.jsonl"
        save_timeline(tl, path)
        assert load_timeline(path) == tl

    def test_round_trip_without_mood(self, tmp_path):
        tl = make_timeline([0.0, 0.25])
        path = tmp_path / "vid.jsonl"
        save_timeline(tl, path)
        loaded = load_timeline(path)
        assert loaded == tl and loaded.mood is None

    def test_valence_out_of_bounds_flags_line(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text(
            '{"video_id": "v"}\n'
            '{"frame": 0, "valence": 0.5, "confidence": 1.0}\n'
            '{"frame": 1, "valence": 1.5, "confidence": 1.0}\n'
        )
        with pytest.raises(ParseError, match=":3"):
            load_timeline(path)

    def test_duplicate_frame_index_rejected(self, tmp_path):
        path = tmp_path / "dup.jsonl"
        path.write_text(
            '{"video_id": "v"}\n'
            '{"frame": 0, "valence": 0.5, "confidence": 1.0}\n'
            '{"frame": 0, "valence": 0.4, "confidence": 1.0}\n'
        )
        with pytest.raises(ParseError):
            load_timeline(path)

    def test_garbage_json_flags_line(self, tmp_path):
        path = tmp_path / "garbage.jsonl"
        path.write_text('{"video_id": "v"}\n{not json\n')
        with pytest.raises(ParseError, match=":2"):
            load_timeline(path)

    def test_missing_header_rejected(self, tmp_path):
        path = tmp_path / "nohdr.jsonl"
        path.write_text('{"frame": 0, "valence": 0.5}\n')
        with pytest.raises(ParseError, match="video_id"):
            load_timeline(path)

    def test_header_mood_parsed(self, tmp_path):
        path = tmp_path / "m.jsonl"
        path.write_text(json.dumps({"video_id": "v", "mood": -1}) + "\n"
                        + json.dumps({"frame": 0, "valence": 0.0, "confidence": 1.0}) + "\n")
        assert load_timeline(path).mood is MoodLabel.NEGATIVE
