import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from moodval.metrics import (
    MetricError,
    MetricReport,
    PredictionSeries,
    ccc,
    evaluate,
    load_predictions,
    pcc,
    save_predictions,
)

from oracles import ccc_oracle, pcc_oracle

series = arrays(
    np.float64,
    st.integers(min_value=2, max_value=50),
    elements=st.floats(min_value=-10, max_value=10, allow_nan=False),
)


class TestPcc:
    def test_perfect_correlation(self):
        y = np.array([0.1, 0.5, -0.2, 0.9])
        assert pcc(y, y) == pytest.approx(1.0)

    def test_perfect_anticorrelation(self):
        y = np.array([0.1, 0.5, -0.2, 0.9])
        assert pcc(y, -y) == pytest.approx(-1.0)

    def test_constant_prediction_convention(self):
        assert pcc([0.1, 0.5, -0.2], [0.3, 0.3, 0.3]) == 0.0

    def test_length_one_rejected(self):
        with pytest.raises(MetricError):
            pcc([1.0], [1.0])

    @given(series)
    @settings(max_examples=100)
    def test_matches_corrcoef_oracle(self, y):
        rng = np.random.default_rng(0)
        p = y + rng.normal(size=y.shape)
        assert pcc(y, p) == pytest.approx(pcc_oracle(y, p), abs=1e-12)


class TestCcc:
    def test_identity(self):
        y = np.array([0.1, 0.5, -0.2, 0.9])
        assert ccc(y, y) == pytest.approx(1.0)

    def test_halved_predictions(self):
        # frozen from the direct Eq-form oracle
        y = np.array([-1.0, 0.0, 1.0])
        p = np.array([-0.5, 0.0, 0.5])
        assert ccc_oracle(y, p) == pytest.approx(0.8, abs=1e-12)
        assert ccc(y, p) == pytest.approx(0.8, abs=1e-9)

    def test_mean_shift_penalty(self):
        # frozen from the direct Eq-form oracle: pcc stays 1, ccc drops to 16/19
        y = np.array([-1.0, 0.0, 1.0])
        p = y + 0.5
        assert ccc_oracle(y, p) == pytest.approx(16.0 / 19.0, abs=1e-12)
        assert ccc(y, p) == pytest.approx(16.0 / 19.0, abs=1e-9)
        assert pcc(y, p) == pytest.approx(1.0)

    def test_zero_variance_convention(self):
        assert ccc([0.0, 0.0, 0.0], [0.1, 0.2, 0.3]) == 0.0
        assert ccc([0.1, 0.2, 0.3], [0.5, 0.5, 0.5]) == 0.0

    @given(series)
    @settings(max_examples=100)
    def test_attenuates_pcc(self, y):
        rng = np.random.default_rng(1)
        p = 0.7 * y + rng.normal(size=y.shape) * 0.5
        assert ccc(y, p) <= abs(pcc(y, p)) + 1e-12

    @given(series)
    @settings(max_examples=100)
    def test_symmetric(self, y):
        rng = np.random.default_rng(2)
        p = y + rng.normal(size=y.shape)
        assert ccc(y, p) == pytest.approx(ccc(p, y), abs=1e-12)

    def test_permutation_invariant(self, rng):
        y = rng.normal(size=30)
        p = y + rng.normal(size=30) * 0.3
        perm = rng.permutation(30)
        assert ccc(y[perm], p[perm]) == pytest.approx(ccc(y, p), abs=1e-12)

    def test_constant_shift_strictly_decreases(self, rng):
        y = rng.normal(size=25)
        p = y + rng.normal(size=25) * 0.2
        assert pcc(y, p) > 0
        base = ccc(y, p)
        assert ccc(y, p + 0.5) < base
        assert ccc(y, p - 0.5) < base

    def test_affine_invariance_contrast(self, rng):
        # pcc ignores positive affine rescaling; ccc = 1 only at the identity
        y = rng.normal(size=40)
        assert pcc(y, 2.0 * y + 0.3) == pytest.approx(1.0)
        assert ccc(y, y) == pytest.approx(1.0)
        assert ccc(y, 2.0 * y + 0.3) < 1.0
        assert ccc(y, 0.5 * y) < 1.0


class TestEvaluate:
    def test_perfect_single_video(self):
        y = np.array([0.1, -0.5, 0.9])
        report = evaluate({"a": PredictionSeries(y, y)})
        assert report.ccc == pytest.approx(1.0)
        assert report.per_video["a"] == pytest.approx(1.0)
        assert report.n_frames == 3

    def test_identical_videos_match_per_video(self, rng):
        y = rng.normal(size=20)
        p = y + rng.normal(size=20) * 0.1
        report = evaluate({"a": PredictionSeries(y, p), "b": PredictionSeries(y, p)})
        assert report.ccc == pytest.approx(report.per_video["a"], abs=1e-12)

    def test_global_matches_concatenation_oracle(self, rng):
        per_video = {}
        chunks = []
        for vid in "abc":
            y = rng.normal(size=int(rng.integers(5, 30)))
            p = y * 0.8 + rng.normal(size=y.shape) * 0.3
            per_video[vid] = PredictionSeries(y, p)
            chunks.append((y, p))
        report = evaluate(per_video)
        all_y = np.concatenate([c[0] for c in chunks])
        all_p = np.concatenate([c[1] for c in chunks])
        assert report.ccc == pytest.approx(ccc_oracle(all_y, all_p), abs=1e-12)

    def test_empty_collection_rejected(self):
        with pytest.raises(MetricError):
            evaluate({})

    def test_report_round_trip(self, tmp_path, rng):
        y = rng.normal(size=10)
        report = evaluate({"a": PredictionSeries(y, y * 0.5)})
        path = tmp_path / "report.json"
        report.save(path)
        import json

        loaded = MetricReport.from_dict(json.loads(path.read_text()))
        assert loaded.ccc == report.ccc and loaded.per_video == report.per_video


class TestPredictionIO:
    def test_round_trip(self, tmp_path, rng):
        preds = {
            "b": PredictionSeries(rng.normal(size=5), rng.normal(size=5)),
            "a": PredictionSeries(rng.normal(size=3), rng.normal(size=3)),
        }
        path = tmp_path / "preds.jsonl"
        save_predictions(preds, path)
        loaded = load_predictions(path)
        assert set(loaded) == {"a", "b"}
        for vid in preds:
            np.testing.assert_allclose(loaded[vid].y_true, preds[vid].y_true)
            np.testing.assert_allclose(loaded[vid].y_pred, preds[vid].y_pred)

    def test_malformed_record_rejected(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"video_id": "a", "frame": 0}\n')
        with pytest.raises(MetricError):
            load_predictions(path)


class TestSeriesValidation:
    def test_length_mismatch(self):
        with pytest.raises(MetricError):
            PredictionSeries(np.zeros(3), np.zeros(4))

    def test_empty(self):
        with pytest.raises(MetricError):
            PredictionSeries(np.zeros(0), np.zeros(0))
