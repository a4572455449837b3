import json
import warnings

import numpy as np
import pytest

from nrtree.core import Dataset
from nrtree.data import (DataError, SyntheticSpec, generate_synthetic, load_csv, make_spec, save_csv,
                         stratified_split)


class TestCsv:
    def test_round_trip_exact(self, tmp_path):
        rng = np.random.default_rng(0)
        d = Dataset(rng.normal(size=(15, 3)), rng.normal(size=15) * 1e5, ["a", "b", "c"])
        save_csv(d, tmp_path / "d.csv", "target")
        back = load_csv(tmp_path / "d.csv", "target")
        np.testing.assert_array_equal(back.X, d.X)
        np.testing.assert_array_equal(back.y, d.y)
        assert back.feature_names == ["a", "b", "c"]

    def test_response_column_anywhere(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("y,f1,f2\n1,2,3\n4,5,6\n")
        d = load_csv(p, "y")
        np.testing.assert_array_equal(d.y, [1, 4])
        np.testing.assert_array_equal(d.X, [[2, 3], [5, 6]])

    def test_unlabeled(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("f1,f2\n1,2\n")
        d = load_csv(p, None)
        assert d.dim == 2 and d.y.tolist() == [0.0]

    @pytest.mark.parametrize("text, match", [
        ("a,b\n1,2\n", "response column"),
        ("a,y\n1,2\n3,oops\n", "row 3, column 'y'"),
        ("a,y\n1,2\n3\n", "row 3"),
        ("", "empty"),
        ("a,y\n1,nan\n", "non-finite"),
    ])
    def test_errors(self, tmp_path, text, match):
        p = tmp_path / "bad.csv"
        p.write_text(text)
        with pytest.raises(DataError, match=match):
            load_csv(p, "y")


class TestSplit:
    def test_partition_and_fractions(self):
        d = Dataset(np.arange(200.0).reshape(-1, 1), np.random.default_rng(1).normal(size=200))
        tr, dv, te = stratified_split(d, (0.6, 0.2, 0.2), 10, seed=3)
        assert (len(tr), len(dv), len(te)) == (120, 40, 40)
        ids = np.concatenate([tr.X[:, 0], dv.X[:, 0], te.X[:, 0]])
        assert sorted(ids) == list(range(200))

    def test_every_stratum_reaches_every_part(self):
        y = np.random.default_rng(2).uniform(0, 100, 300)
        d = Dataset(np.zeros((300, 1)), y)
        parts = stratified_split(d, (0.7, 0.15, 0.15), 10, seed=0)
        edges = np.quantile(y, np.linspace(0, 1, 11))
        for part in parts:
            counts = np.histogram(part.y, edges)[0]
            assert counts.min() > 0

    def test_deterministic(self):
        d = Dataset(np.arange(50.0).reshape(-1, 1), np.arange(50.0))
        a = stratified_split(d, seed=4)
        b = stratified_split(d, seed=4)
        c = stratified_split(d, seed=5)
        assert all(np.array_equal(x.y, y.y) for x, y in zip(a, b))
        assert not np.array_equal(a[0].y, c[0].y)

    def test_small_strata_merged_with_warning(self):
        d = Dataset(np.zeros((8, 1)), np.arange(8.0))
        with pytest.warns(UserWarning, match="merged"):
            parts = stratified_split(d, (0.5, 0.25, 0.25), 8)
        assert sum(len(p) for p in parts) == 8

    def test_bad_fractions(self):
        d = Dataset(np.zeros((4, 1)), np.arange(4.0))
        with pytest.raises(ValueError):
            stratified_split(d, (0.5, 0.5, 0.5))


class TestSynthetic:
    def test_reproducible(self):
        spec = make_spec(3, 100, 4, 0.2, seed=7)
        a, ta = generate_synthetic(spec)
        b, tb = generate_synthetic(spec)
        np.testing.assert_array_equal(a.X, b.X)
        np.testing.assert_array_equal(a.y, b.y)
        assert ta == tb

    def test_responses_inside_regime_ranges(self):
        spec = make_spec(3, 500, 2, 0.1, seed=1)
        d, truth = generate_synthetic(spec)
        for y, k in zip(d.y, truth.regimes):
            lo, hi = spec.response_ranges[k]
            assert lo <= y <= hi
        assert truth.true_thresholds == [11.0, 23.0]
        assert truth.regime_means == [5.0, 17.0, 29.0]
        assert set(truth.regimes) == {0, 1, 2}

    def test_features_cluster_by_regime(self):
        spec = make_spec(2, 400, 3, 0.05, seed=2)
        d, truth = generate_synthetic(spec)
        regimes = np.array(truth.regimes)
        for k in range(2):
            np.testing.assert_allclose(d.X[regimes == k].mean(axis=0), spec.regime_centers[k], atol=0.02)
        sep = np.linalg.norm(np.subtract(*spec.regime_centers))
        assert sep == pytest.approx(1.0)

    def test_uniform_weighting(self):
        spec = SyntheticSpec([(0, 1), (2, 20)], [[0.0], [1.0]], [0.1, 0.1], 2000, seed=0,
                             regime_weighting="uniform")
        _, truth = generate_synthetic(spec)
        assert abs(np.mean(truth.regimes) - 0.5) < 0.05

    def test_truth_json(self):
        _, truth = generate_synthetic(make_spec(2, 5, 1, 0.1))
        assert json.loads(truth.to_json())["true_thresholds"] == [11.0]

    @pytest.mark.parametrize("kw", [
        dict(response_ranges=[(0, 10), (5, 20)]),
        dict(response_ranges=[(3, 3), (5, 20)]),
        dict(feature_noise=[0.1]),
        dict(true_thresholds=[20.0]),
    ])
    def test_invalid_synthetic_spec(self, kw):
        base = dict(response_ranges=[(0, 10), (12, 20)], regime_centers=[[0.0], [1.0]],
                    feature_noise=[0.1, 0.1], n=10)
        with pytest.raises(ValueError):
            SyntheticSpec(**{**base, **kw})
