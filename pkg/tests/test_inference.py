import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nrtree.core import Bin, TrainConfig
from nrtree.inference import leaf_posteriors, predict_batch, predict_hard, predict_soft
from nrtree.numerics import NeuralClassifier, ShapeError, init_network
from nrtree.rng import Rng
from nrtree.tree import Internal, Leaf, NrtModel


def const(p, dim=2):
    """Classifier that outputs ``p`` for every input."""
    return NeuralClassifier([np.zeros((dim, 1))], [np.array([math.log(p / (1 - p))])])


def model_of(root, dim=2):
    return NrtModel(root, dim, TrainConfig(), np.zeros(dim), np.ones(dim))


def depth_two(p_root=0.6, p_left=0.5, p_right=0.5, reps=(1.0, 2.0, 3.0, 4.0)):
    edges = [0.0, 1.5, 2.5, 3.5, 5.0]
    leaves = [Leaf(0, Bin(a, b, r)) for a, b, r in zip(edges, edges[1:], reps)]
    left = Internal(1, 1.5, const(p_left), leaves[0], leaves[1], Bin(0, 2.5, 1.5))
    right = Internal(4, 3.5, const(p_right), leaves[2], leaves[3], Bin(2.5, 5, 3.5))
    return model_of(Internal(0, 2.5, const(p_root), left, right, Bin(0, 5, 2.5)))


class TestPosteriors:
    def test_depth_two_products(self):
        post = leaf_posteriors(depth_two(), [0.3, -1.0])
        np.testing.assert_allclose(post, [0.2, 0.2, 0.3, 0.3], atol=1e-15)

    def test_two_leaf_soft_value(self):
        m = model_of(Internal(0, 15, const(0.7), Leaf(1, Bin(5, 15, 10.0)), Leaf(2, Bin(15, 25, 20.0)),
                              Bin(5, 25, 15)))
        np.testing.assert_allclose(leaf_posteriors(m, [0, 0]), [0.3, 0.7], atol=1e-15)
        assert predict_soft(m, [0, 0]) == pytest.approx(17.0, abs=1e-12)

    def test_soft_is_weighted_sum(self):
        m = depth_two(0.9, 0.2, 0.75)
        post = leaf_posteriors(m, [1.0, 2.0])
        assert predict_soft(m, [1.0, 2.0]) == pytest.approx(post @ [1, 2, 3, 4], abs=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 1000), st.lists(st.floats(-5, 5), min_size=2, max_size=2))
    def test_random_tree_posteriors_sum_to_one_and_soft_in_range(self, seed, x):
        r = Rng(seed)
        leaves = [Leaf(i, Bin(i, i + 1, i + 0.5)) for i in range(4)]
        clfs = [init_network([2, 3, 1], r) for _ in range(3)]
        left = Internal(1, 1, clfs[1], leaves[0], leaves[1], Bin(0, 2, 1))
        right = Internal(4, 3, clfs[2], leaves[2], leaves[3], Bin(2, 4, 3))
        m = model_of(Internal(0, 2, clfs[0], left, right, Bin(0, 4, 2)))
        post = leaf_posteriors(m, x)
        assert np.all(post >= 0)
        assert post.sum() == pytest.approx(1.0, abs=1e-12)
        assert 0.5 <= predict_soft(m, x) <= 3.5


class TestHard:
    def test_tie_goes_right(self):
        value, leaf = predict_hard(depth_two(0.5, 0.5, 0.5), [0.0, 0.0])
        assert (value, leaf) == (4.0, 3)

    def test_follows_likelier_child(self):
        assert predict_hard(depth_two(0.4, 0.9, 0.1), [0.0, 0.0]) == (2.0, 1)
        assert predict_hard(depth_two(0.6, 0.9, 0.1), [0.0, 0.0]) == (3.0, 2)

    def test_single_leaf(self):
        m = model_of(Leaf(0, Bin(0, 1, 0.25)))
        assert predict_hard(m, [1, 2]) == (0.25, 0)
        assert predict_soft(m, [1, 2]) == 0.25


class TestBatch:
    def setup_method(self):
        r = Rng(3)
        leaves = [Leaf(i, Bin(i, i + 1, 10.0 * i)) for i in range(3)]
        inner = Internal(2, 2, init_network([2, 4, 1], r), leaves[1], leaves[2], Bin(1, 3, 20))
        self.model = model_of(Internal(0, 1, init_network([2, 4, 1], r), leaves[0], inner, Bin(0, 3, 10)))
        self.X = np.random.default_rng(1).normal(size=(25, 2))

    @pytest.mark.parametrize("mode", ["soft", "hard"])
    def test_matches_single(self, mode):
        one = predict_soft if mode == "soft" else (lambda m, x: predict_hard(m, x)[0])
        expected = [one(self.model, x) for x in self.X]
        np.testing.assert_allclose(predict_batch(self.model, self.X, mode), expected, rtol=1e-14)
        np.testing.assert_allclose(predict_batch(self.model, list(self.X), mode), expected, rtol=1e-14)

    def test_empty(self):
        assert predict_batch(self.model, []).shape == (0,)

    def test_bad_element_reports_index(self):
        xs = [np.zeros(2), np.zeros(2), np.zeros(3)]
        with pytest.raises(ShapeError, match="input 2"):
            predict_batch(self.model, xs)

    def test_bad_mode(self):
        with pytest.raises(ValueError):
            predict_batch(self.model, self.X, "median")

    def test_standardization_applied(self):
        m = self.model
        shifted = NrtModel(m.root, 2, m.config, np.array([1.0, -2.0]), np.array([2.0, 0.5]))
        X = self.X
        np.testing.assert_allclose(predict_batch(shifted, X),
                                   predict_batch(m, (X - shifted.x_mean) / shifted.x_scale), rtol=1e-14)
