"""Tests for distributions and local/expected information."""

import unittest
from unittest import mock

import numpy as np

from flicker.probability import (
    JointDist,
    PriorPolicy,
    ProbVector,
    TransitionMatrix,
    entropy,
    excess_entropy,
    expected_mi,
    joint_from_tpm,
    kl_divergence,
    local_excess_entropy,
    local_excess_entropy_table,
    local_mi,
    local_mi_table,
    resolve_prior,
    stationary,
)
from flicker.utils.exceptions import (
    DivergenceError,
    UndefinedConditionalError,
    ValidationError,
)

NOISY_COPY = [[0.9, 0.1], [0.1, 0.9]]


def random_joint(rng: np.random.Generator, max_states: int = 8) -> JointDist:
    nx, ny = rng.integers(1, max_states + 1, size=2)
    table = rng.random((nx, ny))
    table[rng.random((nx, ny)) < 0.2] = 0.0
    if table.sum() == 0:
        table[0, 0] = 1.0
    return JointDist(table / table.sum())


class TestDistributions(unittest.TestCase):
    def test_entropy(self):
        self.assertAlmostEqual(entropy(ProbVector([0.9, 0.1])), 0.4689955935892812, places=9)
        self.assertAlmostEqual(entropy(ProbVector.uniform(8)), 3.0, places=12)
        self.assertEqual(entropy(ProbVector([1.0, 0.0])), 0.0)

    def test_prob_vector_validation(self):
        with self.assertRaises(ValidationError):
            ProbVector([0.5, -0.1, 0.6])
        with self.assertRaises(ValidationError):
            ProbVector([0.5, 0.4])
        with self.assertRaises(ValidationError):
            ProbVector([0.5, 0.5], labels=["a", "a"])
        p = ProbVector.from_values([0.5, 0.5000004])
        self.assertAlmostEqual(p.probs.sum(), 1.0, places=15)
        with self.assertRaises(ValidationError):
            ProbVector.from_values([0.5, 0.51])

    def test_vectors_are_read_only(self):
        p = ProbVector([0.25, 0.75])
        with self.assertRaises(ValueError):
            p.probs[0] = 1.0

    def test_kl_divergence(self):
        p = ProbVector([0.5, 0.5])
        q = ProbVector([0.25, 0.75])
        self.assertAlmostEqual(kl_divergence(p, q), 0.5 - 0.5 * np.log2(1.5), places=12)
        self.assertEqual(kl_divergence(p, p), 0.0)
        self.assertEqual(kl_divergence(p, ProbVector([1.0, 0.0])), np.inf)


class TestTransitionMatrix(unittest.TestCase):
    def test_bad_row_named(self):
        with self.assertRaises(ValidationError) as cm:
            TransitionMatrix([[0.5, 0.5], [0.5, 0.3]], labels=["up", "down"])
        self.assertIn("'down'", str(cm.exception))

    def test_square(self):
        with self.assertRaises(ValidationError):
            TransitionMatrix([[0.5, 0.5]])

    def test_renormalization_recorded(self):
        W = TransitionMatrix.from_rows([[0.5, 0.5000005], [0.2, 0.8]])
        self.assertEqual(W.renormalized, (0,))
        self.assertAlmostEqual(W.rows[0].sum(), 1.0, places=15)
        with self.assertRaises(ValidationError):
            TransitionMatrix.from_rows([[0.5, 0.6], [0.2, 0.8]])

    def test_index_by_label(self):
        W = TransitionMatrix(NOISY_COPY, labels=["a", "b"])
        self.assertEqual(W.index("b"), 1)
        self.assertEqual(W.index(0), 0)
        with self.assertRaises(ValidationError):
            W.index("c")
        with self.assertRaises(ValidationError):
            W.index(2)


class TestLocalInformation(unittest.TestCase):
    def setUp(self):
        self.rng = np.random.default_rng(20231)
        self.corpus = [random_joint(self.rng) for _ in range(200)]

    def test_localization_consistency(self):
        """Probability-weighted local values average to the mutual information"""
        for j in self.corpus:
            local = local_mi_table(j)
            positive = j.table > 0
            mean = float(np.sum(j.table[positive] * local[positive]))
            self.assertAlmostEqual(mean, expected_mi(j), delta=1e-9)

    def test_entropy_identity(self):
        for j in self.corpus:
            hx = entropy(j.row_marginal)
            hy = entropy(j.col_marginal)
            hxy = entropy(ProbVector(j.table.ravel()))
            self.assertAlmostEqual(expected_mi(j), max(hx + hy - hxy, 0.0), delta=1e-9)

    def test_sign_law(self):
        """Local information is negative exactly when p(x,y) < p(x)p(y)"""
        for j in self.corpus:
            px = j.table.sum(axis=1)
            py = j.table.sum(axis=0)
            local = local_mi_table(j)
            for x in range(j.table.shape[0]):
                for y in range(j.table.shape[1]):
                    if px[x] == 0 or py[y] == 0:
                        self.assertTrue(np.isnan(local[x, y]))
                        continue
                    product = px[x] * py[y]
                    # independent cells differ from the product by rounding only
                    if abs(j.table[x, y] - product) <= 1e-12 * product:
                        continue
                    self.assertEqual(local[x, y] < 0, j.table[x, y] < product)

    def test_local_mi_edges(self):
        j = JointDist([[0.5, 0.0], [0.0, 0.5]])
        self.assertEqual(local_mi(j, 0, 1), -np.inf)
        self.assertAlmostEqual(local_mi(j, 0, 0), 1.0, places=12)
        undefined = JointDist([[0.5, 0.0], [0.5, 0.0]])
        with self.assertRaises(UndefinedConditionalError):
            local_mi(undefined, 0, 1)

    def test_transpose(self):
        j = self.corpus[0]
        self.assertAlmostEqual(expected_mi(j), expected_mi(j.T), delta=1e-12)


class TestMarkov(unittest.TestCase):
    def test_excess_entropy_noisy_copy(self):
        W = TransitionMatrix(NOISY_COPY)
        p = ProbVector.uniform(2)
        np.testing.assert_allclose(joint_from_tpm(W, p).table, [[0.45, 0.05], [0.05, 0.45]])
        self.assertAlmostEqual(excess_entropy(W, p), 1 - 0.4689955935892812, places=9)
        self.assertAlmostEqual(local_excess_entropy(W, p, 0, 0), np.log2(1.8), places=12)
        self.assertAlmostEqual(local_excess_entropy(W, p, 0, 1), np.log2(0.2), places=12)

    def test_local_excess_entropy_table(self):
        W = TransitionMatrix([[1.0, 0.0], [0.5, 0.5]])
        table = local_excess_entropy_table(W, ProbVector.uniform(2))
        self.assertEqual(table[0, 1], -np.inf)
        self.assertAlmostEqual(table[0, 0], np.log2(1 / 0.75), places=12)
        self.assertAlmostEqual(table[1, 1], np.log2(0.5 / 0.25), places=12)

    def test_local_excess_entropy_undefined(self):
        W = TransitionMatrix([[1.0, 0.0], [1.0, 0.0]])
        with self.assertRaises(UndefinedConditionalError):
            local_excess_entropy(W, ProbVector.uniform(2), 0, 1)
        with self.assertRaises(UndefinedConditionalError):
            local_excess_entropy(W, ProbVector([1.0, 0.0]), 1, 0)

    def test_stationary(self):
        W = TransitionMatrix([[0.9, 0.1], [0.5, 0.5]])
        np.testing.assert_allclose(stationary(W).probs, [5 / 6, 1 / 6], atol=1e-10)

    def test_stationary_periodic(self):
        W = TransitionMatrix([[0, 1, 0], [0.5, 0, 0.5], [0, 1, 0]])
        np.testing.assert_allclose(stationary(W).probs, [0.25, 0.5, 0.25], atol=1e-10)

    def test_stationary_reducible(self):
        W = TransitionMatrix(np.eye(3))
        np.testing.assert_allclose(stationary(W).probs, [1 / 3] * 3, atol=1e-12)

    def test_stationary_divergence(self):
        W = TransitionMatrix([[0.9, 0.1], [0.5, 0.5]])
        with mock.patch("flicker.probability.STATIONARY_MAX_ITER", 1):
            with self.assertRaises(DivergenceError) as cm:
                stationary(W)
        self.assertGreater(cm.exception.residual, 1e-8)

    def test_resolve_prior(self):
        W = TransitionMatrix([[0.9, 0.1], [0.5, 0.5]])
        np.testing.assert_allclose(resolve_prior(W, None).probs, [0.5, 0.5])
        np.testing.assert_allclose(
            resolve_prior(W, PriorPolicy.STATIONARY).probs, [5 / 6, 1 / 6], atol=1e-10
        )
        np.testing.assert_allclose(resolve_prior(W, "stationary").probs, [5 / 6, 1 / 6], atol=1e-10)
        with self.assertRaises(ValidationError):
            resolve_prior(W, ProbVector.uniform(3))


if __name__ == "__main__":
    unittest.main()
