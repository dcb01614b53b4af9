"""Tests for coarse-graining, transition classification and partition search."""

import tempfile
import unittest
from pathlib import Path

import numpy as np

from flicker.coarse_grain import (
    Partition,
    TransitionClass,
    Weighting,
    boolean_partition,
    boolean_partition_from_spec,
    classify_transitions,
    effective_information,
    effectiveness,
    ei_decomposition,
    emergence_score,
    macro_tpm,
    partition_score,
    partition_search,
    set_partitions,
    transitions_frame,
)
from flicker.probability import ProbVector, TransitionMatrix, excess_entropy
from flicker.utils.exceptions import DomainError, SearchRefusedError, ValidationError
from flicker.utils.pipeline import load_dask_config

THIRD = 1 / 3
# Three states that forget each other but never leave the group, and a fixed point
DEGENERATE = [
    [THIRD, THIRD, THIRD, 0],
    [THIRD, THIRD, THIRD, 0],
    [THIRD, THIRD, THIRD, 0],
    [0, 0, 0, 1],
]
# Half/half coarse-graining of this system has one incongruous transition (0 -> 0)
INCONGRUOUS = [
    [0.4, 0.0, 0.3, 0.3],
    [0.0, 0.0, 0.5, 0.5],
    [0.3, 0.5, 0.2, 0.0],
    [0.3, 0.5, 0.0, 0.2],
]
CYCLE3 = [[0, 1, 0], [0, 0, 1], [1, 0, 0]]
CYCLE4 = [[0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1], [1, 0, 0, 0]]
DOUBLE_SWAP = [[0, 1, 0, 0], [1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]]
MEMORYLESS = [[0.1, 0.2, 0.3, 0.4]] * 4
DASK_CONFIG = {"scheduler": "threads", "num_workers": 2, "chunk_size": 4}


def random_tpms(seed: int, count: int, max_states: int = 6):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        n = int(rng.integers(2, max_states + 1))
        yield TransitionMatrix(rng.dirichlet(np.ones(n), size=n))


def degenerate_ei() -> float:
    return (3 * np.log2(4 / 3) + 2) / 4


class TestPartition(unittest.TestCase):
    def test_groups_and_labels(self):
        p = Partition.from_groups([[0, 1, 2], [3]], ["a", "b", "c", "d"])
        self.assertEqual(p.assignment, (0, 0, 0, 1))
        self.assertEqual(p.M, 2)
        self.assertEqual(p.describe(), {"0": ["a", "b", "c"], "1": ["d"]})
        self.assertFalse(p.is_identity)
        self.assertTrue(Partition.identity(4).is_identity)

    def test_from_mapping(self):
        p = Partition.from_mapping({"a": "x", "b": "y", "c": "x"}, ["a", "b", "c"])
        self.assertEqual(p.assignment, (0, 1, 0))
        self.assertEqual(p.macro_labels, ("x", "y"))
        with self.assertRaises(ValidationError):
            Partition.from_mapping({"a": "x"}, ["a", "b"])
        with self.assertRaises(ValidationError):
            Partition.from_mapping({"a": "x", "b": "x", "z": "y"}, ["a", "b"])

    def test_empty_macro_state(self):
        with self.assertRaises(ValidationError):
            Partition((0, 2, 2))

    def test_equality_ignores_labels(self):
        self.assertEqual(Partition((0, 0, 1)), Partition((0, 0, 1), ["a", "b", "c"]))
        self.assertEqual(Partition((1, 1, 0)).canonical(), (0, 0, 1))

    def test_project(self):
        p = Partition.from_groups([[0, 2], [1]])
        np.testing.assert_allclose(p.project(ProbVector([0.2, 0.3, 0.5])).probs, [0.7, 0.3])


class TestLumping(unittest.TestCase):
    def test_degenerate_macro(self):
        W = TransitionMatrix(DEGENERATE)
        macro = macro_tpm(W, Partition((0, 0, 0, 1)))
        np.testing.assert_allclose(macro.macro_tpm.rows, np.eye(2), atol=1e-15)
        self.assertIs(macro.weighting, Weighting.UNIFORM)

    def test_identity_is_exact(self):
        for W in random_tpms(seed=5, count=100):
            macro = macro_tpm(W, Partition.identity(W.n))
            np.testing.assert_array_equal(macro.macro_tpm.rows, W.rows)
            self.assertEqual(emergence_score(W, macro), 0.0)

    def test_stationary_weighting(self):
        W = TransitionMatrix([[0.5, 0.5, 0], [0.25, 0.5, 0.25], [0, 0.5, 0.5]])
        partition = Partition((0, 0, 1))
        uniform = macro_tpm(W, partition, "uniform")
        weighted = macro_tpm(W, partition, Weighting.STATIONARY)
        np.testing.assert_allclose(uniform.macro_tpm.rows, [[0.875, 0.125], [0.5, 0.5]])
        np.testing.assert_allclose(
            weighted.macro_tpm.rows, [[5 / 6, 1 / 6], [0.5, 0.5]], atol=1e-9
        )

    def test_stationary_fallback(self):
        W = TransitionMatrix([[0.5, 0.5, 0], [0.25, 0.5, 0.25], [0, 0.5, 0.5]])
        macro = macro_tpm(
            W,
            Partition((0, 1, 1)),
            "stationary",
            stationary_prior=ProbVector([0.0, 0.5, 0.5]),
        )
        self.assertEqual(macro.fallback_groups, (0,))
        np.testing.assert_allclose(macro.macro_tpm.rows, [[0.5, 0.5], [0.125, 0.875]])

    def test_size_mismatch(self):
        with self.assertRaises(ValidationError):
            macro_tpm(TransitionMatrix(CYCLE3), Partition((0, 0, 1, 1)))


class TestEffectiveness(unittest.TestCase):
    def test_degenerate_example(self):
        W = TransitionMatrix(DEGENERATE)
        self.assertAlmostEqual(effective_information(W), degenerate_ei(), delta=1e-12)
        self.assertAlmostEqual(effectiveness(W), degenerate_ei() / 2, delta=1e-12)
        self.assertAlmostEqual(effectiveness(W), 0.4057, delta=1e-4)

        macro = macro_tpm(W, Partition((0, 0, 0, 1)))
        self.assertAlmostEqual(effectiveness(macro.macro_tpm), 1.0, delta=1e-12)
        score = emergence_score(W, macro)
        self.assertAlmostEqual(score, np.log2(2 / degenerate_ei()), delta=1e-9)
        self.assertAlmostEqual(score, 1.3017, delta=1e-4)

    def test_extremes(self):
        for rows in (CYCLE3, CYCLE4, DOUBLE_SWAP, np.eye(5)):
            self.assertAlmostEqual(effectiveness(TransitionMatrix(rows)), 1.0, delta=1e-12)
        self.assertAlmostEqual(effectiveness(TransitionMatrix(MEMORYLESS)), 0.0, delta=1e-12)

    def test_random_bounds(self):
        for W in random_tpms(seed=11, count=100):
            eff = effectiveness(W)
            self.assertGreaterEqual(eff, 0.0)
            self.assertLessEqual(eff, 1.0)

    def test_decomposition(self):
        for W in random_tpms(seed=3, count=20):
            parts = ei_decomposition(W)
            self.assertAlmostEqual(
                parts.effective_information, parts.determinism - parts.degeneracy, delta=1e-9
            )

    def test_matches_uniform_excess_entropy(self):
        for W in random_tpms(seed=5, count=20):
            self.assertAlmostEqual(
                effective_information(W),
                excess_entropy(W, ProbVector.uniform(W.n, W.labels)),
                delta=1e-12,
            )

    def test_single_state(self):
        with self.assertRaises(DomainError):
            effectiveness(TransitionMatrix([[1.0]]))
        self.assertIsNone(ei_decomposition(TransitionMatrix([[1.0]])).effectiveness)

    def test_score_domain(self):
        W = TransitionMatrix(MEMORYLESS)
        with self.assertRaises(DomainError):
            emergence_score(W, macro_tpm(W, Partition((0, 0, 1, 1))))
        with self.assertRaises(DomainError):
            emergence_score(W, macro_tpm(W, Partition.single(4)))

    def test_score_negative_infinity(self):
        W = TransitionMatrix(CYCLE4)
        self.assertEqual(emergence_score(W, macro_tpm(W, Partition((0, 0, 1, 1)))), -np.inf)

    def test_lossy_cycle(self):
        W = TransitionMatrix(CYCLE3)
        macro = macro_tpm(W, Partition((0, 0, 1)))
        np.testing.assert_allclose(macro.macro_tpm.rows, [[0.5, 0.5], [1.0, 0.0]])
        self.assertAlmostEqual(
            effective_information(macro.macro_tpm), 0.31127812445913283, delta=1e-9
        )
        self.assertLess(emergence_score(W, macro), 0)


class TestClassification(unittest.TestCase):
    def test_incongruous_system(self):
        W = TransitionMatrix(INCONGRUOUS)
        macro = macro_tpm(W, Partition((0, 0, 1, 1)))
        np.testing.assert_allclose(macro.macro_tpm.rows, [[0.2, 0.8], [0.8, 0.2]])
        result = classify_transitions(W, macro)
        self.assertEqual(len(result.records), 11)
        self.assertEqual(result.counts["incongruous"], 1)
        self.assertEqual(result.counts["congruent-informative"], 8)
        self.assertEqual(result.counts["congruent-misinformative"], 2)
        self.assertEqual(result.n_informative, 9)
        self.assertAlmostEqual(result.fraction, 1 / 9, delta=1e-12)
        self.assertAlmostEqual(result.incongruous_mass, 0.1, delta=1e-12)
        self.assertFalse(result.all_zero)
        record = result.lookup()[(0, 0)]
        self.assertIs(record.kind, TransitionClass.INCONGRUOUS)
        self.assertGreater(record.e_micro, 0)
        self.assertLess(record.e_macro, 0)

    def test_stationary_prior_matches_uniform(self):
        W = TransitionMatrix(INCONGRUOUS)
        macro = macro_tpm(W, Partition((0, 0, 1, 1)))
        result = classify_transitions(W, macro, "stationary")
        self.assertAlmostEqual(result.incongruous_mass, 0.1, delta=1e-9)

    def test_anti_incongruous(self):
        W = TransitionMatrix(
            [[0.1, 0.9, 0, 0], [0.5, 0.5, 0, 0], [0, 0, 0.5, 0.5], [0, 0, 0.5, 0.5]]
        )
        result = classify_transitions(W, macro_tpm(W, Partition((0, 0, 1, 1))))
        self.assertIs(result.lookup()[(0, 0)].kind, TransitionClass.ANTI_INCONGRUOUS)
        self.assertEqual(result.counts["anti-incongruous"], 1)

    def test_identity_never_incongruous(self):
        for W in random_tpms(seed=17, count=100):
            result = classify_transitions(W, macro_tpm(W, Partition.identity(W.n)))
            self.assertEqual(result.counts["incongruous"], 0)
            self.assertEqual(result.counts["anti-incongruous"], 0)
            self.assertEqual(result.fraction, 0.0)

    def test_memoryless_all_zero(self):
        W = TransitionMatrix(MEMORYLESS)
        result = classify_transitions(W, macro_tpm(W, Partition((0, 0, 1, 1))))
        self.assertTrue(result.all_zero)
        self.assertEqual(result.fraction, 0.0)
        self.assertEqual(result.counts["zero"], 16)

    def test_frame(self):
        W = TransitionMatrix(INCONGRUOUS)
        frame = transitions_frame(classify_transitions(W, macro_tpm(W, Partition((0, 0, 1, 1)))))
        self.assertEqual(len(frame), 11)
        self.assertEqual(
            list(frame.columns),
            ["src", "dst", "macro_src", "macro_dst", "probability", "e_micro", "e_macro", "class"],
        )
        self.assertEqual((frame["class"] == "incongruous").sum(), 1)


class TestSearch(unittest.TestCase):
    def test_bell_numbers(self):
        for n, bell in zip(range(1, 7), (1, 2, 5, 15, 52, 203)):
            self.assertEqual(len(list(set_partitions(n))), bell)
        partitions = list(set_partitions(3))
        self.assertEqual(partitions[0], (0, 0, 0))
        self.assertEqual(partitions[-1], (0, 1, 2))
        self.assertEqual(partitions, sorted(partitions))

    def test_single_group_scores_zero(self):
        self.assertEqual(partition_score(np.array(DEGENERATE), (0, 0, 0, 0)), 0.0)

    def test_exhaustive_degenerate(self):
        result = partition_search(TransitionMatrix(DEGENERATE), "exhaustive", DASK_CONFIG)
        self.assertEqual(result.partition.assignment, (0, 0, 0, 1))
        self.assertAlmostEqual(result.score, 1.0, delta=1e-12)

    def test_greedy_degenerate(self):
        result = partition_search(TransitionMatrix(DEGENERATE), "greedy")
        self.assertEqual(result.partition.assignment, (0, 0, 0, 1))
        self.assertAlmostEqual(result.score, 1.0, delta=1e-12)

    def test_cycle_keeps_identity(self):
        result = partition_search(TransitionMatrix(CYCLE3), "exhaustive", DASK_CONFIG)
        self.assertEqual(result.partition.assignment, (0, 1, 2))

    def test_tie_break(self):
        result = partition_search(TransitionMatrix(DOUBLE_SWAP), "exhaustive", DASK_CONFIG)
        self.assertEqual(result.partition.assignment, (0, 0, 1, 1))

    def test_memoryless(self):
        W = TransitionMatrix(MEMORYLESS)
        self.assertEqual(partition_search(W, "exhaustive", DASK_CONFIG).partition.M, 1)
        self.assertTrue(partition_search(W, "greedy").partition.is_identity)

    def test_refused(self):
        with self.assertRaises(SearchRefusedError):
            partition_search(TransitionMatrix(np.eye(11)), "exhaustive", DASK_CONFIG)
        with self.assertRaises(ValidationError):
            partition_search(TransitionMatrix(np.eye(3)), "annealing")

    def test_labels_carried(self):
        W = TransitionMatrix(DEGENERATE, labels=["a", "b", "c", "d"])
        result = partition_search(W, "greedy")
        self.assertEqual(result.partition.micro_labels, ("a", "b", "c", "d"))

    def test_dask_config(self):
        config = load_dask_config()
        self.assertEqual(config["scheduler"], "threads")
        self.assertEqual(config["chunk_size"], 2048)
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "dask.yaml"
            path.write_text("scheduler: synchronous\nchunk_size: 3\ncolour: blue\n")
            config = load_dask_config(path)
        self.assertEqual(config["scheduler"], "synchronous")
        self.assertEqual(config["chunk_size"], 3)
        self.assertNotIn("colour", config)
        result = partition_search(TransitionMatrix(DOUBLE_SWAP), "exhaustive", config)
        self.assertEqual(result.partition.assignment, (0, 0, 1, 1))


class TestBoolean(unittest.TestCase):
    def test_two_element_functions(self):
        self.assertEqual(boolean_partition(2, [[1, 2]], ["AND"]).assignment, (0, 0, 0, 1))
        self.assertEqual(boolean_partition(2, [[1, 2]], ["OR"]).assignment, (0, 1, 1, 1))
        self.assertEqual(boolean_partition(2, [[1, 2]], ["XOR"]).assignment, (0, 1, 1, 0))
        self.assertEqual(boolean_partition(2, [[1, 2]], ["MAJ"]).assignment, (0, 0, 0, 1))
        self.assertEqual(boolean_partition(3, [[1, 2, 3]], ["maj"]).assignment, (0, 0, 0, 1, 0, 1, 1, 1))

    def test_four_elements(self):
        p = boolean_partition(4, [[1, 2], [3, 4]], ["AND", "OR"])
        self.assertEqual(p.n, 16)
        self.assertEqual(p.M, 4)
        self.assertEqual(p.micro_labels[13], "1101")
        self.assertEqual(p.assignment[13], 3)
        self.assertEqual(p.macro_labels, ("00", "01", "10", "11"))

    def test_spec(self):
        p = boolean_partition_from_spec(
            {"n_elements": 4, "groups": [[1, 2], [3, 4]], "functions": ["XOR", "XOR"]}
        )
        self.assertEqual(p.M, 4)
        with self.assertRaises(ValidationError):
            boolean_partition_from_spec({"n_elements": 4})

    def test_invalid(self):
        with self.assertRaises(ValidationError):
            boolean_partition(3, [[1, 2], [2, 3]], ["AND", "OR"])
        with self.assertRaises(ValidationError):
            boolean_partition(2, [[1, 2]], ["NAND"])
        with self.assertRaises(ValidationError):
            boolean_partition(2, [[1], [2]], ["AND"])


if __name__ == "__main__":
    unittest.main()
