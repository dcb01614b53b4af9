"""Tests for the CSV and JSON codecs."""

import json
import tempfile
import unittest
from pathlib import Path

import numpy as np

from flicker.coarse_grain import Partition
from flicker.report import EmergenceReport
from flicker.utils.exceptions import ParseError, ValidationError
from flicker.utils.io import (
    file_digest,
    format_float,
    read_communities_csv,
    read_edge_list_csv,
    read_json,
    read_partition_csv,
    read_prob_vector_csv,
    read_tpm_csv,
    write_matrix_csv,
    write_partition_csv,
)
from flicker.utils.json import dumps


class IOTestCase(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def write(self, name: str, text: str) -> Path:
        path = self.dir / name
        path.write_text(text)
        return path


class TestMatrices(IOTestCase):
    def test_headerless(self):
        W = read_tpm_csv(self.write("w.csv", "0.9,0.1\n0.5,0.5\n"))
        self.assertEqual(W.labels, ("0", "1"))
        np.testing.assert_allclose(W.rows, [[0.9, 0.1], [0.5, 0.5]])

    def test_header(self):
        W = read_tpm_csv(self.write("w.csv", "up,down\n0.9,0.1\n\n0.5,0.5\n"))
        self.assertEqual(W.labels, ("up", "down"))

    def test_numeric_header(self):
        W = read_tpm_csv(self.write("w.csv", "10,20\n0,1\n1,0\n"))
        self.assertEqual(W.labels, ("10", "20"))

    def test_bad_row_line(self):
        path = self.write("w.csv", "a,b\n0.5,0.5\n0.8,0.1\n")
        with self.assertRaises(ParseError) as cm:
            read_tpm_csv(path)
        self.assertEqual(cm.exception.line, 3)
        self.assertIn("row 'b' sums to", str(cm.exception))
        self.assertIn(f"{path}:3:", str(cm.exception))

    def test_ragged_and_non_numeric(self):
        with self.assertRaises(ParseError):
            read_tpm_csv(self.write("w.csv", "0.5,0.5\n1.0\n"))
        with self.assertRaises(ParseError) as cm:
            read_tpm_csv(self.write("w.csv", "a,b\n0.5,x\n0.5,0.5\n"))
        self.assertEqual(cm.exception.line, 2)

    def test_long_row_line(self):
        with self.assertRaises(ParseError) as cm:
            read_tpm_csv(self.write("w.csv", "0.5,0.5\n0.2,0.3,0.5\n"))
        self.assertEqual(cm.exception.line, 2)

    def test_not_square(self):
        with self.assertRaises(ParseError):
            read_tpm_csv(self.write("w.csv", "0.5,0.25,0.25\n0.5,0.25,0.25\n"))

    def test_missing(self):
        with self.assertRaises(ParseError):
            read_tpm_csv(self.dir / "absent.csv")
        with self.assertRaises(ParseError):
            read_tpm_csv(self.write("empty.csv", ""))

    def test_renormalized(self):
        W = read_tpm_csv(self.write("w.csv", "0.5,0.5000005\n0.2,0.8\n"))
        self.assertEqual(W.renormalized, (0,))

    def test_write_then_read(self):
        rows = np.array([[1 / 3, 2 / 3], [0.1, 0.9]])
        path = self.dir / "w.csv"
        write_matrix_csv(rows, ["a", "b"], path)
        self.assertTrue(path.read_text().startswith("a,b\n"))
        np.testing.assert_array_equal(read_tpm_csv(path).rows, rows)

    def test_prob_vector(self):
        p = read_prob_vector_csv(self.write("p.csv", "a,b\n0.25,0.75\n"))
        self.assertEqual(p.labels, ("a", "b"))
        np.testing.assert_allclose(p.probs, [0.25, 0.75])


class TestPairs(IOTestCase):
    labels = ["a", "b", "c"]

    def test_partition(self):
        path = self.write("p.csv", "micro,macro\na,x\nb,y\nc,x\n")
        partition = read_partition_csv(path, self.labels)
        self.assertEqual(partition.assignment, (0, 1, 0))
        self.assertEqual(partition.macro_labels, ("x", "y"))

    def test_partition_without_header(self):
        partition = read_partition_csv(self.write("p.csv", "c,1\nb,0\na,0\n"), self.labels)
        self.assertEqual(partition.assignment, (0, 0, 1))

    def test_unknown_key(self):
        path = self.write("p.csv", "a,x\nb,y\nz,x\n")
        with self.assertRaises(ParseError) as cm:
            read_partition_csv(path, self.labels)
        self.assertEqual(cm.exception.line, 3)
        self.assertIn("'z'", str(cm.exception))

    def test_repeated_key(self):
        with self.assertRaises(ParseError):
            read_partition_csv(self.write("p.csv", "a,x\nb,y\na,y\nc,x\n"), self.labels)

    def test_unknown_first_key(self):
        with self.assertRaises(ParseError) as cm:
            read_partition_csv(self.write("p.csv", "z,x\na,x\nb,y\nc,x\n"), self.labels)
        self.assertEqual(cm.exception.line, 1)
        self.assertIn("unknown micro state 'z'", str(cm.exception))

    def test_header_names_any_case(self):
        path = self.write("p.csv", "Micro_Label,Macro_Label\na,x\nb,x\nc,y\n")
        self.assertEqual(read_partition_csv(path, self.labels).assignment, (0, 0, 1))

    def test_missing_key(self):
        with self.assertRaises(ValidationError):
            read_partition_csv(self.write("p.csv", "a,x\nb,y\n"), self.labels)

    def test_partition_written_back(self):
        path = self.dir / "p.csv"
        write_partition_csv(Partition((0, 1, 0), self.labels, ("x", "y")), path)
        self.assertEqual(path.read_text(), "micro_label,macro_label\na,x\nb,y\nc,x\n")
        self.assertEqual(read_partition_csv(path, self.labels).assignment, (0, 1, 0))

    def test_communities(self):
        mapping = read_communities_csv(self.write("c.csv", "node,community\na,0\nb,0\nc,1\n"), self.labels)
        self.assertEqual(mapping, {"a": "0", "b": "0", "c": "1"})
        with self.assertRaises(ParseError):
            read_communities_csv(self.write("c.csv", "a,0\nb,0\n"), self.labels)
        with self.assertRaises(ParseError) as cm:
            read_communities_csv(self.write("c.csv", "a,0\nb,0\nq,1\n"), self.labels)
        self.assertIn("unknown node 'q'", str(cm.exception))

    def test_unknown_first_node(self):
        with self.assertRaises(ParseError) as cm:
            read_communities_csv(self.write("c.csv", "q,1\na,0\nb,0\nc,1\n"), self.labels)
        self.assertEqual(cm.exception.line, 1)
        self.assertIn("unknown node 'q'", str(cm.exception))


class TestEdges(IOTestCase):
    def test_weights(self):
        edges = read_edge_list_csv(self.write("e.csv", "src,dst,weight\na,b,2\nb,c,0.5\n"))
        self.assertEqual(edges, [("a", "b", 2.0), ("b", "c", 0.5)])

    def test_default_weight(self):
        edges = read_edge_list_csv(self.write("e.csv", "a,b\nb,c\n"))
        self.assertEqual(edges, [("a", "b", 1.0), ("b", "c", 1.0)])

    def test_bad_weight(self):
        with self.assertRaises(ParseError) as cm:
            read_edge_list_csv(self.write("e.csv", "a,b,1\nb,c,-2\n"))
        self.assertEqual(cm.exception.line, 2)
        with self.assertRaises(ParseError):
            read_edge_list_csv(self.write("e.csv", "a,b,1\nb,c,heavy\n"))


class TestJSON(IOTestCase):
    def test_read_json_error_line(self):
        with self.assertRaises(ParseError) as cm:
            read_json(self.write("s.json", '{\n  "tpm": [1,\n}\n'))
        self.assertIsNotNone(cm.exception.line)

    def test_non_finite(self):
        text = dumps({"a": np.inf, "b": -np.inf, "c": np.nan, "d": np.float64(0.5)})
        self.assertEqual(json.loads(text), {"a": "inf", "b": "-inf", "c": "nan", "d": 0.5})
        self.assertTrue(text.endswith("\n"))

    def test_format_float(self):
        self.assertEqual(format_float(2.0), "2")
        self.assertEqual(format_float(0.1), "0.10000000000000001")
        self.assertEqual(format_float(-np.inf), "-inf")
        self.assertEqual(format_float(np.nan), "nan")
        self.assertEqual(format_float(None), "")

    def test_report_is_reproducible(self):
        path = self.write("w.csv", "0.9,0.1\n0.5,0.5\n")
        texts = []
        for _ in range(2):
            report = EmergenceReport(kind="analyze")
            report.add_input("tpm", path)
            report.expected = {"score": np.inf, "rows": np.eye(2)}
            report.warn("something odd")
            report.warn("something odd")
            texts.append(report.write(self.dir / "report.json"))
        self.assertEqual(texts[0], texts[1])
        data = json.loads(texts[0])
        self.assertEqual(data["inputs"]["tpm"], file_digest(path))
        self.assertTrue(data["inputs"]["tpm"].startswith("sha256:"))
        self.assertEqual(data["warnings"], ["something odd"])
        self.assertEqual(data["expected"]["score"], "inf")


if __name__ == "__main__":
    unittest.main()
