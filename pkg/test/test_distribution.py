import json
import tempfile
import unittest
from fractions import Fraction
from pathlib import Path

from distribution import AreaDistribution, write_distribution


class AreaDistributionTest(unittest.TestCase):
    def setUp(self):
        self.dist = AreaDistribution(N=4, counts={1: 4, 0: 28, -1: 4, 3: 0})

    def test_canonical_form(self):
        self.assertEqual(list(self.dist.counts.items()), [(-1, 4), (0, 28), (1, 4)])
        self.assertEqual(self.dist.total, 36)
        self.assertEqual(self.dist.count(2), 0)

    def test_probabilities_are_exact(self):
        probs = self.dist.probabilities()
        self.assertEqual(probs[0], Fraction(7, 9))
        self.assertEqual(sum(probs.values()), 1)

    def test_csv(self):
        self.assertEqual(self.dist.to_csv(), "area,count\n-1,4\n0,28\n1,4\n")
        self.assertEqual(AreaDistribution.from_csv(self.dist.to_csv(), N=4), self.dist)

    def test_json_keeps_big_counts_as_strings(self):
        big = AreaDistribution(N=40, counts={0: 2**70})
        payload = json.loads(big.to_json())
        self.assertEqual(payload["counts"], [[0, str(2**70)]])
        self.assertEqual(payload["total"], str(2**70))
        self.assertEqual(AreaDistribution.from_json(big.to_json()), big)

    def test_json_total_mismatch(self):
        with self.assertRaises(ValueError):
            AreaDistribution.from_json('{"N": 4, "total": "35", "counts": [[0, "36"]]}')

    def test_unknown_format(self):
        with self.assertRaises(ValueError):
            self.dist.serialize("xml")

    def test_write_distribution(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "out" / "n4.json"
            text = write_distribution(self.dist, path, "json")
            self.assertEqual(path.read_bytes(), text.encode("utf-8"))
        self.assertTrue(text.endswith("}\n"))


if __name__ == "__main__":
    unittest.main()
