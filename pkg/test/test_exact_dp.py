import unittest
from fractions import Fraction
from unittest import mock

from asymptotics import LIMIT_VARIANCE, omega_exact
from distribution import AreaDistribution
from errors import BudgetExceededError, ConsistencyError
from exact_dp import check_distribution, dp_counts, moments, table_shape
from walk_core import enumerate_counts, max_area


class DpCountsTest(unittest.TestCase):
    def test_matches_oracle(self):
        for n in range(0, 15, 2):
            with self.subTest(N=n):
                self.assertEqual(dp_counts(n), enumerate_counts(n))

    def test_totals_are_binomial_squares(self):
        self.assertEqual(dp_counts(8).total, 4900)
        self.assertEqual(dp_counts(20).total, 34134779536)
        for n in (22, 26, 30):
            with self.subTest(N=n):
                self.assertEqual(dp_counts(n).total, omega_exact(n))

    def test_support_reaches_bound(self):
        for n in (14, 18, 24):
            with self.subTest(N=n):
                dist = dp_counts(n)
                self.assertEqual(max(dist.areas), max_area(n))
                self.assertEqual(dist.count(max_area(n)), dist.count(-max_area(n)))

    def test_threads_give_identical_counts(self):
        self.assertEqual(dp_counts(16, threads=1), dp_counts(16, threads=4))

    def test_object_cells_match_int64_cells(self):
        reference = dp_counts(10)
        with mock.patch("exact_dp.INT64_SAFE_TOTAL", 0):
            self.assertEqual(dp_counts(10), reference)

    def test_cell_budget(self):
        rows, cols, width = table_shape(20)
        self.assertEqual((rows, cols, width), (21, 21, 201))
        with self.assertRaises(BudgetExceededError):
            dp_counts(20, max_cells=rows * cols * width - 1)

    def test_odd_length_rejected(self):
        with self.assertRaises(ValueError):
            dp_counts(7)


class MomentsTest(unittest.TestCase):
    def test_small_variances(self):
        self.assertEqual(moments(dp_counts(4), 2), Fraction(2, 9))
        self.assertEqual(moments(dp_counts(6), 2), Fraction(3, 5))

    def test_odd_moments_vanish(self):
        for n in (8, 14, 20):
            dist = dp_counts(n)
            with self.subTest(N=n):
                self.assertEqual(moments(dist, 1), 0)
                self.assertEqual(moments(dist, 3), 0)

    def test_scaled_variance_increases_towards_limit(self):
        scaled = [float(moments(dp_counts(n), 2)) / n**2 for n in range(4, 25, 2)]
        for smaller, larger in zip(scaled, scaled[1:]):
            self.assertLess(smaller, larger)
        self.assertLess(scaled[-1], LIMIT_VARIANCE)
        # Var(a) = (1/48)(1 - 1/N) up to O(1/N^2).
        self.assertAlmostEqual(scaled[-1], LIMIT_VARIANCE * (1 - 1 / 24), delta=2.0 / 24**2)

    def test_order_out_of_range(self):
        with self.assertRaises(ValueError):
            moments(dp_counts(4), 5)


class CheckDistributionTest(unittest.TestCase):
    def test_accepts_engine_output(self):
        check_distribution(dp_counts(10))

    def test_rejects_wrong_total(self):
        with self.assertRaises(ConsistencyError):
            check_distribution(AreaDistribution(N=4, counts={-1: 4, 0: 27, 1: 4}))

    def test_rejects_asymmetry(self):
        with self.assertRaises(ConsistencyError):
            check_distribution(AreaDistribution(N=4, counts={-1: 3, 0: 28, 1: 5}))

    def test_rejects_area_past_bound(self):
        with self.assertRaises(ConsistencyError):
            check_distribution(AreaDistribution(N=4, counts={-2: 1, -1: 3, 0: 28, 1: 3, 2: 1}))


if __name__ == "__main__":
    unittest.main()
