import itertools
import unittest
from unittest import mock

from errors import BudgetExceededError
from walk_core import Step, Walk, algebraic_area, enumerate_counts, max_area


def brute_force_counts(N: int) -> dict:
    counts: dict = {}
    for steps in itertools.product(list(Step), repeat=N):
        walk = Walk(steps)
        if walk.is_closed:
            area = algebraic_area(walk)
            counts[area] = counts.get(area, 0) + 1
    return counts


class AlgebraicAreaTest(unittest.TestCase):
    def test_unit_square_orientation(self):
        square = Walk.from_string("RULD")
        self.assertEqual(algebraic_area(square), 1)
        self.assertEqual(algebraic_area(square.reverse()), -1)

    def test_rotation_keeps_area_and_reflection_flips_it(self):
        walk = Walk.from_string("RRUULLDD")
        self.assertEqual(algebraic_area(walk), 4)
        self.assertEqual(algebraic_area(walk.rotate()), 4)
        self.assertEqual(algebraic_area(walk.reflect()), -4)

    def test_figure_eight_cancels(self):
        # One loop counterclockwise, one clockwise.
        self.assertEqual(algebraic_area(Walk.from_string("RULDLURD")), 0)

    def test_backtracking_walk_has_zero_area(self):
        self.assertEqual(algebraic_area(Walk.from_string("RLUD")), 0)

    def test_open_walk_rejected(self):
        with self.assertRaises(ValueError):
            algebraic_area(Walk.from_string("RRUL"))

    def test_odd_walk_rejected(self):
        with self.assertRaises(ValueError):
            algebraic_area(Walk.from_string("RUL"))

    def test_unknown_letter_rejected(self):
        with self.assertRaises(ValueError):
            Walk.from_string("RXLD")

    def test_max_area_values(self):
        self.assertEqual([max_area(n) for n in (0, 2, 4, 6, 8, 10, 12)], [0, 0, 1, 2, 4, 6, 9])


class EnumerateCountsTest(unittest.TestCase):
    def test_small_known_distributions(self):
        self.assertEqual(enumerate_counts(0).counts, {0: 1})
        self.assertEqual(enumerate_counts(2).counts, {0: 4})
        self.assertEqual(enumerate_counts(4).counts, {-1: 4, 0: 28, 1: 4})
        self.assertEqual(enumerate_counts(6).counts, {-2: 12, -1: 72, 0: 232, 1: 72, 2: 12})

    def test_matches_step_by_step_walks(self):
        self.assertEqual(enumerate_counts(6).counts, brute_force_counts(6))

    def test_block_partitioning_and_threads_do_not_change_counts(self):
        reference = enumerate_counts(10)
        with mock.patch("walk_core.BLOCK_PAIRS", 4096):
            self.assertEqual(enumerate_counts(10, threads=1), reference)
            self.assertEqual(enumerate_counts(10, threads=4), reference)

    def test_largest_area_is_attained(self):
        dist = enumerate_counts(12)
        self.assertEqual(max(dist.areas), max_area(12))
        self.assertEqual(min(dist.areas), -max_area(12))

    def test_budget_enforced(self):
        with self.assertRaises(BudgetExceededError):
            enumerate_counts(16)

    def test_odd_length_rejected(self):
        with self.assertRaises(ValueError):
            enumerate_counts(5)


if __name__ == "__main__":
    unittest.main()
