import math
import os
import tempfile
import unittest
from fractions import Fraction
from pathlib import Path

import numpy as np

from asymptotics import omega_exact
from errors import BudgetExceededError, ConsistencyError
from exact_dp import dp_counts
from harper_spectral import (
    RationalFlux,
    bloch_matrix,
    calibrate_phase,
    calibration_residuals,
    flux_for_phase,
    invert_counts,
    invert_counts_detailed,
    invert_probabilities,
    landau_edge_check,
    sample_traces,
    trace_power,
    walk_phase_sum,
    write_trace_table,
)
from walk_core import enumerate_counts, max_area


class RationalFluxTest(unittest.TestCase):
    def test_reduction_modulo_two(self):
        self.assertEqual(RationalFlux.from_fraction(Fraction(5, 2)), RationalFlux(1, 2))
        self.assertEqual(RationalFlux.from_fraction("2/6"), RationalFlux(1, 3))
        self.assertEqual(RationalFlux.from_fraction(-Fraction(1, 4)), RationalFlux(7, 4))

    def test_mirror(self):
        self.assertEqual(RationalFlux(1, 4).mirrored(), RationalFlux(3, 4))
        self.assertEqual(str(RationalFlux(2, 5)), "2/5")

    def test_rejects_unreduced_or_out_of_range(self):
        with self.assertRaises(ValueError):
            RationalFlux(2, 4)
        with self.assertRaises(ValueError):
            RationalFlux(5, 2)
        with self.assertRaises(ValueError):
            RationalFlux(1, 0)


class BlochMatrixTest(unittest.TestCase):
    def test_half_flux_at_zero_momentum(self):
        m = bloch_matrix(RationalFlux(1, 2), 0.0, 0.0)
        np.testing.assert_allclose(m.entries, np.array([[2, 2], [2, -2]]), atol=1e-15)
        np.testing.assert_allclose(m.eigenvalues(), [-2 * math.sqrt(2), 2 * math.sqrt(2)], atol=1e-12)

    def test_hermitian_and_bounded(self):
        for flux in (RationalFlux(1, 3), RationalFlux(2, 7), RationalFlux(5, 11)):
            m = bloch_matrix(flux, 0.37, 1.91)
            with self.subTest(flux=str(flux)):
                self.assertLess(m.hermitian_residue, 1e-15)
                self.assertLessEqual(float(np.max(np.abs(m.eigenvalues()))), 4.0 + 1e-12)


class TracePowerTest(unittest.TestCase):
    def test_zero_flux_counts_closed_walks(self):
        for n in range(0, 25, 2):
            with self.subTest(N=n):
                value = trace_power(n, RationalFlux(0, 1)).real
                self.assertAlmostEqual(value / omega_exact(n), 1.0, delta=1e-12)

    def test_half_flux_four_steps(self):
        # 28 area-0 walks minus 8 unit squares.
        self.assertAlmostEqual(trace_power(4, RationalFlux(1, 2)).real, 20.0, delta=1e-12)

    def test_matches_walk_phase_sum(self):
        dist = enumerate_counts(10)
        for flux in (RationalFlux(1, 7), RationalFlux(3, 8), RationalFlux(2, 9)):
            with self.subTest(flux=str(flux)):
                expected = walk_phase_sum(dist, flux.gamma, 2)
                self.assertAlmostEqual(trace_power(10, flux).real, expected.real, delta=1e-7)

    def test_mirrored_flux_gives_same_trace(self):
        for n in (6, 10, 14):
            zero = trace_power(n, RationalFlux(0, 1)).real
            for flux in (RationalFlux(1, 7), RationalFlux(3, 8), RationalFlux(2, 9), RationalFlux(1, 2)):
                with self.subTest(N=n, flux=str(flux)):
                    value = trace_power(n, flux).real
                    self.assertAlmostEqual(value, trace_power(n, flux.mirrored()).real, delta=1e-10 * zero)

    def test_trace_bounded_by_zero_flux(self):
        for n in (6, 10, 14):
            zero = trace_power(n, RationalFlux(0, 1)).real
            for flux in (RationalFlux(1, 7), RationalFlux(3, 8), RationalFlux(2, 9), RationalFlux(1, 2)):
                with self.subTest(N=n, flux=str(flux)):
                    self.assertLessEqual(abs(trace_power(n, flux).real), zero)

    def test_single_corner_gauge_is_exact_on_same_grid(self):
        # Hops without k1 phase, exp(i q k1) only on the corner.
        n = 8
        order = n + 1
        k = 2.0 * math.pi * np.arange(order) / order
        k1, k2 = (g.ravel() for g in np.meshgrid(k, k, indexing="ij"))
        for flux in (RationalFlux(1, 3), RationalFlux(2, 5), RationalFlux(3, 7)):
            q = flux.q
            idx = np.arange(q)
            lower = np.zeros((k1.size, q, q), dtype=complex)
            lower[:, idx[1:], idx[:-1]] = 1.0
            lower[:, q - 1, 0] += np.exp(1j * q * k1)
            diag = np.zeros_like(lower)
            diag[:, idx, idx] = 2.0 * np.cos(k2[:, None] + flux.phase_offsets()[None, :])
            stack = diag + lower + np.conj(np.swapaxes(lower, 1, 2))
            total = math.fsum((np.linalg.eigvalsh(stack) ** n).ravel()) / (q * order * order)
            with self.subTest(flux=str(flux)):
                self.assertAlmostEqual(total, trace_power(n, flux).real, delta=1e-8)

    def test_grid_too_small(self):
        with self.assertRaises(ValueError):
            trace_power(8, RationalFlux(1, 3), grid=8)

    def test_larger_grid_agrees(self):
        flux = RationalFlux(1, 5)
        self.assertAlmostEqual(trace_power(8, flux).real, trace_power(8, flux, grid=13).real, delta=1e-8)


class CalibrationTest(unittest.TestCase):
    def test_phase_factor_is_two(self):
        self.assertEqual(calibrate_phase(), 2)
        residuals = calibration_residuals()
        self.assertLess(residuals[2], 1e-9)
        self.assertGreater(residuals[1], 1.0)


class InversionTest(unittest.TestCase):
    def test_sampling_phases(self):
        self.assertEqual(flux_for_phase(3, 13), RationalFlux(3, 13))
        traces = sample_traces(8)
        samples = 2 * max_area(8) + 1
        self.assertEqual(len(traces), samples)
        for j in range(1, samples):
            self.assertEqual(traces[j].value, traces[samples - j].value)

    def test_recovers_dp_counts(self):
        for n in range(0, 17, 2):
            with self.subTest(N=n):
                self.assertEqual(invert_counts(n), dp_counts(n))

    def test_recovers_counts_at_eighteen_and_twenty(self):
        for n in (18, 20):
            inversion = invert_counts_detailed(n, threads=4)
            with self.subTest(N=n):
                self.assertEqual(inversion.distribution, dp_counts(n))
                self.assertLess(inversion.max_residue, 0.25)

    def test_wrong_phase_factor_does_not_reproduce_counts(self):
        try:
            dist = invert_counts(8, phase_factor=1)
        except ConsistencyError:
            return
        self.assertNotEqual(dist, dp_counts(8))

    def test_integer_recovery_budget(self):
        with self.assertRaises(BudgetExceededError):
            invert_counts(26)

    def test_float_probabilities(self):
        exact = dp_counts(20)
        result = invert_probabilities(20)
        self.assertLess(result.error, 1e-9)
        for area, count in exact.counts.items():
            self.assertAlmostEqual(result.probabilities[area], count / exact.total, delta=1e-12)

    def test_trace_table(self):
        traces = invert_counts_detailed(4).traces
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "traces.csv"
            text = write_trace_table(traces, path)
            self.assertTrue(os.path.exists(path))
            self.assertEqual(path.read_text(encoding="utf-8"), text)
        lines = text.splitlines()
        self.assertEqual(lines[0], "N,p,q,re,im,grid")
        self.assertEqual(len(lines), 1 + len(traces))
        n, p, q, re, im, grid = lines[1].split(",")
        self.assertEqual((n, p, q, grid), ("4", "0", "1", "5"))
        self.assertAlmostEqual(float(re), 36.0, delta=1e-10)
        self.assertEqual(float(im), 0.0)


class LandauEdgeTest(unittest.TestCase):
    def test_zero_flux_edges(self):
        rows = landau_edge_check(RationalFlux(0, 1), num_levels=1)
        self.assertEqual([(r.level, r.sign) for r in rows], [(0, 1), (0, -1)])
        self.assertEqual(rows[0].measured, 4.0)
        self.assertEqual(rows[1].measured, -4.0)

    def test_deviation_shrinks_like_gamma_cubed(self):
        deviations = {}
        for q in (100, 200, 400):
            rows = landau_edge_check(RationalFlux(1, q), num_levels=3)
            self.assertTrue(all(r.separated for r in rows))
            deviations[q] = {(r.level, r.sign): abs(r.deviation) for r in rows}
        for key in deviations[100]:
            with self.subTest(level=key):
                self.assertGreaterEqual(deviations[100][key] / deviations[200][key], 6.0)
                self.assertGreaterEqual(deviations[200][key] / deviations[400][key], 6.0)

    def test_signs_mirror(self):
        rows = landau_edge_check(RationalFlux(1, 100), num_levels=2)
        by_key = {(r.level, r.sign): r for r in rows}
        for level in range(2):
            self.assertAlmostEqual(by_key[(level, 1)].measured, -by_key[(level, -1)].measured, delta=1e-9)

    def test_too_many_levels(self):
        with self.assertRaises(ValueError):
            landau_edge_check(RationalFlux(1, 3), num_levels=3)


if __name__ == "__main__":
    unittest.main()
