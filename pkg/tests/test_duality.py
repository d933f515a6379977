from unittest import TestCase

import numpy as np

from parea.bregman import SolverConfig, energy, solve
from parea.duality import DualFields, extract, extract_from_bregman, feasibility_residuals
from parea.enums import Layout
from parea.errors import PAreaErrorInvalidArgument, PAreaErrorStructureMismatch
from parea.grid import GridSpec, ScalarField, norms
from parea.problems import ProblemFactory, example_paper, zero_problem


def gap_band(problem, e, tol=1e-7):
    return 5 * (problem.spec.h + tol) * (1 + abs(e))


class TestExtract(TestCase):
    def test_exact_fields(self):
        p = example_paper(GridSpec.unit_square(49))
        dual = extract(p, p.exact_u)
        self.assertFalse(dual.characteristic_mask.any())
        self.assertEqual(dual.mask_fraction, 0.0)
        np.testing.assert_allclose(dual.sigma.values, 1.0, atol=1e-12)
        np.testing.assert_allclose(dual.J.px, p.exact_J.px, atol=1e-12)
        np.testing.assert_allclose(dual.J.py, p.exact_J.py, atol=1e-12)
        self.assertIs(dual.u, p.exact_u)

    def test_full_mask(self):
        p = zero_problem(GridSpec.unit_square(6))
        dual = extract(p, p.exact_u)
        self.assertTrue(dual.characteristic_mask.all())
        self.assertEqual(dual.mask_fraction, 1.0)
        self.assertEqual(norms(dual.J).linf, 0.0)
        self.assertEqual(norms(dual.sigma).linf, 0.0)
        self.assertFalse(dual.off_mask.any())

    def test_invalid(self):
        p = zero_problem(GridSpec.unit_square(6))
        with self.assertRaises(PAreaErrorInvalidArgument):
            extract(p, p.exact_u, eps_char=0.0)
        with self.assertRaises(PAreaErrorStructureMismatch):
            extract(p, ScalarField.zeros(GridSpec.unit_square(7)))


class TestFeasibility(TestCase):
    def test_exact_fields(self):
        p = example_paper(GridSpec.unit_square(99))
        residuals = feasibility_residuals(p, extract(p, p.exact_u))
        self.assertLessEqual(residuals.div_residual_l1, p.spec.h)
        self.assertLessEqual(residuals.magnitude_violation_linf, 1e-12)
        self.assertLessEqual(abs(residuals.gap), gap_band(p, residuals.energy))
        self.assertAlmostEqual(residuals.dual_value, 79 / 36, delta=0.05)

    def test_needs_primal(self):
        p = zero_problem(GridSpec.unit_square(4))
        dual = extract(p, p.exact_u)
        bare = DualFields(J=dual.J, sigma=dual.sigma, characteristic_mask=dual.characteristic_mask)
        with self.assertRaises(PAreaErrorInvalidArgument):
            feasibility_residuals(p, bare)

    def test_solved_problems(self):
        factory = ProblemFactory(49)
        config = SolverConfig(tol=1e-9, max_iter=20_000)
        for p in (factory.example_paper(), factory.radial(), factory.uniform_flow()):
            result = solve(p, config)
            self.assertTrue(result.converged)
            for label, dual in (("primal", extract(p, result.u)), ("bregman", extract_from_bregman(p, result))):
                with self.subTest(problem=p.name, dual=label):
                    residuals = feasibility_residuals(p, dual)
                    self.assertLessEqual(residuals.div_residual_l1, 5 * p.spec.h)
                    self.assertLessEqual(residuals.magnitude_violation_linf, 1e-9 * p.M)
                    self.assertLessEqual(abs(residuals.gap), gap_band(p, residuals.energy, config.tol))
                    self.assertAlmostEqual(residuals.energy, energy(p, result.u))


class TestBregmanDual(TestCase):
    def test_zero_problem(self):
        p = zero_problem(GridSpec.unit_square(8))
        dual = extract_from_bregman(p, solve(p))
        self.assertEqual(dual.J.magnitude().max(), 0.0)
        self.assertTrue(dual.characteristic_mask.all())
        self.assertEqual(dual.J.layout, Layout.FLUX)
