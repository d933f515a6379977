from unittest import TestCase

import numpy as np

from parea.enums import Layout
from parea.errors import PAreaErrorInvalidArgument, PAreaErrorStructureMismatch
from parea.flags import ReportFlag
from parea.grid import GridSpec, ScalarField, VectorField, divergence, gradient, norms
from parea.problems import (ProblemFactory, ProblemSpec, bubble, example_paper, manufacture, validate_hypotheses,
                            zero_problem)


class TestProblemSpec(TestCase):
    spec = GridSpec.unit_square(5)

    def test_bounds_from_weight(self):
        p = zero_problem(self.spec)
        self.assertEqual((p.m, p.M), (1.0, 1.0))
        self.assertEqual(p.k1, 0.0)

    def test_weight_outside_bounds(self):
        p = zero_problem(self.spec)
        with self.assertRaises(PAreaErrorInvalidArgument):
            ProblemSpec(self.spec, p.a, p.F, p.H, m=2.0)
        with self.assertRaises(PAreaErrorInvalidArgument):
            ProblemSpec(self.spec, ScalarField.zeros(self.spec, Layout.FLUX), p.F, p.H)

    def test_layouts(self):
        p = zero_problem(self.spec)
        with self.assertRaises(PAreaErrorStructureMismatch):
            ProblemSpec(self.spec, ScalarField.full(self.spec, 1.0, Layout.NODE), p.F, p.H)
        with self.assertRaises(PAreaErrorStructureMismatch):
            ProblemSpec(self.spec, p.a, p.F, ScalarField.zeros(self.spec, Layout.FLUX))
        with self.assertRaises(PAreaErrorStructureMismatch):
            ProblemSpec(self.spec, p.a, VectorField.zeros(GridSpec.unit_square(6)), p.H)

    def test_with_H(self):
        p = example_paper(self.spec)
        q = p.with_H(ScalarField.full(self.spec, 2.0))
        self.assertIsNone(q.exact_u)
        self.assertIsNone(q.exact_J)
        self.assertIs(q.F, p.F)
        self.assertEqual(q.name, "example-4.1~")


class TestExample(TestCase):
    spec = GridSpec.unit_square(24)

    def test_fields(self):
        p = example_paper(self.spec)
        X, Y = self.spec.coordinates(Layout.FLUX)
        np.testing.assert_allclose(p.a.values, np.sqrt(1 + (X + Y) ** 2), rtol=1e-14)
        np.testing.assert_allclose(p.exact_J.px, 1.0, rtol=1e-14)
        np.testing.assert_allclose(p.exact_J.py, X + Y, atol=1e-14)
        np.testing.assert_array_equal(p.H.values, 1.0)
        self.assertEqual(p.m, 1.0)
        self.assertFalse(p.is_conservative)

    def test_consistent_construction(self):
        p = example_paper(self.spec)
        s = gradient(p.exact_u) + p.F
        X, Y = self.spec.coordinates(Layout.FLUX)
        np.testing.assert_allclose(s.px, 1.0, atol=1e-12)
        np.testing.assert_allclose(s.py, X + Y, atol=1e-12)

    def test_closed_form_construction(self):
        consistent = example_paper(self.spec)
        closed = example_paper(self.spec, consistent=False)
        self.assertLess(norms(consistent.F - closed.F).linf, 2 * self.spec.h)
        self.assertGreater(norms(consistent.F - closed.F).linf, 0.0)

    def test_same_as_generic_builder(self):
        p = example_paper(self.spec)
        q = manufacture(self.spec, lambda x, y: x * y * (1 - x) * (1 - y), lambda x, y: (np.ones_like(x), x + y))
        np.testing.assert_allclose(q.a.values, p.a.values, atol=1e-12)
        np.testing.assert_allclose(q.F.px, p.F.px, atol=1e-12)
        np.testing.assert_allclose(q.F.py, p.F.py, atol=1e-12)
        np.testing.assert_allclose(q.H.values, 1.0, atol=1e-9)

    def test_unit_square_only(self):
        with self.assertRaises(PAreaErrorInvalidArgument):
            example_paper(GridSpec.square(9, 1.0, 2.0))


class TestManufacture(TestCase):
    spec = GridSpec.unit_square(9)

    def test_bubble(self):
        b = bubble(GridSpec.square(4, 1.0, 2.0))
        x = np.array([1.0, 2.0, 1.5, 1.5])
        y = np.array([1.5, 1.5, 1.0, 2.0])
        np.testing.assert_array_equal(b(x, y), 0.0)
        self.assertAlmostEqual(float(b(np.array(1.5), np.array(1.5))), 0.0625)

    def test_boundary_trace(self):
        with self.assertRaises(PAreaErrorInvalidArgument):
            manufacture(self.spec, lambda x, y: np.ones_like(x), lambda x, y: (np.ones_like(x), y))
        p = manufacture(self.spec, lambda x, y: np.ones_like(x), lambda x, y: (np.ones_like(x), y),
                        use_bubble=True)
        self.assertIsNotNone(p.exact_u)

    def test_vanishing_direction(self):
        with self.assertRaises(PAreaErrorInvalidArgument):
            manufacture(GridSpec.unit_square(1), lambda x, y: np.zeros_like(x),
                        lambda x, y: (x - 0.5, y - 0.5))

    def test_non_positive_weight(self):
        with self.assertRaises(PAreaErrorInvalidArgument):
            manufacture(self.spec, lambda x, y: np.zeros_like(x), lambda x, y: (np.ones_like(x), y),
                        lambda x, y: -np.ones_like(x))

    def test_consistent_divergence(self):
        p = ProblemFactory(15).radial()
        np.testing.assert_allclose(divergence(p.exact_J).values, p.H.values, atol=1e-12)
        np.testing.assert_allclose(p.H.values, 2.0, atol=1e-9)
        self.assertTrue(p.is_conservative)
        self.assertEqual(p.spec.x0, 1.0)

    def test_uniform_flow(self):
        p = ProblemFactory(15).uniform_flow()
        self.assertEqual(norms(p.H).linf, 0.0)
        np.testing.assert_allclose(p.a.values, 1.0)


class TestHypotheses(TestCase):
    spec = GridSpec.unit_square(19)

    def test_example_holds(self):
        report = validate_hypotheses(example_paper(self.spec))
        self.assertTrue(report.smallness_holds)
        self.assertEqual(report.threshold, 2.0)
        self.assertEqual(report.h_sup, 1.0)
        self.assertIsNotNone(report.l1_ceiling)
        self.assertGreater(report.l1_ceiling, 0.0)
        self.assertIn(ReportFlag.NON_CONSERVATIVE, report.flags)
        self.assertAlmostEqual(report.curl_F_sup, 1.0, places=6)

    def test_violation_flagged(self):
        p = example_paper(self.spec).with_H(ScalarField.full(self.spec, 3.0))
        report = validate_hypotheses(p)
        self.assertFalse(report.smallness_holds)
        self.assertIsNone(report.l1_ceiling)
        self.assertIn(ReportFlag.HYPOTHESIS_VIOLATED, report.flags)

    def test_conservative(self):
        report = validate_hypotheses(ProblemFactory(19).radial(), c_omega=1.0)
        self.assertNotIn(ReportFlag.NON_CONSERVATIVE, report.flags)

    def test_invalid_constant(self):
        with self.assertRaises(PAreaErrorInvalidArgument):
            validate_hypotheses(zero_problem(self.spec), c_omega=0.0)


class TestFactory(TestCase):
    def test_names(self):
        factory = ProblemFactory(7)
        for name in ProblemFactory.NAMES:
            p = factory.from_name(name)
            self.assertEqual(p.name, name)
            self.assertEqual(p.spec.nx, 7)

    def test_unknown(self):
        with self.assertRaises(PAreaErrorInvalidArgument):
            ProblemFactory(7).from_name("torus")
