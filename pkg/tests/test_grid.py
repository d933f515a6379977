from unittest import TestCase

import numpy as np

from parea.enums import Layout
from parea.errors import PAreaErrorInvalidArgument, PAreaErrorStructureMismatch
from parea.grid import (GridSpec, ScalarField, VectorField, curl, divergence, gradient, inner_product,
                        laplacian, norms)
from parea.poisson import dense_laplacian


def random_grid(rng, max_n=20):
    nx, ny = (int(k) for k in rng.integers(1, max_n + 1, size=2))
    h = float(rng.uniform(0.02, 0.5))
    x0, y0 = (float(c) for c in rng.uniform(-1, 1, size=2))
    return GridSpec(nx, ny, x0, y0, x0 + (nx + 1) * h, y0 + (ny + 1) * h)


class TestGridSpec(TestCase):
    def test_unit_square(self):
        spec = GridSpec.unit_square(99)
        self.assertAlmostEqual(spec.h, 0.01, places=15)
        self.assertEqual(spec.shape(Layout.NODE), (99, 99))
        self.assertEqual(spec.shape(Layout.FLUX), (100, 100))
        self.assertAlmostEqual(spec.quadrature_area(Layout.FLUX), 1.0, places=12)

    def test_invalid(self):
        with self.assertRaises(PAreaErrorInvalidArgument):
            GridSpec(0, 3)
        with self.assertRaises(PAreaErrorInvalidArgument):
            GridSpec(3, 3, 1.0, 0.0, 0.0, 1.0)
        with self.assertRaises(PAreaErrorInvalidArgument):
            GridSpec(3, 4)

    def test_coordinates(self):
        spec = GridSpec.unit_square(3)
        X, Y = spec.coordinates(Layout.NODE)
        self.assertEqual(X[0, 2], 0.25)
        self.assertEqual(Y[0, 2], 0.75)
        X, Y = spec.coordinates(Layout.FLUX)
        self.assertEqual(X[0, 0], 0.0)
        self.assertEqual(X[3, 0], 0.75)


class TestFields(TestCase):
    def test_read_only(self):
        f = ScalarField.zeros(GridSpec.unit_square(4))
        with self.assertRaises(ValueError):
            f.values[0, 0] = 1.0

    def test_shape_mismatch(self):
        spec = GridSpec.unit_square(4)
        with self.assertRaises(PAreaErrorStructureMismatch):
            ScalarField(spec, np.zeros((5, 5)), Layout.NODE)
        with self.assertRaises(PAreaErrorStructureMismatch):
            VectorField(spec, np.zeros((4, 4)), np.zeros((4, 4)))
        with self.assertRaises(PAreaErrorStructureMismatch):
            ScalarField.zeros(spec) + ScalarField.zeros(GridSpec.unit_square(5))

    def test_non_finite(self):
        values = np.zeros((2, 2))
        values[1, 1] = np.nan
        with self.assertRaises(PAreaErrorInvalidArgument):
            ScalarField(GridSpec.unit_square(2), values)

    def test_norms(self):
        spec = GridSpec.unit_square(99)
        one = ScalarField.full(spec, 1.0)
        result = norms(one)
        self.assertAlmostEqual(result.l1, 0.9801, places=12)
        self.assertAlmostEqual(result.l2, 0.99, places=12)
        self.assertEqual(result.linf, 1.0)
        v = VectorField(spec, np.full((100, 100), 3.0), np.full((100, 100), 4.0))
        self.assertAlmostEqual(norms(v).linf, 5.0)

    def test_inner_product_kinds(self):
        spec = GridSpec.unit_square(3)
        with self.assertRaises(PAreaErrorStructureMismatch):
            inner_product(ScalarField.zeros(spec, Layout.FLUX), VectorField.zeros(spec))
        with self.assertRaises(PAreaErrorStructureMismatch):
            inner_product(ScalarField.zeros(spec, Layout.FLUX), ScalarField.zeros(spec, Layout.NODE))


class TestOperators(TestCase):
    def test_single_node_gradient(self):
        c = 0.7
        spec = GridSpec.unit_square(1)
        g = gradient(ScalarField(spec, [[c]]))
        self.assertAlmostEqual(g.at_node(0, 0)[0], -2 * c)
        self.assertAlmostEqual(g.at_node(0, 0)[1], -2 * c)
        self.assertAlmostEqual(g.px[0, 1], 2 * c)

    def test_adjointness(self):
        rng = np.random.default_rng(7)
        for _ in range(120):
            spec = random_grid(rng)
            u = ScalarField(spec, rng.standard_normal(spec.shape(Layout.NODE)))
            shape = spec.shape(Layout.FLUX)
            p = VectorField(spec, rng.standard_normal(shape), rng.standard_normal(shape))
            g = gradient(u)
            left = inner_product(g, p)
            right = inner_product(u, divergence(p))
            scale = spec.h ** 2 * (np.sum(np.abs(g.px * p.px) + np.abs(g.py * p.py))
                                   + np.sum(np.abs(u.values * divergence(p).values)))
            self.assertLessEqual(abs(left + right), 1e-12 * scale)

    def test_laplacian_is_five_point(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            spec = random_grid(rng, max_n=12)
            u = ScalarField(spec, rng.standard_normal(spec.shape(Layout.NODE)))
            expected = dense_laplacian(spec) @ u.values.ravel()
            np.testing.assert_allclose(laplacian(u).values.ravel(), expected,
                                       rtol=1e-10, atol=1e-10 * np.abs(expected).max())

    def test_curl_of_gradient_vanishes(self):
        rng = np.random.default_rng(11)
        spec = GridSpec.unit_square(17)
        u = ScalarField(spec, rng.standard_normal(spec.shape()))
        self.assertLess(norms(curl(gradient(u))).linf, 1e-9)

    def test_first_order_consistency(self):
        def u(x, y):
            return np.sin(np.pi * x) * np.sin(np.pi * y)

        def grad_u(x, y):
            return (np.pi * np.cos(np.pi * x) * np.sin(np.pi * y),
                    np.pi * np.sin(np.pi * x) * np.cos(np.pi * y))

        steps, errors = [], []
        for n in (15, 31, 63, 127):
            spec = GridSpec.unit_square(n)
            g = gradient(ScalarField.from_function(spec, u))
            errors.append(norms(g - VectorField.from_function(spec, grad_u)).linf)
            steps.append(spec.h)
        order = np.polyfit(np.log(steps), np.log(errors), 1)[0]
        self.assertGreaterEqual(order, 0.9)

    def test_curl_of_rotation(self):
        spec = GridSpec.unit_square(9)
        field = VectorField.from_function(spec, lambda x, y: (-y, x))
        np.testing.assert_allclose(curl(field).values, 2.0, atol=1e-12)

    def test_arithmetic(self):
        spec = GridSpec.unit_square(4)
        a = ScalarField.full(spec, 2.0, Layout.FLUX)
        v = VectorField.from_function(spec, lambda x, y: (np.ones_like(x), x))
        w = v * a
        np.testing.assert_allclose(w.px, 2.0)
        np.testing.assert_allclose((w / a).py, v.py)
        np.testing.assert_allclose(v.dot(v).values, 1 + v.py ** 2)
        masked = v.masked(np.ones(spec.shape(Layout.FLUX), dtype=bool))
        self.assertEqual(norms(masked).linf, 0.0)
