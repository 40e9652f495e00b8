import numpy as np
import pytest
from scipy.integrate import quad

from sbsol import (DomainSpec, ScalarField, build_grid, dirichlet_form,
                   grad_norm_sq, integrate, laplacian_apply, sample_field)
from sbsol.errors import GridMismatch, OutOfDomain


def box1d(half_width=20.0, nodes=801):
    return build_grid(DomainSpec("box", 1, (half_width,)), nodes)


def field(grid, fn):
    return ScalarField(grid, fn(grid.coords))


class TestBuildGrid:
    def test_1d_box_spacing_and_interior(self):
        g = box1d(20.0, 801)
        assert g.spacing == (0.05,)
        assert g.interior_count == 799

    def test_ball_interior_count_matches_enumeration(self):
        g = build_grid(DomainSpec("ball", 2, (1.0,)), 65)
        axis = np.linspace(-1.0, 1.0, 65)
        count = sum(1 for x in axis for y in axis if x * x + y * y < 1.0)
        assert g.interior_count == count

    def test_minimal_3d_box(self):
        g = build_grid(DomainSpec("box", 3, (1.0, 1.0, 1.0)), 8)
        assert g.interior_count == 6**3

    def test_rejects_too_few_nodes(self):
        with pytest.raises(ValueError):
            build_grid(DomainSpec("box", 1, (1.0,)), 7)

    def test_rejects_nonpositive_extent(self):
        with pytest.raises(ValueError):
            DomainSpec("box", 1, (0.0,))
        with pytest.raises(ValueError):
            DomainSpec("ball", 2, (-1.0,))

    def test_rejects_bad_dimension(self):
        with pytest.raises(ValueError):
            DomainSpec("box", 4, (1.0,) * 4)

    def test_ball_nodes_strictly_inside(self):
        g = build_grid(DomainSpec("ball", 2, (2.0,), (0.3, -0.2)), 33)
        r = np.sqrt(np.sum((g.coords - np.array([0.3, -0.2])) ** 2, axis=1))
        assert np.all(r < 2.0)


class TestDomainGeometry:
    def test_box_boundary_distance(self):
        d = DomainSpec("box", 2, (1.0, 2.0))
        assert d.boundary_distance((0.0, 0.0)) == 1.0
        assert d.boundary_distance((0.5, -1.0)) == pytest.approx(0.5)
        assert d.incenter_distance == 1.0

    def test_ball_boundary_distance(self):
        d = DomainSpec("ball", 3, (2.0,))
        assert d.boundary_distance((0.0, 0.0, 0.0)) == 2.0
        assert d.boundary_distance((1.0, 0.0, 0.0)) == pytest.approx(1.0)


class TestLaplacian:
    def test_zero_field(self):
        g = box1d()
        z = field(g, lambda x: np.zeros(len(x)))
        assert np.all(laplacian_apply(g, z).values == 0.0)

    def test_matches_dense_matrix(self):
        # independent oracle: assemble the 1D Dirichlet stencil as a matrix
        g = box1d(3.0, 14)
        n = g.interior_count
        h = g.spacing[0]
        mat = np.zeros((n, n))
        for i in range(n):
            mat[i, i] = -2.0 / h**2
            if i > 0:
                mat[i, i - 1] = 1.0 / h**2
            if i + 1 < n:
                mat[i, i + 1] = 1.0 / h**2
        rng = np.random.default_rng(7)
        f = ScalarField(g, rng.standard_normal(n))
        np.testing.assert_allclose(laplacian_apply(g, f).values,
                                   mat @ f.values, atol=1e-12)

    def test_discrete_eigenfield(self):
        # sine vanishing at both walls is an exact discrete eigenvector
        g = box1d(20.0, 801)
        L = 40.0
        h = g.spacing[0]
        x = g.coords[:, 0]
        f = ScalarField(g, np.sin(np.pi * (x + 20.0) / L))
        lam = -(2.0 / h**2) * (1.0 - np.cos(np.pi * h / L))
        np.testing.assert_allclose(laplacian_apply(g, f).values,
                                   lam * f.values, atol=1e-12)

    def test_constant_field_boundary_layer(self):
        g = build_grid(DomainSpec("box", 2, (1.0, 1.0)), 9)
        h = g.spacing[0]
        ones = field(g, lambda x: np.ones(len(x)))
        lap = g.embed(laplacian_apply(g, ones).values)
        inner = lap[2:-2, 2:-2]
        assert np.allclose(inner, 0.0)
        # one boundary face adjacent
        assert lap[1, 2] == pytest.approx(-1.0 / h**2)
        # corner node touches two faces
        assert lap[1, 1] == pytest.approx(-2.0 / h**2)

    def test_grid_mismatch(self):
        g, other = box1d(), box1d(nodes=401)
        f = field(other, lambda x: np.ones(len(x)))
        with pytest.raises(GridMismatch):
            laplacian_apply(g, f)


class TestIntegrate:
    def test_unit_field_interior_measure(self):
        g = box1d(20.0, 801)
        ones = field(g, lambda x: np.ones(len(x)))
        assert integrate(g, ones) == pytest.approx(39.95)

    def test_sech_squared(self):
        # analytic antiderivative 2*tanh gives 4 over the whole line
        g = box1d(20.0, 801)
        f = field(g, lambda x: 2.0 / np.cosh(x[:, 0]) ** 2)
        assert integrate(g, f) == pytest.approx(4.0, abs=1e-6)

    def test_zero(self):
        g = box1d()
        assert integrate(g, field(g, lambda x: np.zeros(len(x)))) == 0.0


class TestGradNormSq:
    def test_zero(self):
        g = box1d()
        assert grad_norm_sq(g, field(g, lambda x: np.zeros(len(x)))) == 0.0

    def test_summation_by_parts_random(self):
        rng = np.random.default_rng(3)
        for dom, nodes in [(DomainSpec("box", 1, (5.0,)), 64),
                           (DomainSpec("box", 2, (2.0, 3.0)), 17),
                           (DomainSpec("ball", 2, (2.0,)), 21),
                           (DomainSpec("box", 3, (1.0, 1.0, 1.0)), 9)]:
            g = build_grid(dom, nodes)
            f = ScalarField(g, rng.standard_normal(g.interior_count))
            lhs = grad_norm_sq(g, f)
            rhs = -integrate(g, f * laplacian_apply(g, f))
            assert abs(lhs - rhs) <= 1e-12 * max(abs(lhs), 1.0)

    def test_sech_dirichlet_energy(self):
        # integral of 2 sech^2 tanh^2 = 4/3; needs h <= 0.025 for 1e-4
        g = box1d(20.0, 2001)
        f = field(g, lambda x: np.sqrt(2.0) / np.cosh(x[:, 0]))
        assert grad_norm_sq(g, f) == pytest.approx(4.0 / 3.0, abs=1e-4)

    def test_laplacian_symmetry(self):
        rng = np.random.default_rng(11)
        g = build_grid(DomainSpec("ball", 2, (1.5,)), 19)
        f = ScalarField(g, rng.standard_normal(g.interior_count))
        w = ScalarField(g, rng.standard_normal(g.interior_count))
        a = integrate(g, f * laplacian_apply(g, w))
        b = integrate(g, w * laplacian_apply(g, f))
        assert a == pytest.approx(b, rel=1e-12, abs=1e-12)
        # and the bilinear form agrees with -int f lap w
        assert dirichlet_form(g, f, w) == pytest.approx(-a, rel=1e-12)


class TestRefinement:
    def test_integrate_first_order_or_better(self):
        # nonzero boundary values make the rectangle rule exactly first order
        fn = lambda x: np.exp(-((x[:, 0] / 3.0) ** 2))
        exact = quad(lambda x: np.exp(-((x / 3.0) ** 2)), -6.0, 6.0,
                     epsabs=1e-13)[0]
        errs = []
        for nodes in (121, 241, 481):
            g = box1d(6.0, nodes)
            errs.append(abs(integrate(g, field(g, fn)) - exact))
        assert errs[1] <= 0.6 * errs[0]
        assert errs[2] <= 0.6 * errs[1]

    def test_grad_norm_second_order(self):
        fn = lambda x: np.exp(-(x[:, 0] ** 2))
        exact = np.sqrt(np.pi / 2.0)  # integral of 4 x^2 e^{-2x^2}
        errs = []
        for nodes in (161, 321, 641):
            g = box1d(8.0, nodes)
            errs.append(abs(grad_norm_sq(g, field(g, fn)) - exact))
        assert errs[1] <= 0.35 * errs[0]
        assert errs[2] <= 0.35 * errs[1]


class TestScalarField:
    def test_rejects_wrong_length(self):
        g = box1d(5.0, 11)
        with pytest.raises(ValueError):
            ScalarField(g, np.zeros(g.interior_count + 1))

    def test_rejects_nonfinite(self):
        g = box1d(5.0, 11)
        bad = np.zeros(g.interior_count)
        bad[0] = np.nan
        with pytest.raises(ValueError):
            ScalarField(g, bad)

    def test_immutable(self):
        g = box1d(5.0, 11)
        f = ScalarField(g, np.zeros(g.interior_count))
        with pytest.raises(ValueError):
            f.values[0] = 1.0


class TestSampleField:
    def test_linear_function_exact(self):
        g = build_grid(DomainSpec("box", 2, (2.0, 2.0)), 33)
        f = field(g, lambda x: 1.0 + 0.5 * x[:, 0] - 0.25 * x[:, 1])
        pts = np.array([[0.3, 0.4], [-1.0, 0.7]])
        np.testing.assert_allclose(sample_field(g, f, pts),
                                   1.0 + 0.5 * pts[:, 0] - 0.25 * pts[:, 1],
                                   rtol=1e-12)

    def test_outside_bounding_box(self):
        g = box1d(5.0, 11)
        f = field(g, lambda x: np.ones(len(x)))
        with pytest.raises(OutOfDomain):
            sample_field(g, f, [[5.5]])
