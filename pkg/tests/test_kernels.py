import numpy as np
import pytest
from numpy.testing import assert_allclose

from nilharmonics.group_core import HomogeneousNorm, abelian, heisenberg
from nilharmonics.kernels import (
    KernelSpec, certify_RGamma, dilate_kernel, dilated_field, eval_kernel,
    harmonicity_residual, scale_derivative,
)
from nilharmonics.quadrature import Grid, convolve, haar_integrate


def classical(n=1):
    G = abelian(n)
    return KernelSpec(G, HomogeneousNorm(G), "classical_abelian")


def heis_kernel(Gamma=1.0):
    G = heisenberg()
    return KernelSpec(G, HomogeneousNorm(G), "model_power", Gamma=Gamma)


class TestEval:
    def test_r1_at_zero(self):
        # unit mass forces P(0) = 1/pi
        assert_allclose(eval_kernel(classical(), np.zeros(1)), 1.0 / np.pi)

    def test_r1_unit_mass(self):
        P = classical()
        # truncation tail is 2/(pi R), so R must dominate the tolerance
        grid = Grid([0.0], [1e6], 4001, grading=14.0)
        assert_allclose(haar_integrate(P, grid), 1.0, atol=1e-4)

    def test_model_power_at_zero(self):
        assert_allclose(heis_kernel()(np.zeros(3)), 1.0)

    def test_positivity(self):
        rng = np.random.default_rng(0)
        pts = rng.uniform(-50, 50, (200, 3))
        assert np.all(heis_kernel()(pts) > 0)
        assert np.all(classical(1)(rng.uniform(-50, 50, (200, 1))) > 0)

    @pytest.mark.parametrize("kernel,QG", [("r1", 2.0), ("heis", 5.0)])
    def test_comparability_constant(self, kernel, QG):
        k = classical() if kernel == "r1" else heis_kernel()
        w = k.weight()
        pts = np.concatenate([
            np.zeros((1, k.spec.n)),
            np.random.default_rng(1).uniform(-100, 100, (500, k.spec.n))])
        ratio = k(pts) / w(pts)
        C = 4.0 ** QG
        assert np.all(ratio <= C) and np.all(ratio >= 1.0 / C)

    def test_family_validation(self):
        G = heisenberg()
        with pytest.raises(ValueError):
            KernelSpec(G, HomogeneousNorm(G), "classical_abelian")
        with pytest.raises(ValueError):
            KernelSpec(G, HomogeneousNorm(G), "model_power", Gamma=-1.0)


class TestDilate:
    def test_identity_scale(self):
        P = classical()
        x = np.linspace(-3, 3, 11)[:, None]
        assert_allclose(dilate_kernel(P, 1.0, x), P(x))

    def test_r1_closed_form(self):
        # [DERIVED] a^{-1} P(x/a) = a / (pi (a^2 + x^2))
        P = classical()
        x = np.linspace(-5, 5, 21)[:, None]
        for a in [0.5, 2.0]:
            want = a / (np.pi * (a ** 2 + x[:, 0] ** 2))
            assert_allclose(dilate_kernel(P, a, x), want, rtol=1e-12)

    @pytest.mark.parametrize("a", [0.25, 1.0, 4.0])
    def test_mass_preserved(self, a):
        P = classical()
        grid = Grid([0.0], [1e6], 8001, grading=14.0)
        m1 = haar_integrate(lambda p: dilate_kernel(P, a, p), grid)
        assert_allclose(m1, 1.0, atol=1e-5)

    def test_homogeneity_exact(self):
        # P_{ab}(delta_a eta) = a^{-Q} P_b(eta)
        P = heis_kernel()
        G = P.spec
        rng = np.random.default_rng(2)
        eta = rng.uniform(-2, 2, (8, 3))
        for a, b in [(2.0, 1.0), (0.5, 3.0)]:
            lhs = dilate_kernel(P, a * b, G.dilate(a, eta))
            rhs = a ** -4.0 * dilate_kernel(P, b, eta)
            assert_allclose(lhs, rhs, rtol=1e-13)

    def test_nonpositive_rejected(self):
        with pytest.raises(ValueError):
            dilate_kernel(classical(), 0.0, np.zeros(1))

    def test_dilated_field_matches(self):
        P = heis_kernel()
        rng = np.random.default_rng(3)
        eta = rng.uniform(-3, 3, (6, 3))
        f = dilated_field(P, 0.7)
        assert_allclose(f.eval(eta), dilate_kernel(P, 0.7, eta), rtol=1e-12)


class TestScaleDerivative:
    def test_r1_oracle(self):
        # [DERIVED] a d/da of a/(pi(a^2+x^2)) is a(x^2-a^2)/(pi(a^2+x^2)^2)
        P = classical()
        x = np.linspace(-4, 4, 17)[:, None]
        for a in [0.5, 1.0, 3.0]:
            got = scale_derivative(P, 1, a, x)
            want = a * (x[:, 0] ** 2 - a ** 2) \
                / (np.pi * (a ** 2 + x[:, 0] ** 2) ** 2)
            assert_allclose(got, want, atol=1e-9)

    def test_order_limit(self):
        with pytest.raises(ValueError):
            scale_derivative(classical(), 3, 1.0, np.zeros(1))


class TestCertify:
    def test_r1_passes(self):
        rep = certify_RGamma(classical(), radius=200.0)
        assert rep["passed"], rep

    def test_r1_first_derivative_oracle(self):
        # |P'| = 2|x|/(pi (1+x^2)^2) against (1+Phi(|x|))^{-3}
        P = classical()
        from nilharmonics.calculus import OperatorWord
        d = OperatorWord(P.spec, "X", (1,)).apply_symbolic(P.field)
        x = np.linspace(-50, 50, 501)[:, None]
        oracle = 2 * np.abs(x[:, 0]) / (np.pi * (1 + x[:, 0] ** 2) ** 2)
        assert_allclose(d.eval(x), -np.sign(x[:, 0]) * oracle, atol=1e-12)
        ratio = oracle / P.weight(extra=1.0)(x)
        assert np.max(ratio) < 20.0

    def test_heisenberg_model_power_passes(self):
        rep = certify_RGamma(heis_kernel(), radius=2000.0, n_dirs=16,
                             n_radii=30)
        assert rep["passed"], rep
        assert "derivative_X_(0, 0, 1)" in rep["estimates"]
        for name, est in rep["estimates"].items():
            assert np.isfinite(est["sup_ratio"]), name

    def test_gamma_two(self):
        rep = certify_RGamma(heis_kernel(Gamma=2.0), radius=1e5,
                             n_dirs=16, n_radii=25)
        assert rep["passed"], rep


class TestHarmonicity:
    def test_r1_at_origin(self):
        res = harmonicity_residual(classical(), np.zeros((1, 1)),
                                   np.array([1.0]))
        assert res < 1e-8

    def test_r2_random(self):
        rng = np.random.default_rng(4)
        pts = rng.uniform(-3, 3, (20, 2))
        res = harmonicity_residual(classical(2), pts,
                                   np.array([0.5, 1.0, 2.0]))
        assert res < 1e-6

    def test_model_power_refused(self):
        with pytest.raises(ValueError):
            harmonicity_residual(heis_kernel(), np.zeros((1, 3)),
                                 np.array([1.0]))

    def test_boundary_grid_rejected(self):
        with pytest.raises(ValueError):
            harmonicity_residual(classical(), np.zeros((1, 1)),
                                 np.array([0.0, 1.0]))


class TestSemigroup:
    @pytest.mark.parametrize("a,b", [(1.0, 1.0), (0.5, 0.5), (1.0, 2.0)])
    def test_poisson_semigroup(self, a, b):
        P = classical()
        G = P.spec
        grid = Grid([0.0], [500.0], 2001, grading=5.0)
        xs = np.linspace(-4, 4, 17)[:, None]
        got = convolve(G, lambda p: dilate_kernel(P, a, p),
                       lambda p: dilate_kernel(P, b, p), xs, grid)
        want = dilate_kernel(P, a + b, xs)
        assert np.max(np.abs(got - want)) < 1e-3
