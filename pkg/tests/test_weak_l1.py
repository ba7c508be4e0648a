import numpy as np
import pytest
import scipy.integrate as si
from numpy.testing import assert_allclose

from nilharmonics.group_core import abelian, heisenberg, random_step2, \
    HomogeneousNorm
from nilharmonics.kernels import KernelSpec
from nilharmonics.weak_l1 import (
    AtomicMeasure, CoveringCertificate, UpperHalfPoint, Window, U_i_profile,
    U_nu, build_covering, mu_poisson_bounds, phi_gamma, superlevel_measure,
    verify_covering, weak_l1_constant,
)

LINE = abelian(1)
LNORM = HomogeneousNorm(LINE)
HEIS = heisenberg()
HNORM = HomogeneousNorm(HEIS)


def closed_form_constant(Q, Gamma):
    # alpha * |{Phi_Gamma / a > alpha}| for the calibrated Haar measure
    val, _ = si.quad(lambda t: (t ** ((Gamma - 1.0) / (Q + Gamma)) - t) ** Q,
                     0.0, 1.0)
    return val


# -- profile and atomic measures --------------------------------------------

def test_phi_gamma_at_origin_is_a_to_minus_Q():
    for norm in (LNORM, HNORM):
        Q = float(norm.spec.Q)
        e = np.zeros((1, norm.n))
        for a in (0.5, 1.0, 2.0):
            assert_allclose(phi_gamma(norm, 1.0, e, a), a ** -Q, rtol=1e-12)


def test_phi_gamma_line_value():
    assert_allclose(phi_gamma(LNORM, 1.0, np.array([[1.0]]), 1.0),
                    0.25, rtol=1e-12)


def test_phi_gamma_scale_covariance():
    rng = np.random.default_rng(3)
    eta = rng.normal(size=(20, 3))
    for r in (0.5, 2.0, 4.0):
        lhs = phi_gamma(HNORM, 1.0, HEIS.dilate(r, eta), r * 1.3)
        rhs = r ** -float(HEIS.Q) * phi_gamma(HNORM, 1.0, eta, 1.3)
        assert_allclose(lhs, rhs, rtol=1e-12)


def test_phi_gamma_rejects_nonpositive_height():
    with pytest.raises(ValueError):
        phi_gamma(LNORM, 1.0, np.array([[1.0]]), 0.0)
    with pytest.raises(ValueError):
        UpperHalfPoint((0.0,), -1.0)


def test_atomic_measure_mass_moment_and_json():
    nu = AtomicMeasure([[0.0, 0.0, 0.0], [1.0, -1.0, 0.5]], [2.0, 3.0])
    assert nu.total_mass == 5.0
    assert 0 < nu.moment(HNORM, 1.0) < 5.0
    back = AtomicMeasure.from_json(nu.to_json())
    assert_allclose(back.xi, nu.xi)
    assert_allclose(back.w, nu.w)
    with pytest.raises(ValueError):
        AtomicMeasure([[0.0]], [-1.0])


def test_atomic_measure_translation_moves_atoms():
    nu = AtomicMeasure([[0.3, -0.2, 0.1]], [1.0])
    eta0 = np.array([0.5, 0.4, -0.1])
    moved = nu.translate(HEIS, eta0)
    assert_allclose(moved.xi[0], HEIS.multiply(eta0, nu.xi[0]))
    assert_allclose(moved.w, nu.w)


def test_U_nu_single_atom_matches_profile():
    nu = AtomicMeasure([[0.0, 0.0, 0.0]], [1.0])
    rng = np.random.default_rng(5)
    eta = rng.normal(size=(15, 3))
    for a in (0.3, 1.0):
        assert_allclose(U_nu(HEIS, HNORM, nu, 1.0, eta, a),
                        phi_gamma(HNORM, 1.0, eta, a) / a, rtol=1e-12)


def test_U_nu_line_value_and_symmetry():
    nu = AtomicMeasure([[0.0]], [1.0])
    assert_allclose(U_nu(LINE, LNORM, nu, 1.0, np.array([[1.0]]), 1.0),
                    0.25, rtol=1e-12)
    two = AtomicMeasure([[0.4], [-0.7]], [1.0, 1.0])
    swapped = AtomicMeasure([[-0.7], [0.4]], [1.0, 1.0])
    pts = np.linspace(-2, 2, 9)[:, None]
    assert_allclose(U_nu(LINE, LNORM, two, 1.0, pts, 0.8),
                    U_nu(LINE, LNORM, swapped, 1.0, pts, 0.8), rtol=1e-12)
    with pytest.raises(ValueError):
        U_nu(LINE, LNORM, nu, 1.0, pts, -1.0)


# -- superlevel measures and weak constants ----------------------------------

def test_superlevel_zero_function_and_large_alpha():
    win = Window((0.0,), (2.0,), 0.0, 2.0)
    m, _ = superlevel_measure(lambda e, a: 0.0 * e[..., 0], 0.5, win)
    assert m == 0.0
    F = lambda e, a: phi_gamma(LNORM, 1.0, e, a) / a
    m, _ = superlevel_measure(F, 1e9, win, calibration=LNORM.calibration())
    assert m == 0.0


@pytest.mark.parametrize("Gamma", [1.0, 2.0])
def test_superlevel_closed_form_line(Gamma):
    # alpha * measure = int_0^1 (t^{(Gamma-1)/(Q+Gamma)} - t)^Q dt
    oracle = closed_form_constant(1, Gamma)
    F = lambda e, a: phi_gamma(LNORM, Gamma, e, a) / a
    for alpha in (0.1, 1.0, 10.0):
        top = alpha ** (-1.0 / 2)
        win = Window((0.0,), (1.2 * top,), 0.0, 1.05 * top)
        m, _ = superlevel_measure(F, alpha, win, resolution=400,
                                  a_resolution=400,
                                  calibration=LNORM.calibration())
        assert abs(alpha * m - oracle) < 0.03 * oracle


def test_superlevel_monte_carlo_matches_grid():
    F = lambda e, a: phi_gamma(LNORM, 1.0, e, a) / a
    win = Window((0.0,), (1.2,), 0.0, 1.05)
    g, _ = superlevel_measure(F, 1.0, win, resolution=400, a_resolution=400,
                              calibration=LNORM.calibration())
    mc, bar = superlevel_measure(F, 1.0, win, estimator="monte-carlo",
                                 n_samples=200000, seed=2,
                                 calibration=LNORM.calibration())
    assert abs(mc - g) < max(bar, 0.01 * g)
    with pytest.raises(ValueError):
        superlevel_measure(F, 1.0, win, estimator="nope")


def test_superlevel_closed_form_heisenberg_monte_carlo():
    # (Q, Gamma) = (4, 1): oracle int_0^1 (1-t)^4 dt = 1/5
    oracle = closed_form_constant(4, 1.0)
    assert_allclose(oracle, 0.2, rtol=1e-10)
    F = lambda e, a: phi_gamma(HNORM, 1.0, e, a) / a
    for alpha in (0.5, 5.0):
        R = 1.05 * alpha ** (-1.0 / 5)
        win = Window((0, 0, 0), (1.1 * R, 1.1 * R, 1.2 * R * R), 0.0, R)
        m, bar = superlevel_measure(F, alpha, win, estimator="monte-carlo",
                                    n_samples=400000, seed=1,
                                    calibration=HNORM.calibration())
        assert abs(alpha * m - oracle) < 0.05 * oracle + alpha * bar


def test_weak_constant_line_with_stability():
    F = lambda e, a: phi_gamma(LNORM, 1.0, e, a) / a
    win = Window((0.0,), (4.0,), 0.0, 3.4)
    rep = weak_l1_constant(F, (0.1, 1.0, 10.0), win, resolution=300,
                           a_resolution=300,
                           calibration=LNORM.calibration())
    assert abs(rep["constant"] - 0.5) < 0.03 * 0.5
    assert rep["stable"]


def test_da_over_a_measure_fails_weak_bound():
    # against dlambda da/a the products alpha * measure blow up
    F = lambda e, a: phi_gamma(LNORM, 1.0, e, a) / a
    prods = []
    for alpha in (0.01, 0.1, 1.0, 10.0, 100.0):
        top = alpha ** (-0.5)
        win = Window((0.0,), (1.1 * top,), 1e-5, 1.05 * top)
        m, _ = superlevel_measure(F, alpha, win, resolution=500,
                                  a_resolution=1200, a_power=-1,
                                  calibration=LNORM.calibration())
        prods.append(alpha * m)
    assert all(b > a for a, b in zip(prods, prods[1:]))
    assert prods[-1] > 10.0 * prods[0]


# -- global bounds for measure Poisson integrals -----------------------------

CERT_OK = {"passed": True, "note": "precomputed certification"}


def test_mu_poisson_weak_and_sup_bounds():
    ker = KernelSpec(LINE, LNORM, "classical_abelian")
    mu = AtomicMeasure([[0.0]], [1.0])
    win = Window((0.0,), (3.0,), 0.0, 3.0)
    rep = mu_poisson_bounds(mu, ker, win, a0=1.0, certificate=CERT_OK,
                            resolution=121)
    assert np.isfinite(rep["weak"]["constant"])
    assert rep["weak"]["stable"]
    sups = rep["sup_infinity"]
    assert all(np.isfinite(s) for s in sups)
    assert rep["sup_nonincreasing"]


def test_mu_poisson_far_atom_splits_into_near_far():
    ker = KernelSpec(LINE, LNORM, "classical_abelian")
    mu = AtomicMeasure([[100.0]], [1.0])
    win = Window((0.0,), (2.0,), 0.5, 2.0)
    rep = mu_poisson_bounds(mu, ker, win, a0=1.0, certificate=CERT_OK,
                            resolution=61)
    # every window point has |xi| = 100 >= 2 |eta|: only the far piece
    assert rep["pieces"]["middle"] == 0.0
    assert rep["pieces"]["near"] == 0.0
    assert rep["pieces"]["far"] > 0.0


def test_mu_poisson_refuses_uncertified_kernel():
    ker = KernelSpec(LINE, LNORM, "classical_abelian")
    mu = AtomicMeasure([[0.0]], [1.0])
    win = Window((0.0,), (2.0,), 0.0, 2.0)
    with pytest.raises(ValueError):
        mu_poisson_bounds(mu, ker, win, a0=1.0,
                          certificate={"passed": False})


# -- the dyadic covering -----------------------------------------------------

NU_LINE = AtomicMeasure([[0.0]], [1.0])
NU_HEIS = AtomicMeasure([[0.0, 0.0, 0.0], [2.5, 0.0, 0.3]], [1.0, 1.0])


@pytest.fixture(scope="module")
def line_cover():
    cert = build_covering(LINE, LNORM, NU_LINE, 1.0, 0.1, 2, 6)
    rep = verify_covering(cert, LINE, LNORM, NU_LINE, resolution=161)
    return cert, rep


@pytest.fixture(scope="module")
def heis_cover():
    cert = build_covering(HEIS, HNORM, NU_HEIS, 1.0, 20.0, 2, 4)
    rep = verify_covering(cert, HEIS, HNORM, NU_HEIS, resolution=35)
    return cert, rep


def test_empty_measure_gives_empty_covering():
    nu = AtomicMeasure(np.zeros((0, 1)), np.zeros(0))
    cert = build_covering(LINE, LNORM, nu, 1.0, 0.5, 2, 4)
    assert cert.counts["authorized"] == 0
    rep = verify_covering(cert, LINE, LNORM, nu)
    assert rep["C_i"] == 0.0 and rep["C_iii"] == 0.0
    assert np.all(U_i_profile(cert, LINE, LNORM, np.zeros(1)) == 0.0)


def test_covering_depth_underflow_rejected():
    with pytest.raises(ValueError):
        build_covering(LINE, LNORM, NU_LINE, 1.0, 0.1, 0, 40)


def test_covering_needs_a_group_lattice():
    spec = random_step2(2, 1, seed=0)
    norm = HomogeneousNorm(spec)
    nu = AtomicMeasure([[0.0, 0.0, 0.0]], [1.0])
    with pytest.raises(ValueError):
        build_covering(spec, norm, nu, 1.0, 0.5, 1, 2)


def test_covering_line_properties(line_cover):
    cert, rep = line_cover
    assert cert.counts["authorized"] >= 1
    assert np.isfinite(rep["C_i"]) and rep["C_i"] > 0
    assert np.isfinite(rep["C_ii"]) and np.isfinite(rep["C_iii"])
    assert rep["chain_holds"]
    assert rep["disjoint"]
    assert rep["forbidden_ratio_measured"] <= rep["forbidden_ratio_analytic"]


def test_covering_line_depth_stable(line_cover):
    cert, rep = line_cover
    cert2 = build_covering(LINE, LNORM, NU_LINE, 1.0, 0.1, 2, 8)
    rep2 = verify_covering(cert2, LINE, LNORM, NU_LINE, resolution=161)
    for key in ("C_i", "C_ii", "C_iii"):
        assert abs(rep2[key] - rep[key]) <= 0.10 * abs(rep[key])


def test_covering_heisenberg_properties(heis_cover):
    cert, rep = heis_cover
    assert cert.counts["authorized"] == 2  # one piece per separated atom
    assert np.isfinite(rep["C_i"]) and rep["chain_holds"] and rep["disjoint"]
    assert rep["forbidden_ratio_measured"] <= rep["forbidden_ratio_analytic"]
    assert cert.kappa_measured <= len(NU_HEIS.w) * cert.kappa_design


def test_covering_heisenberg_depth_stable(heis_cover):
    cert, rep = heis_cover
    cert2 = build_covering(HEIS, HNORM, NU_HEIS, 1.0, 20.0, 2, 6)
    rep2 = verify_covering(cert2, HEIS, HNORM, NU_HEIS, resolution=35)
    for key in ("C_i", "C_ii", "C_iii"):
        assert abs(rep2[key] - rep[key]) <= 0.10 * abs(rep[key])


def test_covering_translation_covariance(heis_cover):
    cert, rep = heis_cover
    eta0 = np.array([0.4, -0.3, 0.1])
    moved = NU_HEIS.translate(HEIS, eta0)
    cert2 = build_covering(HEIS, HNORM, moved, 1.0, 20.0, 2, 4)
    rep2 = verify_covering(cert2, HEIS, HNORM, moved, resolution=35)
    assert cert2.counts == cert.counts
    for key in ("C_ii", "C_iii"):
        assert abs(rep2[key] - rep[key]) <= 0.10 * abs(rep[key])
    assert abs(rep2["C_i"] - rep["C_i"]) <= 0.10 * rep["C_i"]


def test_covering_concentrates_near_single_atom():
    nu = AtomicMeasure([[0.5]], [1.0])
    cert = build_covering(LINE, LNORM, nu, 1.0, 2.0, 1, 5)
    assert cert.counts["authorized"] >= 1
    for p in cert.authorized:
        assert LNORM(LINE.multiply(-p.center, nu.xi[0])) <= 2 * 2.0 ** 1


def test_U_i_profile_bounded_and_decaying(line_cover):
    cert, rep = line_cover
    near = [U_i_profile(cert, LINE, LNORM, np.array([x]))
            for x in (-1.0, 0.0, 1.0)]
    C2 = max(float(np.max(u)) for u in near)
    assert C2 <= rep["C_iii"] + 1e-12
    # decay clause: dist(eta, T_i) > 2^{i0+p} forces U_i <= C2 2^{-(p+i)G}
    for p_exp in (2, 4):
        far = U_i_profile(cert, LINE, LNORM,
                          np.array([2.0 ** (cert.i0 + p_exp) * 2.0]))
        for i, u in enumerate(far):
            assert u <= C2 * 2.0 ** (-(p_exp + i) * cert.Gamma)
    # summability over scales at every probe
    for u in near:
        assert float(np.sum(u)) <= rep["C_iii"] + 1e-12
