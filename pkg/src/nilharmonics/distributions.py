"""Weighted summable distributions and their Poisson extensions.

A distribution here is stored in the representation

    T = omega_mu * sum_alpha X^alpha f_alpha,        f_alpha in L^1,

with mu = Q + Gamma matching the kernel family in use.  Everything the
extension theory needs — pairings, the normal form with the weight moved
inside the derivatives, the concrete convolution T * P_a, weighted norms of
its invariant derivatives, and boundary convergence tables — reduces to
integrals of the sampled densities against exact symbolic derivatives of
the weight and of the dilated kernel.
"""

from __future__ import annotations

import numpy as np
import sympy

from .calculus import OperatorWord, build_field, leibniz_tilde_coeff
from .group_core import GroupSpec, HomogeneousNorm
from .kernels import KernelSpec, dilated_field
from .polynomials import Polynomial, Profile, SmoothField
from .quadrature import Grid, check_map, convolve


def weight_field(norm: HomogeneousNorm, mu):
    """omega_mu = (1 + Phi(|eta|))^mu as a SmoothField over the gauge
    polynomial, with the quintic bridge written piecewise in u = N(eta);
    invariant derivatives of the weight are then exact."""
    M = norm.M
    u = sympy.Symbol("u")
    x = u ** sympy.Rational(1, 2 * M)
    v = x - 1
    bridge = 1 + 6 * v ** 3 - 8 * v ** 4 + 3 * v ** 5
    mu_s = sympy.nsimplify(mu, rational=True)
    expr = sympy.Piecewise(
        (sympy.Integer(2) ** mu_s, u <= 1),
        ((1 + bridge) ** mu_s, u < sympy.Integer(2) ** (2 * M)),
        ((1 + x) ** mu_s, True))
    prof = Profile(expr, name=f"omega({mu})")
    return SmoothField(norm.gauge_polynomial(), prof)


def flat_top_profile():
    """C^2 profile equal to 1 for u <= 1, gliding to 0 on [1, 2] along the
    same quintic used by the weight bridge; paired with the gauge
    polynomial it gives a test function equal to 1 on the unit ball."""
    u = sympy.Symbol("u")
    v = u - 1
    expr = sympy.Piecewise(
        (1, u <= 1),
        (1 - (6 * v ** 3 - 8 * v ** 4 + 3 * v ** 5), u < 2),
        (0, True))
    return Profile(expr, support_cap=2.0, name="flat_top")


def scale_derivative_field(kernel: KernelSpec, a):
    """(a d/da) P_a as an exact SmoothField: differentiating
    a^{-Q} P(delta_{1/a} eta) in log a gives the dilate of
    -Q P - sum_k d_k theta_k (d_k P)."""
    spec = kernel.spec
    G = kernel.field.scale(-float(spec.Q))
    for k, d in enumerate(spec.weights):
        ek = tuple(int(j == k) for j in range(spec.n))
        G = G + kernel.field.diff(k).mul_poly(Polynomial(spec.n, {ek: -d}))
    f = G.dilate_arg(1.0 / float(a), spec.weights)
    return f.mul_poly(Polynomial.constant(spec.n,
                                          float(a) ** -float(spec.Q)))


def sub_multi_indices(alpha):
    out = [()]
    for a in alpha:
        out = [t + (i,) for t in out for i in range(a + 1)]
    return out


class TestFunction:
    """Smooth test function with a decay-class tag:
    'schwartz-like', 'B' (bounded with bounded derivatives), or 'Bdot'
    (additionally vanishing at infinity).  Tag claims are certified by
    sampling, with stability under doubling the sample radius."""

    __test__ = False  # keep pytest from collecting this as a test class

    def __init__(self, spec: GroupSpec, func, tag="schwartz-like"):
        if tag not in ("schwartz-like", "B", "Bdot"):
            raise ValueError(f"unknown tag {tag!r}")
        self.spec, self.func, self.tag = spec, func, tag

    def eval(self, eta):
        f = self.func
        if isinstance(f, (Polynomial, SmoothField)):
            return f.eval(eta)
        return np.asarray(f(np.asarray(eta, dtype=float)), dtype=float)

    __call__ = eval

    def word_callable(self, kind, alpha):
        w = OperatorWord(self.spec, kind, alpha)
        if isinstance(self.func, (Polynomial, SmoothField)):
            d = w.apply_symbolic(self.func)
            return lambda p: d.eval(p)
        return w.as_callable(self.eval)

    def certify(self, norm: HomogeneousNorm, radius=100.0, n_dirs=16,
                n_radii=25, max_weight=2, seed=0):
        """Sampled sup of |X^alpha phi| on three nested gauge annuli; B
        requires finite sups stable under doubling, Bdot additionally a
        decreasing outer profile of |phi| itself."""
        from .kernels import _sweep_points, _alphas_up_to_weight

        report = {"tag": self.tag, "ok": True, "sups": {}}
        shells = [radius / 4, radius, 4 * radius]
        for alpha in _alphas_up_to_weight(self.spec, max_weight):
            f = self.word_callable("X", alpha)
            sups = []
            for rad in shells:
                pts = _sweep_points(norm, rad, n_dirs, n_radii, seed)
                sups.append(float(np.max(np.abs(f(pts)))))
            report["sups"][alpha] = sups
            finite = all(np.isfinite(s) for s in sups)
            stable = finite and sups[2] <= 1.05 * max(sups[0], sups[1])
            report["ok"] = report["ok"] and stable
        if self.tag == "Bdot":
            outer = []
            for rad in shells:
                pts = _sweep_points(norm, 2 * rad, n_dirs, n_radii, seed)
                far = norm(pts) >= rad
                outer.append(float(np.max(np.abs(self.eval(pts[far])))))
            report["outer_sup"] = outer
            decayed = outer[0] > outer[1] > outer[2]
            report["ok"] = report["ok"] and decayed
        return report


class DistributionRep:
    """T = omega_mu * sum X^alpha f_alpha with sampled densities f_alpha."""

    def __init__(self, spec: GroupSpec, norm: HomogeneousNorm, Gamma,
                 terms, mu=None, compact_support=False):
        self.spec, self.norm = spec, norm
        self.Gamma = float(Gamma)
        self.mu = float(spec.Q) + self.Gamma if mu is None else float(mu)
        self.terms = [(tuple(int(v) for v in alpha), f)
                      for alpha, f in terms]
        for alpha, _ in self.terms:
            if sum(alpha) > 3:
                raise ValueError("density derivative order capped at 3")
        self.compact_support = compact_support
        self._weight = weight_field(norm, self.mu)

    def weight(self):
        return self._weight

    def density_l1_norms(self, grid: Grid, calibration=1.0):
        """||f_alpha||_1 per term — finiteness is the membership invariant."""
        out = {}
        for alpha, f in self.terms:
            vals = np.abs(_dvals(f, grid.points))
            out[alpha] = float(np.sum(vals * grid.weights) * calibration)
        return out

    def normal_form(self):
        """The same distribution as sum_beta X^beta g_beta, with the weight
        moved inside:  omega X^alpha f =
        sum_{beta<=alpha} (-1)^{|alpha|-|beta|} lambda(alpha,beta)
        X^beta [ (Xt^{alpha-beta} omega) f ].
        Returns {beta: callable g_beta}; each g_beta is omega-bounded times
        the f's, hence has finite L^1(omega_{-mu}) norm when f in L^1."""
        pieces = {}
        for alpha, f in self.terms:
            for beta in sub_multi_indices(alpha):
                lam = leibniz_tilde_coeff(alpha, beta)
                diff = tuple(a - b for a, b in zip(alpha, beta))
                sign = (-1) ** (sum(alpha) - sum(beta))
                wd = OperatorWord(self.spec, "Xt",
                                  diff).apply_symbolic(self._weight)
                pieces.setdefault(beta, []).append((sign * lam, wd, f))
        out = {}
        for beta, plist in pieces.items():
            def g(eta, plist=plist):
                eta = np.asarray(eta, dtype=float)
                acc = np.zeros(eta.shape[:-1])
                for c, wd, f in plist:
                    acc = acc + c * wd.eval(eta) * _dvals(f, eta)
                return acc
            out[beta] = g
        return out


def _dvals(f, pts):
    if isinstance(f, (Polynomial, SmoothField)):
        return f.eval(pts)
    return np.asarray(f(np.asarray(pts, dtype=float)), dtype=float)


def pair(T: DistributionRep, phi: TestFunction, grid: Grid, calibration=1.0):
    """<T, phi> = sum_beta (-1)^{|beta|} int g_beta Xt^beta phi, through the
    normal form."""
    total = 0.0
    for beta, g in T.normal_form().items():
        dphi = phi.word_callable("Xt", beta)
        vals = g(grid.points) * dphi(grid.points)
        total += (-1) ** sum(beta) * float(np.sum(vals * grid.weights))
    return total * calibration


def pair_unweighted(T: DistributionRep, phi: TestFunction, grid: Grid,
                    calibration=1.0):
    """<omega_{-mu} T, phi> = sum_alpha (-1)^{|alpha|} int f_alpha
    Xt^alpha phi — the weight cancels exactly against the representation."""
    total = 0.0
    for alpha, f in T.terms:
        dphi = phi.word_callable("Xt", alpha)
        vals = _dvals(f, grid.points) * dphi(grid.points)
        total += (-1) ** sum(alpha) * float(np.sum(vals * grid.weights))
    return total * calibration


def _convolve_terms(T: DistributionRep, psi_check_field: SmoothField, eta,
                    grid: Grid, iota=None, calibration=1.0, chunk=2 ** 21):
    """(T * psi)(eta) = sum_alpha (-1)^{|alpha|} sum_{beta<=alpha}
    lambda(alpha,beta) int f(xi) (Xt^{alpha-beta} omega)(xi)
    (Xt^beta psi-check)(eta^{-1} xi) dxi; with iota set, the outer word
    X^iota is applied under the integral through the check map."""
    spec = T.spec
    eta = np.asarray(eta, dtype=float)
    single = eta.ndim == 1
    etas = eta.reshape(-1, spec.n)
    xi = grid.flat_points
    w = grid.flat_weights * calibration
    out = np.zeros(len(etas))
    step = max(1, chunk // len(xi))
    for alpha, f in T.terms:
        fvals = _dvals(f, xi)
        sign = (-1) ** sum(alpha)
        for beta in sub_multi_indices(alpha):
            lam = leibniz_tilde_coeff(alpha, beta)
            diff = tuple(a - b for a, b in zip(alpha, beta))
            if T.mu == 0.0 and sum(diff) > 0:
                continue  # the weight is constant: every beta < alpha dies
            wd = OperatorWord(spec, "Xt", diff).apply_symbolic(T.weight())
            kd = OperatorWord(spec, "Xt",
                              beta).apply_symbolic(psi_check_field)
            if iota is not None and sum(iota) > 0:
                # X^iota in eta of F(eta^{-1} xi) is ((X^iota F-check)-check)
                # at the same argument
                kd = OperatorWord(spec, "X", iota).apply_symbolic(
                    kd.negate_coords()).negate_coords()
            inner = fvals * wd.eval(xi)
            for i0 in range(0, len(etas), step):
                e = etas[i0:i0 + step, None, :]
                arg = spec.multiply(-e, xi[None, :, :])
                out[i0:i0 + step] += sign * lam * (
                    (inner[None, :] * kd.eval(arg)) @ w)
    return out[0] if single else out.reshape(eta.shape[:-1])


def poisson_extend(T: DistributionRep, kernel: KernelSpec, a, eta,
                   grid: Grid, iota=None, calibration=1.0):
    """The function (T * P_a)(eta); with iota, X^iota(T * P_a)(eta) with
    the derivative taken under the integral."""
    if abs(T.Gamma - kernel.Gamma) > 1e-12:
        raise ValueError("distribution and kernel carry different Gamma")
    if a <= 0:
        raise ValueError("scale parameter must be positive")
    pk_check = dilated_field(kernel, a).negate_coords()
    return _convolve_terms(T, pk_check, eta, grid, iota=iota,
                           calibration=calibration)


def poisson_extend_scaled(T: DistributionRep, kernel: KernelSpec, a, eta,
                          span=4.0, count=31, calibration=1.0):
    """(T * P_a)(eta) in the kernel-centered chart xi = eta delta_a zeta:
    the dilated kernel becomes the a-independent (Xt^beta P-check)(zeta)
    while the densities are pulled back, so one graded zeta-grid resolves
    every scale a.  The zeta box extends (span/a)^{d_k} per axis, which
    covers any density supported in a euclidean box of size ~span."""
    from .quadrature import _grading_for

    if abs(T.Gamma - kernel.Gamma) > 1e-12:
        raise ValueError("distribution and kernel carry different Gamma")
    if a <= 0:
        raise ValueError("scale parameter must be positive")
    spec = T.spec
    a = float(a)
    eta = np.asarray(eta, dtype=float)
    single = eta.ndim == 1
    etas = eta.reshape(-1, spec.n)
    radius = span / a
    hw = [radius ** float(d) for d in spec.weights]
    grading = _grading_for(radius, spec.weights, count,
                           center_spacing=6.0 / count)
    zgrid = Grid([0.0] * spec.n, hw, [count] * spec.n, grading=grading)
    zeta = zgrid.flat_points
    wz = zgrid.flat_weights * calibration
    dz = spec.dilate(a, zeta)
    pk_check = kernel.field.negate_coords()
    out = np.zeros(len(etas))
    step = max(1, 2 ** 20 // len(zeta))
    for alpha, f in T.terms:
        sign = (-1) ** sum(alpha)
        for beta in sub_multi_indices(alpha):
            lam = leibniz_tilde_coeff(alpha, beta)
            diff = tuple(x - y for x, y in zip(alpha, beta))
            if T.mu == 0.0 and sum(diff) > 0:
                continue  # the weight is constant: every beta < alpha dies
            wd = OperatorWord(spec, "Xt", diff).apply_symbolic(T.weight())
            kd = OperatorWord(spec, "Xt", beta).apply_symbolic(pk_check)
            db = float(sum(b * float(d)
                           for b, d in zip(beta, spec.weights)))
            kvals = kd.eval(zeta) * wz
            for i0 in range(0, len(etas), step):
                xi = spec.multiply(etas[i0:i0 + step, None, :],
                                   dz[None, :, :])
                inner = _dvals(f, xi) * wd.eval(xi)
                out[i0:i0 + step] += (sign * lam * a ** (-db)
                                      * (inner @ kvals))
    return out[0] if single else out.reshape(eta.shape[:-1])


def regularize(T: DistributionRep, phi_field: SmoothField, eta, grid: Grid,
               l1_grid: Grid = None, calibration=1.0):
    """T * phi for compactly supported smooth phi (given as a SmoothField);
    returns the sampled values at eta and, when l1_grid is supplied, the
    L^1 norm of the regularization over that grid."""
    vals = _convolve_terms(T, phi_field.negate_coords(), eta, grid,
                           calibration=calibration)
    if l1_grid is None:
        return vals, None
    dense = _convolve_terms(T, phi_field.negate_coords(), l1_grid.points,
                            grid, calibration=calibration)
    l1 = float(np.sum(np.abs(dense) * l1_grid.weights) * calibration)
    return vals, l1


def sconvolvability_witness(kernel: KernelSpec, phi, grid: Grid, a=1.0,
                            radius=50.0, n_dirs=8, n_radii=15,
                            calibration=1.0, seed=0):
    """Two numerical witnesses for S'-convolvability with P_a.

    (a) (phi * P_a-check) omega_{Q+Gamma} has bounded invariant derivatives
        up to weight 2 over a doubling-stable sweep (membership in the
        bounded smooth class used against the representation);
    (b) for phi >= 0 with phi = 1 on the unit ball,
        phi * P_a-check >= c omega_{-Q-Gamma}: the measured ratio is
        bounded away from 0, stably.
    """
    from .kernels import _sweep_points, _alphas_up_to_weight

    spec, norm = kernel.spec, kernel.norm
    w_plus = weight_field(norm, float(spec.Q) + kernel.Gamma)
    w_minus = weight_field(norm, -float(spec.Q) - kernel.Gamma)
    pk_check = check_map(spec, lambda p: np.asarray(
        dilated_field(kernel, a).eval(p)))

    def conv_phi(p):
        return convolve(spec, phi, pk_check, p, grid, calibration)

    def weighted(p):
        return conv_phi(p) * w_plus.eval(p)

    # the weight's bridge region holds the interior sup; sample it
    # identically at both radii so the doubling comparison only probes
    # the tail
    core = _sweep_points(norm, 4.0, n_dirs, 2 * n_radii, seed)
    report = {"bounded_derivatives": {}, "ok_a": True, "ok_b": True}
    for alpha in _alphas_up_to_weight(spec, 2):
        word = OperatorWord(spec, "X", alpha)
        sups = []
        for rad in (radius, 2 * radius):
            pts = np.vstack([core, _sweep_points(norm, rad, n_dirs,
                                                 n_radii, seed)])
            sups.append(float(np.max(np.abs(word.apply(weighted, pts)))))
        stable = all(np.isfinite(s) for s in sups) \
            and sups[1] <= 1.10 * sups[0]
        report["bounded_derivatives"][alpha] = {"sups": sups,
                                                "stable": stable}
        report["ok_a"] = report["ok_a"] and stable

    ratios = []
    for rad in (radius, 2 * radius):
        pts = _sweep_points(norm, rad, n_dirs, n_radii, seed)
        ratios.append(float(np.min(conv_phi(pts) / w_minus.eval(pts))))
    report["lower_bound_ratios"] = ratios
    report["ok_b"] = bool(ratios[0] > 1e-12 and
                          ratios[1] > 0.5 * ratios[0])
    report["ok"] = report["ok_a"] and report["ok_b"]
    return report


def extension_weighted_norm(T: DistributionRep, kernel: KernelSpec, a, iota,
                            outer_grid: Grid, inner_grid: Grid,
                            calibration=1.0):
    """int |X^iota (T * P_a)| omega_{-Q-Gamma} dlambda over the outer grid,
    the derivative taken under the integral."""
    if sum(iota) > 2:
        raise ValueError("derivative weight capped at |iota| <= 2")
    w_minus = weight_field(kernel.norm,
                           -float(kernel.spec.Q) - kernel.Gamma)
    vals = poisson_extend(T, kernel, a, outer_grid.points, inner_grid,
                          iota=iota, calibration=calibration)
    dens = np.abs(vals) * w_minus.eval(outer_grid.points)
    return float(np.sum(dens * outer_grid.weights) * calibration)


def boundary_convergence(T: DistributionRep, kernel: KernelSpec,
                         phi: TestFunction, a_list, outer_grid: Grid,
                         inner_grid: Grid, calibration=1.0,
                         kernel_mass=1.0, method="direct", span=4.0,
                         count=31):
    """Rows (a, <omega_{-mu}(T*P_a), phi>, <omega_{-mu}T, phi>, error);
    the limit pairing is evaluated exactly from the representation, the
    extension pairing by outer quadrature.  Reports the fitted slope of
    log error against log a."""
    w_minus = weight_field(kernel.norm, -T.mu)
    wm_phi = w_minus.eval(outer_grid.points) * phi(outer_grid.points)
    # T * P_a tends to (int P) T; pass the kernel mass when it is not 1
    limit = kernel_mass * pair_unweighted(T, phi, inner_grid, calibration)
    rows = []
    for a in a_list:
        if method == "scaled":
            # kernel-centered chart: one graded zeta-grid resolves every a
            ext = poisson_extend_scaled(T, kernel, a, outer_grid.points,
                                        span=span, count=count,
                                        calibration=calibration)
        elif method == "direct":
            ext = poisson_extend(T, kernel, a, outer_grid.points,
                                 inner_grid, calibration=calibration)
        else:
            raise ValueError(f"unknown method {method!r}")
        val = float(np.sum(ext * wm_phi * outer_grid.weights) * calibration)
        rows.append((float(a), val, limit, abs(val - limit)))
    errs = np.array([r[3] for r in rows])
    a_arr = np.array([r[0] for r in rows])
    keep = errs > 0
    slope = float(np.polyfit(np.log(a_arr[keep]), np.log(errs[keep]), 1)[0]) \
        if keep.sum() >= 2 else float("nan")
    return {"rows": rows, "slope": slope,
            "monotone": bool(np.all(np.diff(errs[np.argsort(a_arr)]) >= 0))}


def derivative_commute_residual(S: DistributionRep, kernel: KernelSpec, j,
                                a, pts, grid: Grid, calibration=1.0):
    """sup over pts of |Y_j(S * P_a) - (Y_j S) * P_a| for compactly
    supported S; Y_j S is realized by applying the right-invariant field
    directly to the (smooth, compact) densities."""
    if not S.compact_support:
        raise ValueError("the commuting identity is certified only for "
                         "compactly supported representations")
    if any(sum(alpha) > 0 for alpha, _ in S.terms) or S.mu != 0:
        raise ValueError("compact-support path expects plain function terms")
    pts = np.asarray(pts, dtype=float)
    u = lambda p: poisson_extend(S, kernel, a, p, grid,
                                 calibration=calibration)
    lhs = build_field(S.spec, "right", j).apply_fd(u)(pts)
    dterms = []
    for alpha, f in S.terms:
        if not isinstance(f, (Polynomial, SmoothField)):
            raise ValueError("densities must be symbolic for the exact path")
        dterms.append((alpha,
                       build_field(S.spec, "right", j).apply_symbolic(f)))
    dS = DistributionRep(S.spec, S.norm, S.Gamma, dterms, mu=S.mu,
                         compact_support=True)
    rhs = poisson_extend(dS, kernel, a, pts, grid, calibration=calibration)
    return float(np.max(np.abs(lhs - rhs)))
