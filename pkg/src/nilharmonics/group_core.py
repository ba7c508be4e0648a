"""Homogeneous Lie groups in exponential coordinates of the first kind.

A group is described by its dilation weights and the structure constants of
its polynomial group law; elements are plain numpy coordinate vectors (an
array of shape ``(..., n)`` is a batch of elements).  Inversion is coordinate
negation, dilations scale coordinate ``k`` by ``a**d_k``.

The module also provides homogeneous norms (a default even-power gauge for
any group, the Koranyi gauge on the Heisenberg group) and the smooth weight
functions ``omega_mu`` built from a fixed polynomial bridge.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .polynomials import Polynomial


def _lcm(nums):
    out = 1
    for v in nums:
        out = out * v // math.gcd(out, v)
    return out


@dataclass(frozen=True)
class GroupSpec:
    """Dilation weights plus structure constants of the group law.

    ``structure`` maps ``(k, alpha, beta)`` (k a 0-based coordinate index,
    alpha/beta nonzero exponent multi-indices) to the coefficient of
    ``theta^alpha(eta) * theta^beta(xi)`` in coordinate k of the product.
    """

    name: str
    weights: tuple  # of Fraction, nondecreasing, weights[0] == 1
    structure: tuple = ()  # of ((k, alpha, beta), Fraction) pairs, canonical order

    def __post_init__(self):
        w = tuple(Fraction(d) for d in self.weights)
        object.__setattr__(self, "weights", w)
        if not w or w[0] != 1:
            raise ValueError("smallest dilation weight must be normalized to 1")
        if any(a > b for a, b in zip(w, w[1:])):
            raise ValueError("weights must be nondecreasing")
        struct = []
        for (k, alpha, beta), c in (self.structure.items()
                                    if isinstance(self.structure, dict)
                                    else self.structure):
            alpha, beta = tuple(alpha), tuple(beta)
            if len(alpha) != self.n or len(beta) != self.n:
                raise ValueError("multi-index length mismatch")
            if sum(alpha) == 0 or sum(beta) == 0:
                raise ValueError("structure multi-indices must be nonzero")
            da, db = self.mdeg(alpha), self.mdeg(beta)
            if da + db != w[k]:
                raise ValueError(
                    f"structure constant at level {k} violates homogeneity: "
                    f"d(alpha)+d(beta)={da + db} != d_k={w[k]}")
            for j in range(self.n):
                if (alpha[j] or beta[j]) and w[j] >= w[k]:
                    raise ValueError("group law at level k may only involve "
                                     "strictly lower layers")
            struct.append(((k, alpha, beta), Fraction(c)))
        struct.sort(key=lambda item: (w[item[0][0]], item[0]))
        object.__setattr__(self, "structure", tuple(struct))

    @property
    def n(self):
        return len(self.weights)

    @property
    def Q(self):
        return sum(self.weights, Fraction(0))

    def mdeg(self, alpha):
        """Homogeneous weight d(alpha) of a multi-index."""
        return sum(Fraction(d) * a for d, a in zip(self.weights, alpha))

    # -- group operations ---------------------------------------------------

    def multiply(self, eta, xi):
        eta = np.asarray(eta, dtype=float)
        xi = np.asarray(xi, dtype=float)
        if eta.shape[-1] != self.n or xi.shape[-1] != self.n:
            raise ValueError(f"expected coordinate vectors of length {self.n}")
        out = eta + xi
        for (k, alpha, beta), c in self.structure:
            term = np.full(np.broadcast_shapes(eta.shape[:-1], xi.shape[:-1]),
                           float(c))
            for j, p in enumerate(alpha):
                if p:
                    term = term * eta[..., j] ** p
            for j, p in enumerate(beta):
                if p:
                    term = term * xi[..., j] ** p
            out = out.copy() if out.base is not None else out
            out[..., k] = out[..., k] + term
        return out

    def inverse(self, eta):
        eta = np.asarray(eta, dtype=float)
        if eta.shape[-1] != self.n:
            raise ValueError(f"expected coordinate vectors of length {self.n}")
        return -eta

    def dilate(self, a, eta):
        if a <= 0:
            raise ValueError("dilation parameter must be positive")
        eta = np.asarray(eta, dtype=float)
        scale = np.array([float(a) ** float(d) for d in self.weights])
        return eta * scale

    def identity(self):
        return np.zeros(self.n)

    def multiply_symbolic(self, k):
        """Coordinate k of the product as a polynomial in 2n variables
        (first n: eta, last n: xi)."""
        n2 = 2 * self.n
        law = Polynomial.coordinate(n2, k) + Polynomial.coordinate(n2, self.n + k)
        for (kk, alpha, beta), c in self.structure:
            if kk != k:
                continue
            exps = tuple(alpha) + tuple(beta)
            law = law + Polynomial(n2, {exps: c})
        return law

    # -- serialization ------------------------------------------------------

    def to_json(self):
        return {
            "name": self.name,
            "n": self.n,
            "weights": [str(d) for d in self.weights],
            "structure": [{"k": k, "alpha": list(a), "beta": list(b),
                           "c": str(c)}
                          for (k, a, b), c in self.structure],
        }

    @classmethod
    def from_json(cls, data):
        weights = tuple(Fraction(w) for w in data["weights"])
        structure = [((int(s["k"]), tuple(s["alpha"]), tuple(s["beta"])),
                      Fraction(s["c"])) for s in data.get("structure", [])]
        return cls(name=data.get("name", "unnamed"), weights=weights,
                   structure=structure)

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=2)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_json(json.load(fh))


# -- builders ---------------------------------------------------------------

def abelian(n, name=None):
    return GroupSpec(name=name or f"abelian_R{n}", weights=(Fraction(1),) * n)


def heisenberg():
    """The 3-dimensional Heisenberg group, weights (1, 1, 2), bracket
    normalized so that theta_3(eta.xi) picks up (x y' - y x')/2."""
    e1, e2 = (1, 0, 0), (0, 1, 0)
    structure = [((2, e1, e2), Fraction(1, 2)), ((2, e2, e1), Fraction(-1, 2))]
    return GroupSpec(name="heisenberg", weights=(1, 1, 2), structure=structure)


def random_step2(n1, n2, seed, name=None):
    """Random step-2 group: n1 weight-1 coordinates, n2 weight-2 coordinates,
    antisymmetric rational structure constants in [-1, 1]."""
    rng = np.random.default_rng(seed)
    n = n1 + n2
    weights = (1,) * n1 + (2,) * n2
    structure = []
    for k in range(n1, n):
        for i in range(n1):
            for j in range(i + 1, n1):
                c = Fraction(int(rng.integers(-100, 101)), 100)
                if c == 0:
                    continue
                ei = tuple(1 if m == i else 0 for m in range(n))
                ej = tuple(1 if m == j else 0 for m in range(n))
                structure.append(((k, ei, ej), c / 2))
                structure.append(((k, ej, ei), -c / 2))
    return GroupSpec(name=name or f"step2_{n1}_{n2}_seed{seed}",
                     weights=weights, structure=structure)


# -- homogeneous norms ------------------------------------------------------

class HomogeneousNorm:
    """Homogeneous gauge |.| with |delta_a eta| = a |eta|.

    The default 'even-power' variant is (sum_k theta_k^(2M/d_k))^(1/2M) with
    M cleared so every exponent is an even integer; 'koranyi' is the
    classical gauge on the Heisenberg group.
    """

    def __init__(self, spec: GroupSpec, variant="even-power"):
        self.spec = spec
        self.variant = variant
        if variant == "koranyi":
            if tuple(spec.weights) != (1, 1, 2):
                raise ValueError("koranyi variant requires Heisenberg weights")
            self.M = 2
        elif variant == "even-power":
            # choose M so that 2M/d_k is an even integer for every k
            dens = [d.denominator for d in spec.weights]
            nums = [d.numerator for d in spec.weights]
            self.M = _lcm(nums)
        else:
            raise ValueError(f"unknown norm variant {variant!r}")
        self._calibration = None

    @property
    def n(self):
        return self.spec.n

    def gauge_polynomial(self):
        """The polynomial N with |eta| = N(eta)^(1/2M)."""
        n = self.spec.n
        if self.variant == "koranyi":
            x, y, t = (Polynomial.coordinate(3, k) for k in range(3))
            return (x * x + y * y) * (x * x + y * y) + 16 * (t * t)
        poly = Polynomial.zero(n)
        for k, d in enumerate(self.spec.weights):
            p = Fraction(2 * self.M) / d
            assert p.denominator == 1 and p.numerator % 2 == 0
            poly = poly + Polynomial(n, {tuple(int(k == j) * p.numerator
                                               for j in range(n)): 1})
        return poly

    def __call__(self, eta):
        eta = np.asarray(eta, dtype=float)
        if self.variant == "koranyi":
            x, y, t = eta[..., 0], eta[..., 1], eta[..., 2]
            return ((x * x + y * y) ** 2 + 16 * t * t) ** 0.25
        acc = np.zeros(eta.shape[:-1])
        for k, d in enumerate(self.spec.weights):
            p = int(2 * self.M / d)
            acc = acc + eta[..., k] ** p
        return acc ** (1.0 / (2 * self.M))

    def measured_gamma(self, n_samples=10 ** 5, box=10.0, seed=0):
        """sup |eta xi| / (|eta| + |xi|) over random pairs."""
        rng = np.random.default_rng(seed)
        eta = rng.uniform(-box, box, size=(n_samples, self.n))
        xi = rng.uniform(-box, box, size=(n_samples, self.n))
        num = self(self.spec.multiply(eta, xi))
        den = self(eta) + self(xi)
        return float(np.max(num / den))

    def _axis_extent(self, k, r):
        # largest |theta_k| on the unit ball, scaled by homogeneity
        e = np.zeros(self.n)
        e[k] = 1.0
        unit = 1.0 / self(e)
        return unit * float(r) ** float(self.spec.weights[k])

    def calibration(self, resolution=201):
        """Constant kappa with kappa * Leb(B(0,1)) = 1, cached."""
        if self._calibration is None:
            ext = np.array([self._axis_extent(k, 1.0) for k in range(self.n)])
            axes = [np.linspace(-ext[k], ext[k], resolution)
                    for k in range(self.n)]
            mesh = np.meshgrid(*axes, indexing="ij")
            pts = np.stack(mesh, axis=-1)
            inside = self(pts) <= 1.0
            cell = np.prod([ax[1] - ax[0] for ax in axes])
            vol = float(inside.sum()) * cell
            self._calibration = 1.0 / vol
        return self._calibration

    def ball_volume(self, r, calibrated=True):
        """|B(0, r)| = r^Q under the calibrated Haar normalization."""
        v = float(r) ** float(self.spec.Q)
        return v if calibrated else v / self.calibration()


def peetre_factor(norm: HomogeneousNorm, eta, xi, r):
    """Both sides of the Peetre inequality
    (1+|eta xi|)^r <= (1+|eta|)^{|r|} (1+|xi|)^r."""
    lhs = (1.0 + norm(norm.spec.multiply(eta, xi))) ** r
    rhs = (1.0 + norm(eta)) ** abs(r) * (1.0 + norm(xi)) ** r
    return lhs, rhs


# -- weight functions omega_mu ---------------------------------------------

# Bridge on [1,2]: the unique monotone quintic gluing 1 to x with C^2 contact,
# Phi(1+u) = 1 + 6u^3 - 8u^4 + 3u^5.
_BRIDGE = (6.0, -8.0, 3.0)


def bridge(x):
    """Phi: 1 on [0,1], x on [2,inf), monotone quintic in between."""
    x = np.asarray(x, dtype=float)
    u = np.clip(x - 1.0, 0.0, 1.0)
    a, b, c = _BRIDGE
    mid = 1.0 + u ** 3 * (a + u * (b + u * c))
    return np.where(x <= 1.0, 1.0, np.where(x >= 2.0, x, mid))


class WeightFunction:
    """omega_mu(eta) = (1 + Phi(|eta|))^mu, a smooth stand-in for
    (1+|eta|)^mu: equal to 2^mu on the unit ball and to (1+|eta|)^mu
    outside radius 2."""

    def __init__(self, mu, norm: HomogeneousNorm):
        self.mu = float(mu)
        self.norm = norm

    def __call__(self, eta):
        return (1.0 + bridge(self.norm(eta))) ** self.mu

    def reciprocal(self):
        return WeightFunction(-self.mu, self.norm)
