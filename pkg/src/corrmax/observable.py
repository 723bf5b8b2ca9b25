"""Maximal sets on one orbit, the observable built on them, and thresholds.

The observable is a sum of radial bumps h_i(t) = c_i t**(-1/alpha) centred at
xi_i = f**m_i(zeta), each multiplied by the unit vector pointing from xi_i to
the evaluation point and cut off outside a ball of radius eps_i.
"""
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from math import ceil, isqrt, log
from typing import Callable, Optional

import numpy as np
import sympy as sp

from .dynamics import (LacunarySeed, RationalSeed, SqrtSeed, TorusMap, circle_distance,
                       seed_digits, torus_offset)
from .exact import parse_number, to_float

MODES = ("finite", "periodic", "countable")


class SpecError(ValueError):
    """Invalid maximal-set specification."""


class MixedTailIndexError(SpecError):
    pass


class DivergentSeriesError(SpecError):
    pass


class InfiniteValueError(ArithmeticError):
    pass


class _Infinity:
    """Distinguished value of the observable at the centres.

    It compares larger than every real number but refuses arithmetic, so a
    probability-zero hit cannot silently turn into NaN downstream.
    """

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INFINITY"

    def __float__(self):
        return float("inf")

    def __eq__(self, other):
        return other is self

    def __hash__(self):
        return hash("INFINITY")

    def __gt__(self, other):
        return other is not self

    def __ge__(self, other):
        return True

    def __lt__(self, other):
        return False

    def __le__(self, other):
        return other is self

    def _refuse(self, *args):
        raise InfiniteValueError("arithmetic on the infinite observation value")

    __add__ = __radd__ = __sub__ = __rsub__ = __mul__ = __rmul__ = _refuse
    __truediv__ = __rtruediv__ = __pow__ = __rpow__ = __neg__ = _refuse


INFINITY = _Infinity()


@dataclass(frozen=True)
class CountableRule:
    """Centres indexed by i = 1, 2, ...: offsets m_i, weights c_i, densities D_i.

    `weight` and `density` are sympy expressions in the positive integer
    symbol K so the normalising series can be summed in closed form.
    """

    offset: Callable[[int], int]
    weight: sp.Expr
    density: sp.Expr = sp.Integer(1)


K = sp.Symbol("k", integer=True, positive=True)


def default_truncation(n):
    """N(n) = ceil(log n), the default number of retained centres."""
    return max(1, ceil(log(n))) if n > 1 else 1


def _seed_is_rational(seed):
    if isinstance(seed, RationalSeed):
        return True
    if isinstance(seed, SqrtSeed):
        return isqrt(seed.a) ** 2 == seed.a
    return False


def _rational_value(seed):
    if isinstance(seed, RationalSeed):
        return seed.p, seed.q
    return seed.num * isqrt(seed.a), seed.den


@dataclass(frozen=True)
class MaximalSetSpec:
    """The correlated maximal set {xi_i = f**m_i(zeta)} and its bump profiles.

    Args:
        map: the TorusMap f.
        zeta: one symbolic seed per coordinate.
        offsets: m_1 = 0 < m_2 < ... (the retained ones in countable mode).
        weights: c_i > 0, exact where possible.
        alpha: common tail parameter in (0, 1); a per-centre tuple is accepted
            only if all entries agree.
        densities: D_i, the invariant density at xi_i (1 for Lebesgue).
        radii: cut-off radii eps_i; None picks a third of the gap to the
            nearest other centre (capped at 0.01).
        mode: "finite", "periodic" (zeta of prime period `period`) or
            "countable" (with `countable` describing the full family).
        signed: whether the 1D direction factor is the sign of x - xi_i.
            2D observables always carry their direction.
    """

    map: TorusMap
    zeta: tuple
    offsets: tuple
    weights: tuple
    alpha: object
    densities: Optional[tuple] = None
    radii: Optional[tuple] = None
    mode: str = "finite"
    period: Optional[int] = None
    countable: Optional[CountableRule] = None
    signed: bool = False
    name: str = "custom"
    radii_auto: bool = field(default=False, compare=False)

    def __post_init__(self):
        set_ = lambda k, v: object.__setattr__(self, k, v)
        if self.mode not in MODES:
            raise SpecError(f"unknown mode {self.mode!r}")
        if len(self.zeta) != self.map.dims:
            raise SpecError("zeta needs one seed per coordinate")
        offsets = tuple(int(m) for m in self.offsets)
        if not offsets or offsets[0] != 0:
            raise SpecError("the first offset m_1 must be 0")
        if any(b <= a for a, b in zip(offsets, offsets[1:])):
            raise SpecError("offsets must be strictly increasing")
        set_("offsets", offsets)
        weights = tuple(parse_number(c) for c in self.weights)
        if len(weights) != len(offsets) or any(not (c > 0) for c in weights):
            raise SpecError("need one positive weight per offset")
        set_("weights", weights)
        alpha = self.alpha
        if isinstance(alpha, (tuple, list)):
            alphas = {parse_number(a) for a in alpha}
            if len(alphas) > 1:
                raise MixedTailIndexError(
                    "mixed tail indices rejected: with different alpha_i the limiting "
                    "cluster weight degenerates onto the heaviest index, so the "
                    "compound piling law is not defined")
            alpha = alphas.pop()
        alpha = parse_number(alpha)
        if not (0 < alpha < 1):
            raise SpecError("alpha must lie in (0, 1)")
        set_("alpha", alpha)
        dens = self.densities or (1,) * len(offsets)
        dens = tuple(parse_number(x) for x in dens)
        if len(dens) != len(offsets) or any(not (x > 0) for x in dens):
            raise SpecError("need one positive density per offset")
        set_("densities", dens)
        if self.mode == "periodic":
            self._check_period()
        elif self.mode == "countable" and self.countable is None:
            raise SpecError("countable mode needs a CountableRule")
        self._check_distinct()
        if self.radii is None:
            set_("radii", self._auto_radii())
            set_("radii_auto", True)
        else:
            radii = tuple(float(parse_number(r)) for r in self.radii)
            if len(radii) != len(offsets) or any(r <= 0 for r in radii):
                raise SpecError("need one positive radius per offset")
            set_("radii", radii)
            self._check_disjoint()

    # -- validation helpers ------------------------------------------------

    def _check_distinct(self):
        # an irrational coordinate has pairwise distinct iterates; rational
        # coordinates are compared exactly through residues mod the denominator
        if not all(_seed_is_rational(s) for s in self.zeta):
            return
        keys = []
        for m in self.offsets:
            key = []
            for seed, b in zip(self.zeta, self.map.slopes):
                p, q = _rational_value(seed)
                key.append(((p * pow(b, m, q)) % q, q))
            keys.append(tuple(key))
        if len(set(keys)) != len(keys):
            raise SpecError("the centres xi_i = f^m_i(zeta) are not pairwise distinct")

    def _check_period(self):
        q = self.period
        if q is None or q < 2 or any(q % k == 0 for k in range(2, isqrt(q) + 1)):
            raise SpecError("periodic mode needs a prime period q")
        if not all(_seed_is_rational(s) for s in self.zeta):
            raise SpecError("an irrational zeta is not periodic")
        for seed, b in zip(self.zeta, self.map.slopes):
            p, den = _rational_value(seed)
            if (p * pow(b, q, den) - p) % den:
                raise SpecError(f"f^{q}(zeta) != zeta")
        # q prime: minimal unless zeta is a fixed point
        fixed = all((p * b - p) % den == 0 for (p, den), b in
                    ((_rational_value(s), b) for s, b in zip(self.zeta, self.map.slopes)))
        if fixed:
            raise SpecError(f"zeta is fixed, so {q} is not its minimal period")
        if max(self.offsets) >= q:
            raise SpecError("periodic offsets must lie in [0, q)")

    def _auto_radii(self):
        c = self.centers
        n = len(c)
        if n == 1:
            return (0.01,)
        gaps = np.array([min(circle_distance(c[i], c[j]) for j in range(n) if j != i)
                         for i in range(n)])
        if np.any(gaps <= 0) or not np.all(np.isfinite(gaps)):
            return None  # not resolvable in double precision; analytic use only
        return tuple(float(min(0.01, g / 3.0)) for g in gaps)

    def _check_disjoint(self):
        c, r = self.centers, self.radii
        for i in range(len(r)):
            for j in range(i + 1, len(r)):
                if circle_distance(c[i], c[j]) <= r[i] + r[j]:
                    raise SpecError(f"balls {i + 1} and {j + 1} overlap")

    # -- derived data ------------------------------------------------------

    @property
    def dims(self):
        return self.map.dims

    @property
    def size(self):
        return len(self.offsets)

    @cached_property
    def alpha_float(self):
        return to_float(self.alpha)

    @cached_property
    def weights_float(self):
        return np.array([to_float(c) for c in self.weights])

    def orbit_point(self, m, guard=64):
        """Float coordinates of f^m(zeta), read from exact digits."""
        out = []
        for seed, b in zip(self.zeta, self.map.slopes):
            if _seed_is_rational(seed):
                p, q = _rational_value(seed)
                out.append(((p * pow(b, m, q)) % q) / q)
            else:
                d = seed_digits(seed, b, m + guard)[m:]
                out.append(float(np.dot(d.astype(float), float(b) ** -np.arange(1, guard + 1))))
        return np.array(out)

    def center_point(self, i):
        """Float coordinates of xi_i (1-based)."""
        return self.orbit_point(self.offsets[i - 1])

    @cached_property
    def centers(self):
        return np.stack([self.center_point(i) for i in range(1, self.size + 1)])

    def require_radii(self):
        if self.radii is None:
            raise SpecError("centres are not separable in double precision; "
                            "this spec supports analytic operations only")
        return np.asarray(self.radii)

    def tail_mass(self):
        """sum_i D_i c_i^(alpha d) over all centres (the full series if countable)."""
        ad = self.alpha * self.dims
        if self.mode == "countable":
            return _series_total(self.countable.density * self.countable.weight ** ad)
        return sum(D * c ** ad for D, c in zip(self.densities, self.weights))

    def retained_mass(self):
        ad = self.alpha * self.dims
        return sum(D * c ** ad for D, c in zip(self.densities, self.weights))

    def with_radii(self, radii):
        return MaximalSetSpec(self.map, self.zeta, self.offsets, self.weights, self.alpha,
                              self.densities, tuple(radii), self.mode, self.period,
                              self.countable, self.signed, self.name)


@lru_cache(maxsize=None)
def _series_total(term):
    """sum_{k >= 1} term(k); geometric terms are summed directly (sympy's
    general summation is slow), anything else goes through sp.summation."""
    ratio = sp.powsimp(term.subs(K, K + 1) / term, force=True)
    if not ratio.free_symbols:
        if not abs(ratio) < 1:
            raise DivergentSeriesError("sum of D_i c_i^(alpha d) diverges")
        return sp.radsimp(term.subs(K, 1) / (1 - ratio))
    total = sp.summation(term, (K, 1, sp.oo))
    if not total.is_finite or isinstance(total, sp.Sum):
        raise DivergentSeriesError("sum of D_i c_i^(alpha d) diverges")
    return sp.simplify(total)


def countable_spec(tmap, zeta, rule, alpha, truncation, signed=False, name="custom"):
    """Finite truncation (first `truncation` centres) of a countable family."""
    offsets = tuple(int(rule.offset(i)) for i in range(1, truncation + 1))
    weights = tuple(sp.simplify(rule.weight.subs(K, i)) for i in range(1, truncation + 1))
    dens = tuple(sp.simplify(sp.sympify(rule.density).subs(K, i)) for i in range(1, truncation + 1))
    return MaximalSetSpec(tmap, tuple(zeta), offsets, weights, alpha, dens, None,
                          "countable", None, rule, signed, name)


@dataclass(frozen=True)
class ObservationValue:
    magnitude: object  # float or INFINITY
    direction: Optional[np.ndarray]
    center: Optional[int]  # 1-based index, None outside every ball


def h_eval(spec, i, t):
    """h_i(t) = c_i * t**(-1/alpha); t = 0 gives INFINITY."""
    t = float(t)
    if t < 0:
        raise ValueError("distance must be nonnegative")
    if t == 0:
        return INFINITY
    return float(spec.weights_float[i - 1]) * t ** (-1.0 / spec.alpha_float)


def h_inverse(spec, i, u):
    """h_i^{-1}(u) = (u / c_i)**(-alpha)."""
    u = float(u)
    if u <= 0:
        raise ValueError("level must be positive")
    return (u / float(spec.weights_float[i - 1])) ** (-spec.alpha_float)


def evaluate_observable(spec, x):
    """Psi(x) as an ObservationValue."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    radii = spec.require_radii()
    for i in range(spec.size):
        delta = torus_offset(x, spec.centers[i])
        dist = float(np.sqrt(np.sum(delta * delta)))
        if dist < radii[i]:
            if dist == 0:
                return ObservationValue(INFINITY, None, i + 1)
            direction = delta / dist
            if spec.dims == 1 and not spec.signed:
                direction = np.ones(1)
            return ObservationValue(h_eval(spec, i + 1, dist), direction, i + 1)
    return ObservationValue(0.0, None, None)


def observe(spec, points):
    """Vectorised Psi over points of shape (m, d).

    Returns:
        magnitude (m,), centre index (m,) with 0 meaning outside, direction (m, d).
    """
    pts = np.asarray(points, dtype=float).reshape(-1, spec.dims)
    radii = spec.require_radii()
    mag = np.zeros(len(pts))
    center = np.zeros(len(pts), dtype=np.int64)
    direction = np.zeros_like(pts)
    inv_alpha = 1.0 / spec.alpha_float
    for i in range(spec.size):
        delta = torus_offset(pts, spec.centers[i])
        dist = np.sqrt(np.sum(delta * delta, axis=1))
        inside = dist < radii[i]
        if not inside.any():
            continue
        d_in = dist[inside]
        with np.errstate(divide="ignore"):
            mag[inside] = spec.weights_float[i] * d_in ** (-inv_alpha)
        center[inside] = i + 1
        if spec.dims == 1 and not spec.signed:
            direction[inside] = 1.0
        else:
            with np.errstate(invalid="ignore", divide="ignore"):
                direction[inside] = delta[inside] / d_in[:, None]
    return mag, center, direction


# -- thresholds -------------------------------------------------------------

BALL_VOLUME = {"lebesgue": {1: sp.Integer(2), 2: sp.pi},
               "unit": {1: sp.Integer(2), 2: sp.Integer(1)}}


@dataclass(frozen=True)
class ThresholdFamily:
    """a_n = coefficient * n**power with u_n(tau) = tau**(-1/index) a_n.

    `index` is the tail index of ||X_0||, alpha*d, so that
    n * P(||X_0|| > u_n(tau)) -> tau in every dimension.
    """

    coefficient: sp.Expr
    power: sp.Expr
    index: sp.Expr

    def a_n_expr(self):
        n = sp.Symbol("n", positive=True)
        return self.coefficient * n ** self.power

    def a_n(self, n):
        return to_float(self.coefficient) * float(n) ** to_float(self.power)

    def u(self, n, tau):
        return float(tau) ** (-1.0 / to_float(self.index)) * self.a_n(n)

    def u_inv(self, n, z):
        """(z / a_n)**(-index); 0 maps to +inf."""
        z = np.asarray(z, dtype=float)
        with np.errstate(divide="ignore"):
            return (z / self.a_n(n)) ** (-to_float(self.index))


def compute_a_n(spec, convention="lebesgue"):
    """Scaling sequence with n P(||X_0|| > y a_n) -> y**(-alpha d).

    Solves n * sum_i D_i v_d (c_i / (y a_n))**(alpha d) = y**(-alpha d).

    Args:
        convention: "lebesgue" uses the true ball volumes v_1 = 2, v_2 = pi;
            "unit" takes v_2 = 1.
    """
    ad = spec.alpha * spec.dims
    total = BALL_VOLUME[convention][spec.dims] * spec.tail_mass()
    coeff = sp.expand(sp.radsimp(total ** (1 / ad)))
    return ThresholdFamily(coeff, sp.Integer(1) / ad, ad)


def with_coefficient(family, coefficient):
    return ThresholdFamily(parse_number(coefficient) if isinstance(coefficient, str) else
                           sp.sympify(coefficient), family.power, family.index)


def exceedance_radius(spec, i, n, tau=1.0, thresholds=None):
    """h_i^{-1}(u_n(tau)): radius of the exceedance ball around xi_i."""
    thresholds = thresholds or compute_a_n(spec)
    return h_inverse(spec, i, thresholds.u(n, tau))


def ball_measure(spec, i, radius):
    """Lebesgue-weighted measure D_i * vol(B_radius) of the i-th ball."""
    v = 2.0 if spec.dims == 1 else np.pi
    return to_float(spec.densities[i - 1]) * v * float(radius) ** spec.dims
