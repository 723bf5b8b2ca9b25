"""Exact orbits of piecewise-linear full-branch expanding maps on the torus.

A point of [0,1)^d is carried as one base-beta digit stream per coordinate.
Applying the map f(x) = beta*x mod 1 is then a shift of the stream, so orbits
of any length are exact as long as enough digits are buffered. Floats only
appear when a point value is read off, which never feeds back into the orbit.
"""
from dataclasses import dataclass, field
from fractions import Fraction
from math import isqrt

import numpy as np
import sympy as sp
from scipy.signal import lfilter

DEFAULT_GUARD = 64


class HorizonExceeded(IndexError):
    """Raised when an orbit is asked for a time beyond its digit buffer."""


class UnsupportedSeed(TypeError):
    pass


@dataclass(frozen=True)
class TorusMap:
    """Diagonal map x_k -> beta_k * x_k mod 1 on [0,1)^d with d in {1, 2}."""

    slopes: tuple

    def __post_init__(self):
        slopes = tuple(self.slopes)
        if len(slopes) not in (1, 2):
            raise ValueError("only 1D and 2D maps are supported")
        for b in slopes:
            if int(b) != b or b < 2:
                raise ValueError(f"slopes must be integers >= 2, got {b!r}")
        object.__setattr__(self, "slopes", tuple(int(b) for b in slopes))

    @property
    def dims(self):
        return len(self.slopes)

    def apply(self, x, times=1):
        """Float iteration, kept only as an oracle for tests."""
        x = np.asarray(x, dtype=float)
        b = np.asarray(self.slopes, dtype=float)
        for _ in range(times):
            x = np.mod(x * b, 1.0)
        return x

    def jacobian(self, j):
        """|det Df^j| as an exact rational."""
        out = sp.Integer(1)
        for b in self.slopes:
            out *= sp.Integer(b) ** j
        return out


# -- symbolic seeds --------------------------------------------------------

@dataclass(frozen=True)
class RationalSeed:
    p: int
    q: int

    def floor_scaled(self, m):
        return (self.p * m) // self.q

    def value(self):
        return sp.Rational(self.p, self.q)


@dataclass(frozen=True)
class SqrtSeed:
    """The number num * sqrt(a) / den with nonnegative integers."""

    a: int
    num: int = 1
    den: int = 1

    def floor_scaled(self, m):
        # floor(num*sqrt(a)*m/den) = floor(isqrt(a*(num*m)^2) / den)
        return isqrt(self.a * (self.num * m) ** 2) // self.den

    def value(self):
        return self.num * sp.sqrt(self.a) / self.den


@dataclass(frozen=True)
class LacunarySeed:
    """Sum over j >= 1 of ratio**(-power**j), e.g. ratio=power=3."""

    ratio: int = 3
    power: int = 3

    def _partial(self, terms):
        return sum(Fraction(1, self.ratio ** (self.power ** j)) for j in range(1, terms + 1))

    def floor_scaled(self, m):
        terms = 1
        while True:
            lo = self._partial(terms)
            # the remaining terms sum to less than twice the first omitted one
            hi = lo + Fraction(2, self.ratio ** (self.power ** (terms + 1)))
            a, b = (lo * m).__floor__(), (hi * m).__floor__()
            if a == b:
                return a
            terms += 1

    def value(self):
        j = sp.Symbol("j", integer=True, positive=True)
        return sp.Sum(sp.Integer(self.ratio) ** (-(sp.Integer(self.power) ** j)), (j, 1, sp.oo))


def _int_digits(value, base, count):
    """Base-`base` digits of 0 <= value < base**count, most significant first."""
    if count <= 256:
        out = np.zeros(count, dtype=np.uint8)
        for k in range(count - 1, -1, -1):
            value, out[k] = divmod(value, base)
        return out
    half = count // 2
    hi, lo = divmod(value, base ** half)
    return np.concatenate([_int_digits(hi, base, count - half), _int_digits(lo, base, half)])


def seed_digits(constant, base, count):
    """First `count` base-`base` digits of the fractional part of `constant`.

    Only integer arithmetic is used, so the digits are exact.

    Args:
        constant: a RationalSeed, SqrtSeed or LacunarySeed.
        base: integer base >= 2.
        count: number of digits after the radix point.
    """
    if not hasattr(constant, "floor_scaled"):
        raise UnsupportedSeed(f"unsupported symbolic seed {constant!r}")
    m = base ** count
    return _int_digits(constant.floor_scaled(m) % m, base, count)


# -- orbits ----------------------------------------------------------------

@dataclass(frozen=True)
class DigitOrbit:
    """Digit streams (one per coordinate) plus a cursor.

    digits[k][0] is the first digit after the radix point of coordinate k at
    cursor 0. The point at time t uses digits t, t+1, ... of each stream.
    """

    map: TorusMap
    digits: tuple
    cursor: int = 0
    guard: int = DEFAULT_GUARD

    @property
    def horizon(self):
        return min(len(d) for d in self.digits) - self.guard

    def point(self):
        return iterate(self, 0)

    def advance(self, t=1):
        if self.cursor + t > self.horizon:
            raise HorizonExceeded(f"horizon exceeded: cursor {self.cursor + t} > {self.horizon}")
        return DigitOrbit(self.map, self.digits, self.cursor + t, self.guard)


def _digit_value(digits, base):
    w = float(base) ** -np.arange(1, len(digits) + 1)
    return float(np.dot(digits.astype(float), w))


def iterate(orbit, t):
    """f^t of the orbit's current point, read from the shifted digit streams."""
    s = orbit.cursor + t
    if t < 0 or s > orbit.horizon:
        raise HorizonExceeded(f"horizon exceeded: time {s} with horizon {orbit.horizon}")
    return np.array([_digit_value(d[s:s + orbit.guard], b)
                     for d, b in zip(orbit.digits, orbit.map.slopes)])


def orbit_values(orbit, count=None):
    """Point values at times cursor, cursor+1, ... as an array (count, d).

    Uses the contracting backward recursion x_t = (d_t + x_{t+1}) / beta run
    from the end of the buffer, which costs O(count) and loses no accuracy.
    """
    count = orbit.horizon - orbit.cursor if count is None else count
    if orbit.cursor + count > orbit.horizon:
        raise HorizonExceeded("horizon exceeded")
    cols = []
    for d, b in zip(orbit.digits, orbit.map.slopes):
        rev = d[orbit.cursor:][::-1].astype(float)
        z = lfilter([1.0 / b], [1.0, -1.0 / b], rev)[::-1]
        cols.append(z[:count])
    return np.stack(cols, axis=1)


def sample_stationary(tmap, rng, horizon, guard=DEFAULT_GUARD):
    """Lebesgue-distributed starting point: iid uniform digits per coordinate."""
    digits = tuple(rng.integers(0, b, size=horizon + guard, dtype=np.uint8) for b in tmap.slopes)
    return DigitOrbit(tmap, digits, 0, guard)


def seed_orbit(tmap, seeds, horizon, guard=DEFAULT_GUARD):
    """Exact orbit of a symbolic point (one seed per coordinate)."""
    digits = tuple(seed_digits(s, b, horizon + guard) for s, b in zip(seeds, tmap.slopes))
    return DigitOrbit(tmap, digits, 0, guard)


# -- derivative cocycle ----------------------------------------------------

@dataclass(frozen=True)
class DerivativePower:
    exponent: int
    factors: tuple = field(default=())

    def compose(self, other):
        return DerivativePower(self.exponent + other.exponent,
                               tuple(a * b for a, b in zip(self.factors, other.factors)))

    def as_array(self):
        return np.array([float(f) for f in self.factors])

    def apply(self, w):
        return np.asarray(w, dtype=float) * self.as_array()


def derivative_power(tmap, j):
    """Df^j for the diagonal map: per-coordinate beta_k**j as exact rationals."""
    return DerivativePower(int(j), tuple(sp.Integer(b) ** int(j) for b in tmap.slopes))


def circle_distance(x, y):
    """Euclidean distance on the flat torus (wraparound per coordinate)."""
    delta = np.abs(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))
    delta = np.minimum(delta, 1.0 - delta)
    return np.sqrt(np.sum(delta * delta, axis=-1))


def torus_offset(x, center):
    """Signed displacement x - center in (-1/2, 1/2]^d (translation chart)."""
    delta = np.asarray(x, dtype=float) - np.asarray(center, dtype=float)
    return delta - np.round(delta)


# -- exact orbits of float-sampled points ----------------------------------

DYADIC_BITS = 53


def sample_dyadic(tmap, rng, size):
    """Uniform points k / 2**53 as integer numerators, shape (size, d)."""
    return rng.integers(0, 2 ** DYADIC_BITS, size=(size, tmap.dims), dtype=np.uint64)


def dyadic_step(tmap, k):
    """One exact step on numerators: k -> beta*k mod 2**53 (fits in uint64)."""
    b = np.asarray(tmap.slopes, dtype=np.uint64)
    return (k * b) & np.uint64(2 ** DYADIC_BITS - 1)


def dyadic_to_float(k):
    return k.astype(float) * 2.0 ** -DYADIC_BITS
