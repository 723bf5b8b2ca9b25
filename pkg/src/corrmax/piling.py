"""Compiler for the piling-process law of orbit-correlated maximal sets.

Given a MaximalSetSpec the law is a finite mixture of branches. A branch fixes
the anchor ball i, the range of the anchor's scaled frequency U, the law of the
anchor direction Theta, and which offsets j carry a finite entry

    Z_j = U * Df^j(Theta) * (c_i / c_l)**alpha       (j = 0: Z_0 = U * Theta).

Negative offsets are finite only when a weight ratio (c_l / c_i)**alpha beats
the contraction of Df^j ("fake expansion"); these are collected in A^(i).
All probabilities, U-bounds and coefficients are exact sympy expressions.
"""
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np
import sympy as sp

from .dynamics import DerivativePower, derivative_power
from .exact import fmt_exact, to_float
from .observable import INFINITY

DEFAULT_HORIZON = 64
REJECTION_CAP = 10 ** 4


class InterleavingError(ValueError):
    """The u-intervals of A^(i) overlap, so the branch decomposition fails."""


class RejectionCapExceeded(RuntimeError):
    pass


# -- weights and bounds ------------------------------------------------------

def compute_weights(spec):
    """p_i = D_i c_i^(alpha d) / sum_k D_k c_k^(alpha d), exact.

    In countable mode the denominator is the full series; the returned list
    covers the retained centres only.
    """
    ad = spec.alpha * spec.dims
    total = spec.tail_mass()
    return [sp.radsimp(sp.powsimp(D * c ** ad / total))
            for D, c in zip(spec.densities, spec.weights)]


def _exponent(spec, i, l, s):
    j = spec.offsets[l - 1] - spec.offsets[i - 1]
    if s:
        if spec.mode != "periodic":
            raise ValueError("the shift s is only meaningful for a periodic zeta")
        j -= spec.period * s
    return j


def contraction_bounds(spec, i, l, s=0):
    """(lambda_min, lambda_max) of ||Df^j w|| over unit w, j = m_l - m_i - q s < 0."""
    j = _exponent(spec, i, l, s)
    if j >= 0:
        raise ValueError(f"contraction bounds need a negative exponent, got {j}")
    factors = derivative_power(spec.map, j).factors
    return min(factors), max(factors)


def weight_ratio(spec, l, i):
    """(c_l / c_i)**alpha, exact."""
    return sp.radsimp(sp.powsimp((spec.weights[l - 1] / spec.weights[i - 1]) ** spec.alpha))


def u_bounds(spec, i, l, s=0):
    """(u_min, u_max) = (c_l/c_i)^alpha * (1/lambda_min, 1/lambda_max)."""
    lam_min, lam_max = contraction_bounds(spec, i, l, s)
    r = weight_ratio(spec, l, i)
    return sp.radsimp(r / lam_min), sp.radsimp(r / lam_max)


@dataclass(frozen=True)
class AElement:
    offset: int
    center: int
    shift: int
    u_min: sp.Expr
    u_max: sp.Expr


def build_A_set(spec, i):
    """Negative offsets at which the piling process may be finite.

    Elements are the offsets j = m_l - m_i (- q s) < 0 with u_min < 1, kept with
    their (l, s) provenance, sorted by decreasing offset.
    """
    out = []
    for l in range(1, spec.size + 1):
        s = 0
        while True:
            j = _exponent(spec, i, l, s)
            if j < 0:
                u_min, u_max = u_bounds(spec, i, l, s)
                if u_min < 1:
                    out.append(AElement(j, l, s, u_min, u_max))
                elif spec.mode == "periodic":
                    # u_min grows geometrically in s, nothing further qualifies
                    break
            if spec.mode != "periodic":
                break
            s += 1
    out.sort(key=lambda a: -a.offset)
    return out


def check_interleaving(spec, i):
    """Order A^(i) so that u_min(l_p) <= u_max(l_(p+1)) for all p.

    Raises:
        InterleavingError: when no such ordering exists.
    """
    elems = sorted(build_A_set(spec, i), key=lambda a: (a.u_max, a.u_min))
    for a, b in zip(elems, elems[1:]):
        if not (a.u_min <= b.u_max):
            raise InterleavingError(
                f"theorem inapplicable: interleaving violated at anchor {i} "
                f"(u_min={a.u_min} for offset {a.offset} exceeds u_max={b.u_max} "
                f"for offset {b.offset})")
    if elems and not (elems[-1].u_min <= 1):
        raise InterleavingError(f"theorem inapplicable: interleaving violated at anchor {i}")
    return elems


# -- branch data -------------------------------------------------------------

@dataclass(frozen=True)
class Entry:
    """Finite entry U * Df^exponent(Theta) * factor at `offset`."""

    offset: int
    center: int
    shift: int
    power: DerivativePower
    factor: sp.Expr

    @cached_property
    def scale(self):
        return self.power.as_array() * to_float(self.factor)

    def coefficient_text(self):
        parts = [fmt_exact(f) for f in self.power.factors]
        return parts[0] if len(parts) == 1 else "(" + ", ".join(parts) + ")"


@dataclass(frozen=True)
class UniformSphere:
    dims: int
    signed: bool = True

    def sample(self, rng, u):
        m = len(u)
        if self.dims == 1:
            if not self.signed:
                return np.ones((m, 1))
            return rng.choice(np.array([-1.0, 1.0]), size=(m, 1))
        phi = rng.uniform(0.0, 2.0 * np.pi, size=m)
        return np.stack([np.cos(phi), np.sin(phi)], axis=1)

    def describe(self):
        return "uniform" if self.dims > 1 or self.signed else "fixed +1"


@dataclass(frozen=True)
class ConditionalSphere:
    """Uniform on {w : ||Df^offset w|| >= ratio / u} given U = u."""

    dims: int
    offset: int
    power: DerivativePower
    ratio: sp.Expr
    signed: bool = True

    def admits(self, w, u):
        norm = np.sqrt(np.sum((w * self.power.as_array()) ** 2, axis=-1))
        return norm >= to_float(self.ratio) / np.asarray(u)

    def sample(self, rng, u, cap=REJECTION_CAP):
        u = np.asarray(u, dtype=float)
        base = UniformSphere(self.dims, self.signed)
        out = base.sample(rng, u)
        todo = np.flatnonzero(~self.admits(out, u))
        for _ in range(cap):
            if todo.size == 0:
                return out
            out[todo] = base.sample(rng, u[todo])
            todo = todo[~self.admits(out[todo], u[todo])]
        if todo.size:
            raise RejectionCapExceeded(
                f"conditional direction law rejected {cap} times; the set is empty or malformed")
        return out

    def describe(self):
        return f"||Df^{self.offset} w|| >= ({fmt_exact(self.ratio)})/u"


@dataclass(frozen=True)
class PilingBranch:
    anchor: int
    label: str
    probability: sp.Expr
    u_lo: sp.Expr
    u_hi: sp.Expr
    theta_law: object
    entries: tuple  # Entry objects sorted by offset, offset 0 included

    @cached_property
    def offsets(self):
        return np.array([e.offset for e in self.entries], dtype=np.int64)

    @cached_property
    def scales(self):
        return np.stack([e.scale for e in self.entries])

    def negative_entries(self):
        return [e for e in self.entries if e.offset < 0]


def _identity_entry(spec, i):
    return Entry(0, i, 0, derivative_power(spec.map, 0), sp.Integer(1))


def _entry(spec, i, j, l, s):
    return Entry(j, l, s, derivative_power(spec.map, j), weight_ratio(spec, i, l))


def positive_entries(spec, i, horizon=DEFAULT_HORIZON):
    """Forward entries of anchor i with offsets in (0, horizon]."""
    out = []
    if spec.mode == "periodic":
        q = spec.period
        for l in range(1, spec.size + 1):
            base = spec.offsets[l - 1] - spec.offsets[i - 1]
            s = 0 if base > 0 else (-base) // q + 1
            while base + q * s <= horizon:
                out.append(_entry(spec, i, base + q * s, l, s))
                s += 1
    else:
        for l in range(i + 1, spec.size + 1):
            j = spec.offsets[l - 1] - spec.offsets[i - 1]
            if j <= horizon:
                out.append(_entry(spec, i, j, l, 0))
    return sorted(out, key=lambda e: e.offset)


def _admissible(branch, spec):
    """Every negative entry has norm >= 1 on the whole branch (exact check)."""
    for e in branch.negative_entries():
        if isinstance(branch.theta_law, ConditionalSphere) and e.offset == branch.theta_law.offset:
            continue
        lam = min(e.power.factors)
        if not (sp.simplify(branch.u_lo * lam * e.factor) >= 1):
            return False
    return True


@dataclass(frozen=True)
class PilingLaw:
    spec: object
    branches: tuple
    mode: str
    horizon: int
    discarded_mass: sp.Expr = sp.Integer(0)

    @cached_property
    def probabilities(self):
        p = np.array([to_float(b.probability) for b in self.branches])
        return p / p.sum()

    def anchor_branches(self, i):
        return [b for b in self.branches if b.anchor == i]

    def total_probability(self):
        return sp.simplify(sum(b.probability for b in self.branches))


def build_piling_law(spec, horizon=DEFAULT_HORIZON):
    """Exact branch decomposition of the piling process.

    Per anchor i: with A^(i) empty a single branch (U on [0,1], uniform
    direction, forward entries only). Otherwise, with A^(i) ordered as
    l_1..l_K by check_interleaving, branches
      I    U in [0, u_max(l_1))                       no negative entries
      II_p U in [u_max(l_p), u_min(l_p))  entries l_1..l_p, direction conditioned
      III_p U in [u_min(l_p), u_max(l_(p+1)))         entries l_1..l_p
      IV   U in [u_min(l_K), 1]                       entries l_1..l_K
    with probability p_i times the interval length; empty intervals are dropped.
    In countable mode the retained anchors are renormalised and the dropped
    mass is recorded.
    """
    weights = compute_weights(spec)
    discarded = sp.Integer(0)
    if spec.mode == "countable":
        kept = sp.radsimp(sum(weights))
        discarded = sp.radsimp(1 - kept)
        weights = [sp.radsimp(w / kept) for w in weights]
    signed = spec.dims > 1 or spec.signed
    uniform = UniformSphere(spec.dims, signed)
    branches = []
    for i in range(1, spec.size + 1):
        p_i = weights[i - 1]
        forward = positive_entries(spec, i, horizon)
        base = [_identity_entry(spec, i)] + forward
        elems = check_interleaving(spec, i)
        if not elems:
            branches.append(PilingBranch(i, "0", p_i, sp.Integer(0), sp.Integer(1), uniform,
                                         tuple(sorted(base, key=lambda e: e.offset))))
            continue

        def make(label, lo, hi, law, upto):
            neg = [_entry(spec, i, a.offset, a.center, a.shift) for a in elems[:upto]]
            entries = tuple(sorted(base + neg, key=lambda e: e.offset))
            return PilingBranch(i, label, sp.simplify(p_i * (hi - lo)), lo, hi, law, entries)

        candidates = [make("I", sp.Integer(0), elems[0].u_max, uniform, 0)]
        for p, a in enumerate(elems, start=1):
            cond = ConditionalSphere(spec.dims, a.offset, derivative_power(spec.map, a.offset),
                                     weight_ratio(spec, a.center, i), signed)
            candidates.append(make(f"II.{p}" if len(elems) > 1 else "II",
                                   a.u_max, a.u_min, cond, p))
            if p < len(elems):
                candidates.append(make(f"III.{p}", a.u_min, elems[p].u_max, uniform, p))
        candidates.append(make("IV", elems[-1].u_min, sp.Integer(1), uniform, len(elems)))
        for b in candidates:
            if b.u_hi > b.u_lo:
                if not _admissible(b, spec):
                    raise AssertionError(f"branch {b.label} of anchor {i} admits a small negative entry")
                branches.append(b)
    law = PilingLaw(spec, tuple(branches), spec.mode, horizon, discarded)
    total = law.total_probability()
    if sp.simplify(total - 1) != 0:
        raise AssertionError(f"branch probabilities sum to {total}, not 1")
    return law


# -- sampling ----------------------------------------------------------------

@dataclass(frozen=True)
class PilingSample:
    branch: int
    anchor: int
    u: float
    theta: np.ndarray
    offsets: np.ndarray
    values: np.ndarray  # (k, d), finite entries only

    def finite_entries(self):
        return {int(j): v for j, v in zip(self.offsets, self.values)}

    def entry(self, j):
        hit = np.flatnonzero(self.offsets == j)
        return self.values[hit[0]] if hit.size else INFINITY


@dataclass
class PilingBatch:
    """Vectorised draws: branch index, U and Theta per row."""

    law: PilingLaw
    branch: np.ndarray
    u: np.ndarray
    theta: np.ndarray

    def __len__(self):
        return len(self.u)

    def values(self, rows, b):
        """Entries (len(rows), k, d) for rows that all belong to branch b."""
        br = self.law.branches[b]
        return self.u[rows, None, None] * br.scales[None] * self.theta[rows, None, :]

    def sample(self, idx):
        b = int(self.branch[idx])
        br = self.law.branches[b]
        vals = self.values(np.array([idx]), b)[0]
        return PilingSample(b, br.anchor, float(self.u[idx]), self.theta[idx].copy(),
                            br.offsets.copy(), vals)

    def _by_branch(self):
        for b in range(len(self.law.branches)):
            rows = np.flatnonzero(self.branch == b)
            if rows.size:
                yield b, rows

    def norms_min(self):
        """L = min finite-entry norm, per row."""
        out = np.empty(len(self))
        for b, rows in self._by_branch():
            v = self.values(rows, b)
            out[rows] = np.sqrt(np.sum(v * v, axis=2)).min(axis=1)
        return out

    def negative_norms_min(self):
        """Smallest norm over negative offsets (inf when there are none)."""
        out = np.full(len(self), np.inf)
        for b, rows in self._by_branch():
            neg = self.law.branches[b].offsets < 0
            if neg.any():
                v = self.values(rows, b)[:, neg]
                out[rows] = np.sqrt(np.sum(v * v, axis=2)).min(axis=1)
        return out

    def cluster_sums(self, alpha):
        """sum_j xi(Q_j) per row, shape (m, d)."""
        d = self.theta.shape[1]
        out = np.zeros((len(self), d))
        for b, rows in self._by_branch():
            v = self.values(rows, b)
            norms = np.sqrt(np.sum(v * v, axis=2))
            q_norm = norms / norms.min(axis=1, keepdims=True)
            unit = v / norms[:, :, None]
            out[rows] = np.sum(q_norm[:, :, None] ** (-1.0 / float(alpha)) * unit, axis=1)
        return out


def sample_piling(law, rng, size=None):
    """Draw from the piling law.

    Args:
        law: a PilingLaw.
        rng: numpy Generator.
        size: None for a single PilingSample, else the number of rows of a
            PilingBatch.
    """
    m = 1 if size is None else int(size)
    branch = rng.choice(len(law.branches), size=m, p=law.probabilities)
    lo = np.array([to_float(b.u_lo) for b in law.branches])
    hi = np.array([to_float(b.u_hi) for b in law.branches])
    u = lo[branch] + (hi[branch] - lo[branch]) * rng.random(m)
    d = law.spec.dims
    theta = np.empty((m, d))
    for b, br in enumerate(law.branches):
        rows = np.flatnonzero(branch == b)
        if rows.size:
            theta[rows] = br.theta_law.sample(rng, u[rows])
    batch = PilingBatch(law, branch, u, theta)
    return batch.sample(0) if size is None else batch


# -- polar decomposition and the xi map -------------------------------------

@dataclass(frozen=True)
class PolarPair:
    """L = inf_j ||Z_j|| and Q = Z / L, stored with the anchor at offset 0."""

    L: float
    offsets: np.ndarray
    q: np.ndarray

    def reconstruct(self):
        return {int(j): self.L * v for j, v in zip(self.offsets, self.q)}

    def aligned_left(self):
        """The shift representative whose first finite entry sits at index 0."""
        return self.offsets - self.offsets.min(), self.q


def polar_decompose(sequence):
    """(L, Q) of a sequence given as a PilingSample or a dict offset -> vector."""
    if isinstance(sequence, PilingSample):
        offsets, values = sequence.offsets, sequence.values
    else:
        items = sorted((int(j), v) for j, v in sequence.items() if v is not INFINITY)
        if not items:
            raise ValueError("polar decomposition of an all-infinite sequence")
        offsets = np.array([j for j, _ in items], dtype=np.int64)
        values = np.array([np.atleast_1d(np.asarray(v, dtype=float)) for _, v in items])
    if len(offsets) == 0:
        raise ValueError("polar decomposition of an all-infinite sequence")
    norms = np.sqrt(np.sum(values * values, axis=1))
    L = float(norms.min())
    return PolarPair(L, np.asarray(offsets).copy(), values / L)


def xi_map(x, alpha):
    """x -> ||x||**(-1/alpha) * x / ||x||, with INFINITY -> 0."""
    if x is INFINITY:
        return 0.0
    v = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(np.isinf(v)):
        return np.zeros_like(v)
    r = float(np.sqrt(np.sum(v * v)))
    if r == 0:
        raise ValueError("xi map is undefined at 0")
    return r ** (-1.0 / float(alpha)) * v / r


# -- serialisation -----------------------------------------------------------

LAW_COLUMNS = ("anchor", "branch", "probability", "u_lo", "u_hi", "offset",
               "coefficient", "factor", "theta_law")


def law_rows(law):
    """One row per (branch, finite entry); exact values as strings."""
    rows = []
    for b in law.branches:
        for e in b.entries:
            rows.append({
                "anchor": str(b.anchor), "branch": b.label,
                "probability": fmt_exact(b.probability),
                "u_lo": fmt_exact(b.u_lo), "u_hi": fmt_exact(b.u_hi),
                "offset": str(e.offset), "coefficient": e.coefficient_text(),
                "factor": fmt_exact(e.factor), "theta_law": b.theta_law.describe(),
            })
    return rows
