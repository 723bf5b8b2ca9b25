"""Limit objects: the clustered stable Levy process, its excursions, and the
pre-limit partial sums they are compared with.

The Levy process is built as a LePage series: unit-rate Poisson arrivals
Gamma_1 < Gamma_2 < ..., U_i = Gamma_i / theta, iid uniform times T_i and iid
cluster marks Q~_i, with jump U_i^{-1/alpha} * sum_j xi(Q~_{i,j}).
"""
from dataclasses import dataclass
from math import floor

import numpy as np
from scipy import stats

from .dynamics import orbit_values, sample_stationary
from .exact import to_float
from .observable import compute_a_n, observe
from .piling import polar_decompose, sample_piling, xi_map

ARRIVAL_CHUNK = 64


class InsufficientSamples(ValueError):
    pass


# -- cluster marks -----------------------------------------------------------

@dataclass(frozen=True)
class QTilde:
    """Shift class of the normalised pile, stored by its leftmost-aligned member.

    offsets start at 0; q has one row per finite entry and min row norm 1.
    """

    offsets: np.ndarray
    q: np.ndarray

    def xi_values(self, alpha):
        return np.stack([xi_map(v, alpha) for v in self.q])

    def cluster_sum(self, alpha):
        return self.xi_values(alpha).sum(axis=0)

    def as_dict(self):
        return {int(j): v for j, v in zip(self.offsets, self.q)}


def _qtilde_of(sample):
    pair = polar_decompose(sample)
    offsets, q = pair.aligned_left()
    return QTilde(offsets, q)


def sample_qtilde(law, rng, size=None):
    """Draw Q~ from a full piling sample; the radial part L is discarded.

    Returns a QTilde, or a list of them when `size` is given.
    """
    if size is None:
        return _qtilde_of(sample_piling(law, rng))
    batch = sample_piling(law, rng, size)
    return [_qtilde_of(batch.sample(k)) for k in range(size)]


def max_cluster_sum(law):
    """Bound on ||sum_j xi(Q~_j)||: every entry has norm >= 1, so each term <= 1."""
    return max(len(b.entries) for b in law.branches)


# -- Levy series -------------------------------------------------------------

@dataclass
class LevySeries:
    """Retained atoms of the LePage series, ordered by arrival."""

    theta: float
    alpha: float
    eps: float
    T: np.ndarray          # (m,)
    gamma: np.ndarray      # (m,)
    clusters: list         # xi-mapped cluster sequences, each (k_i, d), leftmost aligned
    dims: int = 1

    @property
    def U(self):
        return self.gamma / self.theta

    @property
    def size(self):
        return len(self.T)

    @property
    def jumps(self):
        """J_i = U_i^{-1/alpha} * sum_j Q_{i,j}, shape (m, d)."""
        if not self.clusters:
            return np.zeros((0, self.dims))
        sums = np.stack([c.sum(axis=0) for c in self.clusters])
        return self.U[:, None] ** (-1.0 / self.alpha) * sums

    @classmethod
    def from_atoms(cls, alpha, theta, T, U, clusters, eps=0.0):
        """Series with prescribed atoms; clusters are xi-mapped sequences."""
        clusters = [np.atleast_2d(np.asarray(c, dtype=float).reshape(len(c), -1))
                    for c in clusters]
        U = np.asarray(U, dtype=float)
        order = np.argsort(U)
        dims = clusters[0].shape[1] if clusters else 1
        return cls(float(theta), float(alpha), float(eps), np.asarray(T, dtype=float)[order],
                   U[order] * theta, [clusters[k] for k in order], dims)


def sample_levy(law, theta, alpha, eps, rng):
    """LePage series truncated at U^{-1/alpha} * max|sum Q| < eps.

    Arrivals, times and marks come from three child streams seeded by `rng`,
    each consumed in fixed chunks, so two calls with the same generator state
    and different eps share their leading atoms exactly.
    """
    theta, alpha = float(to_float(theta)), float(to_float(alpha))
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if eps <= 0:
        raise ValueError("eps must be positive")
    # child streams are seeded from draws of `rng` (spawning would mutate a
    # shared SeedSequence and break the coupling across calls)
    arrivals, times, marks = (np.random.default_rng(int(k))
                              for k in rng.integers(0, 2 ** 63, size=3))
    bound = max_cluster_sum(law)
    gam, T, clusters = [], [], []
    last = 0.0
    while True:
        g = last + np.cumsum(arrivals.exponential(size=ARRIVAL_CHUNK))
        t = times.random(ARRIVAL_CHUNK)
        batch = sample_piling(law, marks, ARRIVAL_CHUNK)
        last = g[-1]
        keep = (g / theta) ** (-1.0 / alpha) * bound >= eps
        k = int(keep.sum())  # keep is a prefix since g is increasing
        gam.append(g[:k])
        T.append(t[:k])
        clusters.extend(_qtilde_of(batch.sample(r)).xi_values(alpha) for r in range(k))
        if k < ARRIVAL_CHUNK:
            break
    return LevySeries(theta, alpha, float(eps), np.concatenate(T), np.concatenate(gam),
                      clusters, law.spec.dims)


def evaluate_V(series, t):
    """V(t) = sum of the jumps with T_i <= t, shape (d,)."""
    return series.jumps[series.T <= t].sum(axis=0)


def _v_before(series, i):
    return series.jumps[series.T < series.T[i]].sum(axis=0)


def evaluate_excursion(series, i, t):
    """Excursion of atom i at t in [0,1].

    V(T_i^-) + U_i^{-1/alpha} * sum_{0 <= j <= floor(tan(pi (t - 1/2)))} Q_{i,j},
    with t = 0 giving V(T_i^-) and t = 1 giving V(T_i).
    """
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"excursion time must lie in [0, 1], got {t}")
    c = series.clusters[i]
    if t == 0.0:
        upto = 0
    elif t == 1.0:
        upto = len(c)
    else:
        upto = max(0, min(len(c), floor(np.tan(np.pi * (t - 0.5))) + 1))
    scale = series.U[i] ** (-1.0 / series.alpha)
    return _v_before(series, i) + scale * c[:upto].sum(axis=0)


def path_table(series, grid):
    """Rows (t, V(t)) for CSV output (first coordinate of V in 2D as well)."""
    return [(float(t), *np.atleast_1d(evaluate_V(series, t))) for t in grid]


def excursion_table(series, i, grid):
    return [(float(t), *np.atleast_1d(evaluate_excursion(series, i, t))) for t in grid]


# -- partial sums ------------------------------------------------------------

@dataclass(frozen=True)
class PartialSumPath:
    n: int
    t: np.ndarray
    values: np.ndarray   # (len(t), d)
    max_increment: float
    seed_id: object = None


def _observations(spec, n, rng):
    pts = orbit_values(sample_stationary(spec.map, rng, n), n)
    mag, _, direction = observe(spec, pts)
    return mag[:, None] * direction


def simulate_partial_sum(spec, n, grid, rng, thresholds=None, seed_id=None):
    """S_n(t) = (1/a_n) sum_{i < floor(n t)} X_i on `grid` along one stationary orbit.

    No centring is applied (alpha < 1).
    """
    thresholds = thresholds or compute_a_n(spec)
    a_n = thresholds.a_n(n)
    X = _observations(spec, n, rng) / a_n
    csum = np.vstack([np.zeros((1, spec.dims)), np.cumsum(X, axis=0)])
    grid = np.asarray(grid, dtype=float)
    idx = np.floor(n * grid + 1e-9).astype(int)
    norms = np.sqrt(np.sum(X * X, axis=1))
    return PartialSumPath(n, grid, csum[idx], float(norms.max()), seed_id)


def partial_sum_endpoints(spec, n, paths, rng, thresholds=None):
    """S_n(1) and the largest scaled increment for `paths` independent orbits.

    Returns:
        (endpoints (paths, d), max increments (paths,)).
    """
    thresholds = thresholds or compute_a_n(spec)
    a_n = thresholds.a_n(n)
    ends = np.empty((paths, spec.dims))
    peaks = np.empty(paths)
    for p in range(paths):
        X = _observations(spec, n, rng) / a_n
        ends[p] = X.sum(axis=0)
        peaks[p] = np.sqrt(np.sum(X * X, axis=1)).max()
    return ends, peaks


def frechet_median(theta, alpha_d):
    """Median of the limit of max_i ||X_i|| / a_n: P(M <= y) = exp(-theta y^{-alpha d})."""
    return (float(theta) / np.log(2.0)) ** (1.0 / float(alpha_d))


# -- comparison --------------------------------------------------------------

@dataclass(frozen=True)
class KSResult:
    statistic: float
    pvalue: float
    critical: float
    passed: bool


def ks_critical(n, m, c_alpha=1.63):
    """Asymptotic two-sample KS critical value (1.63 is the 1% level)."""
    return c_alpha * np.sqrt((n + m) / (n * m))


def compare_marginals(samples_a, samples_b, threshold=None, min_samples=1000):
    """Two-sample KS on arctan-transformed values.

    Args:
        threshold: decision level for the statistic; the 1% critical value
            when omitted.
    """
    a = np.arctan(np.asarray(samples_a, dtype=float).ravel())
    b = np.arctan(np.asarray(samples_b, dtype=float).ravel())
    if len(a) < min_samples or len(b) < min_samples:
        raise InsufficientSamples(f"need at least {min_samples} samples per side")
    res = stats.ks_2samp(a, b)
    crit = ks_critical(len(a), len(b)) if threshold is None else float(threshold)
    return KSResult(float(res.statistic), float(res.pvalue), crit, bool(res.statistic <= crit))
