"""Monte Carlo verification: exceedance scans, extremal index, piling statistics.

Three samplers are used, each exact for the linear maps at hand:

* long stationary orbits built from iid digit streams (scan_exceedances);
* uniform starts k / 2**53 pushed forward with integer arithmetic
  (estimate_extremal_index, which only needs a few forward steps);
* windows around a conditioning exceedance (sample_exceedance_windows): a point
  x = xi_i + delta drawn uniformly from the exceedance set, its forward orbit
  read off the exact identity f^t(x) = f^t(xi_i) + beta^t delta (mod 1), and its
  past drawn as a uniformly random chain of pre-images.
"""
from dataclasses import dataclass, field
from math import ceil, log
from typing import Optional

import numpy as np
import sympy as sp

from .dynamics import dyadic_step, dyadic_to_float, sample_dyadic, sample_stationary, orbit_values
from .exact import to_float
from .observable import compute_a_n, h_inverse, observe
from .piling import compute_weights, weight_ratio


class InsufficientExceedances(RuntimeError):
    pass


# -- configuration and records -----------------------------------------------

@dataclass(frozen=True)
class ScanConfig:
    """Time horizon, level and blocking sequences for an exceedance scan.

    Only q_n and r_n are used operationally; k_n and t_n are carried so that a
    configuration documents a full blocking schedule.
    """

    n: int
    tau: float = 1.0
    trials: int = 1
    k_n: Optional[int] = None
    t_n: int = 0
    q_n: int = 1
    window: int = 4

    def __post_init__(self):
        if self.k_n is None:
            object.__setattr__(self, "k_n", max(1, int(round(self.n ** 0.5))))
        if not self.q_n < self.r_n:
            raise ValueError(f"need q_n < r_n, got q_n={self.q_n}, r_n={self.r_n}")

    @property
    def r_n(self):
        return self.n // self.k_n


@dataclass(frozen=True)
class ExceedanceCluster:
    trial: int
    time: int
    center: int
    offsets: np.ndarray
    scaled: np.ndarray      # u_n^{-1}(||X_{t+j}||) / tau, inf where X = 0
    direction: np.ndarray   # (2W+1, d)
    block: int
    run: int                # q_n-run (cluster) id within the trial
    run_start: bool         # first exceedance of its run


def scan_exceedances(spec, config, rng, thresholds=None):
    """Yield one ExceedanceCluster per exceedance on stationary orbits.

    Each trial is an orbit of length n (plus a window of context on both
    sides); runs are separated by more than q_n non-exceedances.
    """
    thresholds = thresholds or compute_a_n(spec)
    u = thresholds.u(config.n, config.tau)
    w = config.window
    offsets = np.arange(-w, w + 1)
    for trial in range(config.trials):
        orbit = sample_stationary(spec.map, rng, config.n + 2 * w)
        pts = orbit_values(orbit, config.n + 2 * w)
        mag, center, direction = observe(spec, pts)
        scaled = thresholds.u_inv(config.n, mag) / config.tau
        times = np.flatnonzero(mag[w:w + config.n] > u)
        run, last = -1, None
        for t in times:
            starts = last is None or t - last > config.q_n
            run += int(starts)
            last = t
            sl = slice(t, t + 2 * w + 1)
            yield ExceedanceCluster(trial, int(t), int(center[t + w]), offsets,
                                    scaled[sl].copy(), direction[sl].copy(),
                                    int(t // config.r_n), run, bool(starts))


# -- extremal index ----------------------------------------------------------

@dataclass(frozen=True)
class EIEstimate:
    hits: int
    clean: int
    theta_hat: float
    se: float
    trials: int = 0
    q_n: int = 0


def _in_exceedance_set(spec, pts, radii):
    inside = np.zeros(len(pts), dtype=bool)
    for c, r in zip(spec.centers, radii):
        delta = np.abs(pts - c)
        delta = np.minimum(delta, 1.0 - delta)
        inside |= np.sum(delta * delta, axis=1) < r * r
    return inside


def exceedance_radii(spec, n, tau=1.0, thresholds=None):
    thresholds = thresholds or compute_a_n(spec)
    u = thresholds.u(n, tau)
    return np.array([h_inverse(spec, i, u) for i in range(1, spec.size + 1)])


def estimate_extremal_index(spec, n, q_n, trials, rng, tau=1.0, thresholds=None,
                            chunk=2 ** 22):
    """Ratio estimator of mu(U_n^(q)) / mu(U_n) from uniform starts.

    ||X_0|| > u_n(tau) is tested as x in one of the exceedance balls (h_i is
    decreasing, so the two are equivalent); each hit is pushed forward q_n
    steps with exact integer arithmetic and counted clean if none of
    f(x), ..., f^q(x) is an exceedance.
    """
    radii = exceedance_radii(spec, n, tau, thresholds)
    hits = clean = 0
    done = 0
    while done < trials:
        m = min(chunk, trials - done)
        k = sample_dyadic(spec.map, rng, m)
        inside = _in_exceedance_set(spec, dyadic_to_float(k), radii)
        k = k[inside]
        ok = np.ones(len(k), dtype=bool)
        for _ in range(q_n):
            k = dyadic_step(spec.map, k)
            ok &= ~_in_exceedance_set(spec, dyadic_to_float(k), radii)
        hits += int(inside.sum())
        clean += int(ok.sum())
        done += m
    if hits == 0:
        raise InsufficientExceedances("insufficient exceedances: no hit of U_n in the sample")
    theta = clean / hits
    return EIEstimate(hits, clean, theta, float(np.sqrt(theta * (1 - theta) / hits)), trials, q_n)


def _volumes(spec):
    ad = spec.alpha * spec.dims
    return [D * c ** ad for D, c in zip(spec.densities, spec.weights)]


def closed_form_extremal_index(spec, bookkeeping):
    """sum_i include_i (vol_i - sum kappa vol_l) / sum_i vol_i, exact.

    `bookkeeping` is a sequence of catalog.AnchorTerms, one per centre.
    """
    vol = _volumes(spec)
    num = sp.Integer(0)
    for i, terms in enumerate(bookkeeping):
        if terms.include:
            num += vol[i] - sum(kappa * vol[l - 1] for l, kappa in terms.subtract)
    return sp.nsimplify(sp.simplify(num / sum(vol)))


def _forward_visits(spec, i, q_n):
    """(l, g): f^g(xi_i) = xi_l for 1 <= g <= q_n."""
    out = []
    for l in range(1, spec.size + 1):
        g = spec.offsets[l - 1] - spec.offsets[i - 1]
        if spec.mode == "periodic":
            while g < 1:
                g += spec.period
            while g <= q_n:
                out.append((l, g))
                g += spec.period
        elif 1 <= g <= q_n:
            out.append((l, g))
    return out


def _preimage_axes(spec, i, l, g):
    """Semi-axes of f^{-g}(B_l) near xi_i, in units of the radius of B_i."""
    r = to_float(weight_ratio(spec, l, i))
    return np.array([r * float(b) ** -g for b in spec.map.slopes])


class NotNestedError(ValueError):
    pass


def derive_bookkeeping(spec, q_n):
    """Successor table from the pre-image geometry.

    A ball swallowed by the pre-image of a later ball never contributes. If the
    pre-images inside ball i are nested, the largest is subtracted with weight
    1 / |det Df^g|. Partially overlapping or non-nested configurations raise
    NotNestedError (use geometric_extremal_index for those).
    """
    from .catalog import AnchorTerms
    rows = []
    for i in range(1, spec.size + 1):
        visits = _forward_visits(spec, i, q_n)
        axes = [(l, g, _preimage_axes(spec, i, l, g)) for l, g in visits]
        if any(np.all(a >= 1) for _, _, a in axes):
            rows.append(AnchorTerms(False, ()))
            continue
        if any(np.any(a > 1) for _, _, a in axes):
            raise NotNestedError(f"a pre-image crosses the boundary of ball {i}")
        if not axes:
            rows.append(AnchorTerms(True, ()))
            continue
        big = max(axes, key=lambda t: tuple(t[2]))
        if not all(np.all(a <= big[2]) for _, _, a in axes):
            raise NotNestedError(f"pre-images inside ball {i} are not nested")
        l, g, _ = big
        rows.append(AnchorTerms(True, ((l, 1 / spec.map.jacobian(g)),)))
    return tuple(rows)


def theoretical_extremal_index(spec, q_n=None, bookkeeping=None, tol=1e-15):
    """Closed-form extremal index.

    Args:
        spec: the maximal set.
        q_n: run length; required when `bookkeeping` is not given.
        bookkeeping: successor table (tuple of AnchorTerms), or for a countable
            family a callable N -> table. Defaults to derive_bookkeeping.

    Returns:
        an exact sympy number, or a float for countable families. There the
        denominator is the full series sum_i D_i c_i^(alpha d) and subtracted
        terms are added until one falls below `tol`.
    """
    if spec.mode == "countable" and callable(bookkeeping):
        from .observable import countable_spec
        total = spec.tail_mass()
        removed, n_centres = sp.Integer(0), 2
        while True:
            sub = countable_spec(spec.map, spec.zeta, spec.countable, spec.alpha, n_centres)
            l, kappa = bookkeeping(n_centres)[n_centres - 2].subtract[0]
            term = kappa * _volumes(sub)[l - 1]
            removed += term
            if float(sp.N(term / total, 30)) < tol:
                return float(sp.N(1 - removed / total, 30))
            n_centres += 1
    if bookkeeping is None:
        if q_n is None:
            raise ValueError("q_n is needed to derive the successor table")
        bookkeeping = derive_bookkeeping(spec, q_n)
    return closed_form_extremal_index(spec, bookkeeping)


def geometric_extremal_index(spec, q_n, grid=2 ** 16):
    """Limit of mu(U_n^(q)) / mu(U_n) from the exact pre-image geometry.

    For each ball the fraction of points whose orbit re-enters some ball within
    q_n steps is the area of the union of the (centred, axis-aligned) pre-image
    ellipses inside the unit ball; in 2D this is a polar integral of the
    union's radial function.
    """
    vol = np.array([to_float(v) for v in _volumes(spec)])
    keep = np.empty(spec.size)
    phi = (np.arange(grid) + 0.5) * (2 * np.pi / grid)
    for i in range(1, spec.size + 1):
        axes = [_preimage_axes(spec, i, l, g) for l, g in _forward_visits(spec, i, q_n)]
        if not axes:
            keep[i - 1] = 1.0
        elif spec.dims == 1:
            keep[i - 1] = 1.0 - min(1.0, max(float(a[0]) for a in axes))
        else:
            rho = np.zeros(grid)
            for a, b in axes:
                rho = np.maximum(rho, 1.0 / np.sqrt((np.cos(phi) / a) ** 2 + (np.sin(phi) / b) ** 2))
            keep[i - 1] = 1.0 - float(np.mean(np.minimum(rho, 1.0) ** 2))
    return float(np.dot(vol, keep) / vol.sum())


# -- windows around a conditioning exceedance --------------------------------

@dataclass
class WindowSample:
    """Windows of the frequency-scaled process around an exceedance at time 0."""

    center: np.ndarray      # (m,) anchor ball, 1-based
    offsets: np.ndarray     # (2W+1,)
    scaled: np.ndarray      # (m, 2W+1), inf where the observable vanishes
    direction: np.ndarray   # (m, 2W+1, d)
    hit_center: np.ndarray  # (m, 2W+1), ball index per time, 0 outside

    @property
    def window(self):
        return (len(self.offsets) - 1) // 2

    def column(self, j):
        return self.window + j


def sample_exceedance_windows(spec, n, tau, count, window, rng, thresholds=None,
                              batch=2 ** 16):
    """Draw `count` windows conditioned on ||X_0|| > u_n(tau).

    Proposals put x uniformly in one of N equal boxes around the centres and
    are accepted when the observable at x exceeds the level, so the accepted
    x are Lebesgue-distributed on the exceedance set; ball frequencies are an
    outcome, not an input.
    """
    thresholds = thresholds or compute_a_n(spec)
    u = thresholds.u(n, tau)
    radii = exceedance_radii(spec, n, tau, thresholds)
    box = float(radii.max()) * (1 + 1e-9)
    betas = np.array(spec.map.slopes, dtype=float)
    if np.max(betas) ** window * box > 1e3:
        raise ValueError("window too wide for the exceedance radius at this n")
    d = spec.dims
    ahead = np.stack([np.stack([spec.orbit_point(spec.offsets[i] + t) for t in range(window + 1)])
                      for i in range(spec.size)])  # (N, W+1, d)
    chunks, have = [], 0
    while have < count:
        ball = rng.integers(0, spec.size, size=batch)
        delta = rng.uniform(-box, box, size=(batch, d))
        x0 = np.mod(spec.centers[ball] + delta, 1.0)
        mag0, _, _ = observe(spec, x0)
        acc = mag0 > u
        ball, delta = ball[acc], delta[acc]
        m = len(ball)
        pts = np.empty((m, 2 * window + 1, d))
        for t in range(window + 1):
            pts[:, window + t] = np.mod(ahead[ball, t] + delta * betas ** t, 1.0)
        x = pts[:, window]
        for k in range(1, window + 1):
            digits = np.stack([rng.integers(0, b, size=m) for b in spec.map.slopes], axis=1)
            x = (digits + x) / betas
            pts[:, window - k] = x
        chunks.append(pts)
        have += m
    pts = np.concatenate(chunks)[:count]
    mag, center, direction = observe(spec, pts.reshape(-1, d))
    shape = pts.shape[:2]
    scaled = (thresholds.u_inv(n, mag) / tau).reshape(shape)
    center = center.reshape(shape)
    return WindowSample(center[:, window].copy(), np.arange(-window, window + 1), scaled,
                        direction.reshape(pts.shape), center)


# -- empirical piling statistics --------------------------------------------

@dataclass(frozen=True)
class StatRow:
    quantity: str
    estimate: float
    exact: float
    se: float

    def within(self, k=3.0, floor=0.0):
        return abs(self.estimate - self.exact) <= max(k * self.se, floor)


@dataclass
class PilingStats:
    clusters: int
    anchor_rows: list = field(default_factory=list)
    branch_rows: list = field(default_factory=list)
    ratio_rows: list = field(default_factory=list)
    diagnostic_rows: list = field(default_factory=list)


def _binomial_row(name, hits, total, exact):
    p = hits / total if total else float("nan")
    se = float(np.sqrt(p * (1 - p) / total)) if total else float("nan")
    return StatRow(name, p, float(exact), se)


def empirical_piling_stats(spec, law, n, tau, clusters, window, rng, q_n=None,
                           thresholds=None):
    """Compare windows around exceedances with the compiled piling law.

    Anchors are the conditioning exceedances themselves, so ball i is the
    anchor with probability mu(B_i) / mu(U_n) in the limit. Reported:
      * anchor frequencies against p_i;
      * per anchor, the mass of each branch's U-interval against
        probability / p_i;
      * per anchor and finite offset j of the law, the mean of the measured
        ratio ||Y_j|| / ||Y_0|| against the law's coefficient (raised to the
        power d, since the frequency scale is distance**d);
      * diagnostics: the kept fraction under inf_{j<0} ||Y_j|| >= 1, the
        first-in-run anchor frequencies, and agreement between the observed
        negative entries and the law's u_min thresholds.
    """
    if clusters < 100:
        raise InsufficientExceedances("insufficient clusters requested")
    ws = sample_exceedance_windows(spec, n, tau, clusters, window, rng, thresholds)
    stats = PilingStats(clusters)
    weights = [to_float(p) for p in compute_weights(spec)]
    w0 = ws.column(0)
    U = ws.scaled[:, w0]
    d = spec.dims
    for i in range(1, spec.size + 1):
        stats.anchor_rows.append(_binomial_row(f"anchor {i}", int(np.sum(ws.center == i)),
                                               clusters, weights[i - 1] / sum(weights)))
    for i in range(1, spec.size + 1):
        mine = ws.center == i
        total = int(mine.sum())
        p_i = sum(to_float(b.probability) for b in law.anchor_branches(i))
        for b in law.anchor_branches(i):
            lo, hi = to_float(b.u_lo), to_float(b.u_hi)
            inside = mine & (U >= lo) & (U < hi if hi < 1 else U <= hi)
            stats.branch_rows.append(_binomial_row(
                f"anchor {i} branch {b.label} [{lo:.6g},{hi:.6g})", int(inside.sum()), total,
                to_float(b.probability) / p_i))
        seen = set()
        for b in law.anchor_branches(i):
            for e in b.entries:
                if e.offset == 0 or e.offset in seen or abs(e.offset) > window:
                    continue
                seen.add(e.offset)
                col = ws.column(e.offset)
                rows = mine & np.isfinite(ws.scaled[:, col]) & (ws.hit_center[:, col] == e.center)
                if not rows.any():
                    continue
                theta = ws.direction[rows, w0]
                theory = (np.sqrt(np.sum((theta * e.power.as_array()) ** 2, axis=1))
                          * to_float(e.factor)) ** d
                measured = ws.scaled[rows, col] / U[rows]
                rel = measured / theory - 1.0
                stats.ratio_rows.append(StatRow(
                    f"anchor {i} offset {e.offset:+d} ratio", float(np.mean(measured)),
                    float(np.mean(theory)), float(np.max(np.abs(rel)))))
    neg = ws.scaled[:, :w0]
    kept = np.all(neg >= 1.0, axis=1)
    stats.diagnostic_rows.append(StatRow("kept fraction inf_{j<0}|Y_j|>=1", float(kept.mean()),
                                         float("nan"), float(np.sqrt(kept.mean() * (1 - kept.mean()) / clusters))))
    q = q_n or window
    first = np.all(~(neg[:, -q:] < 1.0), axis=1) if q <= w0 else kept
    for i in range(1, spec.size + 1):
        stats.diagnostic_rows.append(_binomial_row(
            f"first-in-run anchor {i}", int(np.sum(first & (ws.center == i))), int(first.sum()),
            float("nan")))
    for i in range(1, spec.size + 1):
        mine = ws.center == i
        for b in law.anchor_branches(i):
            for e in b.negative_entries():
                col = ws.column(e.offset)
                if col < 0:
                    continue
                via = mine & (ws.hit_center[:, col] == e.center)
                big = via & (ws.scaled[:, col] >= 1.0)
                stats.diagnostic_rows.append(_binomial_row(
                    f"anchor {i} finite at {e.offset:+d}", int(via.sum()), int(mine.sum()),
                    float("nan")))
                stats.diagnostic_rows.append(_binomial_row(
                    f"anchor {i} norm>=1 at {e.offset:+d}", int(big.sum()), int(mine.sum()),
                    float("nan")))
                u_min = to_float(b.u_lo) if b.label == "IV" else float("nan")
                if np.isfinite(u_min) and via.any():
                    agree = np.mean((ws.scaled[via, col] >= 1.0) == (U[via] >= u_min))
                    stats.diagnostic_rows.append(StatRow(
                        f"anchor {i} offset {e.offset:+d} threshold agreement",
                        float(agree), 1.0, 0.0))
                if via.any():
                    kept_i = mine & kept
                    stats.diagnostic_rows.append(_binomial_row(
                        f"anchor {i} kept, finite at {e.offset:+d}",
                        int(np.sum(kept_i & via)), int(kept_i.sum()), float("nan")))
    return stats


# -- tail law ----------------------------------------------------------------

@dataclass(frozen=True)
class TailRow:
    n: int
    y: float
    estimate: float
    target: float
    rel_error: float
    se: float


def stratified_points(dims, samples, rng):
    """One uniform point per cell of an equal partition of [0,1)^d."""
    if dims == 1:
        return ((np.arange(samples) + rng.random(samples)) / samples)[:, None]
    side = int(ceil(samples ** 0.5))
    i, j = np.divmod(np.arange(side * side), side)
    return np.stack([(i + rng.random(side * side)) / side, (j + rng.random(side * side)) / side],
                    axis=1)


def tail_check(spec, n, y_grid, samples, rng, thresholds=None, stratified=True):
    """n * P(||X_0|| > y a_n) against y**(-alpha d).

    Points are stratified over [0,1)^d (one per cell), which keeps the
    estimator unbiased and removes most of the binomial noise; the reported
    SE is the binomial one and hence conservative.
    """
    thresholds = thresholds or compute_a_n(spec)
    pts = stratified_points(spec.dims, samples, rng) if stratified else \
        rng.random((samples, spec.dims))
    mag, _, _ = observe(spec, pts)
    a = thresholds.a_n(n)
    index = to_float(thresholds.index)
    rows = []
    for y in y_grid:
        p = float(np.mean(mag > y * a))
        target = float(y) ** -index
        est = n * p
        rows.append(TailRow(n, float(y), est, target, est / target - 1.0,
                            n * float(np.sqrt(p * (1 - p) / len(pts)))))
    return rows


# -- appendix bounds -----------------------------------------------------------

@dataclass(frozen=True)
class BoundRow:
    n: int
    N: int
    block_bound: float
    sum_bound: float


def dependence_bound_report(n_grid, rho0=1.0 / 3.0, rule=None):
    """(1 + 2N) rho^N and (4N + 1) n rho^N with N = rule(n) (default ceil(log n)).

    Returns the rows and a flag that is True when the block bound is strictly
    decreasing along the grid (after n = 1) and the summed bound decays: the
    ceiling in N makes the latter a sawtooth, so the check is that its maximum
    over the second half of the grid is below the maximum over the first half.
    """
    rule = rule or default_truncation_rule
    rows = []
    for n in n_grid:
        N = rule(n)
        rows.append(BoundRow(int(n), N, (1 + 2 * N) * rho0 ** N, (4 * N + 1) * n * rho0 ** N))
    body = [r for r in rows if r.n > 1]
    block_ok = all(b.block_bound < a.block_bound for a, b in zip(body, body[1:]))
    half = len(rows) // 2
    sum_ok = half > 0 and max(r.sum_bound for r in rows[half:]) < \
        max(r.sum_bound for r in rows[:half])
    return rows, bool(block_ok and sum_ok)


def default_truncation_rule(n):
    """N(n) = ceil(log n) with N(1) = 0."""
    return 0 if n <= 1 else int(ceil(log(n)))
