import numpy as np
import pytest
import sympy as sp

from corrmax.catalog import EX_4_2_THETA, AnchorTerms, get_example
from corrmax.dynamics import SqrtSeed, TorusMap
from corrmax.empirics import (InsufficientExceedances, NotNestedError, ScanConfig,
                              dependence_bound_report, derive_bookkeeping,
                              empirical_piling_stats, estimate_extremal_index,
                              exceedance_radii, geometric_extremal_index, scan_exceedances,
                              stratified_points, tail_check, theoretical_extremal_index)
from corrmax.observable import MaximalSetSpec, compute_a_n
from corrmax.piling import build_piling_law

R = sp.Rational


@pytest.mark.parametrize("key, value", [("ex-3-4", R(3, 4)), ("ex-3-6", R(37, 40)),
                                        ("ex-3-10", R(16, 17)), ("ex-3-14", R(1370, 1377))])
def test_closed_form_extremal_index(examples, key, value):
    e = examples[key]
    assert theoretical_extremal_index(e.spec, e.q_n, e.bookkeeping) == value


def test_countable_extremal_index(examples):
    e = examples["ex-4-2"]
    assert abs(theoretical_extremal_index(e.spec, None, e.bookkeeping) - EX_4_2_THETA) < 1e-6


def test_nested_rule_and_geometry(examples):
    # the literal pre-image rule and the exact geometric limit agree with each other
    assert theoretical_extremal_index(examples["ex-3-4"].spec, 3) == R(3, 4)
    assert theoretical_extremal_index(examples["ex-3-10"].spec, 1) == R(16, 17)
    assert theoretical_extremal_index(examples["ex-3-14"].spec, 4) == R(430, 459)
    assert geometric_extremal_index(examples["ex-3-6"].spec, 3) == pytest.approx(0.75)
    assert geometric_extremal_index(examples["ex-3-14"].spec, 4) == pytest.approx(430 / 459, abs=1e-6)
    assert derive_bookkeeping(examples["ex-3-10"].spec, 1) == (AnchorTerms(False, ()), AnchorTerms(True, ()))


def test_partially_overlapping_preimages_are_refused():
    # relative semi-axes (5/4, 5/6): the pre-image crosses the unit ball
    spec = MaximalSetSpec(TorusMap((2, 3)), (SqrtSeed(2, 1, 2),) * 2, (0, 1), (1, R(5, 2) ** 4),
                          R(1, 4))
    with pytest.raises(NotNestedError):
        derive_bookkeeping(spec, 1)


def test_single_centre_has_no_clustering():
    spec = MaximalSetSpec(TorusMap((2,)), (SqrtSeed(2, 1, 16),), (0,), (1,), R(1, 2))
    assert theoretical_extremal_index(spec, 5) == 1
    assert geometric_extremal_index(spec, 5) == 1.0


def test_ratio_estimator_on_equal_weights(examples, rng):
    e = examples["ex-3-4"]
    est = estimate_extremal_index(e.spec, 10 ** 3, 3, 2 * 10 ** 6, rng)
    assert abs(est.theta_hat - 0.75) <= max(0.02, 3 * est.se)
    assert est.hits > 1000


def test_ratio_estimator_without_hits(examples, rng):
    with pytest.raises(InsufficientExceedances):
        estimate_extremal_index(examples["ex-3-4"].spec, 10 ** 9, 3, 1000, rng)


def test_scan_config_validation():
    cfg = ScanConfig(n=10000, q_n=3)
    assert cfg.k_n == 100 and cfg.r_n == 100
    with pytest.raises(ValueError):
        ScanConfig(n=100, k_n=50, q_n=3)


def test_scan_is_reproducible_and_counts_exceedances(examples):
    spec = examples["ex-3-4"].spec
    cfg = ScanConfig(n=2000, trials=300, q_n=3)
    a = list(scan_exceedances(spec, cfg, np.random.default_rng(7)))
    b = list(scan_exceedances(spec, cfg, np.random.default_rng(7)))
    assert [(c.trial, c.time) for c in a] == [(c.trial, c.time) for c in b]
    # expected count per orbit is n mu(U_n) = n * 6 u^{-1/2} = 1 at tau = 1
    per_orbit = len(a) / cfg.trials
    assert abs(per_orbit - 1.0) < 4 * np.sqrt(1.0 / cfg.trials) * 1.5
    assert all(c.scaled[cfg.window] < 1.0 for c in a)
    runs = {(c.trial, c.run) for c in a}
    assert len(runs) == sum(c.run_start for c in a)


def test_scan_of_an_orbit_without_exceedances(examples):
    cfg = ScanConfig(n=50, trials=1, q_n=3, tau=1e-9)
    assert list(scan_exceedances(examples["ex-3-4"].spec, cfg, np.random.default_rng(1))) == []


def test_exceedance_radii_scale(examples):
    r1 = exceedance_radii(examples["ex-3-6"].spec, 1000)
    assert r1 == pytest.approx([1 / 10000, 3 / 10000, 1 / 10000])


def test_piling_statistics_small_budget(examples, rng):
    e = examples["ex-3-6"]
    st = empirical_piling_stats(e.spec, build_piling_law(e.spec), 10 ** 5, 1.0, 20000, 4, rng,
                                q_n=3)
    for row in st.anchor_rows + st.branch_rows:
        assert row.within(4)
    ratios = {r.quantity: r for r in st.ratio_rows}
    assert ratios["anchor 1 offset +3 ratio"].estimate == pytest.approx(8.0, rel=1e-6)
    assert ratios["anchor 2 offset -1 ratio"].estimate == pytest.approx(1.5, rel=1e-6)
    with pytest.raises(InsufficientExceedances):
        empirical_piling_stats(e.spec, build_piling_law(e.spec), 10 ** 5, 1.0, 10, 4, rng)


def test_tail_law_and_scaling(examples, rng):
    rows = tail_check(examples["ex-3-4"].spec, 10 ** 4, [1.0, 4.0], 10 ** 6, rng)
    assert abs(rows[0].rel_error) < 0.05
    assert rows[1].target / rows[0].target == pytest.approx(0.5)


def test_stratified_points_cover_the_square(rng):
    pts = stratified_points(2, 10000, rng)
    cells = np.floor(pts * 100).astype(int)
    assert len({tuple(c) for c in cells}) == 10000


def test_dependence_bounds():
    rows, ok = dependence_bound_report([10 ** k for k in range(13)])
    assert ok
    assert rows[0].block_bound == 1 and rows[0].N == 0
    by_n = {r.n: r for r in rows}
    assert by_n[10 ** 6].block_bound < by_n[10 ** 3].block_bound
    assert by_n[10 ** 6].sum_bound < by_n[10 ** 3].sum_bound
    assert by_n[10 ** 6].block_bound == pytest.approx(29 * 3.0 ** -14)
