import numpy as np
import pytest
import sympy as sp

from corrmax.dynamics import SqrtSeed, TorusMap
from corrmax.limit import (InsufficientSamples, LevySeries, compare_marginals, evaluate_V,
                           evaluate_excursion, frechet_median, ks_critical, max_cluster_sum,
                           sample_levy, sample_qtilde, simulate_partial_sum)
from corrmax.observable import MaximalSetSpec
from corrmax.piling import build_piling_law

R = sp.Rational


@pytest.fixture(scope="module")
def law34():
    from corrmax.catalog import get_example
    return build_piling_law(get_example("ex-3-4").spec)


def test_qtilde_shapes_and_frequencies(law34, rng):
    qs = sample_qtilde(law34, rng, 30000)
    shapes = {}
    for q in qs:
        assert np.linalg.norm(q.q, axis=1).min() == pytest.approx(1.0)
        assert q.offsets[0] == 0
        key = tuple(zip(q.offsets.tolist(), np.round(q.q[:, 0], 9).tolist()))
        shapes[key] = shapes.get(key, 0) + 1
    assert set(shapes) == {((0, 1.0), (1, 2.0), (3, 8.0)), ((0, 1.0), (2, 4.0)), ((0, 1.0),)}
    for count in shapes.values():
        assert abs(count / 30000 - 1 / 3) < 4 * np.sqrt(2 / 9 / 30000)


def test_cluster_sums(law34, rng):
    sums = {round(float(q.cluster_sum(0.5)[0]), 12) for q in sample_qtilde(law34, rng, 200)}
    assert sums == {round(1 + 1 / 4 + 1 / 64, 12), round(1 + 1 / 16, 12), 1.0}


def test_qtilde_shape_shared_by_two_anchors(rng):
    from corrmax.catalog import get_example
    law = build_piling_law(get_example("ex-3-6").spec)
    qs = sample_qtilde(law, rng, 20000)
    # (3/2, 1, 12) at offsets (0, 1, 3) comes from branch IV of anchor 2 and,
    # after normalisation, from the single branch of anchor 1: 1/5 + 1/5
    hits = sum(1 for q in qs if q.offsets.tolist() == [0, 1, 3]
               and np.allclose(q.q[:, 0], [1.5, 1.0, 12.0]))
    assert abs(hits / 20000 - 0.4) < 4 * np.sqrt(0.24 / 20000)


def test_levy_series_invariants(law34):
    s = sample_levy(law34, 0.75, 0.5, 1e-3, np.random.default_rng(3))
    assert np.all(np.diff(s.gamma) > 0)
    assert np.all(s.U ** -2 * max_cluster_sum(law34) >= 1e-3)
    assert np.all((s.T >= 0) & (s.T <= 1))
    assert evaluate_V(s, 0.0)[0] == 0.0 or np.all(s.T > 0)


def test_poisson_count_below_one(law34):
    seeds = np.random.SeedSequence(11).spawn(20000)
    counts = [np.sum(sample_levy(law34, 0.75, 0.5, 0.5, np.random.default_rng(s)).U <= 1)
              for s in seeds]
    assert abs(np.mean(counts) - 0.75) < 3 * np.sqrt(0.75 / 20000)


def test_truncation_coupling_shares_atoms(law34):
    a = sample_levy(law34, 0.75, 0.5, 1e-2, np.random.default_rng(5))
    b = sample_levy(law34, 0.75, 0.5, 5e-3, np.random.default_rng(5))
    assert b.size >= a.size
    assert np.array_equal(a.gamma, b.gamma[:a.size]) and np.array_equal(a.T, b.T[:a.size])
    new = np.linalg.norm(b.jumps[a.size:], axis=1)
    assert np.all(new < 1e-2)
    gap = abs(evaluate_V(b, 1.0)[0] - evaluate_V(a, 1.0)[0])
    assert gap <= 1e-2 * (b.size - a.size) + 1e-15


def test_excursion_endpoints(law34):
    s = sample_levy(law34, 0.75, 0.5, 1e-3, np.random.default_rng(9))
    for i in range(s.size):
        before = s.jumps[s.T < s.T[i]].sum(axis=0)
        assert np.allclose(evaluate_excursion(s, i, 0.0), before, rtol=1e-12)
        assert np.allclose(evaluate_excursion(s, i, 1.0), evaluate_V(s, s.T[i]), rtol=1e-12)
    with pytest.raises(ValueError):
        evaluate_excursion(s, 0, 1.5)


def test_single_atom_excursion():
    s = LevySeries.from_atoms(0.5, 0.75, [0.4], [0.25], [[1.0, 0.25]])
    # U^{-1/alpha} = 16; floor(tan(pi (t - 1/2))) = 0 for t in [1/2, 3/4)
    assert evaluate_excursion(s, 0, 0.6)[0] == pytest.approx(16.0)
    assert evaluate_excursion(s, 0, 0.3)[0] == 0.0
    assert evaluate_excursion(s, 0, 0.9)[0] == pytest.approx(20.0)
    assert evaluate_V(s, 0.39)[0] == 0 and evaluate_V(s, 0.4)[0] == pytest.approx(20.0)


def test_no_clustering_gives_unit_cluster_sums():
    spec = MaximalSetSpec(TorusMap((2,)), (SqrtSeed(2, 1, 16),), (0,), (1,), R(1, 2))
    law = build_piling_law(spec)
    s = sample_levy(law, 1.0, 0.5, 1e-3, np.random.default_rng(2))
    assert np.allclose(s.jumps[:, 0], s.U ** -2)


def test_sampler_rejects_bad_parameters(law34, rng):
    with pytest.raises(ValueError):
        sample_levy(law34, 0.75, 1.5, 1e-3, rng)
    with pytest.raises(ValueError):
        sample_levy(law34, 0.75, 0.5, 0.0, rng)


def test_partial_sum_path(examples, rng):
    spec = examples["ex-3-4"].spec
    grid = np.linspace(0, 1, 11)
    p = simulate_partial_sum(spec, 5000, grid, rng)
    assert p.values[0, 0] == 0.0
    assert np.all(np.diff(p.values[:, 0]) >= 0)  # unsigned scalar observable
    assert p.max_increment <= p.values[-1, 0] + 1e-12


def test_ks_comparisons(law34):
    x = np.random.default_rng(1).standard_cauchy(2000)
    assert compare_marginals(x, x).statistic == 0
    with pytest.raises(InsufficientSamples):
        compare_marginals(x[:10], x)
    v = [[evaluate_V(sample_levy(law34, 0.75, 0.5, 1e-2, np.random.default_rng(s)), 1.0)[0]
          for s in np.random.SeedSequence(k).spawn(2000)] for k in (1, 2)]
    res = compare_marginals(*v)
    assert res.passed and res.critical == pytest.approx(ks_critical(2000, 2000))


def test_frechet_median():
    assert frechet_median(0.75, 0.5) == pytest.approx((0.75 / np.log(2)) ** 2)
