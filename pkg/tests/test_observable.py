import numpy as np
import pytest
import sympy as sp

from corrmax.catalog import ex_4_2_spec
from corrmax.dynamics import RationalSeed, SqrtSeed, TorusMap, circle_distance
from corrmax.observable import (INFINITY, DivergentSeriesError, InfiniteValueError,
                                MaximalSetSpec, MixedTailIndexError, SpecError, compute_a_n,
                                default_truncation, evaluate_observable, exceedance_radius,
                                h_eval, h_inverse, observe)

R = sp.Rational


def test_circle_distance():
    assert circle_distance([0.1], [0.9]) == pytest.approx(0.2)
    assert circle_distance([0.3, 0.4], [0.3, 0.4]) == 0
    assert circle_distance([0.95, 0.1], [0.05, 0.2]) == pytest.approx(np.sqrt(0.02))


def test_profile_of_equal_weights(examples):
    spec = examples["ex-3-4"].spec
    assert h_eval(spec, 1, 0.1) == pytest.approx(100.0)
    assert h_eval(spec, 1, 0) is INFINITY


def test_profile_inverse_pair(examples, rng):
    spec = examples["ex-3-6"].spec
    for t in rng.uniform(1e-6, 0.01, 1000):
        assert h_inverse(spec, 2, h_eval(spec, 2, t)) == pytest.approx(t, rel=1e-12)
    assert h_inverse(spec, 2, 4.0) == pytest.approx(3 * 4.0 ** -0.5)


def test_observable_values(examples):
    spec = examples["ex-3-4"].spec
    z = spec.centers[0][0]
    v = evaluate_observable(spec, [z + 0.01])
    assert v.magnitude == pytest.approx(1e4) and v.center == 1 and v.direction[0] == 1
    assert evaluate_observable(spec, [z]).magnitude is INFINITY
    out = evaluate_observable(spec, [0.5])
    assert out.magnitude == 0 and out.center is None


def test_vectorised_observable_matches_pointwise(examples, rng):
    spec = examples["ex-3-10"].spec
    pts = np.concatenate([rng.random((200, 2)),
                          spec.centers[1] + rng.uniform(-0.01, 0.01, (200, 2))]) % 1.0
    mag, center, direction = observe(spec, pts)
    for k in range(0, 400, 37):
        v = evaluate_observable(spec, pts[k])
        assert mag[k] == pytest.approx(v.magnitude)
        assert center[k] == (v.center or 0)


def test_infinity_refuses_arithmetic():
    assert INFINITY > 1e308 and not INFINITY < 3
    with pytest.raises(InfiniteValueError):
        INFINITY + 1
    with pytest.raises(InfiniteValueError):
        2 * INFINITY


def test_scaling_constants(examples):
    assert compute_a_n(examples["ex-3-4"].spec).coefficient == 36
    assert compute_a_n(examples["ex-3-6"].spec).coefficient == 100
    assert sp.simplify(compute_a_n(examples["ex-4-2"].spec).coefficient - 24 - 16 * sp.sqrt(2)) == 0
    assert compute_a_n(examples["ex-3-10"].spec).coefficient == 289 * sp.pi ** 2
    assert compute_a_n(examples["ex-3-10"].spec, "unit").coefficient == 289


def test_exceedance_radii(examples):
    spec = examples["ex-3-4"].spec
    for n in (10, 1000):
        assert exceedance_radius(spec, 1, n) == pytest.approx(1 / (6 * n))
    assert exceedance_radius(spec, 1, 50) / exceedance_radius(spec, 1, 100) == pytest.approx(2)
    assert exceedance_radius(examples["ex-3-6"].spec, 2, 10) == pytest.approx(3 / 100)


def test_tail_index_is_alpha_times_d(examples):
    assert compute_a_n(examples["ex-3-10"].spec).index == R(1, 2)
    assert compute_a_n(examples["ex-3-4"].spec).power == 2


def test_mixed_alpha_rejected_citing_degeneracy():
    with pytest.raises(MixedTailIndexError, match="degenerat"):
        MaximalSetSpec(TorusMap((2,)), (SqrtSeed(2, 1, 16),), (0, 1), (1, 1), (R(1, 2), R(1, 4)))


@pytest.mark.parametrize("kwargs, match", [
    (dict(offsets=(1, 2)), "m_1"),
    (dict(offsets=(0, 0)), "increasing"),
    (dict(weights=(1, -1)), "positive weight"),
    (dict(alpha=R(3, 2)), "alpha"),
    (dict(mode="weird"), "mode"),
])
def test_spec_validation(kwargs, match):
    base = dict(map=TorusMap((2,)), zeta=(SqrtSeed(2, 1, 16),), offsets=(0, 1), weights=(1, 1),
                alpha=R(1, 2))
    base.update(kwargs)
    with pytest.raises(SpecError, match=match):
        MaximalSetSpec(**base)


def test_periodic_validation():
    tmap = TorusMap((2, 3))
    zeta = (RationalSeed(1, 7), RationalSeed(0, 1))
    MaximalSetSpec(tmap, zeta, (0, 1), (1, 256), R(1, 4), mode="periodic", period=3)
    with pytest.raises(SpecError, match="prime"):
        MaximalSetSpec(tmap, zeta, (0, 1), (1, 256), R(1, 4), mode="periodic", period=4)
    with pytest.raises(SpecError, match="f\\^5"):
        MaximalSetSpec(tmap, zeta, (0, 1), (1, 256), R(1, 4), mode="periodic", period=5)
    with pytest.raises(SpecError, match="not periodic"):
        MaximalSetSpec(tmap, (SqrtSeed(2), RationalSeed(0, 1)), (0, 1), (1, 1), R(1, 4),
                       mode="periodic", period=3)


def test_coinciding_centres_rejected():
    with pytest.raises(SpecError, match="distinct"):
        MaximalSetSpec(TorusMap((2,)), (RationalSeed(1, 3),), (0, 2), (1, 1), R(1, 2))


def test_overlapping_explicit_radii_rejected():
    with pytest.raises(SpecError, match="overlap"):
        MaximalSetSpec(TorusMap((2,)), (SqrtSeed(2, 1, 16),), (0, 1), (1, 1), R(1, 2),
                       radii=(0.05, 0.05))


def test_countable_family(examples):
    spec = ex_4_2_spec(10)
    assert spec.size == default_truncation(10 ** 4) == 10
    assert spec.radii is None  # f^{3^k}(zeta) crowds zeta beyond double precision
    assert sp.simplify(spec.tail_mass() - 1 / (1 - 1 / sp.sqrt(2))) == 0
    with pytest.raises(SpecError, match="analytic"):
        spec.require_radii()


def test_divergent_countable_family():
    from corrmax.observable import K, CountableRule, countable_spec
    from corrmax.dynamics import LacunarySeed
    rule = CountableRule(lambda i: 0 if i == 1 else 3 ** (i - 1), sp.Integer(1) + 0 * K)
    spec = countable_spec(TorusMap((3,)), (LacunarySeed(),), rule, R(1, 2), 3)
    with pytest.raises(DivergentSeriesError):
        spec.tail_mass()
