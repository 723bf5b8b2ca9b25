"""Extremes of observables whose maxima sit on one orbit of a torus map.

Modules:
    dynamics: exact digit-stream orbits of x -> beta x mod 1 on [0,1)^d.
    observable: maximal sets, the observable and its threshold family.
    piling: exact branch decomposition of the piling process and its sampler.
    empirics: Monte Carlo checks (extremal index, piling statistics, tails).
    limit: LePage sampler of the clustered stable limit and partial sums.
    cli: config-driven experiment runner.
"""
from .catalog import get_example, example_ids
from .dynamics import TorusMap, RationalSeed, SqrtSeed, LacunarySeed, seed_orbit, iterate
from .observable import MaximalSetSpec, compute_a_n, observe
from .piling import build_piling_law, sample_piling, polar_decompose
from .empirics import estimate_extremal_index, theoretical_extremal_index
from .limit import sample_levy, sample_qtilde, evaluate_V, evaluate_excursion

__version__ = "0.1.0"
