"""Registry of the worked examples: maps, maximal sets and closed-form data.

Each entry carries its MaximalSetSpec plus two pieces of closed-form bookkeeping
used elsewhere: the run length q_n for extremal-index estimation and the
successor table behind the closed-form extremal index (which ball pre-images
are removed from which ball, with what inverse-Jacobian factor).
"""
from dataclasses import dataclass
from typing import Callable, Optional, Union

import sympy as sp

from .dynamics import LacunarySeed, RationalSeed, SqrtSeed, TorusMap
from .observable import K, CountableRule, MaximalSetSpec, countable_spec, default_truncation

R = sp.Rational


@dataclass(frozen=True)
class AnchorTerms:
    """Contribution of one ball to mu(U_n^(q)): vol_i - sum kappa * vol_l.

    include=False drops the ball entirely (its points always re-exceed).
    """

    include: bool = True
    subtract: tuple = ()  # ((l, kappa), ...), l 1-based


@dataclass(frozen=True)
class ExampleEntry:
    key: str
    title: str
    spec: MaximalSetSpec
    q_n: Union[int, Callable[[int], int]]
    bookkeeping: Union[tuple, Callable[[int], tuple]]
    theta: Optional[object]   # closed-form extremal index as quoted
    a_n: Optional[object]     # quoted scaling coefficient (a_n / n**2)

    def run_length(self, n=None):
        return self.q_n(n) if callable(self.q_n) else self.q_n


def _ex_3_4():
    spec = MaximalSetSpec(TorusMap((2,)), (SqrtSeed(2, 1, 16),), (0, 1, 3), (1, 1, 1),
                          R(1, 2), name="ex-3-4")
    book = (AnchorTerms(True, ((2, R(1, 2)),)), AnchorTerms(True, ((3, R(1, 4)),)),
            AnchorTerms(True, ()))
    return ExampleEntry("ex-3-4", "doubling map, equal weights", spec, 3, book,
                        R(3, 4), sp.Integer(36))


def _ex_3_6():
    spec = MaximalSetSpec(TorusMap((2,)), (SqrtSeed(2, 1, 16),), (0, 1, 3), (1, 9, 1),
                          R(1, 2), name="ex-3-6")
    book = (AnchorTerms(True, ((3, R(1, 8)),)), AnchorTerms(True, ((3, R(1, 4)),)),
            AnchorTerms(True, ()))
    return ExampleEntry("ex-3-6", "doubling map, heavier middle centre", spec, 3, book,
                        R(37, 40), sp.Integer(100))


def _ex_3_10():
    spec = MaximalSetSpec(TorusMap((2, 3)), (SqrtSeed(2, 1, 2), SqrtSeed(2, 1, 2)), (0, 1),
                          (1, 256), R(1, 4), name="ex-3-10")
    book = (AnchorTerms(False, ()), AnchorTerms(True, ()))
    return ExampleEntry("ex-3-10", "(2x, 3y) with non-periodic zeta", spec, 1, book,
                        R(16, 17), R(289, 256))


def _ex_3_14():
    spec = MaximalSetSpec(TorusMap((2, 3)), (RationalSeed(1, 7), RationalSeed(0, 1)), (0, 1),
                          (1, 256), R(1, 4), mode="periodic", period=3, name="ex-3-14")
    book = (AnchorTerms(True, ((2, R(1, 16 * 81)),)), AnchorTerms(True, ((2, R(1, 8 * 27)),)))
    return ExampleEntry("ex-3-14", "(2x, 3y) with zeta of period 3", spec, 4, book,
                        R(1370, 1377), R(289, 256))


def _offset_4_2(i):
    return 0 if i == 1 else 3 ** (i - 1)


RULE_4_2 = CountableRule(_offset_4_2, sp.Integer(2) ** (1 - K))


def _book_4_2(n_centres):
    rows = []
    for i in range(1, n_centres + 1):
        if i < n_centres:
            rows.append(AnchorTerms(True, ((i + 1, sp.Integer(3) ** (-(3 + 3 ** (i - 1)))),)))
        else:
            rows.append(AnchorTerms(True, ()))
    return tuple(rows)


def ex_4_2_spec(truncation):
    return countable_spec(TorusMap((3,)), (LacunarySeed(3, 3),), RULE_4_2, R(1, 2),
                          truncation, name="ex-4-2")


def _ex_4_2(n=10 ** 4, truncation=None):
    truncation = truncation or default_truncation(n)
    return ExampleEntry("ex-4-2", "tripling map, countably many centres",
                        ex_4_2_spec(truncation), default_truncation, _book_4_2, None,
                        24 + 16 * sp.sqrt(2))


BUILDERS = {"ex-3-4": _ex_3_4, "ex-3-6": _ex_3_6, "ex-3-10": _ex_3_10,
            "ex-3-14": _ex_3_14, "ex-4-2": _ex_4_2}

# the countable example has no closed form, only a decimal to six places
EX_4_2_THETA = 0.997242


def example_ids():
    return list(BUILDERS)


def get_example(key, **kwargs):
    if key not in BUILDERS:
        raise KeyError(f"unknown example id {key!r}; known: {', '.join(BUILDERS)}")
    return BUILDERS[key](**kwargs)
