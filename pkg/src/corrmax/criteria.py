"""Pass/fail thresholds for every executed check, in one place."""
from dataclasses import dataclass

# extremal index: |theta_hat - theta| <= max(EI_ABS, EI_SE * SE)
EI_ABS = 0.02
EI_SE = 3.0
# closed form of the countable example, quoted to six decimals
EI_COUNTABLE_ABS = 1e-6
# n * P(||X_0|| > y a_n) against y^{-alpha d}, relative
TAIL_REL = 0.05
# empirical frequencies against exact probabilities, in binomial SEs
FREQ_SE = 3.0
# branches lighter than this are not tested individually
BRANCH_MIN_PROB = 0.05
# entry ratios at the conditioning offsets, relative
RATIO_REL = 0.01
# two-sample KS between S_n(1) and V(1) after arctan
KS_LIMIT = 0.08
# one-sample KS of the L marginal against U[0,1]
L_KS = 0.005
# x^{-alpha} scaling of jump counts, relative
JUMP_SCALING_REL = 0.10
# median of the largest increment against the Frechet prediction, relative
MAX_MEDIAN_REL = 0.10


@dataclass(frozen=True)
class Check:
    """One executed comparison, as written to the summary table."""

    example: str
    quantity: str
    estimate: float
    exact: float
    se: float
    tolerance: float
    passed: bool

    @classmethod
    def absolute(cls, example, quantity, estimate, exact, tol, se=float("nan")):
        return cls(example, quantity, float(estimate), float(exact), float(se), float(tol),
                   bool(abs(float(estimate) - float(exact)) <= tol))

    @classmethod
    def relative(cls, example, quantity, estimate, exact, rel, se=float("nan")):
        ok = abs(float(estimate) / float(exact) - 1.0) <= rel
        return cls(example, quantity, float(estimate), float(exact), float(se), float(rel), bool(ok))

    @classmethod
    def within_se(cls, example, quantity, estimate, exact, se, k=FREQ_SE, floor=0.0):
        tol = max(k * float(se), floor)
        return cls.absolute(example, quantity, estimate, exact, tol, se)

    @classmethod
    def at_most(cls, example, quantity, estimate, limit):
        return cls(example, quantity, float(estimate), float(limit), float("nan"), float(limit),
                   bool(float(estimate) <= float(limit)))


def extremal_index_check(example, estimate, exact, label="extremal index"):
    return Check.within_se(example, label, estimate.theta_hat, exact, estimate.se, EI_SE, EI_ABS)
