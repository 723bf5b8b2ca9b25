# %% [markdown]
# # The extremal index
#
# theta is the reciprocal mean cluster size. It has an exact value for every
# example and a Monte Carlo estimate from exact dyadic orbits: the fraction of
# exceedances at time 0 that are not preceded by another exceedance in the
# previous q_n steps.

# %%
import numpy as np

from corrmax import estimate_extremal_index, get_example, theoretical_extremal_index
from corrmax.empirics import geometric_extremal_index

for key in ("ex-3-4", "ex-3-6", "ex-3-10", "ex-3-14"):
    e = get_example(key)
    exact = theoretical_extremal_index(e.spec, e.q_n, e.bookkeeping)
    geo = geometric_extremal_index(e.spec, e.q_n)
    print(f"{key:8s} closed form {str(exact):10s} = {float(exact):.6f}   pre-image geometry {geo:.6f}")

# %% [markdown]
# The countable example sums a geometric series of centres. Its value is a
# float, not a rational.

# %%
e = get_example("ex-4-2")
print("ex-4-2 ", round(theoretical_extremal_index(e.spec, None, e.bookkeeping), 8))

# %% [markdown]
# Monte Carlo with 10^7 uniform starts at n = 10^4 (the acceptance suite uses
# 10^8). The standard error comes from the binomial count of exceedances.

# %%
rng = np.random.default_rng(11)
e = get_example("ex-3-4")
est = estimate_extremal_index(e.spec, 10 ** 4, e.q_n, 10 ** 7, rng)
print(f"hits={est.hits} clean={est.clean} theta_hat={est.theta_hat:.4f} +- {est.se:.4f}")
