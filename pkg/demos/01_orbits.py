# %% [markdown]
# # Exact orbits of the doubling map
#
# Floating-point iteration of x -> 2x mod 1 loses one bit per step, so after
# about 53 steps every double collapses to 0. The library keeps orbits as digit
# streams instead: a symbolic seed such as sqrt(2)/16 is expanded to as many
# binary digits as needed and f^t(x) is read off the shifted stream.

# %%
import numpy as np

from corrmax import SqrtSeed, TorusMap, iterate, seed_orbit
from corrmax.dynamics import orbit_values, sample_stationary

f = TorusMap((2,))
orbit = seed_orbit(f, (SqrtSeed(2, 1, 16),), horizon=200)
exact = orbit_values(orbit, 80)[:, 0]
naive = np.array([f.apply([np.sqrt(2) / 16], t)[0] for t in range(80)])

for t in (0, 1, 3, 40, 60, 79):
    print(f"t={t:3d}  digit stream {exact[t]:.12f}   float loop {naive[t]:.12f}")

# %% [markdown]
# The centres of the maximal set are points on this orbit: xi_1 = zeta,
# xi_2 = f(zeta), xi_3 = f^3(zeta) for the offsets (0, 1, 3).

# %%
print("centres:", [float(iterate(orbit, m)[0]) for m in (0, 1, 3)])

# %% [markdown]
# Stationary orbits start from iid uniform digits, which is exactly Lebesgue
# measure (the invariant measure of the doubling map). A histogram of a long
# orbit is flat.

# %%
rng = np.random.default_rng(1)
x = orbit_values(sample_stationary(f, rng, 10 ** 6))[:, 0]
hist, _ = np.histogram(x, bins=10, range=(0, 1))
print("decile counts / expected:", np.round(hist / (len(x) / 10), 3))

# %% [markdown]
# The same machinery works on the torus with a diagonal map, here
# (x, y) -> (2x, 3y) mod 1.

# %%
g = TorusMap((2, 3))
pts = orbit_values(sample_stationary(g, rng, 10 ** 5))
print("2D orbit mean:", pts.mean(axis=0).round(3))
