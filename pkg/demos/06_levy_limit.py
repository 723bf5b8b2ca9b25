# %% [markdown]
# # The clustered stable limit
#
# Partial sums S_n(t) = (1/a_n) sum_{i < nt} X_i converge to a stable Levy
# process whose jumps come in clusters. It is sampled as a LePage series:
# Poisson arrivals Gamma_i, uniform times T_i and cluster marks drawn from the
# shape of a pile.

# %%
import numpy as np

from corrmax import build_piling_law, evaluate_V, evaluate_excursion, get_example, sample_levy
from corrmax.limit import compare_marginals, partial_sum_endpoints

e = get_example("ex-3-4")
law = build_piling_law(e.spec)
theta, alpha = 0.75, 0.5
rng = np.random.default_rng(9)
lv = sample_levy(law, theta, alpha, eps=1e-3, rng=rng)
print("retained atoms:", lv.size, "  V(1) =", evaluate_V(lv, 1.0)[0].round(4))

# %% [markdown]
# Each jump is unfolded into an excursion: at t = 0 it starts from the value
# just before the jump and at t = 1 it ends at the value after it.

# %%
i = int(np.argmax(np.abs(lv.jumps[:, 0])))
for t in (0.0, 0.5, 0.75, 0.9, 1.0):
    print(f"excursion t={t:<4}  {evaluate_excursion(lv, i, t)[0]:.4f}")
print("V(T_i) =", round(float(evaluate_V(lv, lv.T[i])[0]), 4))

# %% [markdown]
# Compare S_n(1) from simulated orbits with V(1). The two-sample KS runs on the
# arctan scale so the heavy tails do not dominate.

# %%
ends, _ = partial_sum_endpoints(e.spec, 10 ** 4, 1000, rng)
v1 = [evaluate_V(sample_levy(law, theta, alpha, 1e-3, rng), 1.0)[0] for _ in range(1000)]
res = compare_marginals(ends[:, 0], v1)
print(f"KS = {res.statistic:.4f}  (1% critical value {res.critical:.4f}, p = {res.pvalue:.3f})")
