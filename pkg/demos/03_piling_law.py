# %% [markdown]
# # The piling law
#
# Given an exceedance at centre xi_i, the observations just before and after it
# are driven by the derivative of the map. Some of them exceed the threshold
# too, and these form a pile. The law of a pile is a finite mixture of
# branches. Each branch has an anchor, an exact probability, an interval for
# the uniform radial variable U, and the list of entries it carries.

# %%
import numpy as np

from corrmax import build_piling_law, get_example, polar_decompose, sample_piling
from corrmax.piling import law_rows

law = build_piling_law(get_example("ex-3-6").spec)
for b in law.branches:
    entries = {e.offset: float(e.scale[0]) for e in b.entries}
    print(f"anchor {b.anchor} branch {b.label:2s} p={b.probability}  U in [{b.u_lo}, {b.u_hi})"
          f"  entries {entries}")

# %% [markdown]
# The same data as the table written by the command line tool.

# %%
for row in law_rows(law)[:4]:
    print(row)

# %% [markdown]
# Sampling: each draw picks a branch, draws U on its interval and scales the
# entries. Entries before the anchor (negative offsets) have norm at least 1:
# otherwise the anchor would not be the first exceedance in the run.

# %%
rng = np.random.default_rng(3)
batch = sample_piling(law, rng, 10 ** 5)
print("min norm over negative offsets:", batch.negative_norms_min().min())

one = sample_piling(law, rng)
pair = polar_decompose({j: v for j, v in zip(one.offsets, one.values)})
print("sample:", dict(zip(one.offsets.tolist(), one.values[:, 0].round(4).tolist())))
print("L =", round(pair.L, 4), " shape =", pair.q[:, 0].round(4))

# %% [markdown]
# The radial part L = min entry norm is uniform on [0, 1] when all weights are
# equal. With unequal weights it is not: here the anchor-1 branch is scaled by
# 2/3, which moves mass onto [0, 2/3).

# %%
L = batch.norms_min()
print("P(L < 2/3) =", round(float(np.mean(L < 2 / 3)), 4), "(uniform would give 0.6667)")
