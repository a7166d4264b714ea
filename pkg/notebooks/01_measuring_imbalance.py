# %% [markdown]
# # Measuring class accuracy imbalance
#
# Two numbers summarize how unevenly a classifier treats its classes.
# COBias averages the absolute accuracy gap over all class pairs. The Gini
# index divides the same gaps by the mean accuracy, so it reads as a
# relative concentration: 0 when every class is equally accurate, and at
# most (N-1)/N when one class takes everything.

# %%
import numpy as np

from ginidebias import cobias, gini, max_gini_bound, metrics_report

# %% [markdown]
# Three toy accuracy vectors over four classes. The middle one has the
# lower COBias of the first two, yet Gini still flags it as highly concentrated.

# %%
for acc in ([1, 0, 0, 0], [0.8, 0.2, 0, 0], [1, 1, 0, 0]):
    print(f"{str(acc):<20} gini={gini(acc):.2f}  cobias={cobias(acc):.2f}")

# %% [markdown]
# A full report on published per-class accuracies of a four-class news
# classifier. The weakest class sits far below the others.

# %%
print(metrics_report([0.85, 0.98, 0.97, 0.19]).render())

# %% [markdown]
# The two metrics are tied by a closed form, which makes a handy sanity check:
# `gini == (N - 1) / (2 N mean) * cobias`.

# %%
rng = np.random.default_rng(0)
acc = rng.random(12)
n = acc.size
print(gini(acc), (n - 1) / (2 * n * acc.mean()) * cobias(acc))

# %% [markdown]
# Gini ignores a common rescaling of all accuracies; COBias scales with it.

# %%
print(gini(acc), gini(0.5 * acc))
print(cobias(acc), cobias(0.5 * acc) / 0.5)

# %% [markdown]
# One-hot accuracy vectors reach the upper bound.

# %%
for n in (2, 5, 100):
    one_hot = np.eye(n)[0]
    print(n, gini(one_hot), max_gini_bound(n))
