# %% [markdown]
# # Per-class corrections
#
# A correction map is a small catalog of functions applied to one class's
# probability. Picking one function per class (the selection vector, 1-based)
# changes which class wins the argmax. Nothing is renormalized.

# %%
import numpy as np

from ginidebias import (
    CorrectionFunction,
    CorrectionMap,
    LabeledPredictionSet,
    corrected_class_accuracy,
    corrected_predictions,
    default_map,
    per_class_accuracy,
)

# %% [markdown]
# The default map: identity, five scaling weights, and three triangular
# membership functions that peak at 0.25, 0.5 and 0.75.

# %%
cmap = default_map()
for k, f in enumerate(cmap.functions, start=1):
    print(k, f.describe())

# %%
p = np.linspace(0, 1, 5)
tri = CorrectionFunction.triangular(0.25, 0.5, 0.75)
print(p)
print(tri(p))

# %% [markdown]
# A classifier that over-predicts class 0. Shrinking class 0's probability
# with `scale(0.5)` hands the borderline rows to class 1.

# %%
probs = np.array([[0.9, 0.1], [0.7, 0.3], [0.8, 0.2], [0.55, 0.45], [0.6, 0.4], [0.3, 0.7]])
data = LabeledPredictionSet(probs, np.array([0, 0, 0, 1, 1, 1]))
half = CorrectionMap((CorrectionFunction.identity(), CorrectionFunction.scale(0.5)))

print("argmax   ", probs.argmax(axis=1))
print("corrected", corrected_predictions(probs, [2, 1], half))

# %%
print("before", per_class_accuracy(data).accuracies)
print("after ", corrected_class_accuracy(data, [2, 1], half).accuracies)
