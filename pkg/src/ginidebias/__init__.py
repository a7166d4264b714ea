"""Gini index of per-class accuracies and post-hoc Gini-minimizing debiasing."""

__version__ = "0.1.0"

from .correction import (
    CorrectionFunction,
    CorrectionMap,
    SelectionVector,
    corrected_class_accuracy,
    corrected_predict,
    corrected_predictions,
    corrected_scores,
    default_map,
    weights_only_map,
)
from .dataset import (
    LabeledPredictionSet,
    SplitSpec,
    SynthSpec,
    argmax_predict,
    load_accuracy_file,
    load_predictions,
    per_class_accuracy,
    save_predictions,
    split,
    synthesize,
)
from .metrics import (
    ClassAccuracyVector,
    MetricsReport,
    cobias,
    gini,
    gini_from_cobias,
    max_gini_bound,
    mean_accuracy,
    metrics_report,
    top_class_dominance,
)
from .optimizer import (
    AnnealConfig,
    Objective,
    OptimizationResult,
    anneal,
    debias,
    evaluate_on_test,
    exhaustive_search,
    neighbor,
    objective_value,
)
