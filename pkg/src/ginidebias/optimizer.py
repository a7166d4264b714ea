"""Selecting per-class corrections that minimize accuracy inequality.

The decision variable is a selection vector (one correction function per
class); the objective is the Gini index, or COBias for comparison runs, of
the corrected per-class accuracies on an optimization set. The search space
has ``|F|^N`` points, so it is explored with simulated annealing;
``exhaustive_search`` enumerates it outright for small instances and serves
as the reference answer in tests.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from . import metrics
from .correction import (
    CorrectionMap,
    SelectionVector,
    XiLike,
    _xi,
    corrected_class_accuracy,
    predictions_from_table,
)
from .dataset import LabeledPredictionSet, SplitSpec, split
from .errors import ConfigError, SearchBudgetError, UnsupportedClassError

__all__ = [
    "Objective",
    "AnnealConfig",
    "OptimizationResult",
    "objective_value",
    "neighbor",
    "anneal",
    "exhaustive_search",
    "evaluate_on_test",
    "DebiasOutcome",
    "debias",
]

# score given to a configuration whose Gini is undefined (all accuracies zero)
UNDEFINED_OBJECTIVE = 1.0
# objective values closer than this are treated as ties
TIE_TOL = 1e-12


class Objective(str, Enum):
    GINI = "gini"
    COBIAS = "cobias"

    def __call__(self, acc) -> float:
        a = acc.accuracies if isinstance(acc, metrics.ClassAccuracyVector) else acc
        if self is Objective.GINI:
            g = metrics.gini_array(a)
            return UNDEFINED_OBJECTIVE if g is None else g
        return metrics.cobias_array(a)


def _objective(obj) -> Objective:
    try:
        return Objective(obj)
    except ValueError:
        raise ConfigError(f"unknown objective {obj!r}; use gini or cobias") from None


@dataclass(frozen=True)
class AnnealConfig:
    initial_temperature: float = 1.0
    cooling_rate: float = 0.95
    steps_per_temperature: int = 50
    min_temperature: float = 1e-3
    max_iterations: int = 20000
    restarts: int = 3
    seed: int = 0

    def __post_init__(self):
        if not self.initial_temperature > 0 or not self.min_temperature > 0:
            raise ConfigError("temperatures must be positive")
        if not self.min_temperature < self.initial_temperature:
            raise ConfigError("min_temperature must be below initial_temperature")
        if not 0 < self.cooling_rate < 1:
            raise ConfigError("cooling_rate must be in (0, 1)")
        for name in ("steps_per_temperature", "max_iterations", "restarts"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be at least 1")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")

    @classmethod
    def from_dict(cls, doc: dict) -> "AnnealConfig":
        unknown = set(doc) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown anneal settings {sorted(unknown)}")
        return cls(**doc)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class OptimizationResult:
    best_xi: SelectionVector
    best_objective: float
    initial_objective: float
    evaluations: int
    objective_trace: list = field(default_factory=list)
    objective: Objective = Objective.GINI

    def to_dict(self) -> dict:
        return {
            "objective": self.objective.value,
            "best_xi": list(self.best_xi.xi),
            "best_objective": self.best_objective,
            "initial_objective": self.initial_objective,
            "evaluations": self.evaluations,
            "objective_trace": [[int(i), float(v)] for i, v in self.objective_trace],
        }


class _Evaluator:
    """Objective over 0-based selection tuples, with the score table and a cache.

    The correction functions are applied to the whole probability matrix once;
    each evaluation then only gathers columns, takes an argmax and counts hits.
    """

    def __init__(self, data: LabeledPredictionSet, cmap: CorrectionMap, obj: Objective):
        supports = data.supports()
        if np.any(supports == 0):
            raise UnsupportedClassError(
                f"classes {np.flatnonzero(supports == 0).tolist()} have no instances"
            )
        self.labels = data.labels
        self.supports = supports
        self.obj = obj
        self.table = cmap.apply_all(data.probs)
        self.n_functions = len(cmap)
        self.n = data.n_classes
        self.cache: dict = {}
        self.calls = 0

    def accuracy(self, xi0: tuple) -> np.ndarray:
        preds = predictions_from_table(self.table, np.asarray(xi0, dtype=np.intp))
        correct = np.bincount(self.labels[preds == self.labels], minlength=self.n)
        return correct / self.supports

    def __call__(self, xi0: tuple) -> float:
        self.calls += 1
        val = self.cache.get(xi0)
        if val is None:
            val = self.obj(self.accuracy(xi0))
            self.cache[xi0] = val
        return val


def objective_value(
    data: LabeledPredictionSet, xi: XiLike, cmap: CorrectionMap, obj=Objective.GINI
) -> float:
    obj = _objective(obj)
    acc = corrected_class_accuracy(data, xi, cmap, strict=True)
    return obj(acc)


def _move(xi0: tuple, n_functions: int, rng: np.random.Generator) -> tuple:
    # one class, reassigned to a different 0-based function index
    pos = int(rng.integers(len(xi0)))
    new = int(rng.integers(n_functions - 1))
    if new >= xi0[pos]:
        new += 1
    return xi0[:pos] + (new,) + xi0[pos + 1 :]


def neighbor(xi: XiLike, n_functions: int, rng: np.random.Generator) -> SelectionVector:
    """Copy of ``xi`` with one uniformly chosen class moved to a different function."""
    xi = _xi(xi)
    if n_functions < 2:
        return xi
    moved = _move(tuple(int(v) - 1 for v in xi), n_functions, rng)
    return SelectionVector(tuple(v + 1 for v in moved))


def _anneal_once(f: _Evaluator, config: AnnealConfig, rng, trace: list, it0: int):
    start = (0,) * f.n
    cur, cur_val = start, f(start)
    best, best_val = cur, cur_val
    temp = config.initial_temperature
    steps = config.steps_per_temperature
    it = 0
    while temp > config.min_temperature and it < config.max_iterations:
        # random numbers for one temperature level, drawn in bulk
        positions = rng.integers(f.n, size=steps)
        offsets = rng.integers(f.n_functions - 1, size=steps)
        accept_u = rng.random(steps)
        for k in range(min(steps, config.max_iterations - it)):
            pos, new = int(positions[k]), int(offsets[k])
            if new >= cur[pos]:
                new += 1
            cand = cur[:pos] + (new,) + cur[pos + 1 :]
            val = f(cand)
            it += 1
            delta = val - cur_val
            if delta <= 0 or accept_u[k] < math.exp(-delta / temp):
                cur, cur_val = cand, val
                if cur_val < best_val - TIE_TOL:
                    best, best_val = cur, cur_val
        trace.append((it0 + it, cur_val))
        temp *= config.cooling_rate
    return best, best_val, it


def anneal(
    data: LabeledPredictionSet,
    cmap: CorrectionMap,
    obj=Objective.GINI,
    config: Optional[AnnealConfig] = None,
) -> OptimizationResult:
    """Simulated annealing over selection vectors.

    Every restart begins at the all-identity selection and draws from its
    own random stream spawned from ``config.seed``. Worsening moves are
    accepted with probability ``exp(-delta / T)``; the temperature is
    multiplied by ``cooling_rate`` after every ``steps_per_temperature``
    proposals until it drops to ``min_temperature`` or ``max_iterations``
    proposals have been made. The best point over all restarts is returned,
    earlier restarts winning ties.
    """
    obj = _objective(obj)
    config = config or AnnealConfig()
    f = _Evaluator(data, cmap, obj)
    identity = (0,) * f.n
    initial = f(identity)
    best, best_val = identity, initial
    trace = [(0, initial)]
    if f.n_functions > 1:
        streams = np.random.SeedSequence(int(config.seed)).spawn(config.restarts)
        done = 0
        for ss in streams:
            r_best, r_val, used = _anneal_once(f, config, np.random.default_rng(ss), trace, done)
            done += used
            if r_val < best_val - TIE_TOL:
                best, best_val = r_best, r_val
    return OptimizationResult(
        best_xi=SelectionVector(tuple(v + 1 for v in best)),
        best_objective=best_val,
        initial_objective=initial,
        evaluations=f.calls,
        objective_trace=trace,
        objective=obj,
    )


DEFAULT_BUDGET = 10**6
_CHUNK = 2048


def _batch_objective(acc: np.ndarray, obj: Objective) -> np.ndarray:
    """Objective for each row of a ``(C, N)`` accuracy matrix."""
    n = acc.shape[1]
    gaps = np.abs(acc[:, :, None] - acc[:, None, :]).sum(axis=(1, 2))
    if obj is Objective.COBIAS:
        return gaps / (n * (n - 1))
    total = acc.sum(axis=1)
    out = np.full(acc.shape[0], UNDEFINED_OBJECTIVE)
    ok = total > 0
    out[ok] = gaps[ok] / (2.0 * n * total[ok])
    return out


def exhaustive_search(
    data: LabeledPredictionSet, cmap: CorrectionMap, obj=Objective.GINI, budget: int = DEFAULT_BUDGET
) -> OptimizationResult:
    """Evaluate every selection vector; ties go to the lexicographically smallest.

    Candidates are scored in vectorized chunks, in lexicographic order.
    """
    obj = _objective(obj)
    f = _Evaluator(data, cmap, obj)
    n, k = f.n, f.n_functions
    size = k**n
    if size > budget:
        raise SearchBudgetError(
            f"{k}^{n} = {size} candidates exceed the budget of {budget}; use anneal"
        )
    by_class = np.ascontiguousarray(f.table.transpose(2, 0, 1))  # (N, |F|, M)
    onehot = np.eye(n)[f.labels]
    classes = np.arange(n)
    values = np.empty(size)
    for start in range(0, size, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, size))
        combos = np.stack(np.unravel_index(idx, (k,) * n), axis=1)  # (C, N)
        preds = by_class[classes, combos].argmax(axis=1)  # (C, M)
        acc = ((preds == f.labels) @ onehot) / f.supports
        values[start : start + idx.size] = _batch_objective(acc, obj)
    best_idx = int(np.flatnonzero(values <= values.min() + TIE_TOL)[0])
    best = tuple(int(v) for v in np.unravel_index(best_idx, (k,) * n))
    initial = f((0,) * n)
    return OptimizationResult(
        best_xi=SelectionVector(tuple(v + 1 for v in best)),
        best_objective=f(best),
        initial_objective=initial,
        evaluations=size,
        objective_trace=[(0, initial), (best_idx, f(best))],
        objective=obj,
    )


def evaluate_on_test(test: LabeledPredictionSet, xi: XiLike, cmap: CorrectionMap) -> metrics.MetricsReport:
    acc = corrected_class_accuracy(test, xi, cmap, strict=True)
    return metrics.metrics_report(acc)


@dataclass
class DebiasOutcome:
    result: OptimizationResult
    original: metrics.MetricsReport
    debiased: metrics.MetricsReport
    optimization_set: LabeledPredictionSet
    test_set: LabeledPredictionSet


def debias(
    data: LabeledPredictionSet,
    cmap: CorrectionMap,
    obj=Objective.GINI,
    config: Optional[AnnealConfig] = None,
    split_spec: Optional[SplitSpec] = None,
    test: Optional[LabeledPredictionSet] = None,
    search: str = "anneal",
) -> DebiasOutcome:
    """Fit a selection vector on an optimization set and report on a test set.

    If ``test`` is not given, ``data`` is split according to ``split_spec``.
    The test rows are only used for the two final reports.
    """
    config = config or AnnealConfig()
    if test is None:
        split_spec = split_spec or SplitSpec(seed=config.seed)
        opt_set, test = split(data, split_spec)
    else:
        opt_set = data
    if test.n_classes != opt_set.n_classes:
        raise ConfigError(
            f"test set has {test.n_classes} classes, optimization set {opt_set.n_classes}"
        )
    if search == "anneal":
        result = anneal(opt_set, cmap, obj, config)
    elif search == "exhaustive":
        result = exhaustive_search(opt_set, cmap, obj)
    else:
        raise ConfigError(f"unknown search method {search!r}")
    identity = SelectionVector.identity(test.n_classes)
    return DebiasOutcome(
        result=result,
        original=evaluate_on_test(test, identity, cmap),
        debiased=evaluate_on_test(test, result.best_xi, cmap),
        optimization_set=opt_set,
        test_set=test,
    )
