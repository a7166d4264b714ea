"""Inequality metrics over per-class accuracy vectors.

Two disparity measures are provided:

- ``gini``: half the relative mean absolute difference of class accuracies.
  It is normalized by the mean accuracy, so it is invariant to rescaling all
  accuracies by the same factor and reacts to how strongly the top class
  dominates the mean.
- ``cobias``: the plain mean absolute difference over distinct class pairs.
  It grows linearly with the scale of the accuracies.

Undefined values (the Gini index and top-class dominance of an all-zero
accuracy vector) are returned as ``None`` so that reports can print ``n/a``
instead of a misleading zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .errors import DataFormatError, UnsupportedClassError

__all__ = [
    "ClassAccuracyVector",
    "MetricsReport",
    "mean_accuracy",
    "gini",
    "cobias",
    "gini_from_cobias",
    "top_class_dominance",
    "max_gini_bound",
    "metrics_report",
    "fmt",
]

SCHEMA_VERSION = 1


def _frozen(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ClassAccuracyVector:
    """Per-class accuracies with the number of instances behind each one.

    ``supports`` may be ``None`` when only the accuracies are known (for
    example values copied from a published table).
    """

    accuracies: np.ndarray
    supports: Optional[np.ndarray] = None
    class_names: Optional[tuple] = None

    def __post_init__(self):
        acc = np.asarray(self.accuracies, dtype=float)
        if acc.ndim != 1 or acc.size < 1:
            raise DataFormatError("accuracies must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(acc)) or np.any(acc < 0) or np.any(acc > 1):
            raise DataFormatError(f"accuracies must lie in [0, 1], got {acc.tolist()}")
        object.__setattr__(self, "accuracies", _frozen(acc, float))

        if self.supports is not None:
            sup = np.asarray(self.supports)
            if sup.shape != acc.shape:
                raise DataFormatError(
                    f"{sup.size} supports given for {acc.size} accuracies"
                )
            if np.any(sup < 0) or np.any(sup != np.round(sup)):
                raise DataFormatError("supports must be non-negative integers")
            object.__setattr__(self, "supports", _frozen(sup, np.int64))

        if self.class_names is not None:
            names = tuple(str(n) for n in self.class_names)
            if len(names) != acc.size:
                raise DataFormatError(
                    f"{len(names)} class names given for {acc.size} accuracies"
                )
            object.__setattr__(self, "class_names", names)

    @property
    def n(self) -> int:
        return int(self.accuracies.size)

    def __len__(self):
        return self.n

    def __eq__(self, other):
        if not isinstance(other, ClassAccuracyVector):
            return NotImplemented
        same_sup = (self.supports is None and other.supports is None) or (
            self.supports is not None
            and other.supports is not None
            and np.array_equal(self.supports, other.supports)
        )
        return (
            np.array_equal(self.accuracies, other.accuracies)
            and same_sup
            and self.class_names == other.class_names
        )

    def scaled(self, c: float) -> "ClassAccuracyVector":
        return ClassAccuracyVector(self.accuracies * c, self.supports, self.class_names)

    def unsupported(self) -> list[int]:
        """Indices of classes with zero support (empty when supports are unknown)."""
        if self.supports is None:
            return []
        return [int(i) for i in np.flatnonzero(self.supports == 0)]

    def to_dict(self) -> dict:
        out = {"accuracies": [float(a) for a in self.accuracies]}
        if self.supports is not None:
            out["supports"] = [int(s) for s in self.supports]
        if self.class_names is not None:
            out["class_names"] = list(self.class_names)
        return out

    @classmethod
    def from_dict(cls, doc: dict) -> "ClassAccuracyVector":
        if not isinstance(doc, dict) or "accuracies" not in doc:
            raise DataFormatError('expected an object with an "accuracies" list')
        return cls(doc["accuracies"], doc.get("supports"), doc.get("class_names"))


AccLike = Union[ClassAccuracyVector, Sequence[float], np.ndarray]


def _acc(acc: AccLike) -> np.ndarray:
    if isinstance(acc, ClassAccuracyVector):
        return acc.accuracies
    return ClassAccuracyVector(acc).accuracies


def mean_accuracy(acc: AccLike) -> float:
    a = _acc(acc)
    return float(a.sum() / a.size)


def _pairwise_abs_sum(a: np.ndarray) -> float:
    # sum over ordered pairs i, j of |a_i - a_j|
    return float(np.abs(a[:, None] - a[None, :]).sum())


def gini(acc: AccLike) -> Optional[float]:
    """Gini index of class accuracies, or ``None`` if every accuracy is zero.

    Computed from the full double sum of absolute differences divided by
    ``2 N^2`` times the mean accuracy. The result lies in ``[0, (N-1)/N]``.
    """
    return gini_array(_acc(acc))


def cobias(acc: AccLike) -> float:
    """Mean absolute accuracy gap over the N(N-1)/2 unordered class pairs."""
    return cobias_array(_acc(acc))


# Unvalidated cores on plain float arrays; the optimizer calls these in its
# inner loop.


def gini_array(a: np.ndarray) -> Optional[float]:
    n = a.size
    total = a.sum()
    if total == 0:
        return None
    # 2 N^2 * mean == 2 N * sum; the clamp only trims rounding past the exact bound
    return min(_pairwise_abs_sum(a) / float(2.0 * n * total), (n - 1) / n)


def cobias_array(a: np.ndarray) -> float:
    n = a.size
    if n < 2:
        raise ValueError("cobias needs at least two classes")
    return _pairwise_abs_sum(a) / float(n * (n - 1))


def gini_from_cobias(cobias_value: float, mean_acc: float, n: int) -> float:
    if mean_acc <= 0:
        raise ValueError(f"mean accuracy must be positive, got {mean_acc}")
    if n < 2:
        raise ValueError(f"n must be at least 2, got {n}")
    return (n - 1) / (2.0 * n * mean_acc) * cobias_value


def top_class_dominance(acc: AccLike) -> Optional[float]:
    """Best class accuracy divided by the mean accuracy (``None`` if the mean is 0)."""
    a = _acc(acc)
    total = a.sum()
    if total == 0:
        return None
    return float(a.max() * a.size / total)


def max_gini_bound(n: int) -> float:
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    return (n - 1) / n


def fmt(value: Optional[float], digits: int = 2) -> str:
    return "n/a" if value is None else f"{value:.{digits}f}"


@dataclass(frozen=True)
class MetricsReport:
    mean_accuracy: float
    gini: Optional[float]
    cobias: Optional[float]
    top_class_dominance: Optional[float]
    max_gini_bound: float
    per_class: ClassAccuracyVector

    @property
    def n(self) -> int:
        return self.per_class.n

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "metrics_report",
            "n_classes": self.n,
            "mean_accuracy": self.mean_accuracy,
            "gini": self.gini,
            "cobias": self.cobias,
            "top_class_dominance": self.top_class_dominance,
            "max_gini_bound": self.max_gini_bound,
            "per_class": self.per_class.to_dict(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "MetricsReport":
        """Rebuild a report exactly as stored; values are not recomputed."""
        try:
            per_class = ClassAccuracyVector.from_dict(doc["per_class"])
            return cls(
                mean_accuracy=float(doc["mean_accuracy"]),
                gini=doc["gini"],
                cobias=doc["cobias"],
                top_class_dominance=doc["top_class_dominance"],
                max_gini_bound=float(doc["max_gini_bound"]),
                per_class=per_class,
            )
        except (KeyError, TypeError) as exc:
            raise DataFormatError(f"not a metrics report: missing or bad field {exc}") from exc

    def render(self, digits: int = 2) -> str:
        pc = self.per_class
        names = pc.class_names or tuple(f"class {i}" for i in range(pc.n))
        width = max(len(s) for s in names + ("Class",))
        lines = [f"{'Class':<{width}}  Acc.   Support"]
        for i, name in enumerate(names):
            sup = "-" if pc.supports is None else str(pc.supports[i])
            lines.append(f"{name:<{width}}  {pc.accuracies[i]:.{digits}f}   {sup}")
        lines += [
            "",
            f"Mean Acc.                 {fmt(self.mean_accuracy, digits)}",
            f"Top-class dominance       {fmt(self.top_class_dominance, digits)}",
            f"COBias                    {fmt(self.cobias, digits)}",
            f"Gini                      {fmt(self.gini, digits)}",
            f"Max Gini for N={pc.n:<9d}  {fmt(self.max_gini_bound, digits)}",
        ]
        return "\n".join(lines)


def metrics_report(acc: AccLike) -> MetricsReport:
    """Bundle every metric for one accuracy vector.

    Raises ``ValueError`` for fewer than two classes and
    ``UnsupportedClassError`` if a class has zero support.
    """
    if not isinstance(acc, ClassAccuracyVector):
        acc = ClassAccuracyVector(acc)
    if acc.n < 2:
        raise ValueError("a metrics report needs at least two classes")
    missing = acc.unsupported()
    if missing:
        raise UnsupportedClassError(f"classes {missing} have zero support")
    return MetricsReport(
        mean_accuracy=mean_accuracy(acc),
        gini=gini(acc),
        cobias=cobias(acc),
        top_class_dominance=top_class_dominance(acc),
        max_gini_bound=max_gini_bound(acc.n),
        per_class=acc,
    )
