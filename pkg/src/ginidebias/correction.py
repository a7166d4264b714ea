"""Per-class probability corrections and the predictions they induce.

A correction map is an ordered catalog of functions ``[0, 1] -> [0, inf)``.
A selection vector picks one function per class (1-based, the first
function is always the identity). Corrected predictions are the argmax of
the corrected scores, with ties going to the lowest class index.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .dataset import LabeledPredictionSet, _accuracy_from_hits
from .errors import ConfigError, DataFormatError
from .metrics import ClassAccuracyVector

__all__ = [
    "CorrectionFunction",
    "CorrectionMap",
    "SelectionVector",
    "evaluate",
    "corrected_scores",
    "corrected_predict",
    "corrected_predictions",
    "corrected_class_accuracy",
    "default_map",
    "weights_only_map",
]

KINDS = ("identity", "scale", "triangular")


@dataclass(frozen=True)
class CorrectionFunction:
    kind: str
    weight: Optional[float] = None
    a: Optional[float] = None
    c: Optional[float] = None
    b: Optional[float] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown correction kind {self.kind!r}")
        if self.kind == "scale":
            if self.weight is None or not self.weight > 0 or not np.isfinite(self.weight):
                raise ConfigError(f"scale weight must be positive, got {self.weight}")
        if self.kind == "triangular":
            if None in (self.a, self.c, self.b) or not 0 <= self.a < self.c < self.b <= 1:
                raise ConfigError(
                    f"triangular needs 0 <= a < c < b <= 1, got ({self.a}, {self.c}, {self.b})"
                )

    @classmethod
    def identity(cls):
        return cls("identity")

    @classmethod
    def scale(cls, weight: float):
        return cls("scale", weight=float(weight))

    @classmethod
    def triangular(cls, a: float, c: float, b: float):
        return cls("triangular", a=float(a), c=float(c), b=float(b))

    def __call__(self, p):
        if self.kind == "identity":
            return p
        if self.kind == "scale":
            return self.weight * p
        p = np.asarray(p, dtype=float)
        rise = (p - self.a) / (self.c - self.a)
        fall = (self.b - p) / (self.b - self.c)
        out = np.maximum(0.0, np.minimum(rise, fall))
        return float(out) if out.ndim == 0 else out

    def to_dict(self) -> dict:
        if self.kind == "scale":
            return {"kind": "scale", "weight": self.weight}
        if self.kind == "triangular":
            return {"kind": "triangular", "a": self.a, "c": self.c, "b": self.b}
        return {"kind": "identity"}

    @classmethod
    def from_dict(cls, doc: dict) -> "CorrectionFunction":
        if not isinstance(doc, dict) or "kind" not in doc:
            raise ConfigError(f"bad correction function entry: {doc!r}")
        extra = set(doc) - {"kind", "weight", "a", "c", "b"}
        if extra:
            raise ConfigError(f"unknown correction function fields {sorted(extra)}")
        return cls(**doc)

    def describe(self) -> str:
        if self.kind == "scale":
            return f"scale({self.weight:g})"
        if self.kind == "triangular":
            return f"triangular({self.a:g}, {self.c:g}, {self.b:g})"
        return "identity"


def evaluate(f: CorrectionFunction, p):
    return f(p)


@dataclass(frozen=True)
class CorrectionMap:
    functions: tuple

    def __post_init__(self):
        funcs = tuple(self.functions)
        if not funcs:
            raise ConfigError("a correction map needs at least one function")
        if funcs[0].kind != "identity":
            raise ConfigError("the first correction function must be the identity")
        object.__setattr__(self, "functions", funcs)

    def __len__(self):
        return len(self.functions)

    def __getitem__(self, index: int) -> CorrectionFunction:
        """1-based lookup, matching selection vector entries."""
        if not 1 <= index <= len(self.functions):
            raise IndexError(f"correction index {index} outside [1, {len(self.functions)}]")
        return self.functions[index - 1]

    def apply_all(self, probs: np.ndarray) -> np.ndarray:
        """Every function applied to every probability, shape ``(|F|, M, N)``."""
        probs = np.asarray(probs, dtype=float)
        return np.stack([np.broadcast_to(f(probs), probs.shape) for f in self.functions])

    def to_dict(self) -> dict:
        return {"functions": [f.to_dict() for f in self.functions]}

    @classmethod
    def from_dict(cls, doc) -> "CorrectionMap":
        if isinstance(doc, dict):
            doc = doc.get("functions")
        if not isinstance(doc, list):
            raise ConfigError('correction map must be {"functions": [...]}')
        return cls(tuple(CorrectionFunction.from_dict(d) for d in doc))


DEFAULT_WEIGHTS = (0.1, 0.2, 0.5, 1.5, 2.0)
DEFAULT_TRIANGLES = ((0.0, 0.25, 0.5), (0.25, 0.5, 0.75), (0.5, 0.75, 1.0))


def weights_only_map(weights: Sequence[float] = DEFAULT_WEIGHTS) -> CorrectionMap:
    return CorrectionMap(
        (CorrectionFunction.identity(),) + tuple(CorrectionFunction.scale(w) for w in weights)
    )


def default_map() -> CorrectionMap:
    """Identity, five scaling weights and three triangular memberships (9 functions)."""
    return CorrectionMap(
        weights_only_map().functions
        + tuple(CorrectionFunction.triangular(*t) for t in DEFAULT_TRIANGLES)
    )


@dataclass(frozen=True)
class SelectionVector:
    """One 1-based correction index per class."""

    xi: tuple

    def __post_init__(self):
        xi = tuple(int(v) for v in self.xi)
        if not xi:
            raise ConfigError("selection vector must not be empty")
        object.__setattr__(self, "xi", xi)

    @classmethod
    def identity(cls, n: int) -> "SelectionVector":
        return cls((1,) * n)

    def __len__(self):
        return len(self.xi)

    def __iter__(self):
        return iter(self.xi)

    def validate(self, cmap: CorrectionMap, n: Optional[int] = None) -> None:
        if n is not None and len(self.xi) != n:
            raise DataFormatError(f"selection vector has {len(self.xi)} entries for {n} classes")
        if any(not 1 <= v <= len(cmap) for v in self.xi):
            raise ConfigError(f"selection {list(self.xi)} not valid for a map of {len(cmap)} functions")

    def zero_based(self) -> np.ndarray:
        return np.asarray(self.xi, dtype=np.intp) - 1


XiLike = Union[SelectionVector, Sequence[int]]


def _xi(xi: XiLike) -> SelectionVector:
    return xi if isinstance(xi, SelectionVector) else SelectionVector(tuple(xi))


def corrected_scores(row, xi: XiLike, cmap: CorrectionMap) -> np.ndarray:
    """Apply the selected function of each class to that class's probability."""
    xi = _xi(xi)
    row = np.asarray(row, dtype=float)
    xi.validate(cmap, row.size)
    return np.array([float(cmap[k](p)) for k, p in zip(xi, row)])


def corrected_predict(row, xi: XiLike, cmap: CorrectionMap) -> int:
    return int(np.argmax(corrected_scores(row, xi, cmap)))


def predictions_from_table(table: np.ndarray, xi0: np.ndarray) -> np.ndarray:
    """Argmax predictions from a precomputed ``(|F|, M, N)`` score table.

    ``xi0`` holds 0-based function indices, one per class.
    """
    n = table.shape[2]
    scores = table[xi0, :, np.arange(n)]  # (N, M)
    return np.argmax(scores, axis=0)


def corrected_predictions(probs, xi: XiLike, cmap: CorrectionMap) -> np.ndarray:
    probs = np.asarray(probs, dtype=float)
    xi = _xi(xi)
    xi.validate(cmap, probs.shape[1])
    return predictions_from_table(cmap.apply_all(probs), xi.zero_based())


def corrected_class_accuracy(
    data: LabeledPredictionSet, xi: XiLike, cmap: CorrectionMap, strict: bool = True
) -> ClassAccuracyVector:
    preds = corrected_predictions(data.probs, xi, cmap)
    return _accuracy_from_hits(
        preds == data.labels, data.labels, data.n_classes, data.class_names, strict
    )
