"""Labeled class-probability predictions: loading, saving, splitting, synthesis."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import (
    ConfigError,
    DataFormatError,
    InconsistentClassCountError,
    InfeasibleError,
    LabelOutOfRangeError,
    MalformedRowError,
    NegativeProbabilityError,
    UnsupportedClassError,
    ZeroProbabilityRowError,
)
from .metrics import ClassAccuracyVector

__all__ = [
    "LabeledPredictionSet",
    "SplitSpec",
    "SynthSpec",
    "load_predictions",
    "save_predictions",
    "load_accuracy_file",
    "argmax_predict",
    "per_class_accuracy",
    "split_indices",
    "split",
    "synthesize",
]

FORMATS = ("csv", "jsonl")


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class LabeledPredictionSet:
    """M probability rows over N classes plus the gold label of each row.

    Rows are renormalized to sum to one on construction. ``ids`` are
    optional per-row identifiers carried through to reports.
    """

    probs: np.ndarray
    labels: np.ndarray
    class_names: Optional[tuple] = None
    ids: Optional[tuple] = None
    n_classes: int = field(init=False)

    def __post_init__(self):
        probs = np.array(self.probs, dtype=float)
        labels = np.asarray(self.labels)
        if probs.ndim != 2 or probs.shape[1] < 1:
            raise DataFormatError(f"probs must be an M x N matrix, got shape {probs.shape}")
        m, n = probs.shape
        if labels.shape != (m,):
            raise DataFormatError(f"{labels.size} labels given for {m} rows")
        if m and np.any(labels != np.round(labels)):
            raise DataFormatError("labels must be integers")
        labels = labels.astype(np.int64)
        if not np.all(np.isfinite(probs)):
            raise DataFormatError("probabilities must be finite")
        bad = np.flatnonzero((probs < 0).any(axis=1))
        if bad.size:
            raise NegativeProbabilityError("negative probability", row=int(bad[0]) + 1)
        sums = probs.sum(axis=1)
        bad = np.flatnonzero(sums == 0)
        if bad.size:
            raise ZeroProbabilityRowError("all probabilities are zero", row=int(bad[0]) + 1)
        bad = np.flatnonzero((labels < 0) | (labels >= n))
        if bad.size:
            raise LabelOutOfRangeError(
                f"label {labels[bad[0]]} outside [0, {n})", row=int(bad[0]) + 1
            )
        off = np.abs(sums - 1.0) > 1e-12
        probs[off] /= sums[off, None]

        object.__setattr__(self, "probs", _readonly(probs))
        object.__setattr__(self, "labels", _readonly(labels))
        object.__setattr__(self, "n_classes", n)
        if self.class_names is not None:
            names = tuple(str(s) for s in self.class_names)
            if len(names) != n:
                raise DataFormatError(f"{len(names)} class names for {n} classes")
            object.__setattr__(self, "class_names", names)
        if self.ids is not None:
            ids = tuple(str(s) for s in self.ids)
            if len(ids) != m:
                raise DataFormatError(f"{len(ids)} ids for {m} rows")
            object.__setattr__(self, "ids", ids)

    def __len__(self):
        return int(self.labels.size)

    def subset(self, indices) -> "LabeledPredictionSet":
        idx = np.asarray(indices, dtype=np.int64)
        ids = None if self.ids is None else tuple(self.ids[i] for i in idx)
        return LabeledPredictionSet(self.probs[idx], self.labels[idx], self.class_names, ids)

    def supports(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_classes)

    def row_ids(self) -> list[str]:
        return list(self.ids) if self.ids is not None else [str(i) for i in range(len(self))]


# ---------------------------------------------------------------------------
# file formats


def _check_prob_row(values: list[float], row: int, n: Optional[int]) -> None:
    if n is not None and len(values) != n:
        raise InconsistentClassCountError(f"expected {n} probabilities, got {len(values)}", row)
    if not values:
        raise MalformedRowError("no probabilities", row)
    if any(not math.isfinite(v) for v in values):
        raise MalformedRowError("non-finite probability", row)
    if any(v < 0 for v in values):
        raise NegativeProbabilityError("negative probability", row)
    if sum(values) == 0:
        raise ZeroProbabilityRowError("all probabilities are zero", row)


def _parse_label(raw, row: int, n: int) -> int:
    try:
        value = float(raw)
    except (TypeError, ValueError):
        raise MalformedRowError(f"label {raw!r} is not an integer", row) from None
    if isinstance(raw, bool) or not value.is_integer():
        raise MalformedRowError(f"label {raw!r} is not an integer", row)
    label = int(value)
    if not 0 <= label < n:
        raise LabelOutOfRangeError(f"label {label} outside [0, {n})", row)
    return label


def _read_csv(path: Path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataFormatError(f"{path}: empty file") from None
        prob_cols = [i for i, h in enumerate(header) if h.startswith("prob_")]
        expected = [f"prob_{k}" for k in range(len(prob_cols))]
        if [header[i] for i in prob_cols] != expected or "label" not in header:
            raise DataFormatError(
                f"{path}: header must be prob_0,...,prob_{{N-1}},label (optional id)"
            )
        label_col = header.index("label")
        id_col = header.index("id") if "id" in header else None
        n = len(prob_cols)
        probs, labels, ids = [], [], []
        for row, rec in enumerate(reader, start=1):
            if not rec or all(not c.strip() for c in rec):
                continue
            if len(rec) != len(header):
                raise InconsistentClassCountError(
                    f"expected {len(header)} fields, got {len(rec)}", row
                )
            try:
                values = [float(rec[i]) for i in prob_cols]
            except ValueError:
                raise MalformedRowError("unparseable probability", row) from None
            _check_prob_row(values, row, n)
            labels.append(_parse_label(rec[label_col].strip(), row, n))
            probs.append(values)
            if id_col is not None:
                ids.append(rec[id_col])
    return probs, labels, (ids if id_col is not None else None), n


def _read_jsonl(path: Path):
    probs, labels, ids = [], [], []
    n = None
    with open(path, encoding="utf-8") as fh:
        for row, line in enumerate((ln for ln in fh if ln.strip()), start=1):
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRowError(f"invalid JSON ({exc.msg})", row) from None
            if not isinstance(rec, dict) or "probs" not in rec or "label" not in rec:
                raise MalformedRowError('expected {"probs": [...], "label": int}', row)
            raw = rec["probs"]
            if not isinstance(raw, list) or not all(
                isinstance(v, (int, float)) and not isinstance(v, bool) for v in raw
            ):
                raise MalformedRowError('"probs" must be a list of numbers', row)
            values = [float(v) for v in raw]
            _check_prob_row(values, row, n)
            n = len(values)
            labels.append(_parse_label(rec["label"], row, n))
            probs.append(values)
            ids.append(rec.get("id"))
    if n is None:
        raise DataFormatError(f"{path}: no records")
    has_ids = any(i is not None for i in ids)
    if has_ids:
        ids = [str(i) if i is not None else str(k) for k, i in enumerate(ids)]
    return probs, labels, (ids if has_ids else None), n


def load_predictions(path, format: Optional[str] = None) -> LabeledPredictionSet:
    """Read a CSV or JSONL prediction file.

    ``format`` defaults to the file extension. Each kind of row defect raises
    its own ``DataFormatError`` subclass carrying the 1-based row number.
    """
    path = Path(path)
    fmt_ = (format or path.suffix.lstrip(".")).lower()
    if fmt_ not in FORMATS:
        raise ConfigError(f"unknown prediction format {fmt_!r}; use csv or jsonl")
    reader = _read_csv if fmt_ == "csv" else _read_jsonl
    probs, labels, ids, n = reader(path)
    if not labels:
        raise DataFormatError(f"{path}: no data rows")
    return LabeledPredictionSet(np.array(probs, dtype=float).reshape(-1, n), np.array(labels), ids=ids)


def save_predictions(data: LabeledPredictionSet, path, format: Optional[str] = None) -> Path:
    path = Path(path)
    fmt_ = (format or path.suffix.lstrip(".")).lower()
    if fmt_ not in FORMATS:
        raise ConfigError(f"unknown prediction format {fmt_!r}; use csv or jsonl")
    # repr() round-trips floats exactly
    if fmt_ == "csv":
        header = [f"prob_{k}" for k in range(data.n_classes)] + ["label"]
        if data.ids is not None:
            header.append("id")
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for m in range(len(data)):
                rec = [repr(float(p)) for p in data.probs[m]] + [int(data.labels[m])]
                if data.ids is not None:
                    rec.append(data.ids[m])
                writer.writerow(rec)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            for m in range(len(data)):
                rec = {"probs": [float(p) for p in data.probs[m]], "label": int(data.labels[m])}
                if data.ids is not None:
                    rec["id"] = data.ids[m]
                fh.write(json.dumps(rec) + "\n")
    return path


def load_accuracy_file(path) -> ClassAccuracyVector:
    """Read ``{"accuracies": [...], "supports": [...], "class_names": [...]}``."""
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return ClassAccuracyVector.from_dict(doc)


# ---------------------------------------------------------------------------
# predictions and accuracy


def argmax_predict(row) -> int:
    """Index of the largest entry; ties go to the lowest index."""
    return int(np.argmax(np.asarray(row)))


def per_class_accuracy(
    data: LabeledPredictionSet, predictions: Optional[Sequence[int]] = None, strict: bool = False
) -> ClassAccuracyVector:
    """Fraction of each class's instances predicted correctly.

    With ``predictions=None`` the argmax of each probability row is used.
    Classes without instances get accuracy 0 and support 0; ``strict=True``
    turns that into an ``UnsupportedClassError``.
    """
    if predictions is None:
        preds = np.argmax(data.probs, axis=1)
    else:
        preds = np.asarray(predictions)
        if preds.shape != data.labels.shape:
            raise ValueError(f"{preds.size} predictions for {len(data)} rows")
    return _accuracy_from_hits(preds == data.labels, data.labels, data.n_classes, data.class_names, strict)


def _accuracy_from_hits(hits, labels, n, class_names=None, strict=False) -> ClassAccuracyVector:
    supports = np.bincount(labels, minlength=n)
    correct = np.bincount(labels, weights=hits, minlength=n)
    empty = supports == 0
    if strict and empty.any():
        raise UnsupportedClassError(f"classes {np.flatnonzero(empty).tolist()} have no instances")
    acc = np.divide(correct, supports, out=np.zeros(n), where=~empty)
    return ClassAccuracyVector(acc, supports, class_names)


# ---------------------------------------------------------------------------
# splitting


@dataclass(frozen=True)
class SplitSpec:
    optimization_fraction: float = 0.5
    seed: int = 0
    stratified: bool = True

    def __post_init__(self):
        if not 0.0 < self.optimization_fraction < 1.0:
            raise ConfigError(
                f"optimization_fraction must be in (0, 1), got {self.optimization_fraction}"
            )
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")


# guards float products such as 0.7 * 10 = 7.000000000000001
_ROUND_EPS = 1e-9


def split_indices(labels, spec: SplitSpec) -> tuple[np.ndarray, np.ndarray]:
    """Row indices of the optimization part and the test part, each sorted.

    Plain mode puts ``floor(fraction * M)`` rows in the optimization part,
    clamped so each part keeps at least one row. Stratified mode splits each
    class separately, rounding up in favour of the optimization part while
    leaving at least one instance of every class for testing.
    """
    labels = np.asarray(labels)
    m = labels.size
    if m < 2:
        raise InfeasibleError("cannot split fewer than two rows")
    rng = np.random.default_rng(int(spec.seed))
    frac = spec.optimization_fraction
    if not spec.stratified:
        k = min(max(math.floor(frac * m + _ROUND_EPS), 1), m - 1)
        perm = rng.permutation(m)
        return np.sort(perm[:k]), np.sort(perm[k:])

    opt, test = [], []
    for cls in np.unique(labels):
        members = np.flatnonzero(labels == cls)
        if members.size < 2:
            raise InfeasibleError(
                f"stratified split needs at least 2 instances per class; class {cls} has {members.size}"
            )
        k = min(max(math.ceil(frac * members.size - _ROUND_EPS), 1), members.size - 1)
        members = rng.permutation(members)
        opt.append(members[:k])
        test.append(members[k:])
    return np.sort(np.concatenate(opt)), np.sort(np.concatenate(test))


def split(data: LabeledPredictionSet, spec: SplitSpec):
    opt_idx, test_idx = split_indices(data.labels, spec)
    return data.subset(opt_idx), data.subset(test_idx)


# ---------------------------------------------------------------------------
# synthetic data


@dataclass(frozen=True)
class SynthSpec:
    """Recipe for a synthetic prediction set with controllable head-class bias.

    Each instance gets logits ``noise_scale * eps + onehot(label)`` plus
    ``head_bias`` on every head class, and probabilities are their softmax.
    With ``head_bias = 0`` all classes are equally easy; increasing it pulls
    predictions toward the head classes.
    """

    n_classes: int
    instances_per_class: tuple
    head_bias: float = 0.0
    head_classes: frozenset = frozenset()
    noise_scale: float = 1.0
    seed: int = 0

    def __post_init__(self):
        counts = self.instances_per_class
        if isinstance(counts, int):
            counts = (counts,) * int(self.n_classes)
        object.__setattr__(self, "instances_per_class", tuple(int(c) for c in counts))
        object.__setattr__(self, "head_classes", frozenset(int(h) for h in self.head_classes))
        if self.n_classes < 2:
            raise ConfigError("n_classes must be at least 2")
        if len(self.instances_per_class) != self.n_classes:
            raise ConfigError(
                f"{len(self.instances_per_class)} counts given for {self.n_classes} classes"
            )
        if any(c < 1 for c in self.instances_per_class):
            raise ConfigError("every class needs at least one instance")
        if any(not 0 <= h < self.n_classes for h in self.head_classes):
            raise ConfigError("head class index out of range")
        if self.head_bias < 0 or self.noise_scale < 0:
            raise ConfigError("head_bias and noise_scale must be non-negative")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")


def synthesize(spec: SynthSpec) -> LabeledPredictionSet:
    rng = np.random.default_rng(int(spec.seed))
    n = spec.n_classes
    labels = np.repeat(np.arange(n), spec.instances_per_class)
    labels = labels[rng.permutation(labels.size)]
    logits = spec.noise_scale * rng.standard_normal((labels.size, n))
    logits[np.arange(labels.size), labels] += 1.0
    head = np.zeros(n)
    head[list(spec.head_classes)] = spec.head_bias
    logits += head
    logits -= logits.max(axis=1, keepdims=True)
    probs = np.exp(logits)
    probs /= probs.sum(axis=1, keepdims=True)
    return LabeledPredictionSet(probs, labels)
