"""Dataset model, CSV ingestion and class bookkeeping."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np


class DataError(ValueError):
    """Input data violates a Dataset invariant (bad CSV, NaN, empty file...)."""


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Dataset:
    """Immutable labeled feature matrix.

    ``labels`` are dense integers ``0..C-1``; ``classes`` maps them back to
    the original label strings when the data came from a file.
    """

    features: np.ndarray
    labels: np.ndarray
    row_ids: np.ndarray | None = None
    feature_names: tuple[str, ...] | None = None
    classes: tuple[str, ...] | None = None
    label_name: str | None = None

    def __post_init__(self):
        X = np.asarray(self.features, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(-1, 1) if X.size else X.reshape(0, 0)
        if X.ndim != 2:
            raise DataError("features must be a 2-D matrix")
        y = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if len(y) != X.shape[0]:
            raise DataError(
                f"labels length {len(y)} does not match {X.shape[0]} feature rows")
        if X.size and not np.all(np.isfinite(X)):
            r, c = np.argwhere(~np.isfinite(X))[0]
            raise DataError(f"non-finite feature value at row {r}, column {c}")
        ids = (np.arange(len(y), dtype=np.int64) if self.row_ids is None
               else np.asarray(self.row_ids, dtype=np.int64).reshape(-1))
        if len(ids) != len(y):
            raise DataError("row_ids length does not match row count")
        if len(np.unique(ids)) != len(ids):
            raise DataError("row_ids must be unique")
        if self.feature_names is not None and len(self.feature_names) != X.shape[1]:
            raise DataError("feature_names length does not match column count")
        object.__setattr__(self, "features", _frozen(X))
        object.__setattr__(self, "labels", _frozen(y))
        object.__setattr__(self, "row_ids", _frozen(ids))
        if self.feature_names is not None:
            object.__setattr__(self, "feature_names", tuple(self.feature_names))
        if self.classes is not None:
            object.__setattr__(self, "classes", tuple(self.classes))

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def __len__(self) -> int:
        return self.n

    def take(self, index) -> "Dataset":
        """Row subset (by position or boolean mask); metadata is kept."""
        index = np.asarray(index)
        if index.dtype == bool:
            index = np.flatnonzero(index)
        index = index.astype(np.int64, copy=False)
        X = self.features[index]
        return Dataset(X, self.labels[index], self.row_ids[index],
                       self.feature_names, self.classes, self.label_name)

    def with_features(self, features: np.ndarray) -> "Dataset":
        return Dataset(features, self.labels, self.row_ids,
                       self.feature_names, self.classes, self.label_name)

    def positions(self, row_ids) -> np.ndarray:
        """Positions of the given row_ids in this dataset."""
        order = np.argsort(self.row_ids)
        pos = np.searchsorted(self.row_ids, row_ids, sorter=order)
        pos = order[np.minimum(pos, len(order) - 1)]
        if not np.array_equal(self.row_ids[pos], np.asarray(row_ids)):
            raise KeyError("row_id not present in dataset")
        return pos

    def label_text(self, label: int) -> str:
        if self.classes is not None:
            return self.classes[label]
        return str(label)


@dataclass(frozen=True)
class ClassSummary:
    label: int
    count: int


def class_counts(ds: Dataset) -> list[ClassSummary]:
    """One summary per distinct label, sorted by label."""
    labels, counts = np.unique(ds.labels, return_counts=True)
    return [ClassSummary(int(l), int(c)) for l, c in zip(labels, counts)]


def filter_by_label(ds: Dataset, label: int, keep_equal: bool = True) -> Dataset:
    """Minority view (``keep_equal``) or the pooled rest of the data."""
    mask = ds.labels == label
    return ds.take(mask if keep_equal else ~mask)


def concat(parts: Sequence[Dataset]) -> Dataset:
    """Row-wise union of datasets sharing a feature space."""
    parts = [p for p in parts if p.n] or list(parts[:1])
    if not parts:
        raise DataError("nothing to concatenate")
    first = parts[0]
    return Dataset(np.vstack([p.features for p in parts]),
                   np.concatenate([p.labels for p in parts]),
                   np.concatenate([p.row_ids for p in parts]),
                   first.feature_names, first.classes, first.label_name)


def _encode_labels(raw: list[str]) -> tuple[np.ndarray, tuple[str, ...]]:
    uniq = sorted(set(raw))
    try:
        uniq = sorted(uniq, key=float)
    except ValueError:
        pass
    index = {lab: i for i, lab in enumerate(uniq)}
    return np.array([index[v] for v in raw], dtype=np.int64), tuple(uniq)


def load_csv(path: str | Path, label_column: str | int = -1,
             has_header: bool = True) -> Dataset:
    """Read a numeric CSV with one label column.

    ``label_column`` is a header name or a zero-based index (negative counts
    from the end). Labels are re-encoded to ``0..C-1`` in sorted order.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(cell.strip() for cell in r)]
    header = None
    if has_header:
        if not rows:
            raise DataError("empty dataset")
        header, rows = [h.strip() for h in rows[0]], rows[1:]
    if not rows:
        raise DataError("empty dataset")
    width = len(header) if header else len(rows[0])
    if isinstance(label_column, str) and not label_column.lstrip("-").isdigit():
        if header is None or label_column not in header:
            raise DataError(f"label column {label_column!r} not found")
        label_idx = header.index(label_column)
    else:
        label_idx = int(label_column)
        if not -width <= label_idx < width:
            raise DataError(f"label column index {label_idx} out of range")
        label_idx %= width
    feature_cols = [c for c in range(width) if c != label_idx]

    X = np.empty((len(rows), len(feature_cols)))
    raw_labels = []
    for i, row in enumerate(rows):
        line = i + (2 if header else 1)
        if len(row) != width:
            raise DataError(f"row {line}: expected {width} fields, found {len(row)}")
        for j, c in enumerate(feature_cols):
            cell = row[c].strip()
            try:
                value = float(cell)
            except ValueError:
                raise DataError(
                    f"row {line}, column {c}: non-numeric value {cell!r}") from None
            if not math.isfinite(value):
                raise DataError(f"row {line}, column {c}: non-finite value {cell!r}")
            X[i, j] = value
        raw_labels.append(row[label_idx].strip())

    labels, classes = _encode_labels(raw_labels)
    names = tuple(header[c] for c in feature_cols) if header else None
    label_name = header[label_idx] if header else None
    return Dataset(X, labels, None, names, classes, label_name)


def write_csv(ds: Dataset, path: str | Path, label_name: str | None = None) -> None:
    """Write features then the (original) label; doubles use 17 significant digits."""
    names = list(ds.feature_names or [f"x{j}" for j in range(ds.d)])
    label_name = label_name or ds.label_name or "label"
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names + [label_name])
        for row, lab in zip(ds.features, ds.labels):
            w.writerow([format(v, ".17g") for v in row] + [ds.label_text(int(lab))])
