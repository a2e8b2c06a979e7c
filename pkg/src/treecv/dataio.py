"""Dataset ingestion, preprocessing, and synthetic data.

The on-disk interchange format is sparse `label index:value` text, one
point per line, 1-based strictly increasing indices, `#` comments, UTF-8
with LF or CRLF endings.  Missing indices are zero; parsed datasets are
dense.

Transforms are fitted on a full dataset (before any partitioning) and
can be re-applied to other data via the returned spec.  Generators and
shuffles are pure functions of their seed.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from .core import DegenerateRangeError, Dataset, ParseError
from .rng import SplitMix64Stream, derive_seed

TAG_SYNTH = 5
TAG_DATASET_SHUFFLE = 6


# ---------------------------------------------------------------------------
# Sparse text format


def parse_sparse_text(source, expected_dim: int | None = None) -> Dataset:
    """Parse `label index:value ...` lines into a dense labeled Dataset.

    `source` is a string or a text stream.  The feature dimension is the
    largest index seen, or `expected_dim` when given (indices beyond it
    are an error).  Parse problems raise ParseError with the 1-based line
    number.
    """
    if isinstance(source, str):
        source = io.StringIO(source)
    labels: list[float] = []
    rows: list[list[tuple[int, float]]] = []
    max_index = 0
    for line_number, raw in enumerate(source, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        try:
            label = float(tokens[0])
        except ValueError:
            raise ParseError(line_number, f"unparsable label {tokens[0]!r}") from None
        if not math.isfinite(label):
            raise ParseError(line_number, f"non-finite label {tokens[0]!r}")
        entries: list[tuple[int, float]] = []
        previous = 0
        for token in tokens[1:]:
            index_text, _, value_text = token.partition(":")
            if not value_text:
                raise ParseError(line_number, f"expected index:value, got {token!r}")
            try:
                index = int(index_text)
            except ValueError:
                raise ParseError(line_number, f"unparsable feature index {index_text!r}") from None
            if index < 1:
                raise ParseError(line_number, f"feature index must be >= 1, got {index}")
            if index <= previous:
                raise ParseError(
                    line_number, f"feature indices must be strictly increasing, got {index} after {previous}"
                )
            try:
                value = float(value_text)
            except ValueError:
                raise ParseError(line_number, f"unparsable feature value {value_text!r}") from None
            if not math.isfinite(value):
                raise ParseError(line_number, f"non-finite feature value {value_text!r}")
            if expected_dim is not None and index > expected_dim:
                raise ParseError(
                    line_number, f"feature index {index} exceeds expected dimension {expected_dim}"
                )
            entries.append((index, value))
            previous = index
        labels.append(label)
        rows.append(entries)
        if previous > max_index:
            max_index = previous
    if not rows:
        raise ParseError(0, "no data lines in input")
    dim = expected_dim if expected_dim is not None else max_index
    if dim < 1:
        raise ParseError(0, "cannot infer a feature dimension from all-empty rows")
    x = np.zeros((len(rows), dim))
    for i, entries in enumerate(rows):
        for index, value in entries:
            x[i, index - 1] = value
    return Dataset(x, np.asarray(labels))


def serialize_sparse_text(dataset: Dataset) -> str:
    """Render a labeled dataset in the sparse text format, eliding zeros."""
    if dataset.y is None:
        raise ValueError("the sparse text format requires labeled data")
    lines = []
    for i in range(dataset.n):
        parts = [repr(float(dataset.y[i]))]
        row = dataset.x[i]
        for j in range(dataset.dim):
            v = float(row[j])
            if v != 0.0:
                parts.append(f"{j + 1}:{v!r}")
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Transforms


TRANSFORM_KINDS = ("unit-variance", "targets-to-unit", "binarize-label")


@dataclass(frozen=True)
class TransformSpec:
    """A fitted preprocessing step that can be re-applied to other data.

    kind "unit-variance" divides each feature by its population standard
    deviation (zero-variance features pass through unscaled and are named
    in `warnings`).  kind "targets-to-unit" min-max scales outcomes to
    [0, 1].  kind "binarize-label" maps outcomes equal to `target_label`
    to +1 and everything else to -1.
    """

    kind: str
    feature_scale: tuple[float, ...] | None = None
    target_min: float | None = None
    target_max: float | None = None
    target_label: float | None = None
    warnings: tuple[str, ...] = ()

    def apply(self, dataset: Dataset) -> Dataset:
        if self.kind == "unit-variance":
            scale = np.asarray(self.feature_scale)
            if scale.shape[0] != dataset.dim:
                raise ValueError("fitted feature count does not match dataset")
            return Dataset(dataset.x * scale, dataset.y)
        if self.kind == "targets-to-unit":
            if dataset.y is None:
                raise ValueError("targets-to-unit requires labeled data")
            span = self.target_max - self.target_min
            return Dataset(dataset.x, (dataset.y - self.target_min) / span)
        if self.kind == "binarize-label":
            if dataset.y is None:
                raise ValueError("binarize-label requires labeled data")
            return Dataset(dataset.x, np.where(dataset.y == self.target_label, 1.0, -1.0))
        raise ValueError(f"unknown transform kind {self.kind!r}")


def fit_transform(dataset: Dataset, kind: str, target_label: float | None = None):
    """Fit a transform on a dataset and apply it; returns (dataset, spec)."""
    if kind == "unit-variance":
        std = dataset.x.std(axis=0)
        warnings = tuple(
            f"feature {j + 1} has zero variance; left unscaled"
            for j in range(dataset.dim)
            if std[j] == 0.0
        )
        scale = 1.0 / np.where(std > 0.0, std, 1.0)
        spec = TransformSpec(kind, feature_scale=tuple(float(s) for s in scale),
                             warnings=warnings)
    elif kind == "targets-to-unit":
        if dataset.y is None:
            raise ValueError("targets-to-unit requires labeled data")
        lo, hi = float(dataset.y.min()), float(dataset.y.max())
        if hi == lo:
            raise DegenerateRangeError("target range is degenerate (constant outcomes)")
        spec = TransformSpec(kind, target_min=lo, target_max=hi)
    elif kind == "binarize-label":
        if dataset.y is None:
            raise ValueError("binarize-label requires labeled data")
        if target_label is None:
            raise ValueError("binarize-label requires a target label")
        spec = TransformSpec(kind, target_label=float(target_label))
    else:
        raise ValueError(f"unknown transform kind {kind!r}; expected one of {TRANSFORM_KINDS}")
    return spec.apply(dataset), spec


# ---------------------------------------------------------------------------
# Synthetic datasets


def _check_size(n: int, d: int) -> None:
    if n < 2 or d < 1:
        raise ValueError(f"need n >= 2 and d >= 1, got n={n}, d={d}")


def _unit_direction(stream: SplitMix64Stream, d: int) -> np.ndarray:
    v = stream.normal_array(d)
    norm = float(np.sqrt(v @ v))
    if norm == 0.0:
        v[0] = 1.0
        norm = 1.0
    return v / norm


def synth_classification(n: int, d: int, margin: float = 0.0, noise: float = 0.0,
                         seed: int = 0) -> Dataset:
    """Linear two-class data with labels in {+1, -1}.

    Points are standard normal, pushed `margin` away from a random
    separating hyperplane; each label then flips with probability
    `noise`.  noise=0 with positive margin gives a separable set.
    """
    _check_size(n, d)
    stream = SplitMix64Stream(derive_seed(seed, TAG_SYNTH, 1))
    w = _unit_direction(stream, d)
    x = stream.normal_array(n * d).reshape(n, d)
    score = x @ w
    side = np.where(score >= 0.0, 1.0, -1.0)
    if margin > 0.0:
        x += (margin * side)[:, None] * w
    y = side.copy()
    if noise > 0.0:
        flips = stream.uniform_array(n) < noise
        y[flips] = -y[flips]
    return Dataset(x, y)


def synth_regression(n: int, d: int, noise: float = 0.0, seed: int = 0) -> Dataset:
    """Linear regression data with targets min-max scaled into [0, 1]."""
    _check_size(n, d)
    stream = SplitMix64Stream(derive_seed(seed, TAG_SYNTH, 2))
    w = _unit_direction(stream, d)
    x = stream.normal_array(n * d).reshape(n, d)
    y = x @ w
    if noise > 0.0:
        y = y + noise * stream.normal_array(n)
    lo, hi = float(y.min()), float(y.max())
    if hi == lo:
        y = np.full(n, 0.5)
    else:
        y = (y - lo) / (hi - lo)
    return Dataset(x, y)


def synth_blobs(n: int, d: int, n_clusters: int, spread: float = 1.0, seed: int = 0) -> Dataset:
    """Unlabeled points around n_clusters random centers.

    Cluster assignment cycles deterministically through the centers, so
    every cluster is populated whenever n >= n_clusters; spread is the
    per-coordinate standard deviation around each center.
    """
    _check_size(n, d)
    if n_clusters < 1:
        raise ValueError("n_clusters must be at least 1")
    stream = SplitMix64Stream(derive_seed(seed, TAG_SYNTH, 3))
    centers = 10.0 * stream.normal_array(n_clusters * d).reshape(n_clusters, d)
    assignment = np.arange(n) % n_clusters
    x = centers[assignment]
    if spread > 0.0:
        x = x + spread * stream.normal_array(n * d).reshape(n, d)
    return Dataset(x)


def shuffle_dataset(dataset: Dataset, seed: int = 0) -> Dataset:
    """Seeded uniform permutation of the points; pure in (dataset, seed)."""
    stream = SplitMix64Stream(derive_seed(seed, TAG_DATASET_SHUFFLE))
    return dataset.take(stream.permutation(dataset.n))
