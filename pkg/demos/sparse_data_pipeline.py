"""
From sparse text to a cross-validation estimate: parse, preprocess with
fitted transforms, shuffle, and run both schedulers.
"""

import io

from treecv import (
    Pegasos,
    ZERO_ONE,
    fit_transform,
    parse_sparse_text,
    partition,
    serialize_sparse_text,
    shuffle_dataset,
    standard_cv,
    tree_cv,
)

## The interchange format: one point per line, "label index:value ...",
## 1-based strictly increasing indices, zeros omitted, # comments.

text = """\
# class 1 vs class 2, three sparse features
1 1:2.5 3:1.0
2 2:4.0
1 1:1.5 2:0.5
2 2:3.0 3:2.0
1 1:3.0
2 1:0.5 2:5.0
1 1:2.0 3:0.5
2 2:2.5 3:1.5
"""

raw = parse_sparse_text(io.StringIO(text))
print(f"parsed {raw.n} points, {raw.dim} features")

## Serialization round-trips exactly (zeros elided on the way out).

assert parse_sparse_text(serialize_sparse_text(raw), expected_dim=raw.dim) == raw

## Preprocess: class tokens to +/-1, then unit-variance features.  Both
## transforms are fitted on the full dataset and reusable via their specs.

labeled, _ = fit_transform(raw, "binarize-label", target_label=1.0)
scaled, spec = fit_transform(labeled, "unit-variance")
print("feature scales:", [round(s, 3) for s in spec.feature_scale])

## Chunks are contiguous, so shuffle once (seeded) before partitioning.

data = shuffle_dataset(scaled, seed=4)
part = partition(data, k=4)

tree = tree_cv(lambda: Pegasos(data.dim, lam=0.1), data, part, ZERO_ONE)
std = standard_cv(lambda: Pegasos(data.dim, lam=0.1), data, part, ZERO_ONE)
print(f"tree misclassification estimate:     {tree.estimate:.3f}")
print(f"standard misclassification estimate: {std.estimate:.3f}")
