"""
Unsupervised cross-validation: online k-means scored by quantization
error on held-out chunks.  No labels anywhere.
"""

from treecv import OnlineKMeans, QUANTIZATION, TreeCvConfig, partition, standard_cv, synth_blobs, tree_cv

## Three well-separated blobs, no noise: a matching 3-center model
## quantizes held-out points perfectly and the CV loss is zero.

tight = synth_blobs(n=120, d=2, n_clusters=3, spread=0.0, seed=11)
part = partition(tight, k=6)
report = tree_cv(lambda: OnlineKMeans(2, 3), tight, part, QUANTIZATION)
print(f"spread 0.0: cv quantization loss = {report.estimate}")

## With spread the loss tracks the within-cluster variance (about
## spread^2 * d per point), and both schedulers agree closely.

for spread in (0.5, 1.0, 2.0):
    data = synth_blobs(n=120, d=2, n_clusters=3, spread=spread, seed=11)
    part = partition(data, k=6)
    tree = tree_cv(lambda: OnlineKMeans(2, 3), data, part, QUANTIZATION,
                   TreeCvConfig(seed=1))
    std = standard_cv(lambda: OnlineKMeans(2, 3), data, part, QUANTIZATION, seed=1)
    print(f"spread {spread}: tree={tree.estimate:8.4f}  standard={std.estimate:8.4f}"
          f"  (reference {spread * spread * 2:.2f})")

## Mismatched cluster count shows up as a large held-out quantization loss.

data = synth_blobs(n=120, d=2, n_clusters=3, spread=0.3, seed=11)
part = partition(data, k=6)
for K in (1, 2, 3, 4):
    report = tree_cv(lambda: OnlineKMeans(2, K), data, part, QUANTIZATION)
    print(f"K={K}: cv loss {report.estimate:8.3f}")
