"""
Anatomy of one leave-one-out run on four points: which ranges the
recursion visits, what each fold's model is fed, and in what order.
"""

import numpy as np

from treecv import Dataset, MeanPredictor, SQUARED, loocv, partition, tree_feed_orders

data = Dataset(np.arange(4.0).reshape(4, 1), np.array([0.0, 0.0, 0.0, 4.0]))

## Trace every recursion node.  The root holds out everything; each
## internal node trains the incoming model on the second half of its
## range, descends left, then trains the preserved model on the first
## half and descends right.  Leaves evaluate.

traces = []
report = loocv(lambda: MeanPredictor(1), data, SQUARED, trace_sink=traces)

print("visited nodes (pre-order):")
for t in traces:
    kind = "leaf" if t.start == t.end else "internal"
    print(f"  depth {t.depth}  chunks [{t.start}..{t.end}]  {kind}"
          f"  fed left/right: {t.points_fed_left}/{t.points_fed_right}")

## The induced feeding order per fold.  Fold 0's model never sees point 0;
## it learns points 2 and 3 at the root split, then point 1.

for fold, order in enumerate(tree_feed_orders(partition(data, 4))):
    print(f"fold {fold}: trained on points {order}, evaluated on point {fold}")

## Per-fold scores and the aggregate: with outcomes [0, 0, 0, 4] the three
## zero-outcome folds each score (4/3)^2 and the last scores 16, so the
## leave-one-out estimate is 16/3.

print("fold scores:", [round(s, 6) for s in report.fold_scores])
print(f"estimate: {report.estimate:.6f} (exact value 16/3 = {16/3:.6f})")
print(f"counters: {report.counters}")
