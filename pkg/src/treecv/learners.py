"""Built-in incremental learners.

All four learners are single-pass online algorithms: `update` applies the
single-point rule to each row of the batch in order, and training state is
small enough that snapshots are plain value copies.

* `Pegasos`: regularized hinge-loss SGD for binary classification.  The
  model is the last iterate (no averaging, no projection), step size
  1/(lambda*t), and the step counter t persists across incremental calls
  so batch and chunked feeding share one trajectory.
* `LsqSgd`: least-squares SGD with iterates projected into the unit
  l2-ball; predictions use the running average of the projected iterates.
* `OnlineKMeans`: sequential k-means.  The first K distinct points become
  the initial centers; each later point moves its nearest center to the
  running mean of the points assigned to it.
* `MeanPredictor`: predicts the mean outcome seen so far.  The running
  sum is kept as exact float partials, so the model is bit-for-bit
  insensitive to feeding order and batching; it is the exactness oracle
  for scheduler-equivalence tests.

`RecordingLearner` wraps any learner and logs every point it is fed; the
scheduler tests and the CLI's --verify path use it to replay training
sequences.
"""

from __future__ import annotations

import math

import numpy as np

from .core import (
    IncrementalLearner,
    LabelRequiredError,
    SavedState,
    StateMismatchError,
    UntrainedModelError,
)


def _exact_add(partials: list[float], value: float) -> None:
    """Shewchuk accumulation: keep the running sum as exact float partials."""
    i = 0
    for p in partials:
        if abs(value) < abs(p):
            value, p = p, value
        hi = value + p
        lo = p - (hi - value)
        if lo:
            partials[i] = lo
            i += 1
        value = hi
    partials[i:] = [value]


class Pegasos(IncrementalLearner):
    """Linear hinge-loss SGD classifier; predicts sign(w . x), ties as +1."""

    def __init__(self, dim: int, lam: float = 1e-4, seed: int = 0):
        super().__init__(seed)
        if lam <= 0:
            raise ValueError("lam must be positive")
        self.dim = dim
        self.lam = lam
        self.w = np.zeros(dim)
        self.t = 0

    def _update_point(self, x, y):
        if y is None:
            raise LabelRequiredError("classification update requires a binary label")
        self.t += 1
        eta = 1.0 / (self.lam * self.t)
        margin = y * float(self.w @ x)
        self.w *= 1.0 - eta * self.lam
        if margin < 1.0:
            self.w += (eta * y) * x

    def predict(self, x) -> float:
        return 1.0 if float(self.w @ x) >= 0.0 else -1.0

    def fresh(self):
        return Pegasos(self.dim, self.lam, seed=self.rng.state)

    def _fingerprint(self):
        return ("pegasos", self.dim, self.lam)

    def _get_state(self):
        return (self.w.copy(), self.t)

    def _set_state(self, payload):
        w, t = payload
        self.w = w.copy()
        self.t = t


class LsqSgd(IncrementalLearner):
    """Least-squares SGD constrained to the unit l2-ball, averaged iterates.

    Each step follows the squared-loss gradient 2(w.x - y)x with fixed
    step size alpha, projects back onto the unit ball when the step
    leaves it, and folds the projected iterate into the running average
    used for prediction.
    """

    def __init__(self, dim: int, alpha: float, seed: int = 0):
        super().__init__(seed)
        if alpha <= 0:
            raise ValueError("alpha must be positive")
        self.dim = dim
        self.alpha = alpha
        self.w = np.zeros(dim)
        self.w_avg = np.zeros(dim)
        self.t = 0

    def _update_point(self, x, y):
        if y is None:
            raise LabelRequiredError("regression update requires a real outcome")
        residual = float(self.w @ x) - y
        self.w -= (2.0 * self.alpha * residual) * x
        norm = math.sqrt(float(self.w @ self.w))
        if norm > 1.0:
            self.w /= norm
        self.t += 1
        self.w_avg += (self.w - self.w_avg) / self.t

    def predict(self, x) -> float:
        return float(self.w_avg @ x)

    def fresh(self):
        return LsqSgd(self.dim, self.alpha, seed=self.rng.state)

    def _fingerprint(self):
        return ("lsqsgd", self.dim, self.alpha)

    def _get_state(self):
        return (self.w.copy(), self.w_avg.copy(), self.t)

    def _set_state(self, payload):
        w, w_avg, t = payload
        self.w = w.copy()
        self.w_avg = w_avg.copy()
        self.t = t


class OnlineKMeans(IncrementalLearner):
    """Sequential k-means over unlabeled points; predicts the nearest center.

    Until K distinct points have been seen, each new distinct point seeds
    a center (count 1) and duplicates of an existing center are absorbed
    by the normal assignment rule, so counts always sum to the points
    seen.  Distance ties go to the lowest center index.
    """

    def __init__(self, dim: int, n_clusters: int, seed: int = 0):
        super().__init__(seed)
        if n_clusters < 1:
            raise ValueError("n_clusters must be at least 1")
        self.dim = dim
        self.n_clusters = n_clusters
        self.centers = np.zeros((n_clusters, dim))
        self.counts = np.zeros(n_clusters, dtype=np.int64)
        self.n_centers = 0

    def _nearest(self, x) -> int:
        active = self.centers[: self.n_centers]
        diffs = active - x
        return int(np.einsum("ij,ij->i", diffs, diffs).argmin())

    def _update_point(self, x, y):
        if self.n_centers < self.n_clusters:
            is_existing = self.n_centers > 0 and bool(
                (self.centers[: self.n_centers] == x).all(axis=1).any()
            )
            if not is_existing:
                self.centers[self.n_centers] = x
                self.counts[self.n_centers] = 1
                self.n_centers += 1
                return
        j = self._nearest(x)
        self.counts[j] += 1
        self.centers[j] += (x - self.centers[j]) / self.counts[j]

    def predict(self, x) -> np.ndarray:
        if self.n_centers == 0:
            raise UntrainedModelError("k-means has no centers before any update")
        return self.centers[self._nearest(x)].copy()

    def fresh(self):
        return OnlineKMeans(self.dim, self.n_clusters, seed=self.rng.state)

    def _fingerprint(self):
        return ("kmeans", self.dim, self.n_clusters)

    def _get_state(self):
        return (self.centers.copy(), self.counts.copy(), self.n_centers)

    def _set_state(self, payload):
        centers, counts, n_centers = payload
        self.centers = centers.copy()
        self.counts = counts.copy()
        self.n_centers = n_centers


class MeanPredictor(IncrementalLearner):
    """Predicts the mean outcome seen so far, bit-exactly order-insensitive.

    The outcome sum is held as exact float partials, so any permutation or
    batching of the same multiset yields an identical model.  Prediction
    on an untrained model is an error.
    """

    def __init__(self, dim: int = 1, seed: int = 0):
        super().__init__(seed)
        self.dim = dim
        self._partials: list[float] = []
        self.count = 0

    @property
    def total(self) -> float:
        return math.fsum(self._partials)

    def _update_point(self, x, y):
        if y is None:
            raise LabelRequiredError("mean predictor requires outcomes")
        _exact_add(self._partials, y)
        self.count += 1

    def predict(self, x) -> float:
        if self.count == 0:
            raise UntrainedModelError("mean predictor has seen no outcomes")
        return self.total / self.count

    def fresh(self):
        return MeanPredictor(self.dim, seed=self.rng.state)

    def _fingerprint(self):
        return ("mean", self.dim)

    def _get_state(self):
        return (tuple(self._partials), self.count)

    def _set_state(self, payload):
        partials, count = payload
        self._partials = list(partials)
        self.count = count


class RecordingLearner(IncrementalLearner):
    """Wrapper that records every fed point before forwarding to the inner
    learner.  `seen` is the list of (x, y) pairs in feeding order; it is
    saved and restored with the model, so each branch of a scheduler run
    carries exactly its own history.
    """

    def __init__(self, inner: IncrementalLearner):
        super().__init__(inner.rng.state)
        self.inner = inner
        self.seen: list[tuple[np.ndarray, float | None]] = []

    def _update_point(self, x, y):
        self.seen.append((x.copy(), y))
        self.inner._update_point(x, y)

    def predict(self, x):
        return self.inner.predict(x)

    def reseed(self, seed):
        self.inner.reseed(seed)

    def fresh(self):
        return RecordingLearner(self.inner.fresh())

    def _fingerprint(self):
        return ("recording", self.inner._fingerprint())

    def snapshot(self) -> SavedState:
        return SavedState(self._fingerprint(), (list(self.seen), self.inner.snapshot()))

    def restore(self, state: SavedState) -> None:
        if state.fingerprint != self._fingerprint():
            raise StateMismatchError("saved state does not match recording learner")
        seen, inner_state = state.payload
        self.seen = list(seen)
        self.inner.restore(inner_state)

    def _get_state(self):  # pragma: no cover - snapshot() is overridden
        raise NotImplementedError

    def _set_state(self, payload):  # pragma: no cover
        raise NotImplementedError
