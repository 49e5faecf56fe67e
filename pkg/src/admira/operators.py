"""Linear measurement operators mapping m-by-n matrices to R^p.

Two concrete families: a dense Gaussian ensemble (one random frame per
measurement, inner-product measurements) and an entry-sampling operator
(matrix completion).  Both expose the forward map, its adjoint, and a
cheap path for factored low-rank inputs, plus Monte Carlo estimation of
rank-restricted isometry constants.
"""

from __future__ import annotations

import abc
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .linalg import FactoredMatrix, check_dense


def _rng(*key):
    """Deterministic 64-bit PRNG (PCG64) keyed by a tuple of integers."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(key)))


class MeasurementOperator(abc.ABC):
    """Linear map A from m-by-n matrices to measurement vectors in R^p."""

    m: int
    n: int
    p: int

    @property
    def shape(self):
        return (self.m, self.n)

    def apply(self, X):
        """Forward map.  Accepts dense arrays, factored matrices, and
        scipy sparse matrices; factored inputs are never densified."""
        if isinstance(X, FactoredMatrix):
            if X.shape != self.shape:
                raise ValueError("operator/matrix shape mismatch")
            return self.apply_combination(X.left, X.right, X.sigmas)
        return self._apply_explicit(X)

    def apply_factored(self, F):
        """Forward map on a factored matrix (alias for :meth:`apply`)."""
        return self.apply(F)

    def apply_rank_one(self, u, v):
        """Measurements of the rank-one matrix ``u v^T``."""
        return self.apply_combination(np.asarray(u)[:, None],
                                      np.asarray(v)[:, None], np.ones(1))

    @abc.abstractmethod
    def apply_combination(self, left, right, coeffs):
        """Measurements of ``sum_k coeffs[k] * left[:,k] right[:,k]^T``.

        Coefficients may be negative; no ordering is assumed.
        """

    @abc.abstractmethod
    def _apply_explicit(self, X):
        """Forward map on a dense or scipy sparse matrix."""

    @abc.abstractmethod
    def adjoint(self, y):
        """Back-projection A* y as an explicit m-by-n matrix.

        Returns a scipy sparse matrix when the operator is sparse and a
        dense ndarray otherwise; both support matrix-vector products and
        densification, so the result can feed the truncated SVD directly.
        """

    def _check_vec(self, y):
        y = np.asarray(y, dtype=np.float64).ravel()
        if y.size != self.p:
            raise ValueError(f"expected length-{self.p} vector, got {y.size}")
        if not np.all(np.isfinite(y)):
            raise ValueError("measurement vector contains NaN or Inf")
        return y


class GaussianOperator(MeasurementOperator):
    """Dense random ensemble: measurement k is the inner product with an
    i.i.d. N(0, 1/p) frame, so ``E ||A X||^2 = ||X||_F^2``.

    Frames are regenerated from ``(m, n, p, seed)``, which is also the
    serialized form.
    """

    def __init__(self, m, n, p, seed=0):
        if min(m, n, p) < 1:
            raise ValueError("dimensions must be positive")
        self.m, self.n, self.p = int(m), int(n), int(p)
        self.seed = int(seed)
        frames = _rng(self.seed).standard_normal((self.p, self.m * self.n))
        frames /= np.sqrt(self.p)
        frames.flags.writeable = False
        self.frames = frames

    def _apply_explicit(self, X):
        if sp.issparse(X):
            if X.shape != self.shape:
                raise ValueError("operator/matrix shape mismatch")
            return np.asarray(self.frames @ X.reshape(self.m * self.n, 1).todense()).ravel()
        X = check_dense(X)
        if X.shape != self.shape:
            raise ValueError("operator/matrix shape mismatch")
        return self.frames @ X.ravel()

    def apply_combination(self, left, right, coeffs):
        # Per-term contraction keeps memory at O(p m); the dense m-by-n
        # product is never formed.
        frames3 = self.frames.reshape(self.p, self.m, self.n)
        y = np.zeros(self.p)
        for c, u, v in zip(coeffs, left.T, right.T):
            y += c * ((frames3 @ v) @ u)
        return y

    def adjoint(self, y):
        y = self._check_vec(y)
        return (self.frames.T @ y).reshape(self.m, self.n)


def sample_indices_without_replacement(total, count, seed):
    """``count`` distinct integers from ``range(total)`` by a seeded
    partial Fisher-Yates shuffle over a virtual range (no length-``total``
    array is materialized)."""
    if not 0 <= count <= total:
        raise ValueError("need 0 <= count <= total")
    rng = _rng(seed)
    swapped = {}
    out = np.empty(count, dtype=np.int64)
    for i in range(count):
        j = int(rng.integers(i, total))
        out[i] = swapped.get(j, j)
        swapped[j] = swapped.get(i, i)
    return out


class SamplingOperator(MeasurementOperator):
    """Entry sampling: measurement k reads the matrix entry at
    ``(rows[k], cols[k])``.  Index pairs are distinct."""

    def __init__(self, m, n, rows, cols, seed=None):
        self.m, self.n = int(m), int(n)
        rows = np.asarray(rows, dtype=np.int64).ravel()
        cols = np.asarray(cols, dtype=np.int64).ravel()
        if rows.size != cols.size:
            raise ValueError("rows and cols must have equal length")
        if rows.size > self.m * self.n:
            raise ValueError("more samples than matrix entries")
        if rows.size and (rows.min() < 0 or rows.max() >= self.m
                          or cols.min() < 0 or cols.max() >= self.n):
            raise ValueError("sample index out of range")
        flat = rows * self.n + cols
        if np.unique(flat).size != flat.size:
            raise ValueError("sample indices must be distinct")
        self.p = rows.size
        rows.flags.writeable = False
        cols.flags.writeable = False
        self.rows, self.cols = rows, cols
        self.seed = seed

    @classmethod
    def random(cls, m, n, p, seed=0):
        """Uniform sampling of ``p`` distinct entries."""
        flat = sample_indices_without_replacement(m * n, p, seed)
        return cls(m, n, flat // n, flat % n, seed=seed)

    @classmethod
    def identity(cls, m, n):
        """All entries in row-major order: the vectorization map, an
        exact isometry with ``A* A = id``."""
        flat = np.arange(m * n, dtype=np.int64)
        return cls(m, n, flat // n, flat % n)

    def _apply_explicit(self, X):
        if X.shape != self.shape:
            raise ValueError("operator/matrix shape mismatch")
        if sp.issparse(X):
            return np.asarray(X.tocsr()[self.rows, self.cols]).ravel()
        X = check_dense(X)
        return X[self.rows, self.cols]

    def apply_combination(self, left, right, coeffs):
        if left.shape[0] != self.m or right.shape[0] != self.n:
            raise ValueError("operator/matrix shape mismatch")
        if coeffs.size == 0:
            return np.zeros(self.p)
        return ((left * coeffs)[self.rows] * right[self.cols]).sum(axis=1)

    def adjoint(self, y):
        y = self._check_vec(y)
        return sp.coo_matrix((y, (self.rows, self.cols)),
                             shape=self.shape).tocsr()


@dataclass(frozen=True)
class RipEstimate:
    """Monte Carlo lower bound on the rank-``r`` restricted isometry
    constant.  Sampling cannot certify the supremum, so ``delta_lower``
    underestimates the true constant."""

    r: int
    delta_lower: float
    trials: int
    seed: int


def _next_orthonormal(rng, basis, count):
    # Draw a random direction and orthogonalize it against the columns
    # already in `basis`; the draw order is rank-by-rank, so chains with
    # different maximum ranks share their leading samples.
    w = rng.standard_normal(basis.shape[0])
    for _ in range(2):
        w -= basis[:, :count] @ (basis[:, :count].T @ w)
    return w / np.linalg.norm(w)


def _nested_deviations(op, r_max, trials, seed):
    """For each trial, |‖A X_s‖² − 1| for a nested chain of unit-norm
    rank-s samples, s = 1..r_max.  Returns a (trials, r_max) array."""
    dev = np.zeros((trials, r_max))
    for t in range(trials):
        rng = _rng(seed, t)
        Qu = np.zeros((op.m, r_max))
        Qv = np.zeros((op.n, r_max))
        c = np.zeros(r_max)
        meas = np.zeros(op.p)
        for s in range(r_max):
            Qu[:, s] = _next_orthonormal(rng, Qu, s)
            Qv[:, s] = _next_orthonormal(rng, Qv, s)
            c[s] = rng.standard_normal()
            meas += c[s] * op.apply_rank_one(Qu[:, s], Qv[:, s])
            nrm = np.linalg.norm(c[: s + 1])
            dev[t, s] = abs(np.sum((meas / nrm) ** 2) - 1.0)
    return dev


def estimate_delta(op, r, trials, seed=0):
    """Monte Carlo lower bound on the restricted isometry constant.

    Each trial draws a nested chain of random unit-Frobenius samples of
    ranks 1..r (rank s extends rank s-1 by one orthogonal triplet), and
    the bound is the largest deviation |‖A X‖² − 1| seen at any rank
    up to ``r``.  Lower-rank samples are valid rank-``r`` witnesses, so
    estimates from the same seed are nondecreasing in ``r``.
    """
    if r < 1 or trials < 1:
        raise ValueError("need r >= 1 and trials >= 1")
    dev = _nested_deviations(op, r, trials, seed)
    return RipEstimate(r, float(dev.max()), trials, seed)


def estimate_delta_profile(op, r_max, trials, seed=0):
    """Estimates for every rank 1..r_max, sharing one nested sample set."""
    if r_max < 1 or trials < 1:
        raise ValueError("need r_max >= 1 and trials >= 1")
    dev = _nested_deviations(op, r_max, trials, seed)
    running = np.maximum.accumulate(dev.max(axis=0))
    return [RipEstimate(r + 1, float(running[r]), trials, seed)
            for r in range(r_max)]
