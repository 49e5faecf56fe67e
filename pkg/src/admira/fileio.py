"""Plain-text file formats for matrices, factored matrices, operators,
and measurement vectors.

Dense matrix: first line ``m n``, then m lines of n space-separated
decimals.  Factored matrix: first line ``m n k``, then k blocks of three
lines (sigma, the length-m left vector, the length-n right vector).
Sampling operator: line ``m n p`` followed by p lines ``i j`` with
1-based indices.  Gaussian operator: a single line ``m n p seed`` (the
frames are regenerated from the seed).
"""

from __future__ import annotations

import numpy as np

from .linalg import ORTHO_TOL, FactoredMatrix, check_dense
from .operators import GaussianOperator, SamplingOperator

_FMT = "%.17g"


def write_dense_matrix(path, X):
    X = check_dense(X)
    m, n = X.shape
    with open(path, "w") as fh:
        fh.write(f"{m} {n}\n")
        for row in X:
            fh.write(" ".join(_FMT % v for v in row) + "\n")


def read_dense_matrix(path):
    with open(path) as fh:
        m, n = (int(tok) for tok in fh.readline().split())
        X = np.loadtxt(fh, dtype=np.float64, ndmin=2)
    if X.shape != (m, n):
        raise ValueError(f"{path}: expected {m}x{n} matrix, got {X.shape}")
    return check_dense(X, name=str(path))


def write_factored_matrix(path, F):
    m, n = F.shape
    with open(path, "w") as fh:
        fh.write(f"{m} {n} {F.k}\n")
        for j in range(F.k):
            fh.write(_FMT % F.sigmas[j] + "\n")
            fh.write(" ".join(_FMT % v for v in F.left[:, j]) + "\n")
            fh.write(" ".join(_FMT % v for v in F.right[:, j]) + "\n")


def read_factored_matrix(path):
    with open(path) as fh:
        m, n, k = (int(tok) for tok in fh.readline().split())
        sigmas = np.zeros(k)
        left = np.zeros((m, k))
        right = np.zeros((n, k))
        for j in range(k):
            sigmas[j] = float(fh.readline())
            left[:, j] = np.array(fh.readline().split(), dtype=np.float64)
            right[:, j] = np.array(fh.readline().split(), dtype=np.float64)
    orthonormal = True
    if k:
        for B in (left, right):
            G = B.T @ B
            if np.max(np.abs(G - np.eye(k))) > ORTHO_TOL:
                orthonormal = False
                break
    return FactoredMatrix((m, n), sigmas, left, right, orthonormal=orthonormal)


def write_operator(path, op):
    with open(path, "w") as fh:
        if isinstance(op, SamplingOperator):
            fh.write(f"{op.m} {op.n} {op.p}\n")
            for i, j in zip(op.rows, op.cols):
                fh.write(f"{i + 1} {j + 1}\n")
        elif isinstance(op, GaussianOperator):
            fh.write(f"{op.m} {op.n} {op.p} {op.seed}\n")
        else:
            raise TypeError(f"cannot serialize operator of type {type(op).__name__}")


def read_operator(path):
    with open(path) as fh:
        head = fh.readline().split()
        if len(head) == 4:
            m, n, p, seed = (int(tok) for tok in head)
            return GaussianOperator(m, n, p, seed=seed)
        if len(head) == 3:
            m, n, p = (int(tok) for tok in head)
            pairs = np.loadtxt(fh, dtype=np.int64, ndmin=2)
            if pairs.shape != (p, 2):
                raise ValueError(f"{path}: expected {p} index pairs")
            return SamplingOperator(m, n, pairs[:, 0] - 1, pairs[:, 1] - 1)
    raise ValueError(f"{path}: unrecognized operator header")


def write_vector(path, y):
    y = np.asarray(y, dtype=np.float64).ravel()
    with open(path, "w") as fh:
        for v in y:
            fh.write(_FMT % v + "\n")


def read_vector(path):
    y = np.loadtxt(path, dtype=np.float64, ndmin=1)
    if not np.all(np.isfinite(y)):
        raise ValueError(f"{path}: vector contains NaN or Inf")
    return y
