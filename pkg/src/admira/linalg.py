"""Dense and factored-form linear algebra: full/truncated SVD, rank truncation.

Low-rank iterates are kept as lists of weighted rank-one terms
(sigma, u, v) instead of dense matrices.  The routines here convert
between the two representations, compute leading singular triplets of
large sparse or implicitly defined matrices by Golub-Kahan-Lanczos
bidiagonalization, and re-orthonormalize factored matrices without ever
forming the dense product.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, aslinearoperator

# Singular values below RANK_TOL * sigma_1 count as numerically zero.
RANK_TOL = 1e-12
UNIT_TOL = 1e-10
ORTHO_TOL = 1e-8
# Matrices with min(m, n) at or below this use a dense SVD; larger ones
# go through the Lanczos path.
DENSE_FALLBACK_DIM = 400


class LanczosConvergenceError(RuntimeError):
    """Raised when the iterative SVD stalls before reaching the tolerance.

    Attributes
    ----------
    converged : int
        Number of singular triplets that did converge.
    requested : int
        Number of triplets that were asked for.
    """

    def __init__(self, converged, requested, restarts):
        self.converged = converged
        self.requested = requested
        self.restarts = restarts
        super().__init__(
            f"iterative SVD: {converged}/{requested} triplets converged "
            f"after {restarts} restarts"
        )


def check_dense(X, name="matrix"):
    """Validate and return a 2-D float64 array with finite entries."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {X.shape}")
    if X.size and not np.all(np.isfinite(X)):
        raise ValueError(f"{name} contains NaN or Inf entries")
    return X


def _readonly(a):
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class FactoredMatrix:
    """A sum of weighted rank-one terms ``sum_k sigmas[k] * left[:,k] right[:,k]^T``.

    ``left`` is m-by-k and ``right`` is n-by-k with unit-norm columns;
    ``sigmas`` is nonnegative and sorted nonincreasing.  When
    ``orthonormal`` is set the columns of ``left`` (and of ``right``) are
    mutually orthogonal, i.e. the triplets are singular triplets.
    """

    shape: tuple[int, int]
    sigmas: np.ndarray
    left: np.ndarray
    right: np.ndarray
    orthonormal: bool = False

    def __post_init__(self):
        m, n = self.shape
        sig = np.atleast_1d(np.asarray(self.sigmas, dtype=np.float64))
        L = np.asarray(self.left, dtype=np.float64)
        R = np.asarray(self.right, dtype=np.float64)
        L = L[:, None] if L.ndim == 1 else L
        R = R[:, None] if R.ndim == 1 else R
        if not np.all(np.isfinite(sig)) or np.any(sig < 0):
            raise ValueError("sigmas must be finite and nonnegative")
        if np.any(sig[:-1] < sig[1:]):
            raise ValueError("sigmas must be sorted nonincreasing")
        for B, dim in ((L, m), (R, n)):
            if B.shape != (dim, sig.size):
                raise ValueError("factor shape mismatch")
            if B.size and not np.all(np.isfinite(B)):
                raise ValueError("factors contain NaN or Inf")
            if sig.size and np.max(np.abs(np.linalg.norm(B, axis=0) - 1.0)) > UNIT_TOL:
                raise ValueError("factor columns must have unit norm")
        if self.orthonormal and sig.size:
            for B in (L, R):
                G = B.T @ B
                if np.max(np.abs(G - np.eye(sig.size))) > ORTHO_TOL:
                    raise ValueError("factors are not orthonormal")
        object.__setattr__(self, "sigmas", _readonly(sig))
        object.__setattr__(self, "left", _readonly(L))
        object.__setattr__(self, "right", _readonly(R))

    @classmethod
    def zero(cls, m, n):
        """The zero matrix: an empty list of rank-one terms."""
        return cls((m, n), np.zeros(0), np.zeros((m, 0)), np.zeros((n, 0)),
                   orthonormal=True)

    @property
    def k(self):
        """Number of stored rank-one terms."""
        return self.sigmas.size

    @property
    def rank(self):
        """Number of terms above the relative rank tolerance."""
        if self.k == 0 or self.sigmas[0] <= 0.0:
            return 0
        return int(np.sum(self.sigmas > RANK_TOL * self.sigmas[0]))

    def densify(self):
        """Materialize the dense m-by-n array."""
        m, n = self.shape
        if self.k == 0:
            return np.zeros((m, n))
        return (self.left * self.sigmas) @ self.right.T

    def norm(self):
        """Frobenius norm, computed from the factors.

        For orthonormal triplets this is ``sqrt(sum sigmas**2)``; in
        general it uses the k-by-k Gram matrices, costing O((m+n) k^2).
        """
        if self.k == 0:
            return 0.0
        if self.orthonormal:
            return float(np.sqrt(np.sum(self.sigmas**2)))
        G = (self.left.T @ self.left) * (self.right.T @ self.right)
        return float(np.sqrt(max(0.0, self.sigmas @ G @ self.sigmas)))

    def atoms(self):
        """The rank-one directions as an :class:`AtomSet` (weights dropped)."""
        return AtomSet(self.left, self.right)


@dataclass(frozen=True)
class AtomSet:
    """An ordered set of unit-norm rank-one directions ``left[:,k] right[:,k]^T``."""

    left: np.ndarray
    right: np.ndarray

    def __post_init__(self):
        L = np.asarray(self.left, dtype=np.float64)
        R = np.asarray(self.right, dtype=np.float64)
        if L.ndim != 2 or R.ndim != 2 or L.shape[1] != R.shape[1]:
            raise ValueError("atom factors must be 2-D with matching counts")
        for B in (L, R):
            if B.size and not np.all(np.isfinite(B)):
                raise ValueError("atom factors contain NaN or Inf")
            if B.shape[1] and np.max(np.abs(np.linalg.norm(B, axis=0) - 1.0)) > UNIT_TOL:
                raise ValueError("atom columns must have unit norm")
        object.__setattr__(self, "left", _readonly(L))
        object.__setattr__(self, "right", _readonly(R))

    @classmethod
    def empty(cls, m, n):
        return cls(np.zeros((m, 0)), np.zeros((n, 0)))

    @property
    def size(self):
        return self.left.shape[1]

    def merge(self, other):
        """Concatenate two atom sets (duplicates are kept)."""
        return AtomSet(np.hstack([self.left, other.left]),
                       np.hstack([self.right, other.right]))


def _fix_signs(U, V):
    # Normalize each pair so the largest-magnitude entry of the left
    # vector is positive; the sign flip is absorbed by the right vector.
    for j in range(U.shape[1]):
        i = int(np.argmax(np.abs(U[:, j])))
        if U[i, j] < 0:
            U[:, j] = -U[:, j]
            V[:, j] = -V[:, j]
    return U, V


def full_svd(M):
    """Full singular value decomposition of a dense matrix.

    Returns an orthonormal :class:`FactoredMatrix` with min(m, n)
    triplets (zero singular values included), sigmas nonincreasing.
    """
    M = check_dense(M)
    m, n = M.shape
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    U, V = _fix_signs(U, Vt.T.copy())
    return FactoredMatrix((m, n), s, U, V, orthonormal=True)


def _drop_small(s, U, V):
    if s.size == 0 or s[0] <= 0.0:
        return s[:0], U[:, :0], V[:, :0]
    keep = s > RANK_TOL * s[0]
    return s[keep], U[:, keep], V[:, keep]


def truncated_svd(M, k, mode="auto", tol=1e-10, seed=0):
    """Leading ``k`` singular triplets of ``M``.

    Parameters
    ----------
    M : ndarray, scipy sparse matrix, or scipy LinearOperator
        The matrix, either explicit or given through matrix-vector
        products.  LinearOperator input requires the lanczos path.
    k : int
        Number of triplets requested (at least 1).  Fewer are returned
        if the numerical rank is below ``k``.
    mode : {"auto", "dense", "lanczos"}
        "auto" densifies when min(m, n) <= 400 and otherwise runs
        Lanczos bidiagonalization on matvec closures; the explicit modes
        force one path.
    tol : float
        Relative residual tolerance for Ritz triplets in lanczos mode.
    seed : int
        Seed for the Lanczos start vector (results are deterministic).

    Raises
    ------
    LanczosConvergenceError
        If the iterative path runs out of restarts; the exception
        carries the number of triplets that did converge.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    shape = M.shape
    if mode not in ("auto", "dense", "lanczos"):
        raise ValueError(f"unknown svd mode: {mode!r}")
    is_operator = isinstance(M, LinearOperator)
    if mode == "auto":
        mode = "lanczos" if (is_operator or min(shape) > DENSE_FALLBACK_DIM) else "dense"

    if mode == "dense":
        if is_operator:
            raise ValueError("dense mode needs an explicit matrix, not closures")
        if sp.issparse(M):
            M = M.toarray()
        F = full_svd(M)
        s, U, V = _drop_small(F.sigmas, F.left, F.right)
        kk = min(k, s.size)
        return FactoredMatrix(shape, s[:kk], U[:, :kk], V[:, :kk],
                              orthonormal=True)

    A = aslinearoperator(M)
    m, n = shape
    if m < n:
        # Orient the recurrence so the right-vector side is the short
        # one: exhausting it then genuinely determines the matrix.
        s, V, U = _lanczos_svd(_TransposedOperator(A), min(k, m),
                               tol=tol, seed=seed)
    else:
        s, U, V = _lanczos_svd(A, min(k, n), tol=tol, seed=seed)
    s, U, V = _drop_small(s, U, V)
    U, V = _fix_signs(U.copy(), V.copy())
    return FactoredMatrix(shape, s, U, V, orthonormal=True)


class _TransposedOperator:
    """Swap matvec/rmatvec of a scipy LinearOperator."""

    def __init__(self, A):
        self._A = A
        self.shape = (A.shape[1], A.shape[0])

    def matvec(self, w):
        return self._A.rmatvec(w)

    def rmatvec(self, w):
        return self._A.matvec(w)


def _reorthogonalize(w, basis, ncols):
    # Two rounds of classical Gram-Schmidt against the first ncols columns.
    if ncols:
        B = basis[:, :ncols]
        for _ in range(2):
            w -= B @ (B.T @ w)
    return w


def _lanczos_svd(A, k, tol, seed):
    """Golub-Kahan-Lanczos bidiagonalization with full reorthogonalization.

    Grows the Krylov space in blocks, monitoring Ritz-triplet residuals
    through the standard trailing-beta bound, until the ``k`` leading
    triplets are converged or the space is exhausted.  An exact
    breakdown (zero recurrence norm) means an invariant subspace was
    found; the triplets in hand are then exact and are returned even if
    fewer than ``k``.
    """
    m, n = A.shape
    minmn = min(m, n)
    rng = np.random.default_rng(seed)
    max_restarts = 10 * k
    block = min(minmn, max(2 * k + 10, 16))

    alloc = min(minmn, 8 * block)
    U = np.zeros((m, alloc))
    V = np.zeros((n, alloc))
    alphas = np.zeros(alloc)
    betas = np.zeros(alloc)  # betas[j] couples v_{j+1} to u_j

    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    j = 0
    exhausted = False

    for restart in range(max_restarts + 1):
        target = min(minmn, block * (restart + 1))
        if target > alloc:
            alloc = min(minmn, max(2 * alloc, target))
            U = np.hstack([U, np.zeros((m, alloc - U.shape[1]))])
            V = np.hstack([V, np.zeros((n, alloc - V.shape[1]))])
            alphas = np.concatenate([alphas, np.zeros(alloc - alphas.size)])
            betas = np.concatenate([betas, np.zeros(alloc - betas.size)])
        while j < target and not exhausted:
            V[:, j] = v
            w = A.matvec(v)
            if j > 0:
                w -= betas[j - 1] * U[:, j - 1]
            w = _reorthogonalize(w, U, j)
            alphas[j] = np.linalg.norm(w)
            if alphas[j] <= max(m, n) * 1e-15 * (alphas[: j + 1].max() + 1e-300):
                exhausted = True
                break
            U[:, j] = w / alphas[j]
            w = A.rmatvec(U[:, j]) - alphas[j] * v
            w = _reorthogonalize(w, V, j + 1)
            betas[j] = np.linalg.norm(w)
            j += 1
            if betas[j - 1] <= max(m, n) * 1e-15 * alphas[:j].max():
                exhausted = True
                break
            v = w / betas[j - 1]

        if j == 0:
            return np.zeros(0), np.zeros((m, 0)), np.zeros((n, 0))

        # Ritz triplets of the j-by-j upper bidiagonal core B:
        # A V_j = U_j B holds exactly, A^T U_j = V_j B^T + beta_j v_{j+1} e_j^T.
        B = np.diag(alphas[:j])
        idx = np.arange(j - 1)
        B[idx, idx + 1] = betas[:j - 1]
        P, s, Qt = np.linalg.svd(B)
        nk = min(k, j)
        if exhausted or j == minmn:
            converged = nk
        else:
            # || A^T x_i - s_i y_i || = beta_j * |P[j-1, i]|
            resid = betas[j - 1] * np.abs(P[j - 1, :nk])
            scale = s[0] if s[0] > 0 else 1.0
            converged = int(np.sum(resid <= tol * scale))
            # Triplets at numerical-zero level need no further accuracy.
            converged = max(converged, int(np.sum(s[:nk] <= RANK_TOL * scale)))
        if converged >= nk or exhausted or j == minmn:
            return s[:nk], U[:, :j] @ P[:, :nk], V[:, :j] @ Qt[:nk].T

    resid = betas[j - 1] * np.abs(P[j - 1, : min(k, j)])
    raise LanczosConvergenceError(int(np.sum(resid <= tol * max(s[0], 1e-300))),
                                  k, max_restarts)


def svd_of_factored(X):
    """Re-orthonormalize a factored matrix into its SVD.

    QR-factorizes both factors, takes the SVD of the small k-by-k core,
    and recombines, at cost O((m + n + k) k^2).  The dense product is
    never formed.  Numerically zero singular values are dropped, so the
    zero matrix comes back with no triplets.
    """
    m, n = X.shape
    if X.k == 0 or X.sigmas[0] == 0.0:
        return FactoredMatrix.zero(m, n)
    Qu, Ru = np.linalg.qr(X.left)
    Qv, Rv = np.linalg.qr(X.right)
    core = (Ru * X.sigmas) @ Rv.T
    W, s, Zt = np.linalg.svd(core, full_matrices=False)
    s, W, Z = _drop_small(s, W, Zt.T.copy())
    U, V = _fix_signs(Qu @ W, Qv @ Z)
    return FactoredMatrix((m, n), s, U, V, orthonormal=True)


def best_rank_r(X, r):
    """Best rank-``r`` approximation of a factored matrix.

    Keeps the ``r`` leading singular triplets (orthonormalizing first if
    needed).  ``r = 0`` gives the zero matrix; ``r`` beyond the stored
    rank returns the input unchanged.
    """
    if r < 0:
        raise ValueError("r must be nonnegative")
    if r == 0:
        return FactoredMatrix.zero(*X.shape)
    if not X.orthonormal:
        X = svd_of_factored(X)
    if r >= X.k:
        return X
    return FactoredMatrix(X.shape, X.sigmas[:r], X.left[:, :r], X.right[:, :r],
                          orthonormal=True)
