"""Greedy rank-constrained recovery from linear measurements.

One iteration: back-project the residual, take the leading 2r singular
directions of that proxy, merge them with the current r directions, fit
coefficients by least squares on the merged span, and keep the best
rank-r part of the fit.  Iteration stops when the relative residual
falls below a tolerance, when its monotone decrease breaks (the previous
iterate, the best so far, is returned), or at an iteration cap.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg

from .linalg import AtomSet, FactoredMatrix, best_rank_r, svd_of_factored, truncated_svd

# Above this many stored values the least-squares columns are not formed
# explicitly and the normal equations are solved matrix-free.
LS_DENSE_LIMIT = 10**8
LS_DROP_TOL = 1e-10
# Ground-truth errors use the exact dense difference up to this many
# entries; beyond it, the factored Gram identity (which loses digits
# near exact recovery but needs no dense temporary).
ERROR_DENSE_LIMIT = 10**6


class LeastSquaresError(RuntimeError):
    """Iterative least-squares solver failed to reach its tolerance."""

    def __init__(self, method, iterations):
        self.method = method
        self.iterations = iterations
        super().__init__(f"{method} did not converge in {iterations} iterations")


@dataclass(frozen=True)
class SolverConfig:
    """Options for :func:`admira_solve`.

    ``rank`` is the target rank of the recovered matrix.  ``ls_method``
    selects the inner least-squares solver ("auto" uses a dense QR when
    the column matrix fits, matrix-free CG otherwise).  ``svd_mode`` is
    passed through to the truncated SVD.  With ``use_iteration_bound``
    the iteration cap is additionally clamped to 6 (rank + 1).

    The monotone decrease of the relative residual counts as broken when
    an iteration improves it by less than ``stall_tol`` relative (noisy
    data makes the residual creep along its floor indefinitely; set
    ``stall_tol=0`` to break only on strict increase).
    """

    rank: int
    residual_tol: float = 1e-4
    max_iter: int = 500
    ls_method: str = "auto"
    ls_tol: float = 1e-12
    ls_max_iter: int | None = None
    svd_mode: str = "auto"
    seed: int = 0
    use_iteration_bound: bool = False
    stall_tol: float = 1e-3

    def __post_init__(self):
        if self.rank < 1:
            raise ValueError("rank must be at least 1")
        if self.residual_tol <= 0 or self.ls_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.stall_tol < 0:
            raise ValueError("stall_tol must be nonnegative")
        if self.ls_method not in ("auto", "qr", "cg", "richardson"):
            raise ValueError(f"unknown ls_method: {self.ls_method!r}")


@dataclass
class SolverReport:
    """Outcome of a solve: the factored solution, per-iteration traces of
    the relative residual (and of the error against ground truth when one
    was supplied), and why iteration stopped."""

    solution: FactoredMatrix
    iterations: int
    residual_trace: np.ndarray
    error_trace: np.ndarray | None
    stop_reason: str  # "tol" | "monotone_break" | "max_iter"
    solution_residual: float


def _derived_seed(seed, salt):
    return int(np.random.SeedSequence((seed, salt)).generate_state(1)[0])


def _ground_truth_error(X0, F):
    # Exact dense difference at desk scale; Gram identity above it (the
    # identity loses digits near exact recovery, the difference does not).
    if X0.size <= ERROR_DENSE_LIMIT:
        return float(np.linalg.norm(X0 - F.densify()))
    cross = float(np.sum(F.sigmas * np.einsum("mk,mn,nk->k", F.left, X0, F.right)))
    sq = np.linalg.norm(X0) ** 2 - 2.0 * cross + F.norm() ** 2
    return float(np.sqrt(max(sq, 0.0)))


def admira_solve(op, b, config, ground_truth=None):
    """Recover a rank-``config.rank`` matrix from measurements ``b``.

    Parameters
    ----------
    op : MeasurementOperator
    b : array of length op.p
    config : SolverConfig
    ground_truth : optional dense matrix; enables the error trace.

    Returns
    -------
    SolverReport
    """
    b = op._check_vec(b)
    m, n = op.shape
    r = config.rank
    track = ground_truth is not None
    if track:
        ground_truth = np.asarray(ground_truth, dtype=np.float64)

    b_norm = np.linalg.norm(b)
    if b_norm == 0.0:
        return SolverReport(FactoredMatrix.zero(m, n), 0, np.zeros(0),
                            np.zeros(0) if track else None, "tol", 0.0)

    max_iter = config.max_iter
    if config.use_iteration_bound:
        max_iter = min(max_iter, 6 * (r + 1))

    X = FactoredMatrix.zero(m, n)
    atoms_hat = AtomSet.empty(m, n)
    rvec = b
    res_prev = 1.0
    residual_trace, error_trace = [], []
    stop_reason = "max_iter"
    solution_residual = res_prev

    for it in range(1, max_iter + 1):
        proxy = op.adjoint(rvec)
        selected = truncated_svd(proxy, 2 * r, mode=config.svd_mode,
                                 seed=_derived_seed(config.seed, it))
        merged = selected.atoms().merge(atoms_hat)
        fit = least_squares_on_span(op, b, merged, method=config.ls_method,
                                    tol=config.ls_tol,
                                    max_iter=config.ls_max_iter)
        candidate = best_rank_r(svd_of_factored(fit), r)
        rvec_new = b - op.apply(candidate)
        res = float(np.linalg.norm(rvec_new) / b_norm)
        residual_trace.append(res)
        if track:
            error_trace.append(_ground_truth_error(ground_truth, candidate))

        if res < config.residual_tol:
            X, solution_residual = candidate, res
            stop_reason = "tol"
            break
        if res > res_prev * (1.0 - config.stall_tol):
            # Monotone decrease broken (strict increase, or no material
            # improvement): keep whichever iterate is best.
            stop_reason = "monotone_break"
            if res <= res_prev:
                X, solution_residual = candidate, res
            break
        X, atoms_hat, rvec = candidate, candidate.atoms(), rvec_new
        res_prev = res
        solution_residual = res

    return SolverReport(X, len(residual_trace), np.asarray(residual_trace),
                        np.asarray(error_trace) if track else None,
                        stop_reason, solution_residual)


def least_squares_on_span(op, b, atoms, method="auto", tol=1e-12, max_iter=None):
    """Minimize ``||b - A X||`` over matrices spanned by the given atoms.

    Returns the fitted combination as a (generally non-orthonormal)
    :class:`FactoredMatrix`; negative coefficients are folded into the
    left factors.  Linearly dependent atoms are handled by the solver:
    the QR path drops columns below a relative pivot tolerance and the
    iterative paths converge to the minimum-norm coefficients, so the
    fitted measurements are unaffected by duplicates.
    """
    b = op._check_vec(b)
    m, n = op.shape
    K = atoms.size
    if K == 0:
        return FactoredMatrix.zero(m, n)

    dense_ok = op.p * K <= LS_DENSE_LIMIT
    if method == "auto":
        method = "qr" if dense_ok else "cg"

    if method == "qr" or dense_ok:
        C = np.empty((op.p, K))
        for k in range(K):
            C[:, k] = op.apply_rank_one(atoms.left[:, k], atoms.right[:, k])
        matvec = lambda a: C @ a
        rmatvec = lambda y: C.T @ y
    else:
        C = None

        def matvec(a):
            return op.apply_combination(atoms.left, atoms.right, a)

        def rmatvec(y):
            S = op.adjoint(y)
            return np.array([atoms.left[:, k] @ (S @ atoms.right[:, k])
                             for k in range(K)])

    if method == "qr":
        alpha = _solve_qr(C, b)
    elif method == "cg":
        alpha = _solve_cgls(matvec, rmatvec, b, K, tol,
                            max_iter if max_iter else max(200, 10 * K))
    elif method == "richardson":
        alpha = _solve_richardson(matvec, rmatvec, b, K, tol,
                                  max_iter if max_iter else max(5000, 100 * K))
    else:
        raise ValueError(f"unknown least-squares method: {method!r}")

    signs = np.where(alpha < 0, -1.0, 1.0)
    order = np.argsort(-np.abs(alpha), kind="stable")
    return FactoredMatrix((m, n), np.abs(alpha)[order],
                          (atoms.left * signs)[:, order],
                          atoms.right[:, order], orthonormal=False)


def _solve_qr(C, b):
    # Rank-revealing QR; columns whose pivot falls below the drop
    # tolerance (relative to the largest column norm) get zero weight.
    Q, R, piv = scipy.linalg.qr(C, mode="economic", pivoting=True)
    col_scale = np.max(np.linalg.norm(C, axis=0)) if C.size else 0.0
    diag = np.abs(np.diag(R))
    rank = int(np.sum(diag > LS_DROP_TOL * col_scale)) if col_scale > 0 else 0
    alpha = np.zeros(C.shape[1])
    if rank:
        z = scipy.linalg.solve_triangular(R[:rank, :rank], (Q.T @ b)[:rank])
        alpha[piv[:rank]] = z
    return alpha


def _solve_cgls(matvec, rmatvec, b, K, tol, max_iter):
    # CG on the normal equations, matrix-free; starting from zero keeps
    # the iterates in the row space, hence minimum-norm at convergence.
    x = np.zeros(K)
    r = b.copy()
    s = rmatvec(r)
    target = tol * np.linalg.norm(s)
    if np.linalg.norm(s) <= target or np.linalg.norm(s) == 0.0:
        return x
    p = s.copy()
    gamma = float(s @ s)
    for _ in range(max_iter):
        q = matvec(p)
        qq = float(q @ q)
        if qq == 0.0:
            return x
        step = gamma / qq
        x += step * p
        r -= step * q
        s = rmatvec(r)
        gamma_new = float(s @ s)
        if np.sqrt(gamma_new) <= target:
            return x
        p = s + (gamma_new / gamma) * p
        gamma = gamma_new
    raise LeastSquaresError("cg", max_iter)


def _solve_richardson(matvec, rmatvec, b, K, tol, max_iter):
    # Gradient iteration x += w C^T (b - C x) with w from a power-method
    # estimate of the largest squared singular value.
    rng = np.random.default_rng(12345)
    z = rng.standard_normal(K)
    z /= np.linalg.norm(z)
    lam = 1.0
    for _ in range(60):
        z = rmatvec(matvec(z))
        lam = np.linalg.norm(z)
        if lam == 0.0:
            return np.zeros(K)
        z /= lam
    omega = 1.0 / (1.02 * lam)

    x = np.zeros(K)
    g0 = rmatvec(b)
    target = tol * np.linalg.norm(g0)
    for _ in range(max_iter):
        g = rmatvec(b - matvec(x))
        if np.linalg.norm(g) <= target:
            return x
        x += omega * g
    raise LeastSquaresError("richardson", max_iter)


@dataclass(frozen=True)
class RankSearchResult:
    """Outcome of a search over target ranks.  When no rank within the
    budget meets the residual bound, ``feasible`` is False and ``report``
    holds the run at the largest rank tried."""

    feasible: bool
    rank: int
    report: SolverReport


def rank_search(op, b, r_max, eta, mode="incremental", config=None):
    """Smallest target rank whose solve meets ``||b - A X|| <= eta ||b||``.

    ``mode="incremental"`` tries ranks 1, 2, ... in order;
    ``mode="bisection"`` assumes the achieved residual is monotone
    nonincreasing in the rank and bisects, which costs O(log r_max)
    solves.  Both agree when the monotonicity assumption holds.
    """
    if r_max < 1:
        raise ValueError("r_max must be at least 1")
    if eta < 0:
        raise ValueError("eta must be nonnegative")
    if config is None:
        config = SolverConfig(rank=1)

    reports = {}

    def run(r):
        if r not in reports:
            reports[r] = admira_solve(op, b, replace(config, rank=r))
        return reports[r]

    def feasible(r):
        return run(r).solution_residual <= eta

    if mode == "incremental":
        for r in range(1, r_max + 1):
            if feasible(r):
                return RankSearchResult(True, r, reports[r])
        return RankSearchResult(False, r_max, reports[r_max])
    if mode == "bisection":
        if not feasible(r_max):
            return RankSearchResult(False, r_max, reports[r_max])
        lo, hi = 1, r_max
        while lo < hi:
            mid = (lo + hi) // 2
            if feasible(mid):
                hi = mid
            else:
                lo = mid + 1
        return RankSearchResult(True, lo, run(lo))
    raise ValueError(f"unknown search mode: {mode!r}")
