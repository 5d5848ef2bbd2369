"""Interpolative decomposition from a column-pivoted QR factorization."""

from dataclasses import dataclass
import warnings

import numpy as np
import scipy.linalg


@dataclass(frozen=True)
class IdResult:
    """``A ~= A[:, skeleton] @ interp`` (columns) or ``A ~= interp @ A[skeleton, :]`` (rows)."""

    skeleton: np.ndarray
    interp: np.ndarray
    achieved_rank: int
    tol_used: float


def _numerical_rank(diag, tol):
    """Smallest r with |R[r, r]| <= tol |R[0, 0]|."""
    small = np.nonzero(diag <= tol * diag[0])[0]
    return int(small[0]) if small.size else diag.size


def _condition_estimate(R11):
    """1-norm condition estimate of an upper triangular block (LAPACK trcon)."""
    if R11.shape[0] == 0:
        return 1.0
    trcon, = scipy.linalg.get_lapack_funcs(("trcon",), (R11,))
    rcond, info = trcon(R11, norm="1", uplo="U", diag="N")
    return np.inf if info != 0 or rcond == 0 else 1.0 / rcond


def id_columns(A, tol):
    """Column ID: pick skeleton columns S and T with T[:, S] = I."""
    A = np.asarray(A)
    if not 0 < tol < 1:
        raise ValueError(f"tolerance must lie in (0, 1), got {tol}")
    if A.ndim != 2 or A.size == 0 or not np.any(A):
        raise ValueError("cannot compute an ID of an empty or zero matrix")
    n = A.shape[1]
    R, perm = scipy.linalg.qr(A, mode="r", pivoting=True, check_finite=True)
    diag = np.abs(np.diag(R))
    r = _numerical_rank(diag, tol)
    R11 = R[:r, :r]
    cond = _condition_estimate(R11)
    if cond > 1e3 / tol:
        warnings.warn(f"ID: leading triangular block is ill-conditioned "
                      f"(condition estimate {cond:.3e})", RuntimeWarning)
    T = np.zeros((r, n), dtype=np.result_type(A.dtype, np.float64))
    T[:, perm[:r]] = np.eye(r)
    if r < n:
        T[:, perm[r:]] = scipy.linalg.solve_triangular(R11, R[:r, r:])
    return IdResult(perm[:r].copy(), T, r, float(tol))


def id_rows(A, tol):
    """Row ID via the column ID of the (plain) transpose."""
    res = id_columns(np.asarray(A).T, tol)
    return IdResult(res.skeleton, res.interp.T.copy(), res.achieved_rank, res.tol_used)
