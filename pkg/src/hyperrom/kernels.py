"""Hot numeric kernels with a numba path and a pure-numpy fallback.

Both implementations are always defined (the benchmark compares them);
the public names bind to the backend chosen in :mod:`hyperrom.backend`.
All scans break ties by smallest row index: the numpy path relies on
argmax returning the first maximum, the numba path on a strict ``>``.
"""

import numpy as np
from scipy.linalg import solve_triangular

from .backend import NUMBA_ENABLED

# ---------------------------------------------------------------------------
# Burgers semi-discrete right-hand side: -(1/dx) * (D u) * u with periodic
# backward differences.


def burgers_rhs_numpy(u, dx):
    du = u - np.roll(u, 1)
    return -(du * u) / dx


# ---------------------------------------------------------------------------
# Solve (L + corner * e_0 e_{N-1}^T) x = b where L is lower bidiagonal with
# main diagonal `diag` and subdiagonal `sub` (sub[i] multiplies x[i-1]).
# The corner entry is eliminated with the Sherman-Morrison formula on top of
# two forward substitutions.


def _forward_bidiag_numpy(diag, sub, b):
    n = diag.shape[0]
    x = np.empty_like(b)
    x[0] = b[0] / diag[0]
    for i in range(1, n):
        x[i] = (b[i] - sub[i] * x[i - 1]) / diag[i]
    return x


def bidiag_corner_solve_numpy(diag, sub, corner, b):
    y = _forward_bidiag_numpy(diag, sub, b)
    if corner == 0.0:
        return y
    e0 = np.zeros_like(b)
    e0[0] = 1.0
    z = _forward_bidiag_numpy(diag, sub, e0)
    scale = corner * y[-1] / (1.0 + corner * z[-1])
    return y - scale * z


# ---------------------------------------------------------------------------
# S-OPT candidate scans.
#
# Saturated phase (selected rows m >= columns k): the Gram matrix
# G = B^T B of the selected rows B is held as a lower Cholesky factor L.
# For a candidate row q the augmented selection has
#   log det(G + q q^T) = log det G + log(1 + ||L^{-1} q||^2)
# and squared column norms c + q**2, giving the selection score
#   log S = (0.5 * log det - 0.5 * sum(log(c + q^2))) / k.
#
# Growing phase (m = k - 1, square augmented matrix): the Gram determinant
# identity det([B; q^T]^T [B; q^T]) = det(B B^T) * dist(q, rowspan(B))^2
# is used with a Cholesky factor of the row Gram B B^T.


def sopt_scan_saturated_numpy(L, logdet, c, Qk, mask):
    k = L.shape[0]
    cand = np.flatnonzero(~mask)
    Qc = Qk[cand]
    W = solve_triangular(L, Qc.T, lower=True)
    beta = np.einsum("ij,ij->j", W, W)
    with np.errstate(divide="ignore", invalid="ignore"):
        colterm = np.log(c[None, :] + Qc * Qc).sum(axis=1)
        logS = (0.5 * (logdet + np.log1p(beta)) - 0.5 * colterm) / k
    logS[np.isnan(logS)] = -np.inf
    j = int(np.argmax(logS))
    return int(cand[j]), float(beta[j]), float(logS[j])


def sopt_scan_growing_numpy(B, Lr, logdet_row, c, Qk, mask):
    k = Qk.shape[1]
    cand = np.flatnonzero(~mask)
    Qc = Qk[cand]
    V = Qc @ B.T
    W = solve_triangular(Lr, V.T, lower=True)
    resid2 = np.einsum("ij,ij->i", Qc, Qc) - np.einsum("ij,ij->j", W, W)
    with np.errstate(divide="ignore", invalid="ignore"):
        colterm = np.log(c[None, :] + Qc * Qc).sum(axis=1)
        logS = (0.5 * (logdet_row + np.log(resid2)) - 0.5 * colterm) / k
    # a zero augmented column means the determinant is exactly zero
    logS[~(resid2 > 0.0) | ~np.isfinite(colterm)] = -np.inf
    j = int(np.argmax(logS))
    return int(cand[j]), float(resid2[j]), float(logS[j])


def cholupdate_numpy(L, x):
    """Rank-one update of a lower Cholesky factor, in place; consumes x."""
    n = L.shape[0]
    for i in range(n):
        r = np.hypot(L[i, i], x[i])
        cs = r / L[i, i]
        s = x[i] / L[i, i]
        L[i, i] = r
        if i + 1 < n:
            L[i + 1:, i] = (L[i + 1:, i] + s * x[i + 1:]) / cs
            x[i + 1:] = cs * x[i + 1:] - s * L[i + 1:, i]
    return L


# ---------------------------------------------------------------------------
# numba variants; explicit loops, otherwise identical to the numpy path.

try:
    from numba import njit

    @njit(cache=True)
    def burgers_rhs_numba(u, dx):
        n = u.shape[0]
        out = np.empty(n)
        out[0] = -(u[0] - u[n - 1]) * u[0] / dx
        for i in range(1, n):
            out[i] = -(u[i] - u[i - 1]) * u[i] / dx
        return out

    @njit(cache=True)
    def _forward_bidiag_numba(diag, sub, b, x):
        n = diag.shape[0]
        x[0] = b[0] / diag[0]
        for i in range(1, n):
            x[i] = (b[i] - sub[i] * x[i - 1]) / diag[i]

    @njit(cache=True)
    def bidiag_corner_solve_numba(diag, sub, corner, b):
        n = diag.shape[0]
        y = np.empty(n)
        _forward_bidiag_numba(diag, sub, b, y)
        if corner == 0.0:
            return y
        e0 = np.zeros(n)
        e0[0] = 1.0
        z = np.empty(n)
        _forward_bidiag_numba(diag, sub, e0, z)
        scale = corner * y[n - 1] / (1.0 + corner * z[n - 1])
        for i in range(n):
            y[i] = y[i] - scale * z[i]
        return y

    @njit(cache=True)
    def sopt_scan_saturated_numba(L, logdet, c, Qk, mask):
        N, k = Qk.shape
        best = -np.inf
        best_i = -1
        best_beta = 0.0
        w = np.empty(k)
        for row in range(N):
            if mask[row]:
                continue
            beta = 0.0
            colterm = 0.0
            for i in range(k):
                s = Qk[row, i]
                for j in range(i):
                    s -= L[i, j] * w[j]
                w[i] = s / L[i, i]
                beta += w[i] * w[i]
                colterm += np.log(c[i] + Qk[row, i] * Qk[row, i])
            logS = (0.5 * (logdet + np.log1p(beta)) - 0.5 * colterm) / k
            if logS > best:
                best = logS
                best_i = row
                best_beta = beta
        return best_i, best_beta, best

    @njit(cache=True)
    def sopt_scan_growing_numba(B, Lr, logdet_row, c, Qk, mask):
        N, k = Qk.shape
        m = B.shape[0]
        best = -np.inf
        best_i = -1
        best_r = 0.0
        w = np.empty(m)
        for row in range(N):
            if mask[row]:
                continue
            q2 = 0.0
            colterm = 0.0
            for i in range(k):
                q2 += Qk[row, i] * Qk[row, i]
                colterm += np.log(c[i] + Qk[row, i] * Qk[row, i])
            resid2 = q2
            for i in range(m):
                s = 0.0
                for j in range(k):
                    s += B[i, j] * Qk[row, j]
                for j in range(i):
                    s -= Lr[i, j] * w[j]
                w[i] = s / Lr[i, i]
                resid2 -= w[i] * w[i]
            if resid2 <= 0.0 or not np.isfinite(colterm):
                continue
            logS = (0.5 * (logdet_row + np.log(resid2)) - 0.5 * colterm) / k
            if logS > best:
                best = logS
                best_i = row
                best_r = resid2
        return best_i, best_r, best

    @njit(cache=True)
    def cholupdate_numba(L, x):
        n = L.shape[0]
        for i in range(n):
            r = np.hypot(L[i, i], x[i])
            cs = r / L[i, i]
            s = x[i] / L[i, i]
            L[i, i] = r
            for j in range(i + 1, n):
                L[j, i] = (L[j, i] + s * x[j]) / cs
                x[j] = cs * x[j] - s * L[j, i]
        return L

    HAVE_NUMBA_KERNELS = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA_KERNELS = False


if NUMBA_ENABLED and HAVE_NUMBA_KERNELS:
    burgers_rhs = burgers_rhs_numba
    bidiag_corner_solve = bidiag_corner_solve_numba
    sopt_scan_saturated = sopt_scan_saturated_numba
    sopt_scan_growing = sopt_scan_growing_numba
    cholupdate = cholupdate_numba
else:
    burgers_rhs = burgers_rhs_numpy
    bidiag_corner_solve = bidiag_corner_solve_numpy
    sopt_scan_saturated = sopt_scan_saturated_numpy
    sopt_scan_growing = sopt_scan_growing_numpy
    cholupdate = cholupdate_numpy
