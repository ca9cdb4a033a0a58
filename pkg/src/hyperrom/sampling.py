"""Row-index selection: the S quantity, greedy S-OPT, and oversampled DEIM."""

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels

ORTHO_CHECK_TOL = 1e-8
REFACTOR_EVERY = 32


@dataclass
class SampleSet:
    """Ordered distinct row indices; order records the greedy selection."""

    indices: list
    N: int
    algorithm: str = "manual"
    s_history: list | None = None

    def __post_init__(self):
        self.indices = [int(i) for i in self.indices]
        if len(set(self.indices)) != len(self.indices):
            raise ValueError("sample indices must be distinct")
        if any(i < 0 or i >= self.N for i in self.indices):
            raise ValueError(f"sample indices must lie in [0, {self.N})")

    def __len__(self):
        return len(self.indices)

    @property
    def index_array(self):
        return np.asarray(self.indices, dtype=np.intp)


@dataclass
class SValue:
    value: float
    log_det_gram: float
    column_norms: list


def apply_sampling(samples, v):
    """Restrict v to the selected rows in selection order (Z^T v)."""
    v = np.asarray(v)
    if v.shape[0] != samples.N:
        raise ValueError(f"expected vector of length {samples.N}, got {v.shape[0]}")
    return v[samples.index_array]


def s_quantity(A):
    """Orthogonality/determinant score (sqrt(det A^T A) / prod ||col||)^(1/p).

    Evaluated in the log domain through a QR factorization; lies in [0, 1]
    and equals 1 exactly when the columns are mutually orthonormal.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n, p = A.shape
    if n < p:
        raise ValueError(f"need at least as many rows as columns, got {n}x{p}")
    norms = np.linalg.norm(A, axis=0)
    if np.any(norms == 0.0):
        raise ValueError("degenerate column (zero norm)")
    R = np.linalg.qr(A, mode="r")
    rdiag = np.abs(np.diag(R))
    if np.any(rdiag == 0.0):
        return SValue(0.0, -np.inf, norms.tolist())
    log_det_gram = 2.0 * float(np.sum(np.log(rdiag)))
    log_value = (0.5 * log_det_gram - float(np.sum(np.log(norms)))) / p
    value = math.exp(log_value)
    if 1.0 < value <= 1.0 + 1e-12:
        value = 1.0
    return SValue(value, log_det_gram, norms.tolist())


def _check_selector_inputs(Q, n):
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    N, p = Q.shape
    if not (p <= n <= N):
        raise ValueError(f"need p <= n <= N, got p={p}, n={n}, N={N}")
    dev = float(np.max(np.abs(Q.T @ Q - np.eye(p))))
    if dev > ORTHO_CHECK_TOL:
        raise ValueError(f"basis columns not orthonormal (deviation {dev:.3e})")
    return Q, N, p


def select_s_opt(Q, n):
    """Greedy selection maximizing the S quantity of the sampled basis rows.

    Row 1 is the largest-magnitude entry of the first column; every later
    step adds the unselected row maximizing S of the augmented row set
    against the first min(step, p) columns.  Candidates are scored through
    incremental Gram factorizations (rank-one Cholesky updates once the
    column count saturates, refactored from scratch every
    ``REFACTOR_EVERY`` accepted rows to bound drift).
    """
    Q, N, p = _check_selector_inputs(Q, n)
    if p == 1:
        # a single column scores 1 for every candidate row, so the greedy
        # argmax is one giant tie; smallest-index tie-breaking fills the
        # set in natural order after the magnitude seed
        first = int(np.argmax(np.abs(Q[:, 0])))
        rest = [i for i in range(N) if i != first][: n - 1]
        return SampleSet(
            [first] + rest, N, algorithm="s_opt", s_history=[1.0] * n
        )
    sel = np.empty(n, dtype=np.intp)
    mask = np.zeros(N, dtype=bool)
    sel[0] = int(np.argmax(np.abs(Q[:, 0])))
    mask[sel[0]] = True
    history = [1.0]  # a single nonzero row is trivially "orthonormal"

    L = None
    logdet = 0.0
    c = None
    accepted = 0
    for j in range(2, n + 1):
        k = min(j, p)
        Qk = np.ascontiguousarray(Q[:, :k])
        if j <= p:
            # growing phase: square augmented matrix, row-Gram route;
            # the factor is rebuilt because k increments each step
            B = np.ascontiguousarray(Qk[sel[: j - 1]])
            Lr = np.linalg.cholesky(B @ B.T)
            logdet_row = 2.0 * float(np.sum(np.log(np.diag(Lr))))
            cg = np.einsum("ij,ij->j", B, B)
            idx, _, logS = kernels.sopt_scan_growing(B, Lr, logdet_row, cg, Qk, mask)
            L = None
        else:
            if L is None or accepted >= REFACTOR_EVERY:
                B = Qk[sel[: j - 1]]
                L = np.linalg.cholesky(B.T @ B)
                logdet = 2.0 * float(np.sum(np.log(np.diag(L))))
                c = np.einsum("ij,ij->j", B, B)
                accepted = 0
            idx, beta, logS = kernels.sopt_scan_saturated(L, logdet, c, Qk, mask)
        if idx < 0:  # every candidate degenerate; keep determinism
            idx = int(np.flatnonzero(~mask)[0])
            logS = -np.inf
        sel[j - 1] = idx
        mask[idx] = True
        history.append(math.exp(logS) if np.isfinite(logS) else 0.0)
        if j > p and L is not None:
            q = Qk[idx]
            kernels.cholupdate(L, q.copy())
            logdet += math.log1p(beta)
            c = c + q * q
            accepted += 1
    return SampleSet(sel.tolist(), N, algorithm="s_opt", s_history=history)


def select_deim_oversampled(Q, n):
    """Greedy gappy-reconstruction-error selection with oversampling.

    Column by column, reconstructs the next basis column from the current
    samples and adds the unselected row with the largest absolute
    reconstruction error, cycling ceil((n-1)/(p-1)) inner additions per
    column until n distinct rows are selected.  A single-column basis
    degenerates to magnitude ranking.
    """
    Q, N, p = _check_selector_inputs(Q, n)
    if p == 1:
        order = np.argsort(-np.abs(Q[:, 0]), kind="stable")
        return SampleSet(order[:n].tolist(), N, algorithm="deim_oversampled")

    sel = [int(np.argmax(np.abs(Q[:, 0])))]
    mask = np.zeros(N, dtype=bool)
    mask[sel[0]] = True
    n_iter = math.ceil((n - 1) / (p - 1))
    for j in range(2, p + 1):
        Qprev = Q[:, : j - 1]
        phi = Q[:, j - 1]
        for _ in range(n_iter):
            rows = np.asarray(sel, dtype=np.intp)
            coef, *_ = np.linalg.lstsq(Qprev[rows], phi[rows], rcond=1e-12)
            err = np.abs(phi - Qprev @ coef)
            idx = int(np.argmax(np.where(mask, -np.inf, err)))
            sel.append(idx)
            mask[idx] = True
            if len(sel) == n:
                return SampleSet(sel, N, algorithm="deim_oversampled")
    return SampleSet(sel, N, algorithm="deim_oversampled")


# ---------------------------------------------------------------------------
# SampleSet file: line 1 "<n> <N> <algorithm>", line 2 indices in order.


def write_sample_set(path, samples):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(samples)} {samples.N} {samples.algorithm}\n")
        fh.write(" ".join(str(i) for i in samples.indices) + "\n")


def read_sample_set(path):
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    if not lines or not lines[0].strip():
        raise ValueError(f"{path}: missing header")
    parts = lines[0].split()
    if len(parts) != 3:
        raise ValueError(f"{path}: malformed header")
    count, N, algorithm = int(parts[0]), int(parts[1]), parts[2]
    if len(lines) < 2:
        raise ValueError(f"{path}: missing index line")
    indices = [int(t) for t in lines[1].split()]
    if len(indices) != count:
        raise ValueError(f"{path}: expected {count} indices, got {len(indices)}")
    return SampleSet(indices, N, algorithm=algorithm)
