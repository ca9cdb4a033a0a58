"""Snapshot collection, POD basis construction, and matrix file I/O."""

from dataclasses import dataclass, field

import numpy as np

ORTHO_TOL = 1e-12


@dataclass
class SnapshotMatrix:
    """Column-wise collection of full-order vectors.

    ``data`` is dense, one column per snapshot.  ``kind`` tags what the
    columns are: "state", "nonlinear_term", or "residual".
    """

    data: np.ndarray
    kind: str = "state"
    dt: float = 0.0
    description: str = ""

    def __post_init__(self):
        self.data = np.atleast_2d(np.asarray(self.data, dtype=float))
        if self.data.ndim != 2 or self.data.shape[0] < 1 or self.data.shape[1] < 1:
            raise ValueError("snapshot matrix must be 2-D and nonempty")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("snapshot matrix contains nonfinite entries")

    @property
    def n_dof(self):
        return self.data.shape[0]

    @property
    def n_snapshots(self):
        return self.data.shape[1]


@dataclass
class PodBasis:
    """Orthonormal basis with singular values and a reference state."""

    modes: np.ndarray
    singular_values: np.ndarray
    u_ref: np.ndarray
    kind: str = "solution"

    def __post_init__(self):
        self.modes = np.asarray(self.modes, dtype=float)
        self.singular_values = np.asarray(self.singular_values, dtype=float)
        self.u_ref = np.asarray(self.u_ref, dtype=float)
        n, k = self.modes.shape
        if not (1 <= k <= n):
            raise ValueError(f"basis must have 1 <= k <= N columns, got {k}x{n}")
        if self.singular_values.shape != (k,):
            raise ValueError("one singular value per mode required")
        if np.any(self.singular_values < 0) or np.any(
            np.diff(self.singular_values) > 0
        ):
            raise ValueError("singular values must be nonnegative and nonincreasing")
        if self.u_ref.shape != (n,):
            raise ValueError("u_ref length must match mode rows")
        dev = orthonormality_deviation(self.modes)
        if dev > ORTHO_TOL:
            raise ValueError(f"basis columns not orthonormal (deviation {dev:.3e})")

    @property
    def n_dof(self):
        return self.modes.shape[0]

    @property
    def n_modes(self):
        return self.modes.shape[1]

    def with_kind(self, kind):
        return PodBasis(self.modes, self.singular_values, self.u_ref, kind=kind)


def orthonormality_deviation(modes):
    """Max-abs entry of modes^T modes - I."""
    k = modes.shape[1]
    return float(np.max(np.abs(modes.T @ modes - np.eye(k))))


def compute_pod(snaps, u_ref, k):
    """Build a POD basis from the leading left singular vectors.

    ``k`` is either a mode count or an energy fraction in (0, 1]: the
    smallest count whose cumulative squared singular values reach that
    fraction of the total.
    """
    data = snaps.data
    n, m = data.shape
    u_ref = np.asarray(u_ref, dtype=float)
    if u_ref.shape != (n,):
        raise ValueError(f"u_ref must have length {n}")
    centered = data - u_ref[:, None]
    U, s, _ = np.linalg.svd(centered, full_matrices=False)
    rank = int(np.sum(s > max(n, m) * np.finfo(float).eps * (s[0] if s.size else 0.0)))
    if isinstance(k, (float, np.floating)) and 0.0 < k < 1.0:
        energy = np.cumsum(s**2) / np.sum(s**2)
        k_count = int(np.searchsorted(energy, k - 1e-15) + 1)
        k_count = min(k_count, rank)
    else:
        k_count = int(k)
        if isinstance(k, (float, np.floating)) and k == 1.0:
            k_count = rank
        if not (1 <= k_count <= min(n, m)):
            raise ValueError(f"k must be in [1, {min(n, m)}], got {k_count}")
        if k_count > rank:
            raise ValueError(
                f"requested {k_count} modes but achievable rank {rank}"
            )
    modes = U[:, :k_count]
    # polish against SVD roundoff so the orthonormality invariant holds
    dev = orthonormality_deviation(modes)
    if dev > ORTHO_TOL:
        modes, _ = np.linalg.qr(modes)
    return PodBasis(modes, s[:k_count], u_ref, kind="solution")


def sns_nonlinear_basis(solution_basis, A="identity"):
    """Derive a nonlinear-term basis from a solution basis via Phi_f = A Phi.

    ``A="identity"`` relabels the basis; otherwise the product is
    re-orthonormalized by QR.
    """
    if isinstance(A, str):
        if A != "identity":
            raise ValueError(f"unknown matrix marker {A!r}")
        return solution_basis.with_kind("nonlinear_term")
    A = np.asarray(A, dtype=float)
    product = A @ solution_basis.modes
    Q, R = np.linalg.qr(product)
    diag = np.abs(np.diag(R))
    if np.min(diag) <= 1e-12 * np.max(diag):
        raise ValueError("matrix A is singular (rank-deficient product)")
    # sign-fix so the factorization is unique and deterministic
    signs = np.sign(np.diag(R))
    Q = Q * signs[None, :]
    svals = np.sort(np.linalg.svd(R, compute_uv=False))[::-1]
    return PodBasis(Q, svals, solution_basis.u_ref, kind="nonlinear_term")


# ---------------------------------------------------------------------------
# Text matrix format: optional '#' comments, then "<rows> <cols>", then rows
# of space-separated floats at 17 significant digits.


def write_matrix(path, m):
    data = m.data if isinstance(m, SnapshotMatrix) else np.atleast_2d(m)
    rows, cols = data.shape
    with open(path, "w", encoding="utf-8") as fh:
        if isinstance(m, SnapshotMatrix) and m.description:
            fh.write(f"# {m.description}\n")
        fh.write(f"{rows} {cols}\n")
        for r in range(rows):
            fh.write(" ".join(f"{v:.17g}" for v in data[r]) + "\n")


def read_matrix(path, kind="state", dt=0.0):
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.readlines()
    lineno = 0
    description = ""
    while lineno < len(lines) and lines[lineno].lstrip().startswith("#"):
        description = lines[lineno].lstrip("# ").strip()
        lineno += 1
    if lineno >= len(lines) or not lines[lineno].strip():
        raise ValueError(f"{path}: missing header")
    header = lines[lineno].split()
    try:
        rows, cols = int(header[0]), int(header[1])
    except (ValueError, IndexError):
        raise ValueError(f"{path}: malformed header at line {lineno + 1}") from None
    data = np.empty((rows, cols))
    for r in range(rows):
        ln = lineno + 1 + r
        if ln >= len(lines) or not lines[ln].strip():
            raise ValueError(f"{path}: missing data row at line {ln + 1}")
        tokens = lines[ln].split()
        if len(tokens) != cols:
            raise ValueError(
                f"{path}: expected {cols} values but got {len(tokens)} at line {ln + 1}"
            )
        try:
            data[r] = [float(t) for t in tokens]
        except ValueError:
            raise ValueError(f"{path}: nonnumeric token at line {ln + 1}") from None
    return SnapshotMatrix(data, kind=kind, dt=dt, description=description)
