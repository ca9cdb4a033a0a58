"""1D inviscid Burgers full-order model with implicit backward-Euler stepping.

The semi-discretization uses periodic backward differences on N unknowns
(u_0 identified with u_N), so the implicit Jacobian is lower bidiagonal
plus a single periodic corner entry and each Newton linear solve is a
forward substitution with a Sherman-Morrison correction.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse

from . import kernels
from .snapshots import SnapshotMatrix

NEWTON_MAX_ITER = 25
NEWTON_TOL_FACTOR = 1e-10


class NewtonDivergenceError(RuntimeError):
    def __init__(self, step, residual_norm):
        self.step = step
        self.residual_norm = residual_norm
        super().__init__(
            f"Newton failed to converge at step {step} "
            f"(residual norm {residual_norm:.3e})"
        )


@dataclass
class BurgersConfig:
    n_dof: int = 1000
    dx: float = 0.002
    dt: float = 0.001
    n_steps: int = 500
    domain_length: float = 2.0
    init: object = "sine_bump"  # or an explicit state vector

    def __post_init__(self):
        if abs(self.n_dof * self.dx - self.domain_length) > 1e-12 * self.domain_length:
            raise ValueError(
                f"N*dx = {self.n_dof * self.dx} must equal domain length "
                f"{self.domain_length}"
            )
        if self.dt < 0:
            raise ValueError("dt must be nonnegative")
        if self.n_steps < 1:
            raise ValueError("n_steps must be at least 1")

    def grid(self):
        return self.dx * np.arange(1, self.n_dof + 1)

    def initial_state(self):
        if isinstance(self.init, str):
            if self.init != "sine_bump":
                raise ValueError(f"unknown initial condition {self.init!r}")
            x = self.grid()
            return 1.0 + 0.5 * (np.sin(2.0 * np.pi * x - 0.5 * np.pi) + 1.0)
        u0 = np.asarray(self.init, dtype=float)
        if u0.shape != (self.n_dof,):
            raise ValueError(f"custom initial state must have length {self.n_dof}")
        return u0


@dataclass
class FomState:
    u: np.ndarray
    t: float


def rhs(u, cfg):
    """-(1/dx) (D u) * u with periodic backward differences, matrix-free."""
    u = np.asarray(u, dtype=float)
    if u.shape != (cfg.n_dof,):
        raise ValueError(f"state must have length {cfg.n_dof}")
    return kernels.burgers_rhs(u, cfg.dx)


def be_residual(u_new, u_old, cfg):
    """(u_new - u_old) - dt * rhs(u_new)."""
    return (np.asarray(u_new, float) - np.asarray(u_old, float)) - cfg.dt * rhs(
        u_new, cfg
    )


def _jacobian_bands(u, cfg):
    """Diagonal, subdiagonal, and periodic corner of I - dt * d(rhs)/du."""
    r = cfg.dt / cfg.dx
    u_left = np.roll(u, 1)
    diag = 1.0 + r * (2.0 * u - u_left)
    sub = np.empty_like(u)
    sub[1:] = -r * u[1:]
    sub[0] = 0.0
    corner = -r * u[0]
    return diag, sub, corner


def be_jacobian(u, cfg):
    """Backward-Euler Jacobian as a sparse matrix (bidiagonal + corner)."""
    u = np.asarray(u, dtype=float)
    diag, sub, corner = _jacobian_bands(u, cfg)
    n = cfg.n_dof
    J = scipy.sparse.diags([diag, sub[1:]], [0, -1], format="lil")
    J[0, n - 1] += corner
    return J.tocsr()


def newton_step(u_old, cfg, t, step_index=0):
    """Solve one backward-Euler step by Newton iteration.

    Returns (u_new, iterations, residual_norms).  Tolerance is
    1e-10 * sqrt(N) on the residual 2-norm, at most 25 iterations.
    """
    tol = NEWTON_TOL_FACTOR * np.sqrt(cfg.n_dof)
    u = u_old.copy()
    norms = []
    for it in range(NEWTON_MAX_ITER + 1):
        r = be_residual(u, u_old, cfg)
        rnorm = float(np.linalg.norm(r))
        norms.append(rnorm)
        if rnorm <= tol:
            return u, it, norms
        if it == NEWTON_MAX_ITER:
            break
        diag, sub, corner = _jacobian_bands(u, cfg)
        du = kernels.bidiag_corner_solve(diag, sub, corner, -r)
        u = u + du
    raise NewtonDivergenceError(step_index, norms[-1])


def solve_fom(cfg, collect_newton_norms=False):
    """Run the full backward-Euler trajectory from the initial condition.

    Emits all n_steps + 1 states as snapshot columns plus the final state.
    """
    u = cfg.initial_state()
    states = np.empty((cfg.n_dof, cfg.n_steps + 1))
    states[:, 0] = u
    newton_norms = []
    for n in range(1, cfg.n_steps + 1):
        u, _, norms = newton_step(u, cfg, n * cfg.dt, step_index=n)
        states[:, n] = u
        if collect_newton_norms:
            newton_norms.append(norms)
    traj = SnapshotMatrix(states, kind="state", dt=cfg.dt, description="burgers fom")
    final = FomState(u=u, t=cfg.n_steps * cfg.dt)
    if collect_newton_norms:
        return traj, final, newton_norms
    return traj, final


def nonlinear_term_snapshots(traj, cfg):
    """Evaluate the semi-discrete right-hand side on every state column."""
    cols = [rhs(traj.data[:, j], cfg) for j in range(traj.n_snapshots)]
    return SnapshotMatrix(
        np.column_stack(cols), kind="nonlinear_term", dt=traj.dt,
        description="burgers nonlinear term",
    )


def shock_location(u, cfg):
    """Grid coordinate of the largest backward difference (periodic)."""
    jumps = np.abs(u - np.roll(u, 1))
    return cfg.grid()[int(np.argmax(jumps))]
