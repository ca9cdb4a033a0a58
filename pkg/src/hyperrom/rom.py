"""Linear-subspace ROMs for the Burgers model: Galerkin, LSPG, and their
gappy-POD / collocation hyper-reduced variants.

With hyper-reduction active, the state is only ever evaluated on the sample
mesh (selected rows plus their periodic left neighbors); the runner counts
touched rows so tests can verify no full-dimension evaluation occurs.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .snapshots import SnapshotMatrix

GN_TOL = 1e-10
GN_MAX_ITER = 25
GN_DIVERGE_STREAK = 5


class RomDivergenceError(RuntimeError):
    def __init__(self, step, detail=""):
        self.step = step
        super().__init__(f"reduced solver diverged at step {step}{detail}")


@dataclass
class RomConfig:
    basis: object  # solution PodBasis
    fom: object  # BurgersConfig
    projection: str = "lspg"  # or "galerkin"
    hyper: str = "none"  # "none" | "gappy_pod" | "collocation"
    nonlinear_basis: object = None  # Phi_f / Phi_r for gappy_pod
    samples: object = None
    reconstruct: bool = True

    def __post_init__(self):
        if self.projection not in ("galerkin", "lspg"):
            raise ValueError(f"unknown projection {self.projection!r}")
        if self.hyper not in ("none", "gappy_pod", "collocation"):
            raise ValueError(f"unknown hyper mode {self.hyper!r}")
        if self.hyper != "none" and self.samples is None:
            raise ValueError("hyper-reduction requires a sample set")
        if self.hyper == "gappy_pod":
            if self.nonlinear_basis is None:
                raise ValueError("gappy_pod requires a nonlinear/residual basis")
            if len(self.samples) < self.nonlinear_basis.n_modes:
                raise ValueError(
                    "need at least as many samples as nonlinear basis modes"
                )
        if self.basis.n_dof != self.fom.n_dof:
            raise ValueError("basis and FOM dimensions disagree")


@dataclass
class RomTrajectory:
    y: np.ndarray  # k x (n_steps + 1)
    u_ref: np.ndarray
    basis_modes: np.ndarray
    newton_iterations: list
    wall_time: float
    reconstructed: np.ndarray | None = None

    def states(self):
        if self.reconstructed is not None:
            return self.reconstructed
        return self.u_ref[:, None] + self.basis_modes @ self.y


class RomRunner:
    """Precomputes projection/hyper-reduction operators and advances steps."""

    def __init__(self, cfg: RomConfig):
        self.cfg = cfg
        self.Phi = cfg.basis.modes
        self.u_ref = cfg.basis.u_ref
        self.k = cfg.basis.n_modes
        self.N = cfg.fom.n_dof
        self.dt = cfg.fom.dt
        self.dx = cfg.fom.dx
        self.rows_touched = 0  # state rows evaluated through the sampled path
        self.full_evals = 0

        if cfg.hyper == "none":
            self._setup_full()
        else:
            self._setup_sampled()

    # -- full-dimension path ------------------------------------------------

    def _setup_full(self):
        self.Phi_left = np.roll(self.Phi, 1, axis=0)
        self.uref_left = np.roll(self.u_ref, 1)

    def _full_state(self, y):
        self.full_evals += 1
        return self.u_ref + self.Phi @ y

    # -- sampled path -------------------------------------------------------

    def _setup_sampled(self):
        idx = self.cfg.samples.index_array
        left = (idx - 1) % self.N
        closure = np.unique(np.concatenate([idx, left]))
        pos = {int(r): t for t, r in enumerate(closure)}
        self.closure = closure
        self.at = np.array([pos[int(i)] for i in idx], dtype=np.intp)
        self.at_left = np.array([pos[int(i)] for i in left], dtype=np.intp)
        self.Phi_c = self.Phi[closure]
        self.uref_c = self.u_ref[closure]
        n = len(idx)
        if self.cfg.hyper == "gappy_pod":
            Phi_hr = self.cfg.nonlinear_basis.modes
            sampled = Phi_hr[idx]
            # (Z^T Phi_hr)^+, minimum-norm on rank deficiency
            self.P = np.linalg.pinv(sampled, rcond=1e-12)
            if self.cfg.projection == "galerkin":
                # front matter Phi^T Phi_hr (Z^T Phi_hr)^+, fixed in time
                self.C = (self.Phi.T @ Phi_hr) @ self.P
        else:  # collocation
            self.P = None
            if self.cfg.projection == "galerkin":
                self.C = self.Phi[idx].T

    def _sampled_state(self, y):
        self.rows_touched += len(self.closure)
        return self.uref_c + self.Phi_c @ y

    def _sampled_residual_jac(self, y, y_prev):
        """Sampled rows of the BE residual and their Jacobian w.r.t. y."""
        u_c = self._sampled_state(y)
        du_c = self.Phi_c @ (y - y_prev)  # u - u_old on the closure
        a, al = self.at, self.at_left
        u_s = u_c[a]
        u_l = u_c[al]
        f_s = -(u_s - u_l) * u_s / self.dx
        r_s = du_c[a] - self.dt * f_s
        jf_diag = -(2.0 * u_s - u_l) / self.dx
        jf_sub = u_s / self.dx
        J_s = (
            self.Phi_c[a]
            - self.dt * (jf_diag[:, None] * self.Phi_c[a]
                         + jf_sub[:, None] * self.Phi_c[al])
        )
        return r_s, J_s

    def _sampled_f_jac(self, y):
        """Sampled rows of the nonlinear term f and of J_f * Phi."""
        u_c = self._sampled_state(y)
        a, al = self.at, self.at_left
        u_s = u_c[a]
        u_l = u_c[al]
        f_s = -(u_s - u_l) * u_s / self.dx
        jf_diag = -(2.0 * u_s - u_l) / self.dx
        jf_sub = u_s / self.dx
        Jf_s = jf_diag[:, None] * self.Phi_c[a] + jf_sub[:, None] * self.Phi_c[al]
        return f_s, Jf_s

    # -- residual operands --------------------------------------------------

    def lspg_operand(self, y, y_prev):
        """Residual operand and its Jacobian for the LSPG minimization."""
        if self.cfg.hyper == "none":
            u = self._full_state(y)
            u_l = np.roll(u, 1)
            f = -(u - u_l) * u / self.dx
            r = self.Phi @ (y - y_prev) - self.dt * f
            jf_diag = -(2.0 * u - u_l) / self.dx
            jf_sub = u / self.dx
            J = self.Phi - self.dt * (
                jf_diag[:, None] * self.Phi + jf_sub[:, None] * self.Phi_left
            )
            return r, J
        r_s, J_s = self._sampled_residual_jac(y, y_prev)
        if self.cfg.hyper == "gappy_pod":
            return self.P @ r_s, self.P @ J_s
        return r_s, J_s  # collocation

    def galerkin_reduced_rhs(self, y):
        """Phi^T f-tilde and its k x k Jacobian."""
        if self.cfg.hyper == "none":
            u = self._full_state(y)
            u_l = np.roll(u, 1)
            f = -(u - u_l) * u / self.dx
            g = self.Phi.T @ f
            jf_diag = -(2.0 * u - u_l) / self.dx
            jf_sub = u / self.dx
            JfPhi = jf_diag[:, None] * self.Phi + jf_sub[:, None] * self.Phi_left
            return g, self.Phi.T @ JfPhi
        f_s, Jf_s = self._sampled_f_jac(y)
        return self.C @ f_s, self.C @ Jf_s

    # -- time steps ---------------------------------------------------------

    def step_lspg(self, y_prev, step_index=0):
        """Gauss-Newton minimization of the (hyper-reduced) BE residual."""
        y = y_prev.copy()
        prev_norm = np.inf
        streak = 0
        for it in range(1, GN_MAX_ITER + 1):
            r, J = self.lspg_operand(y, y_prev)
            delta, *_ = np.linalg.lstsq(J, -r, rcond=None)
            y = y + delta
            dnorm = float(np.linalg.norm(delta))
            if not np.isfinite(dnorm):
                raise RomDivergenceError(step_index, " (nonfinite update)")
            if dnorm <= GN_TOL:
                return y, it
            streak = streak + 1 if dnorm > prev_norm else 0
            if streak >= GN_DIVERGE_STREAK:
                raise RomDivergenceError(
                    step_index, f" (update norm grew {streak} times)"
                )
            prev_norm = dnorm
        return y, GN_MAX_ITER

    def step_galerkin(self, y_prev, step_index=0):
        """Newton solve of y = y_prev + dt * Phi^T f-tilde(u_ref + Phi y)."""
        y = y_prev.copy()
        prev_norm = np.inf
        streak = 0
        eye = np.eye(self.k)
        for it in range(1, GN_MAX_ITER + 1):
            g, Jg = self.galerkin_reduced_rhs(y)
            res = y - y_prev - self.dt * g
            Jres = eye - self.dt * Jg
            delta = np.linalg.solve(Jres, -res)
            y = y + delta
            dnorm = float(np.linalg.norm(delta))
            if not np.isfinite(dnorm):
                raise RomDivergenceError(step_index, " (nonfinite update)")
            if dnorm <= GN_TOL:
                return y, it
            streak = streak + 1 if dnorm > prev_norm else 0
            if streak >= GN_DIVERGE_STREAK:
                raise RomDivergenceError(
                    step_index, f" (update norm grew {streak} times)"
                )
            prev_norm = dnorm
        return y, GN_MAX_ITER

    def step(self, y_prev, step_index=0):
        if self.cfg.projection == "lspg":
            return self.step_lspg(y_prev, step_index)
        return self.step_galerkin(y_prev, step_index)


def run_rom(cfg: RomConfig):
    """Advance the reduced model over the full time window."""
    runner = RomRunner(cfg)
    u0 = cfg.fom.initial_state()
    y0 = cfg.basis.modes.T @ (u0 - cfg.basis.u_ref)
    ys = np.empty((cfg.basis.n_modes, cfg.fom.n_steps + 1))
    ys[:, 0] = y0
    iters = []
    start = time.perf_counter()
    y = y0
    for n in range(1, cfg.fom.n_steps + 1):
        y, it = runner.step(y, step_index=n)
        ys[:, n] = y
        iters.append(it)
    wall = time.perf_counter() - start
    reconstructed = None
    if cfg.reconstruct:
        reconstructed = cfg.basis.u_ref[:, None] + cfg.basis.modes @ ys
    return RomTrajectory(
        y=ys,
        u_ref=cfg.basis.u_ref,
        basis_modes=cfg.basis.modes,
        newton_iterations=iters,
        wall_time=wall,
        reconstructed=reconstructed,
    )


def max_in_time_relative_error(fom_traj, rom_traj):
    """max_n ||u^n - u~^n|| / max_n ||u^n|| over steps n >= 1."""
    U = fom_traj.data if isinstance(fom_traj, SnapshotMatrix) else np.asarray(fom_traj)
    Ut = rom_traj.states() if hasattr(rom_traj, "states") else np.asarray(rom_traj)
    if U.shape != Ut.shape:
        raise ValueError(f"trajectory shapes disagree: {U.shape} vs {Ut.shape}")
    diff = np.linalg.norm(U[:, 1:] - Ut[:, 1:], axis=0)
    ref = np.linalg.norm(U[:, 1:], axis=0)
    return float(np.max(diff) / np.max(ref))
