import numpy as np
import pytest

from hyperrom import (
    BurgersConfig,
    PodBasis,
    RomConfig,
    RomRunner,
    SampleSet,
    be_residual,
    compute_pod,
    max_in_time_relative_error,
    run_rom,
    select_s_opt,
    sns_nonlinear_basis,
    solve_fom,
)


def reduced_setup(n=64, steps=20, k=8, seed=0):
    """A small FOM run plus a POD basis of its states."""
    cfg = BurgersConfig(
        n_dof=n, dx=2.0 / n, dt=0.002, n_steps=steps, domain_length=2.0
    )
    traj, _ = solve_fom(cfg)
    basis = compute_pod(traj, traj.data[:, 0].copy(), k)
    return cfg, traj, basis


def full_basis(cfg, traj):
    """Orthonormal completion of the snapshot POD modes to all of R^N."""
    n = cfg.n_dof
    centered = traj.data - traj.data[:, 0][:, None]
    U, s, _ = np.linalg.svd(centered, full_matrices=True)
    svals = np.zeros(n)
    svals[: s.size] = s
    return PodBasis(U, np.sort(svals)[::-1], traj.data[:, 0].copy())


class TestConfigValidation:
    def test_unknown_projection(self):
        cfg, _, basis = reduced_setup(steps=10)
        with pytest.raises(ValueError, match="projection"):
            RomConfig(basis=basis, fom=cfg, projection="petrov")

    def test_hyper_needs_samples(self):
        cfg, _, basis = reduced_setup(steps=10)
        with pytest.raises(ValueError, match="sample set"):
            RomConfig(basis=basis, fom=cfg, hyper="collocation")

    def test_gappy_needs_nonlinear_basis(self):
        cfg, _, basis = reduced_setup(steps=10)
        ss = SampleSet(list(range(10)), N=cfg.n_dof)
        with pytest.raises(ValueError, match="residual basis"):
            RomConfig(basis=basis, fom=cfg, hyper="gappy_pod", samples=ss)

    def test_gappy_needs_enough_samples(self):
        cfg, _, basis = reduced_setup(steps=10)
        fb = sns_nonlinear_basis(basis, "identity")
        ss = SampleSet(list(range(basis.n_modes - 1)), N=cfg.n_dof)
        with pytest.raises(ValueError, match="at least as many samples"):
            RomConfig(
                basis=basis, fom=cfg, hyper="gappy_pod",
                nonlinear_basis=fb, samples=ss,
            )


class TestExactnessLimits:
    @pytest.mark.parametrize("projection", ["lspg", "galerkin"])
    def test_complete_basis_reproduces_fom(self, projection):
        cfg, traj, _ = reduced_setup(n=64, steps=50)
        basis = full_basis(cfg, traj)
        result = run_rom(
            RomConfig(basis=basis, fom=cfg, projection=projection)
        )
        assert max_in_time_relative_error(traj, result) <= 1e-8

    @pytest.mark.parametrize("projection", ["lspg", "galerkin"])
    def test_full_sampling_collocation_collapses(self, projection):
        cfg, traj, basis = reduced_setup(n=64, steps=20)
        ss = SampleSet(list(range(cfg.n_dof)), N=cfg.n_dof)
        plain = run_rom(RomConfig(basis=basis, fom=cfg, projection=projection))
        sampled = run_rom(
            RomConfig(
                basis=basis, fom=cfg, projection=projection,
                hyper="collocation", samples=ss,
            )
        )
        diff = np.max(np.abs(plain.y - sampled.y))
        assert diff <= 1e-8

    def test_full_sampling_gappy_galerkin_collapses(self):
        cfg, traj, basis = reduced_setup(n=64, steps=20)
        fb = sns_nonlinear_basis(basis, "identity")
        ss = SampleSet(list(range(cfg.n_dof)), N=cfg.n_dof)
        plain = run_rom(RomConfig(basis=basis, fom=cfg, projection="galerkin"))
        sampled = run_rom(
            RomConfig(
                basis=basis, fom=cfg, projection="galerkin",
                hyper="gappy_pod", nonlinear_basis=fb, samples=ss,
            )
        )
        assert np.max(np.abs(plain.y - sampled.y)) <= 1e-8


class TestSolverProperties:
    def test_lspg_first_order_optimality(self):
        cfg, _, basis = reduced_setup(n=64, steps=8, k=6)
        runner = RomRunner(RomConfig(basis=basis, fom=cfg, projection="lspg"))
        y = basis.modes.T @ (cfg.initial_state() - basis.u_ref)
        for _ in range(3):
            y_next, _ = runner.step_lspg(y)
            r, J = runner.lspg_operand(y_next, y)
            grad = J.T @ r
            assert np.linalg.norm(grad) <= 1e-8 * (1.0 + np.linalg.norm(r))
            y = y_next

    def test_lspg_operand_jacobian_finite_differences(self):
        cfg, _, basis = reduced_setup(n=32, steps=8, k=6)
        runner = RomRunner(RomConfig(basis=basis, fom=cfg, projection="lspg"))
        rng = np.random.default_rng(0)
        y_prev = rng.standard_normal(6) * 0.1
        y = y_prev + 0.01 * rng.standard_normal(6)
        _, J = runner.lspg_operand(y, y_prev)
        h = 1e-6
        for j in range(6):
            e = np.zeros(6)
            e[j] = h
            rp, _ = runner.lspg_operand(y + e, y_prev)
            rm, _ = runner.lspg_operand(y - e, y_prev)
            assert np.max(np.abs(J[:, j] - (rp - rm) / (2 * h))) <= 1e-6

    def test_galerkin_rhs_jacobian_finite_differences(self):
        cfg, _, basis = reduced_setup(n=32, steps=8, k=6)
        runner = RomRunner(RomConfig(basis=basis, fom=cfg, projection="galerkin"))
        rng = np.random.default_rng(1)
        y = 0.1 * rng.standard_normal(6)
        _, Jg = runner.galerkin_reduced_rhs(y)
        h = 1e-6
        for j in range(6):
            e = np.zeros(6)
            e[j] = h
            gp, _ = runner.galerkin_reduced_rhs(y + e)
            gm, _ = runner.galerkin_reduced_rhs(y - e)
            assert np.max(np.abs(Jg[:, j] - (gp - gm) / (2 * h))) <= 1e-6

    def test_sampled_residual_matches_full_rows(self):
        cfg, _, basis = reduced_setup(n=64, steps=8, k=6)
        fb = sns_nonlinear_basis(basis, "identity")
        ss = select_s_opt(fb.modes, 12)
        runner = RomRunner(
            RomConfig(
                basis=basis, fom=cfg, projection="lspg",
                hyper="collocation", samples=ss,
            )
        )
        rng = np.random.default_rng(2)
        y_prev = 0.05 * rng.standard_normal(6)
        y = y_prev + 0.01 * rng.standard_normal(6)
        r_s, _ = runner._sampled_residual_jac(y, y_prev)
        u = basis.u_ref + basis.modes @ y
        u_prev = basis.u_ref + basis.modes @ y_prev
        cfg_step = BurgersConfig(
            n_dof=cfg.n_dof, dx=cfg.dx, dt=cfg.dt, n_steps=1,
            domain_length=cfg.domain_length,
        )
        full_r = be_residual(u, u_prev, cfg_step)
        np.testing.assert_allclose(r_s, full_r[ss.index_array], atol=1e-12)

    def test_stencil_locality_counters(self):
        cfg, _, basis = reduced_setup(n=64, steps=10, k=6)
        fb = sns_nonlinear_basis(basis, "identity")
        ss = select_s_opt(fb.modes, 16)
        rcfg = RomConfig(
            basis=basis, fom=cfg, projection="lspg",
            hyper="gappy_pod", nonlinear_basis=fb, samples=ss,
        )
        runner = RomRunner(rcfg)
        assert len(runner.closure) <= 2 * len(ss)
        y = basis.modes.T @ (cfg.initial_state() - basis.u_ref)
        for n in range(1, 4):
            y, _ = runner.step(y, step_index=n)
        assert runner.full_evals == 0
        assert runner.rows_touched > 0
        assert runner.rows_touched % len(runner.closure) == 0


class TestRunRom:
    def test_minimal_single_mode_run(self):
        cfg, traj, _ = reduced_setup(n=32, steps=1, k=1)
        basis = compute_pod(traj, traj.data[:, 0].copy(), 1)
        result = run_rom(RomConfig(basis=basis, fom=cfg, projection="lspg"))
        assert result.y.shape == (1, 2)
        assert np.all(np.isfinite(result.y))

    def test_initial_column_is_projection(self):
        cfg, traj, basis = reduced_setup(n=32, steps=6, k=4)
        result = run_rom(RomConfig(basis=basis, fom=cfg, projection="galerkin"))
        expected = basis.modes.T @ (cfg.initial_state() - basis.u_ref)
        np.testing.assert_allclose(result.y[:, 0], expected, atol=1e-14)

    def test_constant_initial_condition_stays_constant(self):
        n = 32
        cfg = BurgersConfig(
            n_dof=n, dx=2.0 / n, dt=0.01, n_steps=5,
            domain_length=2.0, init=np.full(n, 1.5),
        )
        rng = np.random.default_rng(3)
        Q, _ = np.linalg.qr(rng.standard_normal((n, 3)))
        basis = PodBasis(Q, np.array([3.0, 2.0, 1.0]), np.full(n, 1.5))
        result = run_rom(RomConfig(basis=basis, fom=cfg, projection="lspg"))
        states = result.states()
        for j in range(states.shape[1]):
            np.testing.assert_allclose(states[:, j], 1.5, atol=1e-9)

    def test_reference_scale_hyper_reduced_error(self, reference_fom):
        cfg, traj, _ = reference_fom
        basis = compute_pod(traj, traj.data[:, 0].copy(), 30)
        fb = sns_nonlinear_basis(basis, "identity")
        ss = select_s_opt(fb.modes, 60)
        result = run_rom(
            RomConfig(
                basis=basis, fom=cfg, projection="lspg",
                hyper="gappy_pod", nonlinear_basis=fb, samples=ss,
            )
        )
        assert max_in_time_relative_error(traj, result) <= 5e-2


class TestErrorMetric:
    def test_identical_is_zero(self):
        rng = np.random.default_rng(4)
        U = rng.standard_normal((6, 4))
        assert max_in_time_relative_error(U, U.copy()) == 0.0

    def test_doubled_is_one(self):
        rng = np.random.default_rng(5)
        U = rng.standard_normal((6, 4))
        assert max_in_time_relative_error(U, 2.0 * U) == pytest.approx(1.0)

    def test_matches_direct_formula(self):
        rng = np.random.default_rng(6)
        U = rng.standard_normal((7, 5))
        V = rng.standard_normal((7, 5))
        expected = np.max(
            np.linalg.norm(U[:, 1:] - V[:, 1:], axis=0)
        ) / np.max(np.linalg.norm(U[:, 1:], axis=0))
        assert max_in_time_relative_error(U, V) == pytest.approx(expected)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="shapes disagree"):
            max_in_time_relative_error(np.ones((3, 2)), np.ones((3, 3)))
