import numpy as np
import pytest

from hyperrom import BurgersConfig, solve_fom


def random_orthonormal(rng, n, p):
    """Generic orthonormal columns (no ties) for selector tests."""
    Q, _ = np.linalg.qr(rng.standard_normal((n, p)))
    return Q


@pytest.fixture(scope="session")
def reference_fom():
    """The reference full-order run, shared across modules (it is the
    single most expensive fixture in the suite)."""
    cfg = BurgersConfig()
    traj, final = solve_fom(cfg)
    return cfg, traj, final
