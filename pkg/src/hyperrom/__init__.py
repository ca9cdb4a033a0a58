"""Hyper-reduction toolkit: quasi-optimal sampling, gappy POD, and a 1D
Burgers reduced-order-model pipeline."""

from .backend import backend_name
from .burgers import (
    BurgersConfig,
    FomState,
    NewtonDivergenceError,
    be_jacobian,
    be_residual,
    newton_step,
    nonlinear_term_snapshots,
    rhs,
    shock_location,
    solve_fom,
)
from .hyperreduction import (
    GappyOperator,
    ProjectionErrorReport,
    build_gappy,
    error_report,
    reconstruct,
)
from .rom import (
    RomConfig,
    RomDivergenceError,
    RomRunner,
    RomTrajectory,
    max_in_time_relative_error,
    run_rom,
)
from .sampling import (
    SampleSet,
    SValue,
    apply_sampling,
    read_sample_set,
    s_quantity,
    select_deim_oversampled,
    select_s_opt,
    write_sample_set,
)
from .snapshots import (
    PodBasis,
    SnapshotMatrix,
    compute_pod,
    read_matrix,
    sns_nonlinear_basis,
    write_matrix,
)

__version__ = "0.1.0"
