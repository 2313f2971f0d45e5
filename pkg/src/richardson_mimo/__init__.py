"""Inversion-free MMSE detection for the large-scale MIMO uplink via the Richardson iteration."""

from .errors import (
    ConfigurationError,
    ConvergenceError,
    DimensionError,
    DomainError,
    FactorizationError,
    FramingError,
    MimoError,
    PreconditionerError,
    UnsupportedRowError,
)
from .linsolve import (
    SolveTrace,
    SpdMatrix,
    cholesky_solve,
    convergence_interval,
    count_multiplications,
    estimate_lambda_max,
    is_spd,
    neumann_solve,
    richardson_solve,
    spectral_radius_of_iteration_matrix,
)
from .mimo import (
    ChannelMatrix,
    FilteringSystem,
    RealSystem,
    auto_relaxation,
    build_filtering_system,
    complex_to_real,
    detect_exact,
    detect_neumann,
    detect_richardson,
    generate_channel,
)

__version__ = "0.1.0"
