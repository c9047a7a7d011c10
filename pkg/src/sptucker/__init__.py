"""Tucker factorization of sparse, partially observed tensors.

Row-wise alternating least squares over the observed entries only, with a
product-caching variant, a core-pruning variant, final QR orthogonalization
and missing-entry prediction.
"""

from .errors import (
    InternalConsistencyError,
    InvalidArgumentError,
    NumericFailure,
    ParseError,
    ResourceLimitError,
    SpTuckerError,
    ValidationError,
)
from .evaluation import (
    EvalReport,
    ScoredCoreEntry,
    loss,
    predict,
    reconstruction_error,
    test_rmse,
    top_core_entries,
)
from .linalg import core_mode_product, solve_row_system, thin_qr
from .solver import (
    CacheTable,
    IterationStats,
    SolverConfig,
    assemble_row_system,
    compute_delta_cached,
    compute_delta_direct,
    orthogonalize,
    precompute_cache,
    run,
    update_factor_matrix,
)
from .tensor import (
    CoreTensor,
    ModeSlices,
    Model,
    SparseTensor,
    build_mode_slices,
    init_model,
    reconstruct_entry,
)
from .truncation import partial_error, partial_errors, truncate_core

__version__ = "0.1.0"

__all__ = [
    "CacheTable",
    "CoreTensor",
    "EvalReport",
    "InternalConsistencyError",
    "InvalidArgumentError",
    "IterationStats",
    "ModeSlices",
    "Model",
    "NumericFailure",
    "ParseError",
    "ResourceLimitError",
    "ScoredCoreEntry",
    "SolverConfig",
    "SpTuckerError",
    "SparseTensor",
    "ValidationError",
    "__version__",
    "assemble_row_system",
    "build_mode_slices",
    "compute_delta_cached",
    "compute_delta_direct",
    "core_mode_product",
    "init_model",
    "loss",
    "orthogonalize",
    "partial_error",
    "partial_errors",
    "precompute_cache",
    "predict",
    "reconstruct_entry",
    "reconstruction_error",
    "run",
    "solve_row_system",
    "test_rmse",
    "thin_qr",
    "top_core_entries",
    "truncate_core",
    "update_factor_matrix",
]
