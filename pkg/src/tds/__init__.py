"""Batched tridiagonal solvers with a distributed, interleaved-layout core.

The pieces compose bottom-up: serial solvers over lane batches, the
grouped memory layout, an in-process message-passing rank model, the
two-round distributed solver built on all three, compact
finite-difference operators that feed it, and a transport-equation
demo plus movement accounting on top.
"""

from .compact import (
    CompactScheme,
    OrderResult,
    apply_operator,
    assemble,
    order_of_accuracy,
    second_derivative_scheme,
    sixth_order_first_derivative,
)
from .distributed import (
    BoundaryPair,
    DistCoeffs,
    StencilCoeffs,
    decouple_fused,
    decouple_unfused,
    distd2_solve,
    identity_stencil,
    preprocess,
    run_distd2,
    solve_boundary_pair,
    substitute,
)
from .errors import (
    ConfigError,
    DivisibilityError,
    NoNeighbor,
    NotDominantWarning,
    OutOfBounds,
    RankPanic,
    SingularMatrix,
    SingularPair,
    SingularPivot,
    TagMismatch,
    TdsError,
    TruncationUnsafe,
)
from .layout import (
    GroupedField,
    LayoutDescriptor,
    cartesian_to_packed,
    pack,
    packed_linear_index,
    reorder,
    unpack,
)
from .momentum import (
    VelocityField,
    directional_contribution,
    euler_step,
    evaluate_transport_rhs,
    evaluate_transport_rhs_reference,
    reorder_cost_fraction,
)
from .movement import (
    KernelMovement,
    MovementLedger,
    catalog_ledger,
    solver_bytes_per_point,
    TRANSPORT_BLOCKED,
    TRANSPORT_FUSED,
)
from .serial import (
    dense_solve_oracle,
    modified_thomas_solve,
    pdd_solve,
    periodic_thomas_solve,
    thomas_solve,
)
from .system import (
    RhsBatch,
    SubdomainPartition,
    TridiagonalSystem,
    dominance_margin,
    is_diagonally_dominant,
)
from .transport import (
    RankContext,
    exchange_boundary,
    exchange_halo,
    gather_to_root,
    scatter_from_root,
    spawn_ranks,
)

__version__ = "0.1.0"

__all__ = [
    "BoundaryPair",
    "CompactScheme",
    "ConfigError",
    "DistCoeffs",
    "DivisibilityError",
    "GroupedField",
    "KernelMovement",
    "LayoutDescriptor",
    "MovementLedger",
    "NoNeighbor",
    "NotDominantWarning",
    "OrderResult",
    "OutOfBounds",
    "RankContext",
    "RankPanic",
    "RhsBatch",
    "SingularMatrix",
    "SingularPair",
    "SingularPivot",
    "StencilCoeffs",
    "SubdomainPartition",
    "TagMismatch",
    "TdsError",
    "TridiagonalSystem",
    "TruncationUnsafe",
    "VelocityField",
    "apply_operator",
    "assemble",
    "cartesian_to_packed",
    "catalog_ledger",
    "decouple_fused",
    "decouple_unfused",
    "dense_solve_oracle",
    "directional_contribution",
    "distd2_solve",
    "dominance_margin",
    "euler_step",
    "evaluate_transport_rhs",
    "evaluate_transport_rhs_reference",
    "exchange_boundary",
    "exchange_halo",
    "gather_to_root",
    "identity_stencil",
    "is_diagonally_dominant",
    "modified_thomas_solve",
    "order_of_accuracy",
    "pack",
    "packed_linear_index",
    "pdd_solve",
    "periodic_thomas_solve",
    "preprocess",
    "reorder",
    "reorder_cost_fraction",
    "run_distd2",
    "scatter_from_root",
    "second_derivative_scheme",
    "sixth_order_first_derivative",
    "solve_boundary_pair",
    "solver_bytes_per_point",
    "spawn_ranks",
    "substitute",
    "thomas_solve",
    "unpack",
    "TRANSPORT_BLOCKED",
    "TRANSPORT_FUSED",
]
