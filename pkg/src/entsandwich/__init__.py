"""Hyperplane-sandwich entanglement witness for multiparticle pure-state references."""

__version__ = "0.1.0"

from .linalg import (  # noqa: E402
    DensityMatrix,
    DimensionProfile,
    InvariantError,
    ProfileMismatchError,
    SizeCapError,
    frobenius_distance,
    hermitian_eig,
    hs_inner,
    tensor,
)
from .states import (  # noqa: E402
    ProductFactors,
    SchmidtVector,
    WernerParams,
    maximally_entangled,
    product_projector,
    schmidt_decompose,
    schmidt_state,
    werner,
)
from .witness import (  # noqa: E402
    Classification,
    Sandwich,
    WitnessVerdict,
    build_sandwich,
    closest_product_distance,
    depolarizing_threshold,
    kappa,
    universal_sandwich_gap,
    witness_check,
)

__all__ = [
    "Classification",
    "DensityMatrix",
    "DimensionProfile",
    "InvariantError",
    "ProductFactors",
    "ProfileMismatchError",
    "Sandwich",
    "SchmidtVector",
    "SizeCapError",
    "WernerParams",
    "WitnessVerdict",
    "build_sandwich",
    "closest_product_distance",
    "depolarizing_threshold",
    "frobenius_distance",
    "hermitian_eig",
    "hs_inner",
    "kappa",
    "maximally_entangled",
    "product_projector",
    "schmidt_decompose",
    "schmidt_state",
    "tensor",
    "universal_sandwich_gap",
    "werner",
    "witness_check",
]
