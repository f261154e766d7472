"""Low-rank subspace decomposition channel estimation for hybrid mmWave MIMO."""

from .channel import (
    PathSet,
    TruthDecomposition,
    draw_paths,
    steering_vector,
    synthesize,
    truncate,
)
from .estimator import (
    EstimateTriple,
    IterationTrace,
    SDConfig,
    mf_estimate,
    mse_bound,
    realized_error_bound,
    sd_estimate,
    solve_Sigma,
    solve_U,
    solve_V,
    spherical_ls,
)
from .metrics import PrecoderPair, nmse, precoders_from_estimate, spectrum_efficiency
from .sounding import (
    Observation,
    SounderSet,
    adjoint,
    factors,
    forward,
    generate,
    observe,
    snr_db_to_noise_var,
    to_matrix,
)

__version__ = "0.1.0"

__all__ = [
    "PathSet",
    "TruthDecomposition",
    "draw_paths",
    "steering_vector",
    "synthesize",
    "truncate",
    "EstimateTriple",
    "IterationTrace",
    "SDConfig",
    "mf_estimate",
    "mse_bound",
    "realized_error_bound",
    "sd_estimate",
    "solve_Sigma",
    "solve_U",
    "solve_V",
    "spherical_ls",
    "PrecoderPair",
    "nmse",
    "precoders_from_estimate",
    "spectrum_efficiency",
    "Observation",
    "SounderSet",
    "adjoint",
    "factors",
    "forward",
    "generate",
    "observe",
    "snr_db_to_noise_var",
    "to_matrix",
]
