"""GME witness pipeline for single-photon path-entangled states."""

from gmewit._core import (
    DimensionGuardError,
    ValidationError,
    __version__,
    alpha_f_zero,
    bisep_bound,
    dark_penalty,
    evaluate,
    fgh,
    log10_p_value,
    min_trials,
    scan_parties,
    tune,
)

__all__ = [
    "DimensionGuardError",
    "ValidationError",
    "__version__",
    "alpha_f_zero",
    "bisep_bound",
    "dark_penalty",
    "evaluate",
    "fgh",
    "log10_p_value",
    "min_trials",
    "scan_parties",
    "tune",
]
