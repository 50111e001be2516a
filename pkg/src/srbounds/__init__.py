"""Rigorous bounds on stochastic-resonance observables via moment SDPs."""

from .poly import MultiIndex, Polynomial, enumerate_monomials, parse_polynomial
from .model import (
    ForcedDoubleWellParams,
    SdeModel,
    lift_forced_double_well,
    ornstein_uhlenbeck,
)
from .sdp import (
    BoundResult,
    MomentProblem,
    SolverSettings,
    SolveStatus,
    assemble,
    bound_pair,
    build_moment_index,
    localization_rows,
    solve,
    stationarity_rows,
)
from .analysis import (
    Interval,
    PeakResult,
    ScanRow,
    ScanTable,
    compose_B2,
    compose_R,
    find_peak,
    scan_noise,
    scan_row,
    square_interval,
)
from .oracles import (
    EmSettings,
    FpSettings,
    OracleEstimate,
    boltzmann_moments,
    em_simulate,
    fourier_project,
    fp_solve,
)
from .sdpa import render_sdpa, write_sdpa

__version__ = "0.1.0"

__all__ = [
    "BoundResult", "EmSettings", "ForcedDoubleWellParams", "FpSettings",
    "Interval", "MomentProblem", "MultiIndex", "OracleEstimate", "PeakResult",
    "Polynomial", "ScanRow", "ScanTable", "SdeModel", "SolveStatus",
    "SolverSettings", "assemble", "bound_pair", "boltzmann_moments",
    "build_moment_index", "compose_B2", "compose_R", "em_simulate",
    "enumerate_monomials", "find_peak", "fourier_project", "fp_solve",
    "lift_forced_double_well", "localization_rows", "ornstein_uhlenbeck",
    "parse_polynomial", "render_sdpa", "scan_noise", "scan_row", "solve",
    "square_interval", "stationarity_rows", "write_sdpa",
]
