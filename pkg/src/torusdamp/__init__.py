"""Numerical toolkit for damped waves on the 2-torus with strip damping.

The damping is invariant in one direction, so the torus problem reduces to a
family of circle problems indexed by the transverse integer frequency.  The
subpackages cover: spectral grids and damping profiles, stationary resolvent
sweeps and their growth exponents, a discrete Weyl calculus with composition
remainders and a second-microlocal parametrix, exact semigroup evolution with
decay-exponent fits, and a config-driven sweep CLI (``torusdamp run``).
"""

from .decay import (
    AlphaCrossCheck,
    DecayTrace,
    ModeState,
    ModeTrajectory,
    choose_fit_window,
    classify_decay,
    cross_check_alpha,
    data_norm_h2_h1,
    evolve_mode,
    fit_decay_exponent,
    integrated_dissipation,
    mode_energy,
    total_energy,
    worst_case_ensemble,
)
from .fitting import ExponentFit, fit_loglog
from .grid import (
    GridFunction,
    PeriodicGrid,
    derivative,
    l2_inner,
    l2_norm,
    make_grid,
    resample,
    sample,
    sobolev_norm,
)
from .operators import (
    OperatorMatrix,
    laplacian_matrix,
    multiplier_matrix,
    operator_norm,
)
from .profiles import (
    DampingProfile,
    alpha_of_tau,
    check_hypotheses,
    constant_profile,
    gradient_bound_constant,
    oscillating_profile,
    polynomial_profile,
    profile_from_name,
    strip_constant_profile,
    tau_min,
)
from .resolvent import (
    DampingIdentity,
    LowEnergyReport,
    NearSingularError,
    StationaryProblem,
    assemble,
    assemble_semiclassical,
    beta_sweep,
    damping_identity_check,
    fit_resolvent_exponent,
    grid_for_frequency,
    low_energy_certificate,
    mode_norms,
    regime_table,
    resolvent_2d_norm,
    resolvent_norm,
    resonance_tuned_frequencies,
    solve,
    worst_beta,
)
from .symbols import (
    SemiclassicalSymbol,
    even_window,
    falling_step,
    rising_step,
    smooth_step,
    symbol_library,
)
from .weyl import (
    AliasingError,
    PlateauError,
    RemainderScaling,
    commutator_identity_check,
    commutator_identity_residual,
    composition_remainder,
    cutoff_conjugation_error,
    elliptic_estimate_check,
    elliptic_estimate_scan,
    moyal_term_expr,
    parametrix_build,
    parametrix_composition_check,
    parametrix_norm_scaling,
    quantize,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # grid
    "PeriodicGrid",
    "GridFunction",
    "make_grid",
    "sample",
    "derivative",
    "resample",
    "l2_inner",
    "l2_norm",
    "sobolev_norm",
    # operators
    "OperatorMatrix",
    "laplacian_matrix",
    "multiplier_matrix",
    "operator_norm",
    # profiles
    "DampingProfile",
    "strip_constant_profile",
    "polynomial_profile",
    "oscillating_profile",
    "constant_profile",
    "profile_from_name",
    "check_hypotheses",
    "gradient_bound_constant",
    "tau_min",
    "alpha_of_tau",
    # symbols
    "SemiclassicalSymbol",
    "symbol_library",
    "smooth_step",
    "rising_step",
    "falling_step",
    "even_window",
    # resolvent
    "StationaryProblem",
    "NearSingularError",
    "assemble",
    "assemble_semiclassical",
    "solve",
    "resolvent_norm",
    "beta_sweep",
    "worst_beta",
    "mode_norms",
    "resolvent_2d_norm",
    "DampingIdentity",
    "damping_identity_check",
    "LowEnergyReport",
    "low_energy_certificate",
    "regime_table",
    "fit_resolvent_exponent",
    "grid_for_frequency",
    "resonance_tuned_frequencies",
    # weyl
    "AliasingError",
    "PlateauError",
    "RemainderScaling",
    "quantize",
    "moyal_term_expr",
    "composition_remainder",
    "cutoff_conjugation_error",
    "commutator_identity_check",
    "commutator_identity_residual",
    "parametrix_build",
    "parametrix_composition_check",
    "parametrix_norm_scaling",
    "elliptic_estimate_check",
    "elliptic_estimate_scan",
    # decay
    "ModeState",
    "ModeTrajectory",
    "DecayTrace",
    "evolve_mode",
    "mode_energy",
    "total_energy",
    "data_norm_h2_h1",
    "integrated_dissipation",
    "fit_decay_exponent",
    "classify_decay",
    "choose_fit_window",
    "worst_case_ensemble",
    "cross_check_alpha",
    "AlphaCrossCheck",
    # fitting
    "ExponentFit",
    "fit_loglog",
]
