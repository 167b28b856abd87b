"""Entropy production rate functions of nonequilibrium diffusions.

Thin wrapper around the compiled extension. The heavy lifting lives in the
C++ core; this package re-exports the bound operations.
"""

from _epflow import (  # noqa: F401
    AreCoefficients,
    AreSolution,
    AssumptionReport,
    CgfCurve,
    CriticalPoint,
    DriftModel,
    EpEnsemble,
    GridSpec,
    Interval,
    LocalLinearization,
    MeanEstimate,
    MgfEstimate,
    RateFunction,
    SpectralResult,
    admissible_pair,
    alpha_interval,
    auto_grid,
    build_coeffs,
    check_assumptions,
    convex_hull_check,
    default_alpha_grid,
    default_sigma_grid,
    e_eps_sweep,
    estimate_mean_ep,
    estimate_mean_ep_stationary,
    estimate_mgf,
    find_critical_points,
    fk_propagate,
    flat_interval,
    gc_defect,
    hamiltonian,
    leading_eig_linear,
    leading_eigenvalue,
    legendre,
    make_linear,
    make_rotation,
    make_twowell,
    mean_ep_local,
    philox_keystream,
    rate_gc_defect,
    region_raster,
    second_moment,
    semiclassical_cgf,
    simulate,
    solve_are,
    tail_histogram,
    trace_via_hamiltonian,
)

__version__ = "0.1.0"
