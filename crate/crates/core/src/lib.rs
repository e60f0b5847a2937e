//! Spectral machinery for the nonlocal dispersive equation
//! `u_t + (u^2 + L u)_x = 0` on the 2pi-periodic line: symbol
//! certification, convolution kernels, traveling-wave solvers, symmetry
//! verification, and time evolution.

pub mod error;
pub mod evolution;
pub mod fitting;
pub mod kernel;
pub mod solver;
pub mod spectral;
pub mod symbols;
pub mod symmetry;

pub use error::{Error, Result};
pub use evolution::{
    integrate, rhs, stable_dt, step_rk4, traveling_check, ConservedSample, EvolutionOptions,
    EvolutionRun,
};
pub use kernel::{
    apply_l, apply_l_quadrature, build_kernel, build_kernel_derivative, check_monotone_half_period,
    check_origin_behaviour, kernel_from_atoms, theta3, KernelTable, MonotonicityReport,
    OriginReport,
};
pub use solver::{
    continue_branch, crest_exponent, fixed_point_solve, galilean_shift, holder_exponent_at_crest,
    newton_solve, residual, small_amplitude_init, Branch, BranchOptions, BranchTarget, Constraint,
    CrestFit, TerminationReason, WaveProfile,
};
pub use spectral::{DecayRate, PeriodicGrid, SpectralField};
pub use symmetry::{
    crest_count, full_symmetry_audit, gp_minimum, monotone_half_period, moving_plane_lambda0,
    reflect_profile, reflection_criterion, symmetry_defect, verifier_axis, verify_boundary_point,
    verify_touching, BoundaryReport, BoundaryVerdict, CheckOutcome, SymmetryReport,
    TouchingReport, TouchingVerdict,
};
pub use symbols::{
    assumption_s_check, bessel, cm_test, fkdv, from_atoms, oscillatory_control, symbol_order_check,
    whitham, CMReport, MeasureAtoms, OrderCheckReport, Symbol, SymbolConfig, SymbolKind,
};
