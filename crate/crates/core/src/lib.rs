//! Numerical library for saddle-shaped solutions of the bistable
//! half-Laplacian equation (−Δ)^{1/2} u = f(u) in ℝ^{2m}.
//!
//! The fractional problem is treated through its local harmonic-extension
//! formulation on the upper half-space: a degenerate-weight Laplace equation
//! in the reduced coordinates (s, t, λ) with the nonlinear Neumann condition
//! −∂_λ v = f(v) on the trace λ = 0. The crate provides
//!
//! - [`model`]: grids, fields, nonlinearities, Simons-cone geometry;
//! - [`layer`]: the one-dimensional layer profile and its half-plane extension;
//! - [`extension`]: weighted harmonic solves, trace operators, energies;
//! - [`saddle`]: existence of saddle states by energy minimization;
//! - [`maximal`]: the maximal saddle state by monotone iteration from a barrier;
//! - [`analysis`]: monotonicity and asymptotic diagnostics;
//! - [`stability`]: second-variation quadratic forms, the weighted Hardy
//!   criterion, and instability certificates in low dimensions.

pub mod analysis;
pub mod error;
pub mod extension;
pub mod io;
pub mod layer;
pub mod maximal;
pub mod model;
pub mod saddle;
pub mod stability;

pub use analysis::{
    asymptotic_csv, asymptotic_report, d_y_min_excluding_corner, gradient_decay_check,
    gradient_profile_csv, monotonicity_report, AsymptoticRow, DerivativeExtremum,
    GradientDecayReport, MonotonicityReport,
};
pub use error::{Error, Result};
pub use extension::{
    bottom_flux_residual, dirichlet_to_neumann, dirichlet_to_neumann_2d, harmonic_fill,
    harmonic_fill_from, pde_residual, BottomCondition, CylinderProblem, Region, TopCondition,
};
pub use model::{
    cone_distance, st_coordinates, st_from_yz, yz_coordinates, GridSpec2, GridSpec3,
    HypothesisFlags, LayerProfile, Nonlinearity, NonlinearityKind, ScalarField2, ScalarField3,
};
pub use maximal::{
    barrier, choose_k, domination_scan, maximality_check, monotone_iterate, nested_limit, Barrier,
    DominationScan, MaximalState, MaximalityReport, NestedRow,
};
pub use saddle::{
    comparison_candidate, cone_stability_form, discrete_energy, minimize_energy, odd_reflect,
    odd_reflect_field, DescentParams, EnergyRegion, SaddleState,
};
pub use stability::{
    build_test_function, comparison_monotonicity, dimension_criterion, hardy_integral,
    hardy_rayleigh_min, instability_search, quadratic_form, quadratic_form_rotated,
    rayleigh_minimizer_profile, stability_csv, weighted_norm_sq, ComparisonReport, ComparisonRow,
    DimensionVerdict, PhiProfile, SearchRow, StabilityReport, TestFunctionSpec, Verdict,
    CERTIFICATE_MARGIN,
};
