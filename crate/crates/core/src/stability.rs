//! Second-variation certificates for saddle solutions.
//!
//! The central object is the weighted quadratic form
//!
//! ```text
//!   Q_v(ξ) = ∫ s^{m−1} t^{m−1} |∇ξ|² d(s,t,λ)  −  ∫_{λ=0} s^{m−1} t^{m−1} f′(v) ξ² d(s,t)
//! ```
//!
//! over the full box [0,S]×[0,T]×[0,Λ] (both sides of the cone), for test
//! directions vanishing on the outer faces s = S, t = T, λ = Λ. A single
//! direction with Q_v(ξ) < 0 certifies instability of v; the search below
//! builds candidate directions ξ_a = φ(y/a)·η₂(λ)·∂_z v̄ from the z-derivative
//! of a maximal state and scans a parameter grid for a negative value.
//!
//! The same form can be evaluated in the rotated coordinates y = (s+t)/√2,
//! z = (s−t)/√2 with weight ((y²−z²)/2)^{m−1}; the two quadratures agree up
//! to O(h²) and serve as a cross-check of the weight bookkeeping.
//!
//! The dimension dependence of the search is governed by a one-dimensional
//! Hardy quotient in the dilation variable ρ: the weighted Rayleigh minimum
//! ∫ρ^{2(m−1)}φ′² / ∫ρ^{2m−4}φ² converges to (2m−3)²/4 on widening log-scale
//! domains, and candidate directions with negative form exist exactly when
//! that constant drops below 2(m−1) — an integer sign condition on the
//! ambient dimension n = 2m exposed by [`dimension_criterion`].

use crate::error::{Error, Result};
use crate::extension::{tau, WeightTables};
use crate::io::fmt_sig;
use crate::maximal::MaximalState;
use crate::model::{Nonlinearity, ScalarField3};
use crate::saddle::odd_reflect_field;
use std::f64::consts::{PI, SQRT_2};

/// A candidate direction only counts as an instability certificate when its
/// form value is below −margin·‖ξ‖²; the margin separates genuine negativity
/// from quadrature noise (calibrated so the null case m = 4 stays clean).
pub const CERTIFICATE_MARGIN: f64 = 1e-4;

/// Compactly supported dilation profile φ(ρ) used in the test functions.
#[derive(Clone, Debug)]
pub enum PhiProfile {
    /// sin(π(ρ−ρ₁)/(ρ₂−ρ₁)) on \[ρ₁, ρ₂\], zero outside.
    SinBump {
        /// Left end of the support, strictly positive.
        rho1: f64,
        /// Right end of the support.
        rho2: f64,
    },
    /// Piecewise-linear interpolation of samples on an increasing ρ-grid,
    /// zero outside the sampled interval; the endpoint samples must vanish.
    Tabulated {
        /// Identifier used in reports and CSV rows (no commas or newlines).
        id: String,
        /// Strictly increasing, strictly positive sample abscissae.
        rho: Vec<f64>,
        /// Sample values, zero at both ends.
        values: Vec<f64>,
    },
}

impl PhiProfile {
    /// The support interval \[ρ₁, ρ₂\].
    pub fn support(&self) -> (f64, f64) {
        match self {
            PhiProfile::SinBump { rho1, rho2 } => (*rho1, *rho2),
            PhiProfile::Tabulated { rho, .. } => (rho[0], rho[rho.len() - 1]),
        }
    }

    /// Value at ρ (exactly zero outside the support).
    pub fn eval(&self, rho: f64) -> f64 {
        match self {
            PhiProfile::SinBump { rho1, rho2 } => {
                if rho <= *rho1 || rho >= *rho2 {
                    0.0
                } else {
                    (PI * (rho - rho1) / (rho2 - rho1)).sin()
                }
            }
            PhiProfile::Tabulated { rho: xs, values, .. } => {
                if rho <= xs[0] || rho >= xs[xs.len() - 1] {
                    return 0.0;
                }
                let pos = xs.partition_point(|x| *x <= rho);
                let (x0, x1) = (xs[pos - 1], xs[pos]);
                let frac = (rho - x0) / (x1 - x0);
                values[pos - 1] * (1.0 - frac) + values[pos] * frac
            }
        }
    }

    /// Stable identifier for reports and CSV rows.
    pub fn id(&self) -> String {
        match self {
            PhiProfile::SinBump { rho1, rho2 } => format!("sin_{rho1}_{rho2}"),
            PhiProfile::Tabulated { id, .. } => id.clone(),
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Precondition(msg));
        match self {
            PhiProfile::SinBump { rho1, rho2 } => {
                if !(rho1.is_finite() && rho2.is_finite() && 0.0 < *rho1 && rho1 < rho2) {
                    return bad(format!(
                        "sin bump needs 0 < rho1 < rho2 finite, got [{rho1}, {rho2}]"
                    ));
                }
            }
            PhiProfile::Tabulated { id, rho, values } => {
                if id.is_empty() || id.contains(',') || id.contains('\n') {
                    return bad(format!("profile id '{id}' must be nonempty and CSV-safe"));
                }
                if rho.len() < 2 || rho.len() != values.len() {
                    return bad(format!(
                        "profile needs matching sample arrays of length >= 2, got {} and {}",
                        rho.len(),
                        values.len()
                    ));
                }
                if !(rho[0].is_finite() && rho[0] > 0.0) {
                    return bad(format!("profile support must start above rho = 0, got {}", rho[0]));
                }
                if rho.windows(2).any(|w| w[1] <= w[0] || !w[1].is_finite()) {
                    return bad("profile abscissae must be finite and strictly increasing".into());
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return bad("profile values must be finite".into());
                }
                if values[0] != 0.0 || values[values.len() - 1] != 0.0 {
                    return bad("profile must vanish at both ends of its support".into());
                }
            }
        }
        Ok(())
    }
}

/// Parameters of the dilated, height-cut test direction
/// ξ_a = φ(y/a) · η₂(λ) · ∂_z v̄.
///
/// The height cutoff η₂ is fully determined by the plateau end N: it is 1 on
/// \[0, N\], 0 beyond N + 1, and linear between, so its Lipschitz constant is
/// exactly 1.
#[derive(Clone, Debug)]
pub struct TestFunctionSpec {
    /// Dilation of the radial profile (ρ = y/a), strictly positive.
    pub a: f64,
    /// End of the η₂ ≡ 1 plateau in λ, strictly positive.
    pub n: f64,
    /// Radial profile φ with compact support in (0, ∞).
    pub phi: PhiProfile,
}

impl TestFunctionSpec {
    /// Validates the parameters and the profile.
    pub fn new(a: f64, n: f64, phi: PhiProfile) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::Precondition(format!("dilation a must be positive, got {a}")));
        }
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::Precondition(format!("plateau end N must be positive, got {n}")));
        }
        phi.validate()?;
        Ok(TestFunctionSpec { a, n, phi })
    }

    /// Height cutoff: 1 on \[0, N\], 0 beyond N + 1, linear between.
    pub fn eta2(&self, lambda: f64) -> f64 {
        if lambda <= self.n {
            1.0
        } else if lambda >= self.n + 1.0 {
            0.0
        } else {
            self.n + 1.0 - lambda
        }
    }
}

/// How a searched direction is classified.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum Verdict {
    /// A direction with Q < −margin·‖ξ‖² was found: the state is unstable.
    InstabilityCertificate,
    /// No direction in the searched family was negative beyond the margin;
    /// this does not prove stability.
    Inconclusive,
}

impl Verdict {
    /// Stable lowercase name used in summaries.
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::InstabilityCertificate => "instability_certificate",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// One evaluated parameter combination of the instability search.
#[derive(Clone, Debug)]
pub struct SearchRow {
    /// Dilation parameter.
    pub a: f64,
    /// Height plateau end.
    pub n: f64,
    /// Radial profile identifier.
    pub phi_id: String,
    /// Quadratic form value Q(ξ_a).
    pub q: f64,
    /// Scaled value Q/(a^{2m−3} N).
    pub q_scaled: f64,
    /// Weighted discrete L² norm squared of the direction.
    pub norm_sq: f64,
}

/// Outcome of an instability search: the most negative scaled form value,
/// its parameters, and every evaluated row (in deterministic lexicographic
/// order over the requested parameter lists).
#[derive(Clone, Debug)]
pub struct StabilityReport {
    /// Form value Q at the reported parameters.
    pub q: f64,
    /// Scaled value Q/(a^{2m−3} N) — the quantity minimized by the search.
    pub q_scaled: f64,
    /// Reported dilation.
    pub a: f64,
    /// Reported plateau end.
    pub n: f64,
    /// Reported profile identifier.
    pub phi_id: String,
    /// Weighted norm squared of the reported direction.
    pub norm_sq: f64,
    /// Certificate decision for the reported direction.
    pub verdict: Verdict,
    /// All evaluated combinations.
    pub rows: Vec<SearchRow>,
}

impl StabilityReport {
    /// Key-value JSON summary of the best row and the verdict.
    pub fn summary_json(&self) -> String {
        format!(
            "{{\"q\": {}, \"q_scaled\": {}, \"a\": {}, \"n\": {}, \"phi_id\": \"{}\", \
             \"norm_sq\": {}, \"verdict\": \"{}\", \"rows\": {}}}",
            fmt_sig(self.q),
            fmt_sig(self.q_scaled),
            fmt_sig(self.a),
            fmt_sig(self.n),
            self.phi_id,
            fmt_sig(self.norm_sq),
            self.verdict.name(),
            self.rows.len()
        )
    }
}

/// Verdict of the integer dimension criterion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum DimensionVerdict {
    /// The Hardy constant (2m−3)²/4 dominates 2(m−1): the one-dimensional
    /// quotient admits no negative direction.
    HardyNonnegative,
    /// The quotient dips below the potential coefficient: a compactly
    /// supported profile with negative weighted integral exists.
    NegativeDirectionExists,
}

impl DimensionVerdict {
    /// Stable snake_case name used in summaries and CSV output.
    pub fn name(&self) -> &'static str {
        match self {
            DimensionVerdict::HardyNonnegative => "hardy_nonnegative",
            DimensionVerdict::NegativeDirectionExists => "negative_direction_exists",
        }
    }
}

fn check_direction_grids(v: &ScalarField3, xi: &ScalarField3, m: usize) -> Result<()> {
    let grid = v.grid;
    if !xi.grid.same_as(&grid) {
        return Err(Error::Dimension("test direction lives on a different grid".into()));
    }
    if grid.m != m {
        return Err(Error::Precondition(format!(
            "grid carries weight exponent m = {}, form requested with m = {m}",
            grid.m
        )));
    }
    let (ns, nt, nl) = (grid.ns(), grid.nt(), grid.nl());
    let mut worst = 0.0f64;
    for j in 0..nt {
        for k in 0..nl {
            worst = worst.max(xi.at(ns - 1, j, k).abs());
        }
    }
    for i in 0..ns {
        for k in 0..nl {
            worst = worst.max(xi.at(i, nt - 1, k).abs());
        }
    }
    for i in 0..ns {
        for j in 0..nt {
            worst = worst.max(xi.at(i, j, nl - 1).abs());
        }
    }
    if worst > 1e-14 {
        return Err(Error::Precondition(format!(
            "test direction must vanish on the outer faces s = s_max, t = t_max and the top \
             λ = λ_max; worst face value {worst:.3e}"
        )));
    }
    Ok(())
}

/// Second variation of the weighted energy at the full-box field `v` in
/// direction `xi`:
///
/// ```text
///   Q(ξ) = ∫ s^{m−1} t^{m−1} |∇ξ|² d(s,t,λ) − ∫_{λ=0} s^{m−1} t^{m−1} f′(v) ξ² d(s,t),
/// ```
///
/// assembled with the edge-midpoint trapezoid rule shared by the energy and
/// the solver stencils. The m = 1 normalization constant of the underlying
/// operator is omitted consistently with the rest of the library.
///
/// `xi` must vanish on the outer faces s = s_max, t = t_max, λ = λ_max (the
/// symmetry axes s = 0 and t = 0 are natural boundaries and carry no
/// constraint). A negative value certifies instability of `v`.
pub fn quadratic_form(
    v: &ScalarField3,
    xi: &ScalarField3,
    nl: &Nonlinearity,
    m: usize,
) -> Result<f64> {
    check_direction_grids(v, xi, m)?;
    let grid = v.grid;
    let w = WeightTables::new(&grid);
    let (ns, nt, nln) = (grid.ns(), grid.nt(), grid.nl());
    let (hs, hl) = (grid.h_s, grid.h_lambda);
    let vol = hs * hs * hl;
    let area = hs * hs;
    let mut dirichlet = 0.0;
    let mut potential = 0.0;
    for i in 0..ns {
        let tau_s = tau(i, ns);
        for j in 0..nt {
            let tau_t = tau(j, nt);
            for k in 0..nln {
                let tau_l = tau(k, nln);
                if i + 1 < ns {
                    let d = xi.at(i + 1, j, k) - xi.at(i, j, k);
                    dirichlet += w.smh[i] * w.tm[j] * tau_t * tau_l * d * d / (hs * hs);
                }
                if j + 1 < nt {
                    let d = xi.at(i, j + 1, k) - xi.at(i, j, k);
                    dirichlet += w.sm[i] * tau_s * w.tmh[j] * tau_l * d * d / (hs * hs);
                }
                if k + 1 < nln {
                    let d = xi.at(i, j, k + 1) - xi.at(i, j, k);
                    dirichlet += w.sm[i] * tau_s * w.tm[j] * tau_t * d * d / (hl * hl);
                }
            }
            let x0 = xi.at(i, j, 0);
            potential +=
                w.sm[i] * tau_s * w.tm[j] * tau_t * nl.f_prime(v.at(i, j, 0)) * x0 * x0;
        }
    }
    Ok(dirichlet * vol - potential * area)
}

/// Weighted discrete L² norm squared ‖ξ‖² = ∫ s^{m−1} t^{m−1} ξ² d(s,t,λ)
/// with the same trapezoid weights as [`quadratic_form`]; used to scale the
/// instability certificate margin.
pub fn weighted_norm_sq(xi: &ScalarField3) -> f64 {
    let grid = xi.grid;
    let w = WeightTables::new(&grid);
    let (ns, nt, nln) = (grid.ns(), grid.nt(), grid.nl());
    let vol = grid.h_s * grid.h_s * grid.h_lambda;
    let mut total = 0.0;
    for i in 0..ns {
        let tau_s = tau(i, ns);
        for j in 0..nt {
            let tau_t = tau(j, nt);
            for k in 0..nln {
                let x = xi.at(i, j, k);
                total += w.sm[i] * tau_s * w.tm[j] * tau_t * tau(k, nln) * x * x;
            }
        }
    }
    total * vol
}

fn bilinear_plane(field: &ScalarField3, s: f64, t: f64, k: usize) -> f64 {
    let grid = field.grid;
    let h = grid.h_s;
    let fi = (s / h).clamp(0.0, (grid.ns() - 1) as f64);
    let fj = (t / h).clamp(0.0, (grid.nt() - 1) as f64);
    let i0 = (fi as usize).min(grid.ns() - 2);
    let j0 = (fj as usize).min(grid.nt() - 2);
    let (fs, ft) = (fi - i0 as f64, fj - j0 as f64);
    field.at(i0, j0, k) * (1.0 - fs) * (1.0 - ft)
        + field.at(i0 + 1, j0, k) * fs * (1.0 - ft)
        + field.at(i0, j0 + 1, k) * (1.0 - fs) * ft
        + field.at(i0 + 1, j0 + 1, k) * fs * ft
}

/// Evaluates the same quadratic form as [`quadratic_form`] in the rotated
/// coordinates y = (s+t)/√2, z = (s−t)/√2, where the weight becomes
/// ((y²−z²)/2)^{m−1} on the wedge |z| ≤ y:
///
/// ```text
///   Q(ξ) = ∫ ((y²−z²)/2)^{m−1} (ξ_y² + ξ_z² + ξ_λ²) d(y,z,λ) − (trace term).
/// ```
///
/// Fields are resampled bilinearly on a rotated lattice with the same
/// spacing, so the two evaluations agree to quadrature order O(h²) for
/// directions supported away from the outer faces (for m ≥ 2 the weight
/// itself vanishes on the wedge boundary |z| = y, keeping the clipped
/// boundary cells harmless). Intended as a cross-check of the weighted
/// assembly, not as the primary quadrature.
pub fn quadratic_form_rotated(
    v: &ScalarField3,
    xi: &ScalarField3,
    nl: &Nonlinearity,
    m: usize,
) -> Result<f64> {
    check_direction_grids(v, xi, m)?;
    let grid = v.grid;
    let h = grid.h_s;
    let hl = grid.h_lambda;
    let nln = grid.nl();
    let y_max = (grid.s_max + grid.t_max) / SQRT_2;
    let z_lo = -grid.t_max / SQRT_2;
    let z_hi = grid.s_max / SQRT_2;
    let ny = (y_max / h).ceil() as usize + 1;
    let nz = ((z_hi - z_lo) / h).ceil() as usize + 1;
    let pw = |sv: f64, tv: f64| (sv.max(0.0) * tv.max(0.0)).powi(m as i32 - 1);

    // Resample the direction (and the bottom trace of v) on the rotated
    // lattice; points outside the physical wedge |z| <= y carry zero.
    let st = |y: f64, z: f64| ((y + z) / SQRT_2, (y - z) / SQRT_2);
    let inside = |sv: f64, tv: f64| {
        sv >= -1e-12 && tv >= -1e-12 && sv <= grid.s_max + 1e-12 && tv <= grid.t_max + 1e-12
    };
    let mut xi_rot = vec![0.0f64; ny * nz * nln];
    let idx = |iy: usize, iz: usize, k: usize| (iy * nz + iz) * nln + k;
    for iy in 0..ny {
        let y = iy as f64 * h;
        for iz in 0..nz {
            let z = z_lo + iz as f64 * h;
            let (sv, tv) = st(y, z);
            if !inside(sv, tv) {
                continue;
            }
            for k in 0..nln {
                xi_rot[idx(iy, iz, k)] = bilinear_plane(xi, sv, tv, k);
            }
        }
    }

    let vol = h * h * hl;
    let area = h * h;
    let mut dirichlet = 0.0;
    let mut potential = 0.0;
    for iy in 0..ny {
        let y = iy as f64 * h;
        let tau_y = tau(iy, ny);
        for iz in 0..nz {
            let z = z_lo + iz as f64 * h;
            let tau_z = tau(iz, nz);
            for k in 0..nln {
                let tau_l = tau(k, nln);
                if iy + 1 < ny {
                    let d = xi_rot[idx(iy + 1, iz, k)] - xi_rot[idx(iy, iz, k)];
                    if d != 0.0 {
                        let (sv, tv) = st(y + 0.5 * h, z);
                        dirichlet += pw(sv, tv) * tau_z * tau_l * d * d / (h * h);
                    }
                }
                if iz + 1 < nz {
                    let d = xi_rot[idx(iy, iz + 1, k)] - xi_rot[idx(iy, iz, k)];
                    if d != 0.0 {
                        let (sv, tv) = st(y, z + 0.5 * h);
                        dirichlet += pw(sv, tv) * tau_y * tau_l * d * d / (h * h);
                    }
                }
                if k + 1 < nln {
                    let d = xi_rot[idx(iy, iz, k + 1)] - xi_rot[idx(iy, iz, k)];
                    if d != 0.0 {
                        let (sv, tv) = st(y, z);
                        dirichlet += pw(sv, tv) * tau_y * tau_z * d * d / (hl * hl);
                    }
                }
            }
            let x0 = xi_rot[idx(iy, iz, 0)];
            if x0 != 0.0 {
                let (sv, tv) = st(y, z);
                potential += pw(sv, tv)
                    * tau_y
                    * tau_z
                    * nl.f_prime(bilinear_plane(v, sv, tv, 0))
                    * x0
                    * x0;
            }
        }
    }
    Ok(dirichlet * vol - potential * area)
}

/// One sampled direction of a comparison run.
#[derive(Clone, Copy, Debug)]
pub struct ComparisonRow {
    /// Form value at the smaller field.
    pub q_v: f64,
    /// Form value at the larger field.
    pub q_w: f64,
    /// Whether Q_v ≤ Q_w held within the roundoff tolerance.
    pub holds: bool,
}

/// Outcome of [`comparison_monotonicity`].
#[derive(Clone, Debug)]
pub struct ComparisonReport {
    /// One row per sampled direction, in input order.
    pub rows: Vec<ComparisonRow>,
    /// Whether every sampled direction satisfied the inequality.
    pub all_hold: bool,
}

/// Verifies the comparison mechanism behind instability transfer: when
/// |v| ≤ |w| ≤ 1 nodewise and f′ is decreasing in |u| (f odd with f′
/// strictly decreasing on (0,1)), then f′(v) ≥ f′(w) pointwise and hence
/// Q_v(ξ) ≤ Q_w(ξ) for every direction — instability of the larger field
/// transfers to the smaller one.
///
/// The discrete inequality is exact up to roundoff because both forms share
/// the same quadrature; each sampled direction is checked with tolerance
/// 10⁻¹²·(1 + |Q|).
pub fn comparison_monotonicity(
    v: &ScalarField3,
    w: &ScalarField3,
    nl: &Nonlinearity,
    xi_samples: &[ScalarField3],
) -> Result<ComparisonReport> {
    let grid = v.grid;
    if !w.grid.same_as(&grid) {
        return Err(Error::Dimension("comparison fields live on different grids".into()));
    }
    let flags = nl.flags();
    if !(flags.odd.holds && flags.f_prime_decreasing.holds) {
        return Err(Error::Precondition(
            "comparison mechanism needs f odd with f' strictly decreasing on (0,1), \
             so that f' is decreasing in |u|"
            .into(),
        ));
    }
    let mut worst_order = f64::NEG_INFINITY;
    let mut worst_bound = f64::NEG_INFINITY;
    for (a, b) in v.values().iter().zip(w.values()) {
        worst_order = worst_order.max(a.abs() - b.abs());
        worst_bound = worst_bound.max(b.abs() - 1.0);
    }
    if worst_order > 1e-12 {
        return Err(Error::Precondition(format!(
            "|v| <= |w| fails nodewise by {worst_order:.3e}"
        )));
    }
    if worst_bound > 1e-12 {
        return Err(Error::Precondition(format!("|w| <= 1 fails nodewise by {worst_bound:.3e}")));
    }
    let mut rows = Vec::with_capacity(xi_samples.len());
    let mut all_hold = true;
    for xi in xi_samples {
        let q_v = quadratic_form(v, xi, nl, grid.m)?;
        let q_w = quadratic_form(w, xi, nl, grid.m)?;
        let tol = 1e-12 * (1.0 + q_v.abs().max(q_w.abs()));
        let holds = q_v <= q_w + tol;
        all_hold &= holds;
        rows.push(ComparisonRow { q_v, q_w, holds });
    }
    Ok(ComparisonReport { rows, all_hold })
}

/// Builds the dilated test direction ξ_a = φ(y/a) · η₂(λ) · ∂_z v̄ on the
/// grid of the odd-reflected field `v_bar`.
///
/// The z-derivative is the centered difference (∂_s − ∂_t)/√2; at the
/// symmetry axes s = 0 and t = 0 the corresponding radial derivative is
/// taken as exactly zero (the even-reflection ghost of the radial
/// coordinates). Nodes where either cutoff vanishes are exactly zero, so
/// the result is admissible for [`quadratic_form`] whenever the support
/// fits: min(s_max, t_max) ≥ √2·a·ρ₂ and λ_max ≥ N + 1. A grid too small
/// for the requested spec is a domain error stating the required extents.
pub fn build_test_function(
    v_bar: &ScalarField3,
    spec: &TestFunctionSpec,
    m: usize,
) -> Result<ScalarField3> {
    let grid = v_bar.grid;
    if grid.m != m {
        return Err(Error::Precondition(format!(
            "grid carries weight exponent m = {}, test function requested with m = {m}",
            grid.m
        )));
    }
    let (_, rho2) = spec.phi.support();
    let need_st = SQRT_2 * spec.a * rho2;
    let need_lambda = spec.n + 1.0;
    if grid.s_max < need_st - 1e-12
        || grid.t_max < need_st - 1e-12
        || grid.lambda_max < need_lambda - 1e-12
    {
        return Err(Error::Domain(format!(
            "test-function support needs s_max >= {need_st:.6} and t_max >= {need_st:.6} \
             (= sqrt(2)·a·rho2) and lambda_max >= {need_lambda:.6} (= N + 1); \
             grid has s_max = {}, t_max = {}, lambda_max = {}",
            grid.s_max, grid.t_max, grid.lambda_max
        )));
    }
    let (ns, nt, nln) = (grid.ns(), grid.nt(), grid.nl());
    let h = grid.h_s;
    let mut xi = ScalarField3::zeros(grid);
    for i in 0..ns {
        let s = grid.s(i);
        for j in 0..nt {
            let t = grid.t(j);
            let y = (s + t) / SQRT_2;
            let phi = spec.phi.eval(y / spec.a);
            if phi == 0.0 {
                continue;
            }
            for k in 0..nln {
                let cut = phi * spec.eta2(grid.lambda(k));
                if cut == 0.0 {
                    continue;
                }
                let ds = if i == 0 {
                    0.0
                } else if i + 1 < ns {
                    (v_bar.at(i + 1, j, k) - v_bar.at(i - 1, j, k)) / (2.0 * h)
                } else {
                    (v_bar.at(i, j, k) - v_bar.at(i - 1, j, k)) / h
                };
                let dt = if j == 0 {
                    0.0
                } else if j + 1 < nt {
                    (v_bar.at(i, j + 1, k) - v_bar.at(i, j - 1, k)) / (2.0 * h)
                } else {
                    (v_bar.at(i, j, k) - v_bar.at(i, j - 1, k)) / h
                };
                *xi.at_mut(i, j, k) = cut * (ds - dt) / SQRT_2;
            }
        }
    }
    Ok(xi)
}

/// Scans the parameter grid (a, N, φ) for directions with negative scaled
/// form value at the odd reflection of the maximal state `maximal`.
///
/// Every combination is evaluated exactly (no asymptotic simplification of
/// the form); a single negative value below the certificate margin settles
/// instability, while an empty-handed scan is reported as inconclusive —
/// never as stability. Combinations are evaluated and aggregated in
/// deterministic lexicographic order over the given lists, and the most
/// negative scaled value Q/(a^{2m−3} N) is reported.
///
/// Requires m ∈ {2, 3, 4} (ambient dimension 4, 6, or 8) and nonempty lists.
pub fn instability_search(
    maximal: &MaximalState,
    nl: &Nonlinearity,
    m: usize,
    a_list: &[f64],
    n_list: &[f64],
    phi_family: &[PhiProfile],
) -> Result<StabilityReport> {
    if !(2..=4).contains(&m) {
        return Err(Error::Precondition(format!(
            "instability search covers m in {{2, 3, 4}}, got m = {m}"
        )));
    }
    if maximal.m != m {
        return Err(Error::Precondition(format!(
            "maximal state was built for m = {}, search requested with m = {m}",
            maximal.m
        )));
    }
    if nl.kind() != maximal.kind {
        return Err(Error::Precondition(format!(
            "maximal state was built with {}, search requested with {}",
            maximal.kind.name(),
            nl.kind().name()
        )));
    }
    if a_list.is_empty() || n_list.is_empty() || phi_family.is_empty() {
        return Err(Error::Precondition(
            "instability search needs nonempty a, N, and profile lists".into(),
        ));
    }
    let v_full = odd_reflect_field(&maximal.v)?;
    let mut rows = Vec::with_capacity(a_list.len() * n_list.len() * phi_family.len());
    let mut best: Option<usize> = None;
    for &a in a_list {
        for &n in n_list {
            for phi in phi_family {
                let spec = TestFunctionSpec::new(a, n, phi.clone())?;
                let xi = build_test_function(&v_full, &spec, m)?;
                let q = quadratic_form(&v_full, &xi, nl, m)?;
                let norm_sq = weighted_norm_sq(&xi);
                let q_scaled = q / (a.powi(2 * m as i32 - 3) * n);
                rows.push(SearchRow { a, n, phi_id: phi.id(), q, q_scaled, norm_sq });
                let better = match best {
                    None => true,
                    Some(b) => q_scaled < rows[b].q_scaled,
                };
                if better {
                    best = Some(rows.len() - 1);
                }
            }
        }
    }
    let b = &rows[best.expect("nonempty lists produce at least one row")];
    let verdict = if b.q < -CERTIFICATE_MARGIN * b.norm_sq {
        Verdict::InstabilityCertificate
    } else {
        Verdict::Inconclusive
    };
    Ok(StabilityReport {
        q: b.q,
        q_scaled: b.q_scaled,
        a: b.a,
        n: b.n,
        phi_id: b.phi_id.clone(),
        norm_sq: b.norm_sq,
        verdict,
        rows: rows.clone(),
    })
}

/// CSV of search rows: `a,N,phi_id,Q,Q_scaled`, floats at 12 significant
/// digits.
pub fn stability_csv(rows: &[SearchRow]) -> String {
    let mut out = String::from("a,N,phi_id,Q,Q_scaled\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt_sig(row.a),
            fmt_sig(row.n),
            row.phi_id,
            fmt_sig(row.q),
            fmt_sig(row.q_scaled)
        ));
    }
    out
}

/// Trapezoidal value of the one-dimensional weighted Hardy integrand
///
/// ```text
///   ∫ ρ^{2(m−1)} ( φ′(ρ)² − (2(m−1)/ρ²) φ(ρ)² ) dρ
/// ```
///
/// for a profile sampled on a strictly increasing grid with ρ > 0 and φ
/// vanishing at both ends (compact support inside (0, ∞)). The derivative
/// term uses interval midpoints, the potential term nodal trapezoid
/// weights. Negative values witness the failure of the Hardy bound for the
/// given m.
pub fn hardy_integral(m: usize, rho: &[f64], phi: &[f64]) -> Result<f64> {
    if m < 1 {
        return Err(Error::Precondition(format!("weight exponent m must be >= 1, got {m}")));
    }
    if rho.len() < 2 || rho.len() != phi.len() {
        return Err(Error::Precondition(format!(
            "profile needs matching sample arrays of length >= 2, got {} and {}",
            rho.len(),
            phi.len()
        )));
    }
    if !(rho[0].is_finite() && rho[0] > 0.0) {
        return Err(Error::Precondition(format!(
            "support must stay inside (0, inf); first node is {}",
            rho[0]
        )));
    }
    if rho.windows(2).any(|w| w[1] <= w[0] || !w[1].is_finite()) {
        return Err(Error::Precondition(
            "sample abscissae must be finite and strictly increasing".into(),
        ));
    }
    if phi[0] != 0.0 || phi[phi.len() - 1] != 0.0 {
        return Err(Error::Precondition(
            "profile must vanish at both ends of its sampled support".into(),
        ));
    }
    let p = 2 * m as i32 - 2;
    let n = rho.len();
    let mut derivative = 0.0;
    for e in 0..n - 1 {
        let dx = rho[e + 1] - rho[e];
        let slope = (phi[e + 1] - phi[e]) / dx;
        let mid = 0.5 * (rho[e] + rho[e + 1]);
        derivative += mid.powi(p) * slope * slope * dx;
    }
    let mut potential = 0.0;
    if m > 1 {
        let coeff = f64::from(p);
        for i in 0..n {
            let wl = if i > 0 { rho[i] - rho[i - 1] } else { 0.0 };
            let wr = if i + 1 < n { rho[i + 1] - rho[i] } else { 0.0 };
            potential += 0.5 * (wl + wr) * coeff * rho[i].powi(p - 2) * phi[i] * phi[i];
        }
    }
    Ok(derivative - potential)
}

fn thomas_solve(diag: &[f64], off: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = off[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let denom = diag[i] - off[i - 1] * c[i - 1];
        c[i] = if i + 1 < n { off[i] / denom } else { 0.0 };
        d[i] = (rhs[i] - off[i - 1] * d[i - 1]) / denom;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        let next = x[i + 1];
        x[i] -= c[i] * next;
    }
    x
}

fn rayleigh_solve(
    m: usize,
    rho_min: f64,
    rho_max: f64,
    nodes: usize,
) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    if m < 1 {
        return Err(Error::Precondition(format!("weight exponent m must be >= 1, got {m}")));
    }
    if !(rho_min.is_finite() && rho_max.is_finite() && 0.0 < rho_min && rho_min < rho_max) {
        return Err(Error::Precondition(format!(
            "need 0 < rho_min < rho_max finite, got [{rho_min}, {rho_max}]"
        )));
    }
    if nodes < 3 {
        return Err(Error::Precondition(format!(
            "need at least 3 nodes for an interior minimizer, got {nodes}"
        )));
    }
    let ratio = rho_max / rho_min;
    let rho: Vec<f64> =
        (0..nodes).map(|i| rho_min * ratio.powf(i as f64 / (nodes - 1) as f64)).collect();

    // Stiffness uses the exact interval integral of the weight, mass the
    // nodal trapezoid weights; both are positive, so the pencil is SPD.
    let p = 2 * m as i32 - 1;
    let ke: Vec<f64> = (0..nodes - 1)
        .map(|e| {
            let dx = rho[e + 1] - rho[e];
            let w = (rho[e + 1].powi(p) - rho[e].powi(p)) / f64::from(p);
            w / (dx * dx)
        })
        .collect();
    let nin = nodes - 2;
    let diag: Vec<f64> = (0..nin).map(|i| ke[i] + ke[i + 1]).collect();
    let off: Vec<f64> = (0..nin.saturating_sub(1)).map(|i| -ke[i + 1]).collect();
    let mass: Vec<f64> = (0..nin)
        .map(|i| {
            let node = i + 1;
            0.5 * (rho[node + 1] - rho[node - 1]) * rho[node].powi(2 * m as i32 - 4)
        })
        .collect();

    let quad = |x: &[f64]| -> f64 {
        let mut acc = 0.0;
        for i in 0..nin {
            acc += diag[i] * x[i] * x[i];
            if i + 1 < nin {
                acc += 2.0 * off[i] * x[i] * x[i + 1];
            }
        }
        acc
    };
    let mut x: Vec<f64> =
        (0..nin).map(|i| (PI * (i + 1) as f64 / (nin + 1) as f64).sin()).collect();
    let bnorm = |x: &[f64]| x.iter().zip(&mass).map(|(v, b)| b * v * v).sum::<f64>().sqrt();
    let nb = bnorm(&x);
    x.iter_mut().for_each(|v| *v /= nb);
    let mut lambda_prev = f64::INFINITY;
    for _ in 0..2000 {
        let rhs: Vec<f64> = x.iter().zip(&mass).map(|(v, b)| b * v).collect();
        let mut y = thomas_solve(&diag, &off, &rhs);
        let nb = bnorm(&y);
        y.iter_mut().for_each(|v| *v /= nb);
        let lambda = quad(&y);
        x = y;
        if (lambda - lambda_prev).abs() <= 1e-13 * lambda.abs() {
            let mut full = vec![0.0; nodes];
            full[1..=nin].copy_from_slice(&x);
            let sup = full.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            // Fix an orientation and a sup normalization for reproducibility.
            let sign = if full[nodes / 2] < 0.0 { -1.0 } else { 1.0 };
            full.iter_mut().for_each(|v| *v *= sign / sup);
            return Ok((lambda, rho, full));
        }
        lambda_prev = lambda;
    }
    Err(Error::convergence(
        "inverse-power iteration for the weighted Rayleigh minimum did not settle \
         within 2000 iterations",
        &[lambda_prev],
    ))
}

/// Smallest discrete value of the weighted Rayleigh quotient
///
/// ```text
///   ∫ ρ^{2(m−1)} φ′² dρ  /  ∫ ρ^{2m−4} φ² dρ
/// ```
///
/// over profiles vanishing at both ends of the log-spaced grid with `nodes`
/// points on \[rho_min, rho_max\], computed by inverse-power iteration on
/// the tridiagonal stiffness/mass pencil. As the domain widens the value
/// decreases toward the Hardy constant (2m−3)²/4 (it converges from above;
/// on a finite log-length X = ln(rho_max/rho_min) the minimum is
/// π²/X² + (2m−3)²/4 up to discretization).
pub fn hardy_rayleigh_min(m: usize, rho_min: f64, rho_max: f64, nodes: usize) -> Result<f64> {
    rayleigh_solve(m, rho_min, rho_max, nodes).map(|(lambda, _, _)| lambda)
}

/// The discrete Rayleigh minimizer of [`hardy_rayleigh_min`] on
/// \[rho1, rho2\], sup-normalized and wrapped as a tabulated profile for use
/// in the instability-search family — the best one-dimensional candidate
/// shape the Hardy quotient suggests.
pub fn rayleigh_minimizer_profile(
    m: usize,
    rho1: f64,
    rho2: f64,
    nodes: usize,
) -> Result<PhiProfile> {
    let (_, rho, values) = rayleigh_solve(m, rho1, rho2, nodes)?;
    Ok(PhiProfile::Tabulated { id: format!("rayleigh_m{m}_{rho1}_{rho2}"), rho, values })
}

/// Sign of the one-dimensional Hardy comparison for even ambient dimension
/// n = 2m: nonneg when the Hardy constant (2m−3)²/4 dominates the potential
/// coefficient 2(m−1), i.e. when n² − 10n + 17 ≥ 0 (n ≥ 8 among even n);
/// otherwise a compactly supported profile with negative [`hardy_integral`]
/// exists.
pub fn dimension_criterion(n: usize) -> Result<DimensionVerdict> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(Error::Precondition(format!(
            "dimension criterion covers even n >= 2, got n = {n}"
        )));
    }
    let n = n as i64;
    if n * n - 10 * n + 17 >= 0 {
        Ok(DimensionVerdict::HardyNonnegative)
    } else {
        Ok(DimensionVerdict::NegativeDirectionExists)
    }
}
