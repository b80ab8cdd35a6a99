//! Saddle-shaped states on the wedge by direct energy minimization.
//!
//! The working domain is the wedge T_R = {0 ≤ t ≤ s ≤ R} × [0, L]. A saddle
//! state minimizes the weighted extension energy
//!
//! ```text
//!   E(v) = ∫ s^{m-1} t^{m-1} |∇v|²/2  +  ∫_{λ=0} s^{m-1} t^{m-1} G(v)
//! ```
//!
//! over fields pinned to 0 on the cone face s = t, the outer face s = R, and
//! the top λ = L, with the natural symmetry closure at t = 0 and values
//! constrained to [0, 1]. The discrete energy is the edge-midpoint,
//! node-trapezoid quadrature shared with the cylinder solver, so the descent
//! optimality conditions are exactly the discrete Euler–Lagrange equations
//! reported by the residual diagnostics, and the second variation is exactly
//! the quadratic form used by the stability checks.
//!
//! Minimization is projected nodewise Gauss–Seidel (each visit solves the
//! one-node problem exactly, then clamps to [0, 1]), warm-started by
//! cascadic coarse-to-fine passes. The energy can never increase.
//!
//! The odd reflection v(s, t, λ) = −v(t, s, λ) extends a wedge state to the
//! full box; it is exact because the cone face carries exact zeros.

use crate::error::{Error, Result};
use crate::extension::{tau, WeightTables};
use crate::io::fmt_sig;
use crate::model::{GridSpec3, Nonlinearity, NonlinearityKind, ScalarField3};

/// Default radial exponent for the sliding-plateau comparison candidate.
pub const GAMMA_DEFAULT: f64 = 0.75;

/// Default cutoff-width exponent for the comparison candidate.
pub const BETA_DEFAULT: f64 = 0.6;

/// Sweeps spent per coarse cascadic level before moving up.
const COARSE_LEVEL_SWEEPS: usize = 600;

/// A minimizing saddle state on the wedge.
#[derive(Clone)]
pub struct SaddleState {
    /// Field on the wedge in full-box storage; nodes with t > s are inert
    /// zeros until [`odd_reflect`] is applied.
    pub v: ScalarField3,
    /// Half the ambient dimension 2m.
    pub m: usize,
    /// Which nonlinearity produced the state.
    pub kind: NonlinearityKind,
    /// Energy after each finest-level sweep, strictly decreasing.
    pub energy_history: Vec<f64>,
    /// Whether `v` has been oddly reflected to the full box.
    pub reflected: bool,
}

impl SaddleState {
    /// One-line JSON summary of the state.
    pub fn summary_json(&self) -> String {
        let grid = self.v.grid;
        let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
        for value in self.v.values() {
            min = min.min(*value);
            max = max.max(*value);
        }
        let energy = self.energy_history.last().copied().unwrap_or(f64::NAN);
        format!(
            "{{\"m\": {}, \"R\": {}, \"L\": {}, \"energy\": {}, \"min\": {}, \"max\": {}, \"iterations\": {}}}",
            self.m,
            fmt_sig(grid.s_max),
            fmt_sig(grid.lambda_max),
            fmt_sig(energy),
            fmt_sig(min),
            fmt_sig(max),
            self.energy_history.len()
        )
    }
}

/// Integration region for [`discrete_energy`].
#[derive(Clone, Copy, Debug)]
pub enum EnergyRegion {
    /// Everything the grid covers.
    WholeGrid,
    /// {s² + t² ≤ radius²} × [0, height].
    QuadrantCylinder { radius: f64, height: f64 },
    /// {s² + t² ≤ radius², s ≥ t} × [0, height].
    WedgeCylinder { radius: f64, height: f64 },
}

impl EnergyRegion {
    fn contains(&self, s: f64, t: f64, lambda: f64) -> bool {
        match *self {
            EnergyRegion::WholeGrid => true,
            EnergyRegion::QuadrantCylinder { radius, height } => {
                s * s + t * t <= radius * radius && lambda <= height
            }
            EnergyRegion::WedgeCylinder { radius, height } => {
                s * s + t * t <= radius * radius && lambda <= height && s >= t
            }
        }
    }

    /// Validates the radial extent and clips the height to the grid top:
    /// cylinder regions are always understood intersected with the grid box.
    fn validate_and_clip(&self, grid: &GridSpec3) -> Result<EnergyRegion> {
        let (radius, height) = match *self {
            EnergyRegion::WholeGrid => return Ok(*self),
            EnergyRegion::QuadrantCylinder { radius, height }
            | EnergyRegion::WedgeCylinder { radius, height } => (radius, height),
        };
        if !(radius > 0.0) || !(height > 0.0) {
            return Err(Error::Domain(format!(
                "energy region needs positive radius and height, got {radius} and {height}"
            )));
        }
        if radius > grid.s_max + 1e-12 || radius > grid.t_max + 1e-12 {
            return Err(Error::Domain(format!(
                "region radius {radius} lies outside the grid extents {} x {}",
                grid.s_max, grid.t_max
            )));
        }
        let clipped = height.min(grid.lambda_max);
        Ok(match *self {
            EnergyRegion::WholeGrid => unreachable!(),
            EnergyRegion::QuadrantCylinder { .. } => {
                EnergyRegion::QuadrantCylinder { radius, height: clipped }
            }
            EnergyRegion::WedgeCylinder { .. } => {
                EnergyRegion::WedgeCylinder { radius, height: clipped }
            }
        })
    }
}

/// Weighted discrete energy of `v` over `region`: edge-midpoint gradient
/// terms plus the trapezoid bottom potential. Edges are counted when their
/// midpoint lies in the region, bottom nodes when the node does. Regions
/// taller than the grid are silently intersected with it; regions wider
/// than the grid are a domain error.
pub fn discrete_energy(
    v: &ScalarField3,
    nl: &Nonlinearity,
    m: usize,
    region: EnergyRegion,
) -> Result<f64> {
    if v.grid.m != m {
        return Err(Error::Precondition(format!(
            "field grid carries m = {}, energy requested for m = {m}",
            v.grid.m
        )));
    }
    let clipped = region.validate_and_clip(&v.grid)?;
    Ok(energy_unchecked(v, nl, &clipped))
}

fn energy_unchecked(v: &ScalarField3, nl: &Nonlinearity, region: &EnergyRegion) -> f64 {
    let grid = v.grid;
    let w = WeightTables::new(&grid);
    let (ns, nt, nl_nodes) = (grid.ns(), grid.nt(), grid.nl());
    let (hs, hl) = (grid.h_s, grid.h_lambda);
    let vol = hs * hs * hl;
    let area = hs * hs;
    let mut dirichlet = 0.0;
    let mut potential = 0.0;
    for i in 0..ns {
        let s = grid.s(i);
        for j in 0..nt {
            let t = grid.t(j);
            let tau_s = tau(i, ns);
            let tau_t = tau(j, nt);
            for k in 0..nl_nodes {
                let lambda = grid.lambda(k);
                let tau_l = tau(k, nl_nodes);
                // s-edge (i, j, k) -> (i+1, j, k).
                if i + 1 < ns && region.contains(s + 0.5 * hs, t, lambda) {
                    let dv = v.at(i + 1, j, k) - v.at(i, j, k);
                    dirichlet += w.smh[i] * w.tm[j] * tau_t * tau_l * dv * dv / (2.0 * hs * hs);
                }
                // t-edge (i, j, k) -> (i, j+1, k).
                if j + 1 < nt && region.contains(s, t + 0.5 * hs, lambda) {
                    let dv = v.at(i, j + 1, k) - v.at(i, j, k);
                    dirichlet += w.sm[i] * tau_s * w.tmh[j] * tau_l * dv * dv / (2.0 * hs * hs);
                }
                // λ-edge (i, j, k) -> (i, j, k+1).
                if k + 1 < nl_nodes && region.contains(s, t, lambda + 0.5 * hl) {
                    let dv = v.at(i, j, k + 1) - v.at(i, j, k);
                    dirichlet += w.sm[i] * tau_s * w.tm[j] * tau_t * dv * dv / (2.0 * hl * hl);
                }
            }
            if region.contains(s, t, 0.0) {
                potential += w.sm[i] * tau_s * w.tm[j] * tau_t * nl.g(v.at(i, j, 0));
            }
        }
    }
    dirichlet * vol + potential * area
}

/// Energy restricted to the wedge nodes {t ≤ s}: exactly the objective the
/// descent minimizes on wedge storage (inert t > s nodes contribute nothing).
fn wedge_energy(v: &ScalarField3, nl: &Nonlinearity) -> f64 {
    let grid = v.grid;
    let big = grid.s_max.hypot(grid.t_max) + 1.0;
    energy_unchecked(
        v,
        nl,
        &EnergyRegion::WedgeCylinder { radius: big, height: grid.lambda_max },
    )
}

/// Parameters for [`minimize_energy`].
#[derive(Clone, Copy, Debug)]
pub struct DescentParams {
    /// Stop when the energy decrease of a full sweep falls below this.
    pub energy_tol: f64,
    /// And the sup-norm Euler–Lagrange residual over free nodes is below
    /// this (interior residuals in equation units, bottom in flux units).
    pub residual_tol: f64,
    /// Hard cap on finest-level sweeps.
    pub max_sweeps: usize,
}

impl Default for DescentParams {
    fn default() -> Self {
        DescentParams { energy_tol: 1e-13, residual_tol: 1e-9, max_sweeps: 50_000 }
    }
}

/// Pinned-node mask for the wedge problem: cone face and inert t > s, outer
/// face s = R, and the top λ = L are held at zero.
fn wedge_pins(grid: &GridSpec3) -> Vec<bool> {
    let (ns, nt, nl) = (grid.ns(), grid.nt(), grid.nl());
    let mut fixed = vec![false; ns * nt * nl];
    for i in 0..ns {
        for j in 0..nt {
            for k in 0..nl {
                if j >= i || i == ns - 1 || k == nl - 1 {
                    fixed[(i * nt + j) * nl + k] = true;
                }
            }
        }
    }
    fixed
}

/// One projected Gauss–Seidel sweep (red-black). Returns the worst free-node
/// Euler–Lagrange residual seen before each update (PDE units in the
/// interior, flux units on the bottom).
fn descent_sweep(
    v: &mut ScalarField3,
    nl: &Nonlinearity,
    w: &WeightTables,
    fixed: &[bool],
) -> f64 {
    let grid = v.grid;
    let (ns, nt, nln) = (grid.ns(), grid.nt(), grid.nl());
    let (hs, hl) = (grid.h_s, grid.h_lambda);
    let (hs2, hl2) = (hs * hs, hl * hl);
    let mut worst = 0.0f64;
    for color in 0..2usize {
        for i in 0..ns {
            for j in 0..nt.min(i + 1) {
                let tau_s = tau(i, ns);
                let tau_t = tau(j, nt);
                let base = (i * nt + j) * nln;
                let k0 = (i + j + color) % 2;
                let mut k = k0;
                while k < nln {
                    let p = base + k;
                    if fixed[p] {
                        k += 2;
                        continue;
                    }
                    let tau_l = tau(k, nln);
                    // Quadratic part: diag * xi^2/2 - b * xi, from the edges.
                    let mut diag = 0.0;
                    let mut b = 0.0;
                    if i > 0 {
                        let we = w.smh[i - 1] * w.tm[j] * tau_t * tau_l / hs2;
                        diag += we;
                        b += we * v.values()[p - nt * nln];
                    }
                    if i + 1 < ns {
                        let we = w.smh[i] * w.tm[j] * tau_t * tau_l / hs2;
                        diag += we;
                        b += we * v.values()[p + nt * nln];
                    }
                    if j > 0 {
                        let we = w.sm[i] * tau_s * w.tmh[j - 1] * tau_l / hs2;
                        diag += we;
                        b += we * v.values()[p - nln];
                    }
                    if j + 1 < nt {
                        let we = w.sm[i] * tau_s * w.tmh[j] * tau_l / hs2;
                        diag += we;
                        b += we * v.values()[p + nln];
                    }
                    let wb = w.sm[i] * tau_s * w.tm[j] * tau_t;
                    if k > 0 {
                        diag += wb / hl2;
                        b += wb / hl2 * v.values()[p - 1];
                    }
                    if k + 1 < nln {
                        diag += wb / hl2;
                        b += wb / hl2 * v.values()[p + 1];
                    }
                    let old = v.values()[p];
                    let new = if k == 0 && wb > 0.0 {
                        // Bottom node: minimize diag*x^2/2 - b*x + (wb/hl) G(x)
                        // (volume-scaled). Record the flux-unit residual first.
                        let resid = (diag * old - b) * hl / wb - nl.f(old);
                        if !fixed[p] {
                            worst = worst.max(resid.abs());
                        }
                        bottom_node_min(diag, b, wb / hl, nl, old)
                    } else {
                        if wb > 0.0 {
                            let wp = w.sm[i] * w.tm[j];
                            if wp > 0.0 {
                                let resid = (diag * old - b) / (wp * tau_s * tau_t * tau_l);
                                worst = worst.max(resid.abs());
                            }
                        }
                        if diag > 0.0 {
                            (b / diag).clamp(0.0, 1.0)
                        } else {
                            old
                        }
                    };
                    v.values_mut()[p] = new;
                    k += 2;
                }
            }
        }
    }
    worst
}

/// Exact minimizer of φ(x) = diag·x²/2 − b·x + wg·G(x) over [0, 1].
///
/// φ' = diag·x − b − wg·f(x); φ'' = diag − wg·f'(x) stays positive because
/// the λ-edge term alone gives diag·hl/wg ≥ 1/hl > sup f′ on admissible
/// grids, so safeguarded Newton converges to the unique stationary point.
fn bottom_node_min(diag: f64, b: f64, wg: f64, nl: &Nonlinearity, start: f64) -> f64 {
    let phi_prime = |x: f64| diag * x - b - wg * nl.f(x);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let plo = phi_prime(lo);
    if plo >= 0.0 {
        return 0.0;
    }
    if phi_prime(hi) <= 0.0 {
        return 1.0;
    }
    let mut x = start.clamp(0.0, 1.0);
    for _ in 0..40 {
        let fp = phi_prime(x);
        if fp.abs() <= 1e-15 * (diag + wg) {
            return x;
        }
        if fp > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let fpp = diag - wg * nl.f_prime(x);
        let newton = if fpp > 0.0 { x - fp / fpp } else { f64::NAN };
        x = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    x
}

/// Minimizes the wedge energy for `nl` on `grid`, returning the saddle
/// state. `m`, `r`, and `l` must agree with the grid; they are accepted
/// separately so call sites state the geometry they intend.
///
/// The descent runs coarse-to-fine (cascadic) and finishes on `grid` when a
/// sweep decreases the energy by less than `params.energy_tol` and the worst
/// free-node Euler–Lagrange residual is below `params.residual_tol`.
pub fn minimize_energy(
    nl: &Nonlinearity,
    m: usize,
    r: f64,
    l: f64,
    grid: &GridSpec3,
    params: &DescentParams,
) -> Result<SaddleState> {
    let flags = nl.flags();
    if !(flags.odd.holds && flags.g_double_well.holds && flags.f_prime_decreasing.holds) {
        return Err(Error::Precondition(
            "energy minimization requires an odd bistable nonlinearity with decreasing f' \
             on (0, 1)"
                .into(),
        ));
    }
    if grid.m != m {
        return Err(Error::Precondition(format!(
            "grid carries m = {}, minimization requested for m = {m}",
            grid.m
        )));
    }
    if (grid.s_max - r).abs() > 1e-9 || (grid.t_max - r).abs() > 1e-9 {
        return Err(Error::Precondition(format!(
            "wedge radius {r} does not match the grid extents {} x {}",
            grid.s_max, grid.t_max
        )));
    }
    if (grid.lambda_max - l).abs() > 1e-9 {
        return Err(Error::Precondition(format!(
            "height {l} does not match the grid height {}",
            grid.lambda_max
        )));
    }
    if grid.h_lambda * nl.sup_f_prime() >= 1.0 {
        return Err(Error::Precondition(format!(
            "bottom rows need h_lambda < 1/sup|f'| = {} for nodewise convexity, got {}",
            1.0 / nl.sup_f_prime(),
            grid.h_lambda
        )));
    }

    // Cascadic ladder: coarsen while cell counts stay even and large enough.
    let mut ladder = vec![*grid];
    loop {
        let g = ladder.last().unwrap();
        let cells = (g.ns() - 1, g.nt() - 1, g.nl() - 1);
        if cells.0 % 2 != 0 || cells.1 % 2 != 0 || cells.2 % 2 != 0 {
            break;
        }
        if cells.0 < 8 || cells.2 < 4 {
            break;
        }
        match GridSpec3::new(
            m,
            g.s_max,
            g.t_max,
            g.lambda_max,
            2.0 * g.h_s,
            2.0 * g.h_t,
            2.0 * g.h_lambda,
        ) {
            Ok(coarse) => ladder.push(coarse),
            Err(_) => break,
        }
    }

    // Coarsest initialization: the clamped cone-distance profile.
    let coarsest = *ladder.last().unwrap();
    let mut v = ScalarField3::from_fn(coarsest, |s, t, _| {
        ((s - t) / std::f64::consts::SQRT_2).clamp(0.0, 1.0)
    });
    apply_pins(&mut v);

    for lvl in (0..ladder.len()).rev() {
        let g = ladder[lvl];
        if !v.grid.same_as(&g) {
            v = prolong_to(&v, &g);
            apply_pins(&mut v);
        }
        let w = WeightTables::new(&g);
        let fixed = wedge_pins(&g);
        if lvl > 0 {
            let mut last = wedge_energy(&v, nl);
            for _ in 0..COARSE_LEVEL_SWEEPS {
                descent_sweep(&mut v, nl, &w, &fixed);
                let e = wedge_energy(&v, nl);
                if last - e < params.energy_tol.max(1e-12) {
                    break;
                }
                last = e;
            }
        }
    }

    // Finest level with full termination criteria and recorded history.
    let w = WeightTables::new(grid);
    let fixed = wedge_pins(grid);
    let mut history = vec![wedge_energy(&v, nl)];
    for _sweep in 0..params.max_sweeps {
        let residual = descent_sweep(&mut v, nl, &w, &fixed);
        let e = wedge_energy(&v, nl);
        let last = *history.last().unwrap();
        if e < last {
            history.push(e);
        }
        if last - e < params.energy_tol && residual <= params.residual_tol {
            return Ok(SaddleState {
                v,
                m,
                kind: nl.kind(),
                energy_history: history,
                reflected: false,
            });
        }
    }
    Err(Error::convergence(
        format!(
            "descent stalled: {} sweeps without meeting energy tol {} and residual tol {}",
            params.max_sweeps, params.energy_tol, params.residual_tol
        ),
        &history,
    ))
}

fn apply_pins(v: &mut ScalarField3) {
    let grid = v.grid;
    let fixed = wedge_pins(&grid);
    for (p, value) in v.values_mut().iter_mut().enumerate() {
        if fixed[p] {
            *value = 0.0;
        }
    }
}

/// Trilinear prolongation between nested grids (factor-two refinement).
fn prolong_to(coarse: &ScalarField3, fine_grid: &GridSpec3) -> ScalarField3 {
    let cg = coarse.grid;
    let mut fine = ScalarField3::zeros(*fine_grid);
    for i in 0..fine_grid.ns() {
        let (ci, ri) = (i / 2, i % 2);
        for j in 0..fine_grid.nt() {
            let (cj, rj) = (j / 2, j % 2);
            for k in 0..fine_grid.nl() {
                let (ck, rk) = (k / 2, k % 2);
                let mut acc = 0.0;
                for di in 0..=ri {
                    let wi = if ri == 0 { 1.0 } else { 0.5 };
                    for dj in 0..=rj {
                        let wj = if rj == 0 { 1.0 } else { 0.5 };
                        for dk in 0..=rk {
                            let wk = if rk == 0 { 1.0 } else { 0.5 };
                            acc += wi
                                * wj
                                * wk
                                * coarse.at(
                                    (ci + di).min(cg.ns() - 1),
                                    (cj + dj).min(cg.nt() - 1),
                                    (ck + dk).min(cg.nl() - 1),
                                );
                        }
                    }
                }
                *fine.at_mut(i, j, k) = acc;
            }
        }
    }
    fine
}

/// Extends a wedge state to the full box by the odd reflection
/// v(s, t, λ) = −v(t, s, λ), exact on the shared cone diagonal.
pub fn odd_reflect(state: &SaddleState) -> Result<ScalarField3> {
    odd_reflect_field(&state.v)
}

/// Field-level odd reflection across the cone diagonal: values at t ≤ s are
/// kept, values above the diagonal are replaced by −v(t, s, λ). Requires a
/// square box so the diagonal is the cone.
pub fn odd_reflect_field(v: &ScalarField3) -> Result<ScalarField3> {
    let grid = v.grid;
    if (grid.s_max - grid.t_max).abs() > 1e-12 {
        return Err(Error::Precondition(
            "odd reflection needs matching s and t extents so the cone is the diagonal".into(),
        ));
    }
    let mut full = ScalarField3::zeros(grid);
    for i in 0..grid.ns() {
        for j in 0..grid.nt() {
            for k in 0..grid.nl() {
                let value = if j <= i { v.at(i, j, k) } else { -v.at(j, i, k) };
                *full.at_mut(i, j, k) = value;
            }
        }
    }
    Ok(full)
}

/// Builds the sliding-plateau comparison candidate used for energy upper
/// bounds: inside the cylinder r ≤ s_cut the field is pushed to the clamped
/// cone-distance plateau, glued back to `v_ref` across r ∈ [s_cut − 1, s_cut]
/// radially and across λ ∈ [S^γ − S^β, S^γ] logarithmically in height.
///
/// Requires 1/2 ≤ β < γ < 1, s_cut + 2 < R, and S^γ ≤ L.
pub fn comparison_candidate(
    v_ref: &SaddleState,
    s_cut: f64,
    gamma: f64,
    beta: f64,
) -> Result<ScalarField3> {
    if !(0.5 <= beta && beta < gamma && gamma < 1.0) {
        return Err(Error::Precondition(format!(
            "exponents must satisfy 1/2 <= beta < gamma < 1, got beta = {beta}, gamma = {gamma}"
        )));
    }
    let grid = v_ref.v.grid;
    if !(s_cut + 2.0 < grid.s_max) {
        return Err(Error::Precondition(format!(
            "plateau radius {s_cut} needs s_cut + 2 < R = {}",
            grid.s_max
        )));
    }
    let lam_top = s_cut.powf(gamma);
    if lam_top > grid.lambda_max + 1e-12 {
        return Err(Error::Domain(format!(
            "height cutoff S^gamma = {lam_top} exceeds the grid height {}",
            grid.lambda_max
        )));
    }
    let lam_knee = lam_top - s_cut.powf(beta);
    if !(lam_knee > 0.0) {
        return Err(Error::Precondition(format!(
            "cutoff band S^gamma - S^beta = {lam_knee} must be positive"
        )));
    }
    let log_span = lam_top.ln() - lam_knee.ln();
    let mut w_field = ScalarField3::zeros(grid);
    for i in 0..grid.ns() {
        let s = grid.s(i);
        for j in 0..grid.nt().min(i + 1) {
            let t = grid.t(j);
            let r = s.hypot(t);
            let eta = (s_cut - r).clamp(0.0, 1.0);
            for k in 0..grid.nl() {
                let lambda = grid.lambda(k);
                let xi = if lambda <= lam_knee {
                    1.0
                } else if lambda >= lam_top {
                    0.0
                } else {
                    (lam_top.ln() - lambda.ln()) / log_span
                };
                let reference = v_ref.v.at(i, j, k);
                // Both ramps act only where they are strictly inside (0, 1];
                // elsewhere the candidate is the reference, exactly.
                *w_field.at_mut(i, j, k) = if eta == 0.0 || xi == 0.0 {
                    reference
                } else {
                    let plateau = ((s - t) / std::f64::consts::SQRT_2).clamp(0.0, 1.0);
                    let g = eta * plateau + (1.0 - eta) * reference;
                    xi * g + (1.0 - xi) * reference
                };
            }
        }
    }
    // Pinned faces keep the reference (zero) values exactly.
    let fixed = wedge_pins(&grid);
    for (p, value) in w_field.values_mut().iter_mut().enumerate() {
        if fixed[p] {
            *value = v_ref.v.values()[p];
        }
    }
    Ok(w_field)
}

/// Second variation of the wedge energy at `state` in direction `xi`, for
/// perturbations vanishing on the cone face, the outer face, and the top:
///
/// ```text
///   Q(ξ) = ∫_wedge s^{m-1} t^{m-1} |∇ξ|²  −  ∫_{λ=0} s^{m-1} t^{m-1} f'(v) ξ².
/// ```
///
/// At a minimizer this is nonnegative for every admissible direction.
pub fn cone_stability_form(
    state: &SaddleState,
    nl: &Nonlinearity,
    xi: &ScalarField3,
) -> Result<f64> {
    let grid = state.v.grid;
    if !xi.grid.same_as(&grid) {
        return Err(Error::Dimension("test direction lives on a different grid".into()));
    }
    if nl.kind() != state.kind {
        return Err(Error::Precondition(format!(
            "state was built with {}, form requested with {}",
            state.kind.name(),
            nl.kind().name()
        )));
    }
    let fixed = wedge_pins(&grid);
    let mut worst = 0.0f64;
    for (p, value) in xi.values().iter().enumerate() {
        if fixed[p] {
            worst = worst.max(value.abs());
        }
    }
    if worst > 1e-14 {
        return Err(Error::Precondition(format!(
            "test direction must vanish on the cone face, outer face, and top; \
             worst pinned-node value {worst:.3e}"
        )));
    }
    let w = WeightTables::new(&grid);
    let (ns, nt, nln) = (grid.ns(), grid.nt(), grid.nl());
    let (hs, hl) = (grid.h_s, grid.h_lambda);
    let vol = hs * hs * hl;
    let area = hs * hs;
    let mut dirichlet = 0.0;
    let mut potential = 0.0;
    for i in 0..ns {
        for j in 0..nt.min(i + 1) {
            let tau_s = tau(i, ns);
            let tau_t = tau(j, nt);
            for k in 0..nln {
                let tau_l = tau(k, nln);
                if i + 1 < ns && j <= i {
                    let d = xi.at(i + 1, j, k) - xi.at(i, j, k);
                    dirichlet += w.smh[i] * w.tm[j] * tau_t * tau_l * d * d / (hs * hs);
                }
                if j + 1 < nt && j + 1 <= i {
                    let d = xi.at(i, j + 1, k) - xi.at(i, j, k);
                    dirichlet += w.sm[i] * tau_s * w.tmh[j] * tau_l * d * d / (hs * hs);
                }
                if k + 1 < nln {
                    let d = xi.at(i, j, k + 1) - xi.at(i, j, k);
                    dirichlet += w.sm[i] * tau_s * w.tm[j] * tau_t * d * d / (hl * hl);
                }
            }
            let x0 = xi.at(i, j, 0);
            potential += w.sm[i] * tau_s * w.tm[j] * tau_t * nl.f_prime(state.v.at(i, j, 0))
                * x0
                * x0;
        }
    }
    Ok(dirichlet * vol - potential * area)
}
