//! Weighted Laplace solves on truncated cylinders over the (s, t) quadrant.
//!
//! The reduced extension equation for fields depending only on (s, t, λ) is
//!
//! ```text
//!   -(v_ss + v_tt + v_λλ) - (m-1) (v_s/s + v_t/t) = 0,
//! ```
//!
//! the Euler–Lagrange equation of the weighted Dirichlet energy with density
//! s^{m-1} t^{m-1} |∇v|²/2. Everything here is discretized variationally: the
//! trapezoid-in-nodes, midpoint-on-edges quadrature of that energy defines a
//! symmetric positive system whose stencil is the divergence-form seven-point
//! operator. The variational closures are then automatic:
//!
//! - at s = 0 and t = 0 the weight degenerates and the closure is the
//!   symmetry condition ∂_s v = 0, ∂_t v = 0 (for m ≥ 2 the axis node is
//!   slaved to its neighbor exactly);
//! - Robin bottom rows realize −∂_λ v + a v = rhs with second-order accuracy
//!   (the λλ Taylor defect cancels against interior harmonicity);
//! - a Neumann top is the plain half-weight trapezoid row.
//!
//! The assembled matrix is an M-matrix (positive diagonal, nonpositive
//! off-diagonal, weakly diagonally dominant), which yields the discrete
//! maximum and comparison principles verified in the tests. Linear systems
//! are solved by geometric multigrid V-cycles with red-black Gauss–Seidel
//! smoothing, deterministic for fixed inputs.

use crate::error::{Error, Result};
use crate::model::{GridSpec3, Nonlinearity, ScalarField3};
use std::sync::Arc;

/// Hard cap on V-cycles per linear solve.
const MAX_CYCLES: usize = 200;

/// Hard cap on outer Picard iterations for a nonlinear bottom condition.
const MAX_PICARD: usize = 400;

/// Red-black smoothing sweeps on the coarsest level per visit.
const COARSE_SWEEPS: usize = 400;

/// Pre- and post-smoothing sweeps per V-cycle level.
const SMOOTH_SWEEPS: usize = 2;

/// Which part of the (s, t) quadrant the problem lives on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Region {
    /// The whole box [0, s_max] × [0, t_max].
    FullBox,
    /// The wedge T_R = {0 ≤ t ≤ s ≤ s_max}; nodes with t > s are inert.
    WedgeTR,
}

/// Bottom (λ = 0) boundary condition.
#[derive(Clone)]
pub enum BottomCondition {
    /// Linear Robin condition −∂_λ v + a·v = rhs, with `rhs` given per bottom
    /// node in row-major (i, j) order (length ns·nt).
    Robin { a: f64, rhs: Vec<f64> },
    /// Nonlinear Neumann condition −∂_λ v = f(v).
    Nonlinear(Nonlinearity),
}

/// Top (λ = λ_max) boundary condition.
#[derive(Clone)]
pub enum TopCondition {
    /// Natural half-cell closure ∂_λ v = 0.
    NeumannZero,
    /// Pinned values per top node in row-major (i, j) order (length ns·nt).
    Dirichlet(Vec<f64>),
}

/// A truncated-cylinder problem: grid, region, lateral Dirichlet data,
/// bottom and top conditions.
#[derive(Clone)]
pub struct CylinderProblem {
    pub grid: GridSpec3,
    pub region: Region,
    lateral: Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>,
    pub bottom: BottomCondition,
    pub top: TopCondition,
}

impl CylinderProblem {
    /// Builds and validates a problem. `lateral` is evaluated on the
    /// Dirichlet faces: the outer faces s = s_max / t = t_max for the full
    /// box, or the cone face s = t and the outer face s = s_max for the
    /// wedge.
    pub fn new(
        grid: GridSpec3,
        region: Region,
        lateral: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
        bottom: BottomCondition,
        top: TopCondition,
    ) -> Result<Self> {
        match &bottom {
            BottomCondition::Robin { a, rhs } => {
                if !(*a >= 0.0) {
                    return Err(Error::Precondition(format!(
                        "Robin coefficient must be nonnegative, got {a}"
                    )));
                }
                if rhs.len() != grid.ns() * grid.nt() {
                    return Err(Error::Dimension(format!(
                        "Robin rhs has {} entries, bottom plane has {}",
                        rhs.len(),
                        grid.ns() * grid.nt()
                    )));
                }
            }
            BottomCondition::Nonlinear(_) => {}
        }
        if let TopCondition::Dirichlet(top_vals) = &top {
            if top_vals.len() != grid.ns() * grid.nt() {
                return Err(Error::Dimension(format!(
                    "top data has {} entries, top plane has {}",
                    top_vals.len(),
                    grid.ns() * grid.nt()
                )));
            }
        }
        let problem = CylinderProblem { grid, region, lateral: Arc::new(lateral), bottom, top };
        // Lateral data must be finite wherever it will be sampled.
        for (i, j) in problem.dirichlet_columns() {
            for k in 0..grid.nl() {
                let value = (problem.lateral)(grid.s(i), grid.t(j), grid.lambda(k));
                if !value.is_finite() {
                    return Err(Error::Validation(format!(
                        "lateral data not finite at (s, t, lambda) = ({}, {}, {})",
                        grid.s(i),
                        grid.t(j),
                        grid.lambda(k)
                    )));
                }
            }
        }
        Ok(problem)
    }

    /// Columns (i, j) whose whole λ-line carries Dirichlet lateral data.
    fn dirichlet_columns(&self) -> Vec<(usize, usize)> {
        let ns = self.grid.ns();
        let nt = self.grid.nt();
        let mut cols = Vec::new();
        match self.region {
            Region::FullBox => {
                for j in 0..nt {
                    cols.push((ns - 1, j));
                }
                for i in 0..ns - 1 {
                    cols.push((i, nt - 1));
                }
            }
            Region::WedgeTR => {
                // Cone face s = t, outer face s = s_max, and the inert
                // region t > s (pinned so it never feeds the stencil).
                for i in 0..ns {
                    for j in 0..nt {
                        if j >= i || i == ns - 1 {
                            cols.push((i, j));
                        }
                    }
                }
            }
        }
        cols
    }
}

/// Weight tables for the degenerate density s^{m-1} t^{m-1}: node powers and
/// edge-midpoint powers, shared by the solver, the energies, and the
/// quadratic forms so all quadratures agree exactly.
pub(crate) struct WeightTables {
    /// s_i^{m-1} per node (with 0^0 = 1 for m = 1).
    pub sm: Vec<f64>,
    /// (s_{i+1/2})^{m-1} per s-edge.
    pub smh: Vec<f64>,
    /// t_j^{m-1} per node.
    pub tm: Vec<f64>,
    /// (t_{j+1/2})^{m-1} per t-edge.
    pub tmh: Vec<f64>,
}

impl WeightTables {
    pub fn new(grid: &GridSpec3) -> Self {
        let p = (grid.m - 1) as i32;
        let pow = |x: f64| if p == 0 { 1.0 } else { x.powi(p) };
        WeightTables {
            sm: (0..grid.ns()).map(|i| pow(grid.s(i))).collect(),
            smh: (0..grid.ns() - 1).map(|i| pow((i as f64 + 0.5) * grid.h_s)).collect(),
            tm: (0..grid.nt()).map(|j| pow(grid.t(j))).collect(),
            tmh: (0..grid.nt() - 1).map(|j| pow((j as f64 + 0.5) * grid.h_t)).collect(),
        }
    }
}

/// Trapezoid factor: 1/2 at the first and last node of a direction.
#[inline]
pub(crate) fn tau(idx: usize, count: usize) -> f64 {
    if idx == 0 || idx + 1 == count {
        0.5
    } else {
        1.0
    }
}

/// One multigrid level: geometry, weights, masks, and boundary data.
struct Level {
    ns: usize,
    nt: usize,
    nl: usize,
    h_s: f64,
    h_lambda: f64,
    weights: WeightTables,
    /// True where the value is pinned (Dirichlet or inert).
    fixed: Vec<bool>,
    /// Robin coefficient on the bottom row (0 for pure Neumann data).
    robin_a: f64,
    /// True when the top row is a natural Neumann closure; false = pinned.
    top_neumann: bool,
}

impl Level {
    #[inline]
    fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.nt + j) * self.nl + k
    }

    fn from_grid(grid: &GridSpec3, region: Region, robin_a: f64, top_neumann: bool) -> Self {
        let weights = WeightTables::new(grid);
        let (ns, nt, nl) = (grid.ns(), grid.nt(), grid.nl());
        let mut fixed = vec![false; ns * nt * nl];
        for i in 0..ns {
            for j in 0..nt {
                let lateral_fixed = match region {
                    Region::FullBox => i == ns - 1 || j == nt - 1,
                    Region::WedgeTR => j >= i || i == ns - 1,
                };
                for k in 0..nl {
                    let top_fixed = !top_neumann && k == nl - 1;
                    if lateral_fixed || top_fixed {
                        fixed[(i * nt + j) * nl + k] = true;
                    }
                }
            }
        }
        Level { ns, nt, nl, h_s: grid.h_s, h_lambda: grid.h_lambda, weights, fixed, robin_a, top_neumann }
    }

    /// Coarsens by doubling spacings; requires even cell counts everywhere.
    fn coarsen(&self, m: usize, region: Region) -> Option<Level> {
        let cells = (self.ns - 1, self.nt - 1, self.nl - 1);
        if cells.0 % 2 != 0 || cells.1 % 2 != 0 || cells.2 % 2 != 0 {
            return None;
        }
        if cells.0 < 4 || cells.1 < 4 || cells.2 < 4 {
            return None;
        }
        let grid = GridSpec3::new(
            m,
            cells.0 as f64 / 2.0 * (2.0 * self.h_s),
            cells.1 as f64 / 2.0 * (2.0 * self.h_s),
            cells.2 as f64 / 2.0 * (2.0 * self.h_lambda),
            2.0 * self.h_s,
            2.0 * self.h_s,
            2.0 * self.h_lambda,
        )
        .ok()?;
        Some(Level::from_grid(&grid, region, self.robin_a, self.top_neumann))
    }

    /// One red-black Gauss–Seidel sweep (both colors), in place.
    fn smooth(&self, v: &mut [f64], rhs: &[f64]) -> f64 {
        let mut max_update = 0.0f64;
        for color in 0..2usize {
            let update = self.sweep_color(v, rhs, color);
            max_update = max_update.max(update);
        }
        max_update
    }

    /// Applies one Gauss–Seidel color; returns the largest update.
    fn sweep_color(&self, v: &mut [f64], rhs: &[f64], color: usize) -> f64 {
        let (ns, nt, nl) = (self.ns, self.nt, self.nl);
        let (hs2, hl2) = (self.h_s * self.h_s, self.h_lambda * self.h_lambda);
        let w = &self.weights;
        let mut max_update = 0.0f64;
        for i in 0..ns {
            for j in 0..nt {
                let base = (i * nt + j) * nl;
                let tau_t = tau(j, nt);
                let tau_s = tau(i, ns);
                let k0 = (i + j + color) % 2;
                let mut k = k0;
                while k < nl {
                    let p = base + k;
                    if self.fixed[p] {
                        k += 2;
                        continue;
                    }
                    let tau_l = tau(k, nl);
                    let mut diag = 0.0;
                    let mut nb = 0.0;
                    // s-direction edges.
                    if i > 0 {
                        let we = w.smh[i - 1] * w.tm[j] * tau_t * tau_l / hs2;
                        diag += we;
                        nb += we * v[p - nt * nl];
                    }
                    if i + 1 < ns {
                        let we = w.smh[i] * w.tm[j] * tau_t * tau_l / hs2;
                        diag += we;
                        nb += we * v[p + nt * nl];
                    }
                    // t-direction edges.
                    if j > 0 {
                        let we = w.sm[i] * tau_s * w.tmh[j - 1] * tau_l / hs2;
                        diag += we;
                        nb += we * v[p - nl];
                    }
                    if j + 1 < nt {
                        let we = w.sm[i] * tau_s * w.tmh[j] * tau_l / hs2;
                        diag += we;
                        nb += we * v[p + nl];
                    }
                    // λ-direction edges and the Robin bottom term.
                    let wb = w.sm[i] * tau_s * w.tm[j] * tau_t;
                    if k > 0 {
                        let we = wb / hl2;
                        diag += we;
                        nb += we * v[p - 1];
                    }
                    if k + 1 < nl {
                        let we = wb / hl2;
                        diag += we;
                        nb += we * v[p + 1];
                    }
                    if k == 0 {
                        diag += wb * self.robin_a / self.h_lambda;
                    }
                    if diag == 0.0 {
                        k += 2;
                        continue;
                    }
                    let new = (rhs[p] + nb) / diag;
                    let delta = new - v[p];
                    if delta.abs() > max_update {
                        max_update = delta.abs();
                    }
                    v[p] = new;
                    k += 2;
                }
            }
        }
        max_update
    }

    /// Residual r = rhs − A·v at free nodes (zero at pinned nodes), where A
    /// is the volume-scaled Euler–Lagrange operator of the weighted energy.
    fn residual(&self, v: &[f64], rhs: &[f64], out: &mut [f64]) {
        let (ns, nt, nl) = (self.ns, self.nt, self.nl);
        let (hs2, hl2) = (self.h_s * self.h_s, self.h_lambda * self.h_lambda);
        let w = &self.weights;
        for i in 0..ns {
            for j in 0..nt {
                let base = (i * nt + j) * nl;
                let tau_t = tau(j, nt);
                let tau_s = tau(i, ns);
                for k in 0..nl {
                    let p = base + k;
                    if self.fixed[p] {
                        out[p] = 0.0;
                        continue;
                    }
                    let tau_l = tau(k, nl);
                    let mut av = 0.0;
                    if i > 0 {
                        let we = w.smh[i - 1] * w.tm[j] * tau_t * tau_l / hs2;
                        av += we * (v[p] - v[p - nt * nl]);
                    }
                    if i + 1 < ns {
                        let we = w.smh[i] * w.tm[j] * tau_t * tau_l / hs2;
                        av += we * (v[p] - v[p + nt * nl]);
                    }
                    if j > 0 {
                        let we = w.sm[i] * tau_s * w.tmh[j - 1] * tau_l / hs2;
                        av += we * (v[p] - v[p - nl]);
                    }
                    if j + 1 < nt {
                        let we = w.sm[i] * tau_s * w.tmh[j] * tau_l / hs2;
                        av += we * (v[p] - v[p + nl]);
                    }
                    let wb = w.sm[i] * tau_s * w.tm[j] * tau_t;
                    if k > 0 {
                        av += wb / hl2 * (v[p] - v[p - 1]);
                    }
                    if k + 1 < nl {
                        av += wb / hl2 * (v[p] - v[p + 1]);
                    }
                    if k == 0 {
                        av += wb * self.robin_a / self.h_lambda * v[p];
                    }
                    out[p] = rhs[p] - av;
                }
            }
        }
    }
}

/// Full-weighting restriction with index clamping at boundaries.
fn restrict(fine: &Level, coarse: &Level, r: &[f64], out: &mut [f64]) {
    let weights_1d = [0.25f64, 0.5, 0.25];
    for ci in 0..coarse.ns {
        for cj in 0..coarse.nt {
            for ck in 0..coarse.nl {
                let cp = coarse.idx(ci, cj, ck);
                if coarse.fixed[cp] {
                    out[cp] = 0.0;
                    continue;
                }
                let (fi, fj, fk) = (2 * ci, 2 * cj, 2 * ck);
                let mut acc = 0.0;
                for (di, wi) in weights_1d.iter().enumerate() {
                    let ii = (fi + di).saturating_sub(1).min(fine.ns - 1);
                    for (dj, wj) in weights_1d.iter().enumerate() {
                        let jj = (fj + dj).saturating_sub(1).min(fine.nt - 1);
                        for (dk, wk) in weights_1d.iter().enumerate() {
                            let kk = (fk + dk).saturating_sub(1).min(fine.nl - 1);
                            acc += wi * wj * wk * r[fine.idx(ii, jj, kk)];
                        }
                    }
                }
                out[cp] = acc;
            }
        }
    }
}

/// Trilinear prolongation of a coarse correction, added into the fine field
/// at free nodes only.
fn prolong_add(fine: &Level, coarse: &Level, e: &[f64], v: &mut [f64]) {
    for i in 0..fine.ns {
        for j in 0..fine.nt {
            for k in 0..fine.nl {
                let p = fine.idx(i, j, k);
                if fine.fixed[p] {
                    continue;
                }
                let (ci, ri) = (i / 2, i % 2);
                let (cj, rj) = (j / 2, j % 2);
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
                                * e[coarse.idx(
                                    (ci + di).min(coarse.ns - 1),
                                    (cj + dj).min(coarse.nt - 1),
                                    (ck + dk).min(coarse.nl - 1),
                                )];
                        }
                    }
                }
                v[p] += acc;
            }
        }
    }
}

/// Multigrid hierarchy for one linear problem.
struct Hierarchy {
    levels: Vec<Level>,
    /// Scratch: rhs, solution, residual per level (level 0 = finest).
    rhs: Vec<Vec<f64>>,
    sol: Vec<Vec<f64>>,
    res: Vec<Vec<f64>>,
}

impl Hierarchy {
    fn build(grid: &GridSpec3, region: Region, robin_a: f64, top_neumann: bool) -> Self {
        let mut levels = vec![Level::from_grid(grid, region, robin_a, top_neumann)];
        while let Some(coarse) = levels.last().unwrap().coarsen(grid.m, region) {
            levels.push(coarse);
        }
        let rhs = levels.iter().map(|l| vec![0.0; l.ns * l.nt * l.nl]).collect();
        let sol = levels.iter().map(|l| vec![0.0; l.ns * l.nt * l.nl]).collect();
        let res = levels.iter().map(|l| vec![0.0; l.ns * l.nt * l.nl]).collect();
        Hierarchy { levels, rhs, sol, res }
    }

    /// One V-cycle on level `lvl` with the stored rhs; returns sup update on
    /// the finest level only.
    fn v_cycle(&mut self, lvl: usize, v: &mut [f64]) -> f64 {
        let last = self.levels.len() - 1;
        if lvl == last {
            let level = &self.levels[lvl];
            let rhs = &self.rhs[lvl];
            let mut update = 0.0f64;
            for _ in 0..COARSE_SWEEPS {
                let sweep = level.smooth(v, rhs);
                update = update.max(sweep);
                if sweep < 1e-15 {
                    break;
                }
            }
            return update;
        }
        let mut max_update = 0.0f64;
        for _ in 0..SMOOTH_SWEEPS {
            max_update = max_update.max(self.levels[lvl].smooth(v, &self.rhs[lvl]));
        }
        // Residual and restriction to the next level.
        let mut res = std::mem::take(&mut self.res[lvl]);
        self.levels[lvl].residual(v, &self.rhs[lvl], &mut res);
        {
            let mut coarse_rhs = std::mem::take(&mut self.rhs[lvl + 1]);
            restrict(&self.levels[lvl], &self.levels[lvl + 1], &res, &mut coarse_rhs);
            self.rhs[lvl + 1] = coarse_rhs;
        }
        self.res[lvl] = res;
        self.sol[lvl + 1].iter_mut().for_each(|x| *x = 0.0);
        let mut coarse_sol = std::mem::take(&mut self.sol[lvl + 1]);
        self.v_cycle(lvl + 1, &mut coarse_sol);
        prolong_add(&self.levels[lvl], &self.levels[lvl + 1], &coarse_sol, v);
        self.sol[lvl + 1] = coarse_sol;
        for _ in 0..SMOOTH_SWEEPS {
            max_update = max_update.max(self.levels[lvl].smooth(v, &self.rhs[lvl]));
        }
        max_update
    }
}

/// Solves the linear Robin problem defined by `level`-0 data. `v` carries the
/// initial guess with Dirichlet values already imprinted; `rhs` is the
/// volume-scaled right-hand side at free nodes.
fn solve_linear(
    hierarchy: &mut Hierarchy,
    v: &mut [f64],
    rhs: &[f64],
    tol: f64,
    context: &str,
) -> Result<()> {
    hierarchy.rhs[0].copy_from_slice(rhs);
    let mut history = Vec::new();
    for _cycle in 0..MAX_CYCLES {
        let update = hierarchy.v_cycle(0, v);
        history.push(update);
        if update < tol {
            return Ok(());
        }
    }
    Err(Error::convergence(
        format!("{context}: linear solve above tol {tol} after {MAX_CYCLES} V-cycles"),
        &history,
    ))
}

/// Assembles the volume-scaled right-hand side for a Robin bottom.
fn robin_rhs(level: &Level, bottom_rhs: &[f64]) -> Vec<f64> {
    let mut rhs = vec![0.0; level.ns * level.nt * level.nl];
    for i in 0..level.ns {
        for j in 0..level.nt {
            let p = level.idx(i, j, 0);
            if level.fixed[p] {
                continue;
            }
            let wb = level.weights.sm[i]
                * tau(i, level.ns)
                * level.weights.tm[j]
                * tau(j, level.nt);
            rhs[p] = wb / level.h_lambda * bottom_rhs[i * level.nt + j];
        }
    }
    rhs
}

/// For m ≥ 2 the corner line s = t = 0 carries zero weight in every edge and
/// decouples from the system. Fill it with the average of its two face
/// neighbors: second-order accurate (the field is even in s and t across the
/// axes), monotone in the data, and inside the discrete maximum principle.
fn fill_decoupled_corner(problem: &CylinderProblem, v: &mut ScalarField3) {
    if problem.grid.m < 2 || problem.region != Region::FullBox {
        return;
    }
    for k in 0..problem.grid.nl() {
        *v.at_mut(0, 0, k) = 0.5 * (v.at(1, 0, k) + v.at(0, 1, k));
    }
}

/// Imprints lateral and top Dirichlet data onto a field.
fn imprint_boundary(problem: &CylinderProblem, v: &mut ScalarField3) {
    let grid = problem.grid;
    for (i, j) in problem.dirichlet_columns() {
        for k in 0..grid.nl() {
            *v.at_mut(i, j, k) = (problem.lateral)(grid.s(i), grid.t(j), grid.lambda(k));
        }
    }
    if let TopCondition::Dirichlet(top_vals) = &problem.top {
        for i in 0..grid.ns() {
            for j in 0..grid.nt() {
                *v.at_mut(i, j, grid.nl() - 1) = top_vals[i * grid.nt() + j];
            }
        }
    }
}

/// Solves the cylinder problem to sup-norm update below `tol`.
///
/// Linear Robin bottoms are solved directly by multigrid; a nonlinear bottom
/// −∂_λ v = f(v) is handled by shifted Picard iterations
/// −∂_λ v + a v = f(w) + a w with a = sup|f′| + 1/2, each step a linear
/// solve, until the bottom trace stops moving.
pub fn harmonic_fill(problem: &CylinderProblem, tol: f64) -> Result<ScalarField3> {
    harmonic_fill_from(problem, tol, None)
}

/// Same as [`harmonic_fill`] but warm-started from `initial` when given.
pub fn harmonic_fill_from(
    problem: &CylinderProblem,
    tol: f64,
    initial: Option<&ScalarField3>,
) -> Result<ScalarField3> {
    if !(tol > 0.0) {
        return Err(Error::Precondition(format!("tolerance must be positive, got {tol}")));
    }
    let grid = problem.grid;
    if grid.ns() < 3 || grid.nt() < 3 || grid.nl() < 3 {
        return Err(Error::Precondition(
            "cylinder solves need at least three nodes per direction".into(),
        ));
    }
    if let Some(init) = initial {
        if !init.grid.same_as(&grid) {
            return Err(Error::Dimension("warm-start field lives on a different grid".into()));
        }
    }
    let top_neumann = matches!(problem.top, TopCondition::NeumannZero);

    match &problem.bottom {
        BottomCondition::Robin { a, rhs } => {
            let mut v = match initial {
                Some(init) => init.clone(),
                None => ScalarField3::zeros(grid),
            };
            imprint_boundary(problem, &mut v);
            let mut hierarchy = Hierarchy::build(&grid, problem.region, *a, top_neumann);
            // Move the Dirichlet data into the rhs by evaluating the residual
            // of the imprinted field against the bare bottom rhs.
            let rhs_vec = robin_rhs(&hierarchy.levels[0], rhs);
            solve_linear(&mut hierarchy, v.values_mut(), &rhs_vec, tol, "harmonic_fill")?;
            fill_decoupled_corner(problem, &mut v);
            Ok(v)
        }
        BottomCondition::Nonlinear(nl) => {
            let a = nl.sup_f_prime() + 0.5;
            let mut v = match initial {
                Some(init) => init.clone(),
                None => ScalarField3::zeros(grid),
            };
            imprint_boundary(problem, &mut v);
            let mut hierarchy = Hierarchy::build(&grid, problem.region, a, top_neumann);
            let inner_tol = (tol * 0.1).max(1e-14);
            let mut history = Vec::new();
            for _outer in 0..MAX_PICARD {
                let bottom_rhs: Vec<f64> = (0..grid.ns() * grid.nt())
                    .map(|col| {
                        let (i, j) = (col / grid.nt(), col % grid.nt());
                        let w = v.at(i, j, 0);
                        nl.f(w) + a * w
                    })
                    .collect();
                let rhs_vec = robin_rhs(&hierarchy.levels[0], &bottom_rhs);
                let before = v.clone();
                solve_linear(&mut hierarchy, v.values_mut(), &rhs_vec, inner_tol, "harmonic_fill")?;
                let mut update = 0.0f64;
                for (new, old) in v.values().iter().zip(before.values()) {
                    update = update.max((new - old).abs());
                }
                history.push(update);
                if update < tol {
                    fill_decoupled_corner(problem, &mut v);
                    return Ok(v);
                }
            }
            Err(Error::convergence(
                format!("nonlinear bottom stalled above tol {tol} after {MAX_PICARD} iterations"),
                &history,
            ))
        }
    }
}

/// Second-order one-sided trace of −∂_λ v at λ = 0 on a 3-D grid, returned
/// per bottom node in row-major (i, j) order.
pub fn dirichlet_to_neumann(v: &ScalarField3) -> Result<Vec<f64>> {
    let grid = v.grid;
    if grid.nl() < 3 {
        return Err(Error::Precondition(
            "one-sided second-order trace needs at least three lambda levels".into(),
        ));
    }
    let mut out = vec![0.0; grid.ns() * grid.nt()];
    for i in 0..grid.ns() {
        for j in 0..grid.nt() {
            out[i * grid.nt() + j] = (3.0 * v.at(i, j, 0) - 4.0 * v.at(i, j, 1)
                + v.at(i, j, 2))
                / (2.0 * grid.h_lambda);
        }
    }
    Ok(out)
}

/// Second-order one-sided trace of −∂_λ v at λ = 0 on a 2-D half-plane grid,
/// returned per x node.
pub fn dirichlet_to_neumann_2d(v: &crate::model::ScalarField2) -> Result<Vec<f64>> {
    let grid = v.grid;
    if grid.nl() < 3 {
        return Err(Error::Precondition(
            "one-sided second-order trace needs at least three lambda levels".into(),
        ));
    }
    let mut out = vec![0.0; grid.nx()];
    for i in 0..grid.nx() {
        out[i] = (3.0 * v.at(i, 0) - 4.0 * v.at(i, 1) + v.at(i, 2)) / (2.0 * grid.h_lambda);
    }
    Ok(out)
}

/// Node-wise residual of the weighted interior equation, normalized to PDE
/// units: positive values mean the field is discretely superharmonic there.
///
/// Defined at interior nodes (0 < i, j, k < end); boundary nodes report 0.
pub fn pde_residual(v: &ScalarField3, m: usize) -> Result<ScalarField3> {
    let grid = v.grid;
    if grid.m != m {
        return Err(Error::Precondition(format!(
            "field grid carries m = {}, residual requested for m = {m}",
            grid.m
        )));
    }
    if grid.ns() < 3 || grid.nt() < 3 || grid.nl() < 3 {
        return Err(Error::Precondition("residual needs interior nodes".into()));
    }
    let w = WeightTables::new(&grid);
    let (hs2, hl2) = (grid.h_s * grid.h_s, grid.h_lambda * grid.h_lambda);
    let mut out = ScalarField3::zeros(grid);
    for i in 1..grid.ns() - 1 {
        for j in 1..grid.nt() - 1 {
            for k in 1..grid.nl() - 1 {
                let wp = w.sm[i] * w.tm[j];
                if wp == 0.0 {
                    continue;
                }
                let mut av = 0.0;
                av += w.smh[i - 1] * w.tm[j] / hs2 * (v.at(i, j, k) - v.at(i - 1, j, k));
                av += w.smh[i] * w.tm[j] / hs2 * (v.at(i, j, k) - v.at(i + 1, j, k));
                av += w.sm[i] * w.tmh[j - 1] / hs2 * (v.at(i, j, k) - v.at(i, j - 1, k));
                av += w.sm[i] * w.tmh[j] / hs2 * (v.at(i, j, k) - v.at(i, j + 1, k));
                av += w.sm[i] * w.tm[j] / hl2
                    * (2.0 * v.at(i, j, k) - v.at(i, j, k - 1) - v.at(i, j, k + 1));
                *out.at_mut(i, j, k) = av / wp;
            }
        }
    }
    Ok(out)
}

/// Residual of the variational bottom closure of −∂_λ v = f(v), normalized
/// to flux units, per bottom node in row-major (i, j) order. Nodes on the
/// lateral grid boundary report 0 (their value is boundary data, not an
/// unknown).
pub fn bottom_flux_residual(v: &ScalarField3, f: impl Fn(f64) -> f64) -> Result<Vec<f64>> {
    let grid = v.grid;
    if grid.nl() < 2 {
        return Err(Error::Precondition("bottom residual needs a second lambda level".into()));
    }
    let w = WeightTables::new(&grid);
    let hs2 = grid.h_s * grid.h_s;
    let mut out = vec![0.0; grid.ns() * grid.nt()];
    for i in 0..grid.ns() - 1 {
        for j in 0..grid.nt() - 1 {
            let wp = w.sm[i] * tau(i, grid.ns()) * w.tm[j] * tau(j, grid.nt());
            if wp == 0.0 {
                continue;
            }
            // Tangential part: the bottom-plane edge weights carry the
            // half-cell factor tau_lambda = 1/2 relative to the node weight.
            let mut tang = 0.0;
            if i > 0 {
                tang += w.smh[i - 1] * w.tm[j] * tau(j, grid.nt()) / hs2
                    * (v.at(i, j, 0) - v.at(i - 1, j, 0));
            }
            tang += w.smh[i] * w.tm[j] * tau(j, grid.nt()) / hs2
                * (v.at(i, j, 0) - v.at(i + 1, j, 0));
            if j > 0 {
                tang += w.sm[i] * tau(i, grid.ns()) * w.tmh[j - 1] / hs2
                    * (v.at(i, j, 0) - v.at(i, j - 1, 0));
            }
            tang += w.sm[i] * tau(i, grid.ns()) * w.tmh[j] / hs2
                * (v.at(i, j, 0) - v.at(i, j + 1, 0));
            let flux = (v.at(i, j, 0) - v.at(i, j, 1)) / grid.h_lambda;
            out[i * grid.nt() + j] = flux + 0.5 * grid.h_lambda * tang / wp - f(v.at(i, j, 0));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::GridSpec3;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small_grid(m: usize) -> GridSpec3 {
        GridSpec3::new(m, 2.0, 2.0, 1.0, 0.25, 0.25, 0.125).unwrap()
    }

    #[test]
    fn constants_solve_constant_robin_problems() {
        for m in [1, 2, 3] {
            let grid = small_grid(m);
            let c = 0.7;
            let nb = grid.ns() * grid.nt();
            let problem = CylinderProblem::new(
                grid,
                Region::FullBox,
                move |_, _, _| c,
                BottomCondition::Robin { a: 1.5, rhs: vec![1.5 * c; nb] },
                TopCondition::NeumannZero,
            )
            .unwrap();
            let v = harmonic_fill(&problem, 1e-12).unwrap();
            for value in v.values() {
                assert_abs_diff_eq!(*value, c, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn zero_data_yields_zero() {
        let grid = small_grid(2);
        let nb = grid.ns() * grid.nt();
        let problem = CylinderProblem::new(
            grid,
            Region::FullBox,
            |_, _, _| 0.0,
            BottomCondition::Robin { a: 2.0, rhs: vec![0.0; nb] },
            TopCondition::NeumannZero,
        )
        .unwrap();
        let v = harmonic_fill(&problem, 1e-12).unwrap();
        assert!(v.sup_norm() <= 1e-12);
    }

    #[test]
    fn rejects_negative_robin_coefficient() {
        let grid = small_grid(1);
        let nb = grid.ns() * grid.nt();
        assert!(matches!(
            CylinderProblem::new(
                grid,
                Region::FullBox,
                |_, _, _| 0.0,
                BottomCondition::Robin { a: -1.0, rhs: vec![0.0; nb] },
                TopCondition::NeumannZero,
            ),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn maximum_principle_on_random_data() {
        // Nonnegative lateral data and rhs with a >= 0 must produce a
        // nonnegative solution; the solution may not exceed the largest of
        // max(boundary data) and max(rhs)/a.
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for m in [1usize, 2, 3] {
            let grid = small_grid(m);
            let nb = grid.ns() * grid.nt();
            let a = 1.0 + rng.gen::<f64>();
            let rhs: Vec<f64> = (0..nb).map(|_| rng.gen::<f64>()).collect();
            let boundary_const = rng.gen::<f64>();
            let rhs_for_problem = rhs.clone();
            let problem = CylinderProblem::new(
                grid,
                Region::FullBox,
                move |_, _, lambda| boundary_const * (1.0 + 0.3 * (lambda).sin()),
                BottomCondition::Robin { a, rhs: rhs_for_problem },
                TopCondition::NeumannZero,
            )
            .unwrap();
            let v = harmonic_fill(&problem, 1e-12).unwrap();
            let rhs_max = rhs.iter().cloned().fold(0.0f64, f64::max);
            let boundary_max = boundary_const * 1.3;
            let cap = (rhs_max / a).max(boundary_max);
            for value in v.values() {
                assert!(*value >= -1e-10, "maximum principle violated below: {value}");
                assert!(*value <= cap + 1e-10, "maximum principle violated above: {value}");
            }
        }
    }

    #[test]
    fn comparison_principle_for_ordered_rhs() {
        let grid = small_grid(2);
        let nb = grid.ns() * grid.nt();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let rhs1: Vec<f64> = (0..nb).map(|_| rng.gen::<f64>() - 0.5).collect();
        let rhs2: Vec<f64> = rhs1.iter().map(|r| r + 0.25 * rng.gen::<f64>()).collect();
        let solve = |rhs: Vec<f64>| {
            let problem = CylinderProblem::new(
                grid,
                Region::FullBox,
                |s, t, _| 0.1 * (s - t),
                BottomCondition::Robin { a: 1.0, rhs },
                TopCondition::NeumannZero,
            )
            .unwrap();
            harmonic_fill(&problem, 1e-12).unwrap()
        };
        let v1 = solve(rhs1);
        let v2 = solve(rhs2);
        for (a, b) in v1.values().iter().zip(v2.values()) {
            assert!(a <= &(b + 1e-10), "comparison principle violated: {a} > {b}");
        }
    }

    #[test]
    fn robin_solve_is_linear_in_data() {
        let grid = small_grid(2);
        let nb = grid.ns() * grid.nt();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rhs1: Vec<f64> = (0..nb).map(|_| rng.gen::<f64>() - 0.5).collect();
        let rhs2: Vec<f64> = (0..nb).map(|_| rng.gen::<f64>() - 0.5).collect();
        let combined: Vec<f64> =
            rhs1.iter().zip(&rhs2).map(|(x, y)| 2.0 * x - 3.0 * y).collect();
        let solve = |rhs: Vec<f64>, phi_scale: f64| {
            let problem = CylinderProblem::new(
                grid,
                Region::FullBox,
                move |s, _, lambda| phi_scale * (0.2 * s + 0.1 * lambda),
                BottomCondition::Robin { a: 0.8, rhs },
                TopCondition::NeumannZero,
            )
            .unwrap();
            harmonic_fill(&problem, 1e-13).unwrap()
        };
        let v1 = solve(rhs1.clone(), 1.0);
        let v2 = solve(rhs2.clone(), 0.0);
        let v12 = solve(combined, 2.0);
        for ((a, b), c) in v1.values().iter().zip(v2.values()).zip(v12.values()) {
            assert_abs_diff_eq!(2.0 * a - 3.0 * b, *c, epsilon = 1e-9);
        }
    }

    #[test]
    fn dirichlet_to_neumann_is_exact_on_linear_fields() {
        let grid = small_grid(1);
        let v = ScalarField3::from_fn(grid, |_, _, lambda| lambda);
        let trace = dirichlet_to_neumann(&v).unwrap();
        for value in trace {
            assert_abs_diff_eq!(value, -1.0, epsilon = 1e-13);
        }
        let c = ScalarField3::from_fn(grid, |_, _, _| 0.37);
        for value in dirichlet_to_neumann(&c).unwrap() {
            assert_abs_diff_eq!(value, 0.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn pde_residual_vanishes_on_affine_fields_for_m1() {
        let grid = small_grid(1);
        let v = ScalarField3::from_fn(grid, |s, t, lambda| 1.0 + 2.0 * s - 0.5 * t + 0.25 * lambda);
        let r = pde_residual(&v, 1).unwrap();
        assert!(r.sup_norm() <= 1e-12);
    }

    #[test]
    fn pde_residual_sign_matches_superharmonicity() {
        // v = -(s^2 + t^2 + lambda^2) has -Delta v = 6 > 0 for m = 1.
        let grid = small_grid(1);
        let v = ScalarField3::from_fn(grid, |s, t, lambda| -(s * s + t * t + lambda * lambda));
        let r = pde_residual(&v, 1).unwrap();
        for i in 1..grid.ns() - 1 {
            for j in 1..grid.nt() - 1 {
                for k in 1..grid.nl() - 1 {
                    assert_abs_diff_eq!(r.at(i, j, k), 6.0, epsilon = 1e-9);
                }
            }
        }
    }

    #[test]
    fn bottom_flux_residual_vanishes_for_matching_linear_field() {
        // v = c - lambda has -d/dlambda v = 1; take f ≡ 1.
        let grid = small_grid(1);
        let v = ScalarField3::from_fn(grid, |_, _, lambda| 2.0 - lambda);
        let r = bottom_flux_residual(&v, |_| 1.0).unwrap();
        for (col, value) in r.iter().enumerate() {
            let (i, j) = (col / grid.nt(), col % grid.nt());
            if i + 1 == grid.ns() || j + 1 == grid.nt() {
                continue;
            }
            assert_abs_diff_eq!(*value, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn wedge_solve_respects_cone_and_outer_data() {
        let grid = GridSpec3::new(2, 2.0, 2.0, 1.0, 0.25, 0.25, 0.25).unwrap();
        let nb = grid.ns() * grid.nt();
        let problem = CylinderProblem::new(
            grid,
            Region::WedgeTR,
            |s, t, _| ((s - t) / std::f64::consts::SQRT_2).min(1.0),
            BottomCondition::Robin { a: 1.0, rhs: vec![0.3; nb] },
            TopCondition::NeumannZero,
        )
        .unwrap();
        let v = harmonic_fill(&problem, 1e-12).unwrap();
        // Cone face pinned at 0, outer face at the lateral data.
        for d in 0..grid.ns() {
            for k in 0..grid.nl() {
                assert_abs_diff_eq!(v.at(d, d, k), 0.0, epsilon = 1e-14);
            }
        }
        let i = grid.ns() - 1;
        for j in 0..grid.nt() {
            let expected = ((grid.s(i) - grid.t(j)) / std::f64::consts::SQRT_2).min(1.0);
            for k in 0..grid.nl() {
                assert_abs_diff_eq!(v.at(i, j, k), expected, epsilon = 1e-14);
            }
        }
        // Interior wedge values stay within the data range (maximum principle).
        for i in 1..grid.ns() - 1 {
            for j in 0..i {
                for k in 0..grid.nl() {
                    assert!(v.at(i, j, k) >= -1e-10 && v.at(i, j, k) <= 1.0 + 1e-10);
                }
            }
        }
    }

    #[test]
    fn nonlinear_bottom_reaches_a_fixed_point() {
        // Pure layer-type problem on a full box with Allen-Cahn flux; the
        // fixed point must satisfy the variational bottom residual.
        let nl = Nonlinearity::allen_cahn();
        let grid = GridSpec3::new(1, 2.0, 2.0, 2.0, 0.25, 0.25, 0.25).unwrap();
        let problem = CylinderProblem::new(
            grid,
            Region::FullBox,
            |s, t, _| 0.5 * ((s - t) / 4.0 + 0.5),
            BottomCondition::Nonlinear(nl.clone()),
            TopCondition::NeumannZero,
        )
        .unwrap();
        let v = harmonic_fill(&problem, 1e-11).unwrap();
        let r = bottom_flux_residual(&v, |u| nl.f(u)).unwrap();
        let mut worst = 0.0f64;
        for (col, value) in r.iter().enumerate() {
            let (i, j) = (col / grid.nt(), col % grid.nt());
            if i + 1 == grid.ns() || j + 1 == grid.nt() {
                continue;
            }
            worst = worst.max(value.abs());
        }
        assert!(worst <= 1e-8, "fixed-point bottom residual {worst}");
    }
}
