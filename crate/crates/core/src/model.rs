//! Core domain types shared by every solver: uniform grids on the extension
//! half-space, scalar fields over those grids, bistable nonlinearities with
//! validated structural hypotheses, and the Simons-cone coordinate helpers.
//!
//! Geometry conventions. A point x ∈ ℝ^{2m} is reduced to the radial pair
//! s = |(x_1,…,x_m)|, t = |(x_{m+1},…,x_{2m})|, so the Simons cone is the
//! diagonal {s = t}. The rotated coordinates
//!
//! ```text
//!   y = (s + t)/√2,   z = (s − t)/√2
//! ```
//!
//! place the cone at {z = 0}, with |z| the distance to the cone. The harmonic
//! extension adds one more coordinate λ ≥ 0, making the computational domain
//! a box in (s, t, λ) with the physical trace at λ = 0.

use crate::error::{Error, Result};
use std::sync::Arc;

/// Number of evenly spaced sample points used to validate nonlinearity
/// hypotheses on (−1, 1).
pub const VALIDATION_SAMPLES: usize = 1000;

/// Tolerance for the sampled structural checks (oddness, double-well shape).
pub const VALIDATION_TOL: f64 = 1e-10;

/// Tolerance for the finite-difference consistency check G′ = −f. The check
/// uses a fourth-order central difference with step 10⁻³, whose truncation
/// and rounding errors are both far below this bound for smooth G.
pub const FD_CONSISTENCY_TOL: f64 = 1e-8;

/// Relative slack when testing that an extent is an integer multiple of a
/// spacing (guards against benign floating-point representation error).
const EXTENT_MULTIPLE_TOL: f64 = 1e-9;

fn checked_node_count(extent: f64, spacing: f64, name: &str) -> Result<usize> {
    if !(extent > 0.0) || !extent.is_finite() {
        return Err(Error::Domain(format!("{name} extent must be positive and finite")));
    }
    if !(spacing > 0.0) || !spacing.is_finite() {
        return Err(Error::Domain(format!("{name} spacing must be positive and finite")));
    }
    let ratio = extent / spacing;
    let cells = ratio.round();
    if cells < 1.0 || (ratio - cells).abs() > EXTENT_MULTIPLE_TOL * ratio.max(1.0) {
        return Err(Error::Domain(format!(
            "{name} extent {extent} is not an integer multiple of spacing {spacing}"
        )));
    }
    Ok(cells as usize + 1)
}

/// Uniform rectilinear grid on the (s, t, λ) box [0, s_max] × [0, t_max] × [0, lambda_max].
///
/// `m` is the half-dimension: the ambient equation lives in ℝ^{2m}. The s and
/// t spacings are required to be equal so the cone {s = t} passes exactly
/// through grid nodes and odd reflection across it is interpolation-free.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct GridSpec3 {
    pub m: usize,
    pub s_max: f64,
    pub t_max: f64,
    pub lambda_max: f64,
    pub h_s: f64,
    pub h_t: f64,
    pub h_lambda: f64,
    ns: usize,
    nt: usize,
    nl: usize,
}

impl GridSpec3 {
    /// Validates extents, spacings, and cone alignment, and derives node counts.
    pub fn new(
        m: usize,
        s_max: f64,
        t_max: f64,
        lambda_max: f64,
        h_s: f64,
        h_t: f64,
        h_lambda: f64,
    ) -> Result<Self> {
        if m == 0 {
            return Err(Error::Domain("half-dimension m must be at least 1".into()));
        }
        if h_s != h_t {
            return Err(Error::Domain(format!(
                "h_s = {h_s} and h_t = {h_t} must be equal so the cone {{s = t}} lies on grid nodes"
            )));
        }
        let ns = checked_node_count(s_max, h_s, "s")?;
        let nt = checked_node_count(t_max, h_t, "t")?;
        let nl = checked_node_count(lambda_max, h_lambda, "lambda")?;
        Ok(GridSpec3 { m, s_max, t_max, lambda_max, h_s, h_t, h_lambda, ns, nt, nl })
    }

    /// Convenience constructor for the common square-base grid with one
    /// spacing h in s and t: extents (R, R, L), spacings (h, h, h_lambda).
    pub fn square(m: usize, r: f64, lambda_max: f64, h: f64, h_lambda: f64) -> Result<Self> {
        GridSpec3::new(m, r, r, lambda_max, h, h, h_lambda)
    }

    /// Node count along s.
    pub fn ns(&self) -> usize {
        self.ns
    }

    /// Node count along t.
    pub fn nt(&self) -> usize {
        self.nt
    }

    /// Node count along λ.
    pub fn nl(&self) -> usize {
        self.nl
    }

    /// Total number of nodes.
    pub fn node_count(&self) -> usize {
        self.ns * self.nt * self.nl
    }

    /// s-coordinate of node index i.
    pub fn s(&self, i: usize) -> f64 {
        i as f64 * self.h_s
    }

    /// t-coordinate of node index j.
    pub fn t(&self, j: usize) -> f64 {
        j as f64 * self.h_t
    }

    /// λ-coordinate of node index k.
    pub fn lambda(&self, k: usize) -> f64 {
        k as f64 * self.h_lambda
    }

    /// Linear index of node (i, j, k); λ varies fastest.
    #[inline]
    pub fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.nt + j) * self.nl + k
    }

    /// True when the two grids describe the same discretization.
    pub fn same_as(&self, other: &GridSpec3) -> bool {
        self == other
    }
}

/// Uniform grid on the (x, λ) half-plane box [−x_max, x_max] × [0, lambda_max],
/// symmetric in x about 0, used by the one-dimensional layer problem.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct GridSpec2 {
    pub x_max: f64,
    pub lambda_max: f64,
    pub h_x: f64,
    pub h_lambda: f64,
    nx_half: usize,
    nl: usize,
}

impl GridSpec2 {
    /// Validates extents and spacings; x nodes run symmetrically from −x_max
    /// to x_max with x = 0 always a node.
    pub fn new(x_max: f64, lambda_max: f64, h_x: f64, h_lambda: f64) -> Result<Self> {
        let nx_half = checked_node_count(x_max, h_x, "x")?;
        let nl = checked_node_count(lambda_max, h_lambda, "lambda")?;
        Ok(GridSpec2 { x_max, lambda_max, h_x, h_lambda, nx_half, nl })
    }

    /// Node count along x over the full symmetric range [−x_max, x_max].
    pub fn nx(&self) -> usize {
        2 * self.nx_half - 1
    }

    /// Node count along x over the nonnegative half [0, x_max].
    pub fn nx_half(&self) -> usize {
        self.nx_half
    }

    /// Node count along λ.
    pub fn nl(&self) -> usize {
        self.nl
    }

    /// Total number of nodes on the full symmetric grid.
    pub fn node_count(&self) -> usize {
        self.nx() * self.nl
    }

    /// x-coordinate of node index i on the full grid (i = 0 is x = −x_max).
    pub fn x(&self, i: usize) -> f64 {
        (i as f64 - (self.nx_half - 1) as f64) * self.h_x
    }

    /// λ-coordinate of node index k.
    pub fn lambda(&self, k: usize) -> f64 {
        k as f64 * self.h_lambda
    }

    /// Linear index of node (i, k); λ varies fastest.
    #[inline]
    pub fn idx(&self, i: usize, k: usize) -> usize {
        i * self.nl + k
    }
}

/// One real value per node of a [`GridSpec3`].
#[derive(Clone, Debug)]
pub struct ScalarField3 {
    pub grid: GridSpec3,
    values: Vec<f64>,
}

impl ScalarField3 {
    /// Zero-initialized field.
    pub fn zeros(grid: GridSpec3) -> Self {
        ScalarField3 { grid, values: vec![0.0; grid.node_count()] }
    }

    /// Wraps raw values, checking count and finiteness.
    pub fn from_values(grid: GridSpec3, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::Dimension(format!(
                "field has {} values but the grid has {} nodes",
                values.len(),
                grid.node_count()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!("non-finite field value at linear index {pos}")));
        }
        Ok(ScalarField3 { grid, values })
    }

    /// Fills the field from a function of (s, t, λ).
    pub fn from_fn(grid: GridSpec3, mut f: impl FnMut(f64, f64, f64) -> f64) -> Self {
        let mut field = ScalarField3::zeros(grid);
        for i in 0..grid.ns() {
            for j in 0..grid.nt() {
                for k in 0..grid.nl() {
                    field.values[grid.idx(i, j, k)] = f(grid.s(i), grid.t(j), grid.lambda(k));
                }
            }
        }
        field
    }

    /// Value at node (i, j, k).
    #[inline]
    pub fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.grid.idx(i, j, k)]
    }

    /// Mutable value at node (i, j, k).
    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize, k: usize) -> &mut f64 {
        let idx = self.grid.idx(i, j, k);
        &mut self.values[idx]
    }

    /// Read-only view of the backing storage (λ fastest).
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Mutable view of the backing storage (λ fastest).
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Largest absolute value over all nodes.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }
}

/// One real value per node of a [`GridSpec2`] (full symmetric x-range).
#[derive(Clone, Debug)]
pub struct ScalarField2 {
    pub grid: GridSpec2,
    values: Vec<f64>,
}

impl ScalarField2 {
    /// Zero-initialized field.
    pub fn zeros(grid: GridSpec2) -> Self {
        ScalarField2 { grid, values: vec![0.0; grid.node_count()] }
    }

    /// Wraps raw values, checking count and finiteness.
    pub fn from_values(grid: GridSpec2, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::Dimension(format!(
                "field has {} values but the grid has {} nodes",
                values.len(),
                grid.node_count()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!("non-finite field value at linear index {pos}")));
        }
        Ok(ScalarField2 { grid, values })
    }

    /// Builds a field by evaluating `f(x, λ)` at every node.
    pub fn from_fn(grid: GridSpec2, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let mut field = ScalarField2::zeros(grid);
        for i in 0..grid.nx() {
            for k in 0..grid.nl() {
                *field.at_mut(i, k) = f(grid.x(i), grid.lambda(k));
            }
        }
        field
    }

    /// Value at node (i, k).
    #[inline]
    pub fn at(&self, i: usize, k: usize) -> f64 {
        self.values[self.grid.idx(i, k)]
    }

    /// Mutable value at node (i, k).
    #[inline]
    pub fn at_mut(&mut self, i: usize, k: usize) -> &mut f64 {
        let idx = self.grid.idx(i, k);
        &mut self.values[idx]
    }

    /// Read-only view of the backing storage (λ fastest).
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Mutable view of the backing storage (λ fastest).
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
}

/// Result of one sampled hypothesis check.
#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct FlagCheck {
    /// Whether the hypothesis held at every sample.
    pub holds: bool,
    /// Largest deviation observed (0 for order checks that held strictly).
    pub worst_deviation: f64,
    /// Sample location of the largest deviation.
    pub worst_at: f64,
}

/// Sampled validation record for the three structural hypotheses.
#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct HypothesisFlags {
    /// f(−u) = −f(u) on the sample grid.
    pub odd: FlagCheck,
    /// G(±1) = 0 and G > 0 on the sampled interior of (−1, 1).
    pub g_double_well: FlagCheck,
    /// f′ strictly decreasing on the sampled interior of (0, 1).
    pub f_prime_decreasing: FlagCheck,
}

/// Which built-in (or custom) reaction term a [`Nonlinearity`] represents.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum NonlinearityKind {
    /// f(u) = u − u³, G(u) = (1/4)(1 − u²)².
    AllenCahn,
    /// f(u) = sin(πu), G(u) = (1/π)(1 + cos(πu)).
    PeierlsNabarro,
    /// Caller-supplied f, f′, G.
    Custom,
}

impl NonlinearityKind {
    /// Stable lowercase name used in configs and reports.
    pub fn name(&self) -> &'static str {
        match self {
            NonlinearityKind::AllenCahn => "allen_cahn",
            NonlinearityKind::PeierlsNabarro => "peierls_nabarro",
            NonlinearityKind::Custom => "custom",
        }
    }
}

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A bistable reaction term f with derivative f′ and potential G (G′ = −f),
/// carrying sampled validation of the structural hypotheses.
///
/// Construction always verifies G′ = −f by a fourth-order finite difference;
/// the three hypothesis flags are recorded but only enforced by callers that
/// require them.
#[derive(Clone)]
pub struct Nonlinearity {
    kind: NonlinearityKind,
    f: RealFn,
    f_prime: RealFn,
    g: RealFn,
    flags: HypothesisFlags,
    sup_f_prime: f64,
}

impl std::fmt::Debug for Nonlinearity {
    fn fmt(&self, fmt: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fmt.debug_struct("Nonlinearity")
            .field("kind", &self.kind)
            .field("flags", &self.flags)
            .field("sup_f_prime", &self.sup_f_prime)
            .finish()
    }
}

impl Nonlinearity {
    /// The Allen–Cahn term f(u) = u − u³ with G(u) = (1/4)(1 − u²)².
    pub fn allen_cahn() -> Self {
        Nonlinearity::build(
            NonlinearityKind::AllenCahn,
            Arc::new(|u: f64| u - u * u * u),
            Arc::new(|u: f64| 1.0 - 3.0 * u * u),
            Arc::new(|u: f64| 0.25 * (1.0 - u * u) * (1.0 - u * u)),
        )
        .expect("built-in Allen-Cahn term validates")
    }

    /// The Peierls–Nabarro term f(u) = sin(πu) with G(u) = (1/π)(1 + cos(πu)).
    pub fn peierls_nabarro() -> Self {
        Nonlinearity::build(
            NonlinearityKind::PeierlsNabarro,
            Arc::new(|u: f64| (std::f64::consts::PI * u).sin()),
            Arc::new(|u: f64| std::f64::consts::PI * (std::f64::consts::PI * u).cos()),
            Arc::new(|u: f64| (1.0 + (std::f64::consts::PI * u).cos()) / std::f64::consts::PI),
        )
        .expect("built-in Peierls-Nabarro term validates")
    }

    /// A caller-supplied term. Fails with a validation error when G′ = −f
    /// does not hold within [`FD_CONSISTENCY_TOL`] at some sample point.
    pub fn custom(
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        f_prime: impl Fn(f64) -> f64 + Send + Sync + 'static,
        g: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        Nonlinearity::build(NonlinearityKind::Custom, Arc::new(f), Arc::new(f_prime), Arc::new(g))
    }

    /// Builds a built-in term by kind name ("allen_cahn" or "peierls_nabarro").
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "allen_cahn" => Ok(Nonlinearity::allen_cahn()),
            "peierls_nabarro" => Ok(Nonlinearity::peierls_nabarro()),
            other => Err(Error::Domain(format!(
                "unknown nonlinearity kind '{other}' (expected allen_cahn or peierls_nabarro)"
            ))),
        }
    }

    fn build(kind: NonlinearityKind, f: RealFn, f_prime: RealFn, g: RealFn) -> Result<Self> {
        // Interior sample points of (-1, 1), offset from the endpoints.
        let n = VALIDATION_SAMPLES;
        let sample = |i: usize| -1.0 + (i as f64 + 0.5) * 2.0 / n as f64;

        // G' = -f via fourth-order central difference; a failure here is a
        // hard error because every solver relies on the gradient structure.
        let fd_h = 1e-3;
        let mut worst_fd = 0.0f64;
        let mut worst_fd_at = 0.0f64;
        for i in 0..n {
            let u = sample(i);
            let g_prime = (-g(u + 2.0 * fd_h) + 8.0 * g(u + fd_h) - 8.0 * g(u - fd_h)
                + g(u - 2.0 * fd_h))
                / (12.0 * fd_h);
            let dev = (g_prime + f(u)).abs();
            if dev > worst_fd {
                worst_fd = dev;
                worst_fd_at = u;
            }
        }
        if worst_fd > FD_CONSISTENCY_TOL {
            return Err(Error::Validation(format!(
                "G' = -f fails: worst deviation {worst_fd:.3e} at u = {worst_fd_at:.6}"
            )));
        }

        // Oddness of f.
        let mut odd = FlagCheck { holds: true, worst_deviation: 0.0, worst_at: 0.0 };
        for i in 0..n {
            let u = sample(i);
            let dev = (f(-u) + f(u)).abs();
            if dev > odd.worst_deviation {
                odd.worst_deviation = dev;
                odd.worst_at = u;
            }
        }
        odd.holds = odd.worst_deviation <= VALIDATION_TOL;

        // Double-well shape of G: vanishes at the wells, positive between.
        let mut g_double_well = FlagCheck { holds: true, worst_deviation: 0.0, worst_at: 1.0 };
        for endpoint in [-1.0, 1.0] {
            let dev = g(endpoint).abs();
            if dev > g_double_well.worst_deviation {
                g_double_well.worst_deviation = dev;
                g_double_well.worst_at = endpoint;
            }
        }
        let mut interior_positive = true;
        let mut worst_interior = f64::INFINITY;
        let mut worst_interior_at = 0.0;
        for i in 0..n {
            let u = sample(i);
            let val = g(u);
            if val < worst_interior {
                worst_interior = val;
                worst_interior_at = u;
            }
            if val <= 0.0 {
                interior_positive = false;
            }
        }
        if !interior_positive {
            g_double_well.worst_deviation = g_double_well.worst_deviation.max(-worst_interior);
            g_double_well.worst_at = worst_interior_at;
        }
        g_double_well.holds =
            g_double_well.worst_deviation <= VALIDATION_TOL && interior_positive;

        // Strict decrease of f' on (0, 1).
        let mut f_prime_decreasing = FlagCheck { holds: true, worst_deviation: 0.0, worst_at: 0.0 };
        let half = n / 2;
        for i in 0..half {
            let u0 = (i as f64 + 0.5) / half as f64;
            let u1 = (i as f64 + 1.5) / half as f64;
            if u1 >= 1.0 {
                break;
            }
            let rise = f_prime(u1) - f_prime(u0);
            if rise >= 0.0 && rise > f_prime_decreasing.worst_deviation {
                f_prime_decreasing.worst_deviation = rise;
                f_prime_decreasing.worst_at = u0;
                f_prime_decreasing.holds = false;
            }
        }

        // Sampled sup of |f'| over [-1, 1], used to pick monotone-iteration shifts.
        let mut sup_f_prime = 0.0f64;
        for i in 0..=n {
            let u = -1.0 + 2.0 * i as f64 / n as f64;
            sup_f_prime = sup_f_prime.max(f_prime(u).abs());
        }

        Ok(Nonlinearity {
            kind,
            f,
            f_prime,
            g,
            flags: HypothesisFlags { odd, g_double_well, f_prime_decreasing },
            sup_f_prime,
        })
    }

    /// Which term this is.
    pub fn kind(&self) -> NonlinearityKind {
        self.kind
    }

    /// Reaction term f(u).
    #[inline]
    pub fn f(&self, u: f64) -> f64 {
        (self.f)(u)
    }

    /// Derivative f′(u).
    #[inline]
    pub fn f_prime(&self, u: f64) -> f64 {
        (self.f_prime)(u)
    }

    /// Potential G(u), with G′ = −f.
    #[inline]
    pub fn g(&self, u: f64) -> f64 {
        (self.g)(u)
    }

    /// Sampled validation record.
    pub fn flags(&self) -> &HypothesisFlags {
        &self.flags
    }

    /// True when all three structural hypotheses validated.
    pub fn all_flags_hold(&self) -> bool {
        self.flags.odd.holds && self.flags.g_double_well.holds && self.flags.f_prime_decreasing.holds
    }

    /// Sampled sup of |f′| over [−1, 1].
    pub fn sup_f_prime(&self) -> f64 {
        self.sup_f_prime
    }
}

/// Tolerance for the monotonicity and oddness invariants of a computed layer
/// profile; covers rounding in the converged solver output.
pub const LAYER_INVARIANT_TOL: f64 = 1e-12;

/// A one-dimensional layer profile u₀ together with its half-plane harmonic
/// extension v₀.
///
/// The profile is the monotone heteroclinic connecting −1 to 1, normalized so
/// u₀(0) = 0, odd in x. The extension satisfies Δv₀ = 0 in the half-plane with
/// −∂_λ v₀ = f(u₀) on the trace. Construction validates the normalization,
/// oddness, monotonicity, and |u₀| < 1 at every node.
#[derive(Clone, Debug)]
pub struct LayerProfile {
    grid: GridSpec2,
    v0: ScalarField2,
    u0: Vec<f64>,
    kind: NonlinearityKind,
}

impl LayerProfile {
    /// Wraps a computed extension, extracting the bottom trace and checking
    /// the profile invariants.
    pub fn from_extension(v0: ScalarField2, kind: NonlinearityKind) -> Result<Self> {
        let grid = v0.grid;
        let nx = grid.nx();
        let center = grid.nx_half() - 1;
        let u0: Vec<f64> = (0..nx).map(|i| v0.at(i, 0)).collect();

        if u0[center].abs() > LAYER_INVARIANT_TOL {
            return Err(Error::Validation(format!(
                "layer profile not normalized: u0(0) = {:.3e}",
                u0[center]
            )));
        }
        for i in 0..nx {
            let mirror = nx - 1 - i;
            if (u0[i] + u0[mirror]).abs() > LAYER_INVARIANT_TOL {
                return Err(Error::Validation(format!(
                    "layer profile not odd: u0({}) + u0({}) = {:.3e}",
                    grid.x(i),
                    grid.x(mirror),
                    u0[i] + u0[mirror]
                )));
            }
            if u0[i].abs() >= 1.0 {
                return Err(Error::Validation(format!(
                    "layer profile leaves (-1, 1): u0({}) = {}",
                    grid.x(i),
                    u0[i]
                )));
            }
        }
        for i in 1..nx {
            if u0[i] < u0[i - 1] - LAYER_INVARIANT_TOL {
                return Err(Error::Validation(format!(
                    "layer profile not nondecreasing between x = {} and x = {}",
                    grid.x(i - 1),
                    grid.x(i)
                )));
            }
        }
        Ok(LayerProfile { grid, v0, u0, kind })
    }

    /// Grid of the half-plane extension.
    pub fn grid(&self) -> &GridSpec2 {
        &self.grid
    }

    /// The extension field v₀ on the full (x, λ) grid.
    pub fn extension(&self) -> &ScalarField2 {
        &self.v0
    }

    /// The bottom trace u₀ at the grid's x nodes.
    pub fn trace(&self) -> &[f64] {
        &self.u0
    }

    /// Which nonlinearity generated this profile.
    pub fn kind(&self) -> NonlinearityKind {
        self.kind
    }
}

/// Reduces a point in ℝ^{2m} to its radial pair (s, t).
///
/// s is the Euclidean norm of the first m components, t of the last m.
pub fn st_coordinates(point: &[f64], m: usize) -> Result<(f64, f64)> {
    if m == 0 {
        return Err(Error::Dimension("half-dimension m must be at least 1".into()));
    }
    if point.len() != 2 * m {
        return Err(Error::Dimension(format!(
            "point has {} components but 2m = {}",
            point.len(),
            2 * m
        )));
    }
    let s = point[..m].iter().map(|x| x * x).sum::<f64>().sqrt();
    let t = point[m..].iter().map(|x| x * x).sum::<f64>().sqrt();
    Ok((s, t))
}

/// Rotates (s, t) to the cone-adapted pair y = (s+t)/√2, z = (s−t)/√2.
pub fn yz_coordinates(s: f64, t: f64) -> Result<(f64, f64)> {
    if s < 0.0 || t < 0.0 {
        return Err(Error::Domain(format!("radial coordinates must be nonnegative, got ({s}, {t})")));
    }
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    Ok(((s + t) * inv_sqrt2, (s - t) * inv_sqrt2))
}

/// Inverse of [`yz_coordinates`]: s = (y+z)/√2, t = (y−z)/√2.
///
/// Requires |z| ≤ y so the image stays in the quadrant {s ≥ 0, t ≥ 0}.
pub fn st_from_yz(y: f64, z: f64) -> Result<(f64, f64)> {
    if z.abs() > y + 1e-12 * y.abs().max(1.0) {
        return Err(Error::Domain(format!("(y, z) = ({y}, {z}) lies outside |z| <= y")));
    }
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    Ok(((y + z) * inv_sqrt2, ((y - z) * inv_sqrt2).max(0.0)))
}

/// Distance |s − t|/√2 from (s, t) to the Simons cone {s = t}.
pub fn cone_distance(s: f64, t: f64) -> Result<f64> {
    if s < 0.0 || t < 0.0 {
        return Err(Error::Domain(format!("radial coordinates must be nonnegative, got ({s}, {t})")));
    }
    Ok((s - t).abs() * std::f64::consts::FRAC_1_SQRT_2)
}
