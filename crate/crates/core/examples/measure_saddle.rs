//! Scout run for the wedge minimizer at acceptance-scale grids: shape
//! checks, Euler–Lagrange residuals, cylinder energies vs the zero field,
//! the cone-vanishing second variation, and the energy-growth exponent.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use saddle_core::extension::{bottom_flux_residual, pde_residual};
use saddle_core::model::{GridSpec3, Nonlinearity, ScalarField3};
use saddle_core::saddle::{
    cone_stability_form, discrete_energy, minimize_energy, odd_reflect, DescentParams,
    EnergyRegion, SaddleState,
};
use std::time::Instant;

fn reflected_diagnostics(state: &SaddleState, nl: &Nonlinearity) {
    let grid = state.v.grid;
    let full = odd_reflect(state).unwrap();
    let r = pde_residual(&full, grid.m).unwrap();
    let mut worst_interior = 0.0f64;
    for i in 1..grid.ns() - 1 {
        for j in 1..grid.nt() - 1 {
            for k in 1..grid.nl() - 1 {
                worst_interior = worst_interior.max(r.at(i, j, k).abs());
            }
        }
    }
    let bottom = bottom_flux_residual(&full, |u| nl.f(u)).unwrap();
    let mut worst_bottom = 0.0f64;
    for i in 1..grid.ns() - 1 {
        for j in 1..grid.nt() - 1 {
            worst_bottom = worst_bottom.max(bottom[i * grid.nt() + j].abs());
        }
    }
    println!("  EL residuals: interior {worst_interior:.3e}  bottom {worst_bottom:.3e}");
}

fn main() {
    let nl = Nonlinearity::allen_cahn();

    // ---- Criterion-3 grid: m = 1, R = 20, L = R^0.75 ----
    let r_out = 20.0f64;
    let l_top = r_out.powf(0.75);
    let grid = GridSpec3::new(1, r_out, r_out, l_top, 0.25, 0.25, l_top / 32.0).unwrap();
    println!(
        "criterion-3 grid: {}x{}x{} nodes, h={}, h_lambda={:.6}",
        grid.ns(),
        grid.nt(),
        grid.nl(),
        grid.h_s,
        grid.h_lambda
    );
    let t0 = Instant::now();
    let params = DescentParams { energy_tol: 1e-13, residual_tol: 1e-11, max_sweeps: 100_000 };
    let state = minimize_energy(&nl, 1, r_out, l_top, &grid, &params).unwrap();
    let dt = t0.elapsed().as_secs_f64();
    println!(
        "  solved in {dt:.1}s, {} recorded sweeps, energy {:.12}",
        state.energy_history.len(),
        state.energy_history.last().unwrap()
    );
    let (mut bmin, mut bmax) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 1..grid.ns() - 1 {
        for j in 0..i {
            let v = state.v.at(i, j, 0);
            bmin = bmin.min(v);
            bmax = bmax.max(v);
        }
    }
    println!("  open-wedge bottom range: [{bmin:.3e}, {bmax:.10}]");
    reflected_diagnostics(&state, &nl);

    let full = odd_reflect(&state).unwrap();
    let zero = ScalarField3::zeros(grid);
    for s_cut in [5.0, 10.0] {
        let region = EnergyRegion::QuadrantCylinder { radius: s_cut, height: s_cut };
        let e_min = discrete_energy(&full, &nl, 1, region).unwrap();
        let e_zero = discrete_energy(&zero, &nl, 1, region).unwrap();
        println!(
            "  S={s_cut}: E(minimizer)={e_min:.6}  E(zero)={e_zero:.6}  margin={:.6}",
            e_zero - e_min
        );
    }

    // ---- Criterion-10: cone-vanishing second variation ----
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_ratio = f64::INFINITY;
    for _ in 0..20 {
        let mut xi = ScalarField3::zeros(grid);
        for i in 1..grid.ns() - 1 {
            for j in 0..i {
                for k in 0..grid.nl() - 1 {
                    *xi.at_mut(i, j, k) = rng.gen::<f64>() - 0.5;
                }
            }
        }
        let q = cone_stability_form(&state, &nl, &xi).unwrap();
        let norm2: f64 = xi.values().iter().map(|x| x * x).sum();
        worst_ratio = worst_ratio.min(q / norm2);
    }
    println!("  worst Q/|xi|^2 over 20 cone-vanishing directions: {worst_ratio:.3e}");

    // ---- Criterion-4 grid: m = 1, R = 48, L = 40 ----
    let grid_big = GridSpec3::new(1, 48.0, 48.0, 40.0, 0.5, 0.5, 0.3125).unwrap();
    println!(
        "criterion-4 grid: {}x{}x{} nodes",
        grid_big.ns(),
        grid_big.nt(),
        grid_big.nl()
    );
    let t0 = Instant::now();
    let params_big = DescentParams { energy_tol: 1e-12, residual_tol: 1e-8, max_sweeps: 100_000 };
    let state_big = minimize_energy(&nl, 1, 48.0, 40.0, &grid_big, &params_big).unwrap();
    let dt = t0.elapsed().as_secs_f64();
    println!(
        "  solved in {dt:.1}s, {} recorded sweeps, energy {:.10}",
        state_big.energy_history.len(),
        state_big.energy_history.last().unwrap()
    );
    let full_big = odd_reflect(&state_big).unwrap();
    let mut logs: Vec<(f64, f64)> = Vec::new();
    for s_cut in [10.0, 20.0, 40.0] {
        let region = EnergyRegion::QuadrantCylinder { radius: s_cut, height: s_cut };
        let e = discrete_energy(&full_big, &nl, 1, region).unwrap();
        println!("  S={s_cut}: E={e:.6}");
        logs.push((s_cut.ln(), e.ln()));
    }
    let n = logs.len() as f64;
    let sx: f64 = logs.iter().map(|p| p.0).sum();
    let sy: f64 = logs.iter().map(|p| p.1).sum();
    let sxx: f64 = logs.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = logs.iter().map(|p| p.0 * p.1).sum();
    let p = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    println!("  fitted exponent p = {p:.4} (needs <= 1.5 for m=1)");
}
