//! Scout run for the monotone iteration at acceptance-scale grids:
//! step counts, runtimes, monotonicity violations, barrier domination,
//! and the maximality gap against the variational minimizer.

use saddle_core::analysis::{asymptotic_report, gradient_decay_check, monotonicity_report};
use saddle_core::layer::solve_layer;
use saddle_core::maximal::{barrier, maximality_check, monotone_iterate};
use saddle_core::model::{GridSpec2, GridSpec3, Nonlinearity};
use saddle_core::saddle::{minimize_energy, odd_reflect_field, DescentParams};
use std::time::Instant;

fn main() {
    let nl = Nonlinearity::allen_cahn();
    let args: Vec<String> = std::env::args().collect();
    let m_list: Vec<usize> = if args.len() > 1 {
        args[1..].iter().map(|a| a.parse().unwrap()).collect()
    } else {
        vec![1, 2, 3]
    };

    // Shared Allen-Cahn layer profile for the barrier.
    let t0 = Instant::now();
    let lgrid = GridSpec2::new(20.0, 20.0, 0.05, 0.05).unwrap();
    let layer = solve_layer(&nl, lgrid, 1e-10).unwrap();
    println!("layer profile solved in {:.1}s", t0.elapsed().as_secs_f64());

    let h: f64 = std::env::var("H")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(0.15625);
    let r: f64 = std::env::var("R")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(20.0);
    let l: f64 = std::env::var("L")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(20.0);
    for &m in &m_list {
        let grid = GridSpec3::new(m, r, r, l, h, h, h).unwrap();
        println!(
            "m={m}: grid {}x{}x{} ({} nodes)",
            grid.ns(),
            grid.nt(),
            grid.nl(),
            grid.ns() * grid.nt() * grid.nl()
        );
        let t0 = Instant::now();
        let state = monotone_iterate(&nl, m, r, l, &grid, &layer, 2.5, None, 1e-8).unwrap();
        let dt = t0.elapsed().as_secs_f64();
        let steps = state.iterates_sup_diff.len();
        println!(
            "  iterate: {steps} steps in {dt:.1}s; violation {:.3e}; domination gap {:.3e}; K {:.6}",
            state.monotonicity_violation, state.domination_gap, state.k
        );
        let tail: Vec<String> = state
            .iterates_sup_diff
            .iter()
            .rev()
            .take(3)
            .map(|d| format!("{d:.3e}"))
            .collect();
        println!("  last sup-diffs: {}", tail.join(", "));

        // Localize the barrier-domination gap: worst node on the bottom trace
        // versus the worst node over the whole cylinder.
        let ub = barrier(&layer, state.k).unwrap();
        let mut worst_all = (f64::INFINITY, 0usize, 0usize, 0usize);
        let mut worst_bottom = (f64::INFINITY, 0usize, 0usize);
        for i in 0..grid.ns() {
            for j in 0..=i.min(grid.nt() - 1) {
                let z = (grid.s(i) - grid.t(j)) / std::f64::consts::SQRT_2;
                let b = ub.trace_value(z);
                for k in 0..grid.nl() {
                    let gap = b - state.v.at(i, j, k);
                    if gap < worst_all.0 {
                        worst_all = (gap, i, j, k);
                    }
                    if k == 0 && gap < worst_bottom.0 {
                        worst_bottom = (gap, i, j);
                    }
                }
            }
        }
        let (g, i, j, k) = worst_all;
        println!(
            "  domination argmin: gap {:.3e} at s={:.4} t={:.4} lam={:.4} (z={:.4})",
            g,
            grid.s(i),
            grid.t(j),
            grid.lambda(k),
            (grid.s(i) - grid.t(j)) / std::f64::consts::SQRT_2
        );
        let (gb, ib, jb) = worst_bottom;
        println!(
            "  bottom-trace domination: gap {:.3e} at s={:.4} t={:.4} (z={:.4})",
            gb,
            grid.s(ib),
            grid.t(jb),
            (grid.s(ib) - grid.t(jb)) / std::f64::consts::SQRT_2
        );
        // Gap minima per lambda level (coarse profile).
        for k in [0, 1, 2, 4, 8] {
            let mut gmin = f64::INFINITY;
            for i in 0..grid.ns() {
                for j in 0..=i.min(grid.nt() - 1) {
                    let z = (grid.s(i) - grid.t(j)) / std::f64::consts::SQRT_2;
                    let gap = ub.trace_value(z) - state.v.at(i, j, k);
                    gmin = gmin.min(gap);
                }
            }
            println!("    lam={:.4}: min gap {:.3e}", grid.lambda(k), gmin);
        }
        // Monotonicity extrema on the odd reflection (acceptance inputs).
        let full = odd_reflect_field(&state.v).unwrap();
        let mono = monotonicity_report(&full, m);
        println!(
            "  mono: d_s min {:.3e} | d_t max {:.3e} | d_z min {:.3e} | d_y min {:.3e} | axis_s {:.3e} | axis_t {:.3e}",
            mono.d_s.value, mono.d_t.value, mono.d_z.value, mono.d_y.value,
            mono.axis_s, mono.axis_t
        );
        for (name, e) in [("d_s", mono.d_s), ("d_t", mono.d_t), ("d_z", mono.d_z), ("d_y", mono.d_y)]
        {
            let (i, j, k) = e.location;
            println!(
                "    {name} extremum at (i,j,k)=({i},{j},{k}) s={:.4} t={:.4} lam={:.4}",
                grid.s(i),
                grid.t(j),
                grid.lambda(k)
            );
        }
        // d_y minima excluding neighborhoods of the truncation corner (R, R).
        for margin in [0.0, 0.5, 1.0, 2.0] {
            let mut dy_min = f64::INFINITY;
            for i in 1..grid.ns() - 1 {
                for j in 1..grid.nt() - 1 {
                    if j >= i || (r - grid.s(i)).hypot(r - grid.t(j)) < margin {
                        continue;
                    }
                    for k in 0..grid.nl() {
                        let ds = (full.at(i + 1, j, k) - full.at(i - 1, j, k)) / (2.0 * grid.h_s);
                        let dt = (full.at(i, j + 1, k) - full.at(i, j - 1, k)) / (2.0 * grid.h_t);
                        dy_min = dy_min.min((ds + dt) / std::f64::consts::SQRT_2);
                    }
                }
            }
            println!("    d_y corner margin {margin}: min {dy_min:.3e}");
        }
        // Interior-only z-derivative minimum (strict positivity check).
        let mut dz_interior = f64::INFINITY;
        for i in 1..grid.ns() - 1 {
            for j in 1..grid.nt() - 1 {
                for k in 0..grid.nl() {
                    let ds = (full.at(i + 1, j, k) - full.at(i - 1, j, k)) / (2.0 * grid.h_s);
                    let dt = (full.at(i, j + 1, k) - full.at(i, j - 1, k)) / (2.0 * grid.h_t);
                    dz_interior = dz_interior.min((ds - dt) / std::f64::consts::SQRT_2);
                }
            }
        }
        println!("  interior d_z min: {dz_interior:.3e}");
        let decay = gradient_decay_check(&full);
        println!(
            "  gradient decay: c {:.4}, worst ratio {:.4}, nonincreasing {}, decaying {}",
            decay.c, decay.worst_ratio, decay.nonincreasing, decay.decaying
        );
        if m == 1 {
            match asymptotic_report(&full, &layer, &[10.0, 20.0]) {
                Ok(rows) => {
                    for row in rows {
                        println!(
                            "  asymptotic R={:.1}: sup|u-u0| {:.4e}, sup grad dev {:.4e}",
                            row.r, row.sup_u_dev, row.sup_grad_dev
                        );
                    }
                }
                Err(e) => println!("  asymptotic report failed: {e}"),
            }
        }
        // Bottom-trace gap minima excluding neighborhoods of the outer
        // truncation corner (s, t) = (R, R).
        for margin in [0.0, 0.5, 1.0, 2.0, 4.0, 8.0] {
            let mut gmin = f64::INFINITY;
            for i in 0..grid.ns() {
                for j in 0..=i.min(grid.nt() - 1) {
                    let dc = (r - grid.s(i)).hypot(r - grid.t(j));
                    if dc < margin {
                        continue;
                    }
                    let z = (grid.s(i) - grid.t(j)) / std::f64::consts::SQRT_2;
                    let gap = ub.trace_value(z) - state.v.at(i, j, 0);
                    gmin = gmin.min(gap);
                }
            }
            println!("    corner margin {margin:.1}: bottom min gap {gmin:.3e}");
        }

        if std::env::var("SKIP_MINIMIZER").is_ok() {
            continue;
        }
        let t0 = Instant::now();
        let params = DescentParams { energy_tol: 1e-13, residual_tol: 1e-9, max_sweeps: 100_000 };
        let minimizer = minimize_energy(&nl, m, r, l, &grid, &params).unwrap();
        let dt = t0.elapsed().as_secs_f64();
        println!(
            "  minimizer: {} sweeps in {dt:.1}s, energy {:.8}",
            minimizer.energy_history.len(),
            minimizer.energy_history.last().unwrap()
        );
        let report = maximality_check(&state, &minimizer).unwrap();
        println!(
            "  maximality gap: field {:.3e}, bottom {:.3e}",
            report.min_gap_field, report.min_gap_bottom
        );
    }
}
