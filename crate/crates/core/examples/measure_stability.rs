//! Scout run for the instability search: builds maximal states for the
//! sine nonlinearity at m = 2, 3, 4 and scans dilated test directions for
//! negative quadratic-form values, printing per-combination rows.

use saddle_core::layer::solve_layer;
use saddle_core::maximal::monotone_iterate;
use saddle_core::model::{GridSpec2, GridSpec3, Nonlinearity};
use saddle_core::stability::{
    instability_search, rayleigh_minimizer_profile, PhiProfile, CERTIFICATE_MARGIN,
};
use std::time::Instant;

fn main() {
    let nl = Nonlinearity::peierls_nabarro();
    let args: Vec<String> = std::env::args().collect();
    let m_list: Vec<usize> = if args.len() > 1 {
        args[1..].iter().map(|a| a.parse().unwrap()).collect()
    } else {
        vec![2, 3, 4]
    };

    let t0 = Instant::now();
    let lgrid = GridSpec2::new(20.0, 20.0, 0.05, 0.05).unwrap();
    let layer = solve_layer(&nl, lgrid, 1e-10).unwrap();
    println!("layer profile solved in {:.1}s", t0.elapsed().as_secs_f64());

    let h: f64 = std::env::var("H")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(0.25);
    let (r, l) = (32.0, 17.0);
    let hl = h;
    let a_list: Vec<f64> = std::env::var("A_LIST")
        .unwrap_or_else(|_| "2.0,2.5".into())
        .split(',')
        .map(|s| s.trim().parse().unwrap())
        .collect();
    let n_list: Vec<f64> = std::env::var("N_LIST")
        .unwrap_or_else(|_| "8,16".into())
        .split(',')
        .map(|s| s.trim().parse().unwrap())
        .collect();
    let rho1_list: Vec<f64> = std::env::var("RHO1_LIST")
        .unwrap_or_else(|_| "0.45,0.75".into())
        .split(',')
        .map(|s| s.trim().parse().unwrap())
        .collect();

    for &m in &m_list {
        let grid = GridSpec3::new(m, r, r, l, h, h, hl).unwrap();
        println!(
            "m={m}: grid {}x{}x{} ({} nodes), h={h}, h_lambda={hl}",
            grid.ns(),
            grid.nt(),
            grid.nl(),
            grid.node_count()
        );
        let t0 = Instant::now();
        let state = match monotone_iterate(&nl, m, r, l, &grid, &layer, 3.5, None, 1e-8) {
            Ok(s) => s,
            Err(e) => {
                println!("  iterate failed: {e}");
                continue;
            }
        };
        println!(
            "  iterate: {} steps in {:.1}s; violation {:.3e}; domination gap {:.3e}; K {:.6}",
            state.iterates_sup_diff.len(),
            t0.elapsed().as_secs_f64(),
            state.monotonicity_violation,
            state.domination_gap,
            state.k
        );

        let mut phi_family: Vec<PhiProfile> = rho1_list
            .iter()
            .map(|&rho1| rayleigh_minimizer_profile(m, rho1, 9.0, 4000).unwrap())
            .collect();
        phi_family.push(PhiProfile::SinBump { rho1: 1.0, rho2: 4.0 });
        let t0 = Instant::now();
        match instability_search(&state, &nl, m, &a_list, &n_list, &phi_family) {
            Ok(report) => {
                for row in &report.rows {
                    let margin = -CERTIFICATE_MARGIN * row.norm_sq;
                    println!(
                        "    a={:.2} N={:>4.1} {:<22} Q {:>12.5e}  Q/(a^{{2m-3}}N) {:>12.5e}  \
                         |xi|^2 {:>10.4e}  cert_line {:>10.3e} {}",
                        row.a,
                        row.n,
                        row.phi_id,
                        row.q,
                        row.q_scaled,
                        row.norm_sq,
                        margin,
                        if row.q < margin { "NEGATIVE" } else { "" }
                    );
                }
                println!(
                    "  search in {:.1}s: verdict {} at a={} N={} phi={} (Q {:.5e})",
                    t0.elapsed().as_secs_f64(),
                    report.verdict.name(),
                    report.a,
                    report.n,
                    report.phi_id,
                    report.q
                );
            }
            Err(e) => println!("  search failed: {e}"),
        }
    }
}
