//! Deterministic text serialization helpers.
//!
//! All numeric output uses decimal scientific notation with 12 significant
//! digits so that identical runs produce byte-identical files across
//! platforms.

use crate::model::{ScalarField2, ScalarField3};

/// Formats a value with 12 significant digits in scientific notation.
pub fn fmt_sig(v: f64) -> String {
    // Canonicalize the sign of zero so -0.0 and 0.0 serialize identically.
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:.11e}")
}

/// Serializes a 3-D field to CSV rows (s, t, lambda, value) with a metadata header.
pub fn field3_csv(field: &ScalarField3) -> String {
    let grid = field.grid;
    let mut out = String::with_capacity(grid.node_count() * 32);
    out.push_str(&format!(
        "# field: m={} s_max={} t_max={} lambda_max={} h_s={} h_t={} h_lambda={}\n",
        grid.m, grid.s_max, grid.t_max, grid.lambda_max, grid.h_s, grid.h_t, grid.h_lambda
    ));
    out.push_str("s,t,lambda,value\n");
    for i in 0..grid.ns() {
        for j in 0..grid.nt() {
            for k in 0..grid.nl() {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    fmt_sig(grid.s(i)),
                    fmt_sig(grid.t(j)),
                    fmt_sig(grid.lambda(k)),
                    fmt_sig(field.at(i, j, k))
                ));
            }
        }
    }
    out
}

/// Serializes a 2-D field to CSV rows (x, lambda, value) with a metadata header.
pub fn field2_csv(field: &ScalarField2) -> String {
    let grid = field.grid;
    let mut out = String::with_capacity(grid.node_count() * 24);
    out.push_str(&format!(
        "# field: x_max={} lambda_max={} h_x={} h_lambda={}\n",
        grid.x_max, grid.lambda_max, grid.h_x, grid.h_lambda
    ));
    out.push_str("x,lambda,value\n");
    for i in 0..grid.nx() {
        for k in 0..grid.nl() {
            out.push_str(&format!(
                "{},{},{}\n",
                fmt_sig(grid.x(i)),
                fmt_sig(grid.lambda(k)),
                fmt_sig(field.at(i, k))
            ));
        }
    }
    out
}
