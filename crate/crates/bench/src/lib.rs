//! Benchmark-only crate; see `benches/kernels.rs`.
//!
//! Run with `cargo bench -p saddle-bench`. The grids are deliberately small:
//! the benches track the per-kernel constants (multigrid cycles, quadratic
//! forms, layer solves), not production problem sizes.
