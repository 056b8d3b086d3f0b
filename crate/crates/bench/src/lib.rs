//! Criterion benchmarks for the update kernels, episode drivers and reference solvers; see `benches/`.
