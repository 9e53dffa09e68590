//! Criterion benchmarks for the simulator and training loop; see `benches/`.
