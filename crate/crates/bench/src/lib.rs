//! Criterion benchmarks for the screening kernels; see `benches/`.
