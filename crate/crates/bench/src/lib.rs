//! Criterion benchmarks for schedbound; see `benches/`.
