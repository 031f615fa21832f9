//! Criterion benchmarks for tfwlab; see `benches/`.
