//! Criterion benchmarks for `lambda-oct-core`; see `benches/`.
