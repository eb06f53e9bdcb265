//! Criterion benchmarks for `pbg-core`; see `benches/`.
