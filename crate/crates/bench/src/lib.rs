//! Criterion benchmarks for `scatterlab-core`; see `benches/`.
