//! Criterion benchmarks for `pasta-core`; see `benches/`.
