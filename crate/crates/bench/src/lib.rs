//! Criterion benchmarks for `biharm-core`; see `benches/`.
