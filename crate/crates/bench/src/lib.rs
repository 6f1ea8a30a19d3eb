//! Criterion benchmarks for `cogrelay-core`; see `benches/engine.rs`.
