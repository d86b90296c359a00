//! Criterion benchmarks for `wbsim-core`; see `benches/core.rs`.
