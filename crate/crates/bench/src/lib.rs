//! Criterion benchmarks for `cvqec-core`; see `benches/protocol.rs`.
