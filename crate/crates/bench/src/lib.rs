//! Benchmark crate; see `benches/statistics.rs`.
