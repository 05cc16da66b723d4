//! Benchmarks for the selection engine live under `benches/`.
