//! Criterion benchmarks for the EFD model and simulators; see `benches/`.
