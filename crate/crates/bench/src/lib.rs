//! Criterion benchmarks for the allocation and simulation hot paths; see `benches/`.
