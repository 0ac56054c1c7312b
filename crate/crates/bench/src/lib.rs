//! Criterion benchmarks for the kernel and training stages live under `benches/`.
