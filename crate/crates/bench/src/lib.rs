//! Criterion benchmarks for the solver and the classification pipeline live
//! in `benches/`; run them with `cargo bench -p salefold-bench`.
