//! Criterion benchmarks for `pspline`; see `benches/spline.rs`.
