//! Criterion benchmarks for `heisenberg-ibp`: path sampling, the `Φ`
//! recursion, partition enumeration and a small end-to-end verification.
//! Run with `cargo bench -p heisenberg-ibp-bench`.
