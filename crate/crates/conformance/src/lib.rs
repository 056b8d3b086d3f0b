//! Acceptance suite for `sastep`.
//!
//! The suite lives in `tests/acceptance.rs` and prints one `PASS`/`FAIL`
//! line per criterion; run it with `cargo test -p sastep-conformance`.
