//! Test-only package. The criteria live in `tests/acceptance.rs`; keeping
//! them in their own package makes them run after the core crate's suites.
