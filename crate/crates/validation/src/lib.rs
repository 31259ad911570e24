//! Holds the `acceptance` test target, which prints one pass/fail line per
//! acceptance criterion and exits nonzero if any fails.
//!
//! Run with `cargo test -p tradeoff-validation --test acceptance`.
