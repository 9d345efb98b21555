//! Synthetic fixtures and brute-force oracles shared by the test suites.
//!
//! Oracles here are written independently of the `afse-core` algorithms
//! (direct 2-D convolution, fixed-point sweeps, exhaustive enumeration) and
//! only borrow its plain data types.

pub mod oracle;
pub mod synth;
