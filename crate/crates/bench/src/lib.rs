//! Shared fixtures for the benchmarks.

use satake_core::rmt::{EnsembleSpec, Group};
use satake_core::TestFunction;

/// A Fejer test function; panics only on an invalid width.
pub fn fejer(beta: f64) -> TestFunction {
    TestFunction::fejer(beta).expect("valid Fejer width")
}

/// An ensemble with enough samples for repeated single draws.
pub fn ensemble(group: Group, size: usize) -> EnsembleSpec {
    EnsembleSpec::new(group, size, 1 << 20, 1).expect("valid ensemble")
}
