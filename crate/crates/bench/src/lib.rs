//! Shared fixtures for the benchmarks.

use bigjump_core::{ProcessSpec, RegVarLaw};

pub fn symmetric(alpha: f64) -> RegVarLaw {
    RegVarLaw::symmetric(alpha).expect("valid noise")
}

/// `X_k = Z_k + 0.5 Z_{k-1}` with symmetric noise of index 1.5.
pub fn ma_fixture() -> ProcessSpec {
    ProcessSpec::moving_average(symmetric(1.5), 0, vec![1.0, 0.5]).expect("valid MA")
}
