//! Fixtures shared by the criterion benchmarks.

use sparsequad::datagen::{generate, DataGenConfig, Dataset};

/// The `(n, p, s) = (50, 100, 30)` design used for the timing comparison.
pub fn fig3_dataset(rho: f64, seed: u64) -> Dataset {
    generate(&DataGenConfig::new(50, 100, rho, 30, seed)).expect("valid preset")
}
