//! Seeded fixtures shared by the benchmarks.

use permsym_core::empirical::MetricSpaceSample;
use permsym_core::rng::{seeded, uniform_params};
use permsym_core::{Activation, Architecture, NetworkParams};

/// `d0-w-…-w-1` tanh network with parameters uniform in `[-1, 1]`.
pub fn network(d0: usize, width: usize, depth: usize, seed: u64) -> (Architecture, NetworkParams) {
    let arch =
        Architecture::uniform(d0, &vec![width; depth], Activation::Tanh).expect("valid widths");
    let params = uniform_params(&arch, 1.0, &mut seeded(seed));
    (arch, params)
}

/// Regular grid on `[-1, 1]^dim`.
pub fn grid(dim: usize, res: usize) -> MetricSpaceSample {
    MetricSpaceSample::grid(dim, res, 1.0).expect("small grid")
}
