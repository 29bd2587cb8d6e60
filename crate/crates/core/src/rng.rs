//! Seeded randomness.
//!
//! All randomness in the crate comes from [`ChaCha8Rng`] seeded with a
//! `u64`. Independent streams (one per run, per trial) are obtained with
//! [`derive_seed`], a SplitMix64 mix of the parent seed and the stream index,
//! so results never depend on scheduling or thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::activation::Activation;
use crate::nn::{Architecture, NetworkParams};

pub type SymRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SymRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of stream `index` under `parent`.
pub fn derive_seed(parent: u64, index: u64) -> u64 {
    splitmix64(splitmix64(parent) ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

/// Parameters drawn uniformly from `[-bound, bound]^S`.
pub fn uniform_params<R: Rng + ?Sized>(
    arch: &Architecture,
    bound: f64,
    rng: &mut R,
) -> NetworkParams {
    let flat: Vec<f64> = (0..arch.param_count())
        .map(|_| rng.gen_range(-bound..=bound))
        .collect();
    NetworkParams::from_flat(arch, &flat).expect("length matches by construction")
}

/// A point drawn uniformly from the closed L2 ball of the given radius.
pub fn uniform_in_ball<R: Rng + ?Sized>(dim: usize, radius: f64, rng: &mut R) -> Vec<f64> {
    use rand_distr::{Distribution, StandardNormal};
    let mut v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let r = radius * rng.gen::<f64>().powf(1.0 / dim as f64);
    if norm > 0.0 {
        for x in &mut v {
            *x *= r / norm;
        }
    }
    v
}

/// Random architecture with `1..=max_depth` hidden layers of width
/// `1..=max_width`, activations drawn from [`Activation::TABLE`].
pub fn random_architecture<R: Rng + ?Sized>(
    max_depth: usize,
    max_input: usize,
    max_width: usize,
    rng: &mut R,
) -> Architecture {
    let depth = rng.gen_range(1..=max_depth);
    let widths: Vec<usize> = (0..depth).map(|_| rng.gen_range(1..=max_width)).collect();
    let acts = (0..depth)
        .map(|_| Activation::TABLE[rng.gen_range(0..Activation::TABLE.len())])
        .collect();
    Architecture::new(rng.gen_range(1..=max_input), widths, 1, acts).expect("valid by construction")
}
