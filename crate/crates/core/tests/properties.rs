//! Property tests for the cross-module invariants.

use proptest::prelude::*;

use permsym_core::basin::mean_squared_error;
use permsym_core::basin::Dataset;
use permsym_core::canonical::{effective_volume, permutation_orbit};
use permsym_core::empirical::{
    exact_covering_number, exact_packing_number, greedy_covering_estimate, greedy_packing_estimate,
    MetricKind, MetricSpaceSample,
};
use permsym_core::equivalence::{
    ball_samples, decide_equivalence, EquivalenceOptions, VerdictKind,
};
use permsym_core::rng::{random_architecture, seeded, uniform_params};
use permsym_core::transforms::{
    apply_pooling_permutation, apply_scaling, apply_sign_flip, pooled_forward, PoolKind,
    PoolingPartition, ScalingSpec,
};
use permsym_core::{
    apply_permutation, canonicalize, forward, symmetry_profile, Activation, Architecture, Matrix,
    NetworkParams, PermutationSpec,
};

/// A random network and a random permutation of it, from one seed.
fn net_and_perm(
    seed: u64,
    max_depth: usize,
    max_width: usize,
) -> (Architecture, NetworkParams, PermutationSpec) {
    let mut rng = seeded(seed);
    let arch = random_architecture(max_depth, 3, max_width, &mut rng);
    let theta = uniform_params(&arch, 1.0, &mut rng);
    let pi = PermutationSpec::random(&arch, &mut rng);
    (arch, theta, pi)
}

fn output_gap(arch: &Architecture, a: &NetworkParams, b: &NetworkParams, xs: &[Vec<f64>]) -> f64 {
    xs.iter()
        .map(|x| {
            let (fa, fb) = (forward(arch, a, x).unwrap(), forward(arch, b, x).unwrap());
            fa.iter()
                .zip(&fb)
                .map(|(p, q)| (p - q).abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn permutation_preserves_function(seed in any::<u64>()) {
        let (arch, theta, pi) = net_and_perm(seed, 3, 8);
        let xs = ball_samples(arch.input_dim, 1.0, 1000, seed);
        prop_assert!(output_gap(&arch, &theta, &apply_permutation(&theta, &pi).unwrap(), &xs) <= 1e-9);
    }

    #[test]
    fn permutations_compose(seed in any::<u64>()) {
        let (arch, theta, p1) = net_and_perm(seed, 3, 6);
        let p2 = PermutationSpec::random(&arch, &mut seeded(seed ^ 1));
        let twice = apply_permutation(&apply_permutation(&theta, &p1).unwrap(), &p2).unwrap();
        let once = apply_permutation(&theta, &PermutationSpec::compose(&p2, &p1).unwrap()).unwrap();
        prop_assert!(twice.bit_eq(&once));
    }

    #[test]
    fn magnitude_preserving_transforms_stay_in_box(seed in any::<u64>(), bound in 0.1f64..4.0) {
        let mut rng = seeded(seed);
        let arch = Architecture::uniform(2, &[4, 3], Activation::Tanh).unwrap();
        let theta = uniform_params(&arch, bound, &mut rng);
        let pi = PermutationSpec::random(&arch, &mut rng);
        prop_assert!(apply_permutation(&theta, &pi).unwrap().within_box(bound));
        let mask: Vec<i8> = (0..4).map(|i| if (seed >> i) & 1 == 1 { -1 } else { 1 }).collect();
        prop_assert!(apply_sign_flip(&arch, &theta, 1, &mask).unwrap().within_box(bound));
        let relu = Architecture::uniform(2, &[4, 3], Activation::Relu).unwrap();
        let unit = apply_scaling(&relu, &theta, &ScalingSpec::uniform(2, 3, 1.0)).unwrap();
        prop_assert!(unit.within_box(bound));
    }

    #[test]
    fn sign_flip_preserves_tanh_function(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let arch = Architecture::uniform(3, &[5, 2], Activation::Tanh).unwrap();
        let theta = uniform_params(&arch, 1.0, &mut rng);
        let mask: Vec<i8> = (0..2).map(|i| if (seed >> i) & 1 == 1 { -1 } else { 1 }).collect();
        let flipped = apply_sign_flip(&arch, &theta, 2, &mask).unwrap();
        prop_assert!(output_gap(&arch, &theta, &flipped, &ball_samples(3, 1.0, 200, seed)) <= 1e-9);
    }

    #[test]
    fn positive_scaling_preserves_leaky_relu_function(seed in any::<u64>(), alpha in 0.05f64..20.0) {
        let mut rng = seeded(seed);
        let arch = Architecture::uniform(2, &[4], Activation::LeakyRelu(0.2)).unwrap();
        let theta = uniform_params(&arch, 1.0, &mut rng);
        let scaled = apply_scaling(&arch, &theta, &ScalingSpec::uniform(1, 4, alpha)).unwrap();
        prop_assert!(output_gap(&arch, &theta, &scaled, &ball_samples(2, 1.0, 200, seed)) <= 1e-9);
    }

    #[test]
    fn pooling_is_invariant_within_regions(seed in any::<u64>(), kind_ix in 0usize..3) {
        let kind = [PoolKind::Max, PoolKind::Min, PoolKind::Avg][kind_ix];
        let mut rng = seeded(seed);
        let rows: Vec<Vec<f64>> = (0..6).map(|_| (0..3).map(|_| rand::Rng::gen_range(&mut rng, -1.0..1.0)).collect()).collect();
        let w = Matrix::from_rows(&rows).unwrap();
        let b: Vec<f64> = (0..6).map(|_| rand::Rng::gen_range(&mut rng, -1.0..1.0)).collect();
        let part = PoolingPartition::contiguous(6, 3, kind).unwrap();
        let perm = [2, 0, 1, 4, 5, 3];
        let (w2, b2) = apply_pooling_permutation(&w, &b, &part, &perm).unwrap();
        for x in ball_samples(3, 1.0, 50, seed) {
            prop_assert_eq!(pooled_forward(&w, &b, &part, &x), pooled_forward(&w2, &b2, &part, &x));
        }
    }

    #[test]
    fn canonical_form_collapses_orbits(seed in any::<u64>()) {
        let (_, theta, pi) = net_and_perm(seed, 3, 8);
        let a = canonicalize(&theta);
        let b = canonicalize(&apply_permutation(&theta, &pi).unwrap());
        prop_assert!(a.params.bit_eq(&b.params));
        prop_assert!(apply_permutation(&theta, &a.witness).unwrap().bit_eq(&a.params));
    }

    #[test]
    fn distinct_images_are_delta_separated(seed in any::<u64>()) {
        let (arch, mut theta, _) = net_and_perm(seed, 2, 4);
        if seed % 3 == 0 && arch.hidden_widths[0] >= 2 {
            permsym_core::verify::duplicate_neuron(&mut theta, 0, 0, 1);
        }
        let profile = symmetry_profile(&theta);
        let images = permutation_orbit(&arch, &theta).unwrap();
        prop_assert_eq!(num_bigint::BigUint::from(images.len()), profile.total_multiplicity.clone());
        for i in 0..images.len() {
            for j in i + 1..images.len() {
                prop_assert!(images[i].linf_distance(&images[j]) >= profile.delta_min);
            }
        }
    }

    #[test]
    fn effective_volume_times_discount_is_total(widths in prop::collection::vec(1usize..40, 1..4), b in 0.5f64..3.0) {
        let arch = Architecture::uniform(2, &widths, Activation::Relu).unwrap();
        let v = effective_volume(&arch, b).unwrap();
        let discount: f64 = widths.iter().map(|&d| permsym_core::bigmath::ln_factorial(d as u64)).sum();
        prop_assert!((v.log_effective + discount - v.log_total).abs() <= 1e-12 * v.log_total.abs().max(1.0));
    }

    #[test]
    fn permuted_pairs_are_decided_structurally_and_symmetrically(seed in any::<u64>()) {
        let (arch, theta, pi) = net_and_perm(seed, 3, 6);
        let other = apply_permutation(&theta, &pi).unwrap();
        let opts = EquivalenceOptions::default();
        let ab = decide_equivalence(&arch, &theta, &other, 1.0, &opts).unwrap();
        let ba = decide_equivalence(&arch, &other, &theta, 1.0, &opts).unwrap();
        prop_assert_eq!(ab.kind, VerdictKind::StructurallyEqualByPermutation);
        prop_assert_eq!(ba.kind, ab.kind);
        let w = ab.witness.unwrap();
        prop_assert!(apply_permutation(&theta, &w).unwrap().bit_eq(&other));
    }

    #[test]
    fn distinguished_verdicts_are_sound_and_symmetric(seed in any::<u64>(), bump in 1e-6f64..0.5) {
        let (arch, theta, _) = net_and_perm(seed, 2, 4);
        let mut flat = theta.to_flat();
        let last = flat.len() - 1;
        flat[last] += bump;
        let other = NetworkParams::from_flat(&arch, &flat).unwrap();
        let opts = EquivalenceOptions { n_samples: 256, ..Default::default() };
        let ab = decide_equivalence(&arch, &theta, &other, 1.0, &opts).unwrap();
        let ba = decide_equivalence(&arch, &other, &theta, 1.0, &opts).unwrap();
        prop_assert_eq!(ab.kind, ba.kind);
        prop_assert_eq!(ab.kind, VerdictKind::Distinguished);
        let x = ab.distinguishing_input.unwrap();
        let gap = (forward(&arch, &theta, &x).unwrap()[0] - forward(&arch, &other, &x).unwrap()[0]).abs();
        prop_assert!(gap > opts.tolerance);
    }

    #[test]
    fn loss_is_constant_on_orbits(seed in any::<u64>()) {
        let (arch, theta, pi) = net_and_perm(seed, 3, 6);
        let teacher = uniform_params(&arch, 1.0, &mut seeded(seed ^ 7));
        let data = Dataset::teacher_student(&arch, &teacher, 16, 1.0, seed).unwrap();
        let a = mean_squared_error(&arch, &theta, &data).unwrap();
        let b = mean_squared_error(&arch, &apply_permutation(&theta, &pi).unwrap(), &data).unwrap();
        prop_assert!((a - b).abs() <= 1e-12);
    }
}

fn random_points(seed: u64, n: usize, dim: usize) -> MetricSpaceSample {
    let mut rng = seeded(seed);
    let pts = (0..n)
        .map(|_| {
            (0..dim)
                .map(|_| rand::Rng::gen_range(&mut rng, -1.0..1.0))
                .collect()
        })
        .collect();
    MetricSpaceSample::new(pts, MetricKind::LinfParams, format!("random seed {seed}")).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sandwich_and_greedy_ordering(seed in any::<u64>(), n in 2usize..40, dim in 1usize..4, eps in 0.02f64..1.5) {
        let space = random_points(seed, n, dim);
        let cover = exact_covering_number(&space, eps).unwrap();
        prop_assert!(exact_packing_number(&space, 2.0 * eps).unwrap() <= cover);
        prop_assert!(cover <= exact_packing_number(&space, eps / 2.0).unwrap());
        prop_assert!(greedy_covering_estimate(&space, eps).unwrap() >= cover);
        prop_assert!(greedy_packing_estimate(&space, eps).unwrap() <= exact_packing_number(&space, eps).unwrap());
    }
}
