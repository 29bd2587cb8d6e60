//! Functional-equivalence decisions: structural (canonical forms) and sampled.
//!
//! Sampled verdicts only ever look at the closed L2 ball of radius `B_x`.
//! A `NumericallyEquivalent` verdict is evidence, not proof.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::canonical::canonicalize;
use crate::error::{structure, Result};
use crate::nn::{check_shapes, forward, Architecture, NetworkParams};
use crate::rng::seeded;
use crate::transforms::PermutationSpec;

pub const DEFAULT_TOLERANCE: f64 = 1e-7;
pub const DEFAULT_SAMPLES: usize = 4096;

fn first_primes(n: usize) -> Vec<u64> {
    let mut primes = Vec::with_capacity(n);
    let mut k = 2u64;
    while primes.len() < n {
        if primes
            .iter()
            .take_while(|&&p| p * p <= k)
            .all(|&p| !k.is_multiple_of(p))
        {
            primes.push(k);
        }
        k += 1;
    }
    primes
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

/// Deterministic sample points in the closed ball `‖x‖₂ ≤ radius`.
///
/// The origin and the `2·dim` points `±radius·e_i` come first, then a
/// Cranley–Patterson shifted Halton sequence in `dim + 1` coordinates, mapped
/// to a Gaussian direction (first `dim`) and radius `radius·u^{1/dim}` (last).
pub fn ball_samples(dim: usize, radius: f64, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut pts = Vec::with_capacity(n);
    pts.push(vec![0.0; dim]);
    for i in 0..dim {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; dim];
            e[i] = s * radius;
            pts.push(e);
        }
    }
    pts.truncate(n);

    let primes = first_primes(dim + 1);
    let mut rng = seeded(seed);
    let shift: Vec<f64> = (0..=dim).map(|_| rng.gen::<f64>()).collect();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let open = |u: f64| u.clamp(1e-15, 1.0 - 1e-15);
    let mut index = 1u64;
    while pts.len() < n {
        let u: Vec<f64> = primes
            .iter()
            .zip(&shift)
            .map(|(&p, &s)| (radical_inverse(index, p) + s).fract())
            .collect();
        index += 1;
        let mut x: Vec<f64> = u[..dim]
            .iter()
            .map(|&v| normal.inverse_cdf(open(v)))
            .collect();
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let r = radius * u[dim].powf(1.0 / dim as f64);
        for v in &mut x {
            *v *= r / norm;
        }
        pts.push(x);
    }
    pts
}

/// Largest sampled output gap and where it was attained.
#[derive(Debug, Clone, PartialEq)]
pub struct SupEstimate {
    pub value: f64,
    pub argmax: Vec<f64>,
}

/// `max_x ‖f₁(x) − f₂(x)‖∞` over the points of [`ball_samples`].
pub fn sup_estimate(
    f1: (&Architecture, &NetworkParams),
    f2: (&Architecture, &NetworkParams),
    input_radius: f64,
    n_samples: usize,
    seed: u64,
) -> Result<SupEstimate> {
    check_shapes(f1.0, f1.1)?;
    check_shapes(f2.0, f2.1)?;
    if f1.0.input_dim != f2.0.input_dim || f1.0.output_dim != f2.0.output_dim {
        return Err(structure(format!(
            "dimension mismatch: {} vs {}",
            f1.0.label(),
            f2.0.label()
        )));
    }
    if n_samples == 0 {
        return Err(structure("n_samples must be at least 1"));
    }
    let pts = ball_samples(f1.0.input_dim, input_radius, n_samples, seed);
    let gaps = pts
        .par_iter()
        .map(|x| {
            let a = forward(f1.0, f1.1, x)?;
            let b = forward(f2.0, f2.1, x)?;
            Ok(a.iter()
                .zip(&b)
                .map(|(p, q)| (p - q).abs())
                .fold(0.0, f64::max))
        })
        .collect::<Result<Vec<f64>>>()?;
    let (best, value) =
        gaps.iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| {
                if v > bv {
                    (i, v)
                } else {
                    (bi, bv)
                }
            });
    Ok(SupEstimate {
        value,
        argmax: pts[best].clone(),
    })
}

/// Sampled lower estimate of `sup_{‖x‖≤B_x} |f₁(x) − f₂(x)|`.
pub fn sampled_sup_distance(
    f1: (&Architecture, &NetworkParams),
    f2: (&Architecture, &NetworkParams),
    input_radius: f64,
    n_samples: usize,
    seed: u64,
) -> Result<f64> {
    Ok(sup_estimate(f1, f2, input_radius, n_samples, seed)?.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictKind {
    StructurallyEqualByPermutation,
    NumericallyEquivalent,
    Distinguished,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceVerdict {
    pub kind: VerdictKind,
    pub sup_distance_estimate: f64,
    /// Maps the first parameters onto the second.
    pub witness: Option<PermutationSpec>,
    pub distinguishing_input: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquivalenceOptions {
    pub tolerance: f64,
    pub n_samples: usize,
    pub seed: u64,
}

impl Default for EquivalenceOptions {
    fn default() -> Self {
        EquivalenceOptions {
            tolerance: DEFAULT_TOLERANCE,
            n_samples: DEFAULT_SAMPLES,
            seed: 0,
        }
    }
}

/// Decides whether two parameterizations of one architecture compute the same function.
pub fn decide_equivalence(
    arch: &Architecture,
    p1: &NetworkParams,
    p2: &NetworkParams,
    input_radius: f64,
    opts: &EquivalenceOptions,
) -> Result<EquivalenceVerdict> {
    check_shapes(arch, p1)?;
    check_shapes(arch, p2)?;
    let c1 = canonicalize(p1);
    let c2 = canonicalize(p2);
    if c1.params.bit_eq(&c2.params) {
        let witness = PermutationSpec::compose(&c2.witness.inverse(), &c1.witness)?;
        return Ok(EquivalenceVerdict {
            kind: VerdictKind::StructurallyEqualByPermutation,
            sup_distance_estimate: 0.0,
            witness: Some(witness),
            distinguishing_input: None,
        });
    }
    let est = sup_estimate(
        (arch, p1),
        (arch, p2),
        input_radius,
        opts.n_samples,
        opts.seed,
    )?;
    if est.value <= opts.tolerance {
        Ok(EquivalenceVerdict {
            kind: VerdictKind::NumericallyEquivalent,
            sup_distance_estimate: est.value,
            witness: None,
            distinguishing_input: None,
        })
    } else {
        Ok(EquivalenceVerdict {
            kind: VerdictKind::Distinguished,
            sup_distance_estimate: est.value,
            witness: None,
            distinguishing_input: Some(est.argmax),
        })
    }
}

/// Same as [`decide_equivalence`] but for two architectures that must match.
pub fn decide_equivalence_checked(
    f1: (&Architecture, &NetworkParams),
    f2: (&Architecture, &NetworkParams),
    input_radius: f64,
    opts: &EquivalenceOptions,
) -> Result<EquivalenceVerdict> {
    if f1.0 != f2.0 {
        return Err(structure(format!(
            "architecture mismatch: {} vs {}",
            f1.0.label(),
            f2.0.label()
        )));
    }
    decide_equivalence(f1.0, f1.1, f2.1, input_radius, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::Activation;
    use crate::rng::uniform_params;
    use crate::transforms::{apply_permutation, apply_scaling, ScalingSpec};

    fn net(seed: u64, act: Activation) -> (Architecture, NetworkParams) {
        let arch = Architecture::uniform(3, &[5, 4], act).unwrap();
        let p = uniform_params(&arch, 1.0, &mut seeded(seed));
        (arch, p)
    }

    #[test]
    fn samples_are_in_ball_and_reproducible() {
        let a = ball_samples(4, 2.5, 300, 9);
        assert_eq!(a.len(), 300);
        assert_eq!(a, ball_samples(4, 2.5, 300, 9));
        assert_ne!(a, ball_samples(4, 2.5, 300, 10));
        assert_eq!(a[1], vec![2.5, 0.0, 0.0, 0.0]);
        assert_eq!(a[2], vec![-2.5, 0.0, 0.0, 0.0]);
        for x in &a {
            assert!(x.iter().map(|v| v * v).sum::<f64>().sqrt() <= 2.5 * (1.0 + 1e-12));
        }
        assert_eq!(ball_samples(2, 1.0, 1, 0), vec![vec![0.0, 0.0]]);
    }

    #[test]
    fn halton_first_terms() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(3, 2), 0.75);
        assert!((radical_inverse(5, 3) - 7.0 / 9.0).abs() < 1e-15);
        assert_eq!(first_primes(5), vec![2, 3, 5, 7, 11]);
    }

    #[test]
    fn sup_distance_cases() {
        let (arch, p) = net(1, Activation::Tanh);
        assert_eq!(
            sampled_sup_distance((&arch, &p), (&arch, &p), 1.0, 256, 0).unwrap(),
            0.0
        );

        let pi = PermutationSpec::random(&arch, &mut seeded(2));
        let q = apply_permutation(&p, &pi).unwrap();
        assert!(sampled_sup_distance((&arch, &p), (&arch, &q), 1.0, 256, 0).unwrap() <= 1e-9);

        let mut r = p.clone();
        r.layers.last_mut().unwrap().bias[0] += 1.0;
        assert!(
            sampled_sup_distance((&arch, &p), (&arch, &r), 1.0, 256, 0).unwrap() >= 1.0 - 1e-12
        );

        let other = Architecture::uniform(2, &[5, 4], Activation::Tanh).unwrap();
        let o = NetworkParams::zeros(&other);
        assert!(matches!(
            sampled_sup_distance((&arch, &p), (&other, &o), 1.0, 16, 0),
            Err(crate::Error::Structure(_))
        ));
        assert!(sampled_sup_distance((&arch, &p), (&arch, &p), 1.0, 0, 0).is_err());
    }

    #[test]
    fn permutation_is_structural() {
        let (arch, p) = net(3, Activation::Sigmoid);
        let pi = PermutationSpec::random(&arch, &mut seeded(4));
        let q = apply_permutation(&p, &pi).unwrap();
        let v = decide_equivalence(&arch, &p, &q, 1.0, &Default::default()).unwrap();
        assert_eq!(v.kind, VerdictKind::StructurallyEqualByPermutation);
        let w = v.witness.unwrap();
        assert!(apply_permutation(&p, &w).unwrap().bit_eq(&q));
    }

    #[test]
    fn scaling_is_numerical() {
        let (arch, p) = net(5, Activation::Relu);
        let q = apply_scaling(&arch, &p, &ScalingSpec::uniform(1, 5, 2.0)).unwrap();
        let v = decide_equivalence(&arch, &p, &q, 1.0, &Default::default()).unwrap();
        assert_eq!(v.kind, VerdictKind::NumericallyEquivalent);
        assert!(v.witness.is_none());
    }

    #[test]
    fn perturbation_is_distinguished_and_sound() {
        let (arch, p) = net(6, Activation::Tanh);
        let mut q = p.clone();
        q.layers[2].weights[(0, 1)] += 0.5;
        let opts = EquivalenceOptions::default();
        let v = decide_equivalence(&arch, &p, &q, 1.0, &opts).unwrap();
        assert_eq!(v.kind, VerdictKind::Distinguished);
        let x = v.distinguishing_input.unwrap();
        let gap = (forward(&arch, &p, &x).unwrap()[0] - forward(&arch, &q, &x).unwrap()[0]).abs();
        assert!(gap > opts.tolerance);
        assert_eq!(gap, v.sup_distance_estimate);
        let back = decide_equivalence(&arch, &q, &p, 1.0, &opts).unwrap();
        assert_eq!(back.kind, v.kind);
    }

    #[test]
    fn architecture_mismatch() {
        let (arch, p) = net(7, Activation::Tanh);
        let other = Architecture::uniform(3, &[5, 4], Activation::Relu).unwrap();
        let r = decide_equivalence_checked((&arch, &p), (&other, &p), 1.0, &Default::default());
        assert!(matches!(r, Err(crate::Error::Structure(_))));
    }

    #[test]
    fn verdict_json() {
        let v = EquivalenceVerdict {
            kind: VerdictKind::NumericallyEquivalent,
            sup_distance_estimate: 0.0,
            witness: None,
            distinguishing_input: None,
        };
        let s = serde_json::to_string(&v).unwrap();
        assert!(s.contains("\"numerically_equivalent\""));
    }
}
