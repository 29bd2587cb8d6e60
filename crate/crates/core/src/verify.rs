//! Named property suites with fixed seeds, reported as pass/fail checks.

use serde::Serialize;

use crate::activation::Activation;
use crate::basin::{amplification_check, equivariance_gap, Dataset, InitKind, TrainConfig};
use crate::bounds::volume_covering_bound;
use crate::canonical::{canonicalize, effective_volume, permutation_orbit, symmetry_profile};
use crate::empirical::{exact_covering_number, exact_packing_number, MetricSpaceSample};
use crate::equivalence::ball_samples;
use crate::error::{Error, Result};
use crate::nn::{forward, Architecture, NetworkParams};
use crate::rng::{random_architecture, seeded, uniform_params};
use crate::transforms::{
    apply_permutation, apply_scaling, apply_sign_flip, PermutationSpec, ScalingSpec,
};

pub const SUITES: [&str; 7] = [
    "theorem1",
    "table1",
    "canonical",
    "sandwich",
    "amplification",
    "equivariance",
    "all",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
}

impl Check {
    fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check {
            name: name.into(),
            passed: value <= threshold,
            value,
            threshold,
        }
    }

    fn holds(name: impl Into<String>, ok: bool) -> Self {
        Check {
            name: name.into(),
            passed: ok,
            value: if ok { 1.0 } else { 0.0 },
            threshold: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub passed: bool,
    pub checks: Vec<Check>,
}

fn report(suite: &str, checks: Vec<Check>) -> SuiteReport {
    SuiteReport {
        suite: suite.to_string(),
        passed: checks.iter().all(|c| c.passed),
        checks,
    }
}

fn output_gap(
    arch: &Architecture,
    a: &NetworkParams,
    b: &NetworkParams,
    xs: &[Vec<f64>],
) -> Result<f64> {
    let mut worst = 0.0f64;
    for x in xs {
        let (fa, fb) = (forward(arch, a, x)?, forward(arch, b, x)?);
        worst = fa
            .iter()
            .zip(&fb)
            .map(|(p, q)| (p - q).abs())
            .fold(worst, f64::max);
    }
    Ok(worst)
}

/// Permuted networks compute the same outputs.
pub fn theorem1(seed: u64) -> Result<SuiteReport> {
    let mut rng = seeded(seed);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let arch = random_architecture(3, 4, 8, &mut rng);
        let theta = uniform_params(&arch, 1.0, &mut rng);
        let xs = ball_samples(arch.input_dim, 1.0, 200, seed);
        for _ in 0..5 {
            let pi = PermutationSpec::random(&arch, &mut rng);
            worst = worst.max(output_gap(
                &arch,
                &theta,
                &apply_permutation(&theta, &pi)?,
                &xs,
            )?);
        }
    }
    Ok(report(
        "theorem1",
        vec![Check::at_most("max output gap", worst, 1e-9)],
    ))
}

/// Scaling needs positive homogeneity and sign flips need oddness; admitted transforms are exact.
pub fn table1(seed: u64) -> Result<SuiteReport> {
    let mut rng = seeded(seed);
    let mut checks = Vec::new();
    for act in Activation::TABLE {
        let arch = Architecture::uniform(3, &[4, 3], act)?;
        let theta = uniform_params(&arch, 1.0, &mut rng);
        let xs = ball_samples(3, 1.0, 100, seed);
        let scaled = apply_scaling(&arch, &theta, &ScalingSpec::uniform(1, 4, 2.0));
        let flipped = apply_sign_flip(&arch, &theta, 1, &[-1, 1, -1, 1]);
        for (kind, result, expected) in [
            ("scaling", scaled, act.is_positive_homogeneous()),
            ("sign flip", flipped, act.is_odd()),
        ] {
            let ok = match result {
                Ok(p) => expected && output_gap(&arch, &theta, &p, &xs)? == 0.0,
                Err(Error::Unsupported(_)) => !expected,
                Err(e) => return Err(e),
            };
            checks.push(Check::holds(format!("{kind} under {act}"), ok));
        }
    }
    Ok(report("table1", checks))
}

/// Orbit collapse of canonical forms and exact counting of permutation images.
pub fn canonical(seed: u64) -> Result<SuiteReport> {
    let mut rng = seeded(seed);
    let mut collapsed = true;
    for _ in 0..200 {
        let arch = random_architecture(3, 3, 5, &mut rng);
        let theta = uniform_params(&arch, 1.0, &mut rng);
        let pi = PermutationSpec::random(&arch, &mut rng);
        collapsed &= canonicalize(&apply_permutation(&theta, &pi)?)
            .params
            .bit_eq(&canonicalize(&theta).params);
    }
    let mut counted = true;
    for dup in [false, true] {
        let arch = Architecture::uniform(2, &[4, 3], Activation::Tanh)?;
        let mut theta = uniform_params(&arch, 1.0, &mut rng);
        if dup {
            duplicate_neuron(&mut theta, 0, 0, 2);
        }
        let images = permutation_orbit(&arch, &theta)?.len();
        let predicted: usize =
            num_traits::ToPrimitive::to_usize(&symmetry_profile(&theta).total_multiplicity)
                .unwrap_or(usize::MAX);
        counted &= images == predicted;
    }
    let volume = effective_volume(&Architecture::uniform(1, &[2], Activation::Relu)?, 1.0)?;
    Ok(report(
        "canonical",
        vec![
            Check::holds("orbit collapse", collapsed),
            Check::holds("image count equals product of d*", counted),
            Check::at_most(
                "1-2-1 effective volume error",
                (volume.effective.unwrap_or(0.0) - 64.0).abs(),
                1e-9,
            ),
        ],
    ))
}

/// Makes hidden neuron `dst` of layer `layer` (0-based) a copy of `src`,
/// including its outgoing weights.
pub fn duplicate_neuron(theta: &mut NetworkParams, layer: usize, src: usize, dst: usize) {
    let row = theta.layers[layer].weights.row(src).to_vec();
    theta.layers[layer]
        .weights
        .row_mut(dst)
        .copy_from_slice(&row);
    theta.layers[layer].bias[dst] = theta.layers[layer].bias[src];
    let next = &mut theta.layers[layer + 1].weights;
    for r in 0..next.rows() {
        next[(r, dst)] = next[(r, src)];
    }
}

/// `M(2ε) ≤ N(ε) ≤ M(ε/2)` and the volume bound on small grids.
pub fn sandwich(_seed: u64) -> Result<SuiteReport> {
    let mut checks = Vec::new();
    for (dim, res) in [(1usize, 9usize), (2, 7)] {
        let grid = MetricSpaceSample::grid(dim, res, 1.0)?;
        let mut sandwich_ok = true;
        let mut volume_ok = true;
        for k in 0..6 {
            let eps = 0.15 + 0.3 * k as f64;
            let n = exact_covering_number(&grid, eps)?;
            sandwich_ok &= exact_packing_number(&grid, 2.0 * eps)? <= n;
            let m_half = exact_packing_number(&grid, eps / 2.0)?;
            sandwich_ok &= n <= m_half;
            volume_ok &=
                m_half as f64 <= volume_covering_bound(dim as u64, 2f64.powi(dim as i32), eps)?;
        }
        checks.push(Check::holds(
            format!("sandwich on {res}^{dim} grid"),
            sandwich_ok,
        ));
        checks.push(Check::holds(
            format!("volume bound on {res}^{dim} grid"),
            volume_ok,
        ));
    }
    Ok(report("sandwich", checks))
}

/// Reference `θ*` for the amplification checks; `duplicated` makes both hidden neurons identical.
pub fn amplification_reference(duplicated: bool) -> (Architecture, NetworkParams) {
    let arch = Architecture::uniform(1, &[2], Activation::Relu).expect("valid");
    let flat: [f64; 7] = if duplicated {
        [0.2, 0.2, 0.1, 0.1, 0.3, 0.3, 0.0]
    } else {
        [0.2, -0.2, 0.1, -0.1, 0.3, -0.3, 0.0]
    };
    let theta = NetworkParams::from_flat(&arch, &flat).expect("valid");
    (arch, theta)
}

/// Hits near any image of `θ*` versus near `θ*` itself under uniform initialization.
pub fn amplification(seed: u64) -> Result<SuiteReport> {
    let kind = InitKind::Uniform { a: -0.5, b: 0.5 };
    let (arch, distinct) = amplification_reference(false);
    let r = amplification_check(&arch, &kind, &distinct, 0.2, 100_000, seed)?;
    let (arch, dup) = amplification_reference(true);
    let d = amplification_check(&arch, &kind, &dup, 0.2, 20_000, seed)?;
    Ok(report(
        "amplification",
        vec![
            Check::at_most("|ratio − 2| / se", (r.ratio - 2.0).abs() / r.ratio_se, 3.0),
            Check::holds(
                "duplicated rows ratio is 1",
                d.single_hits == d.orbit_hits && d.single_hits > 0,
            ),
        ],
    ))
}

/// Gradient descent commutes with permutations.
pub fn equivariance(seed: u64) -> Result<SuiteReport> {
    let mut rng = seeded(seed);
    let arch = Architecture::uniform(2, &[4], Activation::Tanh)?;
    let teacher = uniform_params(&arch, 1.0, &mut rng);
    let data = Dataset::teacher_student(&arch, &teacher, 32, 1.0, seed)?;
    let cfg = TrainConfig {
        step_size: 0.1,
        max_iters: 200,
        grad_threshold: 0.0,
    };
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let init = uniform_params(&arch, 1.0, &mut rng);
        let pi = PermutationSpec::random(&arch, &mut rng);
        worst = worst.max(equivariance_gap(&arch, &init, &pi, &data, &cfg)?);
    }
    Ok(report(
        "equivariance",
        vec![Check::at_most("max parameter gap", worst, 1e-8)],
    ))
}

/// Runs one named suite, or every suite for `"all"`.
pub fn run_suite(name: &str, seed: u64) -> Result<Vec<SuiteReport>> {
    Ok(match name {
        "theorem1" => vec![theorem1(seed)?],
        "table1" => vec![table1(seed)?],
        "canonical" => vec![canonical(seed)?],
        "sandwich" => vec![sandwich(seed)?],
        "amplification" => vec![amplification(seed)?],
        "equivariance" => vec![equivariance(seed)?],
        "all" => vec![
            theorem1(seed)?,
            table1(seed)?,
            canonical(seed)?,
            sandwich(seed)?,
            amplification(seed)?,
            equivariance(seed)?,
        ],
        other => {
            return Err(Error::Config(format!(
                "unknown suite {other:?}; available: {}",
                SUITES.join(", ")
            )))
        }
    })
}
