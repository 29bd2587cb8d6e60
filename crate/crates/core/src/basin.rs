//! Random restarts of gradient descent on tiny networks, clustered by
//! canonical form, and the geometry of permutation orbits under symmetric
//! initialization.

use std::io::{Read, Write};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::canonical::{canonicalize, permutation_orbit, symmetry_profile_with, SymmetryProfile};
use crate::error::{domain, structure, Error, Result};
use crate::nn::{
    accumulate_gradient, check_shapes, forward, Architecture, NetworkParams, SquaredError,
};
use crate::rng::{derive_seed, seeded, uniform_in_ball};
use crate::transforms::{apply_permutation, PermutationSpec};

/// Loss above which a run counts as diverged.
pub const DIVERGENCE_LOSS: f64 = 1e12;
/// Orbits with more images than this are tested through canonical forms instead of enumeration.
pub const ORBIT_ENUMERATION_LIMIT: usize = 40_320;

/// Per-entry distribution. Every weight of a layer shares one law, and so does every bias.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitKind {
    Uniform {
        a: f64,
        b: f64,
    },
    Normal {
        mean: f64,
        std: f64,
    },
    /// `N(0, 2/(fan_in + fan_out))` for weights and biases.
    Xavier,
    /// `N(0, 2/fan_in)` for weights and biases.
    He,
}

#[derive(Debug, Clone, Copy)]
enum EntryLaw {
    Constant(f64),
    Uniform(f64, f64),
    Normal(Normal<f64>),
}

impl EntryLaw {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            EntryLaw::Constant(c) => c,
            EntryLaw::Uniform(a, b) => rng.gen_range(a..=b),
            EntryLaw::Normal(n) => n.sample(rng),
        }
    }
}

impl InitKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            InitKind::Uniform { a, b } if !(a.is_finite() && b.is_finite() && a <= b) => Err(
                domain(format!("uniform init needs finite a <= b, got ({a}, {b})")),
            ),
            InitKind::Normal { mean, std }
                if !(mean.is_finite() && std > 0.0 && std.is_finite()) =>
            {
                Err(domain(format!(
                    "normal init needs finite mean and std > 0, got ({mean}, {std})"
                )))
            }
            _ => Ok(()),
        }
    }

    /// Variance of each entry of a layer with the given fan-in and fan-out.
    pub fn variance(&self, fan_in: usize, fan_out: usize) -> f64 {
        match *self {
            InitKind::Uniform { a, b } => (b - a) * (b - a) / 12.0,
            InitKind::Normal { std, .. } => std * std,
            InitKind::Xavier => 2.0 / (fan_in + fan_out) as f64,
            InitKind::He => 2.0 / fan_in as f64,
        }
    }

    fn law(&self, fan_in: usize, fan_out: usize) -> EntryLaw {
        match *self {
            InitKind::Uniform { a, b } if a == b => EntryLaw::Constant(a),
            InitKind::Uniform { a, b } => EntryLaw::Uniform(a, b),
            InitKind::Normal { mean, std } => {
                EntryLaw::Normal(Normal::new(mean, std).expect("validated"))
            }
            InitKind::Xavier | InitKind::He => EntryLaw::Normal(
                Normal::new(0.0, self.variance(fan_in, fan_out).sqrt()).expect("positive variance"),
            ),
        }
    }
}

/// JSON form: the [`InitKind`] fields plus `seed`, e.g. `{"kind":"he","seed":1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InitScheme {
    #[serde(flatten)]
    pub kind: InitKind,
    pub seed: u64,
}

impl<'de> Deserialize<'de> for InitScheme {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let mut map = serde_json::Map::deserialize(deserializer)?;
        let seed = map
            .remove("seed")
            .ok_or_else(|| D::Error::missing_field("seed"))?;
        let seed = serde_json::from_value(seed).map_err(D::Error::custom)?;
        let kind: InitKind = serde_json::from_value(serde_json::Value::Object(map.clone()))
            .map_err(D::Error::custom)?;
        let known = serde_json::to_value(kind).map_err(D::Error::custom)?;
        if let Some(extra) = map.keys().find(|k| known.get(k.as_str()).is_none()) {
            return Err(D::Error::unknown_field(
                extra,
                &["kind", "a", "b", "mean", "std", "seed"],
            ));
        }
        Ok(InitScheme { kind, seed })
    }
}

/// Draws parameters layer by layer, weights row-major then biases.
pub fn initialize_with<R: Rng + ?Sized>(
    arch: &Architecture,
    kind: &InitKind,
    rng: &mut R,
) -> Result<NetworkParams> {
    arch.validate()?;
    kind.validate()?;
    let mut params = NetworkParams::zeros(arch);
    for layer in &mut params.layers {
        let law = kind.law(layer.in_dim(), layer.out_dim());
        for w in layer.weights.as_mut_slice() {
            *w = law.sample(rng);
        }
        for b in &mut layer.bias {
            *b = law.sample(rng);
        }
    }
    Ok(params)
}

pub fn initialize(arch: &Architecture, scheme: &InitScheme) -> Result<NetworkParams> {
    initialize_with(arch, &scheme.kind, &mut seeded(scheme.seed))
}

/// Input/target pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn new(inputs: Vec<Vec<f64>>, targets: Vec<Vec<f64>>) -> Result<Self> {
        if inputs.is_empty() {
            return Err(domain("dataset is empty"));
        }
        if inputs.len() != targets.len() {
            return Err(structure(format!(
                "{} inputs but {} targets",
                inputs.len(),
                targets.len()
            )));
        }
        let (dx, dy) = (inputs[0].len(), targets[0].len());
        if inputs.iter().any(|x| x.len() != dx) || targets.iter().any(|y| y.len() != dy) {
            return Err(structure("ragged dataset"));
        }
        Ok(Dataset { inputs, targets })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.inputs[0].len()
    }

    pub fn output_dim(&self) -> usize {
        self.targets[0].len()
    }

    /// `n` inputs uniform in the ball of radius `input_radius`, labeled by the teacher.
    pub fn teacher_student(
        arch: &Architecture,
        teacher: &NetworkParams,
        n: usize,
        input_radius: f64,
        seed: u64,
    ) -> Result<Self> {
        check_shapes(arch, teacher)?;
        let mut rng = seeded(seed);
        let inputs: Vec<Vec<f64>> = (0..n)
            .map(|_| uniform_in_ball(arch.input_dim, input_radius, &mut rng))
            .collect();
        let targets = inputs
            .iter()
            .map(|x| forward(arch, teacher, x))
            .collect::<Result<_>>()?;
        Self::new(inputs, targets)
    }

    /// The four corners of the unit square labeled by exclusive or.
    pub fn xor() -> Self {
        let inputs = vec![
            vec![0.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
        ];
        let targets = vec![vec![0.0], vec![1.0], vec![1.0], vec![0.0]];
        Dataset { inputs, targets }
    }

    /// CSV with header `x0,…,x{d-1},y0,…`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let io = |e: csv::Error| Error::Serde(e.to_string());
        let mut w = csv::Writer::from_writer(writer);
        let header: Vec<String> = (0..self.input_dim())
            .map(|i| format!("x{i}"))
            .chain((0..self.output_dim()).map(|i| format!("y{i}")))
            .collect();
        w.write_record(&header).map_err(io)?;
        for (x, y) in self.inputs.iter().zip(&self.targets) {
            w.write_record(x.iter().chain(y).map(|v| format!("{v:.16e}")))
                .map_err(io)?;
        }
        w.flush().map_err(|e| Error::Serde(e.to_string()))
    }

    /// Reads the format of [`Dataset::write_csv`]; columns are split by their `x`/`y` prefix.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let io = |e: csv::Error| Error::Serde(e.to_string());
        let mut r = csv::Reader::from_reader(reader);
        let header = r.headers().map_err(io)?.clone();
        let is_x: Vec<bool> = header
            .iter()
            .map(|h| match h.chars().next() {
                Some('x') => Ok(true),
                Some('y') => Ok(false),
                _ => Err(Error::Serde(format!("unexpected column {h:?}"))),
            })
            .collect::<Result<_>>()?;
        let (mut inputs, mut targets) = (Vec::new(), Vec::new());
        for rec in r.records() {
            let rec = rec.map_err(io)?;
            let (mut x, mut y) = (Vec::new(), Vec::new());
            for (field, &input) in rec.iter().zip(&is_x) {
                let v: f64 = field
                    .trim()
                    .parse()
                    .map_err(|_| Error::Serde(format!("not a number: {field:?}")))?;
                if input {
                    x.push(v);
                } else {
                    y.push(v);
                }
            }
            inputs.push(x);
            targets.push(y);
        }
        Self::new(inputs, targets)
    }
}

/// Mean over the dataset of `Σ (f(x) − y)²`.
pub fn mean_squared_error(
    arch: &Architecture,
    params: &NetworkParams,
    data: &Dataset,
) -> Result<f64> {
    let total = data
        .inputs
        .iter()
        .zip(&data.targets)
        .map(|(x, y)| {
            let o = forward(arch, params, x)?;
            Ok(o.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
        })
        .sum::<Result<f64>>()?;
    Ok(total / data.len() as f64)
}

fn loss_and_gradient(
    arch: &Architecture,
    params: &NetworkParams,
    data: &Dataset,
) -> Result<(f64, NetworkParams)> {
    let scale = 1.0 / data.len() as f64;
    let mut grad = NetworkParams::zeros(arch);
    let mut loss = 0.0;
    for (x, y) in data.inputs.iter().zip(&data.targets) {
        loss += accumulate_gradient(arch, params, &SquaredError, x, y, scale, &mut grad)?;
    }
    Ok((loss * scale, grad))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub step_size: f64,
    pub max_iters: usize,
    /// Converged once the gradient's largest entry is at most this.
    pub grad_threshold: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            step_size: 0.05,
            max_iters: 5000,
            grad_threshold: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainStatus {
    Converged,
    MaxIterations,
    Diverged,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainRun {
    pub seed: u64,
    pub init: NetworkParams,
    pub final_params: NetworkParams,
    pub final_loss: f64,
    pub iterations: usize,
    pub grad_norm: f64,
    pub status: TrainStatus,
    pub canonical: NetworkParams,
    pub cluster: Option<usize>,
}

impl TrainRun {
    pub fn converged(&self) -> bool {
        self.status == TrainStatus::Converged
    }
}

/// Full-batch gradient descent with a fixed step on the mean squared error.
pub fn train(
    arch: &Architecture,
    init: &NetworkParams,
    data: &Dataset,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<TrainRun> {
    check_shapes(arch, init)?;
    if data.input_dim() != arch.input_dim || data.output_dim() != arch.output_dim {
        return Err(structure(
            "dataset dimensions do not match the architecture",
        ));
    }
    if !(cfg.step_size > 0.0 && cfg.step_size.is_finite()) {
        return Err(domain("step size must be positive"));
    }
    let mut theta = init.clone();
    let mut iterations = 0;
    let (status, loss, grad_norm) = loop {
        let (loss, grad) = match loss_and_gradient(arch, &theta, data) {
            Ok(v) => v,
            Err(Error::NonFinite { .. }) => {
                break (TrainStatus::Diverged, f64::INFINITY, f64::INFINITY)
            }
            Err(e) => return Err(e),
        };
        let grad_norm = grad.max_abs();
        if !loss.is_finite() || loss > DIVERGENCE_LOSS || !grad_norm.is_finite() {
            break (TrainStatus::Diverged, loss, grad_norm);
        }
        if grad_norm <= cfg.grad_threshold {
            break (TrainStatus::Converged, loss, grad_norm);
        }
        if iterations == cfg.max_iters {
            break (TrainStatus::MaxIterations, loss, grad_norm);
        }
        theta = theta.axpy(cfg.step_size, &grad);
        iterations += 1;
    };
    let canonical = canonicalize(&theta).params;
    Ok(TrainRun {
        seed,
        init: init.clone(),
        final_params: theta,
        final_loss: loss,
        iterations,
        grad_norm,
        status,
        canonical,
        cluster: None,
    })
}

/// `‖apply(train(θ⁰), π) − train(apply(θ⁰, π))‖∞` for one initialization.
pub fn equivariance_gap(
    arch: &Architecture,
    init: &NetworkParams,
    pi: &PermutationSpec,
    data: &Dataset,
    cfg: &TrainConfig,
) -> Result<f64> {
    let a = train(arch, init, data, cfg, 0)?;
    let b = train(arch, &apply_permutation(init, pi)?, data, cfg, 0)?;
    Ok(apply_permutation(&a.final_params, pi)?.linf_distance(&b.final_params))
}

/// True iff the canonical forms of `theta` and `reference` are within `tolerance` in L∞.
pub fn orbit_membership(
    arch: &Architecture,
    theta: &NetworkParams,
    reference: &NetworkParams,
    tolerance: f64,
) -> Result<bool> {
    check_shapes(arch, theta)?;
    check_shapes(arch, reference)?;
    Ok(canonicalize(theta)
        .params
        .linf_distance(&canonicalize(reference).params)
        <= tolerance)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cluster {
    pub id: usize,
    pub count: usize,
    /// Canonical parameters of the first run assigned, flattened.
    pub representative: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReferenceSummary {
    pub params: Vec<f64>,
    pub profile: SymmetryProfile,
    /// Converged runs within the cluster tolerance of some permutation image of θ*.
    pub orbit_hits: usize,
    pub orbit_fraction: f64,
    /// Converged runs within the cluster tolerance of θ* itself.
    pub single_hits: usize,
    pub single_fraction: f64,
    /// `single_fraction · Π d_l*`.
    pub predicted_orbit_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BasinSummary {
    pub n_runs: usize,
    pub n_converged: usize,
    pub n_diverged: usize,
    pub no_converged_runs: bool,
    pub cluster_tolerance: f64,
    pub clusters: Vec<Cluster>,
    pub reference: Option<ReferenceSummary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasinExperiment {
    pub summary: BasinSummary,
    pub runs: Vec<TrainRun>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasinConfig {
    pub init: InitKind,
    pub seed: u64,
    pub n_runs: usize,
    pub train: TrainConfig,
    /// `None` picks `δ̂/4` after a first pass at [`FIRST_PASS_TOLERANCE`].
    pub cluster_tolerance: Option<f64>,
}

pub const FIRST_PASS_TOLERANCE: f64 = 1e-6;

fn cluster_pass(runs: &[TrainRun], tol: f64) -> Vec<(usize, Vec<usize>)> {
    let mut clusters: Vec<(usize, Vec<usize>)> = Vec::new();
    for (i, run) in runs.iter().enumerate().filter(|(_, r)| r.converged()) {
        match clusters
            .iter_mut()
            .find(|(rep, _)| runs[*rep].canonical.linf_distance(&run.canonical) <= tol)
        {
            Some((_, members)) => members.push(i),
            None => clusters.push((i, vec![i])),
        }
    }
    clusters.sort_by(|a, b| {
        b.1.len().cmp(&a.1.len()).then_with(|| {
            let (x, y) = (runs[a.0].canonical.to_flat(), runs[b.0].canonical.to_flat());
            x.iter()
                .zip(&y)
                .map(|(p, q)| p.total_cmp(q))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    clusters
}

/// Trains `n_runs` seeded restarts in parallel and clusters converged runs by canonical form.
pub fn basin_experiment(
    arch: &Architecture,
    data: &Dataset,
    cfg: &BasinConfig,
) -> Result<BasinExperiment> {
    if cfg.n_runs == 0 {
        return Err(domain("n_runs must be at least 1"));
    }
    cfg.init.validate()?;
    let mut runs: Vec<TrainRun> = (0..cfg.n_runs as u64)
        .into_par_iter()
        .map(|i| {
            let seed = derive_seed(cfg.seed, i);
            let init = initialize(
                arch,
                &InitScheme {
                    kind: cfg.init,
                    seed,
                },
            )?;
            train(arch, &init, data, &cfg.train, seed)
        })
        .collect::<Result<_>>()?;

    let n_converged = runs.iter().filter(|r| r.converged()).count();
    let n_diverged = runs
        .iter()
        .filter(|r| r.status == TrainStatus::Diverged)
        .count();
    let first_tol = cfg.cluster_tolerance.unwrap_or(FIRST_PASS_TOLERANCE);
    let mut clusters = cluster_pass(&runs, first_tol);
    let mut tol = first_tol;
    if cfg.cluster_tolerance.is_none() {
        if let Some((rep, _)) = clusters.first() {
            let delta = symmetry_profile_with(&runs[*rep].canonical, Some(first_tol)).delta_min;
            if delta.is_finite() && delta / 4.0 > first_tol {
                tol = delta / 4.0;
                clusters = cluster_pass(&runs, tol);
            }
        }
    }
    for (id, (_, members)) in clusters.iter().enumerate() {
        for &m in members {
            runs[m].cluster = Some(id);
        }
    }

    let reference = match clusters.first() {
        None => None,
        Some((rep, _)) => {
            let star = &runs[*rep];
            let profile = symmetry_profile_with(&star.canonical, Some(first_tol));
            // Orbit hits include every single hit: the identity image is always tested.
            let images_possible: usize = arch
                .hidden_widths
                .iter()
                .try_fold(1usize, |acc, &d| {
                    (1..=d).try_fold(acc, |a, k| a.checked_mul(k))
                })
                .unwrap_or(usize::MAX);
            let images = if images_possible <= ORBIT_ENUMERATION_LIMIT {
                Some(permutation_orbit(arch, &star.final_params)?)
            } else {
                None
            };
            let mut single_hits = 0usize;
            let mut orbit_hits = 0usize;
            for r in runs.iter().filter(|r| r.converged()) {
                let single = r.final_params.linf_distance(&star.final_params) <= tol;
                let orbit = single
                    || match &images {
                        Some(imgs) => imgs
                            .iter()
                            .any(|img| r.final_params.linf_distance(img) <= tol),
                        None => orbit_membership(arch, &r.final_params, &star.final_params, tol)?,
                    };
                single_hits += single as usize;
                orbit_hits += orbit as usize;
            }
            let n = cfg.n_runs as f64;
            let multiplicity = num_traits::ToPrimitive::to_f64(&profile.total_multiplicity)
                .unwrap_or(f64::INFINITY);
            Some(ReferenceSummary {
                params: star.canonical.to_flat(),
                orbit_hits,
                orbit_fraction: orbit_hits as f64 / n,
                single_hits,
                single_fraction: single_hits as f64 / n,
                predicted_orbit_fraction: single_hits as f64 / n * multiplicity,
                profile,
            })
        }
    };
    let summary = BasinSummary {
        n_runs: cfg.n_runs,
        n_converged,
        n_diverged,
        no_converged_runs: n_converged == 0,
        cluster_tolerance: tol,
        clusters: clusters
            .iter()
            .enumerate()
            .map(|(id, (rep, members))| Cluster {
                id,
                count: members.len(),
                representative: runs[*rep].canonical.to_flat(),
            })
            .collect(),
        reference,
    };
    Ok(BasinExperiment { summary, runs })
}

/// Raw-initialization estimate of how often a draw lands near `θ*` versus near any of its images.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AmplificationReport {
    pub n_draws: usize,
    pub radius: f64,
    /// Number of distinct permutation images of `θ*`.
    pub multiplicity: usize,
    pub single_hits: usize,
    pub orbit_hits: usize,
    pub p_single: f64,
    pub p_orbit: f64,
    /// `p_orbit / p_single`; infinite when there are no single hits.
    pub ratio: f64,
    /// Standard error of `ratio` from the per-draw variable `1[orbit] − m·1[θ*]`.
    pub ratio_se: f64,
    pub within_3se: bool,
}

const AMPLIFICATION_CHUNK: usize = 8192;

/// Draws `n_draws` initializations and counts those within `radius` (L∞) of
/// `θ*` and of any of its distinct permutation images.
///
/// Draw chunks use seeds derived from `seed`, so counts do not depend on the thread count.
pub fn amplification_check(
    arch: &Architecture,
    kind: &InitKind,
    reference: &NetworkParams,
    radius: f64,
    n_draws: usize,
    seed: u64,
) -> Result<AmplificationReport> {
    check_shapes(arch, reference)?;
    kind.validate()?;
    if n_draws == 0 || !(radius >= 0.0) {
        return Err(domain("need n_draws >= 1 and radius >= 0"));
    }
    let images_possible: usize = arch
        .hidden_widths
        .iter()
        .try_fold(1usize, |acc, &d| {
            (1..=d).try_fold(acc, |a, k| a.checked_mul(k))
        })
        .unwrap_or(usize::MAX);
    let images = if images_possible <= ORBIT_ENUMERATION_LIMIT {
        Some(permutation_orbit(arch, reference)?)
    } else {
        None
    };
    let multiplicity = match &images {
        Some(v) => v.len(),
        None => num_traits::ToPrimitive::to_usize(
            &symmetry_profile_with(reference, None).total_multiplicity,
        )
        .ok_or_else(|| domain("orbit too large"))?,
    };
    let chunks = n_draws.div_ceil(AMPLIFICATION_CHUNK);
    let counts = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = seeded(derive_seed(seed, c as u64));
            let len = AMPLIFICATION_CHUNK.min(n_draws - c * AMPLIFICATION_CHUNK);
            let (mut single, mut orbit) = (0usize, 0usize);
            for _ in 0..len {
                let theta = initialize_with(arch, kind, &mut rng)?;
                if theta.linf_distance(reference) <= radius {
                    single += 1;
                }
                let hit = match &images {
                    Some(imgs) => imgs.iter().any(|img| theta.linf_distance(img) <= radius),
                    None => orbit_membership(arch, &theta, reference, radius)?,
                };
                if hit {
                    orbit += 1;
                }
            }
            Ok((single, orbit))
        })
        .collect::<Result<Vec<_>>>()?;
    let single_hits: usize = counts.iter().map(|c| c.0).sum();
    let orbit_hits: usize = counts.iter().map(|c| c.1).sum();
    let n = n_draws as f64;
    let m = multiplicity as f64;
    let p_single = single_hits as f64 / n;
    let p_orbit = orbit_hits as f64 / n;
    // Hits on θ* are also orbit hits, so X = 1[orbit] − m·1[θ*] takes values
    // 1 (other image), 1 − m (θ*), 0 (neither).
    let other = (orbit_hits - single_hits) as f64 / n;
    let mean_x = p_orbit - m * p_single;
    let ex2 = other + (1.0 - m) * (1.0 - m) * p_single;
    let var_x = (ex2 - mean_x * mean_x).max(0.0);
    let se_x = (var_x / n).sqrt();
    let (ratio, ratio_se) = if single_hits > 0 {
        (p_orbit / p_single, se_x / p_single)
    } else {
        (f64::INFINITY, f64::INFINITY)
    };
    let within_3se = if single_hits == 0 {
        false
    } else if ratio_se == 0.0 {
        ratio == m
    } else {
        (ratio - m).abs() <= 3.0 * ratio_se
    };
    Ok(AmplificationReport {
        n_draws,
        radius,
        multiplicity,
        single_hits,
        orbit_hits,
        p_single,
        p_orbit,
        ratio,
        ratio_se,
        within_3se,
    })
}
