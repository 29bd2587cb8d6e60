//! Subcommand settings and handlers.

use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use permsym_core::basin::{basin_experiment, BasinConfig, Dataset, InitKind, TrainConfig};
use permsym_core::bounds::{
    deep_covering_bound, entropy_comparison, log_volume_covering_bound, shallow_covering_bound,
    stirling_bracket, BoundConfig, EntropyComparison,
};
use permsym_core::canonical::{effective_volume, is_canonical, symmetry_profile_with};
use permsym_core::empirical::{
    covering_sweep, function_class_sample, FunctionSampleOptions, MetricSpaceSample,
};
use permsym_core::equivalence::{
    decide_equivalence_checked, sampled_sup_distance, EquivalenceOptions,
};
use permsym_core::rng::{derive_seed, seeded, uniform_params};
use permsym_core::transforms::{apply_scaling, apply_sign_flip, ScalingSpec};
use permsym_core::verify::run_suite;
use permsym_core::{
    apply_permutation, canonicalize, Activation, Architecture, Network, PermutationSpec,
};

use crate::config::resolve;
use crate::error::CliError;
use crate::output::{csv_report, json_report, num, opt_num, read_file, write_file, Sink};

/// Shared inputs of every handler.
pub struct Context<'a> {
    pub file: Option<&'a Value>,
    pub sink: Sink,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Parses `d0-d1-…-out` plus one activation for all hidden layers or one per layer.
pub fn parse_architecture(label: &str, activations: &str) -> Result<Architecture, CliError> {
    let widths: Vec<usize> = label
        .split('-')
        .map(|w| {
            w.trim()
                .parse()
                .map_err(|_| usage(format!("bad width {w:?} in {label:?}")))
        })
        .collect::<Result<_, _>>()?;
    if widths.len() < 3 {
        return Err(usage(format!(
            "architecture {label:?} needs input, hidden and output widths"
        )));
    }
    let hidden = widths[1..widths.len() - 1].to_vec();
    let acts: Vec<Activation> = activations
        .split(',')
        .map(str::parse)
        .collect::<Result<_, _>>()?;
    let acts = match acts.len() {
        1 => vec![acts[0]; hidden.len()],
        n if n == hidden.len() => acts,
        n => {
            return Err(usage(format!(
                "{n} activations for {} hidden layers",
                hidden.len()
            )))
        }
    };
    Ok(Architecture::new(
        widths[0],
        hidden,
        widths[widths.len() - 1],
        acts,
    )?)
}

/// `uniform:a,b`, `normal:mean,std`, `xavier` or `he`.
pub fn parse_init(s: &str) -> Result<InitKind, CliError> {
    let (name, args) = s.split_once(':').unwrap_or((s, ""));
    let nums = || -> Result<(f64, f64), CliError> {
        let v: Vec<f64> = args
            .split(',')
            .map(|x| {
                x.trim()
                    .parse()
                    .map_err(|_| usage(format!("bad number in init {s:?}")))
            })
            .collect::<Result<_, _>>()?;
        match v[..] {
            [a, b] => Ok((a, b)),
            _ => Err(usage(format!("init {s:?} needs two numbers"))),
        }
    };
    let kind = match name.trim().to_ascii_lowercase().as_str() {
        "uniform" => {
            let (a, b) = nums()?;
            InitKind::Uniform { a, b }
        }
        "normal" => {
            let (mean, std) = nums()?;
            InitKind::Normal { mean, std }
        }
        "xavier" => InitKind::Xavier,
        "he" => InitKind::He,
        other => {
            return Err(usage(format!(
                "unknown init {other:?}; use uniform:a,b, normal:m,s, xavier or he"
            )))
        }
    };
    kind.validate()?;
    Ok(kind)
}

fn load_network(path: &str) -> Result<Network, CliError> {
    if path.is_empty() {
        return Err(usage("a network file is required (--net)"));
    }
    Ok(Network::from_json(&read_file(path)?)?)
}

fn check_format(format: &str) -> Result<(), CliError> {
    match format {
        "json" | "csv" => Ok(()),
        other => Err(usage(format!("format must be json or csv, got {other:?}"))),
    }
}

// ---------------------------------------------------------------- transform

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TransformSpec {
    Permutation(PermutationSpec),
    RandomPermutation { seed: u64 },
    Scaling(ScalingSpec),
    SignFlip { layer: usize, mask: Vec<i8> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformConfig {
    pub net: String,
    pub spec: String,
    pub out: Option<String>,
    pub samples: usize,
    pub radius: f64,
    pub seed: u64,
}

impl Default for TransformConfig {
    fn default() -> Self {
        TransformConfig {
            net: String::new(),
            spec: String::new(),
            out: None,
            samples: 4096,
            radius: 1.0,
            seed: 0,
        }
    }
}

/// Applies a permutation, scaling or sign flip to a network file.
#[derive(Debug, Args, Serialize)]
pub struct TransformArgs {
    /// Network JSON to transform.
    #[arg(long)]
    net: Option<String>,
    /// Transform JSON file, e.g. containing {"permutation": [[1,0]]}.
    #[arg(long)]
    spec: Option<String>,
    /// Output network path (default: <out-dir>/transformed.json or ./transformed.json).
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Serialize)]
struct TransformResult {
    transform: TransformSpec,
    output: String,
    sup_distance: f64,
    samples: usize,
}

/// Largest output change a permutation may cause before the run fails.
const PERMUTATION_SELF_CHECK: f64 = 1e-9;

pub fn transform(ctx: &Context, args: &TransformArgs) -> Result<(), CliError> {
    let cfg: TransformConfig = resolve(ctx.file, args)?;
    let net = load_network(&cfg.net)?;
    if cfg.spec.is_empty() {
        return Err(usage("a transform spec file is required (--spec)"));
    }
    let spec: TransformSpec = serde_json::from_str(&read_file(&cfg.spec)?)?;
    let (arch, params) = (&net.arch, &net.params);
    let (out_params, is_perm) = match &spec {
        TransformSpec::Permutation(pi) => {
            pi.check_against(arch)?;
            (apply_permutation(params, pi)?, true)
        }
        TransformSpec::RandomPermutation { seed } => {
            let pi = PermutationSpec::random(arch, &mut seeded(*seed));
            (apply_permutation(params, &pi)?, true)
        }
        TransformSpec::Scaling(s) => (apply_scaling(arch, params, s)?, false),
        TransformSpec::SignFlip { layer, mask } => {
            (apply_sign_flip(arch, params, *layer, mask)?, false)
        }
    };
    let out = Network::new(arch.clone(), out_params)?;
    let dist = sampled_sup_distance(
        (arch, params),
        (arch, &out.params),
        cfg.radius,
        cfg.samples,
        cfg.seed,
    )?;
    let path = ctx
        .sink
        .aux_path(&cfg.out, "transformed.json")
        .unwrap_or_else(|| "transformed.json".into());
    write_file(&path, &(out.to_json()? + "\n"))?;
    eprintln!("self-check: sampled sup distance {}", num(dist));
    let result = TransformResult {
        transform: spec,
        output: path.display().to_string(),
        sup_distance: dist,
        samples: cfg.samples,
    };
    ctx.sink
        .emit("transform.json", &json_report(&cfg, "result", &result)?)?;
    if is_perm && dist > PERMUTATION_SELF_CHECK {
        return Err(CliError::Invariant(format!(
            "permuted network differs from the original by {dist:e}"
        )));
    }
    Ok(())
}

// ------------------------------------------------------------- canonicalize

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CanonicalizeConfig {
    pub net: String,
    pub out: Option<String>,
    /// Row tolerance for the symmetry profile; exact equality when absent.
    pub tolerance: Option<f64>,
}

/// Writes the canonical representative of a network and reports its symmetry profile.
#[derive(Debug, Args, Serialize)]
pub struct CanonicalizeArgs {
    #[arg(long)]
    net: Option<String>,
    /// Output network path (default: <out-dir>/canonical.json or ./canonical.json).
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    tolerance: Option<f64>,
}

#[derive(Serialize)]
struct CanonicalizeResult {
    output: String,
    was_canonical: bool,
    witness: PermutationSpec,
    profile: permsym_core::SymmetryProfile,
}

pub fn canonicalize_cmd(ctx: &Context, args: &CanonicalizeArgs) -> Result<(), CliError> {
    let cfg: CanonicalizeConfig = resolve(ctx.file, args)?;
    let net = load_network(&cfg.net)?;
    let canon = canonicalize(&net.params);
    let out = Network::new(net.arch.clone(), canon.params.clone())?;
    let path = ctx
        .sink
        .aux_path(&cfg.out, "canonical.json")
        .unwrap_or_else(|| "canonical.json".into());
    write_file(&path, &(out.to_json()? + "\n"))?;
    let result = CanonicalizeResult {
        output: path.display().to_string(),
        was_canonical: is_canonical(&net.params),
        witness: canon.witness,
        profile: symmetry_profile_with(&net.params, cfg.tolerance),
    };
    ctx.sink
        .emit("canonicalize.json", &json_report(&cfg, "result", &result)?)
}

// -------------------------------------------------------------- check-equiv

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckEquivConfig {
    pub a: String,
    pub b: String,
    pub radius: f64,
    pub tolerance: f64,
    pub samples: usize,
    pub seed: u64,
}

impl Default for CheckEquivConfig {
    fn default() -> Self {
        let d = EquivalenceOptions::default();
        CheckEquivConfig {
            a: String::new(),
            b: String::new(),
            radius: 1.0,
            tolerance: d.tolerance,
            samples: d.n_samples,
            seed: d.seed,
        }
    }
}

/// Decides whether two network files compute the same function on the input ball.
#[derive(Debug, Args, Serialize)]
pub struct CheckEquivArgs {
    #[arg(long)]
    a: Option<String>,
    #[arg(long)]
    b: Option<String>,
    /// Input ball radius B_x.
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

pub fn check_equiv(ctx: &Context, args: &CheckEquivArgs) -> Result<(), CliError> {
    let cfg: CheckEquivConfig = resolve(ctx.file, args)?;
    let (a, b) = (load_network(&cfg.a)?, load_network(&cfg.b)?);
    let opts = EquivalenceOptions {
        tolerance: cfg.tolerance,
        n_samples: cfg.samples,
        seed: cfg.seed,
    };
    let verdict = decide_equivalence_checked(
        (&a.arch, &a.params),
        (&b.arch, &b.params),
        cfg.radius,
        &opts,
    )?;
    ctx.sink
        .emit("check-equiv.json", &json_report(&cfg, "verdict", &verdict)?)
}

// ----------------------------------------------------- bounds / entropy-compare

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    pub archs: Vec<String>,
    pub activations: String,
    pub weight_bound: f64,
    pub input_radius: f64,
    pub epsilons: Vec<f64>,
    /// Overrides the per-layer Lipschitz constants.
    pub rho: Option<Vec<f64>>,
    pub format: String,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        BoundsConfig {
            archs: vec!["1-2-1".into()],
            activations: "relu".into(),
            weight_bound: 1.0,
            input_radius: 1.0,
            epsilons: vec![1.0],
            rho: None,
            format: "csv".into(),
        }
    }
}

/// Covering-number bounds (or entropies) over a sweep of architectures and radii.
#[derive(Debug, Args, Serialize)]
pub struct BoundsArgs {
    /// Architectures like 1-2-1, comma separated.
    #[arg(long, value_delimiter = ',')]
    archs: Option<Vec<String>>,
    /// One activation for all hidden layers, or one per layer (comma separated).
    #[arg(long)]
    activations: Option<String>,
    /// Parameter box bound B.
    #[arg(long)]
    weight_bound: Option<f64>,
    /// Input radius B_x.
    #[arg(long)]
    input_radius: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    epsilons: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    rho: Option<Vec<f64>>,
    /// json or csv.
    #[arg(long)]
    format: Option<String>,
}

fn bound_configs(cfg: &BoundsConfig) -> Result<Vec<BoundConfig>, CliError> {
    check_format(&cfg.format)?;
    let mut out = Vec::new();
    for label in &cfg.archs {
        let arch = parse_architecture(label, &cfg.activations)?;
        for &eps in &cfg.epsilons {
            out.push(match &cfg.rho {
                Some(rho) => BoundConfig::with_rho(
                    arch.clone(),
                    cfg.weight_bound,
                    cfg.input_radius,
                    rho.clone(),
                    eps,
                )?,
                None => BoundConfig::new(arch.clone(), cfg.weight_bound, cfg.input_radius, eps)?,
            });
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct StirlingCell {
    d: u64,
    lower: f64,
    upper: f64,
}

#[derive(Serialize)]
struct BoundsRow {
    arch: String,
    activations: String,
    weight_bound: f64,
    input_radius: f64,
    epsilon: f64,
    param_count: usize,
    rho_bar: f64,
    s_bar: f64,
    entropies: EntropyComparison,
    shallow_log_bound: Option<f64>,
    deep_log_bound: f64,
    deep_log_factorial_discount: f64,
    stirling: Vec<StirlingCell>,
    log_volume_total: f64,
    log_volume_effective: f64,
    volume_effective: Option<f64>,
}

fn act_label(arch: &Architecture) -> String {
    arch.activations
        .iter()
        .map(|a| a.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn floored_names(e: &EntropyComparison) -> String {
    let f = &e.floored;
    [
        ("spectral_2017", f.spectral_2017),
        ("pacbayes_2017", f.pacbayes_2017),
        ("lin_2019", f.lin_2019),
        ("pdim_2019", f.pdim_2019),
        ("this_paper", f.this_paper),
    ]
    .iter()
    .filter(|(_, on)| *on)
    .map(|(n, _)| *n)
    .collect::<Vec<_>>()
    .join(";")
}

const ENTROPY_COLUMNS: [&str; 6] = [
    "spectral_2017",
    "pacbayes_2017",
    "lin_2019",
    "pdim_2019",
    "this_paper",
    "floored",
];

fn entropy_cells(e: &EntropyComparison) -> Vec<String> {
    vec![
        num(e.spectral_2017),
        num(e.pacbayes_2017),
        num(e.lin_2019),
        num(e.pdim_2019),
        num(e.this_paper),
        floored_names(e),
    ]
}

fn header(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|c| c.to_string()).collect()
}

pub fn bounds(ctx: &Context, args: &BoundsArgs) -> Result<(), CliError> {
    let cfg: BoundsConfig = resolve(ctx.file, args)?;
    let rows: Vec<BoundsRow> = bound_configs(&cfg)?
        .iter()
        .map(|bc| {
            let deep = deep_covering_bound(bc)?;
            let vol = effective_volume(&bc.arch, bc.weight_bound)?;
            Ok(BoundsRow {
                arch: bc.arch.label(),
                activations: act_label(&bc.arch),
                weight_bound: bc.weight_bound,
                input_radius: bc.input_radius,
                epsilon: bc.epsilon,
                param_count: bc.arch.param_count(),
                rho_bar: bc.rho_bar(),
                s_bar: bc.s_bar(),
                entropies: entropy_comparison(bc)?,
                shallow_log_bound: (bc.arch.depth() == 1)
                    .then(|| shallow_covering_bound(bc).map(|b| b.log_total))
                    .transpose()?,
                deep_log_bound: deep.log_total,
                deep_log_factorial_discount: deep.log_factorial_discount,
                stirling: bc
                    .arch
                    .hidden_widths
                    .iter()
                    .map(|&d| {
                        let s = stirling_bracket(d as u64)?;
                        Ok(StirlingCell {
                            d: s.d,
                            lower: s.lower,
                            upper: s.upper,
                        })
                    })
                    .collect::<Result<_, permsym_core::Error>>()?,
                log_volume_total: vol.log_total,
                log_volume_effective: vol.log_effective,
                volume_effective: vol.effective,
            })
        })
        .collect::<Result<_, CliError>>()?;

    if cfg.format == "json" {
        return ctx
            .sink
            .emit("bounds.json", &json_report(&cfg, "rows", &rows)?);
    }
    let mut cols = vec![
        "arch",
        "activations",
        "weight_bound",
        "input_radius",
        "epsilon",
        "param_count",
        "rho_bar",
        "s_bar",
    ];
    cols.extend(ENTROPY_COLUMNS);
    cols.extend([
        "shallow_log_bound",
        "deep_log_bound",
        "deep_log_factorial_discount",
        "stirling",
        "log_volume_total",
        "log_volume_effective",
        "volume_effective",
    ]);
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut c = vec![
                r.arch.clone(),
                r.activations.clone(),
                num(r.weight_bound),
                num(r.input_radius),
                num(r.epsilon),
                r.param_count.to_string(),
                num(r.rho_bar),
                num(r.s_bar),
            ];
            c.extend(entropy_cells(&r.entropies));
            c.extend([
                opt_num(r.shallow_log_bound),
                num(r.deep_log_bound),
                num(r.deep_log_factorial_discount),
                r.stirling
                    .iter()
                    .map(|s| format!("{}:{}:{}", s.d, num(s.lower), num(s.upper)))
                    .collect::<Vec<_>>()
                    .join(";"),
                num(r.log_volume_total),
                num(r.log_volume_effective),
                opt_num(r.volume_effective),
            ]);
            c
        })
        .collect();
    ctx.sink
        .emit("bounds.csv", &csv_report(&cfg, &header(&cols), &cells)?)
}

#[derive(Serialize)]
struct EntropyRow {
    arch: String,
    activations: String,
    weight_bound: f64,
    input_radius: f64,
    epsilon: f64,
    #[serde(flatten)]
    entropies: EntropyComparison,
}

pub fn entropy_compare(ctx: &Context, args: &BoundsArgs) -> Result<(), CliError> {
    let cfg: BoundsConfig = resolve(ctx.file, args)?;
    let rows: Vec<EntropyRow> = bound_configs(&cfg)?
        .iter()
        .map(|bc| {
            Ok(EntropyRow {
                arch: bc.arch.label(),
                activations: act_label(&bc.arch),
                weight_bound: bc.weight_bound,
                input_radius: bc.input_radius,
                epsilon: bc.epsilon,
                entropies: entropy_comparison(bc)?,
            })
        })
        .collect::<Result<_, CliError>>()?;
    if cfg.format == "json" {
        return ctx
            .sink
            .emit("entropy-compare.json", &json_report(&cfg, "rows", &rows)?);
    }
    let mut cols = vec![
        "arch",
        "activations",
        "weight_bound",
        "input_radius",
        "epsilon",
    ];
    cols.extend(ENTROPY_COLUMNS);
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut c = vec![
                r.arch.clone(),
                r.activations.clone(),
                num(r.weight_bound),
                num(r.input_radius),
                num(r.epsilon),
            ];
            c.extend(entropy_cells(&r.entropies));
            c
        })
        .collect();
    ctx.sink.emit(
        "entropy-compare.csv",
        &csv_report(&cfg, &header(&cols), &cells)?,
    )
}

// ----------------------------------------------------------- covering-sweep

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoveringConfig {
    /// `grid` (points of [-bound, bound]^dim) or `function` (a sampled network class).
    pub space: String,
    pub dim: usize,
    pub res: usize,
    pub bound: f64,
    pub epsilons: Vec<f64>,
    pub exact: bool,
    pub arch: String,
    pub activations: String,
    pub input_radius: f64,
    pub n_eval: usize,
    pub seed: u64,
    pub dedup: bool,
    pub budget: u64,
    pub format: String,
}

impl Default for CoveringConfig {
    fn default() -> Self {
        CoveringConfig {
            space: "grid".into(),
            dim: 2,
            res: 11,
            bound: 1.0,
            epsilons: vec![0.1, 0.2, 0.3, 0.5, 0.7, 1.0],
            exact: true,
            arch: "1-2-1".into(),
            activations: "relu".into(),
            input_radius: 1.0,
            n_eval: 16,
            seed: 0,
            dedup: false,
            budget: 1_000_000,
            format: "csv".into(),
        }
    }
}

/// Greedy and exact covering/packing counts over a sweep of radii.
#[derive(Debug, Args, Serialize)]
pub struct CoveringArgs {
    /// grid or function.
    #[arg(long)]
    space: Option<String>,
    #[arg(long)]
    dim: Option<usize>,
    /// Points per axis (grid) or per parameter (function).
    #[arg(long)]
    res: Option<usize>,
    #[arg(long)]
    bound: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    epsilons: Option<Vec<f64>>,
    /// Run the exact oracles (only for small samples).
    #[arg(long)]
    exact: Option<bool>,
    #[arg(long)]
    arch: Option<String>,
    #[arg(long)]
    activations: Option<String>,
    #[arg(long)]
    input_radius: Option<f64>,
    #[arg(long)]
    n_eval: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Keep one grid point per canonical class.
    #[arg(long)]
    dedup: Option<bool>,
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long)]
    format: Option<String>,
}

#[derive(Serialize)]
struct CoveringResult {
    provenance: String,
    n_points: usize,
    reduction_ratio: Option<f64>,
    rows: Vec<permsym_core::empirical::SweepRow>,
}

/// Log covering bound for a radius, when defined.
type TheoryFn = Box<dyn Fn(f64) -> Option<f64> + Sync>;

pub fn covering(ctx: &Context, args: &CoveringArgs) -> Result<(), CliError> {
    let cfg: CoveringConfig = resolve(ctx.file, args)?;
    check_format(&cfg.format)?;
    let (space, ratio, theory): (MetricSpaceSample, Option<f64>, TheoryFn) =
        match cfg.space.as_str() {
            "grid" => {
                let space = MetricSpaceSample::grid(cfg.dim, cfg.res, cfg.bound)?;
                let (dim, volume) = (cfg.dim as u64, (2.0 * cfg.bound).powi(cfg.dim as i32));
                (
                    space,
                    None,
                    Box::new(move |e| log_volume_covering_bound(dim, volume, e).ok()),
                )
            }
            "function" => {
                let arch = parse_architecture(&cfg.arch, &cfg.activations)?;
                let opts = FunctionSampleOptions {
                    budget: cfg.budget as u128,
                    canonical_dedup: cfg.dedup,
                    seed: cfg.seed,
                };
                let sample = function_class_sample(
                    &arch,
                    cfg.bound,
                    cfg.res,
                    cfg.input_radius,
                    cfg.n_eval,
                    &opts,
                )?;
                let (b, bx) = (cfg.bound, cfg.input_radius);
                let theory = move |e: f64| {
                    let bc = BoundConfig::new(arch.clone(), b, bx, e).ok()?;
                    if bc.arch.depth() == 1 {
                        shallow_covering_bound(&bc).ok().map(|v| v.log_total)
                    } else {
                        deep_covering_bound(&bc).ok().map(|v| v.log_total)
                    }
                };
                (sample.space, Some(sample.reduction_ratio), Box::new(theory))
            }
            other => {
                return Err(usage(format!(
                    "space must be grid or function, got {other:?}"
                )))
            }
        };
    let rows = covering_sweep(&space, &cfg.epsilons, cfg.exact, theory)?;
    if cfg.format == "json" {
        let result = CoveringResult {
            provenance: space.provenance.clone(),
            n_points: space.len(),
            reduction_ratio: ratio,
            rows,
        };
        return ctx.sink.emit(
            "covering-sweep.json",
            &json_report(&cfg, "result", &result)?,
        );
    }
    let opt_count = |v: Option<usize>| v.map(|c| c.to_string()).unwrap_or_default();
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                num(r.epsilon),
                r.greedy_cover.to_string(),
                opt_count(r.exact_cover),
                r.greedy_pack.to_string(),
                opt_count(r.exact_pack),
                opt_num(r.theory_bound_log),
            ]
        })
        .collect();
    let cols = header(&[
        "epsilon",
        "greedy_cover",
        "exact_cover",
        "greedy_pack",
        "exact_pack",
        "theory_bound_log",
    ]);
    ctx.sink
        .emit("covering-sweep.csv", &csv_report(&cfg, &cols, &cells)?)
}

// -------------------------------------------------------------------- basin

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasinCliConfig {
    pub arch: String,
    pub activations: String,
    pub init: String,
    pub runs: usize,
    pub step: f64,
    pub iters: usize,
    pub threshold: f64,
    pub seed: u64,
    /// `teacher-student`, `xor`, or a CSV dataset path.
    pub task: String,
    pub n_data: usize,
    pub input_radius: f64,
    pub cluster_tolerance: Option<f64>,
    pub runs_csv: Option<String>,
}

impl Default for BasinCliConfig {
    fn default() -> Self {
        BasinCliConfig {
            arch: "1-2-1".into(),
            activations: "tanh".into(),
            init: "uniform:-1,1".into(),
            runs: 100,
            step: 0.5,
            iters: 20_000,
            threshold: 1e-5,
            seed: 0,
            task: "teacher-student".into(),
            n_data: 32,
            input_radius: 1.0,
            cluster_tolerance: None,
            runs_csv: None,
        }
    }
}

/// Seeded gradient-descent restarts clustered by canonical form.
#[derive(Debug, Args, Serialize)]
pub struct BasinArgs {
    #[arg(long)]
    arch: Option<String>,
    #[arg(long)]
    activations: Option<String>,
    /// uniform:a,b | normal:mean,std | xavier | he
    #[arg(long)]
    init: Option<String>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// teacher-student, xor, or a CSV path with x*/y* columns.
    #[arg(long)]
    task: Option<String>,
    #[arg(long)]
    n_data: Option<usize>,
    #[arg(long)]
    input_radius: Option<f64>,
    #[arg(long)]
    cluster_tolerance: Option<f64>,
    /// Per-run CSV path (default: <out-dir>/basin_runs.csv when an output directory is set).
    #[arg(long)]
    runs_csv: Option<String>,
}

pub fn basin(ctx: &Context, args: &BasinArgs) -> Result<(), CliError> {
    let cfg: BasinCliConfig = resolve(ctx.file, args)?;
    let arch = parse_architecture(&cfg.arch, &cfg.activations)?;
    let data = match cfg.task.as_str() {
        "teacher-student" => {
            let teacher = uniform_params(&arch, 1.0, &mut seeded(derive_seed(cfg.seed, u64::MAX)));
            Dataset::teacher_student(
                &arch,
                &teacher,
                cfg.n_data,
                cfg.input_radius,
                derive_seed(cfg.seed, u64::MAX - 1),
            )?
        }
        "xor" => Dataset::xor(),
        path => Dataset::read_csv(read_file(path)?.as_bytes())?,
    };
    let bc = BasinConfig {
        init: parse_init(&cfg.init)?,
        seed: cfg.seed,
        n_runs: cfg.runs,
        train: TrainConfig {
            step_size: cfg.step,
            max_iters: cfg.iters,
            grad_threshold: cfg.threshold,
        },
        cluster_tolerance: cfg.cluster_tolerance,
    };
    let exp = basin_experiment(&arch, &data, &bc)?;
    if let Some(path) = ctx.sink.aux_path(&cfg.runs_csv, "basin_runs.csv") {
        let s = arch.param_count();
        let mut cols = header(&[
            "run",
            "seed",
            "status",
            "iterations",
            "final_loss",
            "grad_norm",
            "cluster",
        ]);
        cols.extend((0..s).map(|i| format!("theta{i}")));
        let cells: Vec<Vec<String>> = exp
            .runs
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let mut c = vec![
                    i.to_string(),
                    r.seed.to_string(),
                    serde_json::to_value(r.status)
                        .ok()
                        .and_then(|v| v.as_str().map(String::from))
                        .unwrap_or_default(),
                    r.iterations.to_string(),
                    num(r.final_loss),
                    num(r.grad_norm),
                    r.cluster.map(|c| c.to_string()).unwrap_or_default(),
                ];
                c.extend(r.final_params.values().map(num));
                c
            })
            .collect();
        write_file(&path, &csv_report(&cfg, &cols, &cells)?)?;
    }
    ctx.sink
        .emit("basin.json", &json_report(&cfg, "summary", &exp.summary)?)
}

// ------------------------------------------------------------------- verify

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    pub suite: String,
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            suite: "all".into(),
            seed: 0,
        }
    }
}

/// Runs a named property suite: theorem1, table1, canonical, sandwich, amplification, equivariance or all.
#[derive(Debug, Args, Serialize)]
pub struct VerifyArgs {
    /// Suite name.
    #[arg(long)]
    suite: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Serialize)]
struct VerifyResult {
    passed: bool,
    reports: Vec<permsym_core::verify::SuiteReport>,
}

pub fn verify(ctx: &Context, args: &VerifyArgs) -> Result<(), CliError> {
    let cfg: VerifyConfig = resolve(ctx.file, args)?;
    let reports = run_suite(&cfg.suite, cfg.seed)?;
    let passed = reports.iter().all(|r| r.passed);
    ctx.sink.emit(
        "verify.json",
        &json_report(&cfg, "result", &VerifyResult { passed, reports })?,
    )?;
    if passed {
        Ok(())
    } else {
        Err(CliError::Invariant(format!("suite {} failed", cfg.suite)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn architecture_strings() {
        let a = parse_architecture("2-3-4-1", "relu").unwrap();
        assert_eq!(a.hidden_widths, vec![3, 4]);
        assert_eq!(a.activations, vec![Activation::Relu; 2]);
        let b = parse_architecture("1-2-2-1", "tanh,leaky_relu:0.1").unwrap();
        assert_eq!(
            b.activations,
            vec![Activation::Tanh, Activation::LeakyRelu(0.1)]
        );
        assert!(parse_architecture("1-2", "relu").is_err());
        assert!(parse_architecture("1-x-1", "relu").is_err());
        assert!(parse_architecture("1-2-2-1", "relu,tanh,tanh").is_err());
    }

    #[test]
    fn init_strings() {
        assert_eq!(
            parse_init("uniform:-1,1").unwrap(),
            InitKind::Uniform { a: -1.0, b: 1.0 }
        );
        assert_eq!(
            parse_init("normal:0,0.5").unwrap(),
            InitKind::Normal {
                mean: 0.0,
                std: 0.5
            }
        );
        assert_eq!(parse_init("he").unwrap(), InitKind::He);
        assert!(parse_init("normal:0,0").is_err());
        assert!(parse_init("uniform:1").is_err());
        assert!(parse_init("lecun").is_err());
    }

    #[test]
    fn transform_spec_json() {
        let s: TransformSpec = serde_json::from_str(r#"{"permutation": [[1, 0]]}"#).unwrap();
        assert!(matches!(s, TransformSpec::Permutation(_)));
        let s: TransformSpec =
            serde_json::from_str(r#"{"sign_flip": {"layer": 1, "mask": [-1, 1]}}"#).unwrap();
        assert!(matches!(s, TransformSpec::SignFlip { layer: 1, .. }));
        assert!(serde_json::from_str::<TransformSpec>(r#"{"rotate": 1}"#).is_err());
    }
}
