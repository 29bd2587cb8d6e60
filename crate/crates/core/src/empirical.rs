//! Covering and packing numbers of finite point sets under the L∞ metric.
//!
//! An ε-cover uses centers drawn from the sample and distance `≤ ε`. An
//! ε-packing is a subset with pairwise distances `> 2ε`, i.e. disjoint open
//! ε-balls.

use fixedbitset::FixedBitSet;
use rayon::prelude::*;
use serde::Serialize;

use crate::canonical::canonicalize;
use crate::equivalence::ball_samples;
use crate::error::{domain, Error, Result};
use crate::nn::{check_shapes, forward, Architecture, NetworkParams};

/// Largest sample the exact oracles accept.
pub const EXACT_LIMIT: usize = 160;
pub const DEFAULT_GRID_BUDGET: u128 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    /// L∞ distance between parameter vectors.
    LinfParams,
    /// Max over a fixed set of inputs of the output difference.
    SampledSupFunction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricSpaceSample {
    points: Vec<Vec<f64>>,
    pub metric: MetricKind,
    pub provenance: String,
}

impl MetricSpaceSample {
    pub fn new(
        points: Vec<Vec<f64>>,
        metric: MetricKind,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        if let Some(first) = points.first() {
            if let Some(p) = points.iter().find(|p| p.len() != first.len()) {
                return Err(Error::Structure(format!(
                    "point of dimension {} in a sample of dimension {}",
                    p.len(),
                    first.len()
                )));
            }
        }
        Ok(MetricSpaceSample {
            points,
            metric,
            provenance: provenance.into(),
        })
    }

    /// `res^dim` evenly spaced points on `[-bound, bound]^dim`.
    pub fn grid(dim: usize, res: usize, bound: f64) -> Result<Self> {
        let axis = grid_axis(res, bound);
        let total = checked_pow(res, dim);
        if total > DEFAULT_GRID_BUDGET {
            return Err(Error::Budget {
                required: total,
                budget: DEFAULT_GRID_BUDGET,
            });
        }
        let points = (0..total as usize)
            .map(|k| grid_point(&axis, dim, k))
            .collect();
        Self::new(
            points,
            MetricKind::LinfParams,
            format!("grid {res}^{dim} on [-{bound}, {bound}]"),
        )
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        linf(&self.points[i], &self.points[j])
    }

    /// Row-major `n × n` distance matrix.
    pub fn distance_matrix(&self) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .into_par_iter()
            .flat_map_iter(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| self.distance(i, j))
            .collect()
    }

    /// Checks symmetry and the triangle inequality on all triples among the
    /// first `limit` points.
    pub fn spot_check_metric(&self, limit: usize) -> bool {
        let m = self.len().min(limit);
        (0..m).all(|i| {
            (0..m).all(|j| {
                let dij = self.distance(i, j);
                dij == self.distance(j, i)
                    && (0..m).all(|k| dij <= self.distance(i, k) + self.distance(k, j) + 1e-12)
            })
        })
    }
}

fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn grid_axis(res: usize, bound: f64) -> Vec<f64> {
    match res {
        0 => vec![],
        1 => vec![0.0],
        _ => (0..res)
            .map(|i| -bound + 2.0 * bound * i as f64 / (res - 1) as f64)
            .collect(),
    }
}

fn grid_point(axis: &[f64], dim: usize, mut k: usize) -> Vec<f64> {
    let res = axis.len();
    let mut p = vec![0.0; dim];
    for slot in p.iter_mut().rev() {
        *slot = axis[k % res];
        k /= res;
    }
    p
}

fn checked_pow(base: usize, exp: usize) -> u128 {
    (0..exp)
        .try_fold(1u128, |acc, _| acc.checked_mul(base as u128))
        .unwrap_or(u128::MAX)
}

fn check_args(space: &MetricSpaceSample, eps: f64) -> Result<()> {
    if space.is_empty() {
        return Err(domain("empty sample"));
    }
    if !(eps > 0.0) {
        return Err(domain(format!("epsilon must be positive, got {eps}")));
    }
    Ok(())
}

/// Centers of a farthest-point ε-cover, starting from point 0; ties go to the lowest index.
pub fn greedy_cover(space: &MetricSpaceSample, eps: f64) -> Result<Vec<usize>> {
    check_args(space, eps)?;
    let mut centers = vec![0];
    let mut nearest: Vec<f64> = (0..space.len()).map(|i| space.distance(0, i)).collect();
    loop {
        let (far, dist) =
            nearest
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (i, &d)| {
                    if d > best.1 {
                        (i, d)
                    } else {
                        best
                    }
                });
        if dist <= eps {
            return Ok(centers);
        }
        centers.push(far);
        for (i, n) in nearest.iter_mut().enumerate() {
            *n = n.min(space.distance(far, i));
        }
    }
}

/// Size of [`greedy_cover`]; an upper bound on the sample's covering number.
pub fn greedy_covering_estimate(space: &MetricSpaceSample, eps: f64) -> Result<usize> {
    Ok(greedy_cover(space, eps)?.len())
}

/// Maximal ε-packing built in index order.
pub fn greedy_packing(space: &MetricSpaceSample, eps: f64) -> Result<Vec<usize>> {
    check_args(space, eps)?;
    let mut kept: Vec<usize> = Vec::new();
    for i in 0..space.len() {
        if kept.iter().all(|&k| space.distance(i, k) > 2.0 * eps) {
            kept.push(i);
        }
    }
    Ok(kept)
}

pub fn greedy_packing_estimate(space: &MetricSpaceSample, eps: f64) -> Result<usize> {
    Ok(greedy_packing(space, eps)?.len())
}

fn check_exact(space: &MetricSpaceSample) -> Result<()> {
    if space.len() > EXACT_LIMIT {
        return Err(Error::Budget {
            required: space.len() as u128,
            budget: EXACT_LIMIT as u128,
        });
    }
    Ok(())
}

struct CoverSearch {
    /// `covers[c]`: points within ε of candidate center `c`.
    covers: Vec<FixedBitSet>,
    /// Candidates able to cover each point.
    coverers: Vec<Vec<usize>>,
    /// Pairs farther apart than 2ε can never share a center.
    far: Vec<FixedBitSet>,
    best: usize,
}

impl CoverSearch {
    /// Max of a pairwise-far point count and `⌈|uncovered| / best single coverage⌉`.
    fn lower_bound(&self, uncovered: &FixedBitSet) -> usize {
        let mut chosen: Vec<usize> = Vec::new();
        for i in uncovered.ones() {
            if chosen.iter().all(|&c| self.far[c].contains(i)) {
                chosen.push(i);
            }
        }
        let left = uncovered.count_ones(..);
        let widest = uncovered
            .ones()
            .flat_map(|e| self.coverers[e].iter())
            .map(|&c| self.covers[c].intersection(uncovered).count())
            .max()
            .unwrap_or(1);
        chosen.len().max(left.div_ceil(widest))
    }

    fn search(&mut self, uncovered: &FixedBitSet, depth: usize) {
        if uncovered.is_clear() {
            self.best = self.best.min(depth);
            return;
        }
        if depth + self.lower_bound(uncovered) >= self.best {
            return;
        }
        let pivot = uncovered
            .ones()
            .min_by_key(|&e| self.coverers[e].len())
            .expect("nonempty");
        let mut options: Vec<(usize, usize)> = self.coverers[pivot]
            .iter()
            .map(|&c| (c, self.covers[c].intersection(uncovered).count()))
            .collect();
        options.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        for (c, _) in options {
            let mut next = uncovered.clone();
            next.difference_with(&self.covers[c]);
            self.search(&next, depth + 1);
        }
    }
}

/// Minimum number of sample points whose ε-balls cover the sample.
pub fn exact_covering_number(space: &MetricSpaceSample, eps: f64) -> Result<usize> {
    check_args(space, eps)?;
    check_exact(space)?;
    let n = space.len();
    let dist = space.distance_matrix();
    let mut covers = vec![FixedBitSet::with_capacity(n); n];
    let mut far = vec![FixedBitSet::with_capacity(n); n];
    for i in 0..n {
        for j in 0..n {
            covers[i].set(j, dist[i * n + j] <= eps);
            far[i].set(j, dist[i * n + j] > 2.0 * eps);
        }
    }
    // A candidate whose ball is contained in another's is never needed.
    let dominated: Vec<bool> = (0..n)
        .map(|c| {
            (0..n).any(|o| {
                o != c && covers[c].is_subset(&covers[o]) && (covers[c] != covers[o] || o < c)
            })
        })
        .collect();
    let coverers: Vec<Vec<usize>> = (0..n)
        .map(|e| {
            (0..n)
                .filter(|&c| !dominated[c] && covers[c].contains(e))
                .collect()
        })
        .collect();

    let mut uncovered = FixedBitSet::with_capacity(n);
    uncovered.insert_range(..);
    let upper = max_coverage_greedy(&covers, &uncovered);
    let mut search = CoverSearch {
        covers,
        coverers,
        far,
        best: upper,
    };
    search.search(&uncovered, 0);
    Ok(search.best)
}

fn max_coverage_greedy(covers: &[FixedBitSet], all: &FixedBitSet) -> usize {
    let mut left = all.clone();
    let mut count = 0;
    while !left.is_clear() {
        let c = (0..covers.len())
            .max_by_key(|&c| (covers[c].intersection(&left).count(), std::cmp::Reverse(c)))
            .expect("nonempty");
        left.difference_with(&covers[c]);
        count += 1;
    }
    count
}

struct PackSearch {
    /// `compatible[v]`: vertices farther than 2r from `v`.
    compatible: Vec<FixedBitSet>,
    /// Complement of `compatible`, self excluded.
    conflict: Vec<FixedBitSet>,
    best: usize,
}

impl PackSearch {
    /// Greedy partition of `p` into conflict cliques; returns vertices in
    /// nondecreasing order of clique index, paired with that index (1-based).
    fn clique_cover(&self, p: &FixedBitSet) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(p.count_ones(..));
        let mut left = p.clone();
        let mut k = 0;
        while !left.is_clear() {
            k += 1;
            let mut q = left.clone();
            while let Some(v) = q.ones().next() {
                q.set(v, false);
                left.set(v, false);
                q.intersect_with(&self.conflict[v]);
                out.push((v, k));
            }
        }
        out
    }

    fn expand(&mut self, mut p: FixedBitSet, size: usize) {
        let order = self.clique_cover(&p);
        for &(v, k) in order.iter().rev() {
            if size + k <= self.best {
                return;
            }
            let mut next = p.clone();
            next.intersect_with(&self.compatible[v]);
            if next.is_clear() {
                self.best = self.best.max(size + 1);
            } else {
                self.expand(next, size + 1);
            }
            p.set(v, false);
        }
    }
}

/// Maximum number of sample points with pairwise distance `> 2ε`.
pub fn exact_packing_number(space: &MetricSpaceSample, eps: f64) -> Result<usize> {
    check_args(space, eps)?;
    check_exact(space)?;
    let n = space.len();
    let dist = space.distance_matrix();
    let mut compatible = vec![FixedBitSet::with_capacity(n); n];
    let mut conflict = vec![FixedBitSet::with_capacity(n); n];
    for i in 0..n {
        for j in 0..n {
            let ok = dist[i * n + j] > 2.0 * eps;
            compatible[i].set(j, ok);
            conflict[i].set(j, !ok && i != j);
        }
    }
    let mut search = PackSearch {
        compatible,
        conflict,
        best: greedy_packing_estimate(space, eps)?,
    };
    let mut all = FixedBitSet::with_capacity(n);
    all.insert_range(..);
    search.expand(all, 0);
    Ok(search.best)
}

/// One ε of a covering sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub greedy_cover: usize,
    pub exact_cover: Option<usize>,
    pub greedy_pack: usize,
    pub exact_pack: Option<usize>,
    pub theory_bound_log: Option<f64>,
}

/// Greedy (and, for small samples, exact) cover and packing counts for each ε.
pub fn covering_sweep<F>(
    space: &MetricSpaceSample,
    epsilons: &[f64],
    exact: bool,
    theory_log: F,
) -> Result<Vec<SweepRow>>
where
    F: Fn(f64) -> Option<f64> + Sync,
{
    let use_exact = exact && space.len() <= EXACT_LIMIT;
    epsilons
        .par_iter()
        .map(|&eps| {
            Ok(SweepRow {
                epsilon: eps,
                greedy_cover: greedy_covering_estimate(space, eps)?,
                exact_cover: use_exact
                    .then(|| exact_covering_number(space, eps))
                    .transpose()?,
                greedy_pack: greedy_packing_estimate(space, eps)?,
                exact_pack: use_exact
                    .then(|| exact_packing_number(space, eps))
                    .transpose()?,
                theory_bound_log: theory_log(eps),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunctionSampleOptions {
    pub budget: u128,
    pub canonical_dedup: bool,
    pub seed: u64,
}

impl Default for FunctionSampleOptions {
    fn default() -> Self {
        FunctionSampleOptions {
            budget: DEFAULT_GRID_BUDGET,
            canonical_dedup: false,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionClassSample {
    pub space: MetricSpaceSample,
    pub eval_points: Vec<Vec<f64>>,
    pub grid_size: usize,
    /// `grid_size / space.len()`; 1 without dedup.
    pub reduction_ratio: f64,
}

/// Evaluates every network on a uniform parameter grid at fixed inputs.
///
/// Each point of the returned space is the concatenation of the network's
/// outputs at the `n_eval` inputs drawn by [`ball_samples`]. With canonical
/// dedup, only the first grid point of each canonical class is kept.
pub fn function_class_sample(
    arch: &Architecture,
    bound: f64,
    res: usize,
    input_radius: f64,
    n_eval: usize,
    opts: &FunctionSampleOptions,
) -> Result<FunctionClassSample> {
    arch.validate()?;
    if res == 0 || n_eval == 0 {
        return Err(domain(
            "grid resolution and evaluation count must be positive",
        ));
    }
    let s = arch.param_count();
    let required = checked_pow(res, s);
    if required > opts.budget {
        return Err(Error::Budget {
            required,
            budget: opts.budget,
        });
    }
    let axis = grid_axis(res, bound);
    let total = required as usize;
    let grid: Vec<NetworkParams> = (0..total)
        .into_par_iter()
        .map(|k| NetworkParams::from_flat(arch, &grid_point(&axis, s, k)))
        .collect::<Result<_>>()?;
    let kept: Vec<NetworkParams> = if opts.canonical_dedup {
        let keys: Vec<Vec<u64>> = grid
            .par_iter()
            .map(|p| canonicalize(p).params.bit_key())
            .collect();
        let mut seen = std::collections::HashSet::new();
        grid.into_iter()
            .zip(keys)
            .filter_map(|(p, k)| seen.insert(k).then_some(p))
            .collect()
    } else {
        grid
    };
    let eval_points = ball_samples(arch.input_dim, input_radius, n_eval, opts.seed);
    let values: Vec<Vec<f64>> = kept
        .par_iter()
        .map(|p| {
            check_shapes(arch, p)?;
            let mut v = Vec::with_capacity(n_eval * arch.output_dim);
            for x in &eval_points {
                v.extend(forward(arch, p, x)?);
            }
            Ok(v)
        })
        .collect::<Result<_>>()?;
    let kept_len = values.len();
    let space = MetricSpaceSample::new(
        values,
        MetricKind::SampledSupFunction,
        format!(
            "{} grid {res}^{s} on [-{bound}, {bound}], {n_eval} inputs, seed {}",
            arch.label(),
            opts.seed
        ),
    )?;
    Ok(FunctionClassSample {
        space,
        eval_points,
        grid_size: total,
        reduction_ratio: total as f64 / kept_len as f64,
    })
}
