//! Function-preserving transformations of network parameters.
//!
//! Permutations are index arrays. `perm[i] = j` means the new neuron `i` is
//! the old neuron `j`: the permutation matrix `P` has `P[i][perm[i]] = 1`, so
//! `P W` gathers rows by `perm` and `W P^T` gathers columns by `perm`.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, structure, Error, Result};
use crate::nn::{check_shapes, Architecture, Layer, Matrix, NetworkParams};

/// Default absolute tolerance for sampled function comparisons.
pub const EQUIVALENCE_TOLERANCE: f64 = 1e-9;

fn is_permutation(p: &[usize]) -> bool {
    let mut seen = vec![false; p.len()];
    for &j in p {
        if j >= p.len() || seen[j] {
            return false;
        }
        seen[j] = true;
    }
    true
}

/// One permutation per hidden layer.
///
/// Serialized as a JSON list of 0-based index arrays, hidden layer 1 first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<usize>>", into = "Vec<Vec<usize>>")]
pub struct PermutationSpec {
    perms: Vec<Vec<usize>>,
}

impl TryFrom<Vec<Vec<usize>>> for PermutationSpec {
    type Error = Error;

    fn try_from(perms: Vec<Vec<usize>>) -> Result<Self> {
        PermutationSpec::new(perms)
    }
}

impl From<PermutationSpec> for Vec<Vec<usize>> {
    fn from(pi: PermutationSpec) -> Self {
        pi.perms
    }
}

impl PermutationSpec {
    pub fn new(perms: Vec<Vec<usize>>) -> Result<Self> {
        if let Some(bad) = perms.iter().position(|p| !is_permutation(p)) {
            return Err(domain(format!(
                "entry for hidden layer {} is not a permutation",
                bad + 1
            )));
        }
        Ok(PermutationSpec { perms })
    }

    pub fn identity(arch: &Architecture) -> Self {
        PermutationSpec {
            perms: arch
                .hidden_widths
                .iter()
                .map(|&d| (0..d).collect())
                .collect(),
        }
    }

    pub fn random<R: Rng + ?Sized>(arch: &Architecture, rng: &mut R) -> Self {
        PermutationSpec {
            perms: arch
                .hidden_widths
                .iter()
                .map(|&d| {
                    let mut p: Vec<usize> = (0..d).collect();
                    p.shuffle(rng);
                    p
                })
                .collect(),
        }
    }

    pub fn perms(&self) -> &[Vec<usize>] {
        &self.perms
    }

    /// Permutation of hidden layer `l` (1-based).
    pub fn layer(&self, l: usize) -> &[usize] {
        &self.perms[l - 1]
    }

    pub fn is_identity(&self) -> bool {
        self.perms
            .iter()
            .all(|p| p.iter().enumerate().all(|(i, &j)| i == j))
    }

    pub fn inverse(&self) -> Self {
        PermutationSpec {
            perms: self
                .perms
                .iter()
                .map(|p| {
                    let mut inv = vec![0; p.len()];
                    for (i, &j) in p.iter().enumerate() {
                        inv[j] = i;
                    }
                    inv
                })
                .collect(),
        }
    }

    /// `outer ∘ inner`: applying `inner` then `outer` equals applying the result.
    pub fn compose(outer: &PermutationSpec, inner: &PermutationSpec) -> Result<Self> {
        if outer.perms.len() != inner.perms.len()
            || outer
                .perms
                .iter()
                .zip(&inner.perms)
                .any(|(a, b)| a.len() != b.len())
        {
            return Err(structure("cannot compose permutations of different shapes"));
        }
        Ok(PermutationSpec {
            perms: outer
                .perms
                .iter()
                .zip(&inner.perms)
                .map(|(o, i)| o.iter().map(|&k| i[k]).collect())
                .collect(),
        })
    }

    pub fn check_against(&self, arch: &Architecture) -> Result<()> {
        if self.perms.len() != arch.depth()
            || self
                .perms
                .iter()
                .zip(&arch.hidden_widths)
                .any(|(p, &d)| p.len() != d)
        {
            return Err(structure(format!(
                "permutation sizes {:?} do not match hidden widths {:?}",
                self.perms.iter().map(Vec::len).collect::<Vec<_>>(),
                arch.hidden_widths
            )));
        }
        Ok(())
    }

    /// Every permutation spec for `arch`, in lexicographic order per layer.
    pub fn enumerate(arch: &Architecture) -> Vec<PermutationSpec> {
        use itertools::Itertools;
        arch.hidden_widths
            .iter()
            .map(|&d| (0..d).permutations(d).collect::<Vec<_>>())
            .multi_cartesian_product()
            .map(|perms| PermutationSpec { perms })
            .collect()
    }
}

fn gather_rows(layer: &Layer, perm: &[usize]) -> Layer {
    let mut out = Layer::zeros(layer.out_dim(), layer.in_dim());
    for (i, &j) in perm.iter().enumerate() {
        out.weights.row_mut(i).copy_from_slice(layer.weights.row(j));
        out.bias[i] = layer.bias[j];
    }
    out
}

fn gather_cols(layer: &mut Layer, perm: &[usize]) {
    for r in 0..layer.out_dim() {
        let row = layer.weights.row(r).to_vec();
        for (i, &j) in perm.iter().enumerate() {
            layer.weights[(r, i)] = row[j];
        }
    }
}

fn params_shape_matches(params: &NetworkParams, pi: &PermutationSpec) -> Result<()> {
    let n = params.layers.len();
    if pi.perms.len() + 1 != n {
        return Err(structure(format!(
            "{} permutations for {} hidden layers",
            pi.perms.len(),
            n.saturating_sub(1)
        )));
    }
    for (l, p) in pi.perms.iter().enumerate() {
        if params.layers[l].out_dim() != p.len() || params.layers[l + 1].in_dim() != p.len() {
            return Err(structure(format!(
                "permutation for hidden layer {} has size {}, layer width is {}",
                l + 1,
                p.len(),
                params.layers[l].out_dim()
            )));
        }
    }
    Ok(())
}

/// Permutes hidden neurons: `W̃^(l) = P_l W^(l) P_{l−1}^T`, `b̃^(l) = P_l b^(l)`,
/// `W̃^(L+1) = W^(L+1) P_L^T`.
///
/// Entries are only moved, so the result is bit-exact.
pub fn apply_permutation(params: &NetworkParams, pi: &PermutationSpec) -> Result<NetworkParams> {
    params_shape_matches(params, pi)?;
    let n = params.layers.len();
    let mut layers = Vec::with_capacity(n);
    for l in 0..n {
        let mut layer = if l < n - 1 {
            gather_rows(&params.layers[l], &pi.perms[l])
        } else {
            params.layers[l].clone()
        };
        if l > 0 {
            gather_cols(&mut layer, &pi.perms[l - 1]);
        }
        layers.push(layer);
    }
    Ok(NetworkParams { layers })
}

/// Per-neuron positive rescaling of hidden layer `layer` (1-based).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingSpec {
    pub layer: usize,
    pub factors: Vec<f64>,
}

impl ScalingSpec {
    pub fn uniform(layer: usize, width: usize, alpha: f64) -> Self {
        ScalingSpec {
            layer,
            factors: vec![alpha; width],
        }
    }
}

fn hidden_layer_index(arch: &Architecture, l: usize, width: usize) -> Result<()> {
    if l == 0 || l > arch.depth() {
        return Err(domain(format!(
            "hidden layer {l} outside 1..={}",
            arch.depth()
        )));
    }
    if width != arch.width(l) {
        return Err(structure(format!(
            "got {width} entries for hidden layer {l} of width {}",
            arch.width(l)
        )));
    }
    Ok(())
}

/// Multiplies row `i` of `(W^(l), b^(l))` by `α_i` and divides column `i` of
/// `W^(l+1)` by `α_i`. Requires a positively homogeneous activation.
pub fn apply_scaling(
    arch: &Architecture,
    params: &NetworkParams,
    spec: &ScalingSpec,
) -> Result<NetworkParams> {
    check_shapes(arch, params)?;
    hidden_layer_index(arch, spec.layer, spec.factors.len())?;
    let act = arch.activations[spec.layer - 1];
    if !act.is_positive_homogeneous() {
        return Err(Error::Unsupported(format!(
            "scaling needs a positively homogeneous activation, layer {} uses {act}",
            spec.layer
        )));
    }
    if let Some(a) = spec.factors.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
        return Err(domain(format!(
            "scaling factor {a} is not positive and finite"
        )));
    }
    let mut out = params.clone();
    let l = spec.layer - 1;
    for (i, &a) in spec.factors.iter().enumerate() {
        for w in out.layers[l].weights.row_mut(i) {
            *w *= a;
        }
        out.layers[l].bias[i] *= a;
        let next = &mut out.layers[l + 1].weights;
        for r in 0..next.rows() {
            next[(r, i)] /= a;
        }
    }
    Ok(out)
}

/// Negates row `i` of `(W^(l), b^(l))` and column `i` of `W^(l+1)` wherever
/// `mask[i] = -1`. Requires an odd activation.
pub fn apply_sign_flip(
    arch: &Architecture,
    params: &NetworkParams,
    layer: usize,
    mask: &[i8],
) -> Result<NetworkParams> {
    check_shapes(arch, params)?;
    hidden_layer_index(arch, layer, mask.len())?;
    let act = arch.activations[layer - 1];
    if !act.is_odd() {
        return Err(Error::Unsupported(format!(
            "sign flipping needs an odd activation, layer {layer} uses {act}"
        )));
    }
    if mask.iter().any(|&s| s != 1 && s != -1) {
        return Err(domain("sign mask entries must be +1 or -1"));
    }
    let mut out = params.clone();
    let l = layer - 1;
    for (i, _) in mask.iter().enumerate().filter(|(_, &s)| s == -1) {
        for w in out.layers[l].weights.row_mut(i) {
            *w = -*w;
        }
        out.layers[l].bias[i] = -out.layers[l].bias[i];
        let next = &mut out.layers[l + 1].weights;
        for r in 0..next.rows() {
            next[(r, i)] = -next[(r, i)];
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoolKind {
    Max,
    Min,
    Avg,
}

/// Non-overlapping pooling regions over the rows of a pre-activation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolingPartition {
    regions: Vec<Vec<usize>>,
    kind: PoolKind,
    rows: usize,
}

impl PoolingPartition {
    pub fn new(rows: usize, regions: Vec<Vec<usize>>, kind: PoolKind) -> Result<Self> {
        let mut owner = vec![usize::MAX; rows];
        for (k, region) in regions.iter().enumerate() {
            if region.is_empty() {
                return Err(domain(format!("pooling region {k} is empty")));
            }
            for &i in region {
                if i >= rows {
                    return Err(domain(format!("row {i} outside 0..{rows}")));
                }
                if owner[i] != usize::MAX {
                    return Err(domain(format!("row {i} appears in two regions")));
                }
                owner[i] = k;
            }
        }
        if owner.contains(&usize::MAX) {
            return Err(domain("pooling regions do not cover every row"));
        }
        Ok(PoolingPartition {
            regions,
            kind,
            rows,
        })
    }

    /// Consecutive regions of equal size.
    pub fn contiguous(rows: usize, size: usize, kind: PoolKind) -> Result<Self> {
        if size == 0 || !rows.is_multiple_of(size) {
            return Err(domain(format!(
                "{rows} rows do not split into regions of {size}"
            )));
        }
        Self::new(
            rows,
            (0..rows / size)
                .map(|k| (k * size..(k + 1) * size).collect())
                .collect(),
            kind,
        )
    }

    pub fn regions(&self) -> &[Vec<usize>] {
        &self.regions
    }

    pub fn kind(&self) -> PoolKind {
        self.kind
    }

    fn region_of(&self) -> Vec<usize> {
        let mut owner = vec![0; self.rows];
        for (k, region) in self.regions.iter().enumerate() {
            for &i in region {
                owner[i] = k;
            }
        }
        owner
    }

    /// Pools `values` (one per row) region by region.
    pub fn pool(&self, values: &[f64]) -> Vec<f64> {
        self.regions
            .iter()
            .map(|region| {
                let it = region.iter().map(|&i| values[i]);
                match self.kind {
                    PoolKind::Max => it.fold(f64::NEG_INFINITY, f64::max),
                    PoolKind::Min => it.fold(f64::INFINITY, f64::min),
                    // Summed in sorted order so the result does not depend
                    // on the order of rows within the region.
                    PoolKind::Avg => {
                        let mut v: Vec<f64> = it.collect();
                        v.sort_by(f64::total_cmp);
                        v.iter().sum::<f64>() / v.len() as f64
                    }
                }
            })
            .collect()
    }
}

/// `Pool(W x + b)`.
pub fn pooled_forward(
    weights: &Matrix,
    bias: &[f64],
    partition: &PoolingPartition,
    x: &[f64],
) -> Vec<f64> {
    let z: Vec<f64> = weights
        .matvec(x)
        .iter()
        .zip(bias)
        .map(|(a, b)| a + b)
        .collect();
    partition.pool(&z)
}

/// Permutes rows of `(W, b)` within pooling regions.
pub fn apply_pooling_permutation(
    weights: &Matrix,
    bias: &[f64],
    partition: &PoolingPartition,
    perm: &[usize],
) -> Result<(Matrix, Vec<f64>)> {
    if weights.rows() != bias.len() || perm.len() != bias.len() || partition.rows != bias.len() {
        return Err(structure(
            "weights, bias, partition and permutation sizes disagree",
        ));
    }
    if !is_permutation(perm) {
        return Err(domain("row map is not a permutation"));
    }
    let owner = partition.region_of();
    if let Some((i, &j)) = perm
        .iter()
        .enumerate()
        .find(|(i, &j)| owner[*i] != owner[j])
    {
        return Err(domain(format!(
            "row {j} would move across pooling regions into position {i}"
        )));
    }
    let layer = gather_rows(
        &Layer {
            weights: weights.clone(),
            bias: bias.to_vec(),
        },
        perm,
    );
    Ok((layer.weights, layer.bias))
}

fn softmax_rows(m: &mut Matrix) {
    for i in 0..m.rows() {
        let row = m.row_mut(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
}

/// Single-head attention `softmax(X W_Q W_K^T X^T / √d_k) X W_V`.
pub fn attention(x: &Matrix, wq: &Matrix, wk: &Matrix, wv: &Matrix) -> Result<Matrix> {
    if wq.cols() != wk.cols() {
        return Err(structure("W_Q and W_K must share the key dimension"));
    }
    let q = x.matmul(wq)?;
    let k = x.matmul(wk)?;
    let v = x.matmul(wv)?;
    let mut scores = q.matmul(&k.transpose())?;
    let scale = (wq.cols() as f64).sqrt();
    for s in scores.as_mut_slice() {
        *s /= scale;
    }
    softmax_rows(&mut scores);
    scores.matmul(&v)
}

fn check_permutation_matrix(p: &Matrix) -> Result<()> {
    if p.rows() != p.cols() {
        return Err(domain("permutation matrix must be square"));
    }
    let n = p.rows();
    if p.as_slice().iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(domain("permutation matrix entries must be 0 or 1"));
    }
    for i in 0..n {
        let row: f64 = p.row(i).iter().sum();
        let col: f64 = (0..n).map(|r| p[(r, i)]).sum();
        if row != 1.0 || col != 1.0 {
            return Err(domain(
                "permutation matrix needs exactly one 1 per row and column",
            ));
        }
    }
    Ok(())
}

/// Returns `(W_Q P, W_K P, W_V)`; the attention map is unchanged since `P P^T = I`.
pub fn attention_permutation_equivalent(
    wq: &Matrix,
    wk: &Matrix,
    wv: &Matrix,
    p: &Matrix,
) -> Result<(Matrix, Matrix, Matrix)> {
    check_permutation_matrix(p)?;
    if wq.cols() != p.rows() || wk.cols() != p.rows() {
        return Err(structure(format!(
            "W_Q and W_K need {} columns to match P",
            p.rows()
        )));
    }
    Ok((wq.matmul(p)?, wk.matmul(p)?, wv.clone()))
}

/// Largest `‖(x + F₁(x)) − (x + F₂(x))‖∞` over the samples.
pub fn residual_sup_gap<F1, F2>(f1: F1, f2: F2, samples: &[Vec<f64>]) -> Result<f64>
where
    F1: Fn(&[f64]) -> Vec<f64>,
    F2: Fn(&[f64]) -> Vec<f64>,
{
    let mut gap = 0.0f64;
    for x in samples {
        let (a, b) = (f1(x), f2(x));
        if a.len() != x.len() || b.len() != x.len() {
            return Err(structure(
                "residual inner maps must preserve the input dimension",
            ));
        }
        for ((xi, ai), bi) in x.iter().zip(&a).zip(&b) {
            gap = gap.max(((xi + ai) - (xi + bi)).abs());
        }
    }
    Ok(gap)
}

/// Sample-resolution check that two residual blocks `x ↦ x + F(x)` agree.
///
/// A `true` result is evidence, not proof: only the given samples are checked.
pub fn residual_equivalence_check<F1, F2>(
    f1: F1,
    f2: F2,
    samples: &[Vec<f64>],
    tolerance: f64,
) -> Result<bool>
where
    F1: Fn(&[f64]) -> Vec<f64>,
    F2: Fn(&[f64]) -> Vec<f64>,
{
    Ok(residual_sup_gap(f1, f2, samples)? <= tolerance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::Activation;
    use crate::nn::forward;
    use crate::rng::{seeded, uniform_in_ball, uniform_params};

    fn swap_example() -> (Architecture, NetworkParams) {
        let arch = Architecture::uniform(1, &[2], Activation::Relu).unwrap();
        // W1 = [[1],[2]], b1 = [3,4], W2 = [[5,6]], b2 = [7]
        let p = NetworkParams::from_flat(&arch, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]).unwrap();
        (arch, p)
    }

    fn max_forward_gap(
        arch: &Architecture,
        a: &NetworkParams,
        b: &NetworkParams,
        seed: u64,
    ) -> f64 {
        let mut rng = seeded(seed);
        (0..1000)
            .map(|_| {
                let x = uniform_in_ball(arch.input_dim, 1.0, &mut rng);
                (forward(arch, a, &x).unwrap()[0] - forward(arch, b, &x).unwrap()[0]).abs()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn identity_permutation_is_bit_exact() {
        let (arch, p) = swap_example();
        let q = apply_permutation(&p, &PermutationSpec::identity(&arch)).unwrap();
        assert!(q.bit_eq(&p));
    }

    #[test]
    fn hand_swap() {
        let (_, p) = swap_example();
        let q = apply_permutation(&p, &PermutationSpec::new(vec![vec![1, 0]]).unwrap()).unwrap();
        assert_eq!(q.to_flat(), vec![2.0, 1.0, 4.0, 3.0, 6.0, 5.0, 7.0]);
    }

    #[test]
    fn permutation_preserves_function_on_deep_net() {
        let arch = Architecture::uniform(2, &[3, 3], Activation::Tanh).unwrap();
        let mut rng = seeded(3);
        let p = uniform_params(&arch, 1.0, &mut rng);
        let pi = PermutationSpec::random(&arch, &mut rng);
        let q = apply_permutation(&p, &pi).unwrap();
        assert!(max_forward_gap(&arch, &p, &q, 4) <= EQUIVALENCE_TOLERANCE);
    }

    #[test]
    fn composition_and_inverse() {
        let arch = Architecture::uniform(2, &[4, 3], Activation::Sigmoid).unwrap();
        let mut rng = seeded(5);
        let p = uniform_params(&arch, 1.0, &mut rng);
        let a = PermutationSpec::random(&arch, &mut rng);
        let b = PermutationSpec::random(&arch, &mut rng);
        let two_step = apply_permutation(&apply_permutation(&p, &a).unwrap(), &b).unwrap();
        let composed = apply_permutation(&p, &PermutationSpec::compose(&b, &a).unwrap()).unwrap();
        assert!(two_step.bit_eq(&composed));
        assert!(PermutationSpec::compose(&a, &a.inverse())
            .unwrap()
            .is_identity());
    }

    #[test]
    fn permutation_size_mismatch() {
        let (_, p) = swap_example();
        let bad = PermutationSpec::new(vec![vec![2, 0, 1]]).unwrap();
        assert!(matches!(
            apply_permutation(&p, &bad),
            Err(Error::Structure(_))
        ));
        assert!(PermutationSpec::new(vec![vec![0, 0]]).is_err());
    }

    #[test]
    fn permutation_spec_json_is_list_of_arrays() {
        let pi = PermutationSpec::new(vec![vec![1, 0, 2], vec![0]]).unwrap();
        assert_eq!(serde_json::to_string(&pi).unwrap(), "[[1,0,2],[0]]");
        let back: PermutationSpec = serde_json::from_str("[[1,0,2],[0]]").unwrap();
        assert_eq!(back, pi);
        assert!(serde_json::from_str::<PermutationSpec>("[[1,1]]").is_err());
    }

    #[test]
    fn unit_scaling_is_bit_exact() {
        let (arch, p) = swap_example();
        let q = apply_scaling(&arch, &p, &ScalingSpec::uniform(1, 2, 1.0)).unwrap();
        assert!(q.bit_eq(&p));
    }

    #[test]
    fn doubling_relu_layer() {
        let arch = Architecture::uniform(2, &[4], Activation::Relu).unwrap();
        let mut rng = seeded(8);
        let p = uniform_params(&arch, 1.0, &mut rng);
        let q = apply_scaling(&arch, &p, &ScalingSpec::uniform(1, 4, 2.0)).unwrap();
        for (a, b) in p.layers[0]
            .weights
            .as_slice()
            .iter()
            .zip(q.layers[0].weights.as_slice())
        {
            assert_eq!(2.0 * a, *b);
        }
        for (a, b) in p.layers[1]
            .weights
            .as_slice()
            .iter()
            .zip(q.layers[1].weights.as_slice())
        {
            assert_eq!(a / 2.0, *b);
        }
        assert!(max_forward_gap(&arch, &p, &q, 9) <= EQUIVALENCE_TOLERANCE);
    }

    #[test]
    fn scaling_gated_by_activation() {
        for act in [Activation::Tanh, Activation::Sigmoid] {
            let arch = Architecture::uniform(1, &[2], act).unwrap();
            let p = NetworkParams::zeros(&arch);
            assert!(matches!(
                apply_scaling(&arch, &p, &ScalingSpec::uniform(1, 2, 2.0)),
                Err(Error::Unsupported(_))
            ));
        }
        let arch = Architecture::uniform(1, &[2], Activation::Relu).unwrap();
        let p = NetworkParams::zeros(&arch);
        let bad = ScalingSpec {
            layer: 1,
            factors: vec![1.0, 0.0],
        };
        assert!(matches!(
            apply_scaling(&arch, &p, &bad),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn sign_flip_cases() {
        let arch = Architecture::uniform(1, &[2], Activation::Tanh).unwrap();
        let mut rng = seeded(11);
        let p = uniform_params(&arch, 1.0, &mut rng);
        assert!(apply_sign_flip(&arch, &p, 1, &[1, 1]).unwrap().bit_eq(&p));
        let q = apply_sign_flip(&arch, &p, 1, &[-1, -1]).unwrap();
        assert!(max_forward_gap(&arch, &p, &q, 12) <= EQUIVALENCE_TOLERANCE);
        assert!(apply_sign_flip(&arch, &p, 1, &[0, 1]).is_err());

        let sig = Architecture::uniform(1, &[2], Activation::Sigmoid).unwrap();
        assert!(matches!(
            apply_sign_flip(&sig, &p, 1, &[-1, 1]),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn pooling_permutations() {
        let mut rng = seeded(13);
        let w =
            Matrix::from_vec(4, 3, (0..12).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let b: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();

        let singletons = PoolingPartition::contiguous(4, 1, PoolKind::Max).unwrap();
        let (w1, b1) = apply_pooling_permutation(&w, &b, &singletons, &[0, 1, 2, 3]).unwrap();
        assert_eq!((w1.clone(), b1.clone()), (w.clone(), b.clone()));
        assert!(apply_pooling_permutation(&w, &b, &singletons, &[1, 0, 2, 3]).is_err());

        for kind in [PoolKind::Max, PoolKind::Min, PoolKind::Avg] {
            let part = PoolingPartition::contiguous(4, 2, kind).unwrap();
            let (w2, b2) = apply_pooling_permutation(&w, &b, &part, &[1, 0, 2, 3]).unwrap();
            for _ in 0..1000 {
                let x = uniform_in_ball(3, 1.0, &mut rng);
                assert_eq!(
                    pooled_forward(&w, &b, &part, &x),
                    pooled_forward(&w2, &b2, &part, &x)
                );
            }
            assert!(matches!(
                apply_pooling_permutation(&w, &b, &part, &[0, 2, 1, 3]),
                Err(Error::Domain(_))
            ));
        }
    }

    #[test]
    fn partition_validation() {
        assert!(PoolingPartition::new(3, vec![vec![0, 1], vec![1, 2]], PoolKind::Max).is_err());
        assert!(PoolingPartition::new(3, vec![vec![0, 1]], PoolKind::Max).is_err());
        assert!(PoolingPartition::new(3, vec![vec![0, 1, 2], vec![]], PoolKind::Max).is_err());
    }

    #[test]
    fn attention_identity_and_rejection() {
        let mut rng = seeded(17);
        let mut rand_m = |r, c| {
            Matrix::from_vec(r, c, (0..r * c).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
        };
        let (wq, wk, wv) = (rand_m(2, 2), rand_m(2, 2), rand_m(2, 2));
        let (q, k, v) =
            attention_permutation_equivalent(&wq, &wk, &wv, &Matrix::identity(2)).unwrap();
        assert_eq!((q, k, v), (wq.clone(), wk.clone(), wv.clone()));
        let not_perm = Matrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 0.0]]).unwrap();
        assert!(matches!(
            attention_permutation_equivalent(&wq, &wk, &wv, &not_perm),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn residual_checks() {
        let samples: Vec<Vec<f64>> = (0..50)
            .map(|i| vec![i as f64 * 0.1, -(i as f64) * 0.05])
            .collect();
        let f = |x: &[f64]| vec![x[0].sin(), x[1] * x[0]];
        assert!(residual_equivalence_check(f, f, &samples, 1e-12).unwrap());
        let g = |x: &[f64]| vec![x[0].sin() + 0.1, x[1] * x[0] + 0.1];
        assert!(!residual_equivalence_check(f, g, &samples, 1e-6).unwrap());
        let shrink = |x: &[f64]| vec![x[0]];
        assert!(residual_equivalence_check(f, shrink, &samples, 1.0).is_err());
    }
}
