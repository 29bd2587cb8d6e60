//! Dense feed-forward networks at desk scale.
//!
//! A network with `L` hidden layers has `L + 1` affine maps. Layer `l`
//! (1-based, as in the rest of the crate) holds a `d_l × d_{l-1}` weight
//! matrix stored row-major and a length-`d_l` bias. Hidden layer `l` is
//! followed by `activations[l - 1]`; the output layer is affine only.

use serde::{Deserialize, Serialize};

use crate::activation::Activation;
use crate::error::{domain, structure, Error, Result};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(structure(format!(
                "matrix {rows}x{cols} needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(structure("ragged rows"));
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        })
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(structure(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    /// `self · x` for a vector `x` of length `cols`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(w, v)| w * v).sum())
            .collect()
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Layer widths and activations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Architecture {
    #[serde(rename = "d0")]
    pub input_dim: usize,
    #[serde(rename = "hidden")]
    pub hidden_widths: Vec<usize>,
    #[serde(rename = "out")]
    pub output_dim: usize,
    pub activations: Vec<Activation>,
}

impl Architecture {
    pub fn new(
        input_dim: usize,
        hidden_widths: Vec<usize>,
        output_dim: usize,
        activations: Vec<Activation>,
    ) -> Result<Self> {
        let arch = Architecture {
            input_dim,
            hidden_widths,
            output_dim,
            activations,
        };
        arch.validate()?;
        Ok(arch)
    }

    /// Same activation on every hidden layer, scalar output.
    pub fn uniform(input_dim: usize, hidden_widths: &[usize], act: Activation) -> Result<Self> {
        Self::new(
            input_dim,
            hidden_widths.to_vec(),
            1,
            vec![act; hidden_widths.len()],
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden_widths.is_empty() {
            return Err(structure("at least one hidden layer is required"));
        }
        if self.input_dim == 0 || self.output_dim == 0 || self.hidden_widths.contains(&0) {
            return Err(structure("all widths must be at least 1"));
        }
        if self.activations.len() != self.hidden_widths.len() {
            return Err(structure(format!(
                "{} hidden layers but {} activations",
                self.hidden_widths.len(),
                self.activations.len()
            )));
        }
        Ok(())
    }

    /// Number of hidden layers `L`.
    #[inline]
    pub fn depth(&self) -> usize {
        self.hidden_widths.len()
    }

    /// `d_l` for `l` in `0..=L+1`; `d_{L+1}` is the output dimension.
    pub fn width(&self, l: usize) -> usize {
        match l {
            0 => self.input_dim,
            l if l <= self.depth() => self.hidden_widths[l - 1],
            l if l == self.depth() + 1 => self.output_dim,
            _ => panic!("layer index {l} out of range"),
        }
    }

    /// `(d_0, d_1, …, d_L, d_{L+1})`.
    pub fn widths(&self) -> Vec<usize> {
        (0..=self.depth() + 1).map(|l| self.width(l)).collect()
    }

    /// Parameters of affine layer `l` (1-based): `d_{l-1} d_l + d_l`.
    pub fn layer_param_count(&self, l: usize) -> usize {
        self.width(l - 1) * self.width(l) + self.width(l)
    }

    /// Total parameter count `S`.
    pub fn param_count(&self) -> usize {
        (1..=self.depth() + 1)
            .map(|l| self.layer_param_count(l))
            .sum()
    }

    /// Hidden neuron count `U`.
    pub fn hidden_units(&self) -> usize {
        self.hidden_widths.iter().sum()
    }

    /// Widest hidden layer.
    pub fn max_hidden_width(&self) -> usize {
        self.hidden_widths.iter().copied().max().unwrap_or(0)
    }

    /// Compact `d0-d1-…-out` label.
    pub fn label(&self) -> String {
        self.widths()
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join("-")
    }
}

/// Weight matrix and bias of one affine layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

impl Layer {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Layer {
            weights: Matrix::zeros(rows, cols),
            bias: vec![0.0; rows],
        }
    }

    pub fn new(weights: Matrix, bias: Vec<f64>) -> Result<Self> {
        if weights.rows() != bias.len() {
            return Err(structure(format!(
                "weight matrix has {} rows but bias has {} entries",
                weights.rows(),
                bias.len()
            )));
        }
        Ok(Layer { weights, bias })
    }

    #[inline]
    pub fn out_dim(&self) -> usize {
        self.weights.rows()
    }

    #[inline]
    pub fn in_dim(&self) -> usize {
        self.weights.cols()
    }

    /// Row `i` of the concatenated `(W; b)` with the bias entry first.
    pub fn neuron_row(&self, i: usize) -> impl Iterator<Item = f64> + '_ {
        std::iter::once(self.bias[i]).chain(self.weights.row(i).iter().copied())
    }
}

/// Parameters `θ`: one [`Layer`] per affine map, input side first.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    pub layers: Vec<Layer>,
}

impl NetworkParams {
    pub fn zeros(arch: &Architecture) -> Self {
        let w = arch.widths();
        NetworkParams {
            layers: (1..w.len()).map(|l| Layer::zeros(w[l], w[l - 1])).collect(),
        }
    }

    /// Builds parameters from a flat vector in layer order (`W^(l)` row-major, then `b^(l)`).
    pub fn from_flat(arch: &Architecture, flat: &[f64]) -> Result<Self> {
        if flat.len() != arch.param_count() {
            return Err(structure(format!(
                "expected {} parameters, got {}",
                arch.param_count(),
                flat.len()
            )));
        }
        let mut params = NetworkParams::zeros(arch);
        let mut k = 0;
        for layer in &mut params.layers {
            let n = layer.weights.as_slice().len();
            layer
                .weights
                .as_mut_slice()
                .copy_from_slice(&flat[k..k + n]);
            k += n;
            let m = layer.bias.len();
            layer.bias.copy_from_slice(&flat[k..k + m]);
            k += m;
        }
        Ok(params)
    }

    /// Flattens in the order used by [`NetworkParams::from_flat`].
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for layer in &self.layers {
            out.extend_from_slice(layer.weights.as_slice());
            out.extend_from_slice(&layer.bias);
        }
        out
    }

    pub fn len(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.as_slice().len() + l.bias.len())
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Iterates every entry in flat order.
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers
            .iter()
            .flat_map(|l| l.weights.as_slice().iter().chain(&l.bias).copied())
    }

    /// `‖θ‖∞`.
    pub fn max_abs(&self) -> f64 {
        self.values().map(f64::abs).fold(0.0, f64::max)
    }

    /// `‖θ − other‖∞`. Shapes must agree.
    pub fn linf_distance(&self, other: &NetworkParams) -> f64 {
        self.values()
            .zip(other.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Bit-level equality, distinguishing `-0.0` from `0.0`.
    pub fn bit_eq(&self, other: &NetworkParams) -> bool {
        self.len() == other.len()
            && self
                .layers
                .iter()
                .zip(&other.layers)
                .all(|(a, b)| a.weights.rows() == b.weights.rows() && a.in_dim() == b.in_dim())
            && self
                .values()
                .zip(other.values())
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }

    /// Bit patterns of all entries, usable as a hash key.
    pub fn bit_key(&self) -> Vec<u64> {
        self.values().map(f64::to_bits).collect()
    }

    /// True when every entry lies in `[-bound, bound]`.
    pub fn within_box(&self, bound: f64) -> bool {
        self.values().all(|v| v.abs() <= bound)
    }

    /// `self - step * grad`, entrywise.
    pub fn axpy(&self, step: f64, grad: &NetworkParams) -> NetworkParams {
        let mut out = self.clone();
        for (layer, g) in out.layers.iter_mut().zip(&grad.layers) {
            for (w, gw) in layer
                .weights
                .as_mut_slice()
                .iter_mut()
                .zip(g.weights.as_slice())
            {
                *w -= step * gw;
            }
            for (b, gb) in layer.bias.iter_mut().zip(&g.bias) {
                *b -= step * gb;
            }
        }
        out
    }
}

/// Checks that `params` has the shapes `arch` prescribes.
pub fn check_shapes(arch: &Architecture, params: &NetworkParams) -> Result<()> {
    arch.validate()?;
    let w = arch.widths();
    if params.layers.len() != w.len() - 1 {
        return Err(structure(format!(
            "architecture has {} affine layers, params have {}",
            w.len() - 1,
            params.layers.len()
        )));
    }
    for (l, layer) in params.layers.iter().enumerate() {
        let (rows, cols) = (w[l + 1], w[l]);
        if layer.weights.rows() != rows || layer.weights.cols() != cols || layer.bias.len() != rows
        {
            return Err(structure(format!(
                "layer {} should be {rows}x{cols} with {rows} biases, found {}x{} with {}",
                l + 1,
                layer.weights.rows(),
                layer.weights.cols(),
                layer.bias.len()
            )));
        }
    }
    Ok(())
}

fn affine(layer: &Layer, x: &[f64]) -> Vec<f64> {
    (0..layer.out_dim())
        .map(|i| {
            layer
                .weights
                .row(i)
                .iter()
                .zip(x)
                .fold(layer.bias[i], |acc, (w, v)| acc + w * v)
        })
        .collect()
}

fn check_finite(v: &[f64], layer: usize) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { layer })
    }
}

/// Evaluates `f(x; θ)`.
pub fn forward(arch: &Architecture, params: &NetworkParams, x: &[f64]) -> Result<Vec<f64>> {
    check_shapes(arch, params)?;
    if x.len() != arch.input_dim {
        return Err(structure(format!(
            "input has length {}, expected {}",
            x.len(),
            arch.input_dim
        )));
    }
    check_finite(x, 0)?;
    forward_unchecked(arch, params, x)
}

/// [`forward`] without the shape validation; for hot loops over a fixed network.
pub(crate) fn forward_unchecked(
    arch: &Architecture,
    params: &NetworkParams,
    x: &[f64],
) -> Result<Vec<f64>> {
    let mut h = x.to_vec();
    let last = params.layers.len() - 1;
    for (l, layer) in params.layers.iter().enumerate() {
        let mut z = affine(layer, &h);
        if l < last {
            let act = arch.activations[l];
            for v in &mut z {
                *v = act.apply(*v);
            }
        }
        check_finite(&z, l + 1)?;
        h = z;
    }
    Ok(h)
}

/// Scalar output `f(x; θ)` for single-output networks.
pub fn forward_scalar(arch: &Architecture, params: &NetworkParams, x: &[f64]) -> Result<f64> {
    Ok(forward(arch, params, x)?[0])
}

/// Pre-activations `z^(l)` of every hidden layer `l = 1..=L`.
pub fn hidden_preactivations(
    arch: &Architecture,
    params: &NetworkParams,
    x: &[f64],
) -> Result<Vec<Vec<f64>>> {
    check_shapes(arch, params)?;
    let mut out = Vec::with_capacity(arch.depth());
    let mut h = x.to_vec();
    for (l, layer) in params.layers[..arch.depth()].iter().enumerate() {
        let z = affine(layer, &h);
        check_finite(&z, l + 1)?;
        h = z.iter().map(|&v| arch.activations[l].apply(v)).collect();
        out.push(z);
    }
    Ok(out)
}

/// Scalar loss of the network output against a target.
pub trait Loss {
    fn value(&self, output: &[f64], target: &[f64]) -> f64;
    /// `∂loss/∂output`.
    fn output_grad(&self, output: &[f64], target: &[f64]) -> Vec<f64>;
}

/// `Σ (o_i − t_i)²`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SquaredError;

impl Loss for SquaredError {
    fn value(&self, output: &[f64], target: &[f64]) -> f64 {
        output
            .iter()
            .zip(target)
            .map(|(o, t)| (o - t) * (o - t))
            .sum()
    }

    fn output_grad(&self, output: &[f64], target: &[f64]) -> Vec<f64> {
        output
            .iter()
            .zip(target)
            .map(|(o, t)| 2.0 * (o - t))
            .collect()
    }
}

/// A loss that ignores the output.
#[derive(Debug, Clone, Copy)]
pub struct ConstantLoss(pub f64);

impl Loss for ConstantLoss {
    fn value(&self, _output: &[f64], _target: &[f64]) -> f64 {
        self.0
    }

    fn output_grad(&self, output: &[f64], _target: &[f64]) -> Vec<f64> {
        vec![0.0; output.len()]
    }
}

/// Reverse-mode gradient of `loss(f(x; θ), target)` with respect to `θ`.
///
/// Returns the loss value together with a gradient shaped like `params`.
pub fn gradient(
    arch: &Architecture,
    params: &NetworkParams,
    loss: &dyn Loss,
    x: &[f64],
    target: &[f64],
) -> Result<(f64, NetworkParams)> {
    check_shapes(arch, params)?;
    if x.len() != arch.input_dim || target.len() != arch.output_dim {
        return Err(structure("input or target has the wrong length"));
    }
    let mut grad = NetworkParams::zeros(arch);
    let value = accumulate_gradient(arch, params, loss, x, target, 1.0, &mut grad)?;
    Ok((value, grad))
}

/// Adds `scale · ∂loss/∂θ` into `grad` and returns the loss value.
pub(crate) fn accumulate_gradient(
    arch: &Architecture,
    params: &NetworkParams,
    loss: &dyn Loss,
    x: &[f64],
    target: &[f64],
    scale: f64,
    grad: &mut NetworkParams,
) -> Result<f64> {
    let n = params.layers.len();
    // inputs[l] feeds affine layer l; pre[l] is its pre-activation.
    let mut inputs: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut pre: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut h = x.to_vec();
    for (l, layer) in params.layers.iter().enumerate() {
        let z = affine(layer, &h);
        check_finite(&z, l + 1)?;
        inputs.push(h);
        h = if l + 1 < n {
            z.iter().map(|&v| arch.activations[l].apply(v)).collect()
        } else {
            z.clone()
        };
        pre.push(z);
    }
    let value = loss.value(&h, target);
    let mut delta = loss.output_grad(&h, target);

    for l in (0..n).rev() {
        if l + 1 < n {
            let act = arch.activations[l];
            for (d, &z) in delta.iter_mut().zip(&pre[l]) {
                *d *= act.derivative(z);
            }
        }
        let layer = &params.layers[l];
        let g = &mut grad.layers[l];
        for (i, &d) in delta.iter().enumerate() {
            let sd = scale * d;
            g.bias[i] += sd;
            for (gw, &a) in g.weights.row_mut(i).iter_mut().zip(&inputs[l]) {
                *gw += sd * a;
            }
        }
        if l > 0 {
            let mut next = vec![0.0; layer.in_dim()];
            for (i, &d) in delta.iter().enumerate() {
                for (nx, &w) in next.iter_mut().zip(layer.weights.row(i)) {
                    *nx += w * d;
                }
            }
            delta = next;
        }
    }
    Ok(value)
}

/// `B^(i) = (2B)^i · Π_{j<i} ρ_j d_j`, the range bound for hidden layer `i`'s
/// pre-activation.
///
/// `rho` holds `ρ_1, …` and needs at least `i − 1` entries. `input_radius`
/// is accepted for signature parity with the bound calculators but does not
/// enter the stated bound; the bound dominates the true range only when
/// `√d_0 · B_x ≤ 1`.
pub fn hidden_range_bound(
    arch: &Architecture,
    weight_bound: f64,
    input_radius: f64,
    i: usize,
    rho: &[f64],
) -> Result<f64> {
    let _ = input_radius;
    if i == 0 || i > arch.depth() {
        return Err(domain(format!(
            "hidden layer index {i} outside 1..={}",
            arch.depth()
        )));
    }
    if rho.len() < i - 1 {
        return Err(domain(format!(
            "need {} Lipschitz constants, got {}",
            i - 1,
            rho.len()
        )));
    }
    let mut bound = (2.0 * weight_bound).powi(i as i32);
    for j in 1..i {
        bound *= rho[j - 1] * arch.width(j) as f64;
    }
    Ok(bound)
}

/// Lipschitz constants `ρ_1, …, ρ_L`, each taken on `[-B^(i), B^(i)]`.
pub fn layer_lipschitz_constants(
    arch: &Architecture,
    weight_bound: f64,
    input_radius: f64,
) -> Vec<f64> {
    let mut rho = Vec::with_capacity(arch.depth());
    for i in 1..=arch.depth() {
        let range = hidden_range_bound(arch, weight_bound, input_radius, i, &rho)
            .expect("index in range by construction");
        rho.push(arch.activations[i - 1].lipschitz_on(range));
    }
    rho
}

/// On-disk form of a network.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkDoc {
    arch: Architecture,
    layers: Vec<LayerDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerDoc {
    #[serde(rename = "W")]
    weights: Vec<f64>,
    b: Vec<f64>,
}

/// Architecture and parameters together, as stored in network JSON files.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub arch: Architecture,
    pub params: NetworkParams,
}

impl Network {
    pub fn new(arch: Architecture, params: NetworkParams) -> Result<Self> {
        check_shapes(&arch, &params)?;
        Ok(Network { arch, params })
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        forward(&self.arch, &self.params, x)
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = NetworkDoc {
            arch: self.arch.clone(),
            layers: self
                .params
                .layers
                .iter()
                .map(|l| LayerDoc {
                    weights: l.weights.as_slice().to_vec(),
                    b: l.bias.clone(),
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: NetworkDoc = serde_json::from_str(s)?;
        doc.arch.validate()?;
        let w = doc.arch.widths();
        if doc.layers.len() != w.len() - 1 {
            return Err(structure(format!(
                "expected {} layers, found {}",
                w.len() - 1,
                doc.layers.len()
            )));
        }
        let layers = doc
            .layers
            .into_iter()
            .enumerate()
            .map(|(l, ld)| Layer::new(Matrix::from_vec(w[l + 1], w[l], ld.weights)?, ld.b))
            .collect::<Result<Vec<_>>>()?;
        Network::new(doc.arch, NetworkParams { layers })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use rand::Rng;

    fn one_one_one() -> (Architecture, NetworkParams) {
        let arch = Architecture::uniform(1, &[1], Activation::Identity).unwrap();
        let params = NetworkParams::from_flat(&arch, &[1.0, 0.0, 1.0, 0.0]).unwrap();
        (arch, params)
    }

    #[test]
    fn parameter_counts() {
        let arch = Architecture::uniform(1, &[2], Activation::Relu).unwrap();
        assert_eq!(arch.param_count(), 7);
        assert_eq!(arch.hidden_units(), 2);
        assert_eq!(arch.layer_param_count(1), 4);
        let deep = Architecture::uniform(2, &[3, 3], Activation::Tanh).unwrap();
        // 2*3+3 + 3*3+3 + 3+1
        assert_eq!(deep.param_count(), 25);
    }

    #[test]
    fn architecture_validation() {
        assert!(Architecture::new(1, vec![], 1, vec![]).is_err());
        assert!(Architecture::new(1, vec![2, 0], 1, vec![Activation::Relu; 2]).is_err());
        assert!(Architecture::new(1, vec![2], 1, vec![]).is_err());
    }

    #[test]
    fn identity_composition() {
        let (arch, params) = one_one_one();
        assert_eq!(forward(&arch, &params, &[3.0]).unwrap(), vec![3.0]);
    }

    #[test]
    fn relu_abs_construction() {
        let arch = Architecture::uniform(1, &[2], Activation::Relu).unwrap();
        let params =
            NetworkParams::from_flat(&arch, &[1.0, -1.0, 0.0, 0.0, 1.0, 1.0, 0.0]).unwrap();
        assert_eq!(forward(&arch, &params, &[-2.0]).unwrap(), vec![2.0]);
        assert_eq!(forward(&arch, &params, &[5.0]).unwrap(), vec![5.0]);
    }

    #[test]
    fn forward_rejects_bad_shapes() {
        let (arch, params) = one_one_one();
        assert!(matches!(
            forward(&arch, &params, &[1.0, 2.0]),
            Err(Error::Structure(_))
        ));
        let wider = Architecture::uniform(1, &[2], Activation::Identity).unwrap();
        assert!(matches!(
            forward(&wider, &params, &[1.0]),
            Err(Error::Structure(_))
        ));
    }

    #[test]
    fn forward_reports_overflow_layer() {
        let arch = Architecture::uniform(1, &[1, 1], Activation::Identity).unwrap();
        let params = NetworkParams::from_flat(&arch, &[1e200, 0.0, 1e200, 0.0, 1.0, 0.0]).unwrap();
        assert_eq!(
            forward(&arch, &params, &[1.0]),
            Err(Error::NonFinite { layer: 2 })
        );
    }

    #[test]
    fn hand_chain_rule() {
        let (arch, params) = one_one_one();
        let (loss, g) = gradient(&arch, &params, &SquaredError, &[1.0], &[0.0]).unwrap();
        assert_eq!(loss, 1.0);
        assert_eq!(g.layers[0].weights[(0, 0)], 2.0);
    }

    #[test]
    fn constant_loss_has_zero_gradient() {
        let arch = Architecture::uniform(2, &[3, 2], Activation::Tanh).unwrap();
        let mut rng = seeded(1);
        let flat: Vec<f64> = (0..arch.param_count())
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        let params = NetworkParams::from_flat(&arch, &flat).unwrap();
        let (_, g) = gradient(&arch, &params, &ConstantLoss(3.5), &[0.3, -0.2], &[0.0]).unwrap();
        assert!(g.values().all(|v| v == 0.0));
    }

    #[test]
    fn hidden_range_bound_arithmetic() {
        let arch = Architecture::uniform(1, &[3, 2], Activation::Relu).unwrap();
        assert_eq!(hidden_range_bound(&arch, 1.0, 1.0, 1, &[]).unwrap(), 2.0);
        assert_eq!(
            hidden_range_bound(&arch, 1.0, 1.0, 2, &[1.0]).unwrap(),
            12.0
        );
        assert!(hidden_range_bound(&arch, 1.0, 1.0, 0, &[]).is_err());
        assert!(hidden_range_bound(&arch, 1.0, 1.0, 3, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let arch = Architecture::new(
            2,
            vec![3, 2],
            1,
            vec![Activation::LeakyRelu(0.07), Activation::Sigmoid],
        )
        .unwrap();
        let mut rng = seeded(9);
        let mut flat: Vec<f64> = (0..arch.param_count())
            .map(|_| rng.gen_range(-1.0..1.0) * 10f64.powi(rng.gen_range(-30..30)))
            .collect();
        flat[0] = -0.0;
        flat[1] = f64::MIN_POSITIVE;
        flat[2] = 5e-324;
        let net = Network::new(
            arch.clone(),
            NetworkParams::from_flat(&arch, &flat).unwrap(),
        )
        .unwrap();
        let back = Network::from_json(&net.to_json().unwrap()).unwrap();
        assert_eq!(back.arch, net.arch);
        assert!(back.params.bit_eq(&net.params));
    }

    #[test]
    fn json_rejects_unknown_fields_and_bad_shapes() {
        let bad = r#"{"arch":{"d0":1,"hidden":[1],"out":1,"activations":["relu"]},
                      "layers":[{"W":[1.0],"b":[0.0]},{"W":[1.0,2.0],"b":[0.0]}]}"#;
        assert!(Network::from_json(bad).is_err());
        let extra = r#"{"arch":{"d0":1,"hidden":[1],"out":1,"activations":["relu"],"x":1},
                      "layers":[{"W":[1.0],"b":[0.0]},{"W":[1.0],"b":[0.0]}]}"#;
        assert!(Network::from_json(extra).is_err());
    }
}
