//! Canonical representatives of permutation orbits and orbit statistics.
//!
//! The canonical form sorts the rows of every hidden layer's `(b, W)` in
//! non-increasing lexicographic order, bias entry first, processing layers
//! from the input side so that each layer sees columns already reordered by
//! the previous one. Comparison uses `f64::total_cmp`, so rows that compare
//! equal are bit-identical and the result is unique.

use std::cmp::Ordering;
use std::collections::HashSet;

use num_bigint::BigUint;
use serde::ser::{SerializeStruct, Serializer};
use serde::Serialize;

use crate::bigmath::{factorial, ln_factorial};
use crate::error::{domain, Result};
use crate::nn::{check_shapes, Architecture, Layer, NetworkParams};
use crate::transforms::{apply_permutation, PermutationSpec};

/// Canonical parameters together with the permutation that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalForm {
    pub params: NetworkParams,
    /// `apply_permutation(original, witness) == params`, bit for bit.
    pub witness: PermutationSpec,
}

fn cmp_rows(layer: &Layer, i: usize, j: usize) -> Ordering {
    layer
        .neuron_row(i)
        .zip(layer.neuron_row(j))
        .map(|(a, b)| a.total_cmp(&b))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Maps `params` to the canonical element of its permutation orbit.
pub fn canonicalize(params: &NetworkParams) -> CanonicalForm {
    let hidden = params.layers.len().saturating_sub(1);
    let mut layers = params.layers.clone();
    let mut perms = Vec::with_capacity(hidden);
    for l in 0..hidden {
        let layer = &layers[l];
        let mut order: Vec<usize> = (0..layer.out_dim()).collect();
        order.sort_by(|&i, &j| cmp_rows(layer, j, i));

        let mut sorted = Layer::zeros(layer.out_dim(), layer.in_dim());
        for (i, &j) in order.iter().enumerate() {
            sorted
                .weights
                .row_mut(i)
                .copy_from_slice(layer.weights.row(j));
            sorted.bias[i] = layer.bias[j];
        }
        layers[l] = sorted;

        let next = &mut layers[l + 1].weights;
        for r in 0..next.rows() {
            let row = next.row(r).to_vec();
            for (i, &j) in order.iter().enumerate() {
                next[(r, i)] = row[j];
            }
        }
        perms.push(order);
    }
    CanonicalForm {
        params: NetworkParams { layers },
        witness: PermutationSpec::new(perms).expect("sort order is a permutation"),
    }
}

/// True when every hidden layer's rows are already in canonical order.
pub fn is_canonical(params: &NetworkParams) -> bool {
    let hidden = params.layers.len().saturating_sub(1);
    params.layers[..hidden]
        .iter()
        .all(|layer| (1..layer.out_dim()).all(|i| cmp_rows(layer, i - 1, i) != Ordering::Less))
}

/// `d_l*` per hidden layer, the minimal distinct-row gap `δ`, and `Π d_l*`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryProfile {
    pub distinct_perm_counts: Vec<BigUint>,
    /// `+∞` when no hidden layer has two distinct rows.
    pub delta_min: f64,
    pub total_multiplicity: BigUint,
}

impl Serialize for SymmetryProfile {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde_json::Value;
        let d_star: Vec<Value> = self
            .distinct_perm_counts
            .iter()
            .map(|d| match u64::try_from(d) {
                Ok(v) => Value::from(v),
                Err(_) => Value::from(d.to_string()),
            })
            .collect();
        let delta = if self.delta_min.is_finite() {
            Value::from(self.delta_min)
        } else {
            Value::from("inf")
        };
        let mut s = serializer.serialize_struct("SymmetryProfile", 3)?;
        s.serialize_field("d_star", &d_star)?;
        s.serialize_field("delta_min", &delta)?;
        s.serialize_field("multiplicity", &self.total_multiplicity.to_string())?;
        s.end()
    }
}

fn row_distance(layer: &Layer, i: usize, j: usize) -> f64 {
    layer
        .neuron_row(i)
        .zip(layer.neuron_row(j))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// Groups rows of a layer: bit equality when `tolerance` is `None`,
/// otherwise connected components of the "within `tolerance` in L∞" relation.
fn row_groups(layer: &Layer, tolerance: Option<f64>) -> Vec<usize> {
    let n = layer.out_dim();
    let mut group = vec![usize::MAX; n];
    let mut next = 0;
    for i in 0..n {
        if group[i] != usize::MAX {
            continue;
        }
        group[i] = next;
        let mut stack = vec![i];
        while let Some(a) = stack.pop() {
            for b in 0..n {
                if group[b] != usize::MAX {
                    continue;
                }
                let same = match tolerance {
                    None => cmp_rows(layer, a, b) == Ordering::Equal,
                    Some(t) => row_distance(layer, a, b) <= t,
                };
                if same {
                    group[b] = next;
                    stack.push(b);
                }
            }
        }
        next += 1;
    }
    group
}

/// Orbit statistics of `params` with exact (bitwise) row equality.
pub fn symmetry_profile(params: &NetworkParams) -> SymmetryProfile {
    symmetry_profile_with(params, None)
}

/// Orbit statistics, treating rows within `tolerance` (L∞) as identical when given.
///
/// `d_l* = d_l! / Π m_r!` for row multiplicities `m_r`. The count of distinct
/// parameter vectors in the orbit equals `Π d_l*` when identical neurons also
/// share their outgoing weights.
pub fn symmetry_profile_with(params: &NetworkParams, tolerance: Option<f64>) -> SymmetryProfile {
    let hidden = params.layers.len().saturating_sub(1);
    let mut counts = Vec::with_capacity(hidden);
    let mut delta = f64::INFINITY;
    for layer in &params.layers[..hidden] {
        let groups = row_groups(layer, tolerance);
        let n = groups.len();
        let mut multiplicities = vec![0u64; groups.iter().max().map_or(0, |g| g + 1)];
        for &g in &groups {
            multiplicities[g] += 1;
        }
        let denom = multiplicities
            .iter()
            .fold(BigUint::from(1u32), |acc, &m| acc * factorial(m));
        counts.push(factorial(n as u64) / denom);
        for i in 0..n {
            for j in i + 1..n {
                if groups[i] != groups[j] {
                    delta = delta.min(row_distance(layer, i, j));
                }
            }
        }
    }
    let total = counts.iter().fold(BigUint::from(1u32), |acc, d| acc * d);
    SymmetryProfile {
        distinct_perm_counts: counts,
        delta_min: delta,
        total_multiplicity: total,
    }
}

/// All distinct parameter vectors reachable by hidden-neuron permutations.
///
/// Enumerates `Π d_l!` specs, so only for small widths.
pub fn permutation_orbit(
    arch: &Architecture,
    params: &NetworkParams,
) -> Result<Vec<NetworkParams>> {
    check_shapes(arch, params)?;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for pi in PermutationSpec::enumerate(arch) {
        let img = apply_permutation(params, &pi)?;
        if seen.insert(img.bit_key()) {
            out.push(img);
        }
    }
    Ok(out)
}

/// Volumes of `Θ = [-B, B]^S` and of the canonical region `Θ₀`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectiveVolume {
    pub log_total: f64,
    pub log_effective: f64,
    /// Linear values, present when they are finite and nonzero in f64.
    pub total: Option<f64>,
    pub effective: Option<f64>,
}

fn linear(log: f64) -> Option<f64> {
    let v = log.exp();
    (v.is_finite() && v > 0.0).then_some(v)
}

/// `(2B)^S` and `(2B)^S / Π d_l!`, in log space.
pub fn effective_volume(arch: &Architecture, bound: f64) -> Result<EffectiveVolume> {
    if !(bound > 0.0 && bound.is_finite()) {
        return Err(domain("B must be positive and finite"));
    }
    let log_total = arch.param_count() as f64 * (2.0 * bound).ln();
    let discount: f64 = arch
        .hidden_widths
        .iter()
        .map(|&d| ln_factorial(d as u64))
        .sum();
    let log_effective = log_total - discount;
    Ok(EffectiveVolume {
        log_total,
        log_effective,
        total: linear(log_total),
        effective: linear(log_effective),
    })
}
