//! Independent oracles for the network primitives and initialization.

use rand::Rng;

use permsym_core::basin::{initialize_with, InitKind};
use permsym_core::nn::{gradient, hidden_preactivations, hidden_range_bound, SquaredError};
use permsym_core::rng::{seeded, uniform_in_ball, uniform_params};
use permsym_core::{forward, Activation, Architecture, NetworkParams};

/// Straight-line scalar loop over the stored weights, no shared helpers.
fn scalar_forward(arch: &Architecture, p: &NetworkParams, x: &[f64]) -> Vec<f64> {
    let mut h = x.to_vec();
    for (l, layer) in p.layers.iter().enumerate() {
        let mut next = Vec::new();
        for i in 0..layer.weights.rows() {
            let mut z = layer.bias[i];
            for (j, hj) in h.iter().enumerate() {
                z += layer.weights[(i, j)] * hj;
            }
            next.push(if l < arch.depth() {
                match arch.activations[l] {
                    Activation::Tanh => z.tanh(),
                    Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
                    Activation::Relu => z.max(0.0),
                    Activation::LeakyRelu(a) => {
                        if z >= 0.0 {
                            z
                        } else {
                            a * z
                        }
                    }
                    Activation::Identity => z,
                }
            } else {
                z
            });
        }
        h = next;
    }
    h
}

#[test]
fn forward_matches_scalar_loop() {
    let arch = Architecture::uniform(2, &[3, 3], Activation::Tanh).unwrap();
    let mut rng = seeded(11);
    for _ in 0..200 {
        let p = uniform_params(&arch, 1.0, &mut rng);
        let x = uniform_in_ball(2, 1.5, &mut rng);
        let got = forward(&arch, &p, &x).unwrap();
        let want = scalar_forward(&arch, &p, &x);
        assert!((got[0] - want[0]).abs() <= 1e-12, "{got:?} vs {want:?}");
    }
}

fn loss_at(arch: &Architecture, p: &NetworkParams, x: &[f64], t: &[f64]) -> f64 {
    let y = scalar_forward(arch, p, x);
    y.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Max relative error of the analytic gradient against central differences.
fn gradient_error(arch: &Architecture, p: &NetworkParams, x: &[f64], t: &[f64], h: f64) -> f64 {
    let (_, g) = gradient(arch, p, &SquaredError, x, t).unwrap();
    let flat = p.to_flat();
    let analytic = g.to_flat();
    let mut worst = 0.0f64;
    for k in 0..flat.len() {
        let mut plus = flat.clone();
        let mut minus = flat.clone();
        plus[k] += h;
        minus[k] -= h;
        let fp = loss_at(arch, &NetworkParams::from_flat(arch, &plus).unwrap(), x, t);
        let fm = loss_at(arch, &NetworkParams::from_flat(arch, &minus).unwrap(), x, t);
        let numeric = (fp - fm) / (2.0 * h);
        let scale = numeric.abs().max(analytic[k].abs()).max(1e-3);
        worst = worst.max((numeric - analytic[k]).abs() / scale);
    }
    worst
}

#[test]
fn gradient_matches_central_differences_on_2_2_1_tanh() {
    let arch = Architecture::uniform(2, &[2], Activation::Tanh).unwrap();
    let mut rng = seeded(12);
    for _ in 0..20 {
        let p = uniform_params(&arch, 1.0, &mut rng);
        let x = uniform_in_ball(2, 1.0, &mut rng);
        let t = [rng.gen_range(-1.0..1.0)];
        let err = gradient_error(&arch, &p, &x, &t, 1e-5);
        assert!(err <= 1e-6, "relative error {err:e}");
    }
}

#[test]
fn gradient_matches_central_differences_on_random_smooth_nets() {
    let mut rng = seeded(13);
    let mut worst = 0.0f64;
    for k in 0..100 {
        let act = if k % 2 == 0 {
            Activation::Tanh
        } else {
            Activation::Sigmoid
        };
        let depth = rng.gen_range(1..=3);
        let widths: Vec<usize> = (0..depth).map(|_| rng.gen_range(1..=5)).collect();
        let arch = Architecture::uniform(rng.gen_range(1..=3), &widths, act).unwrap();
        let p = uniform_params(&arch, 1.0, &mut rng);
        let x = uniform_in_ball(arch.input_dim, 1.0, &mut rng);
        let t = [rng.gen_range(-1.0..1.0)];
        worst = worst.max(gradient_error(&arch, &p, &x, &t, 1e-5));
    }
    assert!(worst <= 1e-5, "relative error {worst:e}");
}

#[test]
fn hidden_range_bound_dominates_sampled_preactivations() {
    let arch = Architecture::uniform(1, &[2, 2], Activation::Relu).unwrap();
    let rho = [1.0, 1.0];
    let bounds: Vec<f64> = (1..=2)
        .map(|i| hidden_range_bound(&arch, 1.0, 1.0, i, &rho).unwrap())
        .collect();
    assert_eq!(bounds, vec![2.0, 8.0]);
    let mut rng = seeded(14);
    let mut peak = [0.0f64; 2];
    for _ in 0..100_000 {
        let p = uniform_params(&arch, 1.0, &mut rng);
        let x = uniform_in_ball(1, 1.0, &mut rng);
        for (l, z) in hidden_preactivations(&arch, &p, &x)
            .unwrap()
            .iter()
            .enumerate()
        {
            peak[l] = z.iter().fold(peak[l], |m, v| m.max(v.abs()));
        }
    }
    assert!(
        peak[0] <= bounds[0] && peak[1] <= bounds[1],
        "{peak:?} vs {bounds:?}"
    );
}

#[test]
fn hidden_range_bound_holds_on_deeper_nets_with_unit_scaled_inputs() {
    // Valid regime: √d₀ · B_x ≤ 1.
    let mut rng = seeded(15);
    for d0 in [1usize, 2, 4] {
        let bx = 1.0 / (d0 as f64).sqrt();
        let arch = Architecture::uniform(d0, &[3, 4, 2], Activation::Tanh).unwrap();
        let rho = [1.0; 3];
        let bounds: Vec<f64> = (1..=3)
            .map(|i| hidden_range_bound(&arch, 1.0, bx, i, &rho).unwrap())
            .collect();
        for _ in 0..5_000 {
            let p = uniform_params(&arch, 1.0, &mut rng);
            let x = uniform_in_ball(d0, bx, &mut rng);
            for (l, z) in hidden_preactivations(&arch, &p, &x)
                .unwrap()
                .iter()
                .enumerate()
            {
                assert!(z.iter().all(|v| v.abs() <= bounds[l]));
            }
        }
    }
}

/// Mean and variance of two entries of `W^(1)` agree within 3 standard errors.
fn exchangeable(kind: InitKind, seed: u64) {
    let arch = Architecture::uniform(2, &[3], Activation::Tanh).unwrap();
    let mut rng = seeded(seed);
    let n = 100_000usize;
    let (mut a, mut b) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for _ in 0..n {
        let p = initialize_with(&arch, &kind, &mut rng).unwrap();
        a.push(p.layers[0].weights[(0, 0)]);
        b.push(p.layers[0].weights[(1, 0)]);
    }
    let stats = |v: &[f64]| {
        let m = v.iter().sum::<f64>() / n as f64;
        let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n as f64 - 1.0);
        let m4 = v.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n as f64;
        (m, var, m4)
    };
    let (ma, va, m4a) = stats(&a);
    let (mb, vb, m4b) = stats(&b);
    let se_mean = ((va + vb) / n as f64).sqrt();
    assert!(
        (ma - mb).abs() <= 3.0 * se_mean,
        "{kind:?}: means {ma} vs {mb}"
    );
    let se_var = ((m4a - va * va + m4b - vb * vb) / n as f64).sqrt();
    assert!(
        (va - vb).abs() <= 3.0 * se_var,
        "{kind:?}: variances {va} vs {vb}"
    );
    let expected = kind.variance(2, 3);
    assert!(
        (va - expected).abs() <= 4.0 * se_var,
        "{kind:?}: variance {va} vs {expected}"
    );
}

#[test]
fn initialization_is_exchangeable_across_neurons() {
    exchangeable(InitKind::Uniform { a: -1.0, b: 1.0 }, 16);
    exchangeable(
        InitKind::Normal {
            mean: 0.2,
            std: 0.5,
        },
        17,
    );
    exchangeable(InitKind::Xavier, 18);
    exchangeable(InitKind::He, 19);
}
