//! Covering-number and metric-entropy calculators.
//!
//! Everything is computed in natural-log space; linear values are attached
//! only when they are finite in f64.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::bigmath::{binomial, factorial, ln_bigrational, ln_factorial};
use crate::error::{domain, Error, Result};
use crate::nn::{layer_lipschitz_constants, Architecture};
use crate::quadrature::integrate;

/// Absolute tolerance on `∫ √H(ε) dε` used by [`dudley_rademacher_bound`].
pub const DUDLEY_TOLERANCE: f64 = 1e-6;
const DUDLEY_MAX_SUBDIVISIONS: usize = 4000;

/// Inputs shared by the covering-number formulas.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundConfig {
    pub arch: Architecture,
    pub weight_bound: f64,
    pub input_radius: f64,
    /// `ρ_1, …, ρ_L`.
    pub rho: Vec<f64>,
    pub epsilon: f64,
}

impl BoundConfig {
    /// Config with `ρ_j` taken from each layer's activation.
    pub fn new(
        arch: Architecture,
        weight_bound: f64,
        input_radius: f64,
        epsilon: f64,
    ) -> Result<Self> {
        arch.validate()?;
        let rho = layer_lipschitz_constants(&arch, weight_bound, input_radius);
        Self::with_rho(arch, weight_bound, input_radius, rho, epsilon)
    }

    pub fn with_rho(
        arch: Architecture,
        weight_bound: f64,
        input_radius: f64,
        rho: Vec<f64>,
        epsilon: f64,
    ) -> Result<Self> {
        let cfg = BoundConfig {
            arch,
            weight_bound,
            input_radius,
            rho,
            epsilon,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.arch.validate()?;
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(domain(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if !(self.weight_bound >= 1.0 && self.weight_bound.is_finite()) {
            return Err(domain(format!(
                "B must be at least 1, got {}",
                self.weight_bound
            )));
        }
        if !(self.input_radius > 0.0 && self.input_radius.is_finite()) {
            return Err(domain(format!(
                "B_x must be positive, got {}",
                self.input_radius
            )));
        }
        if self.rho.len() != self.arch.depth() {
            return Err(Error::Config(format!(
                "{} Lipschitz constants for {} hidden layers",
                self.rho.len(),
                self.arch.depth()
            )));
        }
        if let Some(r) = self.rho.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
            return Err(domain(format!(
                "Lipschitz constants must be positive, got {r}"
            )));
        }
        Ok(())
    }

    pub fn rho_bar(&self) -> f64 {
        self.rho.iter().product()
    }

    /// `s_i = B·√(d_i·d_{i−1})` for `i = 1..=L`.
    pub fn spectral_proxies(&self) -> Vec<f64> {
        (1..=self.arch.depth())
            .map(|i| {
                self.weight_bound * ((self.arch.width(i) * self.arch.width(i - 1)) as f64).sqrt()
            })
            .collect()
    }

    pub fn s_bar(&self) -> f64 {
        self.spectral_proxies().iter().product()
    }

    /// `Σ_l ln(d_l!)`.
    pub fn log_factorial_sum(&self) -> f64 {
        self.arch
            .hidden_widths
            .iter()
            .map(|&d| ln_factorial(d as u64))
            .sum()
    }
}

/// A covering bound `base^S · extra / Π d_l!` split into its log components.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogBound {
    /// Log of everything except the factorial discount.
    pub log_base_power: f64,
    /// `−Σ_l ln(d_l!)`.
    pub log_factorial_discount: f64,
    pub log_total: f64,
    pub linear: Option<f64>,
}

impl LogBound {
    fn new(log_base_power: f64, log_factorial_discount: f64) -> Self {
        let log_total = log_base_power + log_factorial_discount;
        let v = log_total.exp();
        LogBound {
            log_base_power,
            log_factorial_discount,
            log_total,
            linear: (v.is_finite() && v > 0.0).then_some(v),
        }
    }
}

/// Single hidden layer: `(16B²(B_x+1)√d₀·d₁/ε)^S · ρ^{S_h} / d₁!`.
pub fn shallow_covering_bound(cfg: &BoundConfig) -> Result<LogBound> {
    cfg.validate()?;
    if cfg.arch.depth() != 1 {
        return Err(Error::Config(format!(
            "shallow bound needs one hidden layer, got {}",
            cfg.arch.depth()
        )));
    }
    let d0 = cfg.arch.input_dim as f64;
    let d1 = cfg.arch.hidden_widths[0] as f64;
    let s = cfg.arch.param_count() as f64;
    let s_h = cfg.arch.layer_param_count(1) as f64;
    let b = cfg.weight_bound;
    let base = 16.0 * b * b * (cfg.input_radius + 1.0) * d0.sqrt() * d1 / cfg.epsilon;
    Ok(LogBound::new(
        s * base.ln() + s_h * cfg.rho[0].ln(),
        -cfg.log_factorial_sum(),
    ))
}

/// `ln` of `4(L+1)(B_x+1)(2B)^{L+2}·Π ρ_j·Π_{j=0}^{L} d_j / ε`.
pub fn deep_log_base(cfg: &BoundConfig) -> f64 {
    let l = cfg.arch.depth() as f64;
    let log_widths: f64 = (0..=cfg.arch.depth())
        .map(|j| (cfg.arch.width(j) as f64).ln())
        .sum();
    let log_rho: f64 = cfg.rho.iter().map(|r| r.ln()).sum();
    (4.0 * (l + 1.0) * (cfg.input_radius + 1.0)).ln()
        + (l + 2.0) * (2.0 * cfg.weight_bound).ln()
        + log_rho
        + log_widths
        - cfg.epsilon.ln()
}

/// Any depth: `base^S / (d₁!⋯d_L!)` with `base` from [`deep_log_base`].
pub fn deep_covering_bound(cfg: &BoundConfig) -> Result<LogBound> {
    cfg.validate()?;
    let s = cfg.arch.param_count() as f64;
    Ok(LogBound::new(
        s * deep_log_base(cfg),
        -cfg.log_factorial_sum(),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StirlingBracket {
    pub d: u64,
    pub lower: f64,
    #[serde(serialize_with = "ser_decimal")]
    pub value: BigUint,
    pub upper: f64,
    pub log_lower: f64,
    pub log_value: f64,
    pub log_upper: f64,
}

fn ser_decimal<S: serde::Serializer>(v: &BigUint, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

impl StirlingBracket {
    /// `lower < d! < upper`, compared exactly against the big-integer `d!`
    /// when the bracket is finite in f64 and in log space otherwise.
    pub fn is_strict(&self) -> bool {
        match (
            BigRational::from_float(self.lower),
            BigRational::from_float(self.upper),
        ) {
            (Some(lo), Some(hi)) if self.upper.is_finite() => {
                let v = BigRational::from_integer(BigInt::from(self.value.clone()));
                lo < v && v < hi
            }
            _ => self.log_lower < self.log_value && self.log_value < self.log_upper,
        }
    }
}

/// `√(2πd)(d/e)^d·e^{1/(12d+1)} < d! < √(2πd)(d/e)^d·e^{1/(12d)}`.
pub fn stirling_bracket(d: u64) -> Result<StirlingBracket> {
    if d == 0 {
        return Err(domain("Stirling bracket needs d >= 1"));
    }
    let x = d as f64;
    let log_core = 0.5 * (2.0 * std::f64::consts::PI * x).ln() + x * (x.ln() - 1.0);
    let log_lower = log_core + 1.0 / (12.0 * x + 1.0);
    let log_upper = log_core + 1.0 / (12.0 * x);
    Ok(StirlingBracket {
        d,
        lower: log_lower.exp(),
        value: factorial(d),
        upper: log_upper.exp(),
        log_lower,
        log_value: ln_factorial(d),
        log_upper,
    })
}

/// Metric entropies of the five compared bounds, natural log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyComparison {
    pub spectral_2017: f64,
    pub pacbayes_2017: f64,
    pub lin_2019: f64,
    pub pdim_2019: f64,
    pub this_paper: f64,
    pub floored: EntropyFlags,
}

/// Which entries were clamped to 0 because a log argument was at most 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct EntropyFlags {
    pub spectral_2017: bool,
    pub pacbayes_2017: bool,
    pub lin_2019: bool,
    pub pdim_2019: bool,
    pub this_paper: bool,
}

fn floor_log(log_arg: f64) -> (f64, bool) {
    if log_arg <= 0.0 {
        (0.0, true)
    } else {
        (log_arg, false)
    }
}

/// Evaluates the compared entropy expressions with all absolute constants set to 1.
pub fn entropy_comparison(cfg: &BoundConfig) -> Result<EntropyComparison> {
    cfg.validate()?;
    let arch = &cfg.arch;
    let l = arch.depth() as f64;
    let s = arch.param_count() as f64;
    let u = arch.hidden_units() as f64;
    let w = arch.max_hidden_width() as f64;
    let bx = cfg.input_radius;
    let eps = cfg.epsilon;
    let rho_bar = cfg.rho_bar();
    let s_bar = cfg.s_bar();
    let lip = rho_bar * s_bar;
    let quad = bx * bx * lip * lip / (eps * eps);

    let (log_w, f_spec) = floor_log(w.ln());
    let (log_wl, f_pac) = floor_log((w * l).ln());
    let (log_s, f_s) = floor_log(s.ln());
    let (log_bx_eps, f_bx) = floor_log((bx / eps).ln());
    let log_this = rho_bar.ln()
        + cfg.spectral_proxies().iter().map(|v| v.ln()).sum::<f64>()
        + (bx.ln() - cfg.log_factorial_sum() - eps.ln()) / l;
    let (log_this, f_this) = floor_log(log_this);

    Ok(EntropyComparison {
        spectral_2017: quad * u * log_w,
        pacbayes_2017: quad * s * l * l * log_wl,
        lin_2019: bx * lip * s * s * l / eps,
        pdim_2019: l * s * log_s * log_bx_eps,
        this_paper: l * s * log_this,
        floored: EntropyFlags {
            spectral_2017: f_spec,
            pacbayes_2017: f_pac,
            lin_2019: false,
            pdim_2019: f_s || f_bx,
            this_paper: f_this,
        },
    })
}

/// `12·∫₀^limit √(H(ε)/n) dε` for a nonnegative, nonincreasing entropy `H`.
///
/// The integral is taken only up to where `H` reaches 0 (located by
/// bisection), and `∫√H` is computed to absolute error [`DUDLEY_TOLERANCE`]
/// before dividing by `√n`.
pub fn dudley_rademacher_bound<F: Fn(f64) -> f64>(entropy: F, n: u64, limit: f64) -> Result<f64> {
    if n == 0 {
        return Err(domain("sample size must be at least 1"));
    }
    if !(limit >= 0.0 && limit.is_finite()) {
        return Err(domain(format!(
            "integration limit must be nonnegative, got {limit}"
        )));
    }
    if limit == 0.0 {
        return Ok(0.0);
    }
    let h = |e: f64| entropy(e).max(0.0);
    let upper = if h(limit) > 0.0 {
        limit
    } else {
        let (mut lo, mut hi) = (0.0, limit);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if h(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    };
    let integral = integrate(
        |e| h(e).sqrt(),
        0.0,
        upper,
        DUDLEY_TOLERANCE,
        DUDLEY_MAX_SUBDIVISIONS,
    )
    .map_err(|e| match e {
        Error::Integration {
            partial,
            subdivisions,
        } => Error::Integration {
            partial: 12.0 * partial / (n as f64).sqrt(),
            subdivisions,
        },
        other => other,
    })?;
    Ok(12.0 * integral / (n as f64).sqrt())
}

/// `V·(2/ε)^d`.
pub fn volume_covering_bound(d: u64, volume: f64, epsilon: f64) -> Result<f64> {
    Ok(log_volume_covering_bound(d, volume, epsilon)?.exp())
}

/// `ln(V·(2/ε)^d)`.
pub fn log_volume_covering_bound(d: u64, volume: f64, epsilon: f64) -> Result<f64> {
    if d == 0 {
        return Err(domain("dimension must be at least 1"));
    }
    if !(volume > 0.0 && epsilon > 0.0) {
        return Err(domain("volume and epsilon must be positive"));
    }
    Ok(volume.ln() + d as f64 * (2.0 / epsilon).ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PdimMethod {
    /// `Σ_{i=1}^{d} C(n,i)(B/ε)^i` in exact rational arithmetic.
    ExactSum,
    /// `(e·n·B/(ε·d))^d`, valid for `n ≥ d`.
    ClosedForm,
    /// `(1 + B/ε)^n − 1`, the full binomial sum when `n < d`.
    BinomialIdentity,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PdimCovering {
    pub log_value: f64,
    pub value: Option<f64>,
    pub method: PdimMethod,
}

const PDIM_EXACT_MAX_TERMS: u64 = 64;
const PDIM_EXACT_MAX_N: u64 = 1_000_000;

/// Covering bound for a class of pseudo-dimension `d` on `n` points with range `B`.
pub fn pdim_uniform_covering_bound(
    d: u64,
    n: u64,
    range: f64,
    epsilon: f64,
) -> Result<PdimCovering> {
    if d == 0 || n == 0 {
        return Err(domain("pseudo-dimension and n must be at least 1"));
    }
    if !(range > 0.0 && epsilon > 0.0 && range.is_finite() && epsilon.is_finite()) {
        return Err(domain("range and epsilon must be positive and finite"));
    }
    let terms = d.min(n);
    let (log_value, method) = if terms <= PDIM_EXACT_MAX_TERMS && n <= PDIM_EXACT_MAX_N {
        let ratio = BigRational::from_float(range).expect("finite")
            / BigRational::from_float(epsilon).expect("finite");
        let mut power = BigRational::one();
        let mut sum = BigRational::zero();
        for i in 1..=terms {
            power *= &ratio;
            sum += BigRational::from_integer(BigInt::from(binomial(n, i))) * &power;
        }
        (ln_bigrational(&sum), PdimMethod::ExactSum)
    } else if n >= d {
        let x = d as f64;
        (
            x * (1.0 + (n as f64).ln() + range.ln() - epsilon.ln() - x.ln()),
            PdimMethod::ClosedForm,
        )
    } else {
        let log1r = (range / epsilon).ln_1p();
        let t = n as f64 * log1r;
        (t + (-(-t).exp()).ln_1p(), PdimMethod::BinomialIdentity)
    };
    let v = log_value.exp();
    Ok(PdimCovering {
        log_value,
        value: v.is_finite().then_some(v),
        method,
    })
}
