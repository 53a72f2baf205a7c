//! Sieve priors: fixed dimension with standard normal coordinates, and the
//! adaptive variant with a geometric dimension prior and double-exponential
//! coordinates.
//!
//! Fixed-J: the prior `⊗_{j≤J} N(0,1)` is conjugate, so the posterior is
//! `⊗_{j≤J} N(nX_j/(n+1), 1/(n+1))` with zeros beyond J.
//!
//! Adaptive: `k ~ π(k) ∝ e^{-Dk}` on `{0..k_max}`; given k,
//! `√n θ_j ~ g` iid for `j ≤ k` with `g` the unit Laplace density, zeros
//! beyond. The dimension posterior is available exactly because the
//! per-coordinate marginal under inclusion has the closed form
//! `m(X) = √n (φ ⋆ g)(√n X)` with
//! `(φ ⋆ g)(z) = ½ e^{1/2} [e^{-z} Φ(z-1) + e^{z} Φ(-z-1)]`, and the
//! coordinate posterior under inclusion is a two-piece truncated Gaussian
//! (the Laplace prior splits at zero).

use crate::block_gibbs::Estimator;
use crate::model::Dataset;
use crate::numerics::{
    inv_ln_reg_gamma_q, inv_normal_cdf, ln_normal_cdf, log_sum_exp, normal_cdf, RandomStream,
};
use crate::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SieveMode {
    FixedJ,
    Adaptive,
}

#[derive(Debug, Clone)]
pub struct SieveConfig {
    pub mode: SieveMode,
    /// Dimension for fixed-J mode; `None` means `⌊n^{1/(2α+1)}⌋`.
    pub j_fixed: Option<usize>,
    /// Exponent D of the dimension prior `π(k) ∝ e^{-Dk}`.
    pub dim_penalty: f64,
    /// Cap on the dimension posterior; `None` means the data length.
    pub k_max: Option<usize>,
    /// Smoothness used by the fixed-J default.
    pub alpha: f64,
}

impl SieveConfig {
    pub fn fixed(alpha: f64) -> Self {
        SieveConfig { mode: SieveMode::FixedJ, j_fixed: None, dim_penalty: 1.0, k_max: None, alpha }
    }

    pub fn adaptive() -> Self {
        SieveConfig { mode: SieveMode::Adaptive, j_fixed: None, dim_penalty: 1.0, k_max: None, alpha: f64::NAN }
    }

    fn fixed_dim(&self, n: usize, len: usize) -> usize {
        self.j_fixed
            .unwrap_or_else(|| (n as f64).powf(1.0 / (2.0 * self.alpha + 1.0)).floor() as usize)
            .min(len)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dim_penalty > 0.0) {
            return invalid(format!("dimension-prior exponent must be positive, got {}", self.dim_penalty));
        }
        if self.k_max == Some(0) {
            return invalid("dimension cap k_max must be at least 1");
        }
        Ok(())
    }
}

/// Exact fixed-J conjugate posterior: mean `nX_j/(n+1)`, variance `1/(n+1)`
/// for `j ≤ J`, zero beyond.
pub fn fixed_sieve_posterior(
    data: &Dataset,
    cfg: &SieveConfig,
    estimator: Estimator,
    rng: &mut RandomStream,
) -> Result<Vec<f64>> {
    if cfg.mode != SieveMode::FixedJ {
        return invalid("fixed_sieve_posterior requires fixed-J mode");
    }
    let nf = data.n as f64;
    let j = cfg.fixed_dim(data.n, data.x.len());
    let sd = (1.0 / (nf + 1.0)).sqrt();
    let mut est = vec![0.0; data.x.len()];
    for (e, &x) in est.iter_mut().zip(&data.x).take(j) {
        *e = nf * x / (nf + 1.0);
        if matches!(estimator, Estimator::SingleDraw) {
            *e += sd * rng.normal();
        }
    }
    Ok(est)
}

/// `ln m(X)`: log marginal of one included coordinate,
/// `m(X) = √n (φ ⋆ g)(√n X)`.
pub fn ln_inclusion_marginal(x: f64, n: usize) -> f64 {
    let z = (n as f64).sqrt() * x;
    0.5 * (n as f64).ln() + ln_gauss_laplace(z)
}

/// `ln (φ ⋆ g)(z)` for the unit Laplace g.
pub fn ln_gauss_laplace(z: f64) -> f64 {
    0.5 - std::f64::consts::LN_2
        + log_sum_exp(-z + ln_normal_cdf(z - 1.0), z + ln_normal_cdf(-z - 1.0))
}

/// `ln` of the noise density of one excluded coordinate, `√n φ(√n X)`.
fn ln_exclusion_density(x: f64, n: usize) -> f64 {
    let nf = n as f64;
    0.5 * nf.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln() - 0.5 * nf * x * x
}

/// Normalized posterior over the dimension `k ∈ {0..k_max}`.
pub fn adaptive_k_posterior(data: &Dataset, cfg: &SieveConfig) -> Vec<f64> {
    let k_max = cfg.k_max.unwrap_or(data.x.len()).min(data.x.len());
    let mut lp = Vec::with_capacity(k_max + 1);
    // log posterior accumulates the swap of one exclusion for one inclusion
    let mut acc = 0.0;
    lp.push(0.0);
    for j in 1..=k_max {
        acc += -cfg.dim_penalty + ln_inclusion_marginal(data.x[j - 1], data.n)
            - ln_exclusion_density(data.x[j - 1], data.n);
        lp.push(acc);
    }
    let m = lp.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut p: Vec<f64> = lp.iter().map(|&v| (v - m).exp()).collect();
    let z: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= z);
    p
}

/// Standard normal draw conditioned on `ξ ≥ a0`, exact by inverse CDF (the
/// deep-truncation branch runs on the log scale through the incomplete
/// gamma representation of the tail).
fn sample_std_normal_above(a0: f64, rng: &mut RandomStream) -> f64 {
    if a0 <= 0.0 {
        let p0 = normal_cdf(a0);
        let p = (p0 + rng.uniform() * (1.0 - p0)).clamp(f64::MIN_POSITIVE, 1.0 - 1e-16);
        inv_normal_cdf(p).expect("p inside (0,1)")
    } else {
        // tail mass of the draw: Φ̄(ξ) = u Φ̄(a0), solved via
        // ln Q(1/2, ξ²/2) = ln 2 + ln Φ̄(ξ)
        let ln_tail_a0 = ln_normal_cdf(-a0);
        let target = std::f64::consts::LN_2 + rng.uniform().ln() + ln_tail_a0;
        let xstar = inv_ln_reg_gamma_q(0.5, target.min(0.0)).expect("target <= 0");
        (2.0 * xstar).sqrt()
    }
}

/// Log-weights of the two pieces of `θ | X, included`:
/// `w₊ ∝ e^{-z} Φ(z-1)` (θ ≥ 0) and `w₋ ∝ e^{z} Φ(-z-1)` (θ < 0).
fn piece_log_weights(z: f64) -> (f64, f64) {
    (-z + ln_normal_cdf(z - 1.0), z + ln_normal_cdf(-z - 1.0))
}

/// One exact draw from `θ | X, included`: a two-piece truncated Gaussian
/// with means `X ∓ 1/√n` and scale `1/√n`.
pub fn sample_inclusion_posterior(x: f64, n: usize, rng: &mut RandomStream) -> f64 {
    let root_n = (n as f64).sqrt();
    let z = root_n * x;
    let (lw_pos, lw_neg) = piece_log_weights(z);
    let d = lw_pos - lw_neg;
    let p_pos = if d >= 0.0 { 1.0 / (1.0 + (-d).exp()) } else { let e = d.exp(); e / (1.0 + e) };
    if rng.uniform() <= p_pos {
        // θ = μ₊ + ξ/√n, ξ ≥ 1-z
        let xi = sample_std_normal_above(1.0 - z, rng);
        (z - 1.0 + xi) / root_n
    } else {
        // θ = μ₋ - ξ'/√n, ξ' ≥ z+1
        let xi = sample_std_normal_above(z + 1.0, rng);
        (z + 1.0 - xi) / root_n
    }
}

/// Exact mean of `θ | X, included` (two-piece truncated-Gaussian means
/// through Mills ratios computed in log space).
pub fn inclusion_posterior_mean(x: f64, n: usize) -> f64 {
    let root_n = (n as f64).sqrt();
    let z = root_n * x;
    let (lw_pos, lw_neg) = piece_log_weights(z);
    let d = lw_pos - lw_neg;
    let p_pos = if d >= 0.0 { 1.0 / (1.0 + (-d).exp()) } else { let e = d.exp(); e / (1.0 + e) };
    let ln_phi = |t: f64| -0.5 * t * t - 0.5 * (2.0 * std::f64::consts::PI).ln();
    // positive piece: ξ ≥ a, E ξ = φ(a)/Φ̄(a)
    let a = 1.0 - z;
    let mean_pos = (z - 1.0 + (ln_phi(a) - ln_normal_cdf(-a)).exp()) / root_n;
    // negative piece: ξ' ≥ b, θ = (z + 1 - ξ')/√n
    let b = z + 1.0;
    let mean_neg = (z + 1.0 - (ln_phi(b) - ln_normal_cdf(-b)).exp()) / root_n;
    p_pos * mean_pos + (1.0 - p_pos) * mean_neg
}

/// Adaptive sieve estimate: exact dimension posterior, then exact
/// coordinate draws (single draw) or the closed-form mixture mean
/// (posterior mean).
pub fn adaptive_sieve_posterior(
    data: &Dataset,
    cfg: &SieveConfig,
    estimator: Estimator,
    rng: &mut RandomStream,
) -> Result<Vec<f64>> {
    if cfg.mode != SieveMode::Adaptive {
        return invalid("adaptive_sieve_posterior requires adaptive mode");
    }
    cfg.validate()?;
    let probs = adaptive_k_posterior(data, cfg);
    let mut est = vec![0.0; data.x.len()];
    match estimator {
        Estimator::SingleDraw => {
            let u = rng.uniform();
            let mut k = probs.len() - 1;
            let mut acc = 0.0;
            for (i, &p) in probs.iter().enumerate() {
                acc += p;
                if u <= acc {
                    k = i;
                    break;
                }
            }
            for j in 0..k {
                est[j] = sample_inclusion_posterior(data.x[j], data.n, rng);
            }
        }
        Estimator::PosteriorMean => {
            // E θ_j = P(k ≥ j | X) E[θ_j | X_j, included]
            let mut incl_prob = 0.0; // P(k >= j), built from the top
            let mut suffix = vec![0.0; probs.len()];
            for j in (0..probs.len()).rev() {
                incl_prob += probs[j];
                suffix[j] = incl_prob;
            }
            for j in 0..est.len().min(probs.len() - 1) {
                est[j] = suffix[j + 1] * inclusion_posterior_mean(data.x[j], data.n);
            }
        }
    }
    Ok(est)
}
