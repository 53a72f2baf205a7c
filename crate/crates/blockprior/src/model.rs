//! The Gaussian sequence experiment: truth generation, noisy observations,
//! and ℓ² loss.
//!
//! Truths are polynomially decaying signals `θ_{0j} = amplitude · ξ_j · j^{-β}`
//! with Rademacher signs `ξ_j`, observed as `X_j = θ_{0j} + Z_j / √n`. Only
//! the first `j_trunc` coordinates are materialized; the deterministic tail
//! `Σ_{j>j_trunc} θ_{0j}²` is available separately for reporting.

use crate::numerics::RandomStream;
use crate::{invalid, Error, Result};

/// Stream tag under which the Rademacher signs are drawn from `sign_seed`.
const SIGN_STREAM: u64 = 0x5167_u64;

/// Parameters of the polynomially decaying truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalSpec {
    /// Sobolev smoothness the signal is designed for (> 0).
    pub alpha: f64,
    /// Decay exponent; must exceed 1/2 for square summability.
    pub beta: f64,
    /// Scale of the signal (>= 0).
    pub amplitude: f64,
    /// Seed for the Rademacher signs.
    pub sign_seed: u64,
}

impl SignalSpec {
    /// The simulation-study default: `beta = alpha + 0.6`, amplitude 5.
    pub fn polynomial(alpha: f64, sign_seed: u64) -> Self {
        SignalSpec { alpha, beta: alpha + 0.6, amplitude: 5.0, sign_seed }
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }
}

/// A truncated true coefficient sequence together with the spec that
/// produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthSequence {
    pub coeffs: Vec<f64>,
    pub spec: SignalSpec,
}

impl TruthSequence {
    pub fn j_trunc(&self) -> usize {
        self.coeffs.len()
    }

    /// Upper bound on the excluded tail energy `Σ_{j>j_trunc} θ_{0j}²`,
    /// from the integral bound on `Σ j^{-2β}`.
    pub fn tail_energy_bound(&self) -> f64 {
        let b = 2.0 * self.spec.beta - 1.0;
        self.spec.amplitude.powi(2) * (self.j_trunc() as f64).powf(-b) / b
    }
}

/// One synthetic data set: `x[j] = θ_{0j} + z_j / √n`.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub n: usize,
    pub x: Vec<f64>,
    pub truth: TruthSequence,
    /// `(seed, stream_id)` of the noise stream, for replication.
    pub noise_stream: (u64, u64),
}

/// Generates `θ_{0j} = amplitude · ξ_j · j^{-β}` for j = 1..j_trunc.
///
/// Pure in `(spec, j_trunc)`: the signs come from a stream derived from
/// `spec.sign_seed`, so repeated calls agree.
pub fn make_truth(spec: &SignalSpec, j_trunc: usize) -> Result<TruthSequence> {
    if spec.beta <= 0.5 {
        return invalid(format!(
            "beta = {} is not square-summable; the decay exponent must exceed 0.5",
            spec.beta
        ));
    }
    if spec.amplitude < 0.0 {
        return invalid(format!("amplitude must be nonnegative, got {}", spec.amplitude));
    }
    if j_trunc == 0 {
        return invalid("j_trunc must be at least 1");
    }
    let mut signs = RandomStream::new(spec.sign_seed, SIGN_STREAM);
    let coeffs = (1..=j_trunc)
        .map(|j| spec.amplitude * signs.sign() * (j as f64).powf(-spec.beta))
        .collect();
    Ok(TruthSequence { coeffs, spec: *spec })
}

/// Observes the truth under noise level `1/√n`, deterministically in the
/// provided `(seed, stream_id)` pair.
pub fn gen_data(truth: &TruthSequence, n: usize, noise_seed: u64, noise_stream_id: u64) -> Result<Dataset> {
    if n == 0 {
        return invalid("sample size n must be at least 1");
    }
    let mut rng = RandomStream::new(noise_seed, noise_stream_id);
    let root_n_inv = 1.0 / (n as f64).sqrt();
    let x = truth.coeffs.iter().map(|&t| t + root_n_inv * rng.normal()).collect();
    Ok(Dataset { n, x, truth: truth.clone(), noise_stream: (noise_seed, noise_stream_id) })
}

/// Squared ℓ² distance `Σ_j (estimate_j - θ_{0j})²` over the truncated range.
pub fn l2_risk(estimate: &[f64], truth: &TruthSequence) -> Result<f64> {
    if estimate.len() != truth.j_trunc() {
        return Err(Error::LengthMismatch { expected: truth.j_trunc(), got: estimate.len() });
    }
    Ok(estimate
        .iter()
        .zip(&truth.coeffs)
        .map(|(&e, &t)| {
            let d = e - t;
            d * d
        })
        .sum())
}

/// Diagnostic Sobolev energy `Σ_j j^{2α} θ_{0j}²` over the truncated range.
pub fn sobolev_norm_sq(truth: &TruthSequence, alpha: f64) -> f64 {
    truth
        .coeffs
        .iter()
        .enumerate()
        .map(|(i, &t)| ((i + 1) as f64).powf(2.0 * alpha) * t * t)
        .sum()
}
