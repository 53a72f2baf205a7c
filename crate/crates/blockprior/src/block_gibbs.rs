//! Gibbs sampler for the block prior under the Gaussian sequence model.
//!
//! One sweep alternates, block by block:
//!
//! - `θ_k | (X_k, A_k)`: exact conjugate draw from
//!   `N(w X_k, (A_k^{-1} + n)^{-1} I)` with shrinkage `w = n/(A_k^{-1}+n)`;
//! - `A_k | θ_k`: with `a_k = n_k/2 - 1` and `b_k = ‖θ_k‖²/2`, a two-component
//!   mixture of truncated inverse-Gamma laws `f_{a_k, b_k, e^{-k²}}` and
//!   `f_{a_k, b_k, e^{-k}}`, the component picked with probability
//!   `λ_{k1} ∝ T_{1k} ∫_0^{e^{-k²}} f_{a_k,b_k,∞}`.
//!
//! Blocks too small for the scale update (`n_k ≤ 2`, where `a_k ≤ 0`) and,
//! by default, the leading blocks of the exponential scheme are estimated
//! directly by `X_k` (passthrough). The modified prior (mBLOCK) restricts
//! the state to the ℓ¹ ball `Σ_j |θ_j| ≤ B`: the θ-update becomes the
//! conjugate Gaussian conditioned on the block's leftover budget, realized
//! by rejection with a radial-rescale fallback.
//!
//! Everything that can underflow runs in log space: the mixture weights
//! need `Q(a, b e^{k²})`, which is astronomically small whenever a block
//! carries signal.

use crate::blocks::{BlockKind, BlockScheme};
use crate::mixing::{MixingDensity, MixingFamily};
use crate::model::Dataset;
use crate::numerics::{inv_ln_reg_gamma_q, ln_reg_gamma_q, log_sum_exp, RandomStream};
use crate::{invalid, Result};

/// Which blocks are estimated directly by `X_k` instead of being sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PassthroughRule {
    /// Blocks with `n_k ≤ small_limit` always pass through; must be ≥ 2 so
    /// that every sampled block has `a_k = n_k/2 - 1 > 0`.
    pub small_limit: usize,
    /// The first `extra_leading` blocks pass through regardless of size.
    pub extra_leading: usize,
}

impl PassthroughRule {
    /// Default per scheme kind: under the exponential scheme the first two
    /// blocks (sizes 1 and 5) pass through; elsewhere only the blocks forced
    /// by `n_k ≤ 2` do.
    pub fn default_for(kind: BlockKind) -> Self {
        let extra_leading = match kind {
            BlockKind::Exponential => 2,
            _ => 0,
        };
        PassthroughRule { small_limit: 2, extra_leading }
    }
}

/// Configuration of the block prior fed to the sampler.
#[derive(Debug, Clone)]
pub struct BlockPriorConfig {
    pub scheme: BlockScheme,
    pub family: MixingFamily,
    pub passthrough: PassthroughRule,
    /// Present ⇒ modified prior restricted to `{Σ_j |θ_j| ≤ B}`.
    pub constraint_b: Option<f64>,
}

impl BlockPriorConfig {
    /// Plain block prior with the default passthrough rule and the two-level
    /// mixing family.
    pub fn block(scheme: BlockScheme) -> Self {
        let passthrough = PassthroughRule::default_for(scheme.kind());
        BlockPriorConfig { scheme, family: MixingFamily::TwoLevel, passthrough, constraint_b: None }
    }

    /// Modified block prior restricted to the ℓ¹ ball of radius `b`.
    pub fn modified(scheme: BlockScheme, b: f64) -> Self {
        let mut cfg = Self::block(scheme);
        cfg.constraint_b = Some(b);
        cfg
    }

    pub fn is_passthrough(&self, k: usize) -> bool {
        k < self.passthrough.extra_leading || self.scheme.size(k) <= self.passthrough.small_limit
    }

    /// Enforces the sampler preconditions: every sampled block must satisfy
    /// `n_k > 2` (checked here, never at sweep time) and the ℓ¹ radius must
    /// be positive.
    pub fn validate(&self) -> Result<()> {
        for k in 0..self.scheme.n_blocks() {
            if !self.is_passthrough(k) && self.scheme.size(k) <= 2 {
                return invalid(format!(
                    "block {k} has size {} ≤ 2 but is not covered by the passthrough rule",
                    self.scheme.size(k)
                ));
            }
        }
        if let Some(b) = self.constraint_b {
            if !(b > 0.0) {
                return invalid(format!("constraint radius must be positive, got {b}"));
            }
        }
        Ok(())
    }
}

/// Point-estimate extraction from a chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Estimator {
    /// A single posterior draw: the state after the final sweep.
    #[default]
    SingleDraw,
    /// Average of the retained sweeps.
    PosteriorMean,
}

/// Chain length, burn-in, estimator and stream identity.
#[derive(Debug, Clone, Copy)]
pub struct ChainConfig {
    pub sweeps: usize,
    pub burn_in: usize,
    pub estimator: Estimator,
    pub seed: u64,
    pub stream_id: u64,
}

impl ChainConfig {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        ChainConfig { sweeps: 2000, burn_in: 500, estimator: Estimator::SingleDraw, seed, stream_id }
    }

    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.sweeps {
            return invalid(format!("burn_in {} must be below sweeps {}", self.burn_in, self.sweeps));
        }
        Ok(())
    }
}

/// Current (θ, A) state of one chain.
#[derive(Debug, Clone)]
pub struct GibbsState {
    pub theta: Vec<f64>,
    /// One scale per block; entries of passthrough blocks stay NaN and are
    /// never read.
    pub scales: Vec<f64>,
    pub sweep_count: u64,
}

impl GibbsState {
    /// θ := X and A_k := e^{-k}/2 (mid-support).
    pub fn init(data: &Dataset, cfg: &BlockPriorConfig) -> Self {
        let scales = (0..cfg.scheme.n_blocks())
            .map(|k| if cfg.is_passthrough(k) { f64::NAN } else { 0.5 * (-(k as f64)).exp() })
            .collect();
        GibbsState { theta: data.x.clone(), scales, sweep_count: 0 }
    }
}

/// Counters accumulated over a sweep or a chain.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SweepStats {
    /// ℓ¹-restricted θ-updates that hit the rejection cap or an empty budget.
    pub l1_fallbacks: u64,
    /// Truncated inverse-Gamma draws that fell back to `s(1-ε)`.
    pub trunc_fallbacks: u64,
}

impl SweepStats {
    fn absorb(&mut self, other: SweepStats) {
        self.l1_fallbacks += other.l1_fallbacks;
        self.trunc_fallbacks += other.trunc_fallbacks;
    }
}

/// Exact conjugate draw of one block: `N(w X_k, (A_k^{-1}+n)^{-1} I)` with
/// `w = n/(A_k^{-1}+n)`, written into `out`.
pub fn sample_theta_given_a(
    x_k: &[f64],
    a_k: f64,
    n: usize,
    rng: &mut RandomStream,
    out: &mut [f64],
) -> Result<()> {
    if !(a_k > 0.0) {
        return invalid(format!("scale A_k must be positive, got {a_k}"));
    }
    if n == 0 {
        return invalid("sample size n must be at least 1");
    }
    debug_assert_eq!(x_k.len(), out.len());
    let nf = n as f64;
    let precision = 1.0 / a_k + nf;
    let w = nf / precision;
    let sd = (1.0 / precision).sqrt();
    for (o, &x) in out.iter_mut().zip(x_k) {
        *o = w * x + sd * rng.normal();
    }
    Ok(())
}

/// Mixture weights `(λ_{k1}, λ_{k2})` of the scale update:
/// `λ_{k1} ∝ T_{1k} M(e^{-k²})`, `λ_{k2} ∝ T_{2k} M(e^{-k})`, where
/// `M(s) = ∫_0^s f_{a,b,∞} = Q(a, b/s)`. Assembled entirely in log space;
/// `λ_{k1} + λ_{k2} = 1` exactly.
///
/// `b = 0` needs no special path: `M(s) = Q(a, 0) = 1`, so the weights fall
/// back to the prior masses of the two components.
pub fn mixture_weights(a: f64, b: f64, md: &MixingDensity) -> Result<(f64, f64)> {
    if !(a > 0.0) {
        return invalid(format!("shape a must be positive, got {a}"));
    }
    if !(b >= 0.0) {
        return invalid(format!("rate b must be nonnegative, got {b}"));
    }
    let ratio = |s: f64| if b == 0.0 { 0.0 } else { b / s }; // s = 0 ⇒ +inf, handled by ln_reg_gamma_q
    let lw1 = md.ln_t1() + ln_reg_gamma_q(a, ratio(md.inner_edge()))?;
    let lw2 = md.ln_t2() + ln_reg_gamma_q(a, ratio(md.outer_edge()))?;
    let lambda1 = if lw1 == f64::NEG_INFINITY && lw2 == f64::NEG_INFINITY {
        // b so large that both truncated masses underflow even in log space;
        // the wider component dominates in that limit.
        0.0
    } else {
        let d = lw1 - lw2;
        if d >= 0.0 {
            1.0 / (1.0 + (-d).exp())
        } else {
            let e = d.exp();
            e / (1.0 + e)
        }
    };
    Ok((lambda1, 1.0 - lambda1))
}

/// One draw from the truncated inverse-Gamma `f_{a,b,s}` by inverse CDF:
/// with `F(t) = Q(a, b/t)`, draw `u` uniform and solve
/// `ln Q(a, b/t) = ln u + ln F(s)` in log space.
///
/// Returns the draw and whether the degenerate fallback (`F(s)` below the
/// log-domain floor, value `s(1-1e-12)`) was taken. `s` may be `+inf`.
/// `b = 0` is handled by the scale-family limit: draws follow
/// `f_{a, b_min, s}` with `b_min` the smallest positive normal, which is the
/// exact `b → 0` behaviour of the power-law body `t^{-a-1} e^{-b/t}`.
pub fn sample_trunc_invgamma_with(
    a: f64,
    b: f64,
    s: f64,
    rng: &mut RandomStream,
) -> Result<(f64, bool)> {
    if !(a > 0.0) {
        return invalid(format!("shape a must be positive, got {a}"));
    }
    if !(b >= 0.0) {
        return invalid(format!("rate b must be nonnegative, got {b}"));
    }
    if !(s > 0.0) {
        return invalid(format!("truncation s must be positive, got {s}"));
    }
    let b_eff = b.max(f64::MIN_POSITIVE);
    let ln_fs = if s.is_infinite() { 0.0 } else { ln_reg_gamma_q(a, b_eff / s)? };
    if ln_fs == f64::NEG_INFINITY {
        return Ok((s * (1.0 - 1e-12), true));
    }
    let target = rng.uniform().ln() + ln_fs;
    let x = inv_ln_reg_gamma_q(a, target)?;
    let t = b_eff / x;
    debug_assert!(t > 0.0);
    Ok((if t > s { s } else { t }, false))
}

/// `sample_trunc_invgamma_with` without the fallback flag.
pub fn sample_trunc_invgamma(a: f64, b: f64, s: f64, rng: &mut RandomStream) -> Result<f64> {
    Ok(sample_trunc_invgamma_with(a, b, s, rng)?.0)
}

/// Scale update `A_k | θ_k`: computes `a_k = n_k/2 - 1`, `b_k = ‖θ_k‖²/2`,
/// picks the mixture component, draws the corresponding truncated
/// inverse-Gamma. Requires `n_k > 2`.
///
/// For the piecewise-linear family the draw targets
/// `∝ f_{a,b,∞}(t) g_k(t)` by rejection under the two-level envelope
/// `T_k 1{t ≤ e^{-k²}} + e^{-e^k} 1{t ≤ e^{-k}} ≥ g_k`.
pub fn sample_a_given_theta(
    theta_k: &[f64],
    md: &MixingDensity,
    rng: &mut RandomStream,
) -> Result<(f64, bool)> {
    let n_k = theta_k.len();
    if n_k <= 2 {
        return invalid(format!(
            "block of size {n_k} must be a passthrough block (needs n_k > 2 so that a_k > 0)"
        ));
    }
    let a = n_k as f64 / 2.0 - 1.0;
    let b = 0.5 * theta_k.iter().map(|t| t * t).sum::<f64>();
    match md.family() {
        MixingFamily::TwoLevel => {
            let (lambda1, _) = mixture_weights(a, b, md)?;
            let s = if rng.uniform() <= lambda1 { md.inner_edge() } else { md.outer_edge() };
            sample_trunc_invgamma_with(a, b, s.max(f64::MIN_POSITIVE), rng)
        }
        MixingFamily::PiecewiseLinear => {
            // Envelope rejection: proposals follow the two-level density with
            // levels T_k (inner) and e^{-e^k} (flat), which dominates the
            // linear density; inner proposals are thinned by
            // g_k(t) / (T_k + e^{-e^k}), the envelope value on that piece.
            let (lambda1, _) = mixture_weights(a, b, md)?;
            let ln_env_inner = log_sum_exp(md.ln_t1(), md.ln_t2());
            let mut last = (f64::NAN, false);
            for _ in 0..1000 {
                let inner = rng.uniform() <= lambda1;
                let s = if inner { md.inner_edge() } else { md.outer_edge() };
                last = sample_trunc_invgamma_with(a, b, s.max(f64::MIN_POSITIVE), rng)?;
                if !inner {
                    return Ok(last);
                }
                let tau = (last.0 / md.inner_edge()).min(1.0);
                let ln_g = log_sum_exp(md.ln_t1() + (-tau).ln_1p(), md.ln_t2() + tau.ln());
                if rng.uniform().ln() < ln_g - ln_env_inner {
                    return Ok(last);
                }
            }
            Ok((last.0, true))
        }
    }
}

fn l1_norm(v: &[f64]) -> f64 {
    v.iter().map(|t| t.abs()).sum()
}

/// One full Gibbs sweep over all blocks, in place. Returns the fallback
/// counters of this sweep.
pub fn gibbs_sweep(
    state: &mut GibbsState,
    data: &Dataset,
    cfg: &BlockPriorConfig,
    rng: &mut RandomStream,
) -> Result<SweepStats> {
    let j_max = cfg.scheme.j_max();
    if data.x.len() != j_max {
        return Err(crate::Error::LengthMismatch { expected: j_max, got: data.x.len() });
    }
    if state.theta.len() != j_max || state.scales.len() != cfg.scheme.n_blocks() {
        return invalid("state dimensions do not match data and scheme");
    }
    let mut stats = SweepStats::default();
    let mut total_l1 = cfg.constraint_b.map(|_| l1_norm(&state.theta));
    let mut scratch = vec![0.0; j_max];

    for k in 0..cfg.scheme.n_blocks() {
        let range = cfg.scheme.range0(k);
        if cfg.is_passthrough(k) {
            if let Some(total) = total_l1.as_mut() {
                *total -= l1_norm(&state.theta[range.clone()]);
                *total += l1_norm(&data.x[range.clone()]);
            }
            state.theta[range.clone()].copy_from_slice(&data.x[range]);
            continue;
        }

        let md = MixingDensity::new(cfg.family, k);
        let a_k = state.scales[k];
        debug_assert!(a_k > 0.0 && a_k <= md.outer_edge() * (1.0 + 1e-12));

        let x_k = &data.x[range.clone()];
        let out = &mut scratch[range.clone()];
        match (cfg.constraint_b, total_l1.as_mut()) {
            (Some(budget), Some(total)) => {
                let old_block_l1 = l1_norm(&state.theta[range.clone()]);
                let r_k = budget - (*total - old_block_l1);
                if r_k <= 0.0 {
                    // The rest of the state already exhausts the ball; the
                    // only admissible block value is zero.
                    out.iter_mut().for_each(|o| *o = 0.0);
                    stats.l1_fallbacks += 1;
                } else {
                    let mut accepted = false;
                    for _ in 0..100 {
                        sample_theta_given_a(x_k, a_k, data.n, rng, out)?;
                        if l1_norm(out) <= r_k {
                            accepted = true;
                            break;
                        }
                    }
                    if !accepted {
                        // Rescale the final rejected draw radially onto the
                        // budget surface (slightly inside it).
                        let scale = 0.99 * r_k / l1_norm(out);
                        out.iter_mut().for_each(|o| *o *= scale);
                        stats.l1_fallbacks += 1;
                    }
                }
                *total += l1_norm(out) - old_block_l1;
            }
            _ => sample_theta_given_a(x_k, a_k, data.n, rng, out)?,
        }
        state.theta[range.clone()].copy_from_slice(&scratch[range.clone()]);

        let (a_new, fell_back) = sample_a_given_theta(&state.theta[range], &md, rng)?;
        if fell_back {
            stats.trunc_fallbacks += 1;
        }
        debug_assert!(a_new > 0.0 && a_new <= md.outer_edge());
        state.scales[k] = a_new;
    }

    if let (Some(b), Some(total)) = (cfg.constraint_b, total_l1) {
        debug_assert!(
            total <= b * (1.0 + 1e-9) + 1e-9,
            "ℓ¹ constraint violated after sweep: {total} > {b}"
        );
    }
    state.sweep_count += 1;
    Ok(stats)
}

/// Per-block summary of the scale trace over the retained sweeps.
#[derive(Debug, Clone, Copy)]
pub struct ScaleTrace {
    pub k: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone)]
pub struct ChainDiagnostics {
    pub sweeps: usize,
    pub retained: usize,
    pub stats: SweepStats,
    pub scale_traces: Vec<ScaleTrace>,
}

#[derive(Debug, Clone)]
pub struct ChainOutput {
    pub estimate: Vec<f64>,
    pub diagnostics: ChainDiagnostics,
}

/// Runs a full chain: θ initialized at X, scales mid-support, `sweeps` total
/// sweeps of which the first `burn_in` are discarded. The estimate is the
/// final state (single draw) or the average of retained sweeps.
pub fn run_chain(data: &Dataset, prior: &BlockPriorConfig, chain: &ChainConfig) -> Result<ChainOutput> {
    run_chain_traced(data, prior, chain, None)
}

/// `run_chain` with an optional sink receiving `(sweep_index, θ)` for every
/// retained sweep — the draw-dump interface.
pub fn run_chain_traced(
    data: &Dataset,
    prior: &BlockPriorConfig,
    chain: &ChainConfig,
    mut sink: Option<&mut dyn FnMut(usize, &[f64])>,
) -> Result<ChainOutput> {
    prior.validate()?;
    chain.validate()?;
    if data.x.len() != prior.scheme.j_max() {
        return Err(crate::Error::LengthMismatch { expected: prior.scheme.j_max(), got: data.x.len() });
    }
    let mut rng = RandomStream::new(chain.seed, chain.stream_id);
    let mut state = GibbsState::init(data, prior);
    let mut stats = SweepStats::default();
    let retained = chain.sweeps - chain.burn_in;
    let mut mean_acc = vec![0.0; data.x.len()];
    let n_blocks = prior.scheme.n_blocks();
    let mut tr_sum = vec![0.0; n_blocks];
    let mut tr_min = vec![f64::INFINITY; n_blocks];
    let mut tr_max = vec![f64::NEG_INFINITY; n_blocks];

    for sweep in 0..chain.sweeps {
        stats.absorb(gibbs_sweep(&mut state, data, prior, &mut rng)?);
        if sweep < chain.burn_in {
            continue;
        }
        if matches!(chain.estimator, Estimator::PosteriorMean) {
            for (acc, &t) in mean_acc.iter_mut().zip(&state.theta) {
                *acc += t;
            }
        }
        for k in 0..n_blocks {
            let a = state.scales[k];
            if a.is_nan() {
                continue;
            }
            tr_sum[k] += a;
            tr_min[k] = tr_min[k].min(a);
            tr_max[k] = tr_max[k].max(a);
        }
        if let Some(sink) = sink.as_mut() {
            sink(sweep, &state.theta);
        }
    }

    let estimate = match chain.estimator {
        Estimator::SingleDraw => state.theta,
        Estimator::PosteriorMean => {
            mean_acc.iter_mut().for_each(|a| *a /= retained as f64);
            mean_acc
        }
    };
    let scale_traces = (0..n_blocks)
        .filter(|&k| tr_min[k].is_finite())
        .map(|k| ScaleTrace { k, mean: tr_sum[k] / retained as f64, min: tr_min[k], max: tr_max[k] })
        .collect();
    Ok(ChainOutput {
        estimate,
        diagnostics: ChainDiagnostics { sweeps: chain.sweeps, retained, stats, scale_traces },
    })
}

/// Default panel count (per support piece) of the quadrature oracle.
pub const ORACLE_DEFAULT_PANELS: usize = 2000;

/// Exact single-block posterior computed by one-dimensional quadrature,
/// independent of the Gibbs path: marginally `X_k | A_k ~ N(0, (A_k+1/n) I)`,
/// so `p(A_k | X_k) ∝ g_k(A_k) (A_k+1/n)^{-n_k/2} exp(-‖X_k‖²/(2(A_k+1/n)))`.
#[derive(Debug, Clone)]
pub struct BlockPosteriorOracle {
    /// `E[n/(A^{-1}+n) | X_k]`.
    pub shrink_mean: f64,
    /// `E[θ_k | X_k] = shrink_mean · X_k`.
    pub post_mean: Vec<f64>,
    /// Ascending cell edges of the scale grid (length cells+1).
    pub grid: Vec<f64>,
    /// Normalized posterior mass per grid cell.
    pub cell_mass: Vec<f64>,
    /// Mass of the first (leftmost) cell; the self-check that the grid's
    /// lower cutoff lost nothing.
    pub left_cell_mass: f64,
}

impl BlockPosteriorOracle {
    /// Posterior mass of `[lo, hi]`, linearly prorating boundary cells.
    pub fn mass_between(&self, lo: f64, hi: f64) -> f64 {
        let mut mass = 0.0;
        for i in 0..self.cell_mass.len() {
            let (a, b) = (self.grid[i], self.grid[i + 1]);
            if b <= lo || a >= hi {
                continue;
            }
            let overlap = (b.min(hi) - a.max(lo)) / (b - a);
            mass += self.cell_mass[i] * overlap;
        }
        mass
    }
}

/// Quadrature of the block posterior against an arbitrary log-prior on
/// `[lo, hi]`; used by `oracle_block_posterior` piecewise and by tests with
/// degenerate priors.
///
/// Returns `(cell edges, ln cell masses, mid-cell shrinkage weights)`; the
/// log cell masses carry an absolute scale so that pieces computed in
/// separate calls can be merged before normalization.
pub fn oracle_with_prior(
    x_k: &[f64],
    n: usize,
    ln_prior: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    panels: usize,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    assert!(hi > lo && lo > 0.0);
    let n_k = x_k.len() as f64;
    let energy = x_k.iter().map(|x| x * x).sum::<f64>();
    let nf = n as f64;
    let (ln_lo, ln_hi) = (lo.ln(), hi.ln());
    let dy = (ln_hi - ln_lo) / panels as f64;
    let mut edges = Vec::with_capacity(panels + 1);
    let mut ln_h = Vec::with_capacity(panels + 1);
    for i in 0..=panels {
        let y = ln_lo + dy * i as f64;
        let a = y.exp();
        let v = a + 1.0 / nf;
        // + y: Jacobian of the log substitution
        ln_h.push(ln_prior(a) - 0.5 * n_k * v.ln() - 0.5 * energy / v + y);
        edges.push(a);
    }
    let ln_half_dy = (0.5 * dy).ln();
    let mut ln_cells = Vec::with_capacity(panels);
    let mut weights = Vec::with_capacity(panels);
    for i in 0..panels {
        ln_cells.push(log_sum_exp(ln_h[i], ln_h[i + 1]) + ln_half_dy);
        let mid = 0.5 * (edges[i] + edges[i + 1]);
        weights.push(nf / (1.0 / mid + nf));
    }
    (edges, ln_cells, weights)
}

/// Builds the quadrature oracle for block `k` under mixing family `family`,
/// with at least `panels` log-spaced panels per support piece.
pub fn oracle_block_posterior(
    x_k: &[f64],
    k: usize,
    n: usize,
    family: MixingFamily,
    panels: usize,
) -> Result<BlockPosteriorOracle> {
    if x_k.is_empty() || n == 0 {
        return invalid("oracle needs a nonempty block and positive n");
    }
    let md = MixingDensity::new(family, k);
    let panels = panels.max(ORACLE_DEFAULT_PANELS);
    let floor = md.outer_edge() * 1e-18;
    let mut pieces: Vec<(f64, f64)> = Vec::new();
    if md.inner_edge() < md.outer_edge() {
        if md.inner_edge() > floor {
            pieces.push((floor, md.inner_edge()));
        }
        pieces.push((md.inner_edge().max(floor), md.outer_edge()));
    } else {
        pieces.push((floor, md.outer_edge()));
    }

    let mut full_grid = vec![pieces[0].0];
    let mut ln_cells = Vec::new();
    let mut shrink_w = Vec::new();
    for &(lo, hi) in &pieces {
        // evaluate the prior strictly inside the piece (it jumps at e^{-k²})
        let clamp_lo = lo * (1.0 + 1e-13);
        let (edges, lc, w) = oracle_with_prior(
            x_k,
            n,
            |a| md.ln_density(a.clamp(clamp_lo, hi)).unwrap_or(f64::NEG_INFINITY),
            lo,
            hi,
            panels,
        );
        full_grid.extend_from_slice(&edges[1..]);
        ln_cells.extend_from_slice(&lc);
        shrink_w.extend_from_slice(&w);
    }
    let m = ln_cells.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return Err(crate::Error::NoConvergence("oracle quadrature mass vanished".into()));
    }
    let cells: Vec<f64> = ln_cells.iter().map(|&lc| (lc - m).exp()).collect();
    let z: f64 = cells.iter().sum();
    let shrink_mean = cells.iter().zip(&shrink_w).map(|(c, w)| c * w).sum::<f64>() / z;
    let cell_mass: Vec<f64> = cells.iter().map(|c| c / z).collect();
    let left_cell_mass = cell_mass[0];
    let post_mean = x_k.iter().map(|&x| shrink_mean * x).collect();
    debug_assert_eq!(full_grid.len(), cell_mass.len() + 1);
    Ok(BlockPosteriorOracle { shrink_mean, post_mean, grid: full_grid, cell_mass, left_cell_mass })
}
