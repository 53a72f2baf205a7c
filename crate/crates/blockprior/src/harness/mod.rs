//! Experiment orchestration: runs (method, α, n) cells over many seeded
//! trials, aggregates median/MAD risk tables, and emits CSV or markdown.
//!
//! Reproducibility contract: one master seed drives everything through
//! derived stream ids —
//!
//! - Rademacher signs: stream `(master, derive(SIGNS, α))`, shared by every
//!   method, trial and sample size of that α (methods compete on a common
//!   signal);
//! - observation noise: stream `(master, derive(NOISE, α, n, trial))`,
//!   shared by every method (methods see identical data);
//! - chain randomness: stream `(master, derive(CHAIN, method, α, n, trial))`.
//!
//! Trials run in parallel; results are reduced in trial order, so the table
//! is independent of the execution schedule.

pub mod verify;

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;

use crate::baselines::gp::{
    rgpf_posterior_with, rgpg_chain_with, RgpConfig, RgpfContext, RgpgContext,
};
use crate::baselines::sieve::{adaptive_sieve_posterior, fixed_sieve_posterior, SieveConfig};
use crate::block_gibbs::{run_chain, BlockPriorConfig, ChainConfig, Estimator};
use crate::blocks::{BlockKind, BlockScheme};
use crate::model::{gen_data, l2_risk, make_truth, SignalSpec, TruthSequence};
use crate::numerics::{derive_stream_id, RandomStream};
use crate::{invalid, Result};

const TAG_SIGNS: u64 = 0x5167_05;
const TAG_NOISE: u64 = 0xD474_05;
const TAG_CHAIN: u64 = 0xC417_05;
const TAG_BOOT: u64 = 0xB007_05;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// The estimation methods of the simulation study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Method {
    Rgpf,
    Rgpg,
    Block,
    MBlock,
    CBlock16,
    CBlock32,
    SieveF,
    SieveA,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::Rgpf,
        Method::Rgpg,
        Method::Block,
        Method::MBlock,
        Method::CBlock16,
        Method::CBlock32,
        Method::SieveF,
        Method::SieveA,
    ];

    /// The six methods of the published tables, in their column order.
    pub const TABLE: [Method; 6] = [
        Method::Rgpf,
        Method::Rgpg,
        Method::Block,
        Method::MBlock,
        Method::CBlock16,
        Method::CBlock32,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Rgpf => "RGPF",
            Method::Rgpg => "RGPG",
            Method::Block => "BLOCK",
            Method::MBlock => "mBLOCK",
            Method::CBlock16 => "cBLOCK16",
            Method::CBlock32 => "cBLOCK32",
            Method::SieveF => "SIEVE_F",
            Method::SieveA => "SIEVE_A",
        }
    }

    pub fn parse(s: &str) -> Result<Method> {
        Method::ALL
            .iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .copied()
            .ok_or_else(|| crate::Error::InvalidArgument(format!("unknown method '{s}'")))
    }

    fn index(&self) -> u64 {
        Method::ALL.iter().position(|m| m == self).unwrap() as u64
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// How many trials a cell runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrialRule {
    Fixed(usize),
    /// Run at least `min`, then grow in batches of 50 until the bootstrap
    /// standard error of the median drops below `rel_se` times the median,
    /// capping at `max`.
    Adaptive { min: usize, max: usize, rel_se: f64 },
}

impl Default for TrialRule {
    fn default() -> Self {
        TrialRule::Fixed(200)
    }
}

/// One full experiment: the cross product of methods, smoothness values and
/// sample sizes.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub alphas: Vec<f64>,
    pub ns: Vec<usize>,
    pub methods: Vec<Method>,
    pub trials: TrialRule,
    pub master_seed: u64,
    pub estimator: Estimator,
    pub sweeps: usize,
    pub burn_in: usize,
    /// ℓ¹ radius of the modified block prior.
    pub mblock_b: f64,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            alphas: vec![0.5, 1.0, 1.5],
            ns: vec![256, 512],
            methods: Method::TABLE.to_vec(),
            trials: TrialRule::default(),
            master_seed: 1729,
            estimator: Estimator::SingleDraw,
            sweeps: 2000,
            burn_in: 500,
            mblock_b: 30.0,
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return invalid("methods must be nonempty");
        }
        if self.alphas.is_empty() || self.ns.is_empty() {
            return invalid("alphas and ns must be nonempty");
        }
        if self.alphas.iter().any(|a| !(*a > 0.0)) {
            return invalid("alphas must be positive");
        }
        if self.ns.iter().any(|&n| n == 0) {
            return invalid("sample sizes must be positive");
        }
        match self.trials {
            TrialRule::Fixed(t) if t == 0 => return invalid("trials must be at least 1"),
            TrialRule::Adaptive { min, max, .. } if min == 0 || max < min => {
                return invalid("adaptive trial rule needs 0 < min <= max")
            }
            _ => {}
        }
        if self.burn_in >= self.sweeps {
            return invalid("burn_in must be below sweeps");
        }
        if !(self.mblock_b > 0.0) {
            return invalid("mblock_b must be positive");
        }
        Ok(())
    }

    /// Canonical one-line rendering; the config hash is derived from it.
    pub fn canonical_string(&self) -> String {
        let alphas: Vec<String> = self.alphas.iter().map(|a| format!("{a}")).collect();
        let ns: Vec<String> = self.ns.iter().map(|n| format!("{n}")).collect();
        let methods: Vec<String> = self.methods.iter().map(|m| m.name().to_string()).collect();
        let trials = match self.trials {
            TrialRule::Fixed(t) => format!("fixed:{t}"),
            TrialRule::Adaptive { min, max, rel_se } => format!("adaptive:{min}:{max}:{rel_se}"),
        };
        let est = match self.estimator {
            Estimator::SingleDraw => "single_draw",
            Estimator::PosteriorMean => "posterior_mean",
        };
        format!(
            "alphas={};ns={};methods={};trials={};seed={};estimator={};sweeps={};burn_in={};mblock_b={}",
            alphas.join(","),
            ns.join(","),
            methods.join(","),
            trials,
            self.master_seed,
            est,
            self.sweeps,
            self.burn_in,
            self.mblock_b
        )
    }

    pub fn config_hash(&self) -> u64 {
        // FNV-1a over the canonical rendering
        let mut h = 0xcbf2_9ce4_8422_2325u64;
        for b in self.canonical_string().bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x1000_0000_01b3);
        }
        h
    }
}

/// Result of one (method, α, n) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub method: Method,
    pub alpha: f64,
    pub n: usize,
    pub median: f64,
    pub mad: f64,
    pub trials: usize,
    pub seconds: f64,
    pub error: Option<String>,
}

/// The aggregated experiment output.
#[derive(Debug, Clone)]
pub struct RiskTable {
    pub cells: Vec<CellResult>,
    pub master_seed: u64,
    pub config_hash: u64,
    pub version: String,
}

impl RiskTable {
    pub fn cell(&self, method: Method, alpha: f64, n: usize) -> Option<&CellResult> {
        self.cells
            .iter()
            .find(|c| c.method == method && c.alpha == alpha && c.n == n)
    }

    /// Copy with all wall times zeroed. Emitted artifacts are then
    /// byte-identical across reruns of the same seed; the CLI uses this
    /// unless timings are explicitly requested.
    pub fn without_timings(&self) -> RiskTable {
        let mut t = self.clone();
        for c in &mut t.cells {
            c.seconds = 0.0;
        }
        t
    }
}

/// Median of a sample (mean of the middle pair for even sizes).
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty());
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Unscaled median absolute deviation about the median.
pub fn mad(values: &[f64]) -> f64 {
    let med = median(values);
    let dev: Vec<f64> = values.iter().map(|v| (v - med).abs()).collect();
    median(&dev)
}

fn bootstrap_se_of_median(risks: &[f64], seed: u64, cell_tag: u64) -> f64 {
    let reps = 200;
    let mut medians = Vec::with_capacity(reps);
    let mut rng = RandomStream::new(seed, derive_stream_id(TAG_BOOT, &[cell_tag]));
    let mut resample = vec![0.0; risks.len()];
    for _ in 0..reps {
        for r in resample.iter_mut() {
            let idx = (rng.next_u64() % risks.len() as u64) as usize;
            *r = risks[idx];
        }
        medians.push(median(&resample));
    }
    let mean = medians.iter().sum::<f64>() / reps as f64;
    (medians.iter().map(|m| (m - mean) * (m - mean)).sum::<f64>() / (reps - 1) as f64).sqrt()
}

/// Shared per-(α, n) context handed to trial runners.
struct CellContext {
    truth: Arc<TruthSequence>,
    rgpf: Option<Arc<RgpfContext>>,
    rgpg: Option<Arc<RgpgContext>>,
}

fn sign_seed(master: u64, alpha: f64) -> u64 {
    derive_stream_id(TAG_SIGNS, &[master, alpha.to_bits()])
}

/// The shared truth of one α at truncation level `j_trunc` (defaults to n).
pub fn experiment_truth(master: u64, alpha: f64, j_trunc: usize) -> Result<TruthSequence> {
    make_truth(&SignalSpec::polynomial(alpha, sign_seed(master, alpha)), j_trunc)
}

/// The dataset of one (α, n, trial) cell exactly as the experiment runner
/// generates it.
pub fn trial_dataset(master: u64, alpha: f64, n: usize, trial: u64) -> Result<crate::model::Dataset> {
    let truth = experiment_truth(master, alpha, n)?;
    let noise_id = derive_stream_id(TAG_NOISE, &[alpha.to_bits(), n as u64, trial]);
    gen_data(&truth, n, master, noise_id)
}

/// The chain stream id of one (method, α, n, trial) cell, as used by the
/// experiment runner.
pub fn chain_stream_id(method: Method, alpha: f64, n: usize, trial: u64) -> u64 {
    derive_stream_id(TAG_CHAIN, &[method.index(), alpha.to_bits(), n as u64, trial])
}

fn run_one_trial(
    spec: &ExperimentSpec,
    ctx: &CellContext,
    method: Method,
    alpha: f64,
    n: usize,
    trial: u64,
) -> Result<f64> {
    let noise_id = derive_stream_id(TAG_NOISE, &[alpha.to_bits(), n as u64, trial]);
    let data = gen_data(&ctx.truth, n, spec.master_seed, noise_id)?;
    let chain_id = derive_stream_id(TAG_CHAIN, &[method.index(), alpha.to_bits(), n as u64, trial]);
    let chain = ChainConfig {
        sweeps: spec.sweeps,
        burn_in: spec.burn_in,
        estimator: spec.estimator,
        seed: spec.master_seed,
        stream_id: chain_id,
    };
    let mut rng = RandomStream::new(spec.master_seed, chain_id);
    let estimate = match method {
        Method::Block => {
            let scheme = BlockScheme::build(BlockKind::Exponential, n)?;
            run_chain(&data, &BlockPriorConfig::block(scheme), &chain)?.estimate
        }
        Method::MBlock => {
            let scheme = BlockScheme::build(BlockKind::Exponential, n)?;
            run_chain(&data, &BlockPriorConfig::modified(scheme, spec.mblock_b), &chain)?.estimate
        }
        Method::CBlock16 => {
            let scheme = BlockScheme::build(BlockKind::Constant(16), n)?;
            run_chain(&data, &BlockPriorConfig::block(scheme), &chain)?.estimate
        }
        Method::CBlock32 => {
            let scheme = BlockScheme::build(BlockKind::Constant(32), n)?;
            run_chain(&data, &BlockPriorConfig::block(scheme), &chain)?.estimate
        }
        Method::Rgpf => rgpf_posterior_with(
            ctx.rgpf.as_ref().expect("rgpf context built"),
            &data,
            spec.estimator,
            &mut rng,
        ),
        Method::Rgpg => rgpg_chain_with(ctx.rgpg.as_ref().expect("rgpg context built"), &data, &chain)?,
        Method::SieveF => {
            fixed_sieve_posterior(&data, &SieveConfig::fixed(alpha), spec.estimator, &mut rng)?
        }
        Method::SieveA => {
            adaptive_sieve_posterior(&data, &SieveConfig::adaptive(), spec.estimator, &mut rng)?
        }
    };
    l2_risk(&estimate, &ctx.truth)
}

fn run_cell(
    spec: &ExperimentSpec,
    ctx: &CellContext,
    method: Method,
    alpha: f64,
    n: usize,
) -> CellResult {
    let started = std::time::Instant::now();
    let cell_tag = derive_stream_id(TAG_CHAIN, &[method.index(), alpha.to_bits(), n as u64]);

    let run_batch = |lo: usize, hi: usize| -> Result<Vec<f64>> {
        (lo..hi)
            .into_par_iter()
            .map(|trial| run_one_trial(spec, ctx, method, alpha, n, trial as u64))
            .collect()
    };

    let outcome = (|| -> Result<(Vec<f64>, usize)> {
        match spec.trials {
            TrialRule::Fixed(t) => Ok((run_batch(0, t)?, t)),
            TrialRule::Adaptive { min, max, rel_se } => {
                let mut risks = run_batch(0, min)?;
                while risks.len() < max {
                    let med = median(&risks);
                    let se = bootstrap_se_of_median(&risks, spec.master_seed, cell_tag);
                    if se <= rel_se * med.abs() {
                        break;
                    }
                    let next = (risks.len() + 50).min(max);
                    risks.extend(run_batch(risks.len(), next)?);
                }
                let t = risks.len();
                Ok((risks, t))
            }
        }
    })();

    let seconds = started.elapsed().as_secs_f64();
    match outcome {
        Ok((risks, trials)) => CellResult {
            method,
            alpha,
            n,
            median: median(&risks),
            mad: mad(&risks),
            trials,
            seconds,
            error: None,
        },
        Err(e) => CellResult {
            method,
            alpha,
            n,
            median: f64::NAN,
            mad: f64::NAN,
            trials: 0,
            seconds,
            error: Some(e.to_string()),
        },
    }
}

/// Runs the whole experiment. Cells are evaluated in (α, n, method) order;
/// a failing cell records its error and the rest proceed.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<RiskTable> {
    spec.validate()?;
    let mut cells = Vec::new();
    let mut rgpg_cache: BTreeMap<usize, Arc<RgpgContext>> = BTreeMap::new();
    for &alpha in &spec.alphas {
        for &n in &spec.ns {
            let truth = Arc::new(experiment_truth(spec.master_seed, alpha, n)?);
            let rgpf = if spec.methods.contains(&Method::Rgpf) {
                Some(Arc::new(RgpfContext::new(&RgpConfig::fixed(alpha, n), n, n)?))
            } else {
                None
            };
            let rgpg = if spec.methods.contains(&Method::Rgpg) {
                let ctx = match rgpg_cache.get(&n) {
                    Some(c) => c.clone(),
                    None => {
                        let c = Arc::new(RgpgContext::new(&RgpConfig::gamma(n), n)?);
                        rgpg_cache.insert(n, c.clone());
                        c
                    }
                };
                Some(ctx)
            } else {
                None
            };
            let ctx = CellContext { truth, rgpf, rgpg };
            for &method in &spec.methods {
                cells.push(run_cell(spec, &ctx, method, alpha, n));
            }
        }
    }
    Ok(RiskTable {
        cells,
        master_seed: spec.master_seed,
        config_hash: spec.config_hash(),
        version: VERSION.to_string(),
    })
}

/// CSV emission: `method,alpha,n,median,mad,trials,seconds,seed`, one row
/// per cell, '.' decimal separator, plus a trailing `#` comment carrying the
/// config hash and version for auditability.
pub fn emit_csv(table: &RiskTable) -> String {
    let mut out = String::from("method,alpha,n,median,mad,trials,seconds,seed\n");
    for c in &table.cells {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            c.method, c.alpha, c.n, c.median, c.mad, c.trials, c.seconds, table.master_seed
        ));
    }
    out.push_str(&format!(
        "# config_hash={:#018x} version={}\n",
        table.config_hash, table.version
    ));
    out
}

/// Markdown emission mirroring the two-column table layout of the study.
pub fn emit_markdown(table: &RiskTable) -> String {
    let mut out = String::new();
    let mut ns: Vec<usize> = table.cells.iter().map(|c| c.n).collect();
    ns.sort_unstable();
    ns.dedup();
    let mut alphas: Vec<f64> = table.cells.iter().map(|c| c.alpha).collect();
    alphas.sort_by(|a, b| a.partial_cmp(b).unwrap());
    alphas.dedup();

    for &n in &ns {
        out.push_str(&format!("### Estimation errors for n = {n}: median (MAD)\n\n"));
        out.push_str("| alpha | method | risk | method | risk |\n");
        out.push_str("|---|---|---|---|---|\n");
        for &alpha in &alphas {
            let row_cells: Vec<&CellResult> = table
                .cells
                .iter()
                .filter(|c| c.n == n && c.alpha == alpha)
                .collect();
            let half = row_cells.len().div_ceil(2);
            let fmt = |c: Option<&&CellResult>| -> (String, String) {
                match c {
                    None => (String::new(), String::new()),
                    Some(c) => match &c.error {
                        Some(e) => (c.method.to_string(), format!("failed: {e}")),
                        None => (c.method.to_string(), format!("{:.3} ({:.3})", c.median, c.mad)),
                    },
                }
            };
            for r in 0..half {
                let (m1, v1) = fmt(row_cells.get(r));
                let (m2, v2) = fmt(row_cells.get(half + r));
                let label = if r == 0 { format!("{alpha}") } else { String::new() };
                out.push_str(&format!("| {label} | {m1} | {v1} | {m2} | {v2} |\n"));
            }
        }
        out.push('\n');
    }
    out.push_str(&format!(
        "seed {} · config {:#018x} · version {}\n",
        table.master_seed, table.config_hash, table.version
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_and_mad_definitions() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        // MAD is unscaled: median of |x - med|
        assert_eq!(mad(&[1.0, 2.0, 3.0, 100.0]), 1.0);
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(Method::parse(m.name()).unwrap(), m);
        }
        assert!(Method::parse("nope").is_err());
        assert_eq!(Method::parse("block").unwrap(), Method::Block);
    }

    #[test]
    fn csv_empty_table_is_header_only() {
        let t = RiskTable { cells: vec![], master_seed: 7, config_hash: 1, version: "x".into() };
        let csv = emit_csv(&t);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "method,alpha,n,median,mad,trials,seconds,seed");
        assert!(lines[1].starts_with('#'));
        assert_eq!(lines.len(), 2);
    }

    #[test]
    fn small_experiment_deterministic() {
        let spec = ExperimentSpec {
            alphas: vec![1.0],
            ns: vec![64],
            methods: vec![Method::Block, Method::SieveF],
            trials: TrialRule::Fixed(4),
            sweeps: 100,
            burn_in: 20,
            ..ExperimentSpec::default()
        };
        let a = run_experiment(&spec).unwrap();
        let b = run_experiment(&spec).unwrap();
        assert_eq!(emit_csv(&a.without_timings()), emit_csv(&b.without_timings()));
        assert_eq!(a.cells.len(), 2);
        assert!(a.cells.iter().all(|c| c.error.is_none()));
    }

    #[test]
    fn shared_truth_and_data_across_methods() {
        // both methods must see identical data: equal per-trial noise ids
        let master = 99;
        let t1 = experiment_truth(master, 1.0, 64).unwrap();
        let t2 = experiment_truth(master, 1.0, 128).unwrap();
        assert_eq!(&t2.coeffs[..64], &t1.coeffs[..]);
    }

    #[test]
    fn markdown_layout_has_six_methods_by_three_alphas() {
        let spec = ExperimentSpec::default();
        let mut cells = Vec::new();
        for &alpha in &spec.alphas {
            for &n in &spec.ns {
                for &method in &spec.methods {
                    cells.push(CellResult {
                        method,
                        alpha,
                        n,
                        median: 1.0,
                        mad: 0.1,
                        trials: 200,
                        seconds: 0.0,
                        error: None,
                    });
                }
            }
        }
        let t = RiskTable { cells, master_seed: 1, config_hash: 2, version: "t".into() };
        let md = emit_markdown(&t);
        // per n: 3 alphas × 3 rows of 2 methods
        assert_eq!(md.matches("### Estimation errors").count(), 2);
        assert_eq!(md.matches("| 0.5 |").count(), 2);
        let body_rows = md.lines().filter(|l| l.starts_with("| ") && !l.contains("alpha")).count();
        assert_eq!(body_rows, 2 * 3 * 3);
    }

    #[test]
    fn adaptive_trials_stop_by_rule() {
        let spec = ExperimentSpec {
            alphas: vec![1.0],
            ns: vec![32],
            methods: vec![Method::SieveF],
            trials: TrialRule::Adaptive { min: 20, max: 120, rel_se: 0.2 },
            ..ExperimentSpec::default()
        };
        let t = run_experiment(&spec).unwrap();
        let c = &t.cells[0];
        assert!(c.trials >= 20 && c.trials <= 120, "trials {}", c.trials);
    }
}
