//! Flat key-value config files for `simulate`.
//!
//! Syntax: one `key = value` pair per line, `#` starts a comment, blank
//! lines ignored. Keys:
//!
//! ```text
//! alpha     = 0.5,1,1.5          # comma-separated smoothness values
//! n         = 256,512            # comma-separated sample sizes
//! methods   = BLOCK,mBLOCK       # method names
//! trials    = 200                # fixed trial count
//! adaptive_trials = 100,1000,0.05  # min,max,relative bootstrap SE
//! seed      = 1729
//! estimator = single_draw | posterior_mean
//! sweeps    = 2000
//! burn_in   = 500
//! mblock_b  = 30
//! format    = csv | markdown
//! ```
//!
//! Command-line flags override file values; the BLOCKPRIOR_SEED environment
//! variable overrides both for the seed.

use blockprior::block_gibbs::Estimator;
use blockprior::harness::{ExperimentSpec, Method, TrialRule};

use crate::FormatArg;

pub fn parse_adaptive(value: &str) -> Result<TrialRule, String> {
    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("adaptive trial rule needs min,max,rel_se, got '{value}'"));
    }
    let min = parts[0].parse().map_err(|e| format!("adaptive min: {e}"))?;
    let max = parts[1].parse().map_err(|e| format!("adaptive max: {e}"))?;
    let rel_se = parts[2].parse().map_err(|e| format!("adaptive rel_se: {e}"))?;
    Ok(TrialRule::Adaptive { min, max, rel_se })
}

fn parse_list<T: std::str::FromStr>(value: &str, key: &str) -> Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|e| format!("config key '{key}': {e}")))
        .collect()
}

/// Applies a config file to the spec; returns the requested output format,
/// if any.
pub fn apply(text: &str, spec: &mut ExperimentSpec) -> Result<Option<FormatArg>, String> {
    let mut format = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected 'key = value', got '{line}'", lineno + 1))?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "alpha" => spec.alphas = parse_list(value, key)?,
            "n" => spec.ns = parse_list(value, key)?,
            "methods" => {
                spec.methods = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| Method::parse(s).map_err(|e| e.to_string()))
                    .collect::<Result<_, _>>()?
            }
            "trials" => {
                spec.trials = TrialRule::Fixed(
                    value.parse().map_err(|e| format!("config key 'trials': {e}"))?,
                )
            }
            "adaptive_trials" => spec.trials = parse_adaptive(value)?,
            "seed" => spec.master_seed = value.parse().map_err(|e| format!("config key 'seed': {e}"))?,
            "estimator" => {
                spec.estimator = match value {
                    "single_draw" => Estimator::SingleDraw,
                    "posterior_mean" => Estimator::PosteriorMean,
                    other => return Err(format!("config key 'estimator': unknown value '{other}'")),
                }
            }
            "sweeps" => spec.sweeps = value.parse().map_err(|e| format!("config key 'sweeps': {e}"))?,
            "burn_in" => {
                spec.burn_in = value.parse().map_err(|e| format!("config key 'burn_in': {e}"))?
            }
            "mblock_b" => {
                spec.mblock_b = value.parse().map_err(|e| format!("config key 'mblock_b': {e}"))?
            }
            "format" => {
                format = Some(match value {
                    "csv" => FormatArg::Csv,
                    "markdown" => FormatArg::Markdown,
                    other => return Err(format!("config key 'format': unknown value '{other}'")),
                })
            }
            other => return Err(format!("config line {}: unknown key '{other}'", lineno + 1)),
        }
    }
    Ok(format)
}
