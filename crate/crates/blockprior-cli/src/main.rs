//! Command line front end: table replication, single-chain draw dumps, the
//! verification suite, and quadrature reference values.

mod config;

use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use blockprior::block_gibbs::{
    oracle_block_posterior, run_chain_traced, BlockPriorConfig, ChainConfig, Estimator,
};
use blockprior::blocks::{BlockKind, BlockScheme};
use blockprior::harness::verify::{verify_suite, VerifyLevel};
use blockprior::harness::{
    chain_stream_id, emit_csv, emit_markdown, run_experiment, trial_dataset, ExperimentSpec,
    Method, TrialRule,
};
use blockprior::mixing::MixingFamily;
use blockprior::model::{gen_data, make_truth, SignalSpec};

#[derive(Parser)]
#[command(name = "blockprior", version, about = "Block-prior simulation toolkit for the Gaussian sequence model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a risk-table experiment and emit CSV or markdown.
    Simulate(SimulateArgs),
    /// Run one chain on one dataset and dump the retained draws.
    Sample(SampleArgs),
    /// Run the verification suite; nonzero exit on any failing item.
    Verify(VerifyArgs),
    /// Print quadrature reference values for one block posterior.
    Oracle(OracleArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum EstimatorArg {
    SingleDraw,
    PosteriorMean,
}

impl From<EstimatorArg> for Estimator {
    fn from(e: EstimatorArg) -> Estimator {
        match e {
            EstimatorArg::SingleDraw => Estimator::SingleDraw,
            EstimatorArg::PosteriorMean => Estimator::PosteriorMean,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Markdown,
}

#[derive(Args)]
struct SimulateArgs {
    /// Flat key-value config file; flags override it.
    #[arg(long)]
    config: Option<std::path::PathBuf>,
    /// Comma-separated smoothness values.
    #[arg(long, value_delimiter = ',')]
    alpha: Vec<f64>,
    /// Comma-separated sample sizes.
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    /// Comma-separated method names (RGPF, RGPG, BLOCK, mBLOCK, cBLOCK16, cBLOCK32, SIEVE_F, SIEVE_A).
    #[arg(long, value_delimiter = ',')]
    methods: Vec<String>,
    #[arg(long)]
    trials: Option<usize>,
    /// Adaptive stopping: min,max,relative-se (overrides --trials).
    #[arg(long)]
    adaptive_trials: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    estimator: Option<EstimatorArg>,
    #[arg(long)]
    sweeps: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
    /// ℓ¹ radius of the modified block prior.
    #[arg(long)]
    mblock_b: Option<f64>,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    /// Keep wall times in the output (reruns then differ byte-wise).
    #[arg(long)]
    timings: bool,
    /// Output path; stdout when absent.
    #[arg(long)]
    out: Option<std::path::PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    /// One of BLOCK, mBLOCK, cBLOCK16, cBLOCK32.
    #[arg(long, default_value = "BLOCK")]
    method: String,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 256)]
    n: usize,
    /// Trial index used for the noise stream.
    #[arg(long, default_value_t = 0)]
    trial: u64,
    #[arg(long, default_value_t = 1729)]
    seed: u64,
    #[arg(long, default_value_t = 2000)]
    sweeps: usize,
    #[arg(long, default_value_t = 500)]
    burn_in: usize,
    #[arg(long, default_value_t = 30.0)]
    mblock_b: f64,
    /// Draw-dump path: one line per retained sweep, "sweep v1 v2 ...".
    #[arg(long)]
    out: std::path::PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value = "quick")]
    level: String,
    #[arg(long, default_value_t = 1729)]
    seed: u64,
}

#[derive(Args)]
struct OracleArgs {
    /// Block index.
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 256)]
    n: usize,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// Signal amplitude of the generated observation.
    #[arg(long, default_value_t = 10.0)]
    amplitude: f64,
    #[arg(long, default_value_t = 1729)]
    seed: u64,
    /// Explicit comma-separated block observation; replaces generation.
    #[arg(long)]
    x: Option<String>,
    #[arg(long, default_value = "two_level")]
    family: String,
    #[arg(long, default_value_t = 4000)]
    panels: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Sample(a) => sample(a),
        Command::Verify(a) => verify(a),
        Command::Oracle(a) => oracle(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn write_out(path: &Option<std::path::PathBuf>, text: &str) -> Result<(), String> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| format!("writing {}: {e}", p.display())),
        None => {
            print!("{text}");
            std::io::stdout().flush().map_err(|e| e.to_string())
        }
    }
}

fn simulate(args: SimulateArgs) -> Result<ExitCode, String> {
    let mut spec = ExperimentSpec::default();
    let mut format = args.format;
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("reading config {}: {e}", path.display()))?;
        let file_format = config::apply(&text, &mut spec)?;
        if let Some(f) = file_format {
            format = f;
        }
    }
    if !args.alpha.is_empty() {
        spec.alphas = args.alpha.clone();
    }
    if !args.n.is_empty() {
        spec.ns = args.n.clone();
    }
    if !args.methods.is_empty() {
        spec.methods = args
            .methods
            .iter()
            .map(|s| Method::parse(s))
            .collect::<blockprior::Result<Vec<_>>>()
            .map_err(|e| e.to_string())?;
    }
    if let Some(t) = args.trials {
        spec.trials = TrialRule::Fixed(t);
    }
    if let Some(rule) = &args.adaptive_trials {
        spec.trials = config::parse_adaptive(rule)?;
    }
    if let Some(s) = args.seed {
        spec.master_seed = s;
    }
    if let Some(e) = args.estimator {
        spec.estimator = e.into();
    }
    if let Some(s) = args.sweeps {
        spec.sweeps = s;
    }
    if let Some(b) = args.burn_in {
        spec.burn_in = b;
    }
    if let Some(b) = args.mblock_b {
        spec.mblock_b = b;
    }
    if let Ok(env_seed) = std::env::var("BLOCKPRIOR_SEED") {
        spec.master_seed = env_seed
            .parse()
            .map_err(|_| format!("BLOCKPRIOR_SEED is not a valid u64: '{env_seed}'"))?;
    }
    let table = run_experiment(&spec).map_err(|e| e.to_string())?;
    let table = if args.timings { table } else { table.without_timings() };
    let text = match format {
        FormatArg::Csv => emit_csv(&table),
        FormatArg::Markdown => emit_markdown(&table),
    };
    write_out(&args.out, &text)?;
    let failed = table.cells.iter().filter(|c| c.error.is_some()).count();
    if failed > 0 {
        eprintln!("{failed} cell(s) failed; rows carry NaN");
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn sample(args: SampleArgs) -> Result<ExitCode, String> {
    let method = Method::parse(&args.method).map_err(|e| e.to_string())?;
    let data = trial_dataset(args.seed, args.alpha, args.n, args.trial).map_err(|e| e.to_string())?;
    let prior = match method {
        Method::Block => BlockPriorConfig::block(
            BlockScheme::build(BlockKind::Exponential, args.n).map_err(|e| e.to_string())?,
        ),
        Method::MBlock => BlockPriorConfig::modified(
            BlockScheme::build(BlockKind::Exponential, args.n).map_err(|e| e.to_string())?,
            args.mblock_b,
        ),
        Method::CBlock16 => BlockPriorConfig::block(
            BlockScheme::build(BlockKind::Constant(16), args.n).map_err(|e| e.to_string())?,
        ),
        Method::CBlock32 => BlockPriorConfig::block(
            BlockScheme::build(BlockKind::Constant(32), args.n).map_err(|e| e.to_string())?,
        ),
        other => return Err(format!("sample supports the Gibbs methods, not {other}")),
    };
    let chain = ChainConfig {
        sweeps: args.sweeps,
        burn_in: args.burn_in,
        estimator: Estimator::SingleDraw,
        seed: args.seed,
        stream_id: chain_stream_id(method, args.alpha, args.n, args.trial),
    };
    let file = std::fs::File::create(&args.out)
        .map_err(|e| format!("creating {}: {e}", args.out.display()))?;
    let mut w = std::io::BufWriter::new(file);
    let mut io_err: Option<std::io::Error> = None;
    let mut sink = |sweep: usize, theta: &[f64]| {
        if io_err.is_some() {
            return;
        }
        let mut line = String::with_capacity(theta.len() * 20);
        line.push_str(&sweep.to_string());
        for t in theta {
            line.push(' ');
            line.push_str(&format!("{t}"));
        }
        line.push('\n');
        if let Err(e) = w.write_all(line.as_bytes()) {
            io_err = Some(e);
        }
    };
    let out = run_chain_traced(&data, &prior, &chain, Some(&mut sink)).map_err(|e| e.to_string())?;
    if let Some(e) = io_err {
        return Err(format!("writing draws: {e}"));
    }
    drop(w);
    let d = &out.diagnostics;
    println!(
        "{} retained sweeps written to {}; fallbacks: l1 {}, trunc {}",
        d.retained,
        args.out.display(),
        d.stats.l1_fallbacks,
        d.stats.trunc_fallbacks
    );
    for tr in &d.scale_traces {
        println!("block {}: scale mean {:.3e} min {:.3e} max {:.3e}", tr.k, tr.mean, tr.min, tr.max);
    }
    Ok(ExitCode::SUCCESS)
}

fn verify(args: VerifyArgs) -> Result<ExitCode, String> {
    let level = match args.level.as_str() {
        "quick" => VerifyLevel::Quick,
        "full" => VerifyLevel::Full,
        other => return Err(format!("unknown level '{other}', expected quick or full")),
    };
    let report = verify_suite(level, args.seed).map_err(|e| e.to_string())?;
    for item in &report.items {
        println!(
            "{} [{}] {} — {}",
            if item.pass { "PASS" } else { "FAIL" },
            item.id,
            item.label,
            item.detail
        );
    }
    Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn oracle(args: OracleArgs) -> Result<ExitCode, String> {
    let family = match args.family.as_str() {
        "two_level" => MixingFamily::TwoLevel,
        "piecewise_linear" => MixingFamily::PiecewiseLinear,
        other => return Err(format!("unknown family '{other}'")),
    };
    let x_k: Vec<f64> = match &args.x {
        Some(list) => list
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|e| format!("parsing --x: {e}")))
            .collect::<Result<_, _>>()?,
        None => {
            let spec = SignalSpec::polynomial(args.alpha, args.seed).with_amplitude(args.amplitude);
            let truth = make_truth(&spec, args.n).map_err(|e| e.to_string())?;
            let data = gen_data(&truth, args.n, args.seed, 0xD1).map_err(|e| e.to_string())?;
            let scheme =
                BlockScheme::build(BlockKind::Exponential, args.n).map_err(|e| e.to_string())?;
            if args.k >= scheme.n_blocks() {
                return Err(format!("block {} out of range (scheme has {})", args.k, scheme.n_blocks()));
            }
            data.x[scheme.range0(args.k)].to_vec()
        }
    };
    let oracle = oracle_block_posterior(&x_k, args.k, args.n, family, args.panels)
        .map_err(|e| e.to_string())?;
    println!("block k={} n={} family={} ({} coords)", args.k, args.n, args.family, x_k.len());
    println!("posterior shrinkage E[n/(1/A+n) | X] = {:.10}", oracle.shrink_mean);
    println!("posterior mean per coordinate:");
    for (i, m) in oracle.post_mean.iter().enumerate() {
        println!("  [{i}] {m:.10}");
    }
    // scale-posterior quantiles off the cell masses
    let mut acc = 0.0;
    let mut q = [0.05, 0.25, 0.5, 0.75, 0.95].iter().peekable();
    println!("scale posterior quantiles:");
    for (i, mass) in oracle.cell_mass.iter().enumerate() {
        acc += mass;
        while let Some(&&target) = q.peek() {
            if acc >= target {
                println!("  q{:>2.0} = {:.6e}", target * 100.0, oracle.grid[i + 1]);
                q.next();
            } else {
                break;
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
