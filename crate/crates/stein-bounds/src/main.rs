use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use stein_bounds::cli::{self, exit_code, EXIT_VIOLATION};
use stein_bounds::config::{BoundRequest, RunConfig};
use stein_bounds::error::{Error, Result};
use stein_bounds::report::{emit_report, BoundReport};

/// Closed-form Stein-coupling bounds and their Monte Carlo verification.
#[derive(Parser)]
#[command(name = "stein-bounds", version, about)]
struct CliArgs {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate closed-form bounds on a parameter grid; no simulation
    Bound(BoundArgs),
    /// Simulate a model: moments, tails and the coupling identity
    Simulate(CommonArgs),
    /// Compare bounds with estimates; exits 4 if any verdict is `violated`
    Verify(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// JSON run configuration; flags override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long)]
    batches: Option<u64>,
    /// Write the report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv, json or plotdata
    #[arg(long)]
    format: Option<String>,
    /// Record real wall times (breaks byte-for-byte reproducibility)
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct BoundArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// Theorem id (thm1, thm2, thm3, thm4, h-k, markov, profile-norm,
    /// optimized-markov, cor-bounded, cor-normal, weak-scale,
    /// prop-independent, local-dep-moment, local-dep-tail, size-bias-tail,
    /// er-moment, er-constant, binomial-a, nbhd-norm)
    #[arg(long)]
    theorem: Option<String>,

    #[arg(long = "A")]
    a_norm: Option<f64>,
    #[arg(long = "B")]
    b_norm: Option<f64>,
    #[arg(long = "G")]
    g_norm: Option<f64>,
    #[arg(long = "D")]
    d_norm: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    eps_prime: Option<f64>,
    #[arg(long)]
    eps1: Option<f64>,
    #[arg(long)]
    eps2: Option<f64>,
    #[arg(long)]
    eps3: Option<f64>,
    #[arg(long)]
    eps4: Option<f64>,
    #[arg(long = "T")]
    t_norm: Option<f64>,
    #[arg(long = "T1")]
    t1_norm: Option<f64>,
    #[arg(long = "T2")]
    t2_norm: Option<f64>,
    /// Moment index k; comma-separated values sweep a grid
    #[arg(long)]
    k: Option<String>,
    /// Norm order r; comma-separated values sweep a grid
    #[arg(long)]
    r: Option<String>,
    /// Norm order q for er-moment; comma-separated grid
    #[arg(long)]
    q: Option<String>,
    /// Even order 2k for profile-norm; comma-separated grid
    #[arg(long)]
    two_k: Option<String>,
    /// Norm order ell; comma-separated grid
    #[arg(long)]
    ell: Option<String>,
    /// Tail threshold t; comma-separated grid
    #[arg(long)]
    t: Option<String>,
    /// Standardised threshold y; comma-separated grid
    #[arg(long)]
    y: Option<String>,
    /// Problem size n; comma-separated grid for weak-scale
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    d: Option<u64>,
    #[arg(long)]
    x: Option<f64>,
    #[arg(long)]
    x1: Option<f64>,
    #[arg(long)]
    x2: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    norm: Option<f64>,
    #[arg(long = "E")]
    e_term: Option<f64>,
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    k_max: Option<u64>,
    /// Tail profile for n^{-1}G, e.g. bounded:1 or weibull:1,1,1
    #[arg(long)]
    profile_g: Option<String>,
    /// Tail profile for D
    #[arg(long)]
    profile_d: Option<String>,
    /// Tail profile for profile-norm
    #[arg(long)]
    profile: Option<String>,
}

fn load_config(common: &CommonArgs) -> Result<RunConfig> {
    let mut config = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(samples) = common.samples {
        config.samples = samples;
    }
    if let Some(batches) = common.batches {
        config.batches = batches;
    }
    if let Some(out) = &common.out {
        config.out = Some(out.clone());
    }
    if let Some(format) = &common.format {
        config.format = format.parse()?;
    }
    if common.timing {
        config.timing = true;
    }
    config.validate()?;
    Ok(config)
}

/// Parses a comma-separated numeric list into a JSON scalar or array.
fn grid_value(raw: &str) -> Result<Value> {
    let nums: Vec<f64> = raw
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::config(format!("bad number `{p}` in grid `{raw}`")))
        })
        .collect::<Result<_>>()?;
    if nums.len() == 1 {
        Ok(json!(nums[0]))
    } else {
        Ok(json!(nums))
    }
}

fn bound_request_from_flags(args: &BoundArgs, theorem: &str) -> Result<BoundRequest> {
    let mut params: BTreeMap<String, Value> = BTreeMap::new();
    let mut put = |key: &str, v: Option<Value>| {
        if let Some(v) = v {
            params.insert(key.to_string(), v);
        }
    };
    put("A", args.a_norm.map(|v| json!(v)));
    put("B", args.b_norm.map(|v| json!(v)));
    put("G", args.g_norm.map(|v| json!(v)));
    put("D", args.d_norm.map(|v| json!(v)));
    put("sigma", args.sigma.map(|v| json!(v)));
    put("eps", args.eps.map(|v| json!(v)));
    put("eps_prime", args.eps_prime.map(|v| json!(v)));
    put("eps1", args.eps1.map(|v| json!(v)));
    put("eps2", args.eps2.map(|v| json!(v)));
    put("eps3", args.eps3.map(|v| json!(v)));
    put("eps4", args.eps4.map(|v| json!(v)));
    put("T", args.t_norm.map(|v| json!(v)));
    put("T1", args.t1_norm.map(|v| json!(v)));
    put("T2", args.t2_norm.map(|v| json!(v)));
    put("d", args.d.map(|v| json!(v)));
    put("x", args.x.map(|v| json!(v)));
    put("x1", args.x1.map(|v| json!(v)));
    put("x2", args.x2.map(|v| json!(v)));
    put("mu", args.mu.map(|v| json!(v)));
    put("c", args.c.map(|v| json!(v)));
    put("lambda", args.lambda.map(|v| json!(v)));
    put("beta", args.beta.map(|v| json!(v)));
    put("rho", args.rho.map(|v| json!(v)));
    put("norm", args.norm.map(|v| json!(v)));
    put("E", args.e_term.map(|v| json!(v)));
    put("h", args.h.map(|v| json!(v)));
    put("k_max", args.k_max.map(|v| json!(v)));
    put("profile_g", args.profile_g.as_ref().map(|v| json!(v)));
    put("profile_d", args.profile_d.as_ref().map(|v| json!(v)));
    put("profile", args.profile.as_ref().map(|v| json!(v)));
    for (key, raw) in [
        ("k", &args.k),
        ("r", &args.r),
        ("q", &args.q),
        ("two_k", &args.two_k),
        ("ell", &args.ell),
        ("t", &args.t),
        ("y", &args.y),
        ("n", &args.n),
    ] {
        if let Some(raw) = raw {
            params.insert(key.to_string(), grid_value(raw)?);
        }
    }
    Ok(BoundRequest {
        theorem: theorem.to_string(),
        params,
    })
}

fn write_output(report: &BoundReport, config: &RunConfig) -> Result<()> {
    let bytes = emit_report(report, config.format)?;
    match &config.out {
        Some(path) => std::fs::write(path, bytes)?,
        None => std::io::stdout().write_all(&bytes)?,
    }
    Ok(())
}

fn run() -> Result<i32> {
    let cli = CliArgs::parse();
    match cli.command {
        Command::Bound(args) => {
            let mut config = load_config(&args.common)?;
            if let Some(theorem) = &args.theorem {
                config.bounds.push(bound_request_from_flags(&args, theorem)?);
            }
            let report = cli::cmd_bound(&config)?;
            write_output(&report, &config)?;
            Ok(0)
        }
        Command::Simulate(common) => {
            let config = load_config(&common)?;
            let report = cli::cmd_simulate(&config)?;
            write_output(&report, &config)?;
            Ok(0)
        }
        Command::Verify(common) => {
            let config = load_config(&common)?;
            let report = cli::cmd_verify(&config)?;
            write_output(&report, &config)?;
            Ok(if report.any_violated() { EXIT_VIOLATION } else { 0 })
        }
    }
}

fn main() {
    match run() {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(exit_code(&err));
        }
    }
}
