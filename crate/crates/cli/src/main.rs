use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use logagg::adversarial::{
    example1, extreme_lemma_oracle, near_extremal_structure, proposition1_instance_scaled, regret_floor,
    regret_floor_sampled, MAX_ENUMERATED_PROFILES,
};
use logagg::harness::{fmt12, read_matrix, run, sweep, EnvironmentSpec};
use logagg::spectral::{bernoulli_sigma_ratios, SpectralReport};
use logagg::{AggregatorKind, RunConfig};

#[derive(Parser)]
#[command(name = "logagg", version, about = "Online aggregation of partially informed forecasts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one aggregator for T rounds and write the regret trace as CSV.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output CSV (overrides `out` in the config; default stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides `seed` in the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Mean regret over seeds for several horizons.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated horizons, e.g. 1000,10000,100000.
        #[arg(long = "T", value_delimiter = ',', required = true)]
        horizons: Vec<u64>,
        /// Number of seeds, starting at the config's seed.
        #[arg(long, default_value_t = 20)]
        seeds: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Regret floor of the two-expert, three-signal example, plus simulated regret.
    Example1 {
        #[arg(long = "T", default_value_t = 10_000)]
        horizon: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Kernel-vector counterexample for a non-injective matrix.
    Prop1 {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long = "T", default_value_t = 10_000)]
        horizon: u64,
        /// Kernel scale c (largest |c z_j| must stay <= 2).
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        /// sigma handed to the dynamic learner (the matrix has sigma_min = 0).
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Brute-force check of the extreme-forecast bounds on random structures.
    VerifyLemmas {
        /// Comma-separated expert counts.
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        n: Vec<usize>,
        /// Comma-separated thresholds.
        #[arg(long, value_delimiter = ',', default_value = "0.01,0.05,0.1")]
        alpha: Vec<f64>,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Singular values, h* and kernel diagnostics of an evidence matrix.
    Spectral {
        #[arg(long)]
        matrix: PathBuf,
    },
    /// Distribution of sigma_min / sqrt(n) for random n x n/2 Bernoulli matrices.
    SigmaProfile {
        #[arg(long, value_delimiter = ',', default_value = "16,32,64")]
        n: Vec<usize>,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    match execute(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let chain: Vec<String> = e.chain().map(ToString::to_string).collect();
            eprintln!("error: {}", chain.join(": "));
            ExitCode::FAILURE
        }
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Simulate { config, out, seed } => simulate(&config, out, seed),
        Command::Sweep {
            config,
            horizons,
            seeds,
            out,
        } => run_sweep(&config, &horizons, seeds, out.as_deref()),
        Command::Example1 { horizon, seed } => run_example1(horizon, seed),
        Command::Prop1 {
            matrix,
            horizon,
            scale,
            sigma,
            seed,
        } => run_prop1(&matrix, horizon, scale, sigma, seed),
        Command::VerifyLemmas { n, alpha, trials, seed } => verify_lemmas(&n, &alpha, trials, seed),
        Command::Spectral { matrix } => {
            let a = read_matrix(&matrix)?;
            print!("{}", SpectralReport::of(a.dense()));
            Ok(())
        }
        Command::SigmaProfile { n, samples, seed } => sigma_profile(&n, samples, seed),
    }
}

fn simulate(path: &Path, out: Option<PathBuf>, seed: Option<u64>) -> Result<()> {
    let mut config = RunConfig::from_file(path)?;
    if let Some(s) = seed {
        config.seed = s;
    }
    if out.is_some() {
        config.out = out;
    }
    let trace = run(&config)?;
    let target = config.out.clone();
    let mut w = output(target.as_deref())?;
    trace.write_csv(&mut w)?;
    w.flush()?;
    if let Some(p) = target {
        let s = &trace.summary;
        println!(
            "{}: T = {}, total expected regret = {}, per round = {} -> {}",
            s.aggregator,
            s.horizon,
            fmt12(s.total_expected_regret),
            fmt12(s.mean_expected_regret()),
            p.display()
        );
    }
    Ok(())
}

fn run_sweep(path: &Path, horizons: &[u64], seeds: u64, out: Option<&Path>) -> Result<()> {
    if seeds == 0 {
        bail!("--seeds must be at least 1");
    }
    let config = RunConfig::from_file(path)?;
    let result = sweep(&config, horizons, seeds)?;
    let mut w = output(out)?;
    result.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

fn mean_regret(env: EnvironmentSpec, kind: AggregatorKind, horizon: u64, seed: u64, sigma: f64) -> Result<f64> {
    let mut config = RunConfig::new(env, kind, horizon, seed);
    config.sigma = Some(sigma);
    Ok(logagg::harness::run_summary(&config)?.mean_expected_regret())
}

fn run_example1(horizon: u64, seed: u64) -> Result<()> {
    let floor = regret_floor(&example1())?;
    println!("regret_floor = {}", fmt12(floor));
    for kind in AggregatorKind::ALL {
        let r = mean_regret(EnvironmentSpec::Example1, kind, horizon, seed, 1.0)?;
        println!("{kind}: mean regret per round over T = {horizon}: {}", fmt12(r));
    }
    Ok(())
}

fn run_prop1(path: &Path, horizon: u64, scale: f64, sigma: f64, seed: u64) -> Result<()> {
    let evidence = read_matrix(path)?;
    let Some(inst) = proposition1_instance_scaled(&evidence, scale)? else {
        if evidence.is_injective() {
            bail!("matrix is injective; no counterexample exists");
        }
        bail!("kernel lies in the zero-sum subspace; no counterexample is constructed");
    };
    let kernel: Vec<String> = inst.kernel.iter().map(|z| fmt12(*z)).collect();
    println!("kernel_vector = {}", kernel.join(", "));
    println!("scale = {}", fmt12(scale));
    let (floor, how) = if inst.structure.profile_count() <= MAX_ENUMERATED_PROFILES {
        (regret_floor(&inst.structure)?, "exact")
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (regret_floor_sampled(&inst.structure, 1_000_000, &mut rng), "sampled")
    };
    println!("regret_floor = {} ({how})", fmt12(floor));
    let env = EnvironmentSpec::Proposition1 { evidence, scale };
    let r = mean_regret(env, AggregatorKind::Dynamic, horizon, seed, sigma)?;
    println!("dynamic: mean regret per round over T = {horizon}: {}", fmt12(r));
    Ok(())
}

fn verify_lemmas(ns: &[usize], alphas: &[f64], trials: u64, seed: u64) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0;
    println!("n,alpha,trials,low_events,high_events,violations,worst_low_ratio,worst_high_ratio,worst_both_ratio,near_extremal_ratio");
    for &n in ns {
        for &alpha in alphas {
            let check = extreme_lemma_oracle(n, alpha, trials, &mut rng)?;
            let near = near_extremal_structure(n, alpha)?;
            let bound = n as f64 * alpha / ((1.0 - alpha) + n as f64 * alpha);
            let attained = near.prob_one_given_low(alpha).unwrap_or(0.0) / bound;
            println!(
                "{n},{alpha},{},{},{},{},{},{},{},{}",
                check.trials,
                check.low_events,
                check.high_events,
                check.violations(),
                fmt12(check.worst_low_ratio),
                fmt12(check.worst_high_ratio),
                fmt12(check.worst_both_ratio),
                fmt12(attained)
            );
            total += check.violations();
        }
    }
    if total > 0 {
        bail!("{total} lemma violations");
    }
    Ok(())
}

fn sigma_profile(ns: &[usize], samples: usize, seed: u64) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    println!("n,m,samples,min,p10,median,p90,max");
    for &n in ns {
        let m = n / 2;
        if m == 0 {
            bail!("n must be at least 2");
        }
        let mut ratios = bernoulli_sigma_ratios(n, m, samples, &mut rng);
        if ratios.is_empty() {
            bail!("--samples must be at least 1");
        }
        ratios.sort_by(f64::total_cmp);
        let q = |p: f64| ratios[((ratios.len() - 1) as f64 * p).round() as usize];
        println!(
            "{n},{m},{samples},{},{},{},{},{}",
            fmt12(q(0.0)),
            fmt12(q(0.1)),
            fmt12(q(0.5)),
            fmt12(q(0.9)),
            fmt12(q(1.0))
        );
    }
    Ok(())
}
