//! Running one aggregator against one environment and recording regret.

use std::io::{self, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::RunConfig;
use super::environment::Environment;
use super::numfmt::fmt12;
use crate::aggregators::{AggregatorConfig, Diagnostics, Observation, PriorMode};
use crate::error::{Error, Result};
use crate::loglik::{expected_regret, realized_log_loss};

/// Header of the trace CSV.
pub const CSV_HEADER: &str =
    "t,forecast,omega,realized_loss,optimal_realized_loss,expected_regret,cum_expected_regret";

/// Stream ids used to split the seeded generator.
const ROUND_STREAM: u64 = 0;
const ENV_STREAM: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub t: u64,
    pub forecast: f64,
    pub omega: bool,
    pub realized_loss: f64,
    pub optimal_realized_loss: f64,
    pub expected_regret: f64,
    pub cum_expected_regret: f64,
}

/// Totals and metadata of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub seed: u64,
    pub horizon: u64,
    pub aggregator: &'static str,
    pub n: usize,
    pub sigma: f64,
    /// `sigma` was filled in from the true matrix.
    pub sigma_from_oracle: bool,
    pub true_sigma_min: f64,
    pub total_expected_regret: f64,
    pub total_realized_regret: f64,
    pub diagnostics: Diagnostics,
    /// Oracle reads made while the aggregator was running (must be 0).
    pub oracle_reads_by_aggregator: u64,
    pub config_hash: String,
}

impl RunSummary {
    pub fn mean_expected_regret(&self) -> f64 {
        self.total_expected_regret / self.horizon as f64
    }
}

/// Per-round records plus the run summary.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretTrace {
    pub rows: Vec<TraceRow>,
    pub summary: RunSummary,
}

impl RegretTrace {
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                r.t,
                fmt12(r.forecast),
                u8::from(r.omega),
                fmt12(r.realized_loss),
                fmt12(r.optimal_realized_loss),
                fmt12(r.expected_regret),
                fmt12(r.cum_expected_regret)
            )?;
        }
        let s = &self.summary;
        let d = &s.diagnostics;
        writeln!(w, "# aggregator = {}", s.aggregator)?;
        writeln!(w, "# T = {}", s.horizon)?;
        writeln!(w, "# seed = {}", s.seed)?;
        writeln!(w, "# config_hash = {}", s.config_hash)?;
        writeln!(w, "# total_expected_regret = {}", fmt12(s.total_expected_regret))?;
        writeln!(w, "# total_realized_regret = {}", fmt12(s.total_realized_regret))?;
        writeln!(w, "# extreme_rounds = {}", d.extreme_rounds)?;
        writeln!(w, "# non_extreme_rounds = {}", d.non_extreme_rounds)?;
        writeln!(w, "# clipped_gradients = {}", d.clipped_gradients)?;
        writeln!(w, "# prior_clamps = {}", d.prior_clamps)?;
        if let Some(mu) = d.estimated_prior {
            writeln!(w, "# estimated_prior = {}", fmt12(mu))?;
        }
        writeln!(
            w,
            "# sigma = {}{}",
            fmt12(s.sigma),
            if s.sigma_from_oracle { " (from true matrix)" } else { "" }
        )?;
        writeln!(w, "# oracle_reads_by_aggregator = {}", s.oracle_reads_by_aggregator)?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }
}

/// Builds the environment and aggregator a config describes.
pub fn prepare(config: &RunConfig) -> Result<(Environment, AggregatorConfig, bool)> {
    let mut env_rng = ChaCha8Rng::seed_from_u64(config.env_seed());
    env_rng.set_stream(ENV_STREAM);
    let env = Environment::build(&config.environment, &mut env_rng)?;
    let (sigma, from_oracle) = match config.sigma {
        Some(s) => (s, false),
        None => {
            let s = env.sigma_min();
            if s <= crate::spectral::INJECTIVITY_TOL && !config.aggregator.learns() {
                // baselines ignore sigma
                (1.0, false)
            } else if s <= crate::spectral::INJECTIVITY_TOL {
                return Err(Error::Config(
                    "evidence matrix is not injective; set `sigma` explicitly".into(),
                ));
            } else {
                (s, true)
            }
        }
    };
    let agg_config = AggregatorConfig {
        n: env.n(),
        horizon: config.horizon,
        sigma,
        beta: config.beta,
        doubling: config.doubling,
    };
    Ok((env, agg_config, from_oracle))
}

/// Runs the configured aggregator for exactly `T` rounds.
pub fn run(config: &RunConfig) -> Result<RegretTrace> {
    run_inner(config, true)
}

/// Like [`run`] but keeps only the summary (constant memory).
pub fn run_summary(config: &RunConfig) -> Result<RunSummary> {
    run_inner(config, false).map(|t| t.summary)
}

fn run_inner(config: &RunConfig, keep_rows: bool) -> Result<RegretTrace> {
    if config.horizon == 0 {
        return Err(Error::Config("`T` must be at least 1".into()));
    }
    let (env, agg_config, sigma_from_oracle) = prepare(config)?;
    if config.aggregator.learns() {
        agg_config.validate()?;
    }
    let mut aggregator = config.aggregator.build(&agg_config)?;
    let aware = aggregator.prior_mode() == PriorMode::Aware;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(ROUND_STREAM);
    let mut rows = Vec::with_capacity(if keep_rows { config.horizon as usize } else { 0 });
    let mut cum = 0.0;
    let mut realized_total = 0.0;
    let mut leaked = 0;
    for t in 1..=config.horizon {
        let round = env.next_round(&mut rng);
        let before = round.oracle.reads();
        let obs = Observation {
            forecasts: &round.forecasts,
            prior: aware.then_some(round.prior),
        };
        let forecast = aggregator.forecast(&obs)?;
        let after_forecast = round.oracle.reads();
        // the state is revealed only after the forecast is fixed
        let omega = round.oracle.omega();
        let before_update = round.oracle.reads();
        aggregator.update(omega)?;
        leaked += (after_forecast - before) + (round.oracle.reads() - before_update);

        let r_star = round.oracle.r_star();
        let regret = expected_regret(forecast, r_star);
        let realized = realized_log_loss(forecast, omega);
        let optimal = realized_log_loss(r_star, omega);
        cum += regret;
        realized_total += realized - optimal;
        if keep_rows {
            rows.push(TraceRow {
                t,
                forecast,
                omega,
                realized_loss: realized,
                optimal_realized_loss: optimal,
                expected_regret: regret,
                cum_expected_regret: cum,
            });
        }
    }
    if config.audit && leaked > 0 {
        return Err(Error::Usage(format!("aggregator path read oracle data {leaked} times")));
    }
    Ok(RegretTrace {
        rows,
        summary: RunSummary {
            seed: config.seed,
            horizon: config.horizon,
            aggregator: aggregator.name(),
            n: agg_config.n,
            sigma: agg_config.sigma,
            sigma_from_oracle,
            true_sigma_min: env.sigma_min(),
            total_expected_regret: cum,
            total_realized_regret: realized_total,
            diagnostics: aggregator.diagnostics(),
            oracle_reads_by_aggregator: leaked,
            config_hash: config.hash(),
        },
    })
}
