//! Regret sweeps over a grid of horizons and seeds.

use std::io::{self, Write};

use rayon::prelude::*;

use super::config::RunConfig;
use super::numfmt::fmt12;
use super::run::{run_summary, RunSummary};
use crate::error::{Error, Result};

/// Aggregate over seeds at one horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub horizon: u64,
    pub runs: usize,
    pub mean_regret: f64,
    pub stderr_regret: f64,
    /// `mean_regret / sqrt(T)`.
    pub ratio_sqrt: f64,
    pub stderr_ratio_sqrt: f64,
    /// `mean_regret / (n sqrt(T) ln(T) / sigma)`.
    pub ratio_bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// Every run, ordered by horizon then seed.
    pub runs: Vec<RunSummary>,
}

pub const SWEEP_HEADER: &str = "T,runs,mean_regret,stderr_regret,regret_over_sqrt_T,stderr_over_sqrt_T,regret_over_bound";

impl SweepResult {
    pub fn row(&self, horizon: u64) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.horizon == horizon)
    }

    pub fn runs_at(&self, horizon: u64) -> impl Iterator<Item = &RunSummary> {
        self.runs.iter().filter(move |r| r.horizon == horizon)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{SWEEP_HEADER}")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                r.horizon,
                r.runs,
                fmt12(r.mean_regret),
                fmt12(r.stderr_regret),
                fmt12(r.ratio_sqrt),
                fmt12(r.stderr_ratio_sqrt),
                fmt12(r.ratio_bound)
            )?;
        }
        Ok(())
    }
}

/// Mean and standard error of the mean.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let k = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / k;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

/// Runs `base` at every horizon for seeds `base.seed .. base.seed + seeds`.
///
/// Runs execute in parallel; results are ordered by (horizon, seed), so the
/// output does not depend on scheduling.
pub fn sweep(base: &RunConfig, horizons: &[u64], seeds: u64) -> Result<SweepResult> {
    if horizons.len() < 2 {
        return Err(Error::Usage("a sweep needs at least two horizons".into()));
    }
    if seeds == 0 {
        return Err(Error::Usage("a sweep needs at least one seed".into()));
    }
    let jobs: Vec<RunConfig> = horizons
        .iter()
        .flat_map(|&horizon| {
            (0..seeds).map(move |k| {
                let mut c = base.clone();
                c.horizon = horizon;
                c.seed = base.seed + k;
                c.out = None;
                c
            })
        })
        .collect();
    let runs = jobs
        .par_iter()
        .map(run_summary)
        .collect::<Result<Vec<_>>>()?;
    let rows = horizons
        .iter()
        .map(|&horizon| {
            let at: Vec<&RunSummary> = runs.iter().filter(|r| r.horizon == horizon).collect();
            let totals: Vec<f64> = at.iter().map(|r| r.total_expected_regret).collect();
            let (mean, se) = mean_stderr(&totals);
            let t = horizon as f64;
            let (n, sigma) = (at[0].n as f64, at[0].sigma);
            SweepRow {
                horizon,
                runs: at.len(),
                mean_regret: mean,
                stderr_regret: se,
                ratio_sqrt: mean / t.sqrt(),
                stderr_ratio_sqrt: se / t.sqrt(),
                ratio_bound: mean / (n * t.sqrt() * t.ln().max(1.0) / sigma),
            }
        })
        .collect();
    Ok(SweepResult { rows, runs })
}
