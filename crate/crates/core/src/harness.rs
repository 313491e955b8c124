//! Replicated runs, (γ, σ) sweeps and paired-γ experiments.
//!
//! Replications are independent given their run index and may be executed on
//! a rayon pool. Results are always collected in run-index order before any
//! aggregation, so parallel and sequential execution produce identical output.

use rayon::prelude::*;

use crate::engine::{
    realize, run, run_with_options, run_with_preferences, simulate, RunOptions, RunResult,
};
use crate::error::{Error, Result};
use crate::metrics::{pooled_slope, MetricsReport};
use crate::model::{check_gamma, ModelConfig, PreferenceMatrix};
use crate::rng::run_seed;

/// Default replication count.
pub const DEFAULT_REPLICATIONS: usize = 100;

/// Default γ grid step and σ series for sweeps.
pub const DEFAULT_GAMMA_STEP: f64 = 0.05;
pub const DEFAULT_SIGMAS: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 4.0];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Execution {
    #[default]
    Parallel,
    Sequential,
}

/// Runs `f(i)` for `i in 0..count`, returning results in index order.
fn collect_indexed<T, F>(count: usize, exec: Execution, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    let wrap = |i: usize| {
        f(i as u64).map_err(|e| Error::Run {
            run_index: i as u64,
            source: Box::new(e),
        })
    };
    match exec {
        Execution::Parallel => (0..count).into_par_iter().map(wrap).collect(),
        Execution::Sequential => (0..count).map(wrap).collect(),
    }
}

/// Mean and sample standard deviation (n − 1 denominator; 0 for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// Aggregated metrics of one (γ, σ) setting over R replications.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub config: ModelConfig,
    pub replications: usize,
    pub i_mean: f64,
    pub i_std: f64,
    pub q_mean: f64,
    pub q_std: f64,
    /// Mean of per-run OLS slopes.
    pub slope_mean: f64,
    pub slope_std: f64,
    /// One OLS fit over the pooled (quality, share) points of all runs.
    pub slope_pooled: f64,
}

impl SweepCell {
    pub fn gamma(&self) -> f64 {
        self.config.social_pressure
    }

    pub fn sigma(&self) -> f64 {
        self.config.intra_item_deviation
    }

    /// Standard error of `q_mean`.
    pub fn q_stderr(&self) -> f64 {
        self.q_std / (self.replications as f64).sqrt()
    }

    pub fn aggregate(config: &ModelConfig, reports: &[MetricsReport]) -> Self {
        let ineq: Vec<f64> = reports.iter().map(|r| r.inequality).collect();
        let quart: Vec<f64> = reports.iter().filter_map(|r| r.quartile_diff).collect();
        let slopes: Vec<f64> = reports.iter().filter_map(|r| r.slope).collect();
        let (i_mean, i_std) = mean_std(&ineq);
        let (q_mean, q_std) = mean_std(&quart);
        let (slope_mean, slope_std) = mean_std(&slopes);
        SweepCell {
            config: config.clone(),
            replications: reports.len(),
            i_mean,
            i_std,
            q_mean,
            q_std,
            slope_mean,
            slope_std,
            slope_pooled: pooled_slope(reports).map_or(f64::NAN, |(m, _)| m),
        }
    }
}

/// One replication's metrics with its seed.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub run_index: u64,
    pub run_seed: u64,
    pub report: MetricsReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Replicated {
    pub cell: SweepCell,
    pub runs: Vec<RunRecord>,
}

/// Runs indices `0..replications` and aggregates their metrics.
pub fn run_replicated(config: &ModelConfig, replications: usize, exec: Execution) -> Result<Replicated> {
    if replications == 0 {
        return Err(Error::InvalidConfig("replications must be at least 1".into()));
    }
    config.validate()?;
    replicate(config, replications, exec, |i| run(config, i))
}

/// [`run_replicated`] with one externally supplied preference matrix shared by all runs.
pub fn run_replicated_with_preferences(
    config: &ModelConfig,
    prefs: &PreferenceMatrix,
    replications: usize,
    exec: Execution,
) -> Result<Replicated> {
    if replications == 0 {
        return Err(Error::InvalidConfig("replications must be at least 1".into()));
    }
    let config = ModelConfig {
        n_agents: prefs.n_agents(),
        n_items: prefs.n_items(),
        ..config.clone()
    };
    config.validate()?;
    replicate(&config, replications, exec, |i| {
        run_with_preferences(&config, prefs, i, RunOptions::default())
    })
}

fn replicate<F>(config: &ModelConfig, replications: usize, exec: Execution, runner: F) -> Result<Replicated>
where
    F: Fn(u64) -> Result<RunResult> + Sync + Send,
{
    let runs = collect_indexed(replications, exec, |i| {
        let result = runner(i)?;
        Ok(RunRecord {
            run_index: i,
            run_seed: result.run_seed,
            report: MetricsReport::from_run(&result)?,
        })
    })?;
    let reports: Vec<MetricsReport> = runs.iter().map(|r| r.report.clone()).collect();
    Ok(Replicated {
        cell: SweepCell::aggregate(config, &reports),
        runs,
    })
}

/// Full run results for indices `0..replications`, in index order.
pub fn run_all(
    config: &ModelConfig,
    replications: usize,
    options: RunOptions,
    exec: Execution,
) -> Result<Vec<RunResult>> {
    config.validate()?;
    collect_indexed(replications, exec, |i| run_with_options(config, i, options))
}

/// A (γ, σ) grid over a base configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub gamma_values: Vec<f64>,
    pub sigma_values: Vec<f64>,
    pub replications: usize,
    pub base_config: ModelConfig,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        check_increasing("gamma", &self.gamma_values)?;
        check_increasing("sigma", &self.sigma_values)?;
        for &g in &self.gamma_values {
            check_gamma(g)?;
        }
        if let Some(s) = self.sigma_values.iter().find(|&&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::InvalidConfig(format!("sweep sigma values must be positive, got {s}")));
        }
        if self.replications == 0 {
            return Err(Error::InvalidConfig("replications must be at least 1".into()));
        }
        self.base_config.validate()
    }

    /// Cell configurations, σ-major then ascending γ.
    pub fn cells(&self) -> Vec<ModelConfig> {
        self.sigma_values
            .iter()
            .flat_map(|&s| {
                self.gamma_values
                    .iter()
                    .map(move |&g| self.base_config.with_sigma(s).with_gamma(g))
            })
            .collect()
    }
}

fn check_increasing(name: &str, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::InvalidConfig(format!("{name} list is empty")));
    }
    if values.windows(2).any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less)) {
        return Err(Error::InvalidConfig(format!(
            "{name} values must be strictly increasing"
        )));
    }
    Ok(())
}

/// One [`SweepCell`] per grid point, in [`SweepSpec::cells`] order.
///
/// Every cell uses the same master seed, so cells differing only in γ see the
/// same graphs and preference draws.
pub fn run_sweep(spec: &SweepSpec, exec: Execution) -> Result<Vec<SweepCell>> {
    spec.validate()?;
    let configs = spec.cells();
    let cell = |c: &ModelConfig| run_replicated(c, spec.replications, exec).map(|r| r.cell);
    match exec {
        Execution::Parallel => configs.par_iter().map(cell).collect(),
        Execution::Sequential => configs.iter().map(cell).collect(),
    }
}

/// Per-run paired results: same graph and preferences, one share vector per γ.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedRun {
    pub run_index: u64,
    pub run_seed: u64,
    pub qualities: Vec<f64>,
    /// `reports[g]` holds the metrics under `gammas[g]`.
    pub reports: Vec<MetricsReport>,
}

impl PairedRun {
    pub fn shares(&self, gamma_slot: usize) -> &[f64] {
        &self.reports[gamma_slot].shares
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairedTable {
    pub gammas: Vec<f64>,
    pub runs: Vec<PairedRun>,
    /// Aggregates per γ, in `gammas` order.
    pub summaries: Vec<SweepCell>,
}

/// Paired replications: run `i` shares its graph and preference matrix across all γ.
pub fn run_paired_experiment(
    config: &ModelConfig,
    gammas: &[f64],
    replications: usize,
    exec: Execution,
) -> Result<PairedTable> {
    if gammas.is_empty() {
        return Err(Error::InvalidConfig("paired experiment needs at least one gamma".into()));
    }
    for &g in gammas {
        check_gamma(g)?;
    }
    if replications == 0 {
        return Err(Error::InvalidConfig("replications must be at least 1".into()));
    }
    config.validate()?;
    let runs = collect_indexed(replications, exec, |i| {
        let (graph, prefs) = realize(config, i)?;
        let reports = gammas
            .iter()
            .map(|&g| {
                let result = simulate(&config.with_gamma(g), &graph, &prefs, i, RunOptions::default())?;
                MetricsReport::from_run(&result)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PairedRun {
            run_index: i,
            run_seed: run_seed(config.master_seed, i),
            qualities: reports[0].qualities.clone(),
            reports,
        })
    })?;
    let summaries = gammas
        .iter()
        .enumerate()
        .map(|(slot, &g)| {
            let reports: Vec<MetricsReport> = runs.iter().map(|r| r.reports[slot].clone()).collect();
            SweepCell::aggregate(&config.with_gamma(g), &reports)
        })
        .collect();
    Ok(PairedTable {
        gammas: gammas.to_vec(),
        runs,
        summaries,
    })
}

/// Parses `start:stop:step` (stop included within half a step) or a comma list.
///
/// Range points are `start + i·step` rounded to 12 decimals so that, e.g.,
/// 0.35 prints as 0.35.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let bad = |what: &str| Error::InvalidConfig(format!("bad value list {text:?}: {what}"));
    let parse = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(&format!("{s:?} is not a number")));
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step) = (parse(start)?, parse(stop)?, parse(step)?);
            if !(step > 0.0 && step.is_finite()) {
                return Err(bad("step must be positive"));
            }
            if !(start.is_finite() && stop.is_finite()) || stop < start {
                return Err(bad("stop must not be below start"));
            }
            let count = ((stop - start) / step + 0.5).floor() as usize + 1;
            Ok((0..count)
                .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
                .collect())
        }
        [_] => text.split(',').map(parse).collect(),
        _ => Err(bad("expected start:stop:step or a comma-separated list")),
    }
}
