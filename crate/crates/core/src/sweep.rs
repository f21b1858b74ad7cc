//! Policy × seed sweeps and their per-round aggregates.
//!
//! Runs are independent, so with the `parallel` feature they are spread over
//! the rayon pool. Results always come back in job order.

use serde::Serialize;

use crate::baselines::PolicyKind;
use crate::model::mean;
use crate::scenario::Scenario;
use crate::sim::{run, RoundRecord, SimError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Job {
    pub policy: PolicyKind,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub policy: PolicyKind,
    pub seed: u64,
    pub records: Vec<RoundRecord>,
}

/// Cartesian product, policy-major.
pub fn jobs(policies: &[PolicyKind], seeds: &[u64]) -> Vec<Job> {
    policies
        .iter()
        .flat_map(|&policy| seeds.iter().map(move |&seed| Job { policy, seed }))
        .collect()
}

fn run_job(scenario: &Scenario, job: &Job) -> Result<RunResult, SimError> {
    Ok(RunResult {
        policy: job.policy,
        seed: job.seed,
        records: run(scenario, job.policy, job.seed)?,
    })
}

pub fn run_sequential(scenario: &Scenario, jobs: &[Job]) -> Result<Vec<RunResult>, SimError> {
    jobs.iter().map(|j| run_job(scenario, j)).collect()
}

#[cfg(feature = "parallel")]
pub fn run_parallel(scenario: &Scenario, jobs: &[Job]) -> Result<Vec<RunResult>, SimError> {
    use rayon::prelude::*;
    jobs.par_iter().map(|j| run_job(scenario, j)).collect()
}

pub fn run_jobs(scenario: &Scenario, jobs: &[Job]) -> Result<Vec<RunResult>, SimError> {
    #[cfg(feature = "parallel")]
    {
        run_parallel(scenario, jobs)
    }
    #[cfg(not(feature = "parallel"))]
    {
        run_sequential(scenario, jobs)
    }
}

/// Population standard deviation; 0 for fewer than two values.
pub fn spread(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / values.len() as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    pub round: u32,
    pub d_mean: f64,
    pub d_sd: f64,
    pub delay_mean: f64,
    pub delay_sd: f64,
    pub cum_cost_mean: f64,
    pub cum_cost_sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicySummary {
    pub policy: PolicyKind,
    pub runs: usize,
    pub final_d_mean: f64,
    pub final_d_sd: f64,
    /// Mean over seeds of each run's round-averaged delay.
    pub mean_delay: f64,
    pub mean_delay_sd: f64,
    pub cumulative_cost_mean: f64,
    pub cumulative_cost_sd: f64,
    pub migrated_switches_mean: f64,
}

/// Per-round mean and spread across every run of `policy`.
pub fn aggregate_series(results: &[RunResult], policy: PolicyKind) -> Vec<AggregateRow> {
    let runs: Vec<&RunResult> = results.iter().filter(|r| r.policy == policy).collect();
    let Some(first) = runs.first() else {
        return Vec::new();
    };
    (0..first.records.len())
        .map(|i| {
            let col = |f: fn(&RoundRecord) -> f64| -> Vec<f64> {
                runs.iter().map(|r| f(&r.records[i])).collect()
            };
            let d = col(|r| r.d);
            let delay = col(|r| r.mean_delay);
            let cost = col(|r| r.cumulative_cost);
            AggregateRow {
                round: first.records[i].round,
                d_mean: mean(&d),
                d_sd: spread(&d),
                delay_mean: mean(&delay),
                delay_sd: spread(&delay),
                cum_cost_mean: mean(&cost),
                cum_cost_sd: spread(&cost),
            }
        })
        .collect()
}

pub fn run_mean_delay(records: &[RoundRecord]) -> f64 {
    mean(&records.iter().map(|r| r.mean_delay).collect::<Vec<_>>())
}

pub fn summarize(results: &[RunResult], policy: PolicyKind) -> Option<PolicySummary> {
    let runs: Vec<&RunResult> = results.iter().filter(|r| r.policy == policy).collect();
    if runs.is_empty() {
        return None;
    }
    let last = |f: fn(&RoundRecord) -> f64| -> Vec<f64> {
        runs.iter()
            .map(|r| r.records.last().map_or(0.0, f))
            .collect()
    };
    let final_d = last(|r| r.d);
    let cost = last(|r| r.cumulative_cost);
    let delay: Vec<f64> = runs.iter().map(|r| run_mean_delay(&r.records)).collect();
    let migrated: Vec<f64> = runs
        .iter()
        .map(|r| {
            r.records
                .iter()
                .map(|x| x.migrated_switches())
                .sum::<usize>() as f64
        })
        .collect();
    Some(PolicySummary {
        policy,
        runs: runs.len(),
        final_d_mean: mean(&final_d),
        final_d_sd: spread(&final_d),
        mean_delay: mean(&delay),
        mean_delay_sd: spread(&delay),
        cumulative_cost_mean: mean(&cost),
        cumulative_cost_sd: spread(&cost),
        migrated_switches_mean: mean(&migrated),
    })
}

/// Percentage by which `ours` lowers `theirs`; positive means lower delay.
pub fn relative_reduction(ours: f64, theirs: f64) -> Option<f64> {
    (theirs != 0.0).then(|| (theirs - ours) / theirs * 100.0)
}
