//! Command-line front end: `run`, `compare` and `validate`.
//!
//! Output files are rendered in memory and only written once every run has
//! finished, so a failing invocation leaves no partial results behind.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage, 3 invalid scenario,
//! 4 I/O failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;
use serde::Serialize;
use thiserror::Error;

use crate::baselines::PolicyKind;
use crate::model::ControllerId;
use crate::scenario::{load_scenario, Scenario, ScenarioError};
use crate::sim::{run, RoundRecord, SimError};
use crate::sweep::{
    aggregate_series, jobs, relative_reduction, run_jobs, run_mean_delay, summarize, AggregateRow,
    PolicySummary,
};

pub const EXIT_RUNTIME: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_VALIDATION: u8 = 3;
pub const EXIT_IO: u8 = 4;

pub const METRICS_FILE: &str = "metrics.csv";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Parser)]
#[command(
    name = "sdn-lbm",
    version,
    about = "Multi-controller SDN switch-migration simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one policy with one seed.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_parser = parse_policy)]
        policy: PolicyKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every policy × seed and write per-policy aggregate series.
    Compare {
        #[arg(long)]
        scenario: PathBuf,
        /// Comma-separated, e.g. `rl-lbm,dc-lbm,mmo-lbm,none`.
        #[arg(long, value_parser = policy_list, default_value = "rl-lbm,dc-lbm,mmo-lbm,none")]
        policies: PolicyList,
        /// `a..b` (exclusive), `a..=b`, or a comma-separated list.
        #[arg(long, value_parser = seed_list, default_value = "1..=20")]
        seeds: SeedList,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a scenario file and report the first problem.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyList(pub Vec<PolicyKind>);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedList(pub Vec<u64>);

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Scenario(ScenarioError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Sim(SimError),
    #[error("{0}")]
    Usage(String),
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Io { path, source } => Self::Io { path, source },
            other => Self::Scenario(other),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Scenario(s) => s.into(),
            other => Self::Sim(other),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Scenario(_) => EXIT_VALIDATION,
            Self::Io { .. } => EXIT_IO,
            Self::Sim(_) => EXIT_RUNTIME,
            Self::Usage(_) => EXIT_USAGE,
        }
    }
}

fn parse_policy(s: &str) -> Result<PolicyKind, String> {
    s.parse()
}

fn policy_list(s: &str) -> Result<PolicyList, String> {
    parse_policies(s).map(PolicyList)
}

fn seed_list(s: &str) -> Result<SeedList, String> {
    parse_seeds(s).map(SeedList)
}

pub fn parse_policies(s: &str) -> Result<Vec<PolicyKind>, String> {
    let mut out = Vec::new();
    for part in s.split(',').filter(|p| !p.trim().is_empty()) {
        let p: PolicyKind = part.parse()?;
        if out.contains(&p) {
            return Err(format!("policy `{p}` listed twice"));
        }
        out.push(p);
    }
    if out.is_empty() {
        return Err("no policies given".into());
    }
    Ok(out)
}

pub fn parse_seeds(s: &str) -> Result<Vec<u64>, String> {
    let num = |t: &str| {
        t.trim()
            .parse::<u64>()
            .map_err(|_| format!("`{t}` is not a seed"))
    };
    let seeds: Vec<u64> = if let Some((a, b)) = s.split_once("..=") {
        (num(a)?..=num(b)?).collect()
    } else if let Some((a, b)) = s.split_once("..") {
        (num(a)?..num(b)?).collect()
    } else {
        s.split(',').map(num).collect::<Result<_, _>>()?
    };
    if seeds.is_empty() {
        return Err(format!("seed range `{s}` is empty"));
    }
    Ok(seeds)
}

pub fn metrics_header(controllers: &[ControllerId]) -> Vec<String> {
    let mut h = vec!["round".to_string()];
    h.extend(controllers.iter().map(|c| format!("R_{c}")));
    h.extend(
        ["D", "mean_delay", "migrations", "round_cost", "cum_cost"]
            .iter()
            .map(|s| s.to_string()),
    );
    h
}

pub const AGGREGATE_HEADER: [&str; 7] = [
    "round",
    "d_mean",
    "d_sd",
    "delay_mean",
    "delay_sd",
    "cum_cost_mean",
    "cum_cost_sd",
];

fn csv_bytes(header: &[String], rows: impl Iterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("write to memory");
    for r in rows {
        w.write_record(&r).expect("write to memory");
    }
    w.into_inner().expect("flush to memory")
}

pub fn render_metrics(controllers: &[ControllerId], records: &[RoundRecord]) -> Vec<u8> {
    csv_bytes(
        &metrics_header(controllers),
        records.iter().map(|r| {
            let mut row = vec![r.round.to_string()];
            row.extend(r.ratios.iter().map(f64::to_string));
            row.push(r.d.to_string());
            row.push(r.mean_delay.to_string());
            row.push(r.migrated_switches().to_string());
            row.push(r.round_cost.to_string());
            row.push(r.cumulative_cost.to_string());
            row
        }),
    )
}

pub fn render_aggregate(rows: &[AggregateRow]) -> Vec<u8> {
    let header: Vec<String> = AGGREGATE_HEADER.iter().map(|s| s.to_string()).collect();
    csv_bytes(
        &header,
        rows.iter().map(|r| {
            vec![
                r.round.to_string(),
                r.d_mean.to_string(),
                r.d_sd.to_string(),
                r.delay_mean.to_string(),
                r.delay_sd.to_string(),
                r.cum_cost_mean.to_string(),
                r.cum_cost_sd.to_string(),
            ]
        }),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub scenario: String,
    pub policy: PolicyKind,
    pub seed: u64,
    pub rounds: usize,
    pub final_d: f64,
    pub mean_delay: f64,
    pub cumulative_cost: f64,
    pub triggered_rounds: usize,
    pub migrated_switches: usize,
    pub rejected_actions: usize,
}

impl RunSummary {
    pub fn new(
        scenario: &Scenario,
        policy: PolicyKind,
        seed: u64,
        records: &[RoundRecord],
    ) -> Self {
        Self {
            scenario: scenario.name.clone(),
            policy,
            seed,
            rounds: records.len(),
            final_d: records.last().map_or(0.0, |r| r.d),
            mean_delay: run_mean_delay(records),
            cumulative_cost: records.last().map_or(0.0, |r| r.cumulative_cost),
            triggered_rounds: records.iter().filter(|r| r.triggered).count(),
            migrated_switches: records.iter().map(RoundRecord::migrated_switches).sum(),
            rejected_actions: records.iter().filter(|r| r.rejected.is_some()).count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareSummary {
    pub scenario: String,
    pub seeds: Vec<u64>,
    pub policies: Vec<PolicySummary>,
    /// `(mmo - rl) / mmo * 100` on the round-averaged delay; positive means
    /// RL-LBM is faster. Absent unless both policies ran.
    pub rl_vs_mmo_delay_reduction_pct: Option<f64>,
    /// `rl / none` on the final-round plane coefficient.
    pub rl_vs_none_final_d_ratio: Option<f64>,
}

pub fn aggregate_file_name(policy: PolicyKind) -> String {
    format!("{policy}.csv")
}

fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("summary serializes");
    v.push(b'\n');
    v
}

/// Writes all `files` into `dir`, creating it if needed. Each file goes to a
/// temporary sibling first and is renamed into place.
fn write_outputs(dir: &Path, files: &[(String, Vec<u8>)]) -> Result<(), CliError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CliError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let mut staged = Vec::with_capacity(files.len());
    for (name, bytes) in files {
        let tmp = dir.join(format!(".{name}.tmp"));
        if let Err(e) = fs::write(&tmp, bytes) {
            for (t, _) in &staged {
                let _ = fs::remove_file(t);
            }
            let _ = fs::remove_file(&tmp);
            return Err(io(&tmp)(e));
        }
        staged.push((tmp, dir.join(name)));
    }
    for (tmp, dst) in &staged {
        fs::rename(tmp, dst).map_err(io(dst))?;
    }
    Ok(())
}

pub fn cmd_run(
    scenario_path: &Path,
    policy: PolicyKind,
    seed: u64,
    out: &Path,
) -> Result<RunSummary, CliError> {
    let scenario = load_scenario(scenario_path)?;
    let records = run(&scenario, policy, seed)?;
    let ids: Vec<_> = scenario.topology.controller_ids().collect();
    let summary = RunSummary::new(&scenario, policy, seed, &records);
    write_outputs(
        out,
        &[
            (METRICS_FILE.to_string(), render_metrics(&ids, &records)),
            (SUMMARY_FILE.to_string(), json_bytes(&summary)),
        ],
    )?;
    info!("wrote {} rounds to {}", records.len(), out.display());
    Ok(summary)
}

pub type PolicySeries = Vec<(PolicyKind, Vec<AggregateRow>)>;

pub fn compare_summary(
    scenario: &Scenario,
    policies: &[PolicyKind],
    seeds: &[u64],
) -> Result<(CompareSummary, PolicySeries), SimError> {
    let results = run_jobs(scenario, &jobs(policies, seeds))?;
    let summaries: Vec<PolicySummary> = policies
        .iter()
        .filter_map(|&p| summarize(&results, p))
        .collect();
    let get = |p: PolicyKind| summaries.iter().find(|s| s.policy == p);
    let rl = get(PolicyKind::RlLbm);
    let delay = rl
        .zip(get(PolicyKind::MmoLbm))
        .and_then(|(rl, mmo)| relative_reduction(rl.mean_delay, mmo.mean_delay));
    let d_ratio = rl.zip(get(PolicyKind::None)).and_then(|(rl, none)| {
        (none.final_d_mean != 0.0).then(|| rl.final_d_mean / none.final_d_mean)
    });
    let series = policies
        .iter()
        .map(|&p| (p, aggregate_series(&results, p)))
        .collect();
    Ok((
        CompareSummary {
            scenario: scenario.name.clone(),
            seeds: seeds.to_vec(),
            policies: summaries,
            rl_vs_mmo_delay_reduction_pct: delay,
            rl_vs_none_final_d_ratio: d_ratio,
        },
        series,
    ))
}

pub fn cmd_compare(
    scenario_path: &Path,
    policies: &[PolicyKind],
    seeds: &[u64],
    out: &Path,
) -> Result<CompareSummary, CliError> {
    if policies.is_empty() || seeds.is_empty() {
        return Err(CliError::Usage(
            "need at least one policy and one seed".into(),
        ));
    }
    let scenario = load_scenario(scenario_path)?;
    let (summary, series) = compare_summary(&scenario, policies, seeds)?;
    let mut files: Vec<(String, Vec<u8>)> = series
        .iter()
        .map(|(p, rows)| (aggregate_file_name(*p), render_aggregate(rows)))
        .collect();
    files.push((SUMMARY_FILE.to_string(), json_bytes(&summary)));
    write_outputs(out, &files)?;
    info!(
        "compared {} policies over {} seeds into {}",
        policies.len(),
        seeds.len(),
        out.display()
    );
    Ok(summary)
}

pub fn cmd_validate(scenario_path: &Path) -> Result<Scenario, CliError> {
    Ok(load_scenario(scenario_path)?)
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run {
            scenario,
            policy,
            seed,
            out,
        } => {
            let s = cmd_run(&scenario, policy, seed, &out)?;
            println!(
                "{} seed {}: final D {:.4}, mean delay {:.4}, cumulative cost {}",
                s.policy, s.seed, s.final_d, s.mean_delay, s.cumulative_cost
            );
        }
        Command::Compare {
            scenario,
            policies,
            seeds,
            out,
        } => {
            let s = cmd_compare(&scenario, &policies.0, &seeds.0, &out)?;
            for p in &s.policies {
                println!(
                    "{:<8} final D {:.4}  mean delay {:.4}  cumulative cost {:.2}",
                    p.policy.as_str(),
                    p.final_d_mean,
                    p.mean_delay,
                    p.cumulative_cost_mean
                );
            }
            if let Some(pct) = s.rl_vs_mmo_delay_reduction_pct {
                println!("rl-lbm delay vs mmo-lbm: {pct:+.2}%");
            }
        }
        Command::Validate { scenario } => {
            let s = cmd_validate(&scenario)?;
            println!(
                "{}: ok ({} controllers, {} switches, {} rounds)",
                s.name,
                s.topology.controllers().len(),
                s.topology.switches().len(),
                s.rounds
            );
        }
    }
    Ok(())
}

pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
