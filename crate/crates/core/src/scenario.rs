//! Scenario files: a versioned TOML document describing the controllers,
//! switches (owner, traffic schedule, hop counts) and model parameters of an
//! experiment.
//!
//! ```toml
//! version = 1
//! name = "example"
//! rounds = 20
//! seed = 42
//! trigger_threshold = 0.3
//!
//! [[controller]]
//! id = 1
//! capacity = 1000.0
//!
//! [[switch]]
//! id = 1
//! owner = 1
//! schedule = [[0, 120.0], [10, 240.0]]   # or `rate = 120.0`
//! jitter = 0.05                           # optional relative amplitude
//! hops = { 1 = 1 }                        # one entry per controller
//!
//! [cost]    # optional, see CostModel
//! [delay]   # optional, see DelayModel
//! [rl]      # optional, see RlConfig
//! ```
//!
//! Every validation error carries the 1-based line of the offending item.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;
use toml::Spanned;

use crate::model::{ControllerId, ModelError, SwitchId, Topology};
use crate::rl::RlConfig;
use crate::sim::{CostModel, DelayModel, Jitter, TrafficProfile};

pub const FORMAT_VERSION: u32 = 1;
pub const DEFAULT_TRIGGER_THRESHOLD: f64 = 0.3;

/// The shipped four-controller, twelve-switch example.
pub const FIG4: &str = include_str!("../scenarios/fig4.scenario");

/// 1-based source line, when one is known.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Line(pub Option<usize>);

impl fmt::Display for Line {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(l) => write!(f, "line {l}: "),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{line}parse error: {message}")]
    Parse { line: Line, message: String },
    #[error("{line}missing field `{field}`")]
    MissingField { line: Line, field: &'static str },
    #[error("{line}unsupported scenario version {version} (expected {FORMAT_VERSION})")]
    Version { line: Line, version: u32 },
    #[error("{line}dangling id: {message}")]
    DanglingId { line: Line, message: String },
    #[error("{line}incomplete hop matrix: no hop count from {switch} to {controller}")]
    IncompleteHops {
        line: Line,
        switch: SwitchId,
        controller: ControllerId,
    },
    #[error("{line}invalid scenario: {message}")]
    Invalid { line: Line, message: String },
}

impl ScenarioError {
    fn invalid(line: Line, message: impl Into<String>) -> Self {
        Self::Invalid {
            line,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    /// Initial ownership; rates are the round-0 base rates.
    pub topology: Topology,
    pub traffic: BTreeMap<SwitchId, TrafficProfile>,
    pub cost: CostModel,
    pub delay: DelayModel,
    pub rl: RlConfig,
    pub trigger_threshold: f64,
    pub rounds: u32,
    pub seed: u64,
}

impl Scenario {
    pub fn fig4() -> Self {
        Self::from_toml_str(FIG4, "fig4").expect("shipped scenario is valid")
    }

    /// Checks the invariants that construction through [`load_scenario`]
    /// already guarantees, for scenarios assembled in code.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let none = Line(None);
        if self.rounds == 0 {
            return Err(ScenarioError::invalid(none, "rounds must be >= 1"));
        }
        if !(self.trigger_threshold.is_finite() && self.trigger_threshold >= 0.0) {
            return Err(ScenarioError::invalid(
                none,
                "trigger_threshold must be >= 0",
            ));
        }
        for s in self.topology.switches() {
            let Some(p) = self.traffic.get(&s.id) else {
                return Err(ScenarioError::MissingField {
                    line: none,
                    field: "schedule",
                });
            };
            p.validate()
                .map_err(|m| ScenarioError::invalid(none, format!("{}: {m}", s.id)))?;
        }
        for id in self.traffic.keys() {
            if self.topology.switch(*id).is_err() {
                return Err(ScenarioError::DanglingId {
                    line: none,
                    message: format!("traffic profile for undefined switch {id}"),
                });
            }
        }
        self.cost
            .validate()
            .map_err(|m| ScenarioError::invalid(none, format!("[cost] {m}")))?;
        self.delay
            .validate()
            .map_err(|m| ScenarioError::invalid(none, format!("[delay] {m}")))?;
        self.rl
            .validate()
            .map_err(|e| ScenarioError::invalid(none, format!("[rl] {e}")))?;
        Ok(())
    }

    pub fn from_toml_str(text: &str, default_name: &str) -> Result<Self, ScenarioError> {
        let lines = LineIndex::new(text);
        let raw: RawScenario = toml::from_str(text).map_err(|e| ScenarioError::Parse {
            line: Line(e.span().map(|s| lines.line(s.start))),
            message: e.message().trim().to_string(),
        })?;
        raw.build(&lines, default_name)
    }
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("scenario");
    Scenario::from_toml_str(&text, stem)
}

struct LineIndex {
    starts: Vec<usize>,
}

impl LineIndex {
    fn new(text: &str) -> Self {
        let mut starts = vec![0];
        starts.extend(text.match_indices('\n').map(|(i, _)| i + 1));
        Self { starts }
    }

    fn line(&self, offset: usize) -> usize {
        self.starts.partition_point(|&s| s <= offset)
    }

    fn of<T>(&self, s: &Spanned<T>) -> Line {
        Line(Some(self.line(s.span().start)))
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    version: Option<Spanned<u32>>,
    name: Option<String>,
    rounds: Option<Spanned<u32>>,
    seed: Option<u64>,
    trigger_threshold: Option<Spanned<f64>>,
    #[serde(default)]
    controller: Vec<Spanned<RawController>>,
    #[serde(default)]
    switch: Vec<Spanned<RawSwitch>>,
    cost: Option<Spanned<CostModel>>,
    delay: Option<Spanned<DelayModel>>,
    rl: Option<Spanned<RlConfig>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawController {
    id: Option<u32>,
    capacity: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSwitch {
    id: Option<u32>,
    owner: Option<u32>,
    rate: Option<f64>,
    schedule: Option<Vec<(u32, f64)>>,
    jitter: Option<f64>,
    jitter_seed: Option<u64>,
    hops: Option<BTreeMap<String, Spanned<u32>>>,
}

fn require<T>(value: Option<T>, line: Line, field: &'static str) -> Result<T, ScenarioError> {
    value.ok_or(ScenarioError::MissingField { line, field })
}

impl RawScenario {
    fn build(self, lines: &LineIndex, default_name: &str) -> Result<Scenario, ScenarioError> {
        let top = Line(Some(1));
        let version = require(self.version, top, "version")?;
        if *version.get_ref() != FORMAT_VERSION {
            return Err(ScenarioError::Version {
                line: lines.of(&version),
                version: *version.get_ref(),
            });
        }
        let rounds = require(self.rounds, top, "rounds")?;
        if *rounds.get_ref() == 0 {
            return Err(ScenarioError::invalid(
                lines.of(&rounds),
                "rounds must be >= 1",
            ));
        }
        let trigger_threshold = match self.trigger_threshold {
            Some(t) => {
                let v = *t.get_ref();
                if !(v.is_finite() && v >= 0.0) {
                    return Err(ScenarioError::invalid(
                        lines.of(&t),
                        "trigger_threshold must be >= 0",
                    ));
                }
                v
            }
            None => DEFAULT_TRIGGER_THRESHOLD,
        };
        if self.controller.is_empty() {
            return Err(ScenarioError::MissingField {
                line: top,
                field: "controller",
            });
        }

        let mut ctrl_lines: BTreeMap<u32, Line> = BTreeMap::new();
        let mut controllers = Vec::new();
        for c in &self.controller {
            let line = lines.of(c);
            let raw = c.get_ref();
            let id = require(raw.id, line, "id")?;
            let capacity = require(raw.capacity, line, "capacity")?;
            if ctrl_lines.insert(id, line).is_some() {
                return Err(ScenarioError::invalid(
                    line,
                    format!("controller {} defined more than once", ControllerId(id)),
                ));
            }
            if !(capacity.is_finite() && capacity > 0.0) {
                return Err(ScenarioError::invalid(line, "capacity must be > 0"));
            }
            controllers.push((ControllerId(id), capacity));
        }

        let mut switches = Vec::new();
        let mut hops = Vec::new();
        let mut traffic = BTreeMap::new();
        let mut switch_lines: BTreeMap<u32, Line> = BTreeMap::new();
        for s in &self.switch {
            let line = lines.of(s);
            let raw = s.get_ref();
            let id = require(raw.id, line, "id")?;
            let owner = require(raw.owner, line, "owner")?;
            if switch_lines.insert(id, line).is_some() {
                return Err(ScenarioError::invalid(
                    line,
                    format!("switch {} defined more than once", SwitchId(id)),
                ));
            }
            if !ctrl_lines.contains_key(&owner) {
                return Err(ScenarioError::DanglingId {
                    line,
                    message: format!(
                        "switch {} is owned by undefined controller {}",
                        SwitchId(id),
                        ControllerId(owner)
                    ),
                });
            }
            let breakpoints = match (&raw.schedule, raw.rate) {
                (Some(_), Some(_)) => {
                    return Err(ScenarioError::invalid(
                        line,
                        "give either `rate` or `schedule`, not both",
                    ))
                }
                (Some(sched), None) => sched.clone(),
                (None, Some(rate)) => vec![(0, rate)],
                (None, None) => {
                    return Err(ScenarioError::MissingField {
                        line,
                        field: "schedule",
                    })
                }
            };
            let profile = TrafficProfile {
                breakpoints,
                jitter: raw.jitter.map(|amplitude| Jitter {
                    amplitude,
                    seed: raw.jitter_seed.unwrap_or(u64::from(id)),
                }),
            };
            profile
                .validate()
                .map_err(|m| ScenarioError::invalid(line, m))?;

            let hop_map = require(raw.hops.as_ref(), line, "hops")?;
            for (key, h) in hop_map {
                let hop_line = lines.of(h);
                let cid: u32 = key.trim().parse().map_err(|_| {
                    ScenarioError::invalid(
                        hop_line,
                        format!("hop key `{key}` is not a controller id"),
                    )
                })?;
                if !ctrl_lines.contains_key(&cid) {
                    return Err(ScenarioError::DanglingId {
                        line: hop_line,
                        message: format!(
                            "hop count for undefined controller {}",
                            ControllerId(cid)
                        ),
                    });
                }
                if *h.get_ref() == 0 {
                    return Err(ScenarioError::invalid(hop_line, "hop counts must be >= 1"));
                }
                hops.push((SwitchId(id), ControllerId(cid), *h.get_ref()));
            }
            for &cid in ctrl_lines.keys() {
                if !hop_map.contains_key(&cid.to_string()) {
                    return Err(ScenarioError::IncompleteHops {
                        line,
                        switch: SwitchId(id),
                        controller: ControllerId(cid),
                    });
                }
            }

            switches.push((SwitchId(id), profile.base_rate(0), ControllerId(owner)));
            traffic.insert(SwitchId(id), profile);
        }

        let topology = Topology::new(controllers, switches, hops).map_err(|e| {
            let line = match &e {
                ModelError::DanglingOwner { switch, .. }
                | ModelError::MissingHop { switch, .. }
                | ModelError::InvalidRate { id: switch, .. } => {
                    switch_lines.get(&switch.0).copied()
                }
                _ => None,
            };
            ScenarioError::invalid(line.unwrap_or(Line(None)), e.to_string())
        })?;

        let cost = section(self.cost, lines, "cost", CostModel::validate)?;
        let delay = section(self.delay, lines, "delay", DelayModel::validate)?;
        let rl = section(self.rl, lines, "rl", |r: &RlConfig| {
            r.validate().map_err(|e| e.to_string())
        })?;

        Ok(Scenario {
            name: self.name.unwrap_or_else(|| default_name.to_string()),
            topology,
            traffic,
            cost,
            delay,
            rl,
            trigger_threshold,
            rounds: rounds.into_inner(),
            seed: self.seed.unwrap_or(0),
        })
    }
}

fn section<T: Default>(
    raw: Option<Spanned<T>>,
    lines: &LineIndex,
    name: &str,
    validate: impl Fn(&T) -> Result<(), String>,
) -> Result<T, ScenarioError> {
    match raw {
        None => Ok(T::default()),
        Some(s) => {
            let line = lines.of(&s);
            let v = s.into_inner();
            validate(&v).map_err(|m| ScenarioError::invalid(line, format!("[{name}] {m}")))?;
            Ok(v)
        }
    }
}
