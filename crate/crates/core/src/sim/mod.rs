//! Round-based control-plane simulation.
//!
//! Each round advances the traffic profiles, measures the plane, and when the
//! balance trigger fires asks the selected policy for a migration action,
//! charges its cost and applies it. Delays are measured after migration.

mod cost;
mod delay;
mod traffic;

use std::collections::BTreeSet;

use log::{debug, warn};
use serde::Serialize;
use thiserror::Error;

pub use cost::CostModel;
pub use delay::DelayModel;
pub use traffic::{Jitter, TrafficProfile};

use crate::baselines::{dc_lbm_decide, mmo_lbm_decide, PolicyKind};
use crate::model::{discrete_coefficient, mean, MigrationTriple, ModelError, SwitchId, Topology};
use crate::rl::{decide_migration, MigrationAction, RlError};
use crate::scenario::{Scenario, ScenarioError};
use crate::selection::build_candidate_set;
use traffic::{splitmix64, RateSource};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Rl(#[from] RlError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ApplyError {
    #[error("triple {0} moves a switch between the same controller")]
    SelfMigration(MigrationTriple),
    #[error("triple {0} moves no switches")]
    Empty(MigrationTriple),
    #[error("stale action: {switch} is not managed by {expected} ({0})", .triple)]
    Stale {
        triple: MigrationTriple,
        switch: SwitchId,
        expected: crate::model::ControllerId,
    },
    #[error("switch {0} appears in more than one triple")]
    DuplicateSwitch(SwitchId),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Applies every triple of `action` atomically: either all switches move or
/// the topology is returned untouched through the error.
pub fn apply_action(topology: &Topology, action: &MigrationAction) -> Result<Topology, ApplyError> {
    let mut seen = BTreeSet::new();
    for t in &action.triples {
        if t.out == t.into {
            return Err(ApplyError::SelfMigration(t.clone()));
        }
        if t.switches.is_empty() {
            return Err(ApplyError::Empty(t.clone()));
        }
        topology.controller(t.into)?;
        for &s in &t.switches {
            if topology.owner(s)? != t.out {
                return Err(ApplyError::Stale {
                    triple: t.clone(),
                    switch: s,
                    expected: t.out,
                });
            }
            if !seen.insert(s) {
                return Err(ApplyError::DuplicateSwitch(s));
            }
        }
    }
    let mut next = topology.clone();
    for t in &action.triples {
        for &s in &t.switches {
            next.move_switch(s, t.into)?;
        }
    }
    Ok(next)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundRecord {
    pub round: u32,
    /// Post-migration loads, ascending controller id.
    pub loads: Vec<f64>,
    /// Post-migration load ratios, ascending controller id.
    pub ratios: Vec<f64>,
    /// Plane coefficient before any migration this round.
    pub d_before: f64,
    /// Plane coefficient after this round's migrations.
    pub d: f64,
    pub triggered: bool,
    /// Packet-in rate weighted mean delay across switches.
    pub mean_delay: f64,
    pub migrations: Vec<MigrationTriple>,
    pub round_cost: f64,
    pub cumulative_cost: f64,
    pub rejected: Option<String>,
}

impl RoundRecord {
    pub fn migrated_switches(&self) -> usize {
        self.migrations.iter().map(|t| t.switches.len()).sum()
    }
}

/// The plane is out of equilibrium when some controller sits above the mean
/// ratio and the plane coefficient exceeds `threshold`.
pub fn trigger_fires(ratios: &[f64], threshold: f64) -> bool {
    let m = mean(ratios);
    ratios.iter().any(|&r| r > m) && discrete_coefficient(ratios) > threshold
}

pub fn decide_action(
    policy: PolicyKind,
    topology: &Topology,
    scenario: &Scenario,
    rng_seed: u64,
) -> Result<MigrationAction, SimError> {
    Ok(match policy {
        PolicyKind::None => MigrationAction::default(),
        PolicyKind::DcLbm => dc_lbm_decide(topology),
        PolicyKind::MmoLbm => mmo_lbm_decide(topology),
        PolicyKind::RlLbm => {
            let candidates = build_candidate_set(topology, &scenario.cost);
            decide_migration(&candidates, topology, &scenario.rl, rng_seed)?
        }
    })
}

/// Rate-weighted mean packet-in delay of the plane.
pub fn mean_delay(topology: &Topology, delay: &DelayModel, migrated: &BTreeSet<SwitchId>) -> f64 {
    let ratios = topology.ratios();
    let ctrl_delay: Vec<f64> = ratios.iter().map(|&r| delay.controller_delay(r)).collect();
    let ids: Vec<_> = topology.controller_ids().collect();
    let mut weighted = 0.0;
    let mut total = 0.0;
    for s in topology.switches() {
        let owner = topology.owner(s.id).expect("switch from this topology");
        let ci = ids.binary_search(&owner).expect("owner is a controller");
        let mut d = ctrl_delay[ci];
        if migrated.contains(&s.id) {
            d += delay.migration_handoff_penalty;
        }
        weighted += s.packet_in_rate * d;
        total += s.packet_in_rate;
    }
    if total == 0.0 {
        0.0
    } else {
        weighted / total
    }
}

pub fn run(
    scenario: &Scenario,
    policy: PolicyKind,
    seed: u64,
) -> Result<Vec<RoundRecord>, SimError> {
    scenario.validate()?;
    let mut topology = scenario.topology.clone();
    let mut sources: Vec<(SwitchId, RateSource)> = scenario
        .traffic
        .iter()
        .map(|(&id, p)| (id, RateSource::new(p, seed, id.0)))
        .collect();
    let mut records = Vec::with_capacity(scenario.rounds as usize);
    let mut cumulative = 0.0;

    for round in 0..scenario.rounds {
        for (id, src) in &mut sources {
            topology.set_rate(*id, src.next(round))?;
        }
        let before = topology.ratios();
        let d_before = discrete_coefficient(&before);
        let triggered =
            policy != PolicyKind::None && trigger_fires(&before, scenario.trigger_threshold);

        let mut migrations = Vec::new();
        let mut round_cost = 0.0;
        let mut rejected = None;
        let mut migrated = BTreeSet::new();
        if triggered {
            let round_seed = splitmix64(seed ^ splitmix64(u64::from(round)));
            let action = decide_action(policy, &topology, scenario, round_seed)?;
            if !action.is_empty() {
                let mut cost = 0.0;
                for t in &action.triples {
                    cost += scenario.cost.migration_cost(&topology, t)?;
                }
                match apply_action(&topology, &action) {
                    Ok(next) => {
                        debug!(
                            "round {round}: {policy} applied {} triple(s)",
                            action.triples.len()
                        );
                        topology = next;
                        round_cost = cost;
                        migrated = action
                            .triples
                            .iter()
                            .flat_map(|t| t.switches.iter().copied())
                            .collect();
                        migrations = action.triples;
                    }
                    Err(e) => {
                        warn!("round {round}: {policy} action rejected: {e}");
                        rejected = Some(e.to_string());
                    }
                }
            }
        }
        cumulative += round_cost;

        let loads = topology.loads();
        let ratios = topology.ratios();
        records.push(RoundRecord {
            round,
            d: discrete_coefficient(&ratios),
            loads,
            ratios,
            d_before,
            triggered,
            mean_delay: mean_delay(&topology, &scenario.delay, &migrated),
            migrations,
            round_cost,
            cumulative_cost: cumulative,
            rejected,
        });
    }
    Ok(records)
}
