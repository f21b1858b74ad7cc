//! Candidate generation: pair an overloaded controller with an idle one
//! (migration domains), then pick the set of switches to hand over.
//!
//! Domain pairing keeps a pair when its two-controller discrete coefficient
//! exceeds the plane-wide coefficient and the more loaded side is above the
//! plane's mean load ratio. Switch selection sorts the out-domain's switches
//! by migration efficiency, keeps those at or above the mean efficiency, and
//! extends the migrated prefix while the predicted pair coefficient keeps
//! strictly dropping.

use std::cmp::Ordering;

use log::debug;
use serde::Serialize;

use crate::model::{
    discrete_coefficient, mean, pair_coefficient, ControllerId, MigrationTriple, SwitchId, Topology,
};
use crate::sim::CostModel;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidatePair {
    pub out: ControllerId,
    #[serde(rename = "in")]
    pub into: ControllerId,
    pub pair_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateTriple {
    pub pair: CandidatePair,
    /// Non-increasing migration efficiency order.
    pub switches: Vec<SwitchId>,
    pub predicted_pair_deviation: f64,
    pub predicted_out_ratio: f64,
    pub predicted_in_ratio: f64,
    pub migration_cost: f64,
}

impl CandidateTriple {
    pub fn out(&self) -> ControllerId {
        self.pair.out
    }

    pub fn target(&self) -> ControllerId {
        self.pair.into
    }

    pub fn triple(&self) -> MigrationTriple {
        MigrationTriple {
            out: self.pair.out,
            into: self.pair.into,
            switches: self.switches.clone(),
        }
    }
}

/// A switch under the out-domain together with its migration efficiency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankedSwitch {
    pub id: SwitchId,
    pub rate: f64,
    pub efficiency: f64,
}

/// Switches of `out` whose efficiency is at least the controller's mean
/// efficiency, by descending efficiency then ascending id.
pub fn eligible_switches(topology: &Topology, out: ControllerId) -> Vec<RankedSwitch> {
    let Ok(ctrl) = topology.controller(out) else {
        return Vec::new();
    };
    let mut ranked: Vec<RankedSwitch> = ctrl
        .switches
        .iter()
        .map(|&id| {
            let rate = topology.switch(id).map(|s| s.packet_in_rate).unwrap_or(0.0);
            let hops = topology.current_hops(id).unwrap_or(1);
            RankedSwitch {
                id,
                rate,
                efficiency: rate / f64::from(hops),
            }
        })
        .collect();
    if ranked.is_empty() {
        return ranked;
    }
    let efficiencies: Vec<f64> = ranked.iter().map(|r| r.efficiency).collect();
    let threshold = mean(&efficiencies);
    ranked.retain(|r| r.efficiency >= threshold);
    ranked.sort_by(|a, b| {
        b.efficiency
            .total_cmp(&a.efficiency)
            .then_with(|| a.id.cmp(&b.id))
    });
    ranked
}

pub fn select_migration_domains(topology: &Topology) -> Vec<CandidatePair> {
    let ratios = topology.ratios();
    let ids: Vec<ControllerId> = topology.controller_ids().collect();
    if ids.len() < 2 {
        return Vec::new();
    }
    let global_d = discrete_coefficient(&ratios);
    let global_mean = mean(&ratios);

    let mut pairs = Vec::new();
    for i in 0..ids.len() {
        for j in (i + 1)..ids.len() {
            let (ri, rj) = (ratios[i], ratios[j]);
            let d = pair_coefficient(ri, rj);
            let (hi, lo, r_hi) = match ri.partial_cmp(&rj) {
                Some(Ordering::Greater) => (ids[i], ids[j], ri),
                Some(Ordering::Less) => (ids[j], ids[i], rj),
                _ => continue,
            };
            if d > global_d && r_hi > global_mean {
                pairs.push(CandidatePair {
                    out: hi,
                    into: lo,
                    pair_deviation: d,
                });
            }
        }
    }
    pairs.sort_by(|a, b| {
        b.pair_deviation
            .total_cmp(&a.pair_deviation)
            .then_with(|| (a.out, a.into).cmp(&(b.out, b.into)))
    });
    pairs
}

/// Predicted (out, in) load ratios after moving `moved` packet-in load.
pub fn predicted_ratios(
    topology: &Topology,
    out: ControllerId,
    into: ControllerId,
    moved: f64,
) -> Option<(f64, f64)> {
    let r_out = topology.load_ratio(out).ok()?;
    let r_in = topology.load_ratio(into).ok()?;
    let c_out = topology.controller(out).ok()?.capacity;
    let c_in = topology.controller(into).ok()?.capacity;
    Some((r_out - moved / c_out, r_in + moved / c_in))
}

pub fn select_migrating_switches(
    topology: &Topology,
    pair: &CandidatePair,
    cost_model: &CostModel,
) -> Option<CandidateTriple> {
    let eligible = eligible_switches(topology, pair.out);
    if eligible.is_empty() {
        debug!("{} has no switches to migrate", pair.out);
        return None;
    }

    let mut best = pair.pair_deviation;
    let mut moved = 0.0;
    let mut taken = Vec::new();
    let mut predicted = None;
    for s in &eligible {
        let load = moved + s.rate;
        let (r_out, r_in) = predicted_ratios(topology, pair.out, pair.into, load)?;
        let d = pair_coefficient(r_out, r_in);
        if r_in > 1.0 || d >= best {
            break;
        }
        best = d;
        moved = load;
        taken.push(s.id);
        predicted = Some((r_out, r_in));
    }

    let (r_out, r_in) = predicted?;
    let triple = MigrationTriple {
        out: pair.out,
        into: pair.into,
        switches: taken,
    };
    let migration_cost = cost_model.migration_cost(topology, &triple).ok()?;
    Some(CandidateTriple {
        pair: pair.clone(),
        switches: triple.switches,
        predicted_pair_deviation: best,
        predicted_out_ratio: r_out,
        predicted_in_ratio: r_in,
        migration_cost,
    })
}

pub fn build_candidate_set(topology: &Topology, cost_model: &CostModel) -> Vec<CandidateTriple> {
    select_migration_domains(topology)
        .iter()
        .filter_map(|p| select_migrating_switches(topology, p, cost_model))
        .collect()
}
