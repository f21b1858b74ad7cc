//! Comparison policies sharing the RL policy's trigger.
//!
//! * DC-LBM moves the single highest-rate switch of each over-mean controller
//!   to the least-loaded controller, when the pair's discrete coefficient
//!   exceeds the plane's.
//! * MMO-LBM sheds switches of each over-mean controller to whichever
//!   under-mean controller is fewest hops away, until the source is back at
//!   or below the mean ratio.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::model::{
    discrete_coefficient, mean, pair_coefficient, ControllerId, MigrationTriple, SwitchId, Topology,
};
use crate::rl::MigrationAction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PolicyKind {
    #[serde(rename = "rl-lbm")]
    RlLbm,
    #[serde(rename = "dc-lbm")]
    DcLbm,
    #[serde(rename = "mmo-lbm")]
    MmoLbm,
    #[serde(rename = "none")]
    None,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 4] = [Self::RlLbm, Self::DcLbm, Self::MmoLbm, Self::None];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::RlLbm => "rl-lbm",
            Self::DcLbm => "dc-lbm",
            Self::MmoLbm => "mmo-lbm",
            Self::None => "none",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "rl-lbm" | "rl" => Ok(Self::RlLbm),
            "dc-lbm" | "dc" => Ok(Self::DcLbm),
            "mmo-lbm" | "mmo" => Ok(Self::MmoLbm),
            "none" => Ok(Self::None),
            other => Err(format!(
                "unknown policy `{other}` (expected rl-lbm, dc-lbm, mmo-lbm or none)"
            )),
        }
    }
}

/// Controllers above the mean ratio, most loaded first.
fn over_mean(ids: &[ControllerId], ratios: &[f64]) -> Vec<usize> {
    let m = mean(ratios);
    let mut idx: Vec<usize> = (0..ids.len()).filter(|&i| ratios[i] > m).collect();
    idx.sort_by(|&a, &b| ratios[b].total_cmp(&ratios[a]).then(ids[a].cmp(&ids[b])));
    idx
}

pub fn dc_lbm_decide(topology: &Topology) -> MigrationAction {
    let ids: Vec<ControllerId> = topology.controller_ids().collect();
    let ratios = topology.ratios();
    let global_d = discrete_coefficient(&ratios);
    let mut used = vec![false; ids.len()];
    let mut action = MigrationAction::default();

    for src in over_mean(&ids, &ratios) {
        if used[src] {
            continue;
        }
        let Some(dst) = (0..ids.len())
            .filter(|&i| i != src && !used[i])
            .min_by(|&a, &b| ratios[a].total_cmp(&ratios[b]).then(ids[a].cmp(&ids[b])))
        else {
            break;
        };
        if pair_coefficient(ratios[src], ratios[dst]) <= global_d {
            continue;
        }
        let Some((switch, rate)) = heaviest_switch(topology, ids[src]) else {
            continue;
        };
        let cap = topology.controllers()[dst].capacity;
        if rate <= 0.0 || ratios[dst] + rate / cap > 1.0 {
            continue;
        }
        used[src] = true;
        used[dst] = true;
        action.triples.push(MigrationTriple {
            out: ids[src],
            into: ids[dst],
            switches: vec![switch],
        });
    }
    action
}

fn heaviest_switch(topology: &Topology, c: ControllerId) -> Option<(SwitchId, f64)> {
    let ctrl = topology.controller(c).ok()?;
    ctrl.switches
        .iter()
        .map(|&s| (s, topology.switch(s).map_or(0.0, |x| x.packet_in_rate)))
        .reduce(|best, cur| if cur.1 > best.1 { cur } else { best })
}

pub fn mmo_lbm_decide(topology: &Topology) -> MigrationAction {
    let ids: Vec<ControllerId> = topology.controller_ids().collect();
    let caps: Vec<f64> = topology.controllers().iter().map(|c| c.capacity).collect();
    let ratios = topology.ratios();
    let m = mean(&ratios);
    let sources = over_mean(&ids, &ratios);
    let targets: Vec<usize> = (0..ids.len()).filter(|&i| ratios[i] <= m).collect();
    let mut load = topology.loads();
    let mut action = MigrationAction::default();
    let hops = |s: SwitchId, c: usize| topology.hops(s, ids[c]).unwrap_or(u32::MAX);

    for src in sources {
        let mut order: Vec<(u32, SwitchId)> = topology.controllers()[src]
            .switches
            .iter()
            .map(|&s| {
                let nearest = targets
                    .iter()
                    .map(|&t| hops(s, t))
                    .min()
                    .unwrap_or(u32::MAX);
                (nearest, s)
            })
            .collect();
        order.sort();

        for (_, s) in order {
            if load[src] / caps[src] <= m {
                break;
            }
            let rate = topology.switch(s).map_or(0.0, |x| x.packet_in_rate);
            let Some(dst) = targets
                .iter()
                .copied()
                .filter(|&t| (load[t] + rate) / caps[t] <= 1.0)
                .min_by_key(|&t| (hops(s, t), ids[t]))
            else {
                continue;
            };
            load[src] -= rate;
            load[dst] += rate;
            match action
                .triples
                .iter_mut()
                .find(|t| t.out == ids[src] && t.into == ids[dst])
            {
                Some(t) => t.switches.push(s),
                None => action.triples.push(MigrationTriple {
                    out: ids[src],
                    into: ids[dst],
                    switches: vec![s],
                }),
            }
        }
    }
    action
}
