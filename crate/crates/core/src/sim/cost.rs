use serde::{Deserialize, Serialize};

use crate::model::{MigrationTriple, ModelError, Topology};

/// Signaling overhead of a migration: a fixed part per moved switch, a part
/// proportional to the hop distance to the new controller, and a per-triple
/// state synchronization charge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CostModel {
    pub per_switch_base: f64,
    pub per_hop: f64,
    pub sync_penalty: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        Self {
            per_switch_base: 1.0,
            per_hop: 1.0,
            sync_penalty: 1.0,
        }
    }
}

impl CostModel {
    pub fn validate(&self) -> Result<(), String> {
        let parts = [self.per_switch_base, self.per_hop, self.sync_penalty];
        if parts.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err("cost parameters must be finite and >= 0".into());
        }
        if parts.iter().all(|p| *p == 0.0) {
            return Err("cost parameters must not all be zero".into());
        }
        Ok(())
    }

    /// Cost of executing one triple against `topology`.
    pub fn migration_cost(
        &self,
        topology: &Topology,
        triple: &MigrationTriple,
    ) -> Result<f64, ModelError> {
        let mut cost = self.sync_penalty;
        for &s in &triple.switches {
            let hops = topology.hops(s, triple.into)?;
            cost += self.per_switch_base + self.per_hop * f64::from(hops);
        }
        Ok(cost)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ControllerId, SwitchId};

    fn topo() -> Topology {
        Topology::builder()
            .controller(1, 100.0)
            .controller(2, 100.0)
            .switch(1, 10.0, 1)
            .switch(2, 10.0, 1)
            .hop(1, 2, 2)
            .hop(2, 2, 3)
            .default_hops(1)
            .build()
            .unwrap()
    }

    fn triple(switches: &[u32]) -> MigrationTriple {
        MigrationTriple {
            out: ControllerId(1),
            into: ControllerId(2),
            switches: switches.iter().map(|&s| SwitchId(s)).collect(),
        }
    }

    #[test]
    fn single_switch_default_model() {
        let cost = CostModel::default()
            .migration_cost(&topo(), &triple(&[1]))
            .unwrap();
        assert_eq!(cost, 4.0);
    }

    #[test]
    fn two_switches_weighted_hops() {
        let t = Topology::builder()
            .controller(1, 100.0)
            .controller(2, 100.0)
            .switch(1, 10.0, 1)
            .switch(2, 10.0, 1)
            .hop(1, 2, 1)
            .hop(2, 2, 3)
            .default_hops(1)
            .build()
            .unwrap();
        let model = CostModel {
            per_switch_base: 1.0,
            per_hop: 2.0,
            sync_penalty: 0.0,
        };
        assert_eq!(model.migration_cost(&t, &triple(&[1, 2])).unwrap(), 10.0);
    }

    #[test]
    fn zero_per_hop_ignores_distance() {
        let model = CostModel {
            per_switch_base: 1.5,
            per_hop: 0.0,
            sync_penalty: 0.5,
        };
        let t = topo();
        assert_eq!(model.migration_cost(&t, &triple(&[1])).unwrap(), 2.0);
        assert_eq!(model.migration_cost(&t, &triple(&[2])).unwrap(), 2.0);
    }

    #[test]
    fn validation() {
        assert!(CostModel::default().validate().is_ok());
        let zero = CostModel {
            per_switch_base: 0.0,
            per_hop: 0.0,
            sync_penalty: 0.0,
        };
        assert!(zero.validate().is_err());
        let neg = CostModel {
            per_hop: -1.0,
            ..CostModel::default()
        };
        assert!(neg.validate().is_err());
    }
}
