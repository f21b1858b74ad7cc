//! Control-plane domain types and the balance arithmetic built on them.
//!
//! A controller's load is the sum of the packet-in rates of the switches it
//! manages; its load ratio is that load over its capacity. Balance across the
//! plane is measured with the discrete coefficient (population standard
//! deviation of the load ratios divided by their mean), and the attractiveness
//! of moving a switch is its migration efficiency (packet-in rate per hop).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ControllerId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SwitchId(pub u32);

impl fmt::Display for ControllerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "C{}", self.0)
    }
}

impl fmt::Display for SwitchId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "S{}", self.0)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("unknown controller {0}")]
    UnknownController(ControllerId),
    #[error("unknown switch {0}")]
    UnknownSwitch(SwitchId),
    #[error("controller {0} defined more than once")]
    DuplicateController(ControllerId),
    #[error("switch {0} defined more than once")]
    DuplicateSwitch(SwitchId),
    #[error("topology has no controllers")]
    NoControllers,
    #[error("controller {id} has invalid capacity {capacity} (must be finite and > 0)")]
    InvalidCapacity { id: ControllerId, capacity: f64 },
    #[error("switch {id} has invalid packet-in rate {rate} (must be finite and >= 0)")]
    InvalidRate { id: SwitchId, rate: f64 },
    #[error("switch {switch} is owned by undefined controller {owner}")]
    DanglingOwner {
        switch: SwitchId,
        owner: ControllerId,
    },
    #[error("no hop count defined between {switch} and {controller}")]
    MissingHop {
        switch: SwitchId,
        controller: ControllerId,
    },
    #[error("hop count between {switch} and {controller} must be >= 1")]
    InvalidHop {
        switch: SwitchId,
        controller: ControllerId,
    },
    #[error("controller {0} manages no switches")]
    NoSwitches(ControllerId),
    #[error("switch {switch} is not managed by {controller}")]
    NotOwned {
        switch: SwitchId,
        controller: ControllerId,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ControllerState {
    pub id: ControllerId,
    /// Packet-in messages per second the controller can process.
    pub capacity: f64,
    pub switches: BTreeSet<SwitchId>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SwitchState {
    pub id: SwitchId,
    /// Packet-in messages per second sent to the owning controller.
    pub packet_in_rate: f64,
}

/// A migration decision unit: move `switches` from `out` to `into`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MigrationTriple {
    pub out: ControllerId,
    #[serde(rename = "in")]
    pub into: ControllerId,
    pub switches: Vec<SwitchId>,
}

impl fmt::Display for MigrationTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}[", self.out, self.into)?;
        for (i, s) in self.switches.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{s}")?;
        }
        f.write_str("]")
    }
}

/// Controllers, switches, ownership and the dense switch-to-controller hop
/// matrix.
///
/// Controllers and switches are kept sorted by id, so every iteration over
/// the topology happens in ascending id order.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    controllers: Vec<ControllerState>,
    switches: Vec<SwitchState>,
    /// switch index -> controller index
    owner: Vec<usize>,
    /// row-major: switch index * controller count + controller index
    hops: Vec<u32>,
    ctrl_index: BTreeMap<ControllerId, usize>,
    switch_index: BTreeMap<SwitchId, usize>,
}

#[derive(Debug, Default, Clone)]
pub struct TopologyBuilder {
    controllers: Vec<(ControllerId, f64)>,
    switches: Vec<(SwitchId, f64, ControllerId)>,
    hops: Vec<(SwitchId, ControllerId, u32)>,
}

impl TopologyBuilder {
    pub fn controller(mut self, id: u32, capacity: f64) -> Self {
        self.controllers.push((ControllerId(id), capacity));
        self
    }

    pub fn switch(mut self, id: u32, packet_in_rate: f64, owner: u32) -> Self {
        self.switches
            .push((SwitchId(id), packet_in_rate, ControllerId(owner)));
        self
    }

    pub fn hop(mut self, switch: u32, controller: u32, hops: u32) -> Self {
        self.hops
            .push((SwitchId(switch), ControllerId(controller), hops));
        self
    }

    /// Sets the same hop count for every switch/controller pair not given
    /// explicitly.
    pub fn default_hops(mut self, hops: u32) -> Self {
        let explicit: BTreeSet<(SwitchId, ControllerId)> =
            self.hops.iter().map(|&(s, c, _)| (s, c)).collect();
        let mut fill = Vec::new();
        for &(s, _, _) in &self.switches {
            for &(c, _) in &self.controllers {
                if !explicit.contains(&(s, c)) {
                    fill.push((s, c, hops));
                }
            }
        }
        self.hops.extend(fill);
        self
    }

    pub fn build(self) -> Result<Topology, ModelError> {
        Topology::new(self.controllers, self.switches, self.hops)
    }
}

impl Topology {
    pub fn builder() -> TopologyBuilder {
        TopologyBuilder::default()
    }

    pub fn new(
        controllers: impl IntoIterator<Item = (ControllerId, f64)>,
        switches: impl IntoIterator<Item = (SwitchId, f64, ControllerId)>,
        hops: impl IntoIterator<Item = (SwitchId, ControllerId, u32)>,
    ) -> Result<Self, ModelError> {
        let mut ctrl_caps = BTreeMap::new();
        for (id, capacity) in controllers {
            if !(capacity.is_finite() && capacity > 0.0) {
                return Err(ModelError::InvalidCapacity { id, capacity });
            }
            if ctrl_caps.insert(id, capacity).is_some() {
                return Err(ModelError::DuplicateController(id));
            }
        }
        if ctrl_caps.is_empty() {
            return Err(ModelError::NoControllers);
        }
        let mut sw = BTreeMap::new();
        for (id, rate, owner) in switches {
            if !(rate.is_finite() && rate >= 0.0) {
                return Err(ModelError::InvalidRate { id, rate });
            }
            if !ctrl_caps.contains_key(&owner) {
                return Err(ModelError::DanglingOwner { switch: id, owner });
            }
            if sw.insert(id, (rate, owner)).is_some() {
                return Err(ModelError::DuplicateSwitch(id));
            }
        }

        let ctrl_index: BTreeMap<ControllerId, usize> =
            ctrl_caps.keys().enumerate().map(|(i, &c)| (c, i)).collect();
        let switch_index: BTreeMap<SwitchId, usize> =
            sw.keys().enumerate().map(|(i, &s)| (s, i)).collect();
        let n_ctrl = ctrl_caps.len();

        let mut controllers: Vec<ControllerState> = ctrl_caps
            .iter()
            .map(|(&id, &capacity)| ControllerState {
                id,
                capacity,
                switches: BTreeSet::new(),
            })
            .collect();
        let mut switches = Vec::with_capacity(sw.len());
        let mut owner = Vec::with_capacity(sw.len());
        for (&id, &(rate, own)) in &sw {
            let ci = ctrl_index[&own];
            controllers[ci].switches.insert(id);
            switches.push(SwitchState {
                id,
                packet_in_rate: rate,
            });
            owner.push(ci);
        }

        let mut matrix = vec![0u32; switches.len() * n_ctrl];
        for (s, c, h) in hops {
            let si = *switch_index.get(&s).ok_or(ModelError::UnknownSwitch(s))?;
            let ci = *ctrl_index.get(&c).ok_or(ModelError::UnknownController(c))?;
            if h == 0 {
                return Err(ModelError::InvalidHop {
                    switch: s,
                    controller: c,
                });
            }
            matrix[si * n_ctrl + ci] = h;
        }
        for (si, s) in switches.iter().enumerate() {
            for (ci, c) in controllers.iter().enumerate() {
                if matrix[si * n_ctrl + ci] == 0 {
                    return Err(ModelError::MissingHop {
                        switch: s.id,
                        controller: c.id,
                    });
                }
            }
        }

        Ok(Self {
            controllers,
            switches,
            owner,
            hops: matrix,
            ctrl_index,
            switch_index,
        })
    }

    pub fn controllers(&self) -> &[ControllerState] {
        &self.controllers
    }

    pub fn switches(&self) -> &[SwitchState] {
        &self.switches
    }

    pub fn controller_ids(&self) -> impl Iterator<Item = ControllerId> + '_ {
        self.controllers.iter().map(|c| c.id)
    }

    pub fn controller(&self, id: ControllerId) -> Result<&ControllerState, ModelError> {
        self.ctrl_idx(id).map(|i| &self.controllers[i])
    }

    pub fn switch(&self, id: SwitchId) -> Result<&SwitchState, ModelError> {
        self.switch_idx(id).map(|i| &self.switches[i])
    }

    pub fn owner(&self, switch: SwitchId) -> Result<ControllerId, ModelError> {
        let si = self.switch_idx(switch)?;
        Ok(self.controllers[self.owner[si]].id)
    }

    pub fn hops(&self, switch: SwitchId, controller: ControllerId) -> Result<u32, ModelError> {
        let si = self.switch_idx(switch)?;
        let ci = self.ctrl_idx(controller)?;
        Ok(self.hops[si * self.controllers.len() + ci])
    }

    /// Hop count from a switch to the controller currently managing it.
    pub fn current_hops(&self, switch: SwitchId) -> Result<u32, ModelError> {
        let si = self.switch_idx(switch)?;
        Ok(self.hops[si * self.controllers.len() + self.owner[si]])
    }

    fn ctrl_idx(&self, id: ControllerId) -> Result<usize, ModelError> {
        self.ctrl_index
            .get(&id)
            .copied()
            .ok_or(ModelError::UnknownController(id))
    }

    fn switch_idx(&self, id: SwitchId) -> Result<usize, ModelError> {
        self.switch_index
            .get(&id)
            .copied()
            .ok_or(ModelError::UnknownSwitch(id))
    }

    pub fn set_rate(&mut self, switch: SwitchId, rate: f64) -> Result<(), ModelError> {
        if !(rate.is_finite() && rate >= 0.0) {
            return Err(ModelError::InvalidRate { id: switch, rate });
        }
        let si = self.switch_idx(switch)?;
        self.switches[si].packet_in_rate = rate;
        Ok(())
    }

    /// Re-homes a single switch. Ownership stays a partition.
    pub fn move_switch(&mut self, switch: SwitchId, to: ControllerId) -> Result<(), ModelError> {
        let si = self.switch_idx(switch)?;
        let to_i = self.ctrl_idx(to)?;
        let from_i = self.owner[si];
        if from_i == to_i {
            return Ok(());
        }
        self.controllers[from_i].switches.remove(&switch);
        self.controllers[to_i].switches.insert(switch);
        self.owner[si] = to_i;
        Ok(())
    }

    /// Load of every controller, in ascending controller id order.
    pub fn loads(&self) -> Vec<f64> {
        let mut loads = vec![0.0; self.controllers.len()];
        for (si, s) in self.switches.iter().enumerate() {
            loads[self.owner[si]] += s.packet_in_rate;
        }
        loads
    }

    /// Load ratio of every controller, in ascending controller id order.
    pub fn ratios(&self) -> Vec<f64> {
        self.loads()
            .into_iter()
            .zip(&self.controllers)
            .map(|(l, c)| l / c.capacity)
            .collect()
    }

    pub fn total_rate(&self) -> f64 {
        self.switches.iter().map(|s| s.packet_in_rate).sum()
    }

    pub fn controller_load(&self, id: ControllerId) -> Result<f64, ModelError> {
        let c = self.controller(id)?;
        Ok(c.switches
            .iter()
            .map(|s| self.switches[self.switch_index[s]].packet_in_rate)
            .sum())
    }

    pub fn load_ratio(&self, id: ControllerId) -> Result<f64, ModelError> {
        let load = self.controller_load(id)?;
        Ok(load / self.controller(id)?.capacity)
    }

    pub fn mean_ratio_pair(&self, a: ControllerId, b: ControllerId) -> Result<f64, ModelError> {
        Ok((self.load_ratio(a)? + self.load_ratio(b)?) / 2.0)
    }

    pub fn mean_ratio_all(&self) -> f64 {
        mean(&self.ratios())
    }

    pub fn discrete_coefficient_pair(
        &self,
        a: ControllerId,
        b: ControllerId,
    ) -> Result<f64, ModelError> {
        Ok(pair_coefficient(self.load_ratio(a)?, self.load_ratio(b)?))
    }

    /// Balance of the whole control plane; 0 means perfectly balanced.
    pub fn discrete_coefficient_all(&self) -> f64 {
        discrete_coefficient(&self.ratios())
    }

    pub fn migration_efficiency(
        &self,
        controller: ControllerId,
        switch: SwitchId,
    ) -> Result<f64, ModelError> {
        if self.owner(switch)? != controller {
            self.ctrl_idx(controller)?;
            return Err(ModelError::NotOwned { switch, controller });
        }
        let rate = self.switch(switch)?.packet_in_rate;
        Ok(rate / f64::from(self.current_hops(switch)?))
    }

    /// Mean migration efficiency over the switches a controller manages
    /// (sum divided by the switch count).
    pub fn mean_migration_efficiency(&self, controller: ControllerId) -> Result<f64, ModelError> {
        let c = self.controller(controller)?;
        if c.switches.is_empty() {
            return Err(ModelError::NoSwitches(controller));
        }
        let mut sum = 0.0;
        for &s in &c.switches {
            sum += self.migration_efficiency(controller, s)?;
        }
        Ok(sum / c.switches.len() as f64)
    }
}

/// Arithmetic mean; an empty slice has mean 0.
pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Population standard deviation divided by the mean. Defined as 0 when the
/// mean is 0 (an idle plane is balanced).
pub fn discrete_coefficient(ratios: &[f64]) -> f64 {
    let m = mean(ratios);
    if m == 0.0 {
        return 0.0;
    }
    let var = ratios.iter().map(|r| (r - m) * (r - m)).sum::<f64>() / ratios.len() as f64;
    var.sqrt() / m
}

pub fn pair_coefficient(a: f64, b: f64) -> f64 {
    discrete_coefficient(&[a, b])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    /// Four controllers of capacity 100 whose loads are given; each load is
    /// carried by one switch with hop count 1.
    fn with_loads(loads: &[f64]) -> Topology {
        let mut b = Topology::builder();
        for (i, &l) in loads.iter().enumerate() {
            let id = i as u32 + 1;
            b = b.controller(id, 100.0).switch(id, l, id);
        }
        b.default_hops(1).build().unwrap()
    }

    #[test]
    fn controller_load_sums_owned_rates() {
        let t = Topology::builder()
            .controller(1, 100.0)
            .controller(2, 100.0)
            .controller(3, 100.0)
            .switch(1, 10.0, 1)
            .switch(2, 20.0, 1)
            .switch(3, 30.0, 1)
            .switch(4, 7.0, 3)
            .default_hops(1)
            .build()
            .unwrap();
        assert_eq!(t.controller_load(ControllerId(1)).unwrap(), 60.0);
        assert_eq!(t.controller_load(ControllerId(2)).unwrap(), 0.0);
        assert_eq!(t.controller_load(ControllerId(3)).unwrap(), 7.0);
        assert_eq!(
            t.controller_load(ControllerId(9)),
            Err(ModelError::UnknownController(ControllerId(9)))
        );
    }

    #[test]
    fn load_ratio_examples() {
        let t = with_loads(&[50.0, 0.0, 120.0]);
        assert_eq!(t.load_ratio(ControllerId(1)).unwrap(), 0.5);
        assert_eq!(t.load_ratio(ControllerId(2)).unwrap(), 0.0);
        assert!(close(t.load_ratio(ControllerId(3)).unwrap(), 1.2, 1e-12));
    }

    #[test]
    fn mean_ratio_examples() {
        let t = with_loads(&[50.0, 50.0, 20.0, 60.0, 0.0, 100.0]);
        let c = ControllerId;
        assert_eq!(t.mean_ratio_pair(c(1), c(2)).unwrap(), 0.5);
        assert!(close(t.mean_ratio_pair(c(3), c(4)).unwrap(), 0.4, 1e-12));
        assert_eq!(t.mean_ratio_pair(c(5), c(6)).unwrap(), 0.5);

        assert!(close(with_loads(&[30.0; 4]).mean_ratio_all(), 0.3, 1e-12));
        assert!(close(
            with_loads(&[20.0, 40.0, 60.0, 80.0]).mean_ratio_all(),
            0.5,
            1e-12
        ));
        assert!(close(with_loads(&[70.0]).mean_ratio_all(), 0.7, 1e-12));
    }

    #[test]
    fn zero_controllers_rejected() {
        assert_eq!(Topology::builder().build(), Err(ModelError::NoControllers));
    }

    #[test]
    fn discrete_coefficient_examples() {
        assert_eq!(pair_coefficient(0.5, 0.5), 0.0);
        assert!(close(pair_coefficient(0.2, 0.6), 0.5, 1e-12));
        assert!(close(pair_coefficient(0.1, 0.9), 0.8, 1e-12));
        assert_eq!(pair_coefficient(0.0, 0.0), 0.0);

        assert_eq!(discrete_coefficient(&[0.3; 5]), 0.0);
        assert!(close(
            discrete_coefficient(&[0.2, 0.4, 0.6, 0.8]),
            0.447_213_595_5,
            1e-9
        ));
        assert!(close(
            discrete_coefficient(&[0.9, 0.1, 0.5]),
            0.653_197_264_7,
            1e-9
        ));
        assert_eq!(discrete_coefficient(&[0.0, 0.0, 0.0]), 0.0);

        let t = with_loads(&[20.0, 40.0, 60.0, 80.0]);
        assert!(close(t.discrete_coefficient_all(), 0.447_213_595_5, 1e-9));
        assert!(close(
            t.discrete_coefficient_pair(ControllerId(1), ControllerId(3))
                .unwrap(),
            0.5,
            1e-12
        ));
    }

    #[test]
    fn efficiency_examples() {
        let t = Topology::builder()
            .controller(1, 100.0)
            .controller(2, 100.0)
            .switch(1, 30.0, 1)
            .switch(2, 0.0, 1)
            .switch(3, 40.0, 1)
            .hop(1, 1, 3)
            .hop(3, 1, 1)
            .default_hops(2)
            .build()
            .unwrap();
        let c1 = ControllerId(1);
        assert_eq!(t.migration_efficiency(c1, SwitchId(1)).unwrap(), 10.0);
        assert_eq!(t.migration_efficiency(c1, SwitchId(2)).unwrap(), 0.0);
        assert_eq!(t.migration_efficiency(c1, SwitchId(3)).unwrap(), 40.0);
        assert_eq!(
            t.migration_efficiency(ControllerId(2), SwitchId(1)),
            Err(ModelError::NotOwned {
                switch: SwitchId(1),
                controller: ControllerId(2)
            })
        );
        assert!(close(
            t.mean_migration_efficiency(c1).unwrap(),
            50.0 / 3.0,
            1e-12
        ));
        assert_eq!(
            t.mean_migration_efficiency(ControllerId(2)),
            Err(ModelError::NoSwitches(ControllerId(2)))
        );
    }

    #[test]
    fn mean_efficiency_divides_by_switch_count() {
        // efficiencies 40, 15, 20
        let t = Topology::builder()
            .controller(1, 100.0)
            .switch(1, 40.0, 1)
            .switch(2, 30.0, 1)
            .switch(3, 20.0, 1)
            .hop(2, 1, 2)
            .default_hops(1)
            .build()
            .unwrap();
        assert_eq!(t.mean_migration_efficiency(ControllerId(1)).unwrap(), 25.0);

        let single = with_loads(&[12.0]);
        assert_eq!(
            single.mean_migration_efficiency(ControllerId(1)).unwrap(),
            12.0
        );
    }

    #[test]
    fn construction_errors() {
        let base = || Topology::builder().controller(1, 100.0);
        assert_eq!(
            base().controller(2, 0.0).build(),
            Err(ModelError::InvalidCapacity {
                id: ControllerId(2),
                capacity: 0.0
            })
        );
        assert_eq!(
            base().switch(1, 5.0, 7).default_hops(1).build(),
            Err(ModelError::DanglingOwner {
                switch: SwitchId(1),
                owner: ControllerId(7)
            })
        );
        assert_eq!(
            base()
                .controller(2, 1.0)
                .switch(1, 5.0, 1)
                .hop(1, 1, 1)
                .build(),
            Err(ModelError::MissingHop {
                switch: SwitchId(1),
                controller: ControllerId(2)
            })
        );
        assert_eq!(
            base().switch(1, 5.0, 1).hop(1, 1, 0).build(),
            Err(ModelError::InvalidHop {
                switch: SwitchId(1),
                controller: ControllerId(1)
            })
        );
        assert_eq!(
            base().switch(1, -1.0, 1).build(),
            Err(ModelError::InvalidRate {
                id: SwitchId(1),
                rate: -1.0
            })
        );
        assert_eq!(
            base().controller(1, 5.0).build(),
            Err(ModelError::DuplicateController(ControllerId(1)))
        );
    }

    #[test]
    fn move_switch_keeps_partition_and_conserves_load() {
        let mut t = with_loads(&[90.0, 10.0, 50.0]);
        let before = t.total_rate();
        t.move_switch(SwitchId(1), ControllerId(2)).unwrap();
        assert_eq!(t.owner(SwitchId(1)).unwrap(), ControllerId(2));
        assert!(t.controller(ControllerId(1)).unwrap().switches.is_empty());
        assert_eq!(t.controller_load(ControllerId(2)).unwrap(), 100.0);
        assert_eq!(t.loads().iter().sum::<f64>(), before);
    }
}
