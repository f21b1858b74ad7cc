use serde::{Deserialize, Serialize};

/// Utilization-scaled packet-in service delay.
///
/// A controller at load ratio `r < 1` answers in
/// `base_service_time / max(min_headroom, 1 - r)`; a saturated controller
/// answers in `saturation_delay`. Switches migrated in a round pay
/// `migration_handoff_penalty` on top for that round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DelayModel {
    pub base_service_time: f64,
    pub min_headroom: f64,
    pub saturation_delay: f64,
    pub migration_handoff_penalty: f64,
}

impl Default for DelayModel {
    fn default() -> Self {
        Self {
            base_service_time: 1.0,
            min_headroom: 0.05,
            saturation_delay: 50.0,
            migration_handoff_penalty: 2.0,
        }
    }
}

impl DelayModel {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.base_service_time.is_finite() && self.base_service_time > 0.0) {
            return Err("base_service_time must be > 0".into());
        }
        if !(self.min_headroom.is_finite() && self.min_headroom > 0.0) {
            return Err("min_headroom must be > 0".into());
        }
        let worst = self.base_service_time / self.min_headroom.min(1.0);
        if !(self.saturation_delay.is_finite() && self.saturation_delay >= worst) {
            return Err(format!(
                "saturation_delay must be >= the largest unsaturated delay ({worst})"
            ));
        }
        if !(self.migration_handoff_penalty.is_finite() && self.migration_handoff_penalty >= 0.0) {
            return Err("migration_handoff_penalty must be >= 0".into());
        }
        Ok(())
    }

    pub fn controller_delay(&self, ratio: f64) -> f64 {
        if ratio < 1.0 {
            self.base_service_time / self.min_headroom.max(1.0 - ratio)
        } else {
            self.saturation_delay
        }
    }
}
