use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Packet-in rate schedule of one switch: step-interpolated breakpoints,
/// optionally perturbed by multiplicative uniform jitter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficProfile {
    /// `(round, rate)` pairs, strictly increasing in round. Rounds before the
    /// first breakpoint use its rate.
    pub breakpoints: Vec<(u32, f64)>,
    pub jitter: Option<Jitter>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jitter {
    /// Relative amplitude in [0, 1): the rate is scaled by `1 + a*u`,
    /// `u` uniform in [-1, 1].
    pub amplitude: f64,
    pub seed: u64,
}

impl TrafficProfile {
    pub fn constant(rate: f64) -> Self {
        Self {
            breakpoints: vec![(0, rate)],
            jitter: None,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.breakpoints.is_empty() {
            return Err("traffic profile needs at least one breakpoint".into());
        }
        for &(round, rate) in &self.breakpoints {
            if !(rate.is_finite() && rate >= 0.0) {
                return Err(format!(
                    "rate {rate} at round {round} must be finite and >= 0"
                ));
            }
        }
        if self.breakpoints.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err("breakpoint rounds must be strictly increasing".into());
        }
        if let Some(j) = self.jitter {
            if !(j.amplitude >= 0.0 && j.amplitude < 1.0) {
                return Err(format!(
                    "jitter amplitude {} must be in [0, 1)",
                    j.amplitude
                ));
            }
        }
        Ok(())
    }

    pub fn base_rate(&self, round: u32) -> f64 {
        let idx = self.breakpoints.partition_point(|&(r, _)| r <= round);
        self.breakpoints[idx.saturating_sub(1)].1
    }
}

/// Per-switch rate generator for one run.
#[derive(Debug, Clone)]
pub(crate) struct RateSource {
    profile: TrafficProfile,
    rng: Option<ChaCha8Rng>,
}

impl RateSource {
    pub(crate) fn new(profile: &TrafficProfile, run_seed: u64, switch: u32) -> Self {
        let rng = profile.jitter.map(|j| {
            ChaCha8Rng::seed_from_u64(splitmix64(
                splitmix64(run_seed ^ j.seed.rotate_left(17)) ^ u64::from(switch),
            ))
        });
        Self {
            profile: profile.clone(),
            rng,
        }
    }

    /// Rate for `round`; must be called once per round in order.
    pub(crate) fn next(&mut self, round: u32) -> f64 {
        let base = self.profile.base_rate(round);
        match (&mut self.rng, self.profile.jitter) {
            (Some(rng), Some(j)) => {
                let u: f64 = rng.random_range(-1.0..=1.0);
                base * (1.0 + j.amplitude * u)
            }
            _ => base,
        }
    }
}

pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}
