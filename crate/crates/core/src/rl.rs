//! Tabular Q-learning over candidate migration triples.
//!
//! States are out-domains, actions are in-domains. Each decision round builds
//! a fresh evaluation matrix `Q` (initialized to `q_init`) and reward matrix
//! `R` from that round's candidates, then repeatedly:
//!
//! 1. for every out-domain still free, proposes the in-domain with the
//!    largest reward;
//! 2. picks among the proposals ε-greedily. Note that ε is the probability
//!    of *exploiting* the largest estimate, and 1-ε the probability of
//!    exploring one of the others uniformly;
//! 3. updates the chosen estimate with a one-step temporal-difference target
//!    whose next-state value is the largest estimate among candidates that
//!    remain compatible with the choice;
//! 4. accepts the triple into the action set when its updated estimate is
//!    still at least the best competing proposal, removing every candidate
//!    that shares a controller with it.
//!
//! The round ends once no compatible candidate is left or the iteration cap
//! is reached.

use std::collections::{BTreeMap, BTreeSet};

use log::debug;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ControllerId, MigrationTriple, SwitchId, Topology};
use crate::selection::CandidateTriple;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RlError {
    #[error("invalid RL configuration: {0}")]
    InvalidConfig(String),
    #[error("migration cost must be > 0, got {0}")]
    NonPositiveCost(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RlConfig {
    /// Learning rate, in (0, 1].
    pub alpha: f64,
    /// Discount factor, in [0, 1).
    pub gamma: f64,
    /// Probability of exploiting the largest estimate, in (0, 1].
    pub epsilon: f64,
    pub q_init: f64,
    pub convergence_tol: f64,
    pub max_iterations: usize,
}

impl Default for RlConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            gamma: 0.8,
            epsilon: 0.9,
            q_init: 1.0,
            convergence_tol: 1e-6,
            max_iterations: 10_000,
        }
    }
}

impl RlConfig {
    pub fn validate(&self) -> Result<(), RlError> {
        let bad = |msg: &str| Err(RlError::InvalidConfig(msg.to_string()));
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad("alpha must be in (0, 1]");
        }
        if !(self.gamma >= 0.0 && self.gamma < 1.0) {
            return bad("gamma must be in [0, 1)");
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return bad("epsilon must be in (0, 1]");
        }
        if !self.q_init.is_finite() {
            return bad("q_init must be finite");
        }
        if !(self.convergence_tol.is_finite() && self.convergence_tol >= 0.0) {
            return bad("convergence_tol must be finite and >= 0");
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be >= 1");
        }
        Ok(())
    }
}

/// Return of a triple: balance improvement per unit of migration cost.
/// Positive when the pair coefficient drops.
pub fn compute_reward(d_before: f64, d_after: f64, migration_cost: f64) -> Result<f64, RlError> {
    if migration_cost.is_nan() || migration_cost <= 0.0 {
        return Err(RlError::NonPositiveCost(migration_cost));
    }
    Ok((d_before - d_after) / migration_cost)
}

/// One temporal-difference step: `q + alpha * (reward + gamma * max_next - q)`.
pub fn q_update(q: f64, config: &RlConfig, reward: f64, max_next_q: f64) -> f64 {
    q + config.alpha * (reward + config.gamma * max_next_q - q)
}

/// True iff no entry moved by more than `tol` (inclusive).
pub fn q_converged(prev: &QState, next: &QState, tol: f64) -> bool {
    max_abs_diff(prev, next) <= tol
}

fn max_abs_diff(prev: &QState, next: &QState) -> f64 {
    prev.q
        .iter()
        .map(|(k, a)| next.q.get(k).map_or(f64::INFINITY, |b| (a - b).abs()))
        .fold(0.0, f64::max)
}

type Key = (ControllerId, ControllerId);

/// Evaluation matrix, reward matrix and the triples they index.
#[derive(Debug, Clone, PartialEq)]
pub struct QState {
    q: BTreeMap<Key, f64>,
    r: BTreeMap<Key, f64>,
    candidates: BTreeMap<Key, CandidateTriple>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SettleReport {
    pub sweeps: usize,
    pub max_delta: f64,
    pub converged: bool,
}

fn conflicts(a: Key, b: Key) -> bool {
    a.0 == b.0 || a.0 == b.1 || a.1 == b.0 || a.1 == b.1
}

impl QState {
    pub fn new(candidates: &[CandidateTriple], config: &RlConfig) -> Result<Self, RlError> {
        let mut q = BTreeMap::new();
        let mut r = BTreeMap::new();
        let mut by_key = BTreeMap::new();
        for c in candidates {
            let key = (c.out(), c.target());
            let reward = compute_reward(
                c.pair.pair_deviation,
                c.predicted_pair_deviation,
                c.migration_cost,
            )?;
            q.insert(key, config.q_init);
            r.insert(key, reward);
            by_key.insert(key, c.clone());
        }
        Ok(Self {
            q,
            r,
            candidates: by_key,
        })
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    pub fn keys(&self) -> impl Iterator<Item = Key> + '_ {
        self.q.keys().copied()
    }

    pub fn estimate(&self, out: ControllerId, into: ControllerId) -> Option<f64> {
        self.q.get(&(out, into)).copied()
    }

    pub fn reward(&self, out: ControllerId, into: ControllerId) -> Option<f64> {
        self.r.get(&(out, into)).copied()
    }

    pub fn candidate(&self, out: ControllerId, into: ControllerId) -> Option<&CandidateTriple> {
        self.candidates.get(&(out, into))
    }

    /// Applies one update to `(out, into)` and returns the new estimate.
    pub fn update(
        &mut self,
        config: &RlConfig,
        out: ControllerId,
        into: ControllerId,
        reward: f64,
        max_next_q: f64,
    ) -> Option<f64> {
        let entry = self.q.get_mut(&(out, into))?;
        *entry = q_update(*entry, config, reward, max_next_q);
        Some(*entry)
    }

    /// Largest estimate among candidates in `pool` that share no controller
    /// with `chosen`; 0 when none remain.
    fn max_next(&self, pool: &[Key], chosen: Key) -> f64 {
        pool.iter()
            .filter(|&&k| !conflicts(k, chosen))
            .map(|k| self.q[k])
            .reduce(f64::max)
            .unwrap_or(0.0)
    }

    /// Sweeps the update over every entry against the static reward matrix
    /// until the matrix stops changing (within `convergence_tol`) or
    /// `max_iterations` sweeps have run.
    pub fn settle(&mut self, config: &RlConfig) -> SettleReport {
        let keys: Vec<Key> = self.q.keys().copied().collect();
        let mut report = SettleReport {
            sweeps: 0,
            max_delta: 0.0,
            converged: keys.is_empty(),
        };
        if keys.is_empty() {
            return report;
        }
        while report.sweeps < config.max_iterations {
            let prev = self.clone();
            for &k in &keys {
                let next = prev.max_next(&keys, k);
                let v = q_update(prev.q[&k], config, self.r[&k], next);
                self.q.insert(k, v);
            }
            report.sweeps += 1;
            report.max_delta = max_abs_diff(&prev, self);
            if q_converged(&prev, self, config.convergence_tol) {
                report.converged = true;
                break;
            }
        }
        report
    }
}

/// The set of triples executed in one round.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MigrationAction {
    pub triples: Vec<MigrationTriple>,
}

impl MigrationAction {
    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn switch_count(&self) -> usize {
        self.triples.iter().map(|t| t.switches.len()).sum()
    }

    /// No controller plays more than one role across the set, and no switch
    /// is moved twice.
    pub fn is_conflict_free(&self) -> bool {
        let mut ctrls = BTreeSet::new();
        let mut switches: BTreeSet<SwitchId> = BTreeSet::new();
        for t in &self.triples {
            if t.out == t.into || !ctrls.insert(t.out) || !ctrls.insert(t.into) {
                return false;
            }
            if !t.switches.iter().all(|s| switches.insert(*s)) {
                return false;
            }
        }
        true
    }
}

#[derive(Debug, Clone)]
pub struct Decision {
    pub action: MigrationAction,
    pub iterations: usize,
    pub q: QState,
}

pub fn decide_migration(
    candidates: &[CandidateTriple],
    topology: &Topology,
    config: &RlConfig,
    rng_seed: u64,
) -> Result<MigrationAction, RlError> {
    decide(candidates, topology, config, rng_seed).map(|d| d.action)
}

/// Same as [`decide_migration`], also returning the learned matrix and the
/// number of updates performed.
pub fn decide(
    candidates: &[CandidateTriple],
    topology: &Topology,
    config: &RlConfig,
    rng_seed: u64,
) -> Result<Decision, RlError> {
    config.validate()?;
    let fresh: Vec<CandidateTriple> = candidates
        .iter()
        .filter(|c| {
            let current = c
                .switches
                .iter()
                .all(|&s| topology.owner(s).ok() == Some(c.out()));
            if !current {
                debug!("dropping stale candidate {}", c.triple());
            }
            current && !c.switches.is_empty() && c.out() != c.target()
        })
        .cloned()
        .collect();
    let mut q = QState::new(&fresh, config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut used: BTreeSet<ControllerId> = BTreeSet::new();
    let mut action = MigrationAction::default();
    let mut iterations = 0;

    while iterations < config.max_iterations {
        let pool: Vec<Key> = q
            .keys()
            .filter(|(o, i)| !used.contains(o) && !used.contains(i))
            .collect();
        if pool.is_empty() {
            break;
        }

        // best-reward in-domain per out-domain, ties to the lower id
        let mut proposals: BTreeMap<ControllerId, Key> = BTreeMap::new();
        for &k in &pool {
            let r = q.r[&k];
            proposals
                .entry(k.0)
                .and_modify(|best| {
                    if r > q.r[best] {
                        *best = k;
                    }
                })
                .or_insert(k);
        }
        let proposals: Vec<Key> = proposals.into_values().collect();

        let greedy = proposals
            .iter()
            .copied()
            .reduce(|a, b| if q.q[&b] > q.q[&a] { b } else { a })
            .expect("pool is non-empty");
        let chosen = if proposals.len() == 1 || rng.random::<f64>() < config.epsilon {
            greedy
        } else {
            let others: Vec<Key> = proposals.iter().copied().filter(|&k| k != greedy).collect();
            others[rng.random_range(0..others.len())]
        };

        let next = q.max_next(&pool, chosen);
        let reward = q.r[&chosen];
        let updated = q
            .update(config, chosen.0, chosen.1, reward, next)
            .expect("chosen key is indexed");
        iterations += 1;

        let rival = proposals
            .iter()
            .filter(|&&k| k != chosen)
            .map(|k| q.q[k])
            .fold(f64::NEG_INFINITY, f64::max);
        if updated >= rival {
            used.insert(chosen.0);
            used.insert(chosen.1);
            action.triples.push(q.candidates[&chosen].triple());
        }
    }
    if iterations >= config.max_iterations {
        debug!("decision stopped at the iteration cap ({iterations})");
    }

    Ok(Decision {
        action,
        iterations,
        q,
    })
}
