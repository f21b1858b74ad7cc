#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sdn_lbm::model::{ControllerId, SwitchId, Topology};
use sdn_lbm::selection::CandidatePair;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Coefficient of variation through the pairwise-difference form of the
/// variance, independent of the library's two-pass mean/deviation.
pub fn oracle_d(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let sum: f64 = xs.iter().sum();
    if sum == 0.0 {
        return 0.0;
    }
    let mut acc = 0.0;
    for a in xs {
        for b in xs {
            acc += (a - b) * (a - b);
        }
    }
    (acc / (2.0 * n * n)).sqrt() / (sum / n)
}

/// Closed form for two values: |a - b| / (a + b).
pub fn oracle_pair_d(a: f64, b: f64) -> f64 {
    if a + b == 0.0 {
        0.0
    } else {
        (a - b).abs() / (a + b)
    }
}

pub struct Instance {
    pub topology: Topology,
    pub pair: CandidatePair,
}

/// An out-controller with `1..=max_switches` switches and a single target,
/// plus a few bystanders. Capacities, rates and hops are all random.
pub fn selection_instance(r: &mut ChaCha8Rng, max_switches: u32) -> Instance {
    let n_out = r.random_range(1..=max_switches);
    let n_ctrl = r.random_range(2..=4u32);
    let mut b = Topology::builder();
    for c in 1..=n_ctrl {
        b = b.controller(c, r.random_range(50.0..400.0));
    }
    let mut sid = 1;
    for _ in 0..n_out {
        b = b.switch(sid, r.random_range(0.0..60.0), 1);
        sid += 1;
    }
    for c in 2..=n_ctrl {
        for _ in 0..r.random_range(0..3) {
            b = b.switch(sid, r.random_range(0.0..40.0), c);
            sid += 1;
        }
    }
    for s in 1..sid {
        for c in 1..=n_ctrl {
            b = b.hop(s, c, r.random_range(1..=4));
        }
    }
    let topology = b.build().unwrap();
    let into = ControllerId(r.random_range(2..=n_ctrl));
    let pair = CandidatePair {
        out: ControllerId(1),
        into,
        pair_deviation: topology
            .discrete_coefficient_pair(ControllerId(1), into)
            .unwrap(),
    };
    Instance { topology, pair }
}

/// Random plane with `controllers` controllers and `switches` switches,
/// owners drawn with a bias towards low ids so overloads are common.
pub fn random_plane(r: &mut ChaCha8Rng, controllers: u32, switches: u32) -> Topology {
    let mut b = Topology::builder();
    for c in 1..=controllers {
        b = b.controller(c, r.random_range(100.0..1000.0));
    }
    for s in 1..=switches {
        let owner = if r.random_bool(0.5) {
            1 + r.random_range(0..controllers.min(2))
        } else {
            r.random_range(1..=controllers)
        };
        b = b.switch(s, r.random_range(0.0..250.0), owner);
        for c in 1..=controllers {
            b = b.hop(s, c, if c == owner { 1 } else { r.random_range(1..=5) });
        }
    }
    b.build().unwrap()
}

/// Eligible switches by the textbook rule, recomputed from raw topology
/// accessors: efficiency = rate / hops to the owner, keep those at or above
/// the mean, order by efficiency then id.
pub fn oracle_eligible(t: &Topology, out: ControllerId) -> Vec<(SwitchId, f64)> {
    let ctrl = t.controller(out).unwrap();
    let es: Vec<(SwitchId, f64, f64)> = ctrl
        .switches
        .iter()
        .map(|&s| {
            let rate = t.switch(s).unwrap().packet_in_rate;
            (s, rate, rate / t.hops(s, out).unwrap() as f64)
        })
        .collect();
    let m = es.iter().map(|e| e.2).sum::<f64>() / es.len() as f64;
    let mut keep: Vec<_> = es.into_iter().filter(|e| e.2 >= m).collect();
    keep.sort_by(|a, b| b.2.partial_cmp(&a.2).unwrap().then(a.0.cmp(&b.0)));
    keep.into_iter().map(|(s, r, _)| (s, r)).collect()
}

/// Minimum predicted pair coefficient over every feasible prefix of the
/// eligible order (the empty prefix included), with the prefix length.
pub fn oracle_best_prefix(t: &Topology, pair: &CandidatePair) -> (f64, usize) {
    let elig = oracle_eligible(t, pair.out);
    let c_out = t.controller(pair.out).unwrap().capacity;
    let c_in = t.controller(pair.into).unwrap().capacity;
    let l_out = t.controller_load(pair.out).unwrap();
    let l_in = t.controller_load(pair.into).unwrap();
    let mut best = (oracle_pair_d(l_out / c_out, l_in / c_in), 0);
    let mut moved = 0.0;
    for (k, (_, rate)) in elig.iter().enumerate() {
        moved += rate;
        let r_in = l_in / c_in + moved / c_in;
        if r_in > 1.0 {
            break;
        }
        let d = oracle_pair_d(l_out / c_out - moved / c_out, r_in);
        if d < best.0 {
            best = (d, k + 1);
        }
    }
    best
}
