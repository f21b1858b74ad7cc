//! Round-based simulator of a multi-controller SDN control plane that
//! rebalances controller load by migrating switches.

pub mod baselines;
pub mod cli;
pub mod model;
pub mod rl;
pub mod scenario;
pub mod selection;
pub mod sim;
pub mod sweep;
