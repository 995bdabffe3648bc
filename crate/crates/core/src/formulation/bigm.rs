use crate::instance::Instance;
use serde::{Deserialize, Serialize};

/// The smallest valid big-M constants for an instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BigMSet {
    /// Time propagation, minutes.
    pub m1: f64,
    /// Load propagation, passengers.
    pub m2: f64,
    /// Lateness indicator, minutes.
    pub m3: f64,
}

/// `M1 = max l − min e + max t + max d`, `M2 = max C_k`, `M3 = max l − min s`,
/// taken over all nodes and arcs of the instance.
pub fn compute_big_m(inst: &Instance) -> BigMSet {
    let max_l = inst.nodes.iter().map(|v| v.latest).max().unwrap_or(0);
    let min_e = inst.nodes.iter().map(|v| v.earliest).min().unwrap_or(0);
    let max_d = inst.nodes.iter().map(|v| v.service).max().unwrap_or(0);
    let max_t = inst.arcs.iter().map(|a| a.time.0).max().unwrap_or(0);
    let min_s = inst.nodes.iter().filter_map(|v| v.scheduled).min().unwrap_or(max_l);
    BigMSet {
        m1: ((max_l - min_e + max_d) * 10 + max_t) as f64 / 10.0,
        m2: inst.fleet.max_capacity() as f64,
        m3: (max_l - min_s) as f64,
    }
}
