//! Dial-a-ride instances: the node graph, arc set, loads, service times and
//! the operator/user time windows derived from booked trips.

mod json;

pub use json::InstanceJson;

use crate::geo::GeoPoint;
use crate::ingestion::{resolve_travel_times, ProviderError, TravelTimeProvider};
use crate::time::{Tenths, MINUTES_PER_DAY};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("no trip requests in period")]
    EmptyPeriod,
    #[error("requests span more than one period ({0} and {1})")]
    MixedPeriods(Period, Period),
    #[error("request {id}: {reason}")]
    InvalidRequest { id: String, reason: String },
    #[error("invalid fleet: {0}")]
    InvalidFleet(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("node {node}: empty time window [{earliest}, {latest}]")]
    InfeasibleWindow { node: usize, earliest: i64, latest: i64 },
    #[error("node {0} has no scheduled time")]
    MissingSchedule(usize),
    #[error("travel matrix is {got}x{got}, expected {expected}x{expected}")]
    MatrixShape { got: usize, expected: usize },
    #[error("negative travel time {minutes} from node {from} to node {to}")]
    NegativeTravel { from: usize, to: usize, minutes: f64 },
    #[error("malformed instance: {0}")]
    Malformed(String),
    #[error(transparent)]
    Provider(#[from] ProviderError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Home to health-care facility.
    Inbound,
    /// Facility back home.
    Outbound,
}

/// Half-open interval `[start, end)` in minutes of the day.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Period {
    pub start: i64,
    pub end: i64,
}

impl Period {
    pub fn containing(minute: i64, interval: i64) -> Period {
        let start = minute.div_euclid(interval) * interval;
        Period { start, end: start + interval }
    }

    pub fn contains(&self, minute: i64) -> bool {
        self.start <= minute && minute < self.end
    }

    /// Twelve-hour "5 am - 6 am" label.
    pub fn label(&self) -> String {
        fn clock(m: i64) -> String {
            let h = m.div_euclid(60) % 24;
            let min = m.rem_euclid(60);
            let (h12, suffix) = match h {
                0 => (12, "am"),
                1..=11 => (h, "am"),
                12 => (12, "pm"),
                _ => (h - 12, "pm"),
            };
            if min == 0 {
                format!("{h12} {suffix}")
            } else {
                format!("{h12}:{min:02} {suffix}")
            }
        }
        format!("{} - {}", clock(self.start), clock(self.end))
    }
}

impl std::fmt::Display for Period {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}-{}", crate::time::format_clock(self.start), crate::time::format_clock(self.end))
    }
}

/// One booked order: a single customer travelling one leg.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripRequest {
    pub id: String,
    pub direction: Direction,
    pub pickup_location: GeoPoint,
    pub dropoff_location: GeoPoint,
    pub scheduled_pickup: i64,
    pub scheduled_dropoff: i64,
    pub period: Period,
}

impl TripRequest {
    pub fn validate(&self) -> Result<(), InstanceError> {
        let bad = |reason: &str| InstanceError::InvalidRequest { id: self.id.clone(), reason: reason.to_string() };
        if self.scheduled_pickup >= self.scheduled_dropoff {
            return Err(bad("scheduled pickup is not before scheduled dropoff"));
        }
        let day = 0..MINUTES_PER_DAY;
        if !day.contains(&self.scheduled_pickup) || !day.contains(&self.scheduled_dropoff) {
            return Err(bad("scheduled time outside the day"));
        }
        if self.pickup_location == self.dropoff_location {
            return Err(bad("pickup and dropoff locations coincide"));
        }
        if !self.pickup_location.is_valid() || !self.dropoff_location.is_valid() {
            return Err(bad("invalid coordinate"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fleet {
    /// One entry per vehicle; vehicle `k` (1-based in row names) has capacity `capacities[k-1]`.
    pub capacities: Vec<u32>,
    pub depot: GeoPoint,
}

impl Fleet {
    pub fn uniform(count: usize, capacity: u32, depot: GeoPoint) -> Self {
        Fleet { capacities: vec![capacity; count], depot }
    }

    pub fn count(&self) -> usize {
        self.capacities.len()
    }

    pub fn max_capacity(&self) -> u32 {
        self.capacities.iter().copied().max().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<(), InstanceError> {
        if self.capacities.is_empty() {
            return Err(InstanceError::InvalidFleet("no vehicles".into()));
        }
        if self.capacities.contains(&0) {
            return Err(InstanceError::InvalidFleet("vehicle with zero capacity".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    OriginDepot,
    Pickup,
    Dropoff,
    DestinationDepot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Operator,
    User,
}

impl std::str::FromStr for ModelKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "om" | "operator" => Ok(ModelKind::Operator),
            "um" | "user" => Ok(ModelKind::User),
            other => Err(format!("unknown model kind `{other}` (expected om or um)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeAttributes {
    pub index: usize,
    pub kind: NodeKind,
    /// +1 at pickups, -1 at dropoffs, 0 at depots.
    pub load: i32,
    /// Boarding or alighting time in minutes.
    pub service: i64,
    pub earliest: i64,
    pub latest: i64,
    pub scheduled: Option<i64>,
    pub in_h: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Arc {
    pub from: usize,
    pub to: usize,
    pub time: Tenths,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceConfig {
    /// Time-window length `L` in minutes.
    pub window: i64,
    pub boarding: i64,
    pub alighting: i64,
    /// Lateness threshold `T` in minutes.
    pub lateness_threshold: i64,
    /// Penalty weight on each late node.
    pub beta: f64,
    pub model_kind: ModelKind,
}

impl Default for InstanceConfig {
    fn default() -> Self {
        InstanceConfig {
            window: 30,
            boarding: 7,
            alighting: 5,
            lateness_threshold: 15,
            beta: 10_000.0,
            model_kind: ModelKind::Operator,
        }
    }
}

impl InstanceConfig {
    pub fn validate(&self) -> Result<(), InstanceError> {
        if self.window < 0 || self.boarding < 0 || self.alighting < 0 {
            return Err(InstanceError::InvalidConfig("window and service times must be non-negative".into()));
        }
        if self.lateness_threshold < 0 {
            return Err(InstanceError::InvalidConfig("negative lateness threshold".into()));
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(InstanceError::InvalidConfig("penalty weight must be finite and >= 0".into()));
        }
        Ok(())
    }
}

/// A validated instance on the graph `G = (N, A)` with `N = {0, .., 2n+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub n: usize,
    pub nodes: Vec<NodeAttributes>,
    /// Sorted by `(from, to)`.
    pub arcs: Vec<Arc>,
    pub fleet: Fleet,
    pub model_kind: ModelKind,
    /// `L_i` per node (0 at depots).
    pub window_length: Vec<i64>,
    pub lateness_threshold: i64,
    pub beta: f64,
    arc_time: Vec<Option<Tenths>>,
}

impl Instance {
    pub fn node_count(&self) -> usize {
        2 * self.n + 2
    }
    pub fn origin_depot(&self) -> usize {
        0
    }
    pub fn destination_depot(&self) -> usize {
        2 * self.n + 1
    }
    pub fn pickups(&self) -> std::ops::RangeInclusive<usize> {
        1..=self.n
    }
    pub fn dropoffs(&self) -> std::ops::RangeInclusive<usize> {
        self.n + 1..=2 * self.n
    }
    /// Interior nodes `N⁰`.
    pub fn interior(&self) -> std::ops::RangeInclusive<usize> {
        1..=2 * self.n
    }
    pub fn vehicles(&self) -> usize {
        self.fleet.count()
    }
    pub fn pair_of(&self, pickup: usize) -> usize {
        pickup + self.n
    }
    /// Nodes of `H`, ascending.
    pub fn h_nodes(&self) -> Vec<usize> {
        self.nodes.iter().filter(|v| v.in_h).map(|v| v.index).collect()
    }

    /// Travel time of arc `(i, j)`, `None` if the arc is not in `A`.
    pub fn travel(&self, i: usize, j: usize) -> Option<Tenths> {
        let nn = self.node_count();
        if i >= nn || j >= nn {
            return None;
        }
        self.arc_time[i * nn + j]
    }

    pub fn has_arc(&self, i: usize, j: usize) -> bool {
        self.travel(i, j).is_some()
    }

    /// Assembles an instance from fully specified nodes and arcs, checking every
    /// structural invariant. Arcs are re-sorted canonically.
    pub fn from_parts(
        n: usize,
        nodes: Vec<NodeAttributes>,
        mut arcs: Vec<Arc>,
        fleet: Fleet,
        model_kind: ModelKind,
        window_length: Vec<i64>,
        lateness_threshold: i64,
        beta: f64,
    ) -> Result<Instance, InstanceError> {
        let nn = 2 * n + 2;
        if nodes.len() != nn || window_length.len() != nn {
            return Err(InstanceError::Malformed(format!("expected {nn} nodes, got {}", nodes.len())));
        }
        fleet.validate()?;
        arcs.sort_by_key(|a| (a.from, a.to));
        let mut arc_time = vec![None; nn * nn];
        for a in &arcs {
            if a.from >= nn || a.to >= nn {
                return Err(InstanceError::Malformed(format!("arc ({}, {}) out of range", a.from, a.to)));
            }
            if a.time.0 < 0 {
                return Err(InstanceError::NegativeTravel { from: a.from, to: a.to, minutes: a.time.minutes() });
            }
            if arc_time[a.from * nn + a.to].replace(a.time).is_some() {
                return Err(InstanceError::Malformed(format!("duplicate arc ({}, {})", a.from, a.to)));
            }
        }
        let inst = Instance { n, nodes, arcs, fleet, model_kind, window_length, lateness_threshold, beta, arc_time };
        inst.check_invariants()?;
        Ok(inst)
    }

    fn check_invariants(&self) -> Result<(), InstanceError> {
        let n = self.n;
        let nn = self.node_count();
        let malformed = |m: String| Err(InstanceError::Malformed(m));
        for (i, v) in self.nodes.iter().enumerate() {
            if v.index != i {
                return malformed(format!("node at position {i} has index {}", v.index));
            }
            let (kind, load) = match i {
                0 => (NodeKind::OriginDepot, 0),
                i if i == nn - 1 => (NodeKind::DestinationDepot, 0),
                i if i <= n => (NodeKind::Pickup, 1),
                _ => (NodeKind::Dropoff, -1),
            };
            if v.kind != kind || v.load != load {
                return malformed(format!("node {i} has kind {:?} / load {}", v.kind, v.load));
            }
            if matches!(kind, NodeKind::OriginDepot | NodeKind::DestinationDepot) && v.service != 0 {
                return malformed(format!("depot node {i} has non-zero service time"));
            }
            if v.service < 0 {
                return malformed(format!("node {i} has negative service time"));
            }
            if v.earliest > v.latest || v.earliest < 0 || v.latest > MINUTES_PER_DAY {
                return Err(InstanceError::InfeasibleWindow { node: i, earliest: v.earliest, latest: v.latest });
            }
        }
        let total: i32 = self.nodes.iter().map(|v| v.load).sum();
        debug_assert_eq!(total, 0);
        for i in 0..nn {
            for j in 0..nn {
                if self.arc_time[i * nn + j].is_some() != expected_arc(n, i, j) {
                    return malformed(format!("arc set mismatch at ({i}, {j})"));
                }
            }
        }
        if self.travel(0, nn - 1) != Some(Tenths::ZERO) {
            return malformed("depot-to-depot arc must have zero travel time".into());
        }
        Ok(())
    }

    /// Canonical, deterministic JSON encoding.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&InstanceJson::from(self)).expect("instance serializes")
    }

    pub fn from_json(s: &str) -> Result<Instance, InstanceError> {
        let raw: InstanceJson = serde_json::from_str(s).map_err(|e| InstanceError::Malformed(e.to_string()))?;
        raw.into_instance()
    }

    /// The same requests under a different model's time windows.
    pub fn with_model_kind(&self, kind: ModelKind) -> Result<Instance, InstanceError> {
        let mut inst = self.clone();
        inst.model_kind = kind;
        set_time_windows(inst)
    }
}

/// Membership in `A = {(i,j): i,j ∈ N⁰, i≠j} ∪ {(0,j): j ∈ P} ∪ {(i,2n+1): i ∈ D} ∪ {(0,2n+1)}`.
pub fn expected_arc(n: usize, i: usize, j: usize) -> bool {
    let end = 2 * n + 1;
    let interior = |v: usize| (1..=2 * n).contains(&v);
    (interior(i) && interior(j) && i != j)
        || (i == 0 && (1..=n).contains(&j))
        || ((n + 1..=2 * n).contains(&i) && j == end)
        || (i == 0 && j == end)
}

/// Node locations in node order: depot, pickups, dropoffs, depot.
pub fn node_locations(requests: &[TripRequest], fleet: &Fleet) -> Vec<GeoPoint> {
    let mut locs = Vec::with_capacity(2 * requests.len() + 2);
    locs.push(fleet.depot);
    locs.extend(requests.iter().map(|r| r.pickup_location));
    locs.extend(requests.iter().map(|r| r.dropoff_location));
    locs.push(fleet.depot);
    locs
}

/// Builds an instance, resolving travel times between node locations through `provider`.
pub fn build_instance(
    requests: &[TripRequest],
    fleet: &Fleet,
    config: &InstanceConfig,
    provider: &mut dyn TravelTimeProvider,
) -> Result<Instance, InstanceError> {
    validate_inputs(requests, fleet, config)?;
    let locs = node_locations(requests, fleet);
    let minutes = resolve_travel_times(&locs, provider)?;
    build_instance_with_matrix(requests, fleet, config, &minutes)
}

fn validate_inputs(requests: &[TripRequest], fleet: &Fleet, config: &InstanceConfig) -> Result<(), InstanceError> {
    let first = requests.first().ok_or(InstanceError::EmptyPeriod)?;
    for r in requests {
        r.validate()?;
        if r.period != first.period {
            return Err(InstanceError::MixedPeriods(first.period, r.period));
        }
    }
    fleet.validate()?;
    config.validate()
}

/// Builds an instance from a node-indexed travel matrix in minutes
/// (`(2n+2) x (2n+2)`, node order as in [`node_locations`]).
pub fn build_instance_with_matrix(
    requests: &[TripRequest],
    fleet: &Fleet,
    config: &InstanceConfig,
    minutes: &[Vec<f64>],
) -> Result<Instance, InstanceError> {
    validate_inputs(requests, fleet, config)?;
    let n = requests.len();
    let nn = 2 * n + 2;
    if minutes.len() != nn || minutes.iter().any(|row| row.len() != nn) {
        return Err(InstanceError::MatrixShape { got: minutes.len(), expected: nn });
    }

    let mut nodes = Vec::with_capacity(nn);
    let depot = |index, kind| NodeAttributes {
        index,
        kind,
        load: 0,
        service: 0,
        earliest: 0,
        latest: MINUTES_PER_DAY,
        scheduled: None,
        in_h: false,
    };
    nodes.push(depot(0, NodeKind::OriginDepot));
    for (i, r) in requests.iter().enumerate() {
        nodes.push(NodeAttributes {
            index: 1 + i,
            kind: NodeKind::Pickup,
            load: 1,
            service: config.boarding,
            earliest: 0,
            latest: MINUTES_PER_DAY,
            scheduled: Some(r.scheduled_pickup),
            in_h: r.direction == Direction::Outbound,
        });
    }
    for (i, r) in requests.iter().enumerate() {
        nodes.push(NodeAttributes {
            index: 1 + n + i,
            kind: NodeKind::Dropoff,
            load: -1,
            service: config.alighting,
            earliest: 0,
            latest: MINUTES_PER_DAY,
            scheduled: Some(r.scheduled_dropoff),
            in_h: r.direction == Direction::Inbound,
        });
    }
    nodes.push(depot(nn - 1, NodeKind::DestinationDepot));

    let mut arcs = Vec::new();
    for i in 0..nn {
        for j in 0..nn {
            if !expected_arc(n, i, j) {
                continue;
            }
            let time = if i == 0 && j == nn - 1 {
                Tenths::ZERO
            } else {
                let m = minutes[i][j];
                if !(m.is_finite() && m >= 0.0) {
                    return Err(InstanceError::NegativeTravel { from: i, to: j, minutes: m });
                }
                Tenths::from_minutes_f64(m)
            };
            arcs.push(Arc { from: i, to: j, time });
        }
    }

    let mut window_length = vec![config.window; nn];
    window_length[0] = 0;
    window_length[nn - 1] = 0;
    let inst = Instance::from_parts(
        n,
        nodes,
        arcs,
        fleet.clone(),
        config.model_kind,
        window_length,
        config.lateness_threshold,
        config.beta,
    )?;
    set_time_windows(inst)
}

/// Sets `[e_i, l_i]` for every node according to the instance's model kind.
///
/// Operator model: nodes in `H` get `[s - L, s]` (never late), other interior
/// nodes `[s - ⌊L/2⌋, s + ⌈L/2⌉]`. User model: `H` nodes are unconstrained
/// (`[0, 1440]`), the rest as in the operator model. Depots are `[0, 1440]`.
/// Windows are clipped to the day.
pub fn set_time_windows(mut inst: Instance) -> Result<Instance, InstanceError> {
    let kind = inst.model_kind;
    for v in inst.nodes.iter_mut() {
        let (e, l) = match v.kind {
            NodeKind::OriginDepot | NodeKind::DestinationDepot => (0, MINUTES_PER_DAY),
            NodeKind::Pickup | NodeKind::Dropoff => {
                let s = v.scheduled.ok_or(InstanceError::MissingSchedule(v.index))?;
                let len = inst.window_length[v.index];
                match (v.in_h, kind) {
                    (true, ModelKind::User) => (0, MINUTES_PER_DAY),
                    (true, ModelKind::Operator) => (s - len, s),
                    (false, _) => (s - len / 2, s + (len - len / 2)),
                }
            }
        };
        v.earliest = e.clamp(0, MINUTES_PER_DAY);
        v.latest = l.clamp(0, MINUTES_PER_DAY);
        if v.earliest > v.latest {
            return Err(InstanceError::InfeasibleWindow { node: v.index, earliest: v.earliest, latest: v.latest });
        }
    }
    Ok(inst)
}

#[cfg(test)]
mod tests;
