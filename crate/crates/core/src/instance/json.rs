use super::*;

/// Canonical on-disk form of an [`Instance`]. Field order is fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceJson {
    pub n: usize,
    pub model_kind: ModelKind,
    pub nodes: Vec<NodeJson>,
    /// `[i, j, t_tenths]`
    pub arcs: Vec<[i64; 3]>,
    pub fleet: FleetJson,
    pub params: ParamsJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeJson {
    pub index: usize,
    pub kind: NodeKind,
    pub q: i32,
    pub d: i64,
    pub e: i64,
    pub l: i64,
    pub s: Option<i64>,
    #[serde(rename = "in_H")]
    pub in_h: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FleetJson {
    pub count: usize,
    pub capacities: Vec<u32>,
    pub depot: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsJson {
    #[serde(rename = "L")]
    pub window: i64,
    #[serde(rename = "T")]
    pub lateness_threshold: i64,
    pub beta: f64,
}

impl From<&Instance> for InstanceJson {
    fn from(inst: &Instance) -> Self {
        InstanceJson {
            n: inst.n,
            model_kind: inst.model_kind,
            nodes: inst
                .nodes
                .iter()
                .map(|v| NodeJson {
                    index: v.index,
                    kind: v.kind,
                    q: v.load,
                    d: v.service,
                    e: v.earliest,
                    l: v.latest,
                    s: v.scheduled,
                    in_h: v.in_h,
                })
                .collect(),
            arcs: inst.arcs.iter().map(|a| [a.from as i64, a.to as i64, a.time.0]).collect(),
            fleet: FleetJson {
                count: inst.fleet.count(),
                capacities: inst.fleet.capacities.clone(),
                depot: [inst.fleet.depot.lat, inst.fleet.depot.lon],
            },
            params: ParamsJson {
                window: inst.window_length.get(1).copied().unwrap_or(0),
                lateness_threshold: inst.lateness_threshold,
                beta: inst.beta,
            },
        }
    }
}

impl InstanceJson {
    pub fn into_instance(self) -> Result<Instance, InstanceError> {
        if self.fleet.count != self.fleet.capacities.len() {
            return Err(InstanceError::Malformed(format!(
                "fleet count {} but {} capacities",
                self.fleet.count,
                self.fleet.capacities.len()
            )));
        }
        let nn = 2 * self.n + 2;
        let nodes = self
            .nodes
            .into_iter()
            .map(|v| NodeAttributes {
                index: v.index,
                kind: v.kind,
                load: v.q,
                service: v.d,
                earliest: v.e,
                latest: v.l,
                scheduled: v.s,
                in_h: v.in_h,
            })
            .collect();
        let arcs = self
            .arcs
            .into_iter()
            .map(|[i, j, t]| {
                if i < 0 || j < 0 {
                    return Err(InstanceError::Malformed(format!("negative node index in arc ({i}, {j})")));
                }
                Ok(Arc { from: i as usize, to: j as usize, time: Tenths(t) })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut window_length = vec![self.params.window; nn];
        if nn >= 2 {
            window_length[0] = 0;
            window_length[nn - 1] = 0;
        }
        Instance::from_parts(
            self.n,
            nodes,
            arcs,
            Fleet { capacities: self.fleet.capacities, depot: GeoPoint::new(self.fleet.depot[0], self.fleet.depot[1]) },
            self.model_kind,
            window_length,
            self.params.lateness_threshold,
            self.params.beta,
        )
    }
}
