//! User- and control-plane routing over a [`Topology`] and end-to-end latency
//! accounting.
//!
//! Routes are fewest-hop paths over the physical interfaces that carry the
//! plane in question. Tactile devices are only ever path endpoints. The
//! network domain between the ingress and egress A hops is charged a single
//! core-transit delay, split evenly over the A hops of the path.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::io;

use crate::arch::{EntityId, EntityKind, InterfaceKind, Scenario, Topology};
use crate::grades::{grade_spec, Grade};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RouteError {
    #[error("unknown entity `{0}`")]
    UnknownEntity(EntityId),
    #[error("`{0}` is not a tactile device")]
    NotADevice(EntityId),
    #[error("no {plane:?}-plane path from `{from}` to `{to}`")]
    NoPath { plane: Plane, from: EntityId, to: EntityId },
    #[error("topology has no control-plane entity")]
    NoControlPlaneEntity,
    #[error("invalid stack configuration: {0}")]
    BadConfig(String),
    #[error("payload size must be positive")]
    EmptyPayload,
    #[error("end-to-end budget must be positive, got {0}")]
    BadBudget(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Plane {
    User,
    Control,
}

impl Plane {
    pub fn as_str(self) -> &'static str {
        match self {
            Plane::User => "user",
            Plane::Control => "control",
        }
    }

    fn carries(self, interface: InterfaceKind) -> bool {
        use InterfaceKind::*;
        match self {
            Plane::User => matches!(interface, T | A | N | N2),
            Plane::Control => matches!(interface, T | A | N | N1 | N3),
        }
    }
}

/// Layer a tactile device attaches at over the T interface.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Attachment {
    /// Application layer directly over Layer 2.
    Layer2,
    Layer3,
}

/// Protocol layer a PDU originates at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OriginLayer {
    L2,
    L3,
    /// Application layer.
    L5,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pdu {
    pub id: u64,
    pub plane: Plane,
    pub payload_bits: u64,
    pub created_at: f64,
    pub origin: OriginLayer,
}

impl Pdu {
    pub fn new(
        id: u64,
        plane: Plane,
        payload_bits: u64,
        created_at: f64,
        origin: OriginLayer,
    ) -> Result<Self, RouteError> {
        if payload_bits == 0 {
            return Err(RouteError::EmptyPayload);
        }
        Ok(Self { id, plane, payload_bits, created_at, origin })
    }

    /// Time the PDU reaches the end of `path`.
    pub fn arrival_time(&self, path: &[HopRecord], cfg: &StackConfig) -> f64 {
        self.created_at + accumulate_latency(path, cfg)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StackConfig {
    pub t_attachment: Attachment,
    /// Fixed processing delay per entity, seconds. Missing entities cost nothing.
    pub processing: BTreeMap<EntityId, f64>,
    /// Link delay per interface kind, seconds.
    pub link_delay: BTreeMap<InterfaceKind, f64>,
    /// Extra per-hop cost of a device attaching at Layer 2 / Layer 3.
    pub layer2_overhead: f64,
    pub layer3_overhead: f64,
    /// Delay of the network domain between the ingress and egress A hops.
    pub core_transit: f64,
}

impl Default for StackConfig {
    fn default() -> Self {
        use InterfaceKind::*;
        let link_delay = [(T, 0.1e-3), (A, 0.25e-3), (N, 0.05e-3), (N1, 0.05e-3), (N2, 0.05e-3), (N3, 0.05e-3)]
            .into_iter()
            .collect();
        Self {
            t_attachment: Attachment::Layer3,
            processing: BTreeMap::new(),
            link_delay,
            layer2_overhead: 0.01e-3,
            layer3_overhead: 0.05e-3,
            core_transit: 0.5e-3,
        }
    }
}

impl StackConfig {
    /// Zero delays everywhere; convenient base for hand-built expectations.
    pub fn zero() -> Self {
        Self {
            t_attachment: Attachment::Layer3,
            processing: BTreeMap::new(),
            link_delay: BTreeMap::new(),
            layer2_overhead: 0.0,
            layer3_overhead: 0.0,
            core_transit: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), RouteError> {
        let bad = |what: String, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(RouteError::BadConfig(format!("{what} = {v}")))
            }
        };
        for (id, &d) in &self.processing {
            bad(format!("processing[{id}]"), d)?;
        }
        for (k, &d) in &self.link_delay {
            bad(format!("link_delay[{k}]"), d)?;
        }
        bad("layer2_overhead".into(), self.layer2_overhead)?;
        bad("layer3_overhead".into(), self.layer3_overhead)?;
        bad("core_transit".into(), self.core_transit)
    }

    fn attachment_overhead(&self, attachment: Attachment) -> f64 {
        match attachment {
            Attachment::Layer2 => self.layer2_overhead,
            Attachment::Layer3 => self.layer3_overhead,
        }
    }

    fn processing_of(&self, id: &EntityId) -> f64 {
        self.processing.get(id).copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HopRecord {
    pub from: EntityId,
    pub to: EntityId,
    pub interface: InterfaceKind,
    pub plane: Plane,
    pub delay: f64,
}

/// Fewest-hop path from `src` to the first entity satisfying `is_target`.
/// Neighbors are explored in link declaration order, so ties resolve deterministically.
fn shortest_path(
    t: &Topology,
    src: &EntityId,
    plane: Plane,
    is_target: impl Fn(&EntityId) -> bool,
) -> Option<Vec<(EntityId, EntityId, InterfaceKind)>> {
    let mut prev: HashMap<EntityId, (EntityId, InterfaceKind)> = HashMap::new();
    let mut queue = VecDeque::from([src.clone()]);
    let mut found = None;
    while let Some(node) = queue.pop_front() {
        if &node != src && is_target(&node) {
            found = Some(node);
            break;
        }
        // Devices terminate paths; they never relay.
        if &node != src && t.entity(&node).is_some_and(|e| e.kind.is_device()) {
            continue;
        }
        for link in t.links_of(&node) {
            if !plane.carries(link.interface) {
                continue;
            }
            let Some(next) = link.other(&node) else { continue };
            if next == src || prev.contains_key(next) {
                continue;
            }
            prev.insert(next.clone(), (node.clone(), link.interface));
            queue.push_back(next.clone());
        }
    }
    let mut node = found?;
    let mut hops = Vec::new();
    while &node != src {
        let (from, interface) = prev[&node].clone();
        hops.push((from.clone(), node, interface));
        node = from;
    }
    hops.reverse();
    Some(hops)
}

fn hop_records(
    t: &Topology,
    raw: Vec<(EntityId, EntityId, InterfaceKind)>,
    plane: Plane,
    cfg: &StackConfig,
) -> Vec<HopRecord> {
    let a_hops = raw.iter().filter(|(_, _, k)| *k == InterfaceKind::A).count();
    let crosses_core = plane == Plane::User && a_hops >= 2;
    let is_device = |id: &EntityId| t.entity(id).is_some_and(|e| e.kind.is_device());
    raw.into_iter()
        .map(|(from, to, interface)| {
            let mut delay = cfg.link_delay.get(&interface).copied().unwrap_or(0.0);
            if is_device(&from) || is_device(&to) {
                let attachment = match (interface, plane) {
                    // Control plane runs Layer 3 on both T and A; Scenario-2 devices attach over A at Layer 3.
                    (InterfaceKind::T, Plane::User) => cfg.t_attachment,
                    _ => Attachment::Layer3,
                };
                delay += cfg.attachment_overhead(attachment);
            }
            if crosses_core && interface == InterfaceKind::A {
                delay += cfg.core_transit / a_hops as f64;
            }
            HopRecord { from, to, interface, plane, delay }
        })
        .collect()
}

fn require_device(t: &Topology, id: &EntityId) -> Result<(), RouteError> {
    match t.entity(id) {
        None => Err(RouteError::UnknownEntity(id.clone())),
        Some(e) if !e.kind.is_device() => Err(RouteError::NotADevice(id.clone())),
        Some(_) => Ok(()),
    }
}

/// User-plane path between two tactile devices.
///
/// Scenario 1 yields `T, A, .., A, T` through the edge gateways; Scenario 2
/// starts with the device's A hop into the network-side gateway. Devices
/// joined by a T link route peer-to-peer in one hop.
pub fn route_user_plane(
    t: &Topology,
    src: &EntityId,
    dst: &EntityId,
    cfg: &StackConfig,
) -> Result<Vec<HopRecord>, RouteError> {
    cfg.validate()?;
    require_device(t, src)?;
    require_device(t, dst)?;
    let raw = shortest_path(t, src, Plane::User, |n| n == dst).ok_or_else(|| RouteError::NoPath {
        plane: Plane::User,
        from: src.clone(),
        to: dst.clone(),
    })?;
    Ok(hop_records(t, raw, Plane::User, cfg))
}

/// Control-plane path from a tactile device to the nearest control-plane entity.
/// The final hop is N1 from the base station (Scenario 1) or the gateway (Scenario 2).
pub fn route_control_plane(t: &Topology, src: &EntityId, cfg: &StackConfig) -> Result<Vec<HopRecord>, RouteError> {
    cfg.validate()?;
    require_device(t, src)?;
    let is_cpe = |id: &EntityId| t.entity(id).is_some_and(|e| e.kind == EntityKind::ControlPlaneEntity);
    let Some(cpe) = t.entities().iter().find(|e| e.kind == EntityKind::ControlPlaneEntity) else {
        return Err(RouteError::NoControlPlaneEntity);
    };
    let raw = shortest_path(t, src, Plane::Control, is_cpe).ok_or_else(|| RouteError::NoPath {
        plane: Plane::Control,
        from: src.clone(),
        to: cpe.id.clone(),
    })?;
    Ok(hop_records(t, raw, Plane::Control, cfg))
}

/// Sum of hop delays plus the processing delay of every intermediate entity.
/// Path endpoints are not charged processing. An empty path costs nothing.
pub fn accumulate_latency(path: &[HopRecord], cfg: &StackConfig) -> f64 {
    let links: f64 = path.iter().map(|h| h.delay).sum();
    let intermediates: f64 = path.iter().skip(1).map(|h| cfg.processing_of(&h.from)).sum();
    links + intermediates
}

/// Latency share one interface may use out of an end-to-end budget.
pub fn interface_budget(e2e_budget: f64, grade: Grade) -> Result<f64, RouteError> {
    if !(e2e_budget > 0.0 && e2e_budget.is_finite()) {
        return Err(RouteError::BadBudget(e2e_budget));
    }
    Ok(grade_spec(grade).latency_fraction * e2e_budget)
}

/// Expected hop sequence shape for a scenario, for sanity checks and reports.
pub fn expected_user_plane_shape(scenario: Scenario) -> &'static [InterfaceKind] {
    match scenario {
        Scenario::One => &[InterfaceKind::T, InterfaceKind::A, InterfaceKind::A, InterfaceKind::T],
        Scenario::Two => &[InterfaceKind::A, InterfaceKind::A],
    }
}

/// Writes `from,to,interface,plane,delay_s` rows.
pub fn write_hops_csv<W: io::Write>(path: &[HopRecord], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["from", "to", "interface", "plane", "delay_s"])?;
    for h in path {
        w.write_record([h.from.as_str(), h.to.as_str(), h.interface.as_str(), h.plane.as_str(), &h.delay.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch::{DeviceRole, DomainTag, Entity, Link, LinkId};
    use approx::assert_abs_diff_eq;

    fn ent(id: &str, kind: EntityKind, domain: DomainTag) -> Entity {
        Entity { id: id.into(), kind, domain }
    }

    fn td(id: &str, domain: DomainTag) -> Entity {
        ent(id, EntityKind::TactileDevice { role: DeviceRole::HsiNode }, domain)
    }

    fn link(id: &str, interface: InterfaceKind, a: &str, b: &str) -> Link {
        Link { id: LinkId(id.into()), interface, a: a.into(), b: b.into() }
    }

    fn hop(delay: f64, from: &str, to: &str) -> HopRecord {
        HopRecord { from: from.into(), to: to.into(), interface: InterfaceKind::A, plane: Plane::User, delay }
    }

    fn scenario1() -> Topology {
        use DomainTag::*;
        Topology::new(
            Scenario::One,
            vec![
                td("td-a1", TactileEdgeA),
                td("td-a2", TactileEdgeA),
                ent("gnc-a", EntityKind::GatewayNetworkController, TactileEdgeA),
                td("td-b1", TactileEdgeB),
                td("td-b2", TactileEdgeB),
                ent("gnc-b", EntityKind::GatewayNetworkController, TactileEdgeB),
                ent("bs", EntityKind::BaseStation, NetworkDomain),
                ent("cpe", EntityKind::ControlPlaneEntity, NetworkDomain),
            ],
            vec![
                link("t-a1", InterfaceKind::T, "td-a1", "gnc-a"),
                link("t-a2", InterfaceKind::T, "td-a2", "gnc-a"),
                link("t-b1", InterfaceKind::T, "td-b1", "gnc-b"),
                link("t-b2", InterfaceKind::T, "td-b2", "gnc-b"),
                link("a-a", InterfaceKind::A, "gnc-a", "bs"),
                link("a-b", InterfaceKind::A, "gnc-b", "bs"),
                link("n1", InterfaceKind::N1, "cpe", "bs"),
                link("p2p", InterfaceKind::T, "td-a1", "td-a2"),
            ],
        )
        .unwrap()
    }

    fn kinds(path: &[HopRecord]) -> Vec<InterfaceKind> {
        path.iter().map(|h| h.interface).collect()
    }

    #[test]
    fn scenario1_user_plane_is_t_a_a_t() {
        let t = scenario1();
        let path = route_user_plane(&t, &"td-a1".into(), &"td-b2".into(), &StackConfig::default()).unwrap();
        assert_eq!(kinds(&path), expected_user_plane_shape(Scenario::One));
        let nodes: Vec<&str> = path.iter().map(|h| h.to.as_str()).collect();
        assert_eq!(nodes, ["gnc-a", "bs", "gnc-b", "td-b2"]);
    }

    #[test]
    fn same_edge_peer_to_peer_is_single_hop() {
        let t = scenario1();
        let path = route_user_plane(&t, &"td-a1".into(), &"td-a2".into(), &StackConfig::default()).unwrap();
        assert_eq!(kinds(&path), [InterfaceKind::T]);
    }

    #[test]
    fn control_plane_ends_with_n1_from_base_station() {
        let t = scenario1();
        let path = route_control_plane(&t, &"td-b1".into(), &StackConfig::default()).unwrap();
        let last = path.last().unwrap();
        assert_eq!((last.interface, last.from.as_str(), last.to.as_str()), (InterfaceKind::N1, "bs", "cpe"));
        assert!(path.iter().all(|h| h.plane == Plane::Control));
    }

    #[test]
    fn missing_cpe_and_non_devices_are_errors() {
        let t = scenario1();
        let no_cpe = Topology::new(
            t.scenario(),
            t.entities().iter().filter(|e| e.id.as_str() != "cpe").cloned().collect(),
            t.links().iter().filter(|l| l.id.0 != "n1").cloned().collect(),
        )
        .unwrap();
        assert_eq!(
            route_control_plane(&no_cpe, &"td-a1".into(), &StackConfig::default()),
            Err(RouteError::NoControlPlaneEntity)
        );
        assert_eq!(
            route_user_plane(&t, &"gnc-a".into(), &"td-b1".into(), &StackConfig::default()),
            Err(RouteError::NotADevice("gnc-a".into()))
        );
    }

    #[test]
    fn disconnected_devices_have_no_path() {
        let t = scenario1();
        let cut = Topology::new(
            t.scenario(),
            t.entities().to_vec(),
            t.links().iter().filter(|l| l.id.0 != "a-b").cloned().collect(),
        )
        .unwrap();
        assert!(matches!(
            route_user_plane(&cut, &"td-a1".into(), &"td-b1".into(), &StackConfig::default()),
            Err(RouteError::NoPath { .. })
        ));
    }

    #[test]
    fn accumulate_examples() {
        let cfg = StackConfig::zero();
        assert_abs_diff_eq!(
            accumulate_latency(&[hop(0.4e-3, "x", "y"), hop(0.6e-3, "y", "z")], &cfg),
            1.0e-3,
            epsilon = 1e-15
        );

        let mut cfg = StackConfig::zero();
        cfg.processing.insert("x".into(), 0.1e-3);
        assert_eq!(accumulate_latency(&[hop(0.5e-3, "x", "y")], &cfg), 0.5e-3);

        let mut cfg = StackConfig::zero();
        for n in ["b", "c", "d"] {
            cfg.processing.insert(n.into(), 0.2e-3);
        }
        let path = [hop(0.5e-3, "a", "b"), hop(0.5e-3, "b", "c"), hop(0.5e-3, "c", "d"), hop(0.5e-3, "d", "e")];
        assert_abs_diff_eq!(accumulate_latency(&path, &cfg), 2.6e-3, epsilon = 1e-15);
    }

    #[test]
    fn layer2_attachment_is_cheaper() {
        let t = scenario1();
        let mut cfg = StackConfig::default();
        let l3 = accumulate_latency(&route_user_plane(&t, &"td-a1".into(), &"td-b1".into(), &cfg).unwrap(), &cfg);
        cfg.t_attachment = Attachment::Layer2;
        let l2 = accumulate_latency(&route_user_plane(&t, &"td-a1".into(), &"td-b1".into(), &cfg).unwrap(), &cfg);
        assert_abs_diff_eq!(l3 - l2, 2.0 * (cfg.layer3_overhead - cfg.layer2_overhead), epsilon = 1e-15);
    }

    #[test]
    fn core_transit_charged_once() {
        let t = scenario1();
        let mut cfg = StackConfig::zero();
        cfg.core_transit = 1e-3;
        let path = route_user_plane(&t, &"td-a1".into(), &"td-b1".into(), &cfg).unwrap();
        assert_abs_diff_eq!(accumulate_latency(&path, &cfg), 1e-3, epsilon = 1e-15);
    }

    #[test]
    fn budgets() {
        assert_abs_diff_eq!(interface_budget(5e-3, Grade::Ultra).unwrap(), 0.5e-3, epsilon = 1e-15);
        assert_abs_diff_eq!(interface_budget(5e-3, Grade::Normal).unwrap(), 2.5e-3, epsilon = 1e-15);
        assert_abs_diff_eq!(interface_budget(10e-3, Grade::Ultra).unwrap(), 1e-3, epsilon = 1e-15);
        assert_eq!(interface_budget(0.0, Grade::Ultra), Err(RouteError::BadBudget(0.0)));
    }

    #[test]
    fn negative_delays_rejected() {
        let cfg = StackConfig { core_transit: -1.0, ..Default::default() };
        assert!(matches!(
            route_user_plane(&scenario1(), &"td-a1".into(), &"td-b1".into(), &cfg),
            Err(RouteError::BadConfig(_))
        ));
    }

    #[test]
    fn pdu_payload_must_be_positive() {
        assert_eq!(Pdu::new(1, Plane::User, 0, 0.0, OriginLayer::L5), Err(RouteError::EmptyPayload));
        let pdu = Pdu::new(1, Plane::User, 256, 1.0, OriginLayer::L5).unwrap();
        let cfg = StackConfig::zero();
        assert_eq!(pdu.arrival_time(&[hop(0.5, "a", "b")], &cfg), 1.5);
    }
}
