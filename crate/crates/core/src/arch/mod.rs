//! Typed entity/interface graph of the tactile reference architecture.
//!
//! A [`Topology`] is a set of architectural entities, each tagged with the
//! domain it lives in (one of the two tactile edges or the network domain),
//! joined by links that carry a physical (A/T/O/S/N) or logical (L0..L3)
//! interface kind. Construction only resolves ids; the semantic rules live in
//! [`validate`].

mod config;
mod validate;

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

pub use config::{
    build_topology, parse_topology, serialize_topology, EntitySpec, LinkSpec, ParseError, TopologyConfig,
};
pub use validate::{classify_scenario, validate_topology, Rule, ScenarioClass, ValidationReport, Violation};

/// Errors raised while turning a deployment description into a [`Topology`].
#[derive(Debug, thiserror::Error, PartialEq)]
pub enum TopologyError {
    #[error("duplicate entity id `{0}`")]
    DuplicateEntity(String),
    #[error("duplicate link id `{0}`")]
    DuplicateLink(String),
    #[error("link `{link}` references unknown entity `{endpoint}`")]
    DanglingEndpoint { link: String, endpoint: String },
    #[error("unknown {what} `{value}`")]
    Unknown { what: &'static str, value: String },
    #[error("entity `{id}`: {message}")]
    BadEntity { id: String, message: String },
    #[error("scenario must be 1 or 2, got {0}")]
    BadScenario(i64),
    #[error("no gateway or network controller function in topology")]
    NoGatewayFunction,
}

/// Identifier of an architectural entity.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EntityId(pub String);

impl EntityId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for EntityId {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

/// Identifier of a link.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinkId(pub String);

impl fmt::Display for LinkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Placement variant of the gateway network controller.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    /// Gateway and controller functions live in the tactile edges.
    One,
    /// Gateway and controller functions live in the network domain.
    Two,
}

impl Scenario {
    pub fn number(self) -> u8 {
        match self {
            Scenario::One => 1,
            Scenario::Two => 2,
        }
    }
}

impl TryFrom<i64> for Scenario {
    type Error = TopologyError;

    fn try_from(n: i64) -> Result<Self, Self::Error> {
        match n {
            1 => Ok(Scenario::One),
            2 => Ok(Scenario::Two),
            other => Err(TopologyError::BadScenario(other)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DomainTag {
    TactileEdgeA,
    TactileEdgeB,
    NetworkDomain,
}

impl DomainTag {
    pub fn is_edge(self) -> bool {
        matches!(self, DomainTag::TactileEdgeA | DomainTag::TactileEdgeB)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DomainTag::TactileEdgeA => "edge-a",
            DomainTag::TactileEdgeB => "edge-b",
            DomainTag::NetworkDomain => "network",
        }
    }
}

impl FromStr for DomainTag {
    type Err = TopologyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "edge-a" => Ok(DomainTag::TactileEdgeA),
            "edge-b" => Ok(DomainTag::TactileEdgeB),
            "network" => Ok(DomainTag::NetworkDomain),
            _ => Err(TopologyError::Unknown { what: "domain", value: s.to_owned() }),
        }
    }
}

/// Role of a tactile device inside its edge.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum DeviceRole {
    SensorNode,
    ActuatorNode,
    HsiNode,
    ControllerNode,
    SensorGateway,
    ActuatorGateway,
    /// Anything else attached to an edge (audio/visual equipment, headsets).
    /// Carries no behavior of its own.
    Generic(String),
}

impl DeviceRole {
    pub fn label(&self) -> &str {
        match self {
            DeviceRole::SensorNode => "sensor-node",
            DeviceRole::ActuatorNode => "actuator-node",
            DeviceRole::HsiNode => "hsi-node",
            DeviceRole::ControllerNode => "controller-node",
            DeviceRole::SensorGateway => "sensor-gateway",
            DeviceRole::ActuatorGateway => "actuator-gateway",
            DeviceRole::Generic(label) => label,
        }
    }
}

impl FromStr for DeviceRole {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "sensor-node" => DeviceRole::SensorNode,
            "actuator-node" => DeviceRole::ActuatorNode,
            "hsi-node" => DeviceRole::HsiNode,
            "controller-node" => DeviceRole::ControllerNode,
            "sensor-gateway" => DeviceRole::SensorGateway,
            "actuator-gateway" => DeviceRole::ActuatorGateway,
            other => DeviceRole::Generic(other.to_owned()),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Capability {
    PredictiveIntelligence,
    ComputationOffload,
    Caching,
}

impl Capability {
    pub fn as_str(self) -> &'static str {
        match self {
            Capability::PredictiveIntelligence => "predictive-intelligence",
            Capability::ComputationOffload => "computation-offload",
            Capability::Caching => "caching",
        }
    }
}

impl FromStr for Capability {
    type Err = TopologyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "predictive-intelligence" => Ok(Capability::PredictiveIntelligence),
            "computation-offload" => Ok(Capability::ComputationOffload),
            "caching" => Ok(Capability::Caching),
            _ => Err(TopologyError::Unknown { what: "capability", value: s.to_owned() }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EntityKind {
    TactileDevice {
        role: DeviceRole,
    },
    GatewayNode,
    /// Standalone controller with its network/device management sub-controllers.
    NetworkController {
        nmc: bool,
        dmc: bool,
    },
    /// Gateway node and network controller co-located in one entity.
    GatewayNetworkController,
    SupportEngine {
        capabilities: BTreeSet<Capability>,
    },
    TactileServiceManager,
    UserPlaneEntity,
    ControlPlaneEntity,
    BaseStation,
}

impl EntityKind {
    pub fn name(&self) -> &'static str {
        match self {
            EntityKind::TactileDevice { .. } => "tactile-device",
            EntityKind::GatewayNode => "gateway-node",
            EntityKind::NetworkController { .. } => "network-controller",
            EntityKind::GatewayNetworkController => "gateway-network-controller",
            EntityKind::SupportEngine { .. } => "support-engine",
            EntityKind::TactileServiceManager => "tactile-service-manager",
            EntityKind::UserPlaneEntity => "user-plane-entity",
            EntityKind::ControlPlaneEntity => "control-plane-entity",
            EntityKind::BaseStation => "base-station",
        }
    }

    pub fn is_device(&self) -> bool {
        matches!(self, EntityKind::TactileDevice { .. })
    }

    /// Gateway and/or controller function: co-located or standalone.
    pub fn is_gateway_function(&self) -> bool {
        matches!(
            self,
            EntityKind::GatewayNode | EntityKind::NetworkController { .. } | EntityKind::GatewayNetworkController
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entity {
    pub id: EntityId,
    pub kind: EntityKind,
    pub domain: DomainTag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum InterfaceKind {
    A,
    T,
    O,
    S,
    /// Generic network-side interface between network domain entities.
    N,
    N1,
    N2,
    N3,
    L0,
    L1,
    L2,
    L3,
}

impl InterfaceKind {
    pub const ALL: [InterfaceKind; 12] = [
        InterfaceKind::A,
        InterfaceKind::T,
        InterfaceKind::O,
        InterfaceKind::S,
        InterfaceKind::N,
        InterfaceKind::N1,
        InterfaceKind::N2,
        InterfaceKind::N3,
        InterfaceKind::L0,
        InterfaceKind::L1,
        InterfaceKind::L2,
        InterfaceKind::L3,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            InterfaceKind::A => "A",
            InterfaceKind::T => "T",
            InterfaceKind::O => "O",
            InterfaceKind::S => "S",
            InterfaceKind::N => "N",
            InterfaceKind::N1 => "N1",
            InterfaceKind::N2 => "N2",
            InterfaceKind::N3 => "N3",
            InterfaceKind::L0 => "L0",
            InterfaceKind::L1 => "L1",
            InterfaceKind::L2 => "L2",
            InterfaceKind::L3 => "L3",
        }
    }

    pub fn is_logical(self) -> bool {
        matches!(self, InterfaceKind::L0 | InterfaceKind::L1 | InterfaceKind::L2 | InterfaceKind::L3)
    }
}

impl fmt::Display for InterfaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InterfaceKind {
    type Err = TopologyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        InterfaceKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| TopologyError::Unknown { what: "interface", value: s.to_owned() })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Link {
    pub id: LinkId,
    pub interface: InterfaceKind,
    pub a: EntityId,
    pub b: EntityId,
}

impl Link {
    /// The endpoint opposite to `end`, if `end` is one of the link's endpoints.
    pub fn other(&self, end: &EntityId) -> Option<&EntityId> {
        if &self.a == end {
            Some(&self.b)
        } else if &self.b == end {
            Some(&self.a)
        } else {
            None
        }
    }
}

/// Resolved entity/interface graph. Immutable once built.
#[derive(Debug, Clone)]
pub struct Topology {
    scenario: Scenario,
    entities: Vec<Entity>,
    links: Vec<Link>,
    index: HashMap<EntityId, usize>,
}

impl PartialEq for Topology {
    fn eq(&self, other: &Self) -> bool {
        self.scenario == other.scenario && self.entities == other.entities && self.links == other.links
    }
}

impl Topology {
    /// Resolves ids. Fails on duplicate ids and on links whose endpoints do not exist.
    pub fn new(scenario: Scenario, entities: Vec<Entity>, links: Vec<Link>) -> Result<Self, TopologyError> {
        let mut index = HashMap::with_capacity(entities.len());
        for (i, e) in entities.iter().enumerate() {
            if index.insert(e.id.clone(), i).is_some() {
                return Err(TopologyError::DuplicateEntity(e.id.0.clone()));
            }
        }
        let mut link_ids = BTreeSet::new();
        for l in &links {
            if !link_ids.insert(&l.id) {
                return Err(TopologyError::DuplicateLink(l.id.0.clone()));
            }
            for end in [&l.a, &l.b] {
                if !index.contains_key(end) {
                    return Err(TopologyError::DanglingEndpoint { link: l.id.0.clone(), endpoint: end.0.clone() });
                }
            }
        }
        Ok(Self { scenario, entities, links, index })
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn entities(&self) -> &[Entity] {
        &self.entities
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn entity(&self, id: &EntityId) -> Option<&Entity> {
        self.index.get(id).map(|&i| &self.entities[i])
    }

    /// Links touching `id`, in declaration order.
    pub fn links_of<'a>(&'a self, id: &'a EntityId) -> impl Iterator<Item = &'a Link> + 'a {
        self.links.iter().filter(move |l| &l.a == id || &l.b == id)
    }

    pub fn devices(&self) -> impl Iterator<Item = &Entity> {
        self.entities.iter().filter(|e| e.kind.is_device())
    }

    pub fn devices_in(&self, domain: DomainTag) -> usize {
        self.devices().filter(|e| e.domain == domain).count()
    }
}
