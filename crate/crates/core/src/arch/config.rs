//! TOML deployment description for topologies.
//!
//! ```toml
//! [topology]
//! scenario = 1
//!
//! [[topology.entity]]
//! id = "td-a1"
//! kind = "tactile-device"
//! role = "hsi-node"
//! domain = "edge-a"
//!
//! [[topology.link]]
//! id = "t-a1"
//! interface = "T"
//! a = "td-a1"
//! b = "gnc-a"
//! ```

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{
    Capability, DeviceRole, Entity, EntityKind, InterfaceKind, Link, LinkId, Scenario, Topology, TopologyError,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyConfig {
    pub scenario: i64,
    #[serde(default, rename = "entity")]
    pub entities: Vec<EntitySpec>,
    #[serde(default, rename = "link")]
    pub links: Vec<LinkSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntitySpec {
    pub id: String,
    pub kind: String,
    pub domain: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub role: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capabilities: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nmc: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dmc: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    pub id: String,
    pub interface: String,
    pub a: String,
    pub b: String,
}

#[derive(Deserialize)]
struct Document {
    topology: Option<TopologyConfig>,
}

#[derive(Serialize)]
struct DocumentOut<'a> {
    topology: &'a TopologyConfig,
}

fn entity_kind(spec: &EntitySpec) -> Result<EntityKind, TopologyError> {
    let bad = |message: &str| TopologyError::BadEntity { id: spec.id.clone(), message: message.to_owned() };
    if spec.role.is_some() && spec.kind != "tactile-device" {
        return Err(bad("`role` only applies to tactile devices"));
    }
    if spec.capabilities.is_some() && spec.kind != "support-engine" {
        return Err(bad("`capabilities` only applies to support engines"));
    }
    if (spec.nmc.is_some() || spec.dmc.is_some()) && spec.kind != "network-controller" {
        return Err(bad("`nmc`/`dmc` only apply to network controllers"));
    }
    Ok(match spec.kind.as_str() {
        "tactile-device" => {
            let role = spec.role.as_deref().ok_or_else(|| bad("tactile device needs a `role`"))?;
            let Ok(role) = role.parse::<DeviceRole>();
            EntityKind::TactileDevice { role }
        }
        "gateway-node" => EntityKind::GatewayNode,
        "network-controller" => {
            EntityKind::NetworkController { nmc: spec.nmc.unwrap_or(true), dmc: spec.dmc.unwrap_or(true) }
        }
        "gateway-network-controller" => EntityKind::GatewayNetworkController,
        "support-engine" => {
            // An empty capability set is a validation violation, not a parse error.
            let capabilities = spec
                .capabilities
                .iter()
                .flatten()
                .map(|c| c.parse::<Capability>())
                .collect::<Result<BTreeSet<_>, _>>()?;
            EntityKind::SupportEngine { capabilities }
        }
        "tactile-service-manager" => EntityKind::TactileServiceManager,
        "user-plane-entity" => EntityKind::UserPlaneEntity,
        "control-plane-entity" => EntityKind::ControlPlaneEntity,
        "base-station" => EntityKind::BaseStation,
        other => return Err(TopologyError::Unknown { what: "entity kind", value: other.to_owned() }),
    })
}

/// Builds a [`Topology`] from a parsed description. Resolves ids only; semantic
/// rules are checked by [`super::validate_topology`].
pub fn build_topology(config: &TopologyConfig) -> Result<Topology, TopologyError> {
    let scenario = Scenario::try_from(config.scenario)?;
    let entities = config
        .entities
        .iter()
        .map(|spec| Ok(Entity { id: spec.id.as_str().into(), kind: entity_kind(spec)?, domain: spec.domain.parse()? }))
        .collect::<Result<Vec<_>, TopologyError>>()?;
    let links = config
        .links
        .iter()
        .map(|spec| {
            Ok(Link {
                id: LinkId(spec.id.clone()),
                interface: spec.interface.parse::<InterfaceKind>()?,
                a: spec.a.as_str().into(),
                b: spec.b.as_str().into(),
            })
        })
        .collect::<Result<Vec<_>, TopologyError>>()?;
    Topology::new(scenario, entities, links)
}

/// Error from reading a description out of TOML text.
#[derive(Debug, thiserror::Error)]
pub enum ParseError {
    #[error("malformed description: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("description has no [topology] section")]
    MissingTopology,
    #[error(transparent)]
    Topology(#[from] TopologyError),
}

/// Parses a TOML document with a `[topology]` section. Other sections are ignored.
pub fn parse_topology(text: &str) -> Result<Topology, ParseError> {
    let doc: Document = toml::from_str(text)?;
    let config = doc.topology.ok_or(ParseError::MissingTopology)?;
    Ok(build_topology(&config)?)
}

impl From<&Topology> for TopologyConfig {
    fn from(t: &Topology) -> Self {
        let entities = t
            .entities()
            .iter()
            .map(|e| {
                let mut spec = EntitySpec {
                    id: e.id.0.clone(),
                    kind: e.kind.name().to_owned(),
                    domain: e.domain.as_str().to_owned(),
                    role: None,
                    capabilities: None,
                    nmc: None,
                    dmc: None,
                };
                match &e.kind {
                    EntityKind::TactileDevice { role } => spec.role = Some(role.label().to_owned()),
                    EntityKind::NetworkController { nmc, dmc } => {
                        spec.nmc = Some(*nmc);
                        spec.dmc = Some(*dmc);
                    }
                    EntityKind::SupportEngine { capabilities } => {
                        spec.capabilities = Some(capabilities.iter().map(|c| c.as_str().to_owned()).collect())
                    }
                    _ => {}
                }
                spec
            })
            .collect();
        let links = t
            .links()
            .iter()
            .map(|l| LinkSpec {
                id: l.id.0.clone(),
                interface: l.interface.as_str().to_owned(),
                a: l.a.0.clone(),
                b: l.b.0.clone(),
            })
            .collect();
        TopologyConfig { scenario: i64::from(t.scenario().number()), entities, links }
    }
}

/// Renders a topology as a `[topology]` TOML document accepted by [`parse_topology`].
pub fn serialize_topology(t: &Topology) -> String {
    let config = TopologyConfig::from(t);
    toml::to_string(&DocumentOut { topology: &config }).expect("topology config always serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[topology]
scenario = 1

[[topology.entity]]
id = "td-a1"
kind = "tactile-device"
role = "hsi-node"
domain = "edge-a"

[[topology.entity]]
id = "gnc-a"
kind = "gateway-network-controller"
domain = "edge-a"

[[topology.link]]
id = "t1"
interface = "T"
a = "td-a1"
b = "gnc-a"
"#;

    #[test]
    fn parses_minimal_document() {
        let t = parse_topology(MINIMAL).unwrap();
        assert_eq!(t.entities().len(), 2);
        assert_eq!(t.links()[0].interface, InterfaceKind::T);
        assert_eq!(t.scenario(), Scenario::One);
    }

    #[test]
    fn round_trips_through_text() {
        let t = parse_topology(MINIMAL).unwrap();
        let again = parse_topology(&serialize_topology(&t)).unwrap();
        assert_eq!(t, again);
    }

    #[test]
    fn role_on_non_device_is_rejected() {
        let text = MINIMAL
            .replace("kind = \"gateway-network-controller\"", "kind = \"gateway-network-controller\"\nrole = \"x\"");
        assert!(matches!(parse_topology(&text), Err(ParseError::Topology(TopologyError::BadEntity { .. }))));
    }

    #[test]
    fn unknown_kind_and_scenario() {
        let text = MINIMAL.replace("gateway-network-controller", "router");
        assert!(matches!(
            parse_topology(&text),
            Err(ParseError::Topology(TopologyError::Unknown { what: "entity kind", .. }))
        ));
        let text = MINIMAL.replace("scenario = 1", "scenario = 3");
        assert!(matches!(parse_topology(&text), Err(ParseError::Topology(TopologyError::BadScenario(3)))));
    }

    #[test]
    fn missing_section_and_bad_toml() {
        assert!(matches!(parse_topology("[simulation]\nseed = 1\n"), Err(ParseError::MissingTopology)));
        assert!(matches!(parse_topology("[topology\n"), Err(ParseError::Toml(_))));
    }
}
