use std::fmt;

use super::{DomainTag, Entity, EntityKind, InterfaceKind, Link, Scenario, Topology, TopologyError};

/// Semantic rules checked by [`validate_topology`]. The string ids are stable
/// and are what reports and the CLI print.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rule {
    /// Gateway/controller functions sit in the edges (scenario 1) or the network domain (scenario 2).
    ScenarioPlacement,
    /// A co-located gateway network controller shares its domain with a standalone gateway or controller.
    ColocationDuplicate,
    /// Devices belong to an edge; service manager, UPE, CPE and base stations to the network domain.
    EntityDomain,
    /// Each tactile edge needs at least one tactile device.
    EdgeDevices,
    /// Support engine without any capability.
    SupportEngineCapabilities,
    AEndpoint,
    TEndpoint,
    OEndpoint,
    SEndpoint,
    NEndpoint,
    N1Endpoint,
    N2Endpoint,
    N3Endpoint,
    /// L0..L3 logical interface between the wrong entity kinds.
    LogicalEndpoint,
    /// Standalone gateway node or network controller without an L0 link to its counterpart.
    L0Missing,
}

impl Rule {
    pub const ALL: [Rule; 15] = [
        Rule::ScenarioPlacement,
        Rule::ColocationDuplicate,
        Rule::EntityDomain,
        Rule::EdgeDevices,
        Rule::SupportEngineCapabilities,
        Rule::AEndpoint,
        Rule::TEndpoint,
        Rule::OEndpoint,
        Rule::SEndpoint,
        Rule::NEndpoint,
        Rule::N1Endpoint,
        Rule::N2Endpoint,
        Rule::N3Endpoint,
        Rule::LogicalEndpoint,
        Rule::L0Missing,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Rule::ScenarioPlacement => "scenario-placement",
            Rule::ColocationDuplicate => "colocation-duplicate",
            Rule::EntityDomain => "entity-domain",
            Rule::EdgeDevices => "edge-devices",
            Rule::SupportEngineCapabilities => "se-capabilities",
            Rule::AEndpoint => "a-endpoint",
            Rule::TEndpoint => "t-endpoint",
            Rule::OEndpoint => "o-endpoint",
            Rule::SEndpoint => "s-endpoint",
            Rule::NEndpoint => "n-endpoint",
            Rule::N1Endpoint => "n1-endpoint",
            Rule::N2Endpoint => "n2-endpoint",
            Rule::N3Endpoint => "n3-endpoint",
            Rule::LogicalEndpoint => "l-endpoint",
            Rule::L0Missing => "l0-missing",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub rule: Rule,
    pub message: String,
    /// Offending entity and/or link ids.
    pub offenders: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }

    /// Distinct rule ids that fired, sorted.
    pub fn rules(&self) -> Vec<Rule> {
        let mut rules: Vec<Rule> = self.violations.iter().map(|v| v.rule).collect();
        rules.sort();
        rules.dedup();
        rules
    }

    fn push(&mut self, rule: Rule, message: String, offenders: Vec<String>) {
        self.violations.push(Violation { rule, message, offenders });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ok = {}", self.ok())?;
        writeln!(f, "violations = {}", self.violations.len())?;
        for v in &self.violations {
            writeln!(f, "{}\t{}\t[{}]", v.rule, v.message, v.offenders.join(","))?;
        }
        Ok(())
    }
}

/// Checks every architectural rule and reports all violations. Never fails.
pub fn validate_topology(t: &Topology) -> ValidationReport {
    let mut report = ValidationReport::default();
    check_entities(t, &mut report);
    for link in t.links() {
        check_link(t, link, &mut report);
    }
    check_l0(t, &mut report);
    report
}

fn check_entities(t: &Topology, report: &mut ValidationReport) {
    let wanted_gateway_domain = |d: DomainTag| match t.scenario() {
        Scenario::One => d.is_edge(),
        Scenario::Two => d == DomainTag::NetworkDomain,
    };
    for e in t.entities() {
        let id = vec![e.id.0.clone()];
        match &e.kind {
            EntityKind::TactileDevice { .. } if !e.domain.is_edge() => {
                report.push(Rule::EntityDomain, format!("tactile device `{}` must be in a tactile edge", e.id), id);
            }
            EntityKind::TactileServiceManager
            | EntityKind::UserPlaneEntity
            | EntityKind::ControlPlaneEntity
            | EntityKind::BaseStation
                if e.domain != DomainTag::NetworkDomain =>
            {
                report.push(
                    Rule::EntityDomain,
                    format!("{} `{}` must be in the network domain", e.kind.name(), e.id),
                    id,
                );
            }
            EntityKind::SupportEngine { capabilities } if capabilities.is_empty() => {
                report.push(
                    Rule::SupportEngineCapabilities,
                    format!("support engine `{}` declares no capability", e.id),
                    id,
                );
            }
            k if k.is_gateway_function() && !wanted_gateway_domain(e.domain) => {
                report.push(
                    Rule::ScenarioPlacement,
                    format!(
                        "{} `{}` is in {} but scenario {} places it in {}",
                        k.name(),
                        e.id,
                        e.domain.as_str(),
                        t.scenario().number(),
                        if t.scenario() == Scenario::One { "a tactile edge" } else { "the network domain" }
                    ),
                    id,
                );
            }
            _ => {}
        }
    }

    for domain in [DomainTag::TactileEdgeA, DomainTag::TactileEdgeB, DomainTag::NetworkDomain] {
        let in_domain = || t.entities().iter().filter(move |e| e.domain == domain);
        let colocated = in_domain().any(|e| e.kind == EntityKind::GatewayNetworkController);
        if colocated {
            let standalone: Vec<String> = in_domain()
                .filter(|e| matches!(e.kind, EntityKind::GatewayNode | EntityKind::NetworkController { .. }))
                .map(|e| e.id.0.clone())
                .collect();
            if !standalone.is_empty() {
                report.push(
                    Rule::ColocationDuplicate,
                    format!("{} has a gateway network controller and a standalone gateway/controller", domain.as_str()),
                    standalone,
                );
            }
        }
    }

    for edge in [DomainTag::TactileEdgeA, DomainTag::TactileEdgeB] {
        if t.devices_in(edge) == 0 {
            report.push(Rule::EdgeDevices, format!("{} has no tactile device", edge.as_str()), vec![]);
        }
    }
}

fn check_link(t: &Topology, link: &Link, report: &mut ValidationReport) {
    let (Some(a), Some(b)) = (t.entity(&link.a), t.entity(&link.b)) else {
        // Topology::new guarantees endpoints exist.
        return;
    };
    let scenario = t.scenario();
    let either = |p: &dyn Fn(&Entity, &Entity) -> bool| p(a, b) || p(b, a);
    let is = |e: &Entity, k: fn(&EntityKind) -> bool| k(&e.kind);

    let (rule, ok, expectation): (Rule, bool, &str) = match link.interface {
        InterfaceKind::A => {
            let ok = either(&|edge, net| {
                edge.domain.is_edge()
                    && net.domain == DomainTag::NetworkDomain
                    && match scenario {
                        Scenario::One => {
                            edge.kind.is_gateway_function()
                                && matches!(
                                    net.kind,
                                    EntityKind::BaseStation
                                        | EntityKind::UserPlaneEntity
                                        | EntityKind::ControlPlaneEntity
                                )
                        }
                        Scenario::Two => edge.kind.is_device() && net.kind.is_gateway_function(),
                    }
            });
            let expectation = match scenario {
                Scenario::One => "gateway function in an edge to a network domain entity",
                Scenario::Two => "tactile device to a gateway function in the network domain",
            };
            (Rule::AEndpoint, ok, expectation)
        }
        InterfaceKind::T => {
            let both_edge = a.domain.is_edge() && b.domain.is_edge();
            let peer = a.kind.is_device() && b.kind.is_device();
            let ok = both_edge
                && match scenario {
                    Scenario::One => {
                        peer || (a.domain == b.domain
                            && either(&|d, g| d.kind.is_device() && g.kind.is_gateway_function()))
                    }
                    Scenario::Two => peer,
                };
            (Rule::TEndpoint, ok, "tactile edge entities (device-device, or device-gateway in scenario 1)")
        }
        InterfaceKind::O => {
            let se = |e: &Entity| matches!(e.kind, EntityKind::SupportEngine { .. });
            (Rule::OEndpoint, se(a) != se(b), "exactly one support engine endpoint")
        }
        InterfaceKind::S => {
            let ok = either(&|m, g| m.kind == EntityKind::TactileServiceManager && g.kind.is_gateway_function());
            (Rule::SEndpoint, ok, "tactile service manager to a gateway function")
        }
        InterfaceKind::N => (
            Rule::NEndpoint,
            a.domain == DomainTag::NetworkDomain && b.domain == DomainTag::NetworkDomain,
            "two network domain entities",
        ),
        InterfaceKind::N1 | InterfaceKind::N2 => {
            let anchor = if link.interface == InterfaceKind::N1 {
                EntityKind::ControlPlaneEntity
            } else {
                EntityKind::UserPlaneEntity
            };
            let ok = either(&|p, other| {
                p.kind == anchor
                    && match scenario {
                        Scenario::One => other.kind == EntityKind::BaseStation,
                        Scenario::Two => other.kind.is_gateway_function(),
                    }
            });
            let (rule, expectation) = match (link.interface, scenario) {
                (InterfaceKind::N1, Scenario::One) => (Rule::N1Endpoint, "control-plane entity to a base station"),
                (InterfaceKind::N1, Scenario::Two) => (Rule::N1Endpoint, "control-plane entity to a gateway function"),
                (_, Scenario::One) => (Rule::N2Endpoint, "user-plane entity to a base station"),
                (_, Scenario::Two) => (Rule::N2Endpoint, "user-plane entity to a gateway function"),
            };
            (rule, ok, expectation)
        }
        InterfaceKind::N3 => {
            let ok = either(&|u, c| u.kind == EntityKind::UserPlaneEntity && c.kind == EntityKind::ControlPlaneEntity);
            (Rule::N3Endpoint, ok, "user-plane entity to control-plane entity")
        }
        InterfaceKind::L0 => {
            let ok = either(&|g, c| {
                g.kind == EntityKind::GatewayNode && matches!(c.kind, EntityKind::NetworkController { .. })
            });
            (Rule::LogicalEndpoint, ok, "gateway node to network controller")
        }
        InterfaceKind::L1 | InterfaceKind::L2 | InterfaceKind::L3 => {
            let peer = match link.interface {
                InterfaceKind::L1 => EntityKind::TactileServiceManager,
                InterfaceKind::L2 => EntityKind::ControlPlaneEntity,
                _ => EntityKind::UserPlaneEntity,
            };
            let ok = either(&|d, p| is(d, EntityKind::is_device) && p.kind == peer);
            let expectation = match link.interface {
                InterfaceKind::L1 => "tactile device to tactile service manager",
                InterfaceKind::L2 => "tactile device to control-plane entity",
                _ => "tactile device to user-plane entity",
            };
            (Rule::LogicalEndpoint, ok, expectation)
        }
    };
    if !ok {
        report.push(
            rule,
            format!(
                "{} link `{}` joins {} `{}` and {} `{}`; expected {}",
                link.interface,
                link.id,
                a.kind.name(),
                a.id,
                b.kind.name(),
                b.id,
                expectation
            ),
            vec![link.id.0.clone(), a.id.0.clone(), b.id.0.clone()],
        );
    }
}

fn check_l0(t: &Topology, report: &mut ValidationReport) {
    for e in t.entities() {
        let counterpart: fn(&EntityKind) -> bool = match e.kind {
            EntityKind::GatewayNode => |k| matches!(k, EntityKind::NetworkController { .. }),
            EntityKind::NetworkController { .. } => |k| *k == EntityKind::GatewayNode,
            _ => continue,
        };
        let linked = t.links_of(&e.id).any(|l| {
            l.interface == InterfaceKind::L0
                && l.other(&e.id).and_then(|o| t.entity(o)).is_some_and(|o| counterpart(&o.kind))
        });
        if !linked {
            report.push(
                Rule::L0Missing,
                format!("standalone {} `{}` has no L0 link to its counterpart", e.kind.name(), e.id),
                vec![e.id.0.clone()],
            );
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioClass {
    One,
    Two,
    Ambiguous,
}

/// Infers the placement variant from where the gateway/controller functions sit.
pub fn classify_scenario(t: &Topology) -> Result<ScenarioClass, TopologyError> {
    let mut in_edge = false;
    let mut in_network = false;
    for e in t.entities().iter().filter(|e| e.kind.is_gateway_function()) {
        if e.domain.is_edge() {
            in_edge = true;
        } else {
            in_network = true;
        }
    }
    match (in_edge, in_network) {
        (false, false) => Err(TopologyError::NoGatewayFunction),
        (true, false) => Ok(ScenarioClass::One),
        (false, true) => Ok(ScenarioClass::Two),
        (true, true) => Ok(ScenarioClass::Ambiguous),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch::{DeviceRole, LinkId};

    fn ent(id: &str, kind: EntityKind, domain: DomainTag) -> Entity {
        Entity { id: id.into(), kind, domain }
    }

    fn td(id: &str, domain: DomainTag) -> Entity {
        ent(id, EntityKind::TactileDevice { role: DeviceRole::HsiNode }, domain)
    }

    fn link(id: &str, interface: InterfaceKind, a: &str, b: &str) -> Link {
        Link { id: LinkId(id.into()), interface, a: a.into(), b: b.into() }
    }

    fn scenario1() -> (Vec<Entity>, Vec<Link>) {
        use DomainTag::*;
        let entities = vec![
            td("td-a1", TactileEdgeA),
            td("td-a2", TactileEdgeA),
            ent("gnc-a", EntityKind::GatewayNetworkController, TactileEdgeA),
            td("td-b1", TactileEdgeB),
            td("td-b2", TactileEdgeB),
            ent("gnc-b", EntityKind::GatewayNetworkController, TactileEdgeB),
            ent("bs", EntityKind::BaseStation, NetworkDomain),
        ];
        let links = vec![
            link("t-a1", InterfaceKind::T, "td-a1", "gnc-a"),
            link("t-a2", InterfaceKind::T, "td-a2", "gnc-a"),
            link("t-b1", InterfaceKind::T, "td-b1", "gnc-b"),
            link("t-b2", InterfaceKind::T, "td-b2", "gnc-b"),
            link("a-a", InterfaceKind::A, "gnc-a", "bs"),
            link("a-b", InterfaceKind::A, "gnc-b", "bs"),
        ];
        (entities, links)
    }

    #[test]
    fn minimal_scenario1_is_clean() {
        let (e, l) = scenario1();
        let t = Topology::new(Scenario::One, e, l).unwrap();
        assert_eq!(t.entities().len(), 7);
        let report = validate_topology(&t);
        assert!(report.ok(), "{report}");
        assert_eq!(classify_scenario(&t).unwrap(), ScenarioClass::One);
    }

    #[test]
    fn scenario2_with_edge_gnc_flags_placement() {
        let (e, _) = scenario1();
        let t = Topology::new(Scenario::Two, e, vec![]).unwrap();
        let report = validate_topology(&t);
        assert_eq!(report.rules(), vec![Rule::ScenarioPlacement]);
    }

    #[test]
    fn s_interface_to_device_is_flagged() {
        let (mut e, mut l) = scenario1();
        e.push(ent("tsm", EntityKind::TactileServiceManager, DomainTag::NetworkDomain));
        l.push(link("s1", InterfaceKind::S, "tsm", "td-a1"));
        let report = validate_topology(&Topology::new(Scenario::One, e.clone(), l.clone()).unwrap());
        assert_eq!(report.rules(), vec![Rule::SEndpoint]);
        assert!(report.violations[0].offenders.contains(&"s1".to_string()));

        l.pop();
        l.push(link("s1", InterfaceKind::S, "gnc-a", "tsm"));
        assert!(validate_topology(&Topology::new(Scenario::One, e, l).unwrap()).ok());
    }

    #[test]
    fn peer_to_peer_t_link_across_edges_is_allowed() {
        let (e, mut l) = scenario1();
        l.push(link("p2p", InterfaceKind::T, "td-a1", "td-b1"));
        assert!(validate_topology(&Topology::new(Scenario::One, e, l).unwrap()).ok());
    }

    #[test]
    fn t_link_device_to_foreign_gateway_is_flagged() {
        let (e, mut l) = scenario1();
        l.push(link("bad", InterfaceKind::T, "td-a1", "gnc-b"));
        let report = validate_topology(&Topology::new(Scenario::One, e, l).unwrap());
        assert_eq!(report.rules(), vec![Rule::TEndpoint]);
    }

    #[test]
    fn standalone_gateway_needs_l0() {
        use DomainTag::*;
        let (mut e, mut l) = scenario1();
        e.retain(|x| x.id.as_str() != "gnc-a");
        e.push(ent("gw-a", EntityKind::GatewayNode, TactileEdgeA));
        e.push(ent("nc-a", EntityKind::NetworkController { nmc: true, dmc: true }, TactileEdgeA));
        for x in l.iter_mut() {
            if x.a.as_str() == "gnc-a" {
                x.a = "gw-a".into();
            }
            if x.b.as_str() == "gnc-a" {
                x.b = "gw-a".into();
            }
        }
        let report = validate_topology(&Topology::new(Scenario::One, e.clone(), l.clone()).unwrap());
        assert_eq!(report.rules(), vec![Rule::L0Missing]);
        assert_eq!(report.violations.len(), 2);

        l.push(link("l0", InterfaceKind::L0, "gw-a", "nc-a"));
        assert!(validate_topology(&Topology::new(Scenario::One, e, l).unwrap()).ok());
    }

    #[test]
    fn classify_ambiguous_and_missing() {
        use DomainTag::*;
        let t = Topology::new(
            Scenario::One,
            vec![
                ent("g1", EntityKind::GatewayNetworkController, TactileEdgeA),
                ent("g2", EntityKind::GatewayNetworkController, NetworkDomain),
            ],
            vec![],
        )
        .unwrap();
        assert_eq!(classify_scenario(&t).unwrap(), ScenarioClass::Ambiguous);
        let t = Topology::new(Scenario::One, vec![td("d", TactileEdgeA)], vec![]).unwrap();
        assert_eq!(classify_scenario(&t), Err(TopologyError::NoGatewayFunction));
    }

    #[test]
    fn rule_ids_are_unique() {
        let mut ids: Vec<_> = Rule::ALL.iter().map(|r| r.id()).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), Rule::ALL.len());
    }
}
