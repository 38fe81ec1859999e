//! Run configuration: one TOML document with optional `[topology]`,
//! `[simulation]`, `[channel]`, `[deployment]` and `[utility]` sections.
//! Every field has a default, so an empty document is the reference setup.

use serde::{Deserialize, Serialize};

use super::SimError;
use crate::alloc::{LinkBudget, RbPooling, UtilityProfile};
use crate::radio::{ChannelParams, DeploymentConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationParams {
    pub seed: u64,
    pub iterations: usize,
    pub packets_per_user: usize,
    pub packet_bits: f64,
    /// End-to-end deadline, seconds.
    pub e2e_latency_s: f64,
    /// Radio access (A interface) delay per packet, seconds.
    pub air_delay_s: f64,
    /// Core network transit, seconds.
    pub core_transit_s: f64,
    /// Extra delay on the small-cell leg, seconds.
    pub small_cell_backhaul_s: f64,
    pub pooling: RbPooling,
}

impl Default for SimulationParams {
    fn default() -> Self {
        Self {
            seed: 1,
            iterations: 100,
            packets_per_user: 1000,
            packet_bits: 256.0,
            e2e_latency_s: 5e-3,
            air_delay_s: 0.25e-3,
            core_transit_s: 0.5e-3,
            small_cell_backhaul_s: 0.0,
            pooling: RbPooling::PerCell,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Architecture description; validated by the architecture model, unused by the simulator.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub topology: Option<toml::Table>,
    pub simulation: SimulationParams,
    pub channel: ChannelParams,
    pub deployment: DeploymentConfig,
    pub utility: UtilityProfile,
}

impl SimConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, SimError> {
        let cfg: SimConfig = toml::from_str(text).map_err(|e| SimError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Canonical TOML rendering; equal configurations render identically.
    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("simulation config always serializes")
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let s = &self.simulation;
        if s.iterations == 0 {
            return Err(SimError::Config("iterations must be at least 1".into()));
        }
        if s.packets_per_user == 0 {
            return Err(SimError::Config("packets_per_user must be at least 1".into()));
        }
        self.link_budget().validate().map_err(|e| SimError::Config(e.to_string()))?;
        if self.link_budget().macro_fixed_delay_s >= s.e2e_latency_s {
            return Err(SimError::Config("fixed delays already exceed the end-to-end deadline".into()));
        }
        self.channel.validate().map_err(|e| SimError::Config(e.to_string()))?;
        self.deployment.validate().map_err(|e| SimError::Config(e.to_string()))?;
        self.utility.validate().map_err(SimError::Config)?;
        Ok(())
    }

    pub fn link_budget(&self) -> LinkBudget {
        let s = &self.simulation;
        let macro_fixed = s.air_delay_s + s.core_transit_s;
        LinkBudget {
            packet_bits: s.packet_bits,
            deadline_s: s.e2e_latency_s,
            macro_fixed_delay_s: macro_fixed,
            small_fixed_delay_s: macro_fixed + s.small_cell_backhaul_s,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_the_default() {
        let cfg = SimConfig::from_toml_str("").unwrap();
        assert_eq!(cfg, SimConfig::default());
        assert_eq!(cfg.deployment.n_users, 50);
        assert_eq!(cfg.deployment.n_small_cells, 4);
        assert_eq!(cfg.channel.n_rbs, 100);
        assert_eq!(cfg.simulation.iterations, 100);
        assert_eq!(cfg.simulation.packets_per_user, 1000);
    }

    #[test]
    fn sections_override_and_round_trip() {
        let text = "[simulation]\nseed = 9\npooling = \"shared\"\n[deployment]\nn_users = 3\n[utility.rate]\nmidpoint = 2e6\nsteepness = 4.0\n";
        let cfg = SimConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.simulation.seed, 9);
        assert_eq!(cfg.simulation.pooling, RbPooling::Shared);
        assert_eq!(cfg.deployment.n_users, 3);
        assert_eq!(cfg.utility.rate.midpoint, 2e6);
        assert_eq!(SimConfig::from_toml_str(&cfg.to_toml_string()).unwrap(), cfg);
    }

    #[test]
    fn topology_section_is_accepted() {
        let cfg = SimConfig::from_toml_str("[topology]\nscenario = 1\n").unwrap();
        assert!(cfg.topology.is_some());
    }

    #[test]
    fn invalid_values_are_rejected() {
        for text in [
            "[simulation]\niterations = 0\n",
            "[simulation]\npacket_bits = -1.0\n",
            "[simulation]\ncore_transit_s = 0.01\n",
            "[channel]\nn_rbs = 0\n",
            "[simulation]\nbogus = 1\n",
            "[utility.loss]\nmidpoint = 0.0\nsteepness = 1.0\n",
        ] {
            assert!(SimConfig::from_toml_str(text).is_err(), "{text}");
        }
    }
}
