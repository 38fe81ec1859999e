//! Sigmoid utilities for rate, latency and loss, and how they combine into
//! direction and user utilities.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricKind {
    /// bit/s, increasing, evaluated on log10.
    Rate,
    /// seconds, decreasing, evaluated linearly.
    Latency,
    /// loss ratio, decreasing, evaluated on log10.
    Loss,
}

impl MetricKind {
    fn increasing(self) -> bool {
        matches!(self, MetricKind::Rate)
    }

    fn log_domain(self) -> bool {
        matches!(self, MetricKind::Rate | MetricKind::Loss)
    }
}

/// Logistic curve parameters. For log-domain metrics `steepness` is per decade.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SigmoidParams {
    pub midpoint: f64,
    pub steepness: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DirectionRule {
    /// `(u_rate * u_latency * u_loss)^(1/3)`
    GeometricMean,
    Product,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UserRule {
    /// Closed-loop bottleneck: the worse direction decides.
    Min,
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UtilityProfile {
    pub rate: SigmoidParams,
    pub latency: SigmoidParams,
    pub loss: SigmoidParams,
    pub direction_rule: DirectionRule,
    pub user_rule: UserRule,
}

impl Default for UtilityProfile {
    fn default() -> Self {
        Self {
            rate: SigmoidParams { midpoint: 1e6, steepness: 5.0 },
            // 2 per ms, midpoint at the 5 ms end-to-end requirement.
            latency: SigmoidParams { midpoint: 5e-3, steepness: 2e3 },
            loss: SigmoidParams { midpoint: 1e-3, steepness: 5.0 },
            direction_rule: DirectionRule::GeometricMean,
            user_rule: UserRule::Min,
        }
    }
}

impl UtilityProfile {
    pub fn validate(&self) -> Result<(), String> {
        for (name, s, log) in [("rate", self.rate, true), ("latency", self.latency, false), ("loss", self.loss, true)] {
            if !(s.steepness > 0.0 && s.steepness.is_finite()) {
                return Err(format!("{name} steepness must be positive, got {}", s.steepness));
            }
            if !s.midpoint.is_finite() || (log && s.midpoint <= 0.0) {
                return Err(format!("{name} midpoint {} is not usable", s.midpoint));
            }
        }
        Ok(())
    }

    fn params(&self, kind: MetricKind) -> SigmoidParams {
        match kind {
            MetricKind::Rate => self.rate,
            MetricKind::Latency => self.latency,
            MetricKind::Loss => self.loss,
        }
    }

    /// Combines the three per-metric utilities of one direction.
    pub fn combine_direction(&self, u_rate: f64, u_latency: f64, u_loss: f64) -> f64 {
        match self.direction_rule {
            DirectionRule::GeometricMean => direction_utility(u_rate, u_latency, u_loss),
            DirectionRule::Product => u_rate * u_latency * u_loss,
        }
    }

    pub fn combine_user(&self, u_dl: f64, u_ul: f64) -> f64 {
        match self.user_rule {
            UserRule::Min => user_utility(u_dl, u_ul),
            UserRule::Mean => 0.5 * (u_dl + u_ul),
        }
    }

    /// Utility of one direction from its observed (or planned) figures.
    pub fn direction_value(&self, m: &DirectionMetrics) -> f64 {
        self.combine_direction(
            utility_component(m.rate, self, MetricKind::Rate),
            utility_component(m.latency, self, MetricKind::Latency),
            utility_component(m.loss, self, MetricKind::Loss),
        )
    }
}

/// Rate in bit/s, latency in seconds (`INFINITY` when nothing got through), loss ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionMetrics {
    pub rate: f64,
    pub latency: f64,
    pub loss: f64,
}

impl DirectionMetrics {
    /// Nothing delivered.
    pub const DEAD: DirectionMetrics = DirectionMetrics { rate: 0.0, latency: f64::INFINITY, loss: 1.0 };
}

/// Logistic utility of one metric value, in [0, 1]. Zero rate maps to 0; zero loss to 1.
pub fn utility_component(value: f64, profile: &UtilityProfile, kind: MetricKind) -> f64 {
    if value.is_nan() {
        return 0.0;
    }
    let SigmoidParams { midpoint, steepness } = profile.params(kind);
    let (x, mid) = if kind.log_domain() { (value.max(0.0).log10(), midpoint.log10()) } else { (value, midpoint) };
    let z = steepness * (x - mid);
    // exp saturates to 0 / inf, which lands exactly on the bounds.
    if kind.increasing() {
        1.0 / (1.0 + (-z).exp())
    } else {
        1.0 / (1.0 + z.exp())
    }
}

/// Unweighted geometric mean of the three metric utilities.
pub fn direction_utility(u_rate: f64, u_latency: f64, u_loss: f64) -> f64 {
    (u_rate * u_latency * u_loss).cbrt()
}

pub fn user_utility(u_dl: f64, u_ul: f64) -> f64 {
    u_dl.min(u_ul)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midpoints_give_half() {
        let p = UtilityProfile::default();
        assert!((utility_component(1e6, &p, MetricKind::Rate) - 0.5).abs() < 1e-12);
        assert!((utility_component(5e-3, &p, MetricKind::Latency) - 0.5).abs() < 1e-12);
        assert!((utility_component(1e-3, &p, MetricKind::Loss) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn limits() {
        let p = UtilityProfile::default();
        assert_eq!(utility_component(f64::INFINITY, &p, MetricKind::Rate), 1.0);
        assert!(utility_component(1e15, &p, MetricKind::Rate) > 1.0 - 1e-12);
        assert_eq!(utility_component(0.0, &p, MetricKind::Rate), 0.0);
        assert_eq!(utility_component(f64::INFINITY, &p, MetricKind::Latency), 0.0);
        assert_eq!(utility_component(0.0, &p, MetricKind::Loss), 1.0);
        // Total loss: z = 5 * 3, so 1 / (1 + e^15).
        let u = utility_component(1.0, &p, MetricKind::Loss);
        assert!((u - 1.0 / (1.0 + 15f64.exp())).abs() < 1e-18 && u < 1e-6);
    }

    #[test]
    fn monotone_directions() {
        let p = UtilityProfile::default();
        let xs = [1e3, 1e5, 1e6, 3e6, 1e8];
        for w in xs.windows(2) {
            assert!(utility_component(w[0], &p, MetricKind::Rate) < utility_component(w[1], &p, MetricKind::Rate));
        }
        let ls = [0.0, 1e-3, 4e-3, 6e-3, 1e-2];
        for w in ls.windows(2) {
            assert!(
                utility_component(w[0], &p, MetricKind::Latency) > utility_component(w[1], &p, MetricKind::Latency)
            );
        }
    }

    #[test]
    fn composition_examples() {
        assert_eq!(direction_utility(1.0, 1.0, 1.0), 1.0);
        assert_eq!(direction_utility(0.0, 0.4, 0.9), 0.0);
        // Cube root of 0.36, computed independently.
        assert!((direction_utility(0.8, 0.5, 0.9) - 0.711_378_660_898_012_6).abs() < 1e-12);
        assert_eq!(user_utility(0.8, 0.6), 0.6);
        assert_eq!(user_utility(0.3, 0.3), 0.3);
        assert_eq!(user_utility(1.0, 0.0), 0.0);
    }

    #[test]
    fn alternative_rules() {
        let p =
            UtilityProfile { direction_rule: DirectionRule::Product, user_rule: UserRule::Mean, ..Default::default() };
        assert!((p.combine_direction(0.5, 0.5, 0.5) - 0.125).abs() < 1e-15);
        assert_eq!(p.combine_user(0.2, 0.6), 0.4);
    }

    #[test]
    fn bad_profiles_rejected() {
        let mut p = UtilityProfile::default();
        p.rate.steepness = 0.0;
        assert!(p.validate().is_err());
        let mut p = UtilityProfile::default();
        p.loss.midpoint = 0.0;
        assert!(p.validate().is_err());
        assert!(UtilityProfile::default().validate().is_ok());
    }
}
