//! Connectivity configuration and utility-driven resource block allocation.
//!
//! An allocation hands resource blocks (RBs) to `(user, leg, direction)`
//! triples. A *leg* is one radio path of a user: every user has a macro leg;
//! dual-connected users also have a small-cell leg. RBs come from *pools*;
//! with [`RbPooling::PerCell`] each base station owns `n_rbs` blocks, with
//! [`RbPooling::Shared`] all legs draw from one pool of `n_rbs`.
//!
//! Allocation is planned on mean channel quality; see [`AllocationProblem`].

mod exhaustive;
mod greedy;
pub mod utility;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

pub use exhaustive::{allocate_bruteforce, BRUTEFORCE_MAX_RBS, BRUTEFORCE_MAX_USERS};
pub use greedy::{allocate_greedy, allocate_greedy_with, LOOKAHEAD_RBS};
pub use utility::{
    direction_utility, user_utility, utility_component, DirectionMetrics, DirectionRule, MetricKind, SigmoidParams,
    UserRule, UtilityProfile,
};

use crate::grades::Grade;
use crate::radio::{db_to_linear, rate_per_rb, CellId, ChannelParams, Deployment, Direction, LinkState};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AllocError {
    #[error("instance too large for exhaustive search: {users} users, {rbs} RBs (limits {max_users} and {max_rbs})")]
    TooLarge { users: usize, rbs: usize, max_users: usize, max_rbs: usize },
    #[error("user {user}: {message}")]
    BadUser { user: usize, message: String },
    #[error("invalid link budget: {0}")]
    BadBudget(String),
}

/// How a user is connected for one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConnectivityMode {
    /// Macrocell only.
    Single,
    /// Macrocell plus the given small cell, with every packet duplicated on both.
    Dual { small_cell: usize },
}

/// Normal grade: everyone on the macrocell. Ultra grade: users inside a small
/// cell's coverage get dual connectivity with the nearest covering small cell.
pub fn configure_connectivity(deployment: &Deployment, grade: Grade) -> Vec<ConnectivityMode> {
    (0..deployment.users.len())
        .map(|u| match (grade, deployment.covering_small_cell(u)) {
            (Grade::Ultra, Some(c)) => ConnectivityMode::Dual { small_cell: c },
            _ => ConnectivityMode::Single,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Leg {
    Macro,
    Small,
}

impl Leg {
    pub const BOTH: [Leg; 2] = [Leg::Macro, Leg::Small];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Leg::Macro => "macro",
            Leg::Small => "small",
        }
    }
}

fn dir_index(d: Direction) -> usize {
    match d {
        Direction::Downlink => 0,
        Direction::Uplink => 1,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RbPooling {
    /// Every base station owns its own `n_rbs` blocks.
    #[default]
    PerCell,
    /// One pool of `n_rbs` blocks for all base stations.
    Shared,
}

/// Fixed timing figures used to turn a rate into a packet latency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub packet_bits: f64,
    /// End-to-end deadline a packet must meet to count as delivered, seconds.
    pub deadline_s: f64,
    /// Delay added to transmission time on the macro leg (air interface plus core), seconds.
    pub macro_fixed_delay_s: f64,
    /// Same for the small-cell leg, including backhaul.
    pub small_fixed_delay_s: f64,
}

impl LinkBudget {
    pub fn validate(&self) -> Result<(), AllocError> {
        let ok = |x: f64| x.is_finite() && x >= 0.0;
        if !(self.packet_bits > 0.0 && self.packet_bits.is_finite()) {
            return Err(AllocError::BadBudget(format!("packet size {} bits", self.packet_bits)));
        }
        if !(self.deadline_s > 0.0 && self.deadline_s.is_finite()) {
            return Err(AllocError::BadBudget(format!("deadline {} s", self.deadline_s)));
        }
        if !ok(self.macro_fixed_delay_s) || !ok(self.small_fixed_delay_s) {
            return Err(AllocError::BadBudget("fixed delays must be finite and non-negative".into()));
        }
        Ok(())
    }

    pub fn fixed_delay(&self, leg: Leg) -> f64 {
        match leg {
            Leg::Macro => self.macro_fixed_delay_s,
            Leg::Small => self.small_fixed_delay_s,
        }
    }
}

/// One radio path of a user as seen by the planner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserLeg {
    pub leg: Leg,
    pub cell: CellId,
    /// Index into [`AllocationProblem::pools`].
    pub pool: usize,
    /// Mean linear SNR (no small-scale fading), indexed DL then UL.
    pub mean_snr: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pool {
    pub label: String,
    pub size: usize,
}

/// RB counts of one user, indexed `[leg][direction]`.
pub type UserCounts = [[usize; 2]; 2];

/// Sum of user utilities, then sum of direction utilities, compared in that
/// order. The second term separates allocations whose user utilities tie,
/// e.g. while one direction of a user still has no blocks and `min` is 0.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Objective {
    pub primary: f64,
    pub secondary: f64,
}

impl Objective {
    pub fn lexicographic_cmp(&self, other: &Self) -> Ordering {
        self.primary.total_cmp(&other.primary).then(self.secondary.total_cmp(&other.secondary))
    }
}

/// A planning instance: each user's legs with their mean SNRs, the RB pools,
/// and the models that turn RB counts into expected utility.
///
/// For `k` blocks on a leg with mean SNR `s`, the planner assumes a rate of
/// `k * rate_per_rb(s)`, a latency of `packet / rate + fixed delay`, and a
/// loss equal to the probability that every block fades below the per-block
/// rate needed to meet the deadline, `(1 - exp(-(2^(r/B) - 1) / s))^k` under
/// Rayleigh fading. With two legs the planned rate is the better leg's, the
/// latency the faster leg's, and the loss the product of the leg losses.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationProblem {
    pub users: Vec<Vec<UserLeg>>,
    pub pools: Vec<Pool>,
    pub channel: ChannelParams,
    pub budget: LinkBudget,
    pub profile: UtilityProfile,
}

impl AllocationProblem {
    pub fn new(
        users: Vec<Vec<UserLeg>>,
        pools: Vec<Pool>,
        channel: ChannelParams,
        budget: LinkBudget,
        profile: UtilityProfile,
    ) -> Result<Self, AllocError> {
        budget.validate()?;
        for (u, legs) in users.iter().enumerate() {
            let bad = |message: String| AllocError::BadUser { user: u, message };
            if legs.is_empty() || legs.len() > 2 {
                return Err(bad(format!("needs one or two legs, has {}", legs.len())));
            }
            if legs.len() == 2 && legs[0].leg == legs[1].leg {
                return Err(bad("both legs have the same kind".into()));
            }
            for l in legs {
                if l.pool >= pools.len() {
                    return Err(bad(format!("leg refers to pool {} of {}", l.pool, pools.len())));
                }
                if l.mean_snr.iter().any(|s| s.is_nan() || *s < 0.0) {
                    return Err(bad("mean SNR must be non-negative".into()));
                }
            }
        }
        Ok(Self { users, pools, channel, budget, profile })
    }

    /// Builds the instance of one iteration from large-scale link states
    /// (`links[user]` = macro first, then each small cell).
    pub fn from_links(
        links: &[Vec<LinkState>],
        modes: &[ConnectivityMode],
        n_small_cells: usize,
        pooling: RbPooling,
        channel: &ChannelParams,
        budget: LinkBudget,
        profile: UtilityProfile,
    ) -> Result<Self, AllocError> {
        let pools = match pooling {
            RbPooling::PerCell => std::iter::once(CellId::Macro)
                .chain((0..n_small_cells).map(CellId::Small))
                .map(|c| Pool { label: c.label(), size: channel.n_rbs })
                .collect(),
            RbPooling::Shared => vec![Pool { label: "shared".into(), size: channel.n_rbs }],
        };
        let pool_of = |cell: CellId| match (pooling, cell) {
            (RbPooling::Shared, _) | (_, CellId::Macro) => 0,
            (RbPooling::PerCell, CellId::Small(i)) => 1 + i,
        };
        if links.len() != modes.len() {
            return Err(AllocError::BadUser {
                user: links.len().min(modes.len()),
                message: format!("{} link rows but {} connectivity modes", links.len(), modes.len()),
            });
        }
        let users = links
            .iter()
            .zip(modes)
            .enumerate()
            .map(|(u, (row, mode))| {
                let leg = |leg: Leg, cell: CellId| {
                    let idx = match cell {
                        CellId::Macro => 0,
                        CellId::Small(i) => 1 + i,
                    };
                    let state = row.get(idx).filter(|s| s.cell == cell).ok_or_else(|| AllocError::BadUser {
                        user: u,
                        message: format!("no link state towards {}", cell.label()),
                    })?;
                    let mean_snr = Direction::BOTH.map(|d| db_to_linear(state.mean_snr_db(channel, d)));
                    Ok(UserLeg { leg, cell, pool: pool_of(cell), mean_snr })
                };
                let mut legs = vec![leg(Leg::Macro, CellId::Macro)?];
                if let ConnectivityMode::Dual { small_cell } = *mode {
                    legs.push(leg(Leg::Small, CellId::Small(small_cell))?);
                }
                Ok(legs)
            })
            .collect::<Result<Vec<_>, AllocError>>()?;
        Self::new(users, pools, channel.clone(), budget, profile)
    }

    pub fn total_rbs(&self) -> usize {
        self.pools.iter().map(|p| p.size).sum()
    }

    /// Planned loss of one leg carrying a packet over `k` blocks at mean SNR `snr`.
    pub fn planned_leg_loss(&self, leg: Leg, snr: f64, k: usize) -> f64 {
        if k == 0 || snr <= 0.0 {
            return 1.0;
        }
        let available = self.budget.deadline_s - self.budget.fixed_delay(leg);
        if available <= 0.0 {
            return 1.0;
        }
        let efficiency = self.budget.packet_bits / (available * k as f64 * self.channel.rb_bandwidth_hz);
        if self.channel.max_spectral_efficiency.is_some_and(|cap| efficiency > cap) {
            return 1.0;
        }
        let threshold = (efficiency * std::f64::consts::LN_2).exp_m1();
        let per_rb = -(-threshold / snr).exp_m1();
        per_rb.powi(k as i32)
    }

    /// Planned metrics of one direction of `user` given its RB counts per leg.
    pub fn planned_metrics(&self, user: usize, direction: Direction, counts: &UserCounts) -> DirectionMetrics {
        let d = dir_index(direction);
        let mut m = DirectionMetrics::DEAD;
        for l in &self.users[user] {
            let k = counts[l.leg.index()][d];
            if k == 0 {
                continue;
            }
            let rate = k as f64 * rate_per_rb(l.mean_snr[d], &self.channel);
            let latency = if rate > 0.0 {
                self.budget.packet_bits / rate + self.budget.fixed_delay(l.leg)
            } else {
                f64::INFINITY
            };
            m.rate = m.rate.max(rate);
            m.latency = m.latency.min(latency);
            m.loss *= self.planned_leg_loss(l.leg, l.mean_snr[d], k);
        }
        m
    }

    /// `(user utility, DL utility + UL utility)` of one user.
    pub fn user_value(&self, user: usize, counts: &UserCounts) -> (f64, f64) {
        let [dl, ul] = Direction::BOTH.map(|d| self.profile.direction_value(&self.planned_metrics(user, d, counts)));
        (self.profile.combine_user(dl, ul), dl + ul)
    }

    pub fn objective(&self, counts: &[UserCounts]) -> Objective {
        counts.iter().enumerate().fold(Objective::default(), |acc, (u, c)| {
            let (p, s) = self.user_value(u, c);
            Objective { primary: acc.primary + p, secondary: acc.secondary + s }
        })
    }

    fn empty_allocation(&self) -> Allocation {
        Allocation {
            pools: self
                .pools
                .iter()
                .map(|p| PoolAssignment { label: p.label.clone(), slots: vec![None; p.size] })
                .collect(),
        }
    }
}

/// One RB handed to one leg and direction of one user.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grant {
    pub user: usize,
    pub leg: Leg,
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoolAssignment {
    pub label: String,
    /// One entry per RB; `None` when unused. An RB can hold at most one grant.
    pub slots: Vec<Option<Grant>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub pools: Vec<PoolAssignment>,
}

impl Allocation {
    /// Puts `grant` on the lowest free RB of `pool`. Returns false when the pool is full.
    fn assign(&mut self, pool: usize, grant: Grant) -> bool {
        match self.pools[pool].slots.iter_mut().find(|s| s.is_none()) {
            Some(slot) => {
                *slot = Some(grant);
                true
            }
            None => false,
        }
    }

    pub fn grants(&self) -> impl Iterator<Item = (usize, usize, Grant)> + '_ {
        self.pools
            .iter()
            .enumerate()
            .flat_map(|(p, pa)| pa.slots.iter().enumerate().filter_map(move |(rb, g)| g.map(|g| (p, rb, g))))
    }

    pub fn assigned(&self) -> usize {
        self.grants().count()
    }

    /// RB counts per user, indexed `[user][leg][direction]`.
    pub fn counts(&self, n_users: usize) -> Vec<UserCounts> {
        let mut counts = vec![[[0; 2]; 2]; n_users];
        for (_, _, g) in self.grants() {
            counts[g.user][g.leg.index()][dir_index(g.direction)] += 1;
        }
        counts
    }

    /// Checks that every grant names an existing leg of its user and sits in that leg's pool.
    pub fn check(&self, problem: &AllocationProblem) -> Result<(), String> {
        if self.pools.len() != problem.pools.len() {
            return Err(format!("{} pools, problem has {}", self.pools.len(), problem.pools.len()));
        }
        for (p, pa) in self.pools.iter().enumerate() {
            if pa.slots.len() != problem.pools[p].size {
                return Err(format!(
                    "pool {} has {} RBs, expected {}",
                    pa.label,
                    pa.slots.len(),
                    problem.pools[p].size
                ));
            }
        }
        for (p, rb, g) in self.grants() {
            let legs = problem.users.get(g.user).ok_or_else(|| format!("rb {rb}: unknown user {}", g.user))?;
            let leg = legs
                .iter()
                .find(|l| l.leg == g.leg)
                .ok_or_else(|| format!("rb {rb}: user {} has no {} leg", g.user, g.leg.as_str()))?;
            if leg.pool != p {
                return Err(format!("rb {rb} of pool {} granted to a leg of pool {}", p, leg.pool));
            }
        }
        Ok(())
    }

    /// Writes `cell,rb,user,leg,direction` rows for assigned RBs.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["cell", "rb", "user", "leg", "direction"])?;
        for (p, rb, g) in self.grants() {
            w.write_record([
                self.pools[p].label.as_str(),
                &rb.to_string(),
                &g.user.to_string(),
                g.leg.as_str(),
                g.direction.as_str(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::radio::{Cell, Point};

    pub(crate) fn budget() -> LinkBudget {
        LinkBudget { packet_bits: 256.0, deadline_s: 5e-3, macro_fixed_delay_s: 0.75e-3, small_fixed_delay_s: 0.75e-3 }
    }

    pub(crate) fn leg(leg: Leg, pool: usize, snr_db: f64) -> UserLeg {
        let cell = if leg == Leg::Macro { CellId::Macro } else { CellId::Small(0) };
        UserLeg { leg, cell, pool, mean_snr: [db_to_linear(snr_db); 2] }
    }

    pub(crate) fn problem(users: Vec<Vec<UserLeg>>, pool_sizes: &[usize]) -> AllocationProblem {
        let pools = pool_sizes.iter().enumerate().map(|(i, &size)| Pool { label: format!("p{i}"), size }).collect();
        AllocationProblem::new(users, pools, ChannelParams::default(), budget(), UtilityProfile::default()).unwrap()
    }

    #[test]
    fn connectivity_follows_grade_and_coverage() {
        let d = Deployment {
            macro_cell: Cell { center: Point::ORIGIN, radius_m: 100.0 },
            small_cells: vec![
                Cell { center: Point { x: 50.0, y: 0.0 }, radius_m: 30.0 },
                Cell { center: Point { x: 70.0, y: 0.0 }, radius_m: 30.0 },
            ],
            users: vec![Point { x: 65.0, y: 0.0 }, Point { x: -50.0, y: 0.0 }],
        };
        assert_eq!(configure_connectivity(&d, Grade::Normal), vec![ConnectivityMode::Single; 2]);
        assert_eq!(
            configure_connectivity(&d, Grade::Ultra),
            vec![ConnectivityMode::Dual { small_cell: 1 }, ConnectivityMode::Single]
        );
    }

    #[test]
    fn planned_metrics_dual_combine() {
        let p = problem(vec![vec![leg(Leg::Macro, 0, 20.0), leg(Leg::Small, 1, 30.0)]], &[4, 4]);
        let only_macro = p.planned_metrics(0, Direction::Downlink, &[[1, 0], [0, 0]]);
        let both = p.planned_metrics(0, Direction::Downlink, &[[1, 0], [2, 0]]);
        assert!(both.rate > only_macro.rate);
        assert!(both.latency < only_macro.latency);
        assert!(both.loss < only_macro.loss);
        assert_eq!(p.planned_metrics(0, Direction::Uplink, &[[1, 0], [2, 0]]), DirectionMetrics::DEAD);
    }

    #[test]
    fn planned_loss_decreases_with_rbs() {
        let p = problem(vec![vec![leg(Leg::Macro, 0, 5.0)]], &[8]);
        let losses: Vec<f64> = (0..6).map(|k| p.planned_leg_loss(Leg::Macro, db_to_linear(5.0), k)).collect();
        assert_eq!(losses[0], 1.0);
        assert!(losses.windows(2).all(|w| w[1] < w[0]), "{losses:?}");
    }

    #[test]
    fn required_rate_above_cap_is_certain_loss() {
        let mut p = problem(vec![vec![leg(Leg::Macro, 0, 60.0)]], &[1]);
        p.budget.packet_bits = 1e5;
        assert_eq!(p.planned_leg_loss(Leg::Macro, 1e6, 1), 1.0);
        p.budget.deadline_s = 0.5e-3;
        p.budget.packet_bits = 256.0;
        assert_eq!(p.planned_leg_loss(Leg::Macro, 1e6, 4), 1.0);
    }

    #[test]
    fn problem_rejects_bad_legs() {
        let pools = vec![Pool { label: "p".into(), size: 1 }];
        let mk = |users| {
            AllocationProblem::new(users, pools.clone(), ChannelParams::default(), budget(), UtilityProfile::default())
        };
        assert!(mk(vec![vec![]]).is_err());
        assert!(mk(vec![vec![leg(Leg::Macro, 1, 0.0)]]).is_err());
        assert!(mk(vec![vec![leg(Leg::Macro, 0, 0.0), leg(Leg::Macro, 0, 0.0)]]).is_err());
        assert!(mk(vec![vec![leg(Leg::Macro, 0, 0.0)]]).is_ok());
    }

    #[test]
    fn allocation_csv_and_check() {
        let p = problem(vec![vec![leg(Leg::Macro, 0, 20.0)]], &[2]);
        let mut a = p.empty_allocation();
        assert!(a.assign(0, Grant { user: 0, leg: Leg::Macro, direction: Direction::Uplink }));
        let mut buf = Vec::new();
        a.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "cell,rb,user,leg,direction\np0,0,0,macro,ul\n");
        assert!(a.check(&p).is_ok());
        assert!(a.assign(0, Grant { user: 0, leg: Leg::Small, direction: Direction::Uplink }));
        assert!(a.check(&p).is_err());
        assert!(!a.assign(0, Grant { user: 0, leg: Leg::Macro, direction: Direction::Uplink }));
    }
}
