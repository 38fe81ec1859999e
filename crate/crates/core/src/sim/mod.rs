//! Monte Carlo system-level simulation of one service grade.
//!
//! Each iteration draws a deployment and shadowing, configures connectivity
//! for the grade, allocates RBs greedily on mean channel quality, then sends
//! `packets_per_user` packets per user and direction with fresh Rayleigh
//! fading on every RB. A dual-connected user's packet is duplicated on both
//! legs and counts as delivered when either copy meets the deadline. The
//! iteration's sample is the sum of realized user utilities.
//!
//! Randomness comes from one ChaCha8 generator per iteration and purpose,
//! keyed by the master seed and stream `4 * iteration + purpose`. Both
//! grades therefore see the same deployments and shadowing for a seed, and
//! results do not depend on how iterations are spread over threads.

pub mod config;
pub mod stats;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use config::{SimConfig, SimulationParams};

use crate::alloc::{
    allocate_greedy, configure_connectivity, AllocError, Allocation, AllocationProblem, ConnectivityMode,
    DirectionMetrics, Leg, LinkBudget, UserCounts, UserLeg,
};
use crate::grades::Grade;
use crate::radio::{
    draw_link_states, generate_deployment, rate_per_rb, rayleigh_fading_gain, ChannelParams, Deployment, Direction,
    RadioError,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Radio(#[from] RadioError),
    #[error(transparent)]
    Alloc(#[from] AllocError),
}

/// Random stream purposes within an iteration.
#[derive(Debug, Clone, Copy)]
enum Stream {
    Deployment = 0,
    Shadowing = 1,
    Packets = 2,
}

fn stream_rng(seed: u64, iteration: usize, purpose: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(iteration as u64 * 4 + purpose as u64);
    rng
}

/// Transmission of one packet copy on one leg.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegOutcome {
    pub leg: Leg,
    /// Sum of the per-RB rates under this packet's fading, bit/s.
    pub rate: f64,
    /// Transmission time plus fixed delays, seconds (infinite at zero rate).
    pub latency: f64,
    pub delivered: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PacketOutcome {
    /// One entry per leg that holds RBs in this direction.
    pub legs: Vec<LegOutcome>,
    pub delivered: bool,
    /// Latency of the first copy to arrive, when delivered.
    pub latency: Option<f64>,
    /// Rate of the delivering leg, 0 when lost.
    pub rate: f64,
}

/// Sends one packet in `direction` over every leg of a user that holds RBs,
/// drawing a fresh Rayleigh gain per RB. A copy is delivered when its latency
/// is within the deadline.
pub fn simulate_packet<R: Rng + ?Sized>(
    rng: &mut R,
    legs: &[UserLeg],
    counts: &UserCounts,
    direction: Direction,
    channel: &ChannelParams,
    budget: &LinkBudget,
) -> PacketOutcome {
    let d = match direction {
        Direction::Downlink => 0,
        Direction::Uplink => 1,
    };
    let mut out = PacketOutcome { legs: Vec::with_capacity(2), delivered: false, latency: None, rate: 0.0 };
    for l in legs {
        let k = counts[l.leg.index()][d];
        if k == 0 {
            continue;
        }
        let rate: f64 = (0..k).map(|_| rate_per_rb(l.mean_snr[d] * rayleigh_fading_gain(rng), channel)).sum();
        let latency = if rate > 0.0 { budget.packet_bits / rate + budget.fixed_delay(l.leg) } else { f64::INFINITY };
        let delivered = latency <= budget.deadline_s;
        out.legs.push(LegOutcome { leg: l.leg, rate, latency, delivered });
        if delivered && out.latency.is_none_or(|best| latency < best) {
            out.delivered = true;
            out.latency = Some(latency);
            out.rate = rate;
        }
    }
    out
}

/// Mean linear SNR at which one RB on `leg` delivers a packet with probability
/// `p` under Rayleigh fading; used to build engineered test links.
pub fn single_rb_snr_for_success(p: f64, leg: Leg, channel: &ChannelParams, budget: &LinkBudget) -> f64 {
    let required = budget.packet_bits / (budget.deadline_s - budget.fixed_delay(leg));
    let threshold = (required / channel.rb_bandwidth_hz * std::f64::consts::LN_2).exp_m1();
    threshold / -p.ln()
}

/// Realized figures of one direction of one user over all its packets.
#[derive(Debug, Clone, Copy, Default)]
struct DirectionTally {
    packets: usize,
    delivered: usize,
    rate_sum: f64,
    latency_sum: f64,
}

impl DirectionTally {
    fn add(&mut self, o: &PacketOutcome) {
        self.packets += 1;
        self.rate_sum += o.rate;
        if let Some(l) = o.latency {
            self.delivered += 1;
            self.latency_sum += l;
        }
    }

    fn metrics(&self) -> DirectionMetrics {
        if self.packets == 0 {
            return DirectionMetrics::DEAD;
        }
        DirectionMetrics {
            rate: self.rate_sum / self.packets as f64,
            latency: if self.delivered > 0 { self.latency_sum / self.delivered as f64 } else { f64::INFINITY },
            loss: (self.packets - self.delivered) as f64 / self.packets as f64,
        }
    }
}

/// Everything one iteration produced.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationDetail {
    pub deployment: Deployment,
    pub modes: Vec<ConnectivityMode>,
    pub problem: AllocationProblem,
    pub allocation: Allocation,
    pub user_utilities: Vec<f64>,
    pub result: IterationResult,
}

/// Summary row of one iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationResult {
    pub iteration: usize,
    pub sum_utility: f64,
    pub dual_users: usize,
    pub assigned_rbs: usize,
    /// Delivered packets over sent packets, both directions, all users.
    pub delivery_ratio: f64,
}

pub fn run_iteration_detail(
    cfg: &SimConfig,
    grade: Grade,
    seed: u64,
    iteration: usize,
) -> Result<IterationDetail, SimError> {
    let deployment = generate_deployment(&mut stream_rng(seed, iteration, Stream::Deployment), &cfg.deployment);
    let links = draw_link_states(&mut stream_rng(seed, iteration, Stream::Shadowing), &deployment, &cfg.channel)?;
    let modes = configure_connectivity(&deployment, grade);
    let budget = cfg.link_budget();
    let problem = AllocationProblem::from_links(
        &links,
        &modes,
        deployment.small_cells.len(),
        cfg.simulation.pooling,
        &cfg.channel,
        budget,
        cfg.utility,
    )?;
    let allocation = allocate_greedy(&problem);
    let counts = allocation.counts(problem.users.len());

    let mut rng = stream_rng(seed, iteration, Stream::Packets);
    let (mut sent, mut delivered) = (0usize, 0usize);
    let user_utilities: Vec<f64> = problem
        .users
        .iter()
        .zip(&counts)
        .map(|(legs, c)| {
            let [dl, ul] = Direction::BOTH.map(|direction| {
                let mut tally = DirectionTally::default();
                for _ in 0..cfg.simulation.packets_per_user {
                    tally.add(&simulate_packet(&mut rng, legs, c, direction, &cfg.channel, &budget));
                }
                sent += tally.packets;
                delivered += tally.delivered;
                cfg.utility.direction_value(&tally.metrics())
            });
            cfg.utility.combine_user(dl, ul)
        })
        .collect();

    let result = IterationResult {
        iteration,
        sum_utility: user_utilities.iter().sum(),
        dual_users: modes.iter().filter(|m| matches!(m, ConnectivityMode::Dual { .. })).count(),
        assigned_rbs: allocation.assigned(),
        delivery_ratio: if sent > 0 { delivered as f64 / sent as f64 } else { 0.0 },
    };
    Ok(IterationDetail { deployment, modes, problem, allocation, user_utilities, result })
}

pub fn run_iteration(cfg: &SimConfig, grade: Grade, seed: u64, iteration: usize) -> Result<IterationResult, SimError> {
    run_iteration_detail(cfg, grade, seed, iteration).map(|d| d.result)
}

/// All iterations of one grade, in iteration order.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub grade: Grade,
    pub seed: u64,
    pub iterations: Vec<IterationResult>,
}

impl RunResult {
    pub fn samples(&self) -> Vec<f64> {
        self.iterations.iter().map(|r| r.sum_utility).collect()
    }
}

/// Runs `cfg.simulation.iterations` iterations with master seed `seed`.
/// With `parallel` the iterations are spread over the current rayon pool;
/// the result is identical either way.
pub fn run_monte_carlo(cfg: &SimConfig, grade: Grade, seed: u64, parallel: bool) -> Result<RunResult, SimError> {
    cfg.validate()?;
    let n = cfg.simulation.iterations;
    let iterations = if parallel {
        (0..n).into_par_iter().map(|i| run_iteration(cfg, grade, seed, i)).collect::<Result<Vec<_>, _>>()?
    } else {
        (0..n).map(|i| run_iteration(cfg, grade, seed, i)).collect::<Result<Vec<_>, _>>()?
    };
    Ok(RunResult { grade, seed, iterations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alloc::tests::budget;
    use crate::radio::db_to_linear;

    fn small_cfg() -> SimConfig {
        let mut cfg = SimConfig::default();
        cfg.simulation.iterations = 3;
        cfg.simulation.packets_per_user = 20;
        cfg.deployment.n_users = 6;
        cfg
    }

    #[test]
    fn packet_without_rbs_is_lost() {
        let legs = [UserLeg { leg: Leg::Macro, cell: crate::radio::CellId::Macro, pool: 0, mean_snr: [1e6; 2] }];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let o = simulate_packet(
            &mut rng,
            &legs,
            &[[0, 1], [0, 0]],
            Direction::Downlink,
            &ChannelParams::default(),
            &budget(),
        );
        assert!(!o.delivered && o.legs.is_empty() && o.rate == 0.0);
        let o = simulate_packet(
            &mut rng,
            &legs,
            &[[0, 1], [0, 0]],
            Direction::Uplink,
            &ChannelParams::default(),
            &budget(),
        );
        assert_eq!(o.legs.len(), 1);
    }

    #[test]
    fn duplicate_delivers_if_either_leg_does() {
        let b = budget();
        let ch = ChannelParams::default();
        let legs = [
            UserLeg { leg: Leg::Macro, cell: crate::radio::CellId::Macro, pool: 0, mean_snr: [db_to_linear(-30.0); 2] },
            UserLeg {
                leg: Leg::Small,
                cell: crate::radio::CellId::Small(0),
                pool: 1,
                mean_snr: [db_to_linear(60.0); 2],
            },
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let o = simulate_packet(&mut rng, &legs, &[[1, 1], [1, 1]], Direction::Downlink, &ch, &b);
            assert_eq!(o.delivered, o.legs.iter().any(|l| l.delivered));
            if o.delivered {
                let fastest = o.legs.iter().filter(|l| l.delivered).map(|l| l.latency).fold(f64::INFINITY, f64::min);
                assert_eq!(o.latency, Some(fastest));
            }
        }
    }

    #[test]
    fn engineered_snr_hits_probability() {
        let b = budget();
        let ch = ChannelParams::default();
        let snr = single_rb_snr_for_success(0.9, Leg::Macro, &ch, &b);
        let legs = [UserLeg { leg: Leg::Macro, cell: crate::radio::CellId::Macro, pool: 0, mean_snr: [snr; 2] }];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 20_000;
        let ok = (0..n)
            .filter(|_| simulate_packet(&mut rng, &legs, &[[1, 1], [0, 0]], Direction::Downlink, &ch, &b).delivered)
            .count();
        assert!((ok as f64 / n as f64 - 0.9).abs() < 0.01, "{ok}");
    }

    #[test]
    fn serial_equals_parallel() {
        let cfg = small_cfg();
        for grade in [Grade::Normal, Grade::Ultra] {
            assert_eq!(run_monte_carlo(&cfg, grade, 5, false).unwrap(), run_monte_carlo(&cfg, grade, 5, true).unwrap());
        }
    }

    #[test]
    fn grades_share_deployments() {
        let cfg = small_cfg();
        let n = run_iteration_detail(&cfg, Grade::Normal, 8, 1).unwrap();
        let u = run_iteration_detail(&cfg, Grade::Ultra, 8, 1).unwrap();
        assert_eq!(n.deployment, u.deployment);
        assert_eq!(n.result.dual_users, 0);
        assert_eq!(u.result.dual_users, u.modes.iter().filter(|m| **m != ConnectivityMode::Single).count());
    }

    #[test]
    fn without_small_cells_grades_coincide() {
        let mut cfg = small_cfg();
        cfg.deployment.n_small_cells = 0;
        let n = run_monte_carlo(&cfg, Grade::Normal, 2, true).unwrap();
        let u = run_monte_carlo(&cfg, Grade::Ultra, 2, true).unwrap();
        assert_eq!(n.samples(), u.samples());
    }
}
