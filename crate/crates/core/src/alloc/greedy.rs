//! Greedy marginal-utility allocation.

use std::collections::HashMap;

use super::{dir_index, Allocation, AllocationProblem, Grant, UserCounts};
use crate::radio::Direction;

/// Largest bundle of RBs the greedy looks ahead over when scoring a user.
pub const LOOKAHEAD_RBS: usize = 4;

/// Memoized direction utilities, keyed by `(user, direction, macro RBs, small RBs)`.
struct Planner<'a> {
    problem: &'a AllocationProblem,
    memo: HashMap<(usize, usize, usize, usize), f64>,
}

impl Planner<'_> {
    fn direction(&mut self, u: usize, d: usize, counts: &UserCounts) -> f64 {
        let key = (u, d, counts[0][d], counts[1][d]);
        if let Some(&v) = self.memo.get(&key) {
            return v;
        }
        let p = self.problem;
        let v = p.profile.direction_value(&p.planned_metrics(u, Direction::BOTH[d], counts));
        self.memo.insert(key, v);
        v
    }

    /// `(user utility, DL + UL utility)`, as [`AllocationProblem::user_value`].
    fn user(&mut self, u: usize, counts: &UserCounts) -> (f64, f64) {
        let (dl, ul) = (self.direction(u, 0, counts), self.direction(u, 1, counts));
        (self.problem.profile.combine_user(dl, ul), dl + ul)
    }
}

/// Best next move of one user: the RB to grant and the per-RB gain of the
/// bundle it starts.
#[derive(Debug, Clone, Copy)]
struct Move {
    /// Index into the user's legs.
    leg_slot: usize,
    direction: Direction,
    gain: (f64, f64),
}

/// Greedy allocation: repeatedly grants one RB to the `(user, direction, leg)`
/// with the largest marginal gain, until every pool is full or no grant gains
/// anything.
///
/// Utilities are S-shaped in the RB count and a user's utility is
/// `min(DL, UL)`, so a single RB often gains nothing on its own (a user's
/// first RB, or a weak link that needs several RBs before loss drops). The
/// marginal gain of a user is therefore scored over bundles: every feasible
/// increment of 1 to [`LOOKAHEAD_RBS`] RBs across its directions and legs is
/// tried, and the best gain per RB counts. The user with the best score gets
/// the first RB of its best bundle, in the order DL before UL, macro leg
/// before small-cell leg.
///
/// Gains are lexicographic, as in [`super::Objective`]: the increase in user
/// utility first, then the increase in direction utilities. Ties go to the
/// lowest user id.
///
/// Allocation runs in two phases. Pools that no macro leg draws on (the
/// small-cell pools under per-cell pooling) can only serve their own
/// dual-connected users, so they are filled first; the contended pools
/// follow, with every pool open. Otherwise a dual-connected user could take
/// macro RBs that single-connected users need while its small cell idles.
pub fn allocate_greedy(problem: &AllocationProblem) -> Allocation {
    allocate_greedy_with(problem, |g| g)
}

/// [`allocate_greedy`] with per-RB gains passed through `transform` before
/// comparison. A strictly increasing transform with `transform(0) == 0`
/// leaves the result unchanged.
pub fn allocate_greedy_with(problem: &AllocationProblem, transform: impl Fn(f64) -> f64) -> Allocation {
    let n = problem.users.len();
    let mut planner = Planner { problem, memo: HashMap::new() };
    let mut counts: Vec<UserCounts> = vec![[[0; 2]; 2]; n];
    let mut free: Vec<usize> = problem.pools.iter().map(|p| p.size).collect();
    let mut allocation = problem.empty_allocation();
    let better = |a: (f64, f64), b: (f64, f64)| a.0 > b.0 || (a.0 == b.0 && a.1 > b.1);

    // Increment vectors over the (direction, leg slot) pairs of a user, by
    // size and then in tie-break order (DL before UL, macro before small).
    let bundles = |slots: usize| -> Vec<Vec<usize>> {
        let mut all: Vec<Vec<usize>> = vec![vec![]];
        for _ in 0..slots {
            all =
                all.into_iter().flat_map(|v| (0..=LOOKAHEAD_RBS).map(move |k| [v.clone(), vec![k]].concat())).collect();
        }
        all.retain(|v| (1..=LOOKAHEAD_RBS).contains(&v.iter().sum::<usize>()));
        all.sort_by(|x, y| x.iter().sum::<usize>().cmp(&y.iter().sum::<usize>()).then_with(|| y.cmp(x)));
        all
    };
    let bundle_sets = [bundles(2), bundles(4)];

    // Best bundle of user `u` that starts with an RB from an open pool. The
    // rest of the bundle may use any pool with room, so its value reflects
    // what that first RB makes possible.
    let best_move =
        |planner: &mut Planner, u: usize, counts: &UserCounts, free: &[usize], open: &[bool]| -> Option<Move> {
            let legs = &problem.users[u];
            let base = planner.user(u, counts);
            // Slots in tie-break order: (direction, leg slot).
            let slots: Vec<(usize, usize)> = (0..2).flat_map(|d| (0..legs.len()).map(move |l| (d, l))).collect();
            let mut best: Option<Move> = None;
            let mut used = vec![0usize; free.len()];
            for delta in &bundle_sets[legs.len() - 1] {
                used.iter_mut().for_each(|x| *x = 0);
                for (k, &(_, l)) in delta.iter().zip(&slots) {
                    used[legs[l].pool] += k;
                }
                if used.iter().zip(free).any(|(u, f)| u > f) {
                    continue;
                }
                let Some(first) = delta.iter().zip(&slots).position(|(&k, &(_, l))| k > 0 && open[legs[l].pool]) else {
                    continue;
                };
                let size: usize = delta.iter().sum();
                let mut next = *counts;
                for (k, &(d, l)) in delta.iter().zip(&slots) {
                    next[legs[l].leg.index()][d] += k;
                }
                let (p, s) = planner.user(u, &next);
                // Utilities are non-decreasing in RB counts; clamp rounding noise.
                let gain =
                    (transform((p - base.0).max(0.0) / size as f64), transform((s - base.1).max(0.0) / size as f64));
                if best.is_none_or(|b| better(gain, b.gain)) {
                    let (d, leg_slot) = slots[first];
                    best = Some(Move { leg_slot, direction: Direction::BOTH[d], gain });
                }
            }
            best
        };

    let shared: Vec<bool> = (0..problem.pools.len())
        .map(|p| problem.users.iter().flatten().any(|l| l.leg == super::Leg::Macro && l.pool == p))
        .collect();
    let exclusive: Vec<bool> = shared.iter().map(|s| !s).collect();
    let everything = vec![true; problem.pools.len()];
    for open in [&exclusive, &everything] {
        if !open.iter().any(|&o| o) {
            continue;
        }
        let mut moves: Vec<Option<Move>> =
            (0..n).map(|u| best_move(&mut planner, u, &counts[u], &free, open)).collect();
        loop {
            let mut chosen: Option<(usize, Move)> = None;
            for (u, m) in moves.iter().enumerate() {
                if let Some(m) = m {
                    if chosen.is_none_or(|(_, c)| better(m.gain, c.gain)) {
                        chosen = Some((u, *m));
                    }
                }
            }
            let Some((user, m)) = chosen else { break };
            if !(m.gain.0 > 0.0 || m.gain.1 > 0.0) {
                break;
            }
            let leg = problem.users[user][m.leg_slot];
            let placed = allocation.assign(leg.pool, Grant { user, leg: leg.leg, direction: m.direction });
            debug_assert!(placed);
            free[leg.pool] -= 1;
            counts[user][leg.leg.index()][dir_index(m.direction)] += 1;
            // Other users' bundles only change once the pool can no longer hold them.
            let pool_tight = free[leg.pool] < LOOKAHEAD_RBS;
            for u in 0..n {
                if u == user || (pool_tight && problem.users[u].iter().any(|l| l.pool == leg.pool)) {
                    moves[u] = best_move(&mut planner, u, &counts[u], &free, open);
                }
            }
        }
    }
    allocation
}
