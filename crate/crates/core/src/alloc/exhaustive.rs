//! Exhaustive search over RB counts, the reference for small instances.

use super::{dir_index, AllocError, Allocation, AllocationProblem, Grant, Objective, UserCounts};
use crate::radio::Direction;

pub const BRUTEFORCE_MAX_USERS: usize = 3;
pub const BRUTEFORCE_MAX_RBS: usize = 6;

/// Optimal allocation under the lexicographic [`Objective`], found by trying
/// every split of every pool (RBs within a pool are interchangeable, so only
/// counts matter). The first optimum in enumeration order wins ties.
pub fn allocate_bruteforce(problem: &AllocationProblem) -> Result<Allocation, AllocError> {
    let users = problem.users.len();
    let rbs = problem.total_rbs();
    if users > BRUTEFORCE_MAX_USERS || rbs > BRUTEFORCE_MAX_RBS {
        return Err(AllocError::TooLarge { users, rbs, max_users: BRUTEFORCE_MAX_USERS, max_rbs: BRUTEFORCE_MAX_RBS });
    }

    // Candidate (user, direction, leg slot) triples of each pool, in greedy scan order.
    let mut per_pool: Vec<Vec<(usize, Direction, usize)>> = vec![Vec::new(); problem.pools.len()];
    for (u, legs) in problem.users.iter().enumerate() {
        for direction in Direction::BOTH {
            for (slot, l) in legs.iter().enumerate() {
                per_pool[l.pool].push((u, direction, slot));
            }
        }
    }
    let flat: Vec<(usize, usize, Direction, usize)> =
        per_pool.iter().enumerate().flat_map(|(p, cs)| cs.iter().map(move |&(u, d, s)| (p, u, d, s))).collect();

    let mut state = vec![0usize; flat.len()];
    let mut used = vec![0usize; problem.pools.len()];
    let mut best: Option<(Objective, Vec<usize>)> = None;
    search(problem, &flat, 0, &mut state, &mut used, &mut best);

    let (_, split) = best.expect("the empty allocation is always feasible");
    let mut allocation = problem.empty_allocation();
    for (&(pool, user, direction, slot), &k) in flat.iter().zip(&split) {
        for _ in 0..k {
            let placed = allocation.assign(pool, Grant { user, leg: problem.users[user][slot].leg, direction });
            debug_assert!(placed);
        }
    }
    Ok(allocation)
}

fn search(
    problem: &AllocationProblem,
    flat: &[(usize, usize, Direction, usize)],
    i: usize,
    state: &mut [usize],
    used: &mut [usize],
    best: &mut Option<(Objective, Vec<usize>)>,
) {
    if i == flat.len() {
        let mut counts: Vec<UserCounts> = vec![[[0; 2]; 2]; problem.users.len()];
        for (&(_, u, d, slot), &k) in flat.iter().zip(state.iter()) {
            counts[u][problem.users[u][slot].leg.index()][dir_index(d)] += k;
        }
        let obj = problem.objective(&counts);
        if best.as_ref().is_none_or(|(b, _)| obj.lexicographic_cmp(b).is_gt()) {
            *best = Some((obj, state.to_vec()));
        }
        return;
    }
    let pool = flat[i].0;
    let room = problem.pools[pool].size - used[pool];
    for k in 0..=room {
        state[i] = k;
        used[pool] += k;
        search(problem, flat, i + 1, state, used, best);
        used[pool] -= k;
    }
    state[i] = 0;
}
