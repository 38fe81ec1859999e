//! Prints the decile comparison of ultra and normal grades for a few seeds.

use std::time::Instant;

use tactile_core::grades::Grade;
use tactile_core::sim::{run_monte_carlo, stats, SimConfig};

fn main() {
    let cfg = SimConfig::default();
    for seed in 1..=5u64 {
        let t = Instant::now();
        let ultra = run_monte_carlo(&cfg, Grade::Ultra, seed, true).unwrap().samples();
        let normal = run_monte_carlo(&cfg, Grade::Normal, seed, true).unwrap().samples();
        let d = stats::decile_dominance(&ultra, &normal);
        println!("seed {seed}: dominates={} in {:.1?}", d.holds(), t.elapsed());
        for (q, u, n) in d.deciles {
            println!("  q{q:.1}: ultra {u:.3} normal {n:.3}");
        }
    }
}
