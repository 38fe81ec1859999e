//! Availability and reliability estimators on synthetic Bernoulli traces stay
//! within four binomial standard errors of the true probability.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tactile_core::grades::{measure_availability, measure_reliability, InterfaceTrace, TraceEvent};

const N: usize = 1_000_000;
const RUNS: u64 = 100;
const PROBABILITIES: [f64; 3] = [0.9, 0.999, 0.99999];
const PDU_BITS: u64 = 256;
const DEADLINE: f64 = 0.5e-3;

fn availability_trace(p: f64, seed: u64) -> InterfaceTrace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = InterfaceTrace::new();
    for i in 0..N {
        t.push(i as f64 * 1e-4, TraceEvent::AttemptAccess { granted: rng.random_bool(p) }).unwrap();
    }
    t
}

/// Every PDU is sent; with probability `p` it arrives within the deadline,
/// otherwise it is either lost or arrives late.
fn reliability_trace(p: f64, seed: u64) -> InterfaceTrace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = InterfaceTrace::new();
    for i in 0..N as u64 {
        let time = i as f64 * 1e-2;
        t.push(time, TraceEvent::PduSent { id: i, size_bits: PDU_BITS }).unwrap();
        let delay = if rng.random_bool(p) {
            rng.random_range(0.0..=DEADLINE)
        } else if rng.random_bool(0.5) {
            continue;
        } else {
            DEADLINE * (1.0 + rng.random::<f64>()) + 1e-9
        };
        t.push(time + delay, TraceEvent::PduDelivered { id: i, delay }).unwrap();
    }
    t
}

fn check(name: &str, estimate: impl Fn(f64, u64) -> f64) {
    for p in PROBABILITIES {
        let tolerance = 4.0 * (p * (1.0 - p) / N as f64).sqrt();
        let within = (0..RUNS).filter(|&seed| (estimate(p, seed) - p).abs() <= tolerance).count();
        println!("{name} p={p}: {within}/{RUNS} runs within {tolerance:.3e}");
        assert!(within >= 99, "{name} p={p}: only {within}/{RUNS} within tolerance");
    }
}

#[test]
fn availability_estimator() {
    check("availability", |p, seed| measure_availability(&availability_trace(p, seed)).unwrap());
}

#[test]
fn reliability_estimator() {
    check("reliability", |p, seed| {
        measure_reliability(&reliability_trace(p, 1000 + seed), PDU_BITS, DEADLINE).unwrap()
    });
}
