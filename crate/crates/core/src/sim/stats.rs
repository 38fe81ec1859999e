//! Empirical distribution helpers for comparing Monte Carlo samples.

use crate::grades::nearest_rank;

fn sorted(samples: &[f64]) -> Vec<f64> {
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Step points of the empirical CDF: each distinct value with the fraction of
/// samples at or below it.
pub fn empirical_cdf(samples: &[f64]) -> Vec<(f64, f64)> {
    let v = sorted(samples);
    let n = v.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, &x) in v.iter().enumerate() {
        let p = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == x => last.1 = p,
            _ => out.push((x, p)),
        }
    }
    out
}

/// Nearest-rank quantile, `q` in (0, 1]. `None` for an empty sample.
pub fn quantile(samples: &[f64], q: f64) -> Option<f64> {
    (!samples.is_empty()).then(|| nearest_rank(&sorted(samples), q))
}

/// Nearest-rank quantiles at 0.1, 0.2, ..., 0.9.
pub fn deciles(samples: &[f64]) -> Vec<f64> {
    if samples.is_empty() {
        return Vec::new();
    }
    let v = sorted(samples);
    (1..=9).map(|i| nearest_rank(&v, i as f64 / 10.0)).collect()
}

pub fn mean(samples: &[f64]) -> f64 {
    samples.iter().sum::<f64>() / samples.len() as f64
}

/// Sample standard deviation (n - 1 denominator); 0 for fewer than two samples.
pub fn std_dev(samples: &[f64]) -> f64 {
    if samples.len() < 2 {
        return 0.0;
    }
    let m = mean(samples);
    (samples.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (samples.len() - 1) as f64).sqrt()
}

/// Result of comparing two samples decile by decile.
#[derive(Debug, Clone, PartialEq)]
pub struct Dominance {
    /// `(q, quantile of a, quantile of b)` for q = 0.1..0.9.
    pub deciles: Vec<(f64, f64, f64)>,
}

impl Dominance {
    /// True when `a` is at least `b` at every decile.
    pub fn holds(&self) -> bool {
        !self.deciles.is_empty() && self.deciles.iter().all(|&(_, a, b)| a >= b)
    }
}

/// First-order dominance check of `a` over `b` at the deciles.
pub fn decile_dominance(a: &[f64], b: &[f64]) -> Dominance {
    let (da, db) = (deciles(a), deciles(b));
    Dominance { deciles: da.iter().zip(&db).enumerate().map(|(i, (&x, &y))| ((i + 1) as f64 / 10.0, x, y)).collect() }
}

/// Two-sample Kolmogorov-Smirnov statistic and its asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64) {
    if a.is_empty() || b.is_empty() {
        return (0.0, 1.0);
    }
    let (a, b) = (sorted(a), sorted(b));
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    let ne = n * m / (n + m);
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    (d, kolmogorov_q(lambda))
}

/// Kolmogorov survival function `2 * sum (-1)^(j-1) exp(-2 j^2 l^2)`.
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=100 {
        let term = sign * (-2.0 * (j * j) as f64 * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-12 * sum.abs() {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}
