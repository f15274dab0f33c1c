//! Exact reference computations shared by the oracle tests. Everything here
//! is derived from first principles (binomial enumeration), independent of
//! the simulation code paths under test. Probabilities must lie in (0, 1).
#![allow(dead_code)]

/// P(Binomial(n, p) = k), by the multiplicative recurrence.
pub fn binomial_pmf(n: u64, k: u64, p: f64) -> f64 {
    if k > n {
        return 0.0;
    }
    let mut pmf = (1.0 - p).powi(n as i32);
    for i in 0..k {
        pmf *= (n - i) as f64 / (i + 1) as f64 * (p / (1.0 - p));
    }
    pmf
}

/// P(Binomial(n, p) ≤ k_max).
pub fn binomial_cdf(n: u64, k_max: u64, p: f64) -> f64 {
    let mut pmf = (1.0 - p).powi(n as i32);
    let mut cdf = pmf;
    for i in 0..k_max.min(n) {
        pmf *= (n - i) as f64 / (i + 1) as f64 * (p / (1.0 - p));
        cdf += pmf;
    }
    cdf
}

/// Acceptance probability for an impostor holding a uniformly random
/// candidate identity string of length `u`, with `tolerated` mismatches
/// allowed over all-received photons.
///
/// Each wrong candidate bit independently announces the unexpected value
/// with probability 1/2, and a random candidate has Binomial(u, 1/2) wrong
/// bits, so the acceptance probability is
/// Σ_d C(u,d) 2^{−u} · P(Binomial(d, 1/2) ≤ tolerated).
pub fn random_impostor_accept_probability(u: u64, tolerated: u64) -> f64 {
    (0..=u)
        .map(|d| binomial_pmf(u, d, 0.5) * binomial_cdf(d, tolerated, 0.5))
        .sum()
}

/// Standard deviation of a binomial proportion estimate.
pub fn proportion_sd(p: f64, trials: u64) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}
