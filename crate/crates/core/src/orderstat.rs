//! Joint density of order statistics and a Monte Carlo normalization check.
//!
//! For `n` i.i.d. draws with density `f`, the sorted sample
//! `x_(1) <= ... <= x_(n)` has joint density `n! * prod f(x_i)` on the
//! ordered region and zero elsewhere.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Largest `n` whose factorial fits exactly in a `u64`.
pub const MAX_ORDER: usize = 20;

/// Largest `n` accepted by [`normalization_check`].
pub const MAX_CHECK_ORDER: usize = 6;

/// Smallest sample count accepted by [`normalization_check`].
pub const MIN_CHECK_SAMPLES: u64 = 100_000;

const SHARDS: u64 = 16;

/// Closed-form normalizable densities on a bounded interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DensitySpec {
    /// Constant density on `[a, b]`.
    Uniform { a: f64, b: f64 },
    /// Density proportional to `x^alpha` on `[a, b]`, `a >= 0`.
    Power { alpha: f64, a: f64, b: f64 },
}

impl DensitySpec {
    pub fn validate(&self) -> Result<()> {
        let (a, b) = self.support();
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::usage(format!("density support [{a}, {b}] is empty or unbounded")));
        }
        if let DensitySpec::Power { alpha, a, .. } = *self {
            if !alpha.is_finite() {
                return Err(Error::usage("power exponent must be finite"));
            }
            if a < 0.0 {
                return Err(Error::usage("power density needs a >= 0"));
            }
            if a == 0.0 && alpha <= -1.0 {
                return Err(Error::usage("power density on [0, b] needs alpha > -1"));
            }
        }
        Ok(())
    }

    pub fn support(&self) -> (f64, f64) {
        match *self {
            DensitySpec::Uniform { a, b } | DensitySpec::Power { a, b, .. } => (a, b),
        }
    }

    fn normalizer(&self) -> f64 {
        match *self {
            DensitySpec::Uniform { a, b } => b - a,
            DensitySpec::Power { alpha, a, b } => {
                if alpha == -1.0 {
                    (b / a).ln()
                } else {
                    let p = alpha + 1.0;
                    (b.powf(p) - a.powf(p)) / p
                }
            }
        }
    }

    /// Density at `x`; zero outside the support.
    pub fn pdf(&self, x: f64) -> f64 {
        let (a, b) = self.support();
        if !(a..=b).contains(&x) {
            return 0.0;
        }
        match *self {
            DensitySpec::Uniform { .. } => 1.0 / self.normalizer(),
            DensitySpec::Power { alpha, .. } => x.powf(alpha) / self.normalizer(),
        }
    }
}

/// `n!` for `n <= 20`.
pub fn factorial(n: usize) -> Result<u64> {
    if n > MAX_ORDER {
        return Err(Error::usage(format!("factorial of {n} overflows (max order {MAX_ORDER})")));
    }
    Ok((1..=n as u64).product())
}

/// Joint order-statistic density at `xs`.
///
/// Returns `n! * prod f(x_i)` when `xs` is non-decreasing and zero
/// otherwise. Ties count as ordered.
pub fn joint_density(f: &DensitySpec, xs: &[f64]) -> Result<f64> {
    f.validate()?;
    if xs.is_empty() {
        return Err(Error::usage("order statistics need at least one sample"));
    }
    let n_fact = factorial(xs.len())?;
    if xs.windows(2).any(|w| w[0] > w[1]) {
        return Ok(0.0);
    }
    Ok(n_fact as f64 * xs.iter().map(|&x| f.pdf(x)).product::<f64>())
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonteCarloEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub samples: u64,
}

/// Estimates the integral of the joint density over the support box
/// `[a, b]^n` by uniform sampling.
///
/// Work is split into fixed shards with seeds derived from `seed`; shard
/// sums are combined in shard order, so the result does not depend on
/// thread scheduling.
pub fn normalization_check(
    f: &DensitySpec,
    n: usize,
    samples: u64,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    f.validate()?;
    if n == 0 || n > MAX_CHECK_ORDER {
        return Err(Error::usage(format!("order must lie in 1..={MAX_CHECK_ORDER}, got {n}")));
    }
    if samples < MIN_CHECK_SAMPLES {
        return Err(Error::usage(format!(
            "normalization check needs at least {MIN_CHECK_SAMPLES} samples, got {samples}"
        )));
    }
    let (a, b) = f.support();
    let volume = (b - a).powi(n as i32);

    let shard_sums: Vec<(f64, f64)> = (0..SHARDS)
        .into_par_iter()
        .map(|shard| {
            let count = samples / SHARDS + u64::from(shard < samples % SHARDS);
            let mut rng = rng::seeded(rng::derive(seed, &[shard]));
            let mut xs = vec![0.0; n];
            let (mut sum, mut sum_sq) = (0.0, 0.0);
            for _ in 0..count {
                for x in xs.iter_mut() {
                    *x = rng.random_range(a..b);
                }
                let g = volume * joint_density(f, &xs).expect("validated above");
                sum += g;
                sum_sq += g * g;
            }
            (sum, sum_sq)
        })
        .collect();

    let (sum, sum_sq) = shard_sums
        .iter()
        .fold((0.0, 0.0), |acc, s| (acc.0 + s.0, acc.1 + s.1));
    let m = samples as f64;
    let mean = sum / m;
    let variance = ((sum_sq / m) - mean * mean).max(0.0) * m / (m - 1.0);
    Ok(MonteCarloEstimate {
        estimate: mean,
        std_error: (variance / m).sqrt(),
        samples,
    })
}
