//! Exact stochastic simulation of the birth-death-immigration process with
//! time-varying rates, by thinning against windowed rate bounds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rates::ProcessSpec;

/// Longest lookahead window.
pub const MAX_WINDOW: f64 = 0.1;
/// Relative padding on window bounds against rounding in the suprema.
const BOUND_PAD: f64 = 1e-12;

/// The random stream of trajectory `k` under `seed`.
pub fn substream(seed: u64, k: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k);
    rng
}

struct Bounds {
    lambda: f64,
    mu: f64,
    gamma: f64,
}

impl Bounds {
    fn on(spec: &ProcessSpec, t0: f64, t1: f64) -> Result<Self> {
        let lambda = spec.lambda.sup(t0, t1)?;
        let mu = spec.mu.sup(t0, t1)?;
        if !lambda.is_finite() || !mu.is_finite() {
            return Err(Error::UnboundedRate { t0, t1 });
        }
        Ok(Self { lambda, mu, gamma: spec.beta * lambda })
    }

    fn total(&self, n: u64) -> f64 {
        (self.gamma + n as f64 * (self.lambda + self.mu)) * (1.0 + BOUND_PAD)
    }
}

/// Simulates one path from `n0` at time 0 and returns the count at `t_end`.
pub fn ssa_trajectory<R: Rng + ?Sized>(spec: &ProcessSpec, n0: u64, t_end: f64, rng: &mut R) -> Result<u64> {
    if !(t_end >= 0.0) {
        return Err(Error::Domain(format!("t_end must be nonnegative, got {t_end}")));
    }
    if t_end > spec.horizon() {
        return Err(Error::Domain(format!("t_end = {t_end} beyond the rate horizon {}", spec.horizon())));
    }
    let mut n = n0;
    let mut t = 0.0;
    let mut last_bound = 0.0;
    while t < t_end {
        let width = if last_bound > 0.0 { MAX_WINDOW.min(1.0 / last_bound) } else { MAX_WINDOW };
        let window_end = (t + width).min(t_end);
        let bounds = Bounds::on(spec, t, window_end)?;
        let b = bounds.total(n);
        last_bound = b;
        if b == 0.0 {
            t = window_end;
            continue;
        }
        // propose within the window until a jump is accepted or it runs out
        loop {
            let u: f64 = rng.random();
            let tau = t - (1.0 - u).ln() / b;
            if tau >= window_end {
                t = window_end;
                break;
            }
            t = tau;
            let gamma = spec.gamma_at(tau);
            let birth = n as f64 * spec.lambda_at(tau);
            let death = n as f64 * spec.mu_at(tau);
            let total = gamma + birth + death;
            if total > b {
                return Err(Error::IntegrationFailure {
                    t: tau,
                    reason: format!("propensity {total} exceeds thinning bound {b}"),
                });
            }
            let v: f64 = rng.random::<f64>() * b;
            if v < total {
                if v < gamma + birth {
                    n += 1;
                } else {
                    n -= 1;
                }
                break;
            }
        }
    }
    Ok(n)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SsaEnsemble {
    pub seed: u64,
    pub trajectories: u64,
    pub n0: u64,
    pub t: f64,
    /// counts[m] = number of paths ending in state m.
    pub counts: Vec<u64>,
}

impl SsaEnsemble {
    pub fn count(&self, m: usize) -> u64 {
        self.counts.get(m).copied().unwrap_or(0)
    }

    pub fn phat(&self, m: usize) -> f64 {
        self.count(m) as f64 / self.trajectories as f64
    }

    /// sqrt(p̂ (1 − p̂) / R)
    pub fn stderr(&self, m: usize) -> f64 {
        let p = self.phat(m);
        (p * (1.0 - p) / self.trajectories as f64).sqrt()
    }

    pub fn mean(&self) -> f64 {
        self.counts.iter().enumerate().map(|(m, &c)| m as f64 * c as f64).sum::<f64>() / self.trajectories as f64
    }

    /// Standard error of [`Self::mean`].
    pub fn mean_stderr(&self) -> f64 {
        let r = self.trajectories as f64;
        if r < 2.0 {
            return f64::NAN;
        }
        let mean = self.mean();
        let ss: f64 = self
            .counts
            .iter()
            .enumerate()
            .map(|(m, &c)| c as f64 * (m as f64 - mean).powi(2))
            .sum();
        (ss / (r - 1.0) / r).sqrt()
    }
}

/// Runs `r` independent paths in parallel; path k draws from
/// [`substream`]`(seed, k)` so the histogram does not depend on scheduling.
pub fn ssa_ensemble(spec: &ProcessSpec, n0: u64, t_end: f64, r: u64, seed: u64) -> Result<SsaEnsemble> {
    if r == 0 {
        return Err(Error::Domain("at least one trajectory required".into()));
    }
    let finals = (0..r)
        .into_par_iter()
        .map(|k| ssa_trajectory(spec, n0, t_end, &mut substream(seed, k)))
        .collect::<Result<Vec<u64>>>()?;
    let top = finals.iter().copied().max().unwrap_or(0) as usize;
    let mut counts = vec![0u64; top + 1];
    for m in finals {
        counts[m as usize] += 1;
    }
    Ok(SsaEnsemble { seed, trajectories: r, n0, t: t_end, counts })
}
