//! Truncated forward Kolmogorov equation on states 0..=N with an absorbing
//! bucket collecting the probability flux out of state N.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::rates::ProcessSpec;

pub const MASTER_REL_TOL: f64 = 1e-10;
pub const MASTER_ABS_TOL: f64 = 1e-14;
/// Largest leaked mass accepted before the state cap is doubled.
pub const LEAK_TOL: f64 = 1e-10;
pub const MAX_RETRIES: usize = 3;
const MAX_STEPS: usize = 200_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncatedDistribution {
    pub t: f64,
    /// P(n, t) for n = 0..=n_max.
    pub probs: Vec<f64>,
    pub leaked_mass: f64,
    pub n_max: usize,
    pub steps: usize,
}

impl TruncatedDistribution {
    pub fn prob(&self, m: usize) -> f64 {
        self.probs.get(m).copied().unwrap_or(0.0)
    }
}

/// Starting state cap: n0 + ⌈10 + 6√(n0+1) + e^{−ρ} n0⌉, widened by the
/// spread of the negative-binomial tail, whose decay rate is set by W(t).
pub fn initial_state_cap(spec: &ProcessSpec, n0: u64, t: f64) -> Result<usize> {
    let rho = spec.rho(t)?;
    let n = n0 as f64;
    let base = n + (10.0 + 6.0 * (n + 1.0).sqrt() + (-rho).exp() * n).ceil();
    // W(t) = e^{−ρ(t)} (1 + ∫ e^{ρ} μ), trapezoid estimate
    let panels = 64;
    let h = t / panels as f64;
    let mut integral = 0.0;
    let mut prev = spec.mu_at(0.0);
    for k in 1..=panels {
        let tau = k as f64 * h;
        let cur = spec.rho(tau)?.exp() * spec.mu_at(tau);
        integral += 0.5 * h * (prev + cur);
        prev = cur;
    }
    let w = (-rho).exp() * (1.0 + integral);
    let r = n + spec.beta;
    let spread = w * (25.0 + 2.0 * r + 10.0 * r.sqrt());
    let cap = (base + spread).ceil();
    if !cap.is_finite() || cap > 1e7 {
        return Err(Error::Truncation(format!("state cap estimate {cap} is too large")));
    }
    Ok(cap as usize)
}

/// Integrates the truncated master equation from a point mass at `n0`,
/// doubling `n_max` up to [`MAX_RETRIES`] times while the leak exceeds
/// [`LEAK_TOL`].
pub fn integrate_master(spec: &ProcessSpec, n0: u64, t: f64, n_max: usize) -> Result<TruncatedDistribution> {
    if (n0 as usize) > n_max {
        return Err(Error::Domain(format!("n0 = {n0} exceeds n_max = {n_max}")));
    }
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("t must be nonnegative, got {t}")));
    }
    if t > spec.horizon() {
        return Err(Error::Domain(format!("t = {t} beyond the rate horizon {}", spec.horizon())));
    }
    let mut cap = n_max;
    for attempt in 0..=MAX_RETRIES {
        let dist = integrate_fixed(spec, n0 as usize, t, cap)?;
        if dist.leaked_mass <= LEAK_TOL {
            return Ok(dist);
        }
        if attempt == MAX_RETRIES {
            return Err(Error::Truncation(format!(
                "leaked mass {:e} above {LEAK_TOL:e} with n_max = {cap}",
                dist.leaked_mass
            )));
        }
        cap *= 2;
    }
    unreachable!()
}

/// Single integration at a fixed state cap, no retries.
pub fn integrate_fixed(spec: &ProcessSpec, n0: usize, t: f64, n_max: usize) -> Result<TruncatedDistribution> {
    let size = n_max + 2;
    let mut y = vec![0.0; size];
    y[n0] = 1.0;
    let mut steps = 0;
    let mut tc = 0.0;
    let mut h = (t / 16.0).min(0.05);
    let stepper = Radau::new();
    while tc < t {
        if steps >= MAX_STEPS {
            return Err(Error::IntegrationFailure { t: tc, reason: "step budget exhausted".into() });
        }
        h = h.min(t - tc);
        if h <= 1e-14 * tc.max(1.0) {
            return Err(Error::StepUnderflow { t: tc, h });
        }
        let big = stepper.step(spec, tc, h, &y)?;
        let mid = stepper.step(spec, tc, 0.5 * h, &y)?;
        let fine = stepper.step(spec, tc + 0.5 * h, 0.5 * h, &mid)?;
        // Richardson estimate for an order-5 method
        let err = fine
            .iter()
            .zip(&big)
            .zip(&y)
            .map(|((f, b), y0)| (f - b).abs() / 31.0 / (MASTER_ABS_TOL + MASTER_REL_TOL * f.abs().max(y0.abs())))
            .fold(0.0, f64::max);
        steps += 1;
        if err <= 1.0 {
            tc = if t - tc - h <= 1e-15 * t { t } else { tc + h };
            y = fine;
        }
        let factor = if err == 0.0 { 4.0 } else { (0.9 * err.powf(-1.0 / 6.0)).clamp(0.2, 4.0) };
        h *= factor;
    }
    let leaked_mass = y[n_max + 1].max(0.0);
    y.truncate(n_max + 1);
    for p in &mut y {
        *p = p.max(0.0);
    }
    Ok(TruncatedDistribution { t, probs: y, leaked_mass, n_max, steps })
}

/// Tridiagonal generator at one time: `up[n]` is the rate n → n+1 and
/// `down[n]` the rate n → n−1.
struct Generator {
    up: Vec<f64>,
    down: Vec<f64>,
}

impl Generator {
    fn at(spec: &ProcessSpec, t: f64, size: usize) -> Self {
        let (l, m, g) = (spec.lambda_at(t), spec.mu_at(t), spec.gamma_at(t));
        let n_max = size - 2;
        let mut up = vec![0.0; size];
        let mut down = vec![0.0; size];
        for n in 0..=n_max {
            up[n] = g + n as f64 * l;
            down[n] = n as f64 * m;
        }
        Self { up, down }
    }

    /// A[row][col] for |row − col| ≤ 1.
    fn entry(&self, row: usize, col: usize) -> f64 {
        let bucket = self.up.len() - 1;
        if col == bucket {
            0.0
        } else if row == col {
            -(self.up[col] + self.down[col])
        } else if row == col + 1 {
            self.up[col]
        } else if row + 1 == col {
            self.down[col]
        } else {
            0.0
        }
    }

    fn apply(&self, y: &[f64]) -> Vec<f64> {
        let s = y.len();
        (0..s)
            .map(|r| {
                let lo = r.saturating_sub(1);
                let hi = (r + 1).min(s - 1);
                (lo..=hi).map(|c| self.entry(r, c) * y[c]).sum()
            })
            .collect()
    }
}

/// Three-stage Radau IIA (order 5, stiffly accurate).
struct Radau {
    a: [[f64; 3]; 3],
    c: [f64; 3],
}

impl Radau {
    fn new() -> Self {
        let s6 = 6f64.sqrt();
        Self {
            a: [
                [(88.0 - 7.0 * s6) / 360.0, (296.0 - 169.0 * s6) / 1800.0, (-2.0 + 3.0 * s6) / 225.0],
                [(296.0 + 169.0 * s6) / 1800.0, (88.0 + 7.0 * s6) / 360.0, (-2.0 - 3.0 * s6) / 225.0],
                [(16.0 - s6) / 36.0, (16.0 + s6) / 36.0, 1.0 / 9.0],
            ],
            c: [(4.0 - s6) / 10.0, (4.0 + s6) / 10.0, 1.0],
        }
    }

    fn step(&self, spec: &ProcessSpec, t: f64, h: f64, y: &[f64]) -> Result<Vec<f64>> {
        let s = y.len();
        let gens: Vec<Generator> = self.c.iter().map(|&c| Generator::at(spec, t + c * h, s)).collect();
        let ay: Vec<Vec<f64>> = gens.iter().map(|g| g.apply(y)).collect();
        // Unknowns Z_i[s] at index 3s + i.
        let n = 3 * s;
        let mut sys = BandSystem::new(n, 5, 5);
        for st in 0..s {
            for i in 0..3 {
                let row = 3 * st + i;
                sys.add(row, row, 1.0);
                let mut rhs = 0.0;
                for j in 0..3 {
                    let w = h * self.a[i][j];
                    rhs += w * ay[j][st];
                    let lo = st.saturating_sub(1);
                    let hi = (st + 1).min(s - 1);
                    for sc in lo..=hi {
                        let e = gens[j].entry(st, sc);
                        if e != 0.0 {
                            sys.add(row, 3 * sc + j, -w * e);
                        }
                    }
                }
                sys.rhs[row] = rhs;
            }
        }
        let z = sys.solve().ok_or_else(|| Error::IntegrationFailure {
            t,
            reason: "singular stage system".into(),
        })?;
        Ok((0..s).map(|st| y[st] + z[3 * st + 2]).collect())
    }
}

/// Banded linear system solved by Gaussian elimination with partial
/// pivoting. Row r stores columns r−kl ..= r+ku+kl to hold pivoting fill.
struct BandSystem {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
    rhs: Vec<f64>,
}

impl BandSystem {
    fn new(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self { n, kl, ku, width, data: vec![0.0; n * width], rhs: vec![0.0; n] }
    }

    fn idx(&self, r: usize, c: usize) -> usize {
        debug_assert!(c + self.kl >= r && c <= r + self.ku + self.kl);
        r * self.width + (c + self.kl - r)
    }

    fn add(&mut self, r: usize, c: usize, v: f64) {
        let i = self.idx(r, c);
        self.data[i] += v;
    }

    fn get(&self, r: usize, c: usize) -> f64 {
        self.data[self.idx(r, c)]
    }

    fn solve(mut self) -> Option<Vec<f64>> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + kl + ku).min(n - 1);
            let p = (k..=last_row)
                .max_by(|&a, &b| self.get(a, k).abs().total_cmp(&self.get(b, k).abs()))
                .unwrap();
            let pivot = self.get(p, k);
            if pivot == 0.0 || !pivot.is_finite() {
                return None;
            }
            if p != k {
                for c in k..=last_col {
                    let (i, j) = (self.idx(k, c), self.idx(p, c));
                    self.data.swap(i, j);
                }
                self.rhs.swap(k, p);
            }
            for r in (k + 1)..=last_row {
                let f = self.get(r, k) / pivot;
                if f == 0.0 {
                    continue;
                }
                for c in k..=last_col {
                    let v = self.get(k, c);
                    if v != 0.0 {
                        let i = self.idx(r, c);
                        self.data[i] -= f * v;
                    }
                }
                self.rhs[r] -= f * self.rhs[k];
            }
        }
        let mut x = vec![0.0; n];
        for k in (0..n).rev() {
            let last_col = (k + kl + ku).min(n - 1);
            let mut acc = self.rhs[k];
            for c in (k + 1)..=last_col {
                acc -= self.get(k, c) * x[c];
            }
            x[k] = acc / self.get(k, k);
        }
        Some(x)
    }
}
