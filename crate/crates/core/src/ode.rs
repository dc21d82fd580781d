//! Adaptive Dormand–Prince 5(4) integrator for small non-stiff systems.

use crate::error::{Error, Result};

/// Tolerances and step controls for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub rel: f64,
    pub abs: f64,
    pub max_steps: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rel: 1e-10, abs: 1e-12, max_steps: 1_000_000 }
    }
}

/// Solution at one output time.
#[derive(Debug, Clone)]
pub struct Sample {
    pub t: f64,
    pub y: Vec<f64>,
    /// Accumulated magnitude of the accepted local error estimates, per component.
    pub err: Vec<f64>,
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// Difference between the 5th-order and embedded 4th-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates `y' = f(t, y)` from `(t0, y0)` and reports the state at every
/// time of `t_out` (nondecreasing, all `≥ t0`). Steps are clipped to land
/// exactly on output times.
pub fn integrate<F>(mut f: F, t0: f64, y0: &[f64], t_out: &[f64], tol: Tolerances) -> Result<Vec<Sample>>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let n = y0.len();
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut acc_err = vec![0.0; n];
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    let mut stage = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    let mut out = Vec::with_capacity(t_out.len());
    let mut steps = 0usize;

    f(t, &y, &mut k[0])?;
    let mut h = initial_step(&y, &k[0], tol, t_out.last().map_or(0.0, |&e| e - t0));

    for &target in t_out {
        if target < t {
            return Err(Error::Domain(format!("output times must be nondecreasing and ≥ {t0}")));
        }
        while t < target {
            steps += 1;
            if steps > tol.max_steps {
                return Err(Error::IntegrationFailure {
                    t,
                    reason: format!("exceeded {} steps", tol.max_steps),
                });
            }
            let remaining = target - t;
            let last = h >= remaining;
            let h_try = if last { remaining } else { h };
            if h_try <= 1e-14 * t.abs().max(1.0) {
                return Err(Error::StepUnderflow { t, h: h_try });
            }

            for s in 1..7 {
                let (done, rest) = k.split_at_mut(s);
                for i in 0..n {
                    let acc: f64 = done.iter().zip(&A[s]).map(|(kj, a)| a * kj[i]).sum();
                    stage[i] = y[i] + h_try * acc;
                }
                f(t + C[s] * h_try, &stage, &mut rest[0])?;
            }
            // FSAL: stage 6 argument is the 5th-order solution.
            y_new.copy_from_slice(&stage);

            let mut norm = 0.0;
            for i in 0..n {
                let mut e = 0.0;
                for (s, ks) in k.iter().enumerate() {
                    e += E[s] * ks[i];
                }
                e *= h_try;
                stage[i] = e;
                let sc = tol.abs + tol.rel * y[i].abs().max(y_new[i].abs());
                norm += (e / sc) * (e / sc);
            }
            let norm = (norm / n.max(1) as f64).sqrt();
            if !norm.is_finite() {
                h = 0.25 * h_try;
                continue;
            }

            if norm <= 1.0 {
                t = if last { target } else { t + h_try };
                for i in 0..n {
                    acc_err[i] += stage[i].abs();
                }
                std::mem::swap(&mut y, &mut y_new);
                let (first, rest) = k.split_at_mut(1);
                first[0].copy_from_slice(&rest[5]);
                let factor = if norm == 0.0 { 5.0 } else { (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0) };
                if !last || factor < 1.0 {
                    h = h_try * factor;
                }
            } else {
                h = h_try * (0.9 * norm.powf(-0.2)).clamp(0.1, 1.0);
            }
        }
        out.push(Sample { t: target, y: y.clone(), err: acc_err.clone() });
    }
    Ok(out)
}

fn initial_step(y: &[f64], dy: &[f64], tol: Tolerances, span: f64) -> f64 {
    let n = y.len().max(1) as f64;
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for (yi, di) in y.iter().zip(dy) {
        let sc = tol.abs + tol.rel * yi.abs();
        d0 += (yi / sc).powi(2);
        d1 += (di / sc).powi(2);
    }
    let (d0, d1) = ((d0 / n).sqrt(), (d1 / n).sqrt());
    let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h = h.max(1e-6);
    if span > 0.0 {
        h.min(span)
    } else {
        h
    }
}
