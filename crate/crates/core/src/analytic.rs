//! Gauge functions of the product-form evolution operator
//!
//! ```text
//! U(t) = exp(g1 I) exp(g2 a†(β + a†a)) exp(g3 a) exp(g4 a†a)
//! ```
//!
//! assembled from the auxiliary integrals ρ(t) = ∫(μ − λ) and
//! W(t) = e^{−ρ}(1 + ∫ e^{ρ} μ).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{self, Tolerances};
use crate::rates::ProcessSpec;

/// Largest |ρ| the integrator accepts before e^{ρ} is considered unsafe.
pub const RHO_LIMIT: f64 = 700.0;

/// Tolerances of the joint auxiliary pass.
pub const GAUGE_TOLERANCES: Tolerances = Tolerances { rel: 1e-10, abs: 1e-12, max_steps: 1_000_000 };

/// Per-component error estimates carried alongside a [`GaugeState`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct GaugeError {
    pub rho: f64,
    pub w: f64,
    pub g1: f64,
    pub g2: f64,
    pub g3: f64,
    pub g4: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaugeState {
    pub t: f64,
    pub rho: f64,
    #[serde(rename = "W")]
    pub w: f64,
    pub g1: f64,
    pub g2: f64,
    pub g3: f64,
    pub g4: f64,
    pub est_error: GaugeError,
}

impl GaugeState {
    /// The state at t = 0, where U(0) = I.
    pub fn identity() -> Self {
        Self {
            t: 0.0,
            rho: 0.0,
            w: 1.0,
            g1: 0.0,
            g2: 0.0,
            g3: 0.0,
            g4: 0.0,
            est_error: GaugeError::default(),
        }
    }

    pub fn gauges(&self) -> [f64; 4] {
        [self.g1, self.g2, self.g3, self.g4]
    }

    /// Checks 0 ≤ g2 < 1, g3 ≥ 0 and finiteness.
    pub fn check_consistent(&self) -> Result<()> {
        let finite = [self.rho, self.w, self.g1, self.g2, self.g3, self.g4]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::GaugeInconsistent(format!("non-finite gauge at t = {}", self.t)));
        }
        if !(0.0..1.0).contains(&self.g2) {
            return Err(Error::GaugeInconsistent(format!("g2 = {} outside [0, 1)", self.g2)));
        }
        if self.g3 < 0.0 {
            return Err(Error::GaugeInconsistent(format!("g3 = {} negative", self.g3)));
        }
        Ok(())
    }
}

/// Which sign to use for the a†a coefficient of the generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum A4Sign {
    /// a4 = −(λ + μ), the coefficient obtained by expanding the generator.
    Expanded,
    /// a4 = −(λ − μ), as printed in the original derivation.
    AsPrinted,
}

/// Coefficients a1…a4 of H(t) = Σ a_k(t) H_k for the ordered basis
/// (I, a†(β + a†a), a, a†a).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorCoefficients {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
}

impl GeneratorCoefficients {
    pub fn at(spec: &ProcessSpec, t: f64, sign: A4Sign) -> Self {
        let lambda = spec.lambda_at(t);
        let mu = spec.mu_at(t);
        let a4 = match sign {
            A4Sign::Expanded => -(lambda + mu),
            A4Sign::AsPrinted => -(lambda - mu),
        };
        Self { a1: -spec.gamma_at(t), a2: lambda, a3: mu, a4 }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.a1, self.a2, self.a3, self.a4]
    }
}

fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() {
        return Err(Error::Domain("empty time grid".into()));
    }
    if !(t_grid[0] >= 0.0) {
        return Err(Error::Domain(format!("time grid must start at t ≥ 0, got {}", t_grid[0])));
    }
    if t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Domain("time grid must be strictly increasing".into()));
    }
    Ok(())
}

fn assemble(spec: &ProcessSpec, t: f64, y: &[f64], err: &[f64]) -> GaugeState {
    let (rho, v, i1, i3) = (y[0], y[1], y[2], y[3]);
    let w = (-rho).exp() * (1.0 + v);
    let e_rho = err[0];
    let e_w = (-rho).exp() * err[1] + w * e_rho;
    let g3 = rho.exp() * w * w * i3;
    let est_error = GaugeError {
        rho: e_rho,
        w: e_w,
        g1: spec.beta * (e_rho + err[2]),
        g2: e_w / (w * w),
        g3: g3.abs() * (e_rho + 2.0 * e_w / w) + rho.exp() * w * w * err[3],
        g4: e_rho + 2.0 * e_w / w,
    };
    GaugeState {
        t,
        rho,
        w,
        g1: spec.beta * (rho - i1),
        g2: 1.0 - 1.0 / w,
        g3,
        g4: 0.0 - rho - 2.0 * w.ln(),
        est_error,
    }
}

/// Gauge functions on `t_grid` from one joint integration of
/// ρ' = μ − λ, V' = e^{ρ} μ, I1' = μ / W, I3' = e^{−ρ} μ / W²
/// with W = e^{−ρ}(1 + V).
pub fn compute_gauge(spec: &ProcessSpec, t_grid: &[f64]) -> Result<Vec<GaugeState>> {
    check_grid(t_grid)?;
    let last = *t_grid.last().unwrap();
    if last > spec.horizon() {
        return Err(Error::Domain(format!(
            "t = {last} beyond the rate families' span {}",
            spec.horizon()
        )));
    }
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        let rho = y[0];
        if !(rho.abs() <= RHO_LIMIT) {
            return Err(Error::Overflow { t, rho });
        }
        let lambda = spec.lambda_at(t);
        let mu = spec.mu_at(t);
        let e_rho = rho.exp();
        let w = (1.0 + y[1]) / e_rho;
        dy[0] = mu - lambda;
        dy[1] = e_rho * mu;
        dy[2] = mu / w;
        dy[3] = mu / (e_rho * w * w);
        Ok(())
    };
    let samples = ode::integrate(rhs, 0.0, &[0.0; 4], t_grid, GAUGE_TOLERANCES)?;
    samples
        .iter()
        .map(|s| {
            if s.y[0].abs() > RHO_LIMIT {
                return Err(Error::Overflow { t: s.t, rho: s.y[0] });
            }
            Ok(assemble(spec, s.t, &s.y, &s.err))
        })
        .collect()
}

/// (e^x − 1)/x, continuous at 0.
fn expm1_ratio(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.exp_m1() / x
    }
}

/// Closed-form gauges for constant λ0, μ0.
pub fn constant_rate_gauge(lambda0: f64, mu0: f64, beta: f64, t: f64) -> Result<GaugeState> {
    for (name, v) in [("lambda0", lambda0), ("mu0", mu0), ("beta", beta), ("t", t)] {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::Domain(format!("{name} must be finite and nonnegative, got {v}")));
        }
    }
    if t == 0.0 {
        return Ok(GaugeState::identity());
    }
    let d = mu0 - lambda0;
    let rho = d * t;
    if rho.abs() > RHO_LIMIT {
        return Err(Error::Overflow { t, rho });
    }
    // V = ∫ e^{ρ} μ0, W = e^{−ρ}(1 + V).
    let (v, w) = if d == 0.0 {
        (mu0 * t, 1.0 + mu0 * t)
    } else {
        let v = mu0 * t * expm1_ratio(rho);
        let w = (-rho).exp() + mu0 * t * expm1_ratio(-rho);
        (v, w)
    };
    let ln_w = w.ln();
    Ok(GaugeState {
        t,
        rho,
        w,
        // ∫ μ/W = ρ + ln W and ∫ e^{−ρ} μ / W² = 1 − e^{−ρ}/W.
        g1: 0.0 - beta * ln_w,
        g2: 1.0 - 1.0 / w,
        g3: w * v,
        g4: 0.0 - rho - 2.0 * ln_w,
        est_error: GaugeError::default(),
    })
}

/// Time derivatives (ġ1, ġ2, ġ3, ġ4) at the state `g`, built from the exact
/// right-hand sides of the auxiliary system.
pub fn gauge_derivatives(spec: &ProcessSpec, g: &GaugeState) -> [f64; 4] {
    let lambda = spec.lambda_at(g.t);
    let mu = spec.mu_at(g.t);
    let w = g.w;
    let rho_dot = mu - lambda;
    let w_dot = -rho_dot * w + mu;
    let i3_dot = mu / (g.rho.exp() * w * w);
    [
        spec.beta * (rho_dot - mu / w),
        w_dot / (w * w),
        g.g3 * (rho_dot + 2.0 * w_dot / w) + g.rho.exp() * w * w * i3_dot,
        -rho_dot - 2.0 * w_dot / w,
    ]
}

/// Residuals of the four gauge ODEs (ġ − RHS) at `g`.
pub fn riccati_residual(spec: &ProcessSpec, g: &GaugeState, dg: &[f64; 4]) -> [f64; 4] {
    let lambda = spec.lambda_at(g.t);
    let mu = spec.mu_at(g.t);
    let beta = spec.beta;
    [
        dg[0] - beta * (mu * g.g2 - lambda),
        dg[1] - lambda - g.g2 * (g.g2 * mu - mu - lambda),
        dg[2] - mu - g.g3 * (lambda + mu - 2.0 * mu * g.g2),
        dg[3] + lambda + mu - 2.0 * mu * g.g2,
    ]
}

/// Right-hand sides of the gauge ODEs at `g`.
pub fn gauge_rhs(spec: &ProcessSpec, g: &GaugeState) -> [f64; 4] {
    riccati_residual(spec, g, &[0.0; 4]).map(|r| -r)
}

/// Closed forms for constant rates, the ODE pass otherwise.
pub fn gauge_at(spec: &ProcessSpec, t: f64) -> Result<GaugeState> {
    match spec.constant_rates() {
        Some((l, m)) => constant_rate_gauge(l, m, spec.beta, t),
        None => Ok(compute_gauge(spec, &[t])?[0]),
    }
}
