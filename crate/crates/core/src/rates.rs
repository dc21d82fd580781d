//! Time-dependent rate functions λ(t), μ(t) and the process specification.
//!
//! The immigration rate is never stored: it is always `beta * lambda(t)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;

/// Absolute tolerance for quadrature of tabulated families.
pub const TABULATED_QUAD_TOL: f64 = 1e-12;

/// The parametric shape of a rate family.
#[derive(Debug, Clone, PartialEq)]
pub enum RateKind {
    Constant { c: f64 },
    /// `c * exp(a t)`
    Exponential { c: f64, a: f64 },
    /// `c * (1 + epsilon * sin(omega t + phi))`
    Sinusoidal { c: f64, epsilon: f64, omega: f64, phi: f64 },
    /// `values[0]` on `[0, breakpoints[0])`, `values[i]` on
    /// `[breakpoints[i-1], breakpoints[i])`, and the last value afterwards.
    Piecewise { breakpoints: Vec<f64>, values: Vec<f64> },
    /// Linear interpolation of `values` over the grid `times` (starting at 0).
    Tabulated { times: Vec<f64>, values: Vec<f64> },
}

/// A nonnegative rate function of time. Constructed only through validating
/// constructors, so every instance satisfies its invariants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RateRepr", into = "RateRepr")]
pub struct RateFamily(RateKind);

fn check_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidRate(format!("{name} must be finite, got {v}")))
    }
}

fn check_nonneg(name: &str, v: f64) -> Result<()> {
    check_finite(name, v)?;
    if v < 0.0 {
        return Err(Error::InvalidRate(format!("{name} must be nonnegative, got {v}")));
    }
    Ok(())
}

fn check_increasing(name: &str, xs: &[f64]) -> Result<()> {
    for (i, &x) in xs.iter().enumerate() {
        check_finite(name, x)?;
        if i > 0 && x <= xs[i - 1] {
            return Err(Error::InvalidRate(format!("{name} must be strictly increasing")));
        }
    }
    Ok(())
}

impl RateFamily {
    pub fn constant(c: f64) -> Result<Self> {
        check_nonneg("c", c)?;
        Ok(Self(RateKind::Constant { c }))
    }

    pub fn exponential(c: f64, a: f64) -> Result<Self> {
        check_nonneg("c", c)?;
        check_finite("a", a)?;
        Ok(Self(RateKind::Exponential { c, a }))
    }

    pub fn sinusoidal(c: f64, epsilon: f64, omega: f64, phi: f64) -> Result<Self> {
        check_nonneg("c", c)?;
        check_finite("epsilon", epsilon)?;
        check_finite("omega", omega)?;
        check_finite("phi", phi)?;
        if epsilon.abs() > 1.0 {
            return Err(Error::InvalidRate(format!(
                "amplitude exceeds offset: |epsilon| = {} > 1",
                epsilon.abs()
            )));
        }
        Ok(Self(RateKind::Sinusoidal { c, epsilon, omega, phi }))
    }

    pub fn piecewise(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        check_increasing("breakpoints", &breakpoints)?;
        if breakpoints.first().is_some_and(|&b| b <= 0.0) {
            return Err(Error::InvalidRate("breakpoints must be positive".into()));
        }
        if values.len() != breakpoints.len() + 1 {
            return Err(Error::InvalidRate(format!(
                "piecewise family needs {} values for {} breakpoints, got {}",
                breakpoints.len() + 1,
                breakpoints.len(),
                values.len()
            )));
        }
        for &v in &values {
            check_nonneg("piecewise value", v)?;
        }
        Ok(Self(RateKind::Piecewise { breakpoints, values }))
    }

    pub fn tabulated(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::InvalidRate("tabulated grid needs at least two points".into()));
        }
        if times.len() != values.len() {
            return Err(Error::InvalidRate("tabulated times and values differ in length".into()));
        }
        if times[0] != 0.0 {
            return Err(Error::InvalidRate("tabulated grid must start at 0".into()));
        }
        check_increasing("tabulated grid", &times)?;
        for &v in &values {
            check_nonneg("tabulated value", v)?;
        }
        Ok(Self(RateKind::Tabulated { times, values }))
    }

    pub fn kind(&self) -> &RateKind {
        &self.0
    }

    /// `Some(c)` when the family is constant in time.
    pub fn as_constant(&self) -> Option<f64> {
        match self.0 {
            RateKind::Constant { c } => Some(c),
            RateKind::Exponential { c, a } if a == 0.0 || c == 0.0 => Some(c),
            RateKind::Sinusoidal { c, epsilon, .. } if epsilon == 0.0 || c == 0.0 => Some(c),
            _ => None,
        }
    }

    /// End of the domain on which the family is defined.
    pub fn horizon(&self) -> f64 {
        match &self.0 {
            RateKind::Tabulated { times, .. } => *times.last().unwrap(),
            _ => f64::INFINITY,
        }
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("time must be nonnegative, got {t}")));
        }
        if t > self.horizon() {
            return Err(Error::Domain(format!(
                "t = {t} beyond tabulated span [0, {}]",
                self.horizon()
            )));
        }
        Ok(())
    }

    fn check_interval(&self, t0: f64, t1: f64) -> Result<()> {
        self.check_time(t0)?;
        self.check_time(t1)?;
        if t1 < t0 {
            return Err(Error::Domain(format!("reversed interval [{t0}, {t1}]")));
        }
        Ok(())
    }

    /// Evaluates the rate at `t` without domain checks.
    pub(crate) fn value(&self, t: f64) -> f64 {
        match &self.0 {
            RateKind::Constant { c } => *c,
            RateKind::Exponential { c, a } => c * (a * t).exp(),
            RateKind::Sinusoidal { c, epsilon, omega, phi } => {
                (c * (1.0 + epsilon * (omega * t + phi).sin())).max(0.0)
            }
            RateKind::Piecewise { breakpoints, values } => {
                values[breakpoints.partition_point(|&b| b <= t)]
            }
            RateKind::Tabulated { times, values } => interpolate(times, values, t),
        }
    }

    /// Evaluates the rate at `t ≥ 0`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        Ok(self.value(t))
    }

    /// `∫_{t0}^{t1} f(τ) dτ`, closed form where the family has one.
    pub fn integrate(&self, t0: f64, t1: f64) -> Result<f64> {
        self.check_interval(t0, t1)?;
        if t0 == t1 {
            return Ok(0.0);
        }
        let dt = t1 - t0;
        let value = match &self.0 {
            RateKind::Constant { c } => c * dt,
            RateKind::Exponential { c, a } => {
                if *a == 0.0 {
                    c * dt
                } else {
                    c * (a * t0).exp() * (a * dt).exp_m1() / a
                }
            }
            RateKind::Sinusoidal { c, epsilon, omega, phi } => {
                if *omega == 0.0 {
                    c * (1.0 + epsilon * phi.sin()) * dt
                } else {
                    // cos(x0) - cos(x1) = 2 sin((x0+x1)/2) sin((x1-x0)/2)
                    let mid = omega * 0.5 * (t0 + t1) + phi;
                    let diff = 2.0 * mid.sin() * (0.5 * omega * dt).sin();
                    c * (dt + epsilon / omega * diff)
                }
            }
            RateKind::Piecewise { breakpoints, values } => {
                let mut acc = 0.0;
                let mut lo = t0;
                let mut idx = breakpoints.partition_point(|&b| b <= t0);
                while lo < t1 {
                    let hi = breakpoints.get(idx).copied().unwrap_or(f64::INFINITY).min(t1);
                    acc += values[idx] * (hi - lo);
                    lo = hi;
                    idx += 1;
                }
                acc
            }
            RateKind::Tabulated { times, .. } => {
                // Integrate panel by panel so each integrand is smooth.
                let mut acc = 0.0;
                let mut lo = t0;
                let mut idx = times.partition_point(|&s| s <= t0);
                while lo < t1 {
                    let hi = times.get(idx).copied().unwrap_or(t1).min(t1);
                    acc += quadrature::integrate(|x| self.value(x), lo, hi, TABULATED_QUAD_TOL)?;
                    lo = hi;
                    idx += 1;
                }
                acc
            }
        };
        Ok(value.max(0.0))
    }

    /// An upper bound `B ≥ f(t)` for all `t ∈ [t0, t1]`.
    pub fn sup(&self, t0: f64, t1: f64) -> Result<f64> {
        self.check_interval(t0, t1)?;
        let bound = match &self.0 {
            RateKind::Constant { c } => *c,
            RateKind::Exponential { .. } => self.value(t0).max(self.value(t1)),
            RateKind::Sinusoidal { c, epsilon, omega, phi } => {
                let ends = self.value(t0).max(self.value(t1));
                // Peak of epsilon*sin(θ) sits at θ = π/2 (ε ≥ 0) or 3π/2 (ε < 0).
                let peak = if *epsilon >= 0.0 { 0.5 * PI } else { 1.5 * PI };
                let (th0, th1) = {
                    let a = omega * t0 + phi;
                    let b = omega * t1 + phi;
                    (a.min(b), a.max(b))
                };
                let k = ((th0 - peak) / (2.0 * PI)).ceil();
                if peak + 2.0 * PI * k <= th1 {
                    c * (1.0 + epsilon.abs())
                } else {
                    ends
                }
            }
            RateKind::Piecewise { breakpoints, values } => {
                let first = breakpoints.partition_point(|&b| b <= t0);
                let last = breakpoints.partition_point(|&b| b <= t1);
                values[first..=last].iter().copied().fold(0.0, f64::max)
            }
            RateKind::Tabulated { times, values } => {
                let inner = times
                    .iter()
                    .zip(values)
                    .filter(|(&s, _)| s > t0 && s < t1)
                    .map(|(_, &v)| v)
                    .fold(0.0, f64::max);
                inner.max(self.value(t0)).max(self.value(t1))
            }
        };
        Ok(bound)
    }
}

fn interpolate(times: &[f64], values: &[f64], t: f64) -> f64 {
    let idx = times.partition_point(|&s| s <= t);
    if idx == 0 {
        return values[0];
    }
    if idx >= times.len() {
        return *values.last().unwrap();
    }
    let (t0, t1) = (times[idx - 1], times[idx]);
    let w = (t - t0) / (t1 - t0);
    values[idx - 1] * (1.0 - w) + values[idx] * w
}

/// Birth family λ, death family μ and the immigration ratio β (γ = βλ).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessSpec {
    pub lambda: RateFamily,
    pub mu: RateFamily,
    pub beta: f64,
}

/// Violated invariants of a [`ProcessSpec`]; empty when valid.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl ProcessSpec {
    pub fn new(lambda: RateFamily, mu: RateFamily, beta: f64) -> Result<Self> {
        let spec = Self { lambda, mu, beta };
        let report = validate_spec(&spec);
        if report.is_valid() {
            Ok(spec)
        } else {
            Err(Error::Validation(report.violations))
        }
    }

    /// Constant birth and death rates.
    pub fn constant(lambda: f64, mu: f64, beta: f64) -> Result<Self> {
        Self::new(RateFamily::constant(lambda)?, RateFamily::constant(mu)?, beta)
    }

    pub fn lambda_at(&self, t: f64) -> f64 {
        self.lambda.value(t)
    }

    pub fn mu_at(&self, t: f64) -> f64 {
        self.mu.value(t)
    }

    /// Immigration rate γ(t) = β λ(t).
    pub fn gamma_at(&self, t: f64) -> f64 {
        self.beta * self.lambda.value(t)
    }

    /// `(λ0, μ0)` when both families are constant.
    pub fn constant_rates(&self) -> Option<(f64, f64)> {
        Some((self.lambda.as_constant()?, self.mu.as_constant()?))
    }

    /// Latest time at which both families are defined.
    pub fn horizon(&self) -> f64 {
        self.lambda.horizon().min(self.mu.horizon())
    }

    /// ρ(t) = ∫_0^t (μ − λ).
    pub fn rho(&self, t: f64) -> Result<f64> {
        Ok(self.mu.integrate(0.0, t)? - self.lambda.integrate(0.0, t)?)
    }
}

/// Checks every invariant of a process specification.
pub fn validate_spec(spec: &ProcessSpec) -> ValidationReport {
    let mut violations = Vec::new();
    if !spec.beta.is_finite() {
        violations.push(format!("beta not finite ({})", spec.beta));
    } else if spec.beta < 0.0 {
        violations.push(format!("beta negative ({})", spec.beta));
    }
    for (name, family) in [("lambda", &spec.lambda), ("mu", &spec.mu)] {
        if let Err(e) = RateFamily::try_from(RateRepr::from(family.clone())) {
            violations.push(format!("{name}: {e}"));
        }
    }
    ValidationReport { violations }
}

pub fn eval_rate(f: &RateFamily, t: f64) -> Result<f64> {
    f.eval(t)
}

pub fn integrate_rate(f: &RateFamily, t0: f64, t1: f64) -> Result<f64> {
    f.integrate(t0, t1)
}

pub fn sup_rate(f: &RateFamily, t0: f64, t1: f64) -> Result<f64> {
    f.sup(t0, t1)
}

// Wire format: {"kind": ..., "params": {...}}.

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
enum RateRepr {
    Constant(ConstantParams),
    Exponential(ExponentialParams),
    Sinusoidal(SinusoidalParams),
    Piecewise(PiecewiseParams),
    Tabulated(TabulatedParams),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstantParams {
    c: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExponentialParams {
    c: f64,
    a: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SinusoidalParams {
    c: f64,
    epsilon: f64,
    omega: f64,
    #[serde(default)]
    phi: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PiecewiseParams {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TabulatedParams {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl TryFrom<RateRepr> for RateFamily {
    type Error = Error;

    fn try_from(repr: RateRepr) -> Result<Self> {
        match repr {
            RateRepr::Constant(p) => Self::constant(p.c),
            RateRepr::Exponential(p) => Self::exponential(p.c, p.a),
            RateRepr::Sinusoidal(p) => Self::sinusoidal(p.c, p.epsilon, p.omega, p.phi),
            RateRepr::Piecewise(p) => Self::piecewise(p.breakpoints, p.values),
            RateRepr::Tabulated(p) => Self::tabulated(p.times, p.values),
        }
    }
}

impl From<RateFamily> for RateRepr {
    fn from(f: RateFamily) -> Self {
        match f.0 {
            RateKind::Constant { c } => Self::Constant(ConstantParams { c }),
            RateKind::Exponential { c, a } => Self::Exponential(ExponentialParams { c, a }),
            RateKind::Sinusoidal { c, epsilon, omega, phi } => {
                Self::Sinusoidal(SinusoidalParams { c, epsilon, omega, phi })
            }
            RateKind::Piecewise { breakpoints, values } => {
                Self::Piecewise(PiecewiseParams { breakpoints, values })
            }
            RateKind::Tabulated { times, values } => {
                Self::Tabulated(TabulatedParams { times, values })
            }
        }
    }
}
