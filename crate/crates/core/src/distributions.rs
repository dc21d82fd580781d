//! Transition probabilities and moments from gauge functions.
//!
//! With the factored evolution operator,
//!
//! ```text
//! P_{n→m}(t) = e^{g1 + g4 n} Σ_i n! Γ(β+m) / (i! (m−i)! (n−m+i)! Γ(β+m−i)) g2^i g3^{n−m+i}
//! ```
//!
//! where i runs over max(0, m−n) ..= m. Terms are accumulated in log space.

use serde::Serialize;
use statrs::function::factorial::ln_factorial;
use statrs::function::gamma::ln_gamma;

use crate::analytic::{gauge_at, GaugeState};
use crate::error::{Error, Result};
use crate::rates::ProcessSpec;

/// Gamma ratios with i above this use log-Gamma differences.
pub const PRODUCT_FORM_LIMIT: u64 = 64;

/// Default cap on the pmf support before giving up.
pub const DEFAULT_MAX_SUPPORT: usize = 100_000;

/// Largest tail mass for which pmf-sum moments are quoted.
pub const MOMENT_TAIL_LIMIT: f64 = 1e-6;

/// Π_{k=1}^{i} (β + m − k) = m!-free part of Γ(β+m)/Γ(β+m−i).
pub fn gamma_ratio(beta: f64, m: u64, i: u64) -> Result<f64> {
    Ok(ln_gamma_ratio(beta, m, i)?.exp())
}

/// Natural log of [`gamma_ratio`]; −∞ when the product vanishes.
pub fn ln_gamma_ratio(beta: f64, m: u64, i: u64) -> Result<f64> {
    if i > m {
        return Err(Error::Domain(format!("gamma_ratio needs i ≤ m, got i = {i}, m = {m}")));
    }
    if !(beta >= 0.0) {
        return Err(Error::Domain(format!("beta must be nonnegative, got {beta}")));
    }
    if beta == 0.0 && i == m && i > 0 {
        // last factor β + m − i = 0
        return Ok(f64::NEG_INFINITY);
    }
    if i <= PRODUCT_FORM_LIMIT {
        Ok((1..=i).map(|k| (beta + (m - k) as f64).ln()).sum())
    } else {
        Ok(ln_gamma(beta + m as f64) - ln_gamma(beta + (m - i) as f64))
    }
}

/// `k ln x` with the convention 0 · ln 0 = 0.
fn ln_pow(x: f64, k: u64) -> f64 {
    if k == 0 {
        0.0
    } else {
        k as f64 * x.ln()
    }
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.iter().map(|&x| (x - max).exp()).sum::<f64>().ln()
}

/// Whether the e^{g1 + g4 n} prefactor is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Prefactor {
    Included,
    /// Drops the prefactor; only for demonstrating that normalization breaks.
    Omitted,
}

/// ln P_{n→m}(t) at the gauge state `g`.
pub fn log_transition_prob(spec: &ProcessSpec, g: &GaugeState, n: u64, m: u64) -> Result<f64> {
    log_transition_prob_with(spec, g, n, m, Prefactor::Included)
}

pub fn log_transition_prob_with(
    spec: &ProcessSpec,
    g: &GaugeState,
    n: u64,
    m: u64,
    prefactor: Prefactor,
) -> Result<f64> {
    g.check_consistent()?;
    let beta = spec.beta;
    let ln_n_fact = ln_factorial(n);
    let i_min = m.saturating_sub(n);
    let mut terms = Vec::with_capacity((m - i_min + 1) as usize);
    for i in i_min..=m {
        let k = n + i - m;
        let term = ln_n_fact + ln_gamma_ratio(beta, m, i)?
            - ln_factorial(i)
            - ln_factorial(m - i)
            - ln_factorial(k)
            + ln_pow(g.g2, i)
            + ln_pow(g.g3, k);
        if term > f64::NEG_INFINITY {
            terms.push(term);
        }
    }
    let sum = log_sum_exp(&terms);
    Ok(match prefactor {
        Prefactor::Included if sum > f64::NEG_INFINITY => sum + g.g1 + g.g4 * n as f64,
        _ => sum,
    })
}

/// P_{n0→m}(t) for m = 0..probs.len().
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransitionPmf {
    pub n0: u64,
    pub t: f64,
    pub beta: f64,
    pub probs: Vec<f64>,
    /// 1 − Σ probs.
    pub tail_mass: f64,
    #[serde(skip)]
    pub gauge: GaugeState,
}

impl TransitionPmf {
    pub fn support_len(&self) -> usize {
        self.probs.len()
    }

    pub fn prob(&self, m: usize) -> f64 {
        self.probs.get(m).copied().unwrap_or(0.0)
    }
}

/// Evaluates the pmf from `n0`, extending the support until the tail mass is
/// below `tail_tol` and the last five probabilities are below `tail_tol·1e-3`.
pub fn transition_pmf(spec: &ProcessSpec, t: f64, n0: u64, tail_tol: f64) -> Result<TransitionPmf> {
    let g = gauge_at(spec, t)?;
    transition_pmf_from_gauge(spec, &g, n0, tail_tol, DEFAULT_MAX_SUPPORT)
}

pub fn transition_pmf_from_gauge(
    spec: &ProcessSpec,
    g: &GaugeState,
    n0: u64,
    tail_tol: f64,
    max_support: usize,
) -> Result<TransitionPmf> {
    if !(tail_tol > 0.0 && tail_tol <= 1e-3) {
        return Err(Error::Domain(format!("tail_tol must lie in (0, 1e-3], got {tail_tol}")));
    }
    g.check_consistent()?;
    let mut probs: Vec<f64> = Vec::new();
    let mut window = (2 * (n0 as usize + 1)).max(64);
    let mut previous_total = f64::NAN;
    loop {
        let start = probs.len();
        for m in start..window.min(max_support) {
            probs.push(log_transition_prob(spec, g, n0, m as u64)?.exp());
        }
        let total: f64 = probs.iter().sum();
        let tail_mass = 1.0 - total;
        let small_tail = probs.len() >= 5 && probs[probs.len() - 5..].iter().all(|&p| p < tail_tol * 1e-3);
        if tail_mass < tail_tol && small_tail {
            return Ok(TransitionPmf { n0, t: g.t, beta: spec.beta, probs, tail_mass, gauge: *g });
        }
        if small_tail && (total - previous_total).abs() < tail_tol * 1e-3 {
            // the missing mass is not in the tail: the gauge cannot resolve tail_tol
            return Err(Error::Truncation(format!(
                "normalization deficit {tail_mass:e} persists after the tail has decayed; \
                 tail_tol {tail_tol:e} is below the accuracy of the gauge functions"
            )));
        }
        previous_total = total;
        if window >= max_support {
            return Err(Error::Truncation(format!(
                "pmf support reached {max_support} with tail mass {tail_mass:e} (tolerance {tail_tol:e})"
            )));
        }
        window *= 2;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MomentMethod {
    ClosedForm,
    PmfSum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentResult {
    pub order: u32,
    pub value: f64,
    pub method: MomentMethod,
    /// Upper bound on the bias from the truncated tail (pmf sums only).
    pub tail_bias_bound: Option<f64>,
}

/// First moment from a single ancestor (n0 = 1):
/// e^{g1+g4} (1−g2)^{−β−2} (1 + β g2 + β g2 (1−g2) g3).
pub fn mean_from_one(spec: &ProcessSpec, g: &GaugeState) -> Result<MomentResult> {
    if !(g.g2 < 1.0) {
        return Err(Error::GaugeInconsistent(format!("g2 = {} ≥ 1", g.g2)));
    }
    let beta = spec.beta;
    let one_minus = 1.0 - g.g2;
    let scale = (g.g1 + g.g4 - (beta + 2.0) * one_minus.ln()).exp();
    let value = scale * (1.0 + beta * g.g2 + beta * g.g2 * one_minus * g.g3);
    Ok(MomentResult { order: 1, value, method: MomentMethod::ClosedForm, tail_bias_bound: None })
}

/// Σ_m m^j P(m) over the computed support.
pub fn moment_numeric(pmf: &TransitionPmf, j: u32) -> Result<MomentResult> {
    if j == 0 {
        return Err(Error::Domain("moment order must be at least 1".into()));
    }
    if !(pmf.tail_mass < MOMENT_TAIL_LIMIT) {
        return Err(Error::TailTooHeavy { tail_mass: pmf.tail_mass, limit: MOMENT_TAIL_LIMIT });
    }
    let value = pmf
        .probs
        .iter()
        .enumerate()
        .map(|(m, &p)| (m as f64).powi(j as i32) * p)
        .sum();
    let bound = pmf.tail_mass.max(0.0) * (pmf.probs.len() as f64).powi(j as i32);
    Ok(MomentResult { order: j, value, method: MomentMethod::PmfSum, tail_bias_bound: Some(bound) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::constant_rate_gauge;
    use std::f64::consts::LN_2;

    #[test]
    fn gamma_ratio_examples() {
        assert_eq!(gamma_ratio(0.0, 3, 2).unwrap().round(), 2.0);
        assert_eq!(gamma_ratio(0.7, 5, 0).unwrap(), 1.0);
        let r = gamma_ratio(0.5, 2, 2).unwrap();
        assert!((r - 0.75).abs() < 1e-15);
        let via_gamma = (ln_gamma(2.5) - ln_gamma(0.5)).exp();
        assert!((r - via_gamma).abs() < 1e-13);
        assert_eq!(gamma_ratio(0.0, 4, 4).unwrap(), 0.0);
        assert!(matches!(gamma_ratio(1.0, 2, 3), Err(Error::Domain(_))));
    }

    #[test]
    fn gamma_ratio_forms_agree_at_switch() {
        let m = 200;
        for &beta in &[0.3, 1.0, 2.5] {
            let prod: f64 = (1..=80).map(|k| (beta + (m - k) as f64).ln()).sum();
            let lg = ln_gamma_ratio(beta, m, 80).unwrap();
            assert!((prod - lg).abs() < 1e-10 * prod.abs());
        }
    }

    #[test]
    fn identity_at_origin() {
        let spec = ProcessSpec::constant(1.0, 2.0, 0.5).unwrap();
        let g = GaugeState::identity();
        assert_eq!(log_transition_prob(&spec, &g, 3, 3).unwrap(), 0.0);
        assert_eq!(log_transition_prob(&spec, &g, 3, 2).unwrap(), f64::NEG_INFINITY);
        assert_eq!(log_transition_prob(&spec, &g, 3, 4).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn yule_geometric_law() {
        let spec = ProcessSpec::constant(1.0, 0.0, 0.0).unwrap();
        let g = constant_rate_gauge(1.0, 0.0, 0.0, LN_2).unwrap();
        let p = log_transition_prob(&spec, &g, 1, 2).unwrap().exp();
        assert!((p - 0.25).abs() < 1e-15);
        assert_eq!(log_transition_prob(&spec, &g, 1, 0).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn pure_death_law() {
        let mu = 0.8;
        let t = 1.3;
        let spec = ProcessSpec::constant(0.0, mu, 0.0).unwrap();
        let g = constant_rate_gauge(0.0, mu, 0.0, t).unwrap();
        let p = log_transition_prob(&spec, &g, 1, 0).unwrap().exp();
        assert!((p - (1.0 - (-mu * t).exp())).abs() < 1e-15);
    }

    #[test]
    fn inconsistent_gauge_rejected() {
        let spec = ProcessSpec::constant(1.0, 1.0, 0.0).unwrap();
        let mut g = GaugeState::identity();
        g.g2 = 1.0;
        assert!(matches!(log_transition_prob(&spec, &g, 1, 1), Err(Error::GaugeInconsistent(_))));
        g.g2 = 0.1;
        g.g3 = -1.0;
        assert!(matches!(log_transition_prob(&spec, &g, 1, 1), Err(Error::GaugeInconsistent(_))));
    }

    #[test]
    fn point_mass_at_origin() {
        let spec = ProcessSpec::constant(1.0, 2.0, 0.5).unwrap();
        let pmf = transition_pmf(&spec, 0.0, 7, 1e-10).unwrap();
        assert_eq!(pmf.tail_mass, 0.0);
        for (m, &p) in pmf.probs.iter().enumerate() {
            assert_eq!(p, if m == 7 { 1.0 } else { 0.0 });
        }
        let second = moment_numeric(&pmf, 2).unwrap();
        assert_eq!(second.value, 49.0);
    }

    #[test]
    fn tail_tolerance_bounds() {
        let spec = ProcessSpec::constant(1.0, 2.0, 0.0).unwrap();
        assert!(transition_pmf(&spec, 1.0, 1, 0.0).is_err());
        assert!(transition_pmf(&spec, 1.0, 1, 1e-2).is_err());
    }

    #[test]
    fn immigration_only_start() {
        let spec = ProcessSpec::constant(1.0, 0.0, 1.0).unwrap();
        let t = 0.9;
        let pmf = transition_pmf(&spec, t, 0, 1e-10).unwrap();
        assert!((pmf.probs[0] - (-t).exp()).abs() < 1e-14);
    }

    #[test]
    fn mean_examples() {
        let spec = ProcessSpec::constant(1.0, 0.0, 1.0).unwrap();
        let g = constant_rate_gauge(1.0, 0.0, 1.0, LN_2).unwrap();
        assert!((mean_from_one(&spec, &g).unwrap().value - 3.0).abs() < 1e-14);
        assert_eq!(mean_from_one(&spec, &GaugeState::identity()).unwrap().value, 1.0);
    }

    #[test]
    fn unresolvable_tolerance_fails_fast() {
        let spec = ProcessSpec::constant(1.0, 2.0, 0.0).unwrap();
        let mut g = constant_rate_gauge(1.0, 2.0, 0.0, 1.0).unwrap();
        g.g4 -= 1e-6;
        let err = transition_pmf_from_gauge(&spec, &g, 3, 1e-10, DEFAULT_MAX_SUPPORT).unwrap_err();
        assert!(err.to_string().contains("normalization deficit"));
    }

    #[test]
    fn truncation_cap() {
        let spec = ProcessSpec::constant(2.0, 0.0, 0.0).unwrap();
        let g = constant_rate_gauge(2.0, 0.0, 0.0, 5.0).unwrap();
        assert!(matches!(
            transition_pmf_from_gauge(&spec, &g, 1, 1e-10, 1000),
            Err(Error::Truncation(_))
        ));
    }
}
