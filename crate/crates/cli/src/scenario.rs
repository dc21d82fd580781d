//! Scenario documents: one JSON object describing a process, an initial
//! count, the output times and optional simulation settings.

use bdlie::boson::{BosonOperator, Poly};
use bdlie::rates::validate_spec;
use bdlie::{Error, ProcessSpec, Result};
use serde::{Deserialize, Serialize};

pub const DEFAULT_TAIL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SsaSettings {
    #[serde(alias = "R")]
    pub trajectories: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSettings {
    #[serde(default)]
    pub format: Format,
}

/// c(β) (a†)^p a^q with c given by its coefficients in ascending powers of β.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub p: u32,
    pub q: u32,
    pub coeff: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub spec: ProcessSpec,
    pub n0: u64,
    pub t_grid: Vec<f64>,
    #[serde(default = "default_tail_tol")]
    pub tail_tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ssa: Option<SsaSettings>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outputs: Option<OutputSettings>,
    /// Extra generator set for the closure command; each entry is one
    /// operator given as a sum of terms.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub generators: Vec<Vec<TermSpec>>,
}

fn default_tail_tol() -> f64 {
    DEFAULT_TAIL_TOL
}

impl Scenario {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// The user-supplied closure generators, if any.
    pub fn user_generators(&self) -> Vec<BosonOperator> {
        self.generators
            .iter()
            .map(|terms| {
                terms.iter().fold(BosonOperator::zero(), |acc, term| {
                    let coeff = term.coeff.iter().rev().fold(Poly::zero(), |c, &k| &(&c * &Poly::beta()) + &Poly::int(k));
                    &acc + &BosonOperator::term(term.p, term.q, coeff)
                })
            })
            .collect()
    }
}

pub fn validate_scenario(sc: &Scenario) -> Vec<String> {
    let mut violations = validate_spec(&sc.spec).violations;
    if sc.t_grid.is_empty() {
        violations.push("t_grid empty".into());
    }
    if sc.t_grid.iter().any(|t| !t.is_finite() || *t < 0.0) {
        violations.push("t_grid has negative or non-finite times".into());
    }
    if sc.t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        violations.push("t_grid not increasing".into());
    }
    if let Some(&last) = sc.t_grid.last() {
        if last > sc.spec.horizon() {
            violations.push(format!("t_grid extends past the rate horizon {}", sc.spec.horizon()));
        }
    }
    if !(sc.tail_tol > 0.0 && sc.tail_tol <= 1e-3) {
        violations.push(format!("tail_tol {} outside (0, 1e-3]", sc.tail_tol));
    }
    if let Some(ssa) = &sc.ssa {
        if ssa.trajectories == 0 {
            violations.push("ssa.trajectories must be at least 1".into());
        }
    }
    for (k, terms) in sc.generators.iter().enumerate() {
        if terms.is_empty() {
            violations.push(format!("generators[{k}] has no terms"));
        }
    }
    if !sc.generators.is_empty() && sc.user_generators().iter().any(BosonOperator::is_zero) {
        violations.push("generators must be nonzero operators".into());
    }
    violations
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let sc: Scenario = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let violations = validate_scenario(&sc);
    if violations.is_empty() {
        Ok(sc)
    } else {
        Err(Error::Validation(violations))
    }
}
