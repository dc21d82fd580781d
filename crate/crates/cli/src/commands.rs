//! The seven batch commands and the mapping from failures to exit codes.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use bdlie::analytic::{gauge_derivatives, A4Sign, GeneratorCoefficients};
use bdlie::boson::{lie_closure, naive_generators, factorization_algebra, factorization_basis, ClosureReport, DEFAULT_MAX_DIM};
use bdlie::distributions::{transition_pmf_from_gauge, DEFAULT_MAX_SUPPORT};
use bdlie::oracles::{compare_report, initial_state_cap, integrate_master, ssa_ensemble, ComparisonReport};
use bdlie::wei_norman::integrate_wn;
use bdlie::{
    compute_gauge, constant_rate_gauge, mean_from_one, moment_numeric, riccati_residual, Error, GaugeState,
    MomentResult, TransitionPmf,
};
use serde::Serialize;

use crate::format;
use crate::scenario::{Format, Scenario, SsaSettings};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PARSE: i32 = 3;
pub const EXIT_VALIDATION: i32 = 4;
pub const EXIT_INTEGRATION: i32 = 5;
pub const EXIT_TRUNCATION: i32 = 6;
pub const EXIT_VERIFY: i32 = 7;
pub const EXIT_IO: i32 = 8;
pub const EXIT_OTHER: i32 = 9;

pub const RICCATI_TOL: f64 = 1e-8;
pub const WN_TOL: f64 = 1e-8;
pub const NORMALIZATION_TOL: f64 = 1e-8;
pub const MASS_TOL: f64 = 1e-10;
pub const MEAN_MATCH_TOL: f64 = 1e-7;
pub const KENDALL_REL_TOL: f64 = 1e-10;

pub const DEFAULT_TRAJECTORIES: u64 = 10_000;
pub const DEFAULT_SEED: u64 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Gauge,
    Pmf,
    Mean,
    Simulate,
    Oracle,
    Verify,
    Closure,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Command::Gauge => "gauge",
            Command::Pmf => "pmf",
            Command::Mean => "mean",
            Command::Simulate => "simulate",
            Command::Oracle => "oracle",
            Command::Verify => "verify",
            Command::Closure => "closure",
        };
        f.write_str(s)
    }
}

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Io { path: PathBuf, source: std::io::Error },
    VerifyFailed(Vec<String>),
    Usage(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            CliError::VerifyFailed(checks) => write!(f, "verification failed: {}", checks.join(", ")),
            CliError::Usage(msg) => f.write_str(msg),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) => match e {
                Error::Parse { .. } => EXIT_PARSE,
                Error::Validation(_) | Error::InvalidRate(_) => EXIT_VALIDATION,
                Error::StepUnderflow { .. }
                | Error::IntegrationFailure { .. }
                | Error::Overflow { .. }
                | Error::Singular { .. }
                | Error::UnboundedRate { .. } => EXIT_INTEGRATION,
                Error::Truncation(_) | Error::TailTooHeavy { .. } => EXIT_TRUNCATION,
                _ => EXIT_OTHER,
            },
            CliError::Io { .. } => EXIT_IO,
            CliError::VerifyFailed(_) => EXIT_VERIFY,
            CliError::Usage(_) => EXIT_USAGE,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Collects artifacts in one output directory and remembers what was written.
pub struct Sink {
    dir: PathBuf,
    pub format: Format,
    pub written: Vec<String>,
    pub messages: Vec<String>,
    pub warnings: Vec<String>,
}

impl Sink {
    pub fn new(dir: &Path, format: Format) -> CliResult<Self> {
        fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
        Ok(Self { dir: dir.to_path_buf(), format, written: Vec::new(), messages: Vec::new(), warnings: Vec::new() })
    }

    pub fn write(&mut self, name: &str, text: &str) -> CliResult<()> {
        let path = self.dir.join(name);
        fs::write(&path, text).map_err(|source| CliError::Io { path, source })?;
        self.written.push(name.to_string());
        Ok(())
    }

    fn write_json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(value).expect("report serializes");
        text.push('\n');
        self.write(name, &text)
    }

    fn ext(&self) -> &'static str {
        match self.format {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Status<'a> {
    pub command: Command,
    pub failed: bool,
    pub exit_code: i32,
    pub error: Option<String>,
    pub outputs: &'a [String],
}

pub fn write_status(sink: &mut Sink, command: Command, result: &CliResult<()>) -> i32 {
    let exit_code = result.as_ref().map_or_else(CliError::exit_code, |_| EXIT_OK);
    let outputs = sink.written.clone();
    let status = Status {
        command,
        failed: exit_code != EXIT_OK,
        exit_code,
        error: result.as_ref().err().map(ToString::to_string),
        outputs: &outputs,
    };
    match sink.write_json("status.json", &status) {
        Ok(()) => exit_code,
        Err(e) if exit_code == EXIT_OK => e.exit_code(),
        Err(_) => exit_code,
    }
}

pub fn run_command(cmd: Command, sc: Option<&Scenario>, sink: &mut Sink) -> CliResult<()> {
    if cmd == Command::Closure {
        return closure(sc, sink);
    }
    let sc = sc.ok_or_else(|| CliError::Usage(format!("{cmd} needs --scenario")))?;
    match cmd {
        Command::Gauge => gauge(sc, sink).map(|_| ()),
        Command::Pmf => pmf(sc, sink),
        Command::Mean => mean(sc, sink),
        Command::Simulate => simulate(sc, sink),
        Command::Oracle => oracle(sc, sink),
        Command::Verify => verify(sc, sink),
        Command::Closure => unreachable!(),
    }
}

fn gauges_for(sc: &Scenario) -> CliResult<Vec<GaugeState>> {
    match sc.spec.constant_rates() {
        Some((l, m)) => Ok(sc
            .t_grid
            .iter()
            .map(|&t| constant_rate_gauge(l, m, sc.spec.beta, t))
            .collect::<bdlie::Result<_>>()?),
        None => Ok(compute_gauge(&sc.spec, &sc.t_grid)?),
    }
}

fn gauge(sc: &Scenario, sink: &mut Sink) -> CliResult<Vec<GaugeState>> {
    let gauges = gauges_for(sc)?;
    match sink.format {
        Format::Csv => sink.write("gauge.csv", &format::gauge_csv(&gauges))?,
        Format::Json => sink.write_json("gauge.json", &gauges)?,
    }
    Ok(gauges)
}

fn pmfs_for(sc: &Scenario, gauges: &[GaugeState], sink: &mut Sink, emit: bool) -> CliResult<Vec<TransitionPmf>> {
    let mut out = Vec::new();
    for (k, g) in gauges.iter().enumerate() {
        let pmf = transition_pmf_from_gauge(&sc.spec, g, sc.n0, sc.tail_tol, DEFAULT_MAX_SUPPORT)?;
        if emit {
            let name = format!("pmf_{k}.{}", sink.ext());
            match sink.format {
                Format::Csv => sink.write(&name, &format::pmf_csv(&pmf))?,
                Format::Json => sink.write_json(&name, &pmf)?,
            }
        }
        out.push(pmf);
    }
    Ok(out)
}

fn pmf(sc: &Scenario, sink: &mut Sink) -> CliResult<()> {
    let gauges = gauges_for(sc)?;
    pmfs_for(sc, &gauges, sink, true)?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
struct MeanRow {
    t: f64,
    #[serde(flatten)]
    moment: MomentResult,
}

fn mean_csv(rows: &[MeanRow]) -> String {
    let mut out = String::from("t,method,value,tail_bias_bound\n");
    for r in rows {
        let method = serde_json::to_value(r.moment.method).unwrap();
        let bound = r.moment.tail_bias_bound.map(format::fmt17).unwrap_or_default();
        out += &format!(
            "{},{},{},{}\n",
            format::fmt17(r.t),
            method.as_str().unwrap(),
            format::fmt17(r.moment.value),
            bound
        );
    }
    out
}

fn mean(sc: &Scenario, sink: &mut Sink) -> CliResult<()> {
    let gauges = gauges_for(sc)?;
    if sc.n0 != 1 {
        sink.warnings.push(format!("closed-form mean applies to n0 = 1 only; n0 = {} uses the pmf sum", sc.n0));
    }
    let mut rows = Vec::new();
    let mut failure = None;
    for g in &gauges {
        if sc.n0 == 1 {
            rows.push(MeanRow { t: g.t, moment: mean_from_one(&sc.spec, g)? });
        }
        let summed = transition_pmf_from_gauge(&sc.spec, g, sc.n0, sc.tail_tol, DEFAULT_MAX_SUPPORT)
            .and_then(|p| moment_numeric(&p, 1));
        match summed {
            Ok(m) => rows.push(MeanRow { t: g.t, moment: m }),
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
    }
    match sink.format {
        Format::Csv => sink.write("mean.csv", &mean_csv(&rows))?,
        Format::Json => sink.write_json("mean.json", &rows)?,
    }
    failure.map_or(Ok(()), |e| Err(e.into()))
}

fn ssa_settings(sc: &Scenario) -> SsaSettings {
    sc.ssa.clone().unwrap_or(SsaSettings { trajectories: DEFAULT_TRAJECTORIES, seed: DEFAULT_SEED })
}

fn simulate(sc: &Scenario, sink: &mut Sink) -> CliResult<()> {
    let settings = ssa_settings(sc);
    for (k, &t) in sc.t_grid.iter().enumerate() {
        let ens = ssa_ensemble(&sc.spec, sc.n0, t, settings.trajectories, settings.seed)?;
        let name = format!("histogram_{k}.{}", sink.ext());
        match sink.format {
            Format::Csv => sink.write(&name, &format::histogram_csv(&ens))?,
            Format::Json => sink.write_json(&name, &ens)?,
        }
    }
    Ok(())
}

fn oracle(sc: &Scenario, sink: &mut Sink) -> CliResult<()> {
    for (k, &t) in sc.t_grid.iter().enumerate() {
        let cap = initial_state_cap(&sc.spec, sc.n0, t)?;
        let dist = integrate_master(&sc.spec, sc.n0, t, cap)?;
        let name = format!("oracle_{k}.{}", sink.ext());
        match sink.format {
            Format::Csv => sink.write(&name, &format::master_csv(&dist))?,
            Format::Json => sink.write_json(&name, &dist)?,
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
struct Check {
    name: String,
    pass: bool,
    value: f64,
    tolerance: f64,
}

impl Check {
    fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), pass: value <= tolerance, value, tolerance }
    }
}

#[derive(Debug, Clone, Serialize)]
struct MeanCheck {
    t: f64,
    closed_form: Option<f64>,
    pmf_sum: f64,
    kendall: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
struct VerifyReport {
    pass: bool,
    failed: Vec<String>,
    checks: Vec<Check>,
    means: Vec<MeanCheck>,
    comparisons: Vec<ComparisonReport>,
}

fn verify(sc: &Scenario, sink: &mut Sink) -> CliResult<()> {
    let spec = &sc.spec;
    let mut checks = Vec::new();
    let mut comparisons = Vec::new();
    let mut means = Vec::new();
    let outcome = (|| -> CliResult<()> {
        let gauges = compute_gauge(spec, &sc.t_grid)?;

        let residual = gauges
            .iter()
            .flat_map(|g| riccati_residual(spec, g, &gauge_derivatives(spec, g)))
            .fold(0.0, |a: f64, r| a.max(r.abs()));
        checks.push(Check::at_most("riccati_residual", residual, RICCATI_TOL));

        let alg = factorization_algebra(spec.beta)?;
        let wn = integrate_wn(&alg, |t| GeneratorCoefficients::at(spec, t, A4Sign::Expanded).to_array().to_vec(), &sc.t_grid)?;
        sink.write("wei_norman.csv", &format::wn_csv(&wn))?;
        let wn_gap = wn
            .iter()
            .zip(&gauges)
            .flat_map(|(w, g)| w.g.iter().zip(g.gauges()).map(|(a, b)| (a - b).abs()).collect::<Vec<_>>())
            .fold(0.0, f64::max);
        checks.push(Check::at_most("wei_norman_gap", wn_gap, WN_TOL));

        let pmfs = pmfs_for(sc, &gauges, sink, false)?;
        let norm = pmfs.iter().map(|p| (p.probs.iter().sum::<f64>() - 1.0).abs()).fold(0.0, f64::max);
        checks.push(Check::at_most("normalization", norm, NORMALIZATION_TOL));
        let tail = pmfs.iter().map(|p| p.tail_mass.abs()).fold(0.0, f64::max);
        checks.push(Check::at_most("tail_mass", tail, MASS_TOL.max(sc.tail_tol)));

        let settings = sc.ssa.as_ref();
        for (pmf, g) in pmfs.iter().zip(&gauges) {
            let cap = initial_state_cap(spec, sc.n0, g.t)?;
            let master = integrate_master(spec, sc.n0, g.t, cap)?;
            let ens = match settings {
                Some(s) => Some(ssa_ensemble(spec, sc.n0, g.t, s.trajectories, s.seed)?),
                None => None,
            };
            comparisons.push(compare_report(pmf, &master, ens.as_ref()));

            let pmf_sum = moment_numeric(pmf, 1)?.value;
            let closed_form = if sc.n0 == 1 { Some(mean_from_one(spec, g)?.value) } else { None };
            let kendall = (spec.beta == 0.0).then(|| sc.n0 as f64 * (-g.rho).exp());
            if let Some(c) = closed_form {
                checks.push(Check::at_most(format!("mean_match t={}", g.t), (c - pmf_sum).abs(), MEAN_MATCH_TOL));
            }
            if let Some(k) = kendall {
                let (value, tol, label) = match closed_form {
                    Some(c) => ((c - k).abs() / k.abs().max(f64::MIN_POSITIVE), KENDALL_REL_TOL, "kendall_closed_form"),
                    None => ((pmf_sum - k).abs(), MEAN_MATCH_TOL, "kendall_pmf_sum"),
                };
                checks.push(Check::at_most(format!("{label} t={}", g.t), value, tol));
            }
            means.push(MeanCheck { t: g.t, closed_form, pmf_sum, kendall });
        }
        Ok(())
    })();

    let mut failed: Vec<String> = checks.iter().filter(|c| !c.pass).map(|c| c.name.clone()).collect();
    for c in &comparisons {
        if !c.master.pass || c.master.leaked_mass > MASS_TOL {
            failed.push(format!("master t={}", c.t));
        }
        if c.ssa.as_ref().is_some_and(|s| !s.pass) {
            failed.push(format!("ssa t={}", c.t));
        }
    }
    if let Err(e) = &outcome {
        failed.push(format!("aborted: {e}"));
    }
    let report = VerifyReport { pass: failed.is_empty(), failed: failed.clone(), checks, means, comparisons };
    sink.write_json("verify.json", &report)?;
    for m in &report.means {
        let cf = m.closed_form.map(|v| format!(" closed-form {}", format::fmt17(v))).unwrap_or_default();
        sink.messages.push(format!("t={} mean{cf} pmf-sum {}", format::fmt17(m.t), format::fmt17(m.pmf_sum)));
    }
    outcome?;
    if failed.is_empty() {
        sink.messages.push("verify: pass".into());
        Ok(())
    } else {
        Err(CliError::VerifyFailed(failed))
    }
}

#[derive(Debug, Clone, Serialize)]
struct ClosureEntry {
    name: String,
    closed: bool,
    dimension: usize,
    max_dim: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    basis: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<Vec<bdlie::boson::WitnessStep>>,
}

impl ClosureEntry {
    fn new(name: &str, r: &ClosureReport) -> Self {
        Self {
            name: name.into(),
            closed: r.closed,
            dimension: r.dimension,
            max_dim: r.max_dim,
            basis: r.closed.then(|| r.basis.iter().map(ToString::to_string).collect()),
            witness: (!r.closed).then(|| r.witness.clone()),
        }
    }
}

fn closure(sc: Option<&Scenario>, sink: &mut Sink) -> CliResult<()> {
    let mut sets = vec![("beta-trick set", factorization_basis()), ("naive set", naive_generators())];
    if let Some(sc) = sc.filter(|s| !s.generators.is_empty()) {
        sets.push(("user set", sc.user_generators()));
    }
    let mut entries = Vec::new();
    let mut summary = Vec::new();
    for (name, gens) in sets {
        let report = lie_closure(&gens, DEFAULT_MAX_DIM)?;
        summary.push(format!("{name}: {}", report.summary()));
        entries.push(ClosureEntry::new(name, &report));
    }
    sink.write_json("closure.json", &entries)?;
    sink.messages.push(summary.join("; "));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_are_distinct() {
        let errs = [
            CliError::Usage("x".into()),
            CliError::Core(Error::Parse { line: 1, column: 1, message: "x".into() }),
            CliError::Core(Error::Validation(vec![])),
            CliError::Core(Error::StepUnderflow { t: 0.0, h: 0.0 }),
            CliError::Core(Error::Truncation("x".into())),
            CliError::VerifyFailed(vec![]),
            CliError::Io { path: "x".into(), source: std::io::Error::other("x") },
            CliError::Core(Error::NotClosed("x".into())),
        ];
        let mut codes: Vec<i32> = errs.iter().map(CliError::exit_code).collect();
        codes.sort();
        codes.dedup();
        assert_eq!(codes.len(), errs.len());
        assert!(!codes.contains(&EXIT_OK));
    }

    #[test]
    fn mean_rows_render() {
        let rows = [MeanRow {
            t: 1.0,
            moment: MomentResult {
                order: 1,
                value: 0.5,
                method: bdlie::distributions::MomentMethod::ClosedForm,
                tail_bias_bound: None,
            },
        }];
        assert_eq!(mean_csv(&rows), "t,method,value,tail_bias_bound\n1,closed-form,0.5,\n");
    }
}
