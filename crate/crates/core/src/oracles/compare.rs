//! Side-by-side checks of an analytic pmf against the oracles.

use serde::Serialize;

use super::master::TruncatedDistribution;
use super::ssa::SsaEnsemble;
use crate::distributions::TransitionPmf;

/// Entrywise bound for analytic vs master equation.
pub const MASTER_ABS_THRESHOLD: f64 = 1e-8;
/// Hard bound on |z| for simulation bins.
pub const Z_HARD: f64 = 4.0;
/// |z| above this counts as marginal.
pub const Z_SOFT: f64 = 3.0;
/// Fraction of bins allowed in (Z_SOFT, Z_HARD].
pub const MARGINAL_FRACTION: f64 = 0.01;
/// Bins with fewer expected paths than this are pooled into one tail bin.
pub const MIN_EXPECTED: f64 = 5.0;
const WORST_LISTED: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Offender {
    pub m: usize,
    pub analytic: f64,
    pub other: f64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MasterComparison {
    pub pass: bool,
    pub max_abs_diff: f64,
    pub threshold: f64,
    pub leaked_mass: f64,
    pub analytic_tail_mass: f64,
    pub worst: Vec<Offender>,
}

/// One simulation bin; `m` is `None` for the pooled tail bin.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZBin {
    pub m: Option<usize>,
    pub expected: f64,
    pub observed: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SsaComparison {
    pub pass: bool,
    pub trajectories: u64,
    pub seed: u64,
    pub bins: usize,
    pub max_abs_z: f64,
    pub marginal: usize,
    pub marginal_allowed: usize,
    pub worst: Vec<ZBin>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub pass: bool,
    pub n0: u64,
    pub t: f64,
    pub master: MasterComparison,
    pub ssa: Option<SsaComparison>,
}

pub fn compare_master(analytic: &TransitionPmf, master: &TruncatedDistribution) -> MasterComparison {
    let len = analytic.probs.len().max(master.probs.len());
    let mut offenders: Vec<Offender> = (0..len)
        .map(|m| {
            let (a, o) = (analytic.prob(m), master.prob(m));
            Offender { m, analytic: a, other: o, score: (a - o).abs() }
        })
        .collect();
    offenders.sort_by(|x, y| y.score.total_cmp(&x.score).then(x.m.cmp(&y.m)));
    let max_abs_diff = offenders.first().map_or(0.0, |o| o.score);
    offenders.truncate(WORST_LISTED);
    MasterComparison {
        pass: max_abs_diff <= MASTER_ABS_THRESHOLD,
        max_abs_diff,
        threshold: MASTER_ABS_THRESHOLD,
        leaked_mass: master.leaked_mass,
        analytic_tail_mass: analytic.tail_mass,
        worst: offenders,
    }
}

fn z_score(observed: f64, expected: f64, r: f64) -> f64 {
    let diff = observed - expected;
    if diff == 0.0 {
        return 0.0;
    }
    let se = (expected * (1.0 - expected) / r).sqrt();
    if se == 0.0 {
        f64::INFINITY
    } else {
        diff / se
    }
}

/// z-scores of empirical frequencies against the analytic pmf, with the
/// standard error taken from the analytic probability.
pub fn compare_ssa(analytic: &TransitionPmf, ssa: &SsaEnsemble) -> SsaComparison {
    let r = ssa.trajectories as f64;
    let len = analytic.probs.len().max(ssa.counts.len());
    let mut bins = Vec::new();
    let (mut pool_p, mut pool_obs) = (0.0, 0.0);
    for m in 0..len {
        let p = analytic.prob(m);
        let obs = ssa.phat(m);
        if p * r >= MIN_EXPECTED {
            bins.push(ZBin { m: Some(m), expected: p, observed: obs, z: z_score(obs, p, r) });
        } else {
            pool_p += p;
            pool_obs += obs;
        }
    }
    pool_p += analytic.tail_mass.max(0.0);
    if pool_p > 0.0 || pool_obs > 0.0 {
        bins.push(ZBin { m: None, expected: pool_p, observed: pool_obs, z: z_score(pool_obs, pool_p, r) });
    }
    let max_abs_z = bins.iter().map(|b| b.z.abs()).fold(0.0, f64::max);
    let marginal = bins.iter().filter(|b| b.z.abs() > Z_SOFT && b.z.abs() <= Z_HARD).count();
    let marginal_allowed = (MARGINAL_FRACTION * bins.len() as f64).floor() as usize;
    let n_bins = bins.len();
    bins.sort_by(|x, y| y.z.abs().total_cmp(&x.z.abs()));
    bins.truncate(WORST_LISTED);
    SsaComparison {
        pass: max_abs_z <= Z_HARD && marginal <= marginal_allowed,
        trajectories: ssa.trajectories,
        seed: ssa.seed,
        bins: n_bins,
        max_abs_z,
        marginal,
        marginal_allowed,
        worst: bins,
    }
}

pub fn compare_report(
    analytic: &TransitionPmf,
    master: &TruncatedDistribution,
    ssa: Option<&SsaEnsemble>,
) -> ComparisonReport {
    let master = compare_master(analytic, master);
    let ssa = ssa.map(|e| compare_ssa(analytic, e));
    let pass = master.pass && ssa.as_ref().is_none_or(|s| s.pass);
    ComparisonReport { pass, n0: analytic.n0, t: analytic.t, master, ssa }
}
