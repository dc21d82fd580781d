//! Text emission: CSV tables with 17 significant digits and LF endings.

use bdlie::oracles::{SsaEnsemble, TruncatedDistribution};
use bdlie::wei_norman::WNState;
use bdlie::{GaugeState, TransitionPmf};

/// Formats like C's `%.17g`, which round-trips every f64.
pub fn fmt17(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if !(-4..17).contains(&exp) {
        let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let fixed = format!("{x:.*}", (16 - exp) as usize);
        if fixed.contains('.') {
            fixed.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            fixed
        }
    }
}

fn row(cells: &[String]) -> String {
    let mut line = cells.join(",");
    line.push('\n');
    line
}

pub fn gauge_csv(gauges: &[GaugeState]) -> String {
    let mut out = String::from("t,rho,W,g1,g2,g3,g4\n");
    for g in gauges {
        out += &row(&[g.t, g.rho, g.w, g.g1, g.g2, g.g3, g.g4].map(fmt17));
    }
    out
}

pub fn pmf_csv(pmf: &TransitionPmf) -> String {
    let mut out = String::from("m,prob\n");
    for (m, &p) in pmf.probs.iter().enumerate() {
        out += &row(&[m.to_string(), fmt17(p)]);
    }
    out += &format!("#tail_mass={}\n", fmt17(pmf.tail_mass));
    out
}

pub fn master_csv(dist: &TruncatedDistribution) -> String {
    let mut out = String::from("m,prob\n");
    for (m, &p) in dist.probs.iter().enumerate() {
        out += &row(&[m.to_string(), fmt17(p)]);
    }
    out += &format!("#leaked_mass={}\n", fmt17(dist.leaked_mass));
    out
}

pub fn histogram_csv(ens: &SsaEnsemble) -> String {
    let mut out = String::from("m,count,phat,stderr\n");
    for (m, &c) in ens.counts.iter().enumerate() {
        out += &row(&[m.to_string(), c.to_string(), fmt17(ens.phat(m)), fmt17(ens.stderr(m))]);
    }
    out
}

pub fn wn_csv(states: &[WNState]) -> String {
    let l = states.first().map_or(0, |s| s.g.len());
    let mut header: Vec<String> = vec!["t".into()];
    header.extend((1..=l).map(|k| format!("g{k}")));
    header.push("cond".into());
    let mut out = row(&header);
    for s in states {
        let mut cells = vec![fmt17(s.t)];
        cells.extend(s.g.iter().map(|&v| fmt17(v)));
        cells.push(fmt17(s.conditioning));
        out += &row(&cells);
    }
    out
}
