//! Adaptive Gauss–Kronrod (7, 15) quadrature.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, &x) in XGK.iter().take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Integrates `f` over `[a, b]` to absolute tolerance `abs_tol` by recursive
/// bisection of Gauss–Kronrod panels.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> Result<f64> {
    if b < a {
        return Err(Error::Domain(format!("reversed interval [{a}, {b}]")));
    }
    if a == b {
        return Ok(0.0);
    }
    let mut total = 0.0;
    let mut stack = vec![(a, b, abs_tol, 0u32)];
    while let Some((lo, hi, tol, depth)) = stack.pop() {
        let (value, err) = kronrod(&f, lo, hi);
        if err <= tol || depth >= 50 || hi - lo <= 1e-14 * (1.0 + lo.abs()) {
            if err > tol && depth >= 50 {
                return Err(Error::IntegrationFailure {
                    t: lo,
                    reason: format!("quadrature did not converge (error {err:e})"),
                });
            }
            total += value;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((mid, hi, 0.5 * tol, depth + 1));
            stack.push((lo, mid, 0.5 * tol, depth + 1));
        }
    }
    Ok(total)
}
