//! Generic Wei–Norman engine for a finite-dimensional Lie algebra.
//!
//! For U(t) = exp(g_1 H_1) ⋯ exp(g_L H_L) solving U' = (Σ a_l H_l) U with
//! U(0) = I, the gauges satisfy M(g) ġ = a where column l of M(g) is
//! exp(g_1 ad H_1) ⋯ exp(g_{l−1} ad H_{l−1}) e_l.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{self, Tolerances};

/// Largest supported algebra dimension.
pub const MAX_DIM: usize = 16;

/// Condition estimate above which M(g) is treated as singular.
pub const SINGULAR_CONDITION: f64 = 1e12;

pub const WN_TOLERANCES: Tolerances = Tolerances { rel: 1e-10, abs: 1e-12, max_steps: 1_000_000 };

/// Ordered basis labels and structure constants c[i][j][k] with
/// [H_i, H_j] = Σ_k c[i][j][k] H_k.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LieAlgebraSpec {
    #[serde(rename = "basis_labels")]
    pub labels: Vec<String>,
    pub c: Vec<Vec<Vec<f64>>>,
}

impl LieAlgebraSpec {
    /// Validates shape, L ≤ 16, antisymmetry and the Jacobi identity (1e-12).
    pub fn new(labels: Vec<String>, c: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let alg = Self { labels, c };
        alg.validate()?;
        Ok(alg)
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn validate(&self) -> Result<()> {
        let l = self.dim();
        if l == 0 || l > MAX_DIM {
            return Err(Error::InvalidAlgebra(format!("dimension {l} outside 1..={MAX_DIM}")));
        }
        let shaped = self.c.len() == l
            && self.c.iter().all(|row| row.len() == l && row.iter().all(|v| v.len() == l));
        if !shaped {
            return Err(Error::InvalidAlgebra(format!("structure constants must be {l}×{l}×{l}")));
        }
        for i in 0..l {
            for j in 0..l {
                for k in 0..l {
                    if !self.c[i][j][k].is_finite() || self.c[i][j][k] != -self.c[j][i][k] {
                        return Err(Error::InvalidAlgebra(format!("antisymmetry fails at ({i}, {j}, {k})")));
                    }
                }
            }
        }
        let jacobi = self.jacobi_defect();
        if jacobi > 1e-12 {
            return Err(Error::InvalidAlgebra(format!("Jacobi identity violated by {jacobi:e}")));
        }
        Ok(())
    }

    /// max |Σ_m (c_ij^m c_mk^n + c_jk^m c_mi^n + c_ki^m c_mj^n)|.
    pub fn jacobi_defect(&self) -> f64 {
        let l = self.dim();
        let c = &self.c;
        let mut worst: f64 = 0.0;
        for i in 0..l {
            for j in 0..l {
                for k in 0..l {
                    for n in 0..l {
                        let s: f64 = (0..l)
                            .map(|m| c[i][j][m] * c[m][k][n] + c[j][k][m] * c[m][i][n] + c[k][i][m] * c[m][j][n])
                            .sum();
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
        worst
    }

    /// The same algebra with its basis reordered: new basis element `i` is
    /// old element `order[i]`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let l = self.dim();
        let mut seen = vec![false; l];
        if order.len() != l || order.iter().any(|&o| o >= l || std::mem::replace(&mut seen[o], true)) {
            return Err(Error::InvalidAlgebra("order must be a permutation".into()));
        }
        let mut inv = vec![0; l];
        for (new, &old) in order.iter().enumerate() {
            inv[old] = new;
        }
        let mut c = vec![vec![vec![0.0; l]; l]; l];
        for i in 0..l {
            for j in 0..l {
                for k in 0..l {
                    c[i][j][inv[k]] = self.c[order[i]][order[j]][k];
                }
            }
        }
        Self::new(order.iter().map(|&o| self.labels[o].clone()).collect(), c)
    }
}

/// (ad H_i) as matrices with [(ad H_i)]_{k,j} = c[i][j][k].
pub fn adjoint_reps(alg: &LieAlgebraSpec) -> Vec<DMatrix<f64>> {
    let l = alg.dim();
    (0..l)
        .map(|i| DMatrix::from_fn(l, l, |k, j| alg.c[i][j][k]))
        .collect()
}

/// Matrix exponential by scaling and squaring with a fixed [6/6] Padé
/// approximant.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    const B: [f64; 7] = [1.0, 0.5, 5.0 / 44.0, 1.0 / 66.0, 1.0 / 792.0, 1.0 / 15840.0, 1.0 / 665280.0];
    let n = a.nrows();
    let norm = a.column_iter().map(|c| c.abs().sum()).fold(0.0, f64::max);
    if norm == 0.0 {
        return DMatrix::identity(n, n);
    }
    let s = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let x = a / 2f64.powi(s);
    let mut num = DMatrix::identity(n, n) * B[0];
    let mut den = num.clone();
    let mut pow = DMatrix::identity(n, n);
    for (k, &b) in B.iter().enumerate().skip(1) {
        pow = &pow * &x;
        num += &pow * b;
        den += &pow * if k % 2 == 0 { b } else { -b };
    }
    let mut r = den.lu().solve(&num).expect("Padé denominator is nonsingular for ‖X‖ ≤ 1/2");
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

/// The factorization matrix M(g).
pub fn factorization_matrix(ad: &[DMatrix<f64>], g: &[f64]) -> DMatrix<f64> {
    let l = ad.len();
    let mut m = DMatrix::zeros(l, l);
    let mut prefix = DMatrix::identity(l, l);
    for col in 0..l {
        m.set_column(col, &prefix.column(col));
        if col + 1 < l && g[col] != 0.0 {
            prefix = &prefix * expm(&(&ad[col] * g[col]));
        }
    }
    m
}

fn one_norm(m: &DMatrix<f64>) -> f64 {
    m.column_iter().map(|c| c.abs().sum()).fold(0.0, f64::max)
}

/// Solves M(g) ġ = a; returns ġ and the 1-norm condition estimate of M(g).
pub fn wn_velocity_with(ad: &[DMatrix<f64>], g: &[f64], a: &[f64], t: f64) -> Result<(Vec<f64>, f64)> {
    let l = ad.len();
    if g.len() != l || a.len() != l {
        return Err(Error::Domain(format!("expected vectors of length {l}")));
    }
    if g.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("gauge vector must be finite".into()));
    }
    let m = factorization_matrix(ad, g);
    let lu = m.clone().lu();
    let inv = lu.try_inverse().ok_or(Error::Singular { t, cond: f64::INFINITY })?;
    let cond = one_norm(&m) * one_norm(&inv);
    if !(cond <= SINGULAR_CONDITION) {
        return Err(Error::Singular { t, cond });
    }
    let gdot = &inv * DVector::from_column_slice(a);
    Ok((gdot.iter().copied().collect(), cond))
}

pub fn wn_velocity(alg: &LieAlgebraSpec, g: &[f64], a: &[f64]) -> Result<(Vec<f64>, f64)> {
    wn_velocity_with(&adjoint_reps(alg), g, a, f64::NAN)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WNState {
    pub t: f64,
    pub g: Vec<f64>,
    pub conditioning: f64,
}

/// Integrates ġ = M(g)^{-1} a(t) from g(0) = 0 and samples at `t_grid`.
pub fn integrate_wn<A>(alg: &LieAlgebraSpec, a: A, t_grid: &[f64]) -> Result<Vec<WNState>>
where
    A: Fn(f64) -> Vec<f64>,
{
    if t_grid.first().is_some_and(|&t| t < 0.0) || t_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Domain("time grid must be nondecreasing from t ≥ 0".into()));
    }
    let ad = adjoint_reps(alg);
    let l = alg.dim();
    let rhs = |t: f64, g: &[f64], dg: &mut [f64]| -> Result<()> {
        let (v, _) = wn_velocity_with(&ad, g, &a(t), t)?;
        dg.copy_from_slice(&v);
        Ok(())
    };
    let samples = ode::integrate(rhs, 0.0, &vec![0.0; l], t_grid, WN_TOLERANCES)?;
    samples
        .into_iter()
        .map(|s| {
            let m = factorization_matrix(&ad, &s.y);
            let cond = m
                .clone()
                .try_inverse()
                .map(|inv| one_norm(&m) * one_norm(&inv))
                .unwrap_or(f64::INFINITY);
            Ok(WNState { t: s.t, g: s.y, conditioning: cond })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boson::factorization_algebra;

    #[test]
    fn expm_matches_known_values() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let r = expm(&(&a * 3.0));
        assert!((r[(0, 0)] - 3f64.cos()).abs() < 1e-14);
        assert!((r[(0, 1)] - 3f64.sin()).abs() < 1e-14);
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, -1.0]));
        let e = expm(&d);
        assert!((e[(0, 0)] - 2f64.exp()).abs() < 1e-13);
        assert!((e[(1, 1)] - (-1f64).exp()).abs() < 1e-15);
        let nil = DMatrix::from_row_slice(2, 2, &[0.0, 5.0, 0.0, 0.0]);
        assert_eq!(expm(&nil)[(0, 1)], 5.0);
    }

    #[test]
    fn abelian_algebra_has_zero_adjoints() {
        let alg = LieAlgebraSpec::new(vec!["x".into(), "y".into()], vec![vec![vec![0.0; 2]; 2]; 2]).unwrap();
        assert!(adjoint_reps(&alg).iter().all(|m| m.iter().all(|&x| x == 0.0)));
    }

    #[test]
    fn basis_adjoint_actions() {
        let alg = factorization_algebra(1.5).unwrap();
        let ad = adjoint_reps(&alg);
        let e3 = DVector::from_vec(vec![0.0, 0.0, 1.0, 0.0]);
        // [a†a, a] = −a
        assert_eq!(&ad[3] * &e3, DVector::from_vec(vec![0.0, 0.0, -1.0, 0.0]));
        // [a†(β + a†a), a] = −β I − 2 a†a
        assert_eq!(&ad[1] * &e3, DVector::from_vec(vec![-1.5, 0.0, 0.0, -2.0]));
    }

    #[test]
    fn velocity_at_origin_is_coefficients() {
        let alg = factorization_algebra(0.7).unwrap();
        let a = [0.3, -1.0, 2.0, 0.5];
        let (v, cond) = wn_velocity(&alg, &[0.0; 4], &a).unwrap();
        assert_eq!(v, a.to_vec());
        assert_eq!(cond, 1.0);
    }

    #[test]
    fn one_dimensional_algebra() {
        let alg = LieAlgebraSpec::new(vec!["I".into()], vec![vec![vec![0.0]]]).unwrap();
        let (v, _) = wn_velocity(&alg, &[4.2], &[1.25]).unwrap();
        assert_eq!(v, vec![1.25]);
    }

    #[test]
    fn zero_coefficients_keep_origin() {
        let alg = factorization_algebra(1.0).unwrap();
        let out = integrate_wn(&alg, |_| vec![0.0; 4], &[0.0, 1.0, 2.0]).unwrap();
        assert!(out.iter().all(|s| s.g.iter().all(|&x| x == 0.0)));
    }

    #[test]
    fn invalid_algebras_rejected() {
        let mut c = vec![vec![vec![0.0; 2]; 2]; 2];
        c[0][1][0] = 1.0;
        assert!(LieAlgebraSpec::new(vec!["x".into(), "y".into()], c.clone()).is_err());
        c[1][0][0] = -1.0;
        assert!(LieAlgebraSpec::new(vec!["x".into(), "y".into()], c).is_ok());
        assert!(LieAlgebraSpec::new(vec![], vec![]).is_err());
        let big = 17;
        assert!(LieAlgebraSpec::new(vec!["h".into(); big], vec![vec![vec![0.0; big]; big]; big]).is_err());
    }

    #[test]
    fn json_layout() {
        let alg = LieAlgebraSpec::new(vec!["I".into()], vec![vec![vec![0.0]]]).unwrap();
        assert_eq!(serde_json::to_string(&alg).unwrap(), r#"{"basis_labels":["I"],"c":[[[0.0]]]}"#);
    }
}
