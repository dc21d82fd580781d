//! Lie closure of operator sets and their structure constants, decided by
//! exact linear algebra over ℚ(β).

use std::collections::BTreeMap;

use serde::Serialize;

use super::operator::{BosonOperator, Monomial};
use super::poly::RatFn;
use crate::error::{Error, Result};
use crate::wei_norman::LieAlgebraSpec;

/// Default dimension cutoff for [`lie_closure`].
pub const DEFAULT_MAX_DIM: usize = 12;

type Vector = BTreeMap<Monomial, RatFn>;

fn to_vector(op: &BosonOperator) -> Vector {
    op.terms().iter().map(|(&k, v)| (k, RatFn::from(v.clone()))).collect()
}

fn axpy(y: &mut Vector, alpha: &RatFn, x: &Vector) {
    for (k, v) in x {
        let add = alpha * v;
        let entry = y.entry(*k).or_insert_with(RatFn::zero);
        *entry = &*entry + &add;
        if entry.is_zero() {
            y.remove(k);
        }
    }
}

/// Reduced row-echelon span of a list of operators. Each row remembers its
/// expression in terms of the inserted operators.
#[derive(Debug, Clone, Default)]
struct Span {
    // (pivot, row with row[pivot] = 1, coordinates w.r.t. inserted elements)
    rows: Vec<(Monomial, Vector, Vec<RatFn>)>,
    len: usize,
}

impl Span {
    /// Reduces `v` against the span; returns the remainder and the
    /// coordinates of the removed part.
    fn reduce(&self, v: &Vector) -> (Vector, Vec<RatFn>) {
        let mut rem = v.clone();
        let mut coords = vec![RatFn::zero(); self.len];
        for (pivot, row, combo) in &self.rows {
            let Some(c) = rem.get(pivot).cloned() else { continue };
            axpy(&mut rem, &-&c, row);
            for (dst, src) in coords.iter_mut().zip(combo) {
                *dst = &*dst + &(&c * src);
            }
        }
        (rem, coords)
    }

    /// Inserts `v` if independent; returns whether it was added.
    fn insert(&mut self, v: &Vector) -> bool {
        let (rem, coords) = self.reduce(v);
        let Some((&pivot, lead)) = rem.iter().next_back() else {
            return false;
        };
        let inv = lead.recip();
        self.len += 1;
        for (_, _, combo) in &mut self.rows {
            combo.push(RatFn::zero());
        }
        // rem = v − Σ coords·elements, so its combination is e_idx − coords.
        let mut combo: Vec<RatFn> = coords.iter().map(|c| -&(&inv * c)).collect();
        combo.push(inv.clone());
        let mut row = Vector::new();
        axpy(&mut row, &inv, &rem);
        // Eliminate the new pivot from existing rows.
        for (_, other, other_combo) in &mut self.rows {
            if let Some(c) = other.get(&pivot).cloned() {
                axpy(other, &-&c, &row);
                for (dst, src) in other_combo.iter_mut().zip(&combo) {
                    *dst = &*dst - &(&c * src);
                }
            }
        }
        self.rows.push((pivot, row, combo));
        true
    }

    /// Coordinates of `v` in terms of inserted elements, if `v` is in the span.
    fn coordinates(&self, v: &Vector) -> Option<Vec<RatFn>> {
        let (rem, coords) = self.reduce(v);
        rem.is_empty().then_some(coords)
    }
}

/// One commutator that left the span during closure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessStep {
    pub left: String,
    pub right: String,
    pub result: String,
}

/// Outcome of [`lie_closure`].
#[derive(Debug, Clone)]
pub struct ClosureReport {
    pub closed: bool,
    /// Insertion-ordered basis reached (complete when `closed`).
    pub basis: Vec<BosonOperator>,
    /// Commutators that escaped the running span, in discovery order.
    pub witness: Vec<WitnessStep>,
    pub dimension: usize,
    pub max_dim: usize,
    pub cutoff_exceeded: bool,
}

impl ClosureReport {
    pub fn summary(&self) -> String {
        if self.closed {
            format!("closed, dim {}", self.dimension)
        } else {
            format!("cutoff exceeded (dimension > {})", self.max_dim)
        }
    }
}

/// Adds commutators outside the current ℚ(β)-span until the set is closed
/// or its dimension exceeds `max_dim`. Dependent generators are skipped.
pub fn lie_closure(generators: &[BosonOperator], max_dim: usize) -> Result<ClosureReport> {
    if generators.iter().any(BosonOperator::is_zero) {
        return Err(Error::Domain("generators must be nonzero".into()));
    }
    let mut span = Span::default();
    let mut basis: Vec<BosonOperator> = Vec::new();
    let mut witness = Vec::new();
    for g in generators {
        if span.insert(&to_vector(g)) {
            basis.push(g.clone());
        }
    }
    if basis.len() > max_dim {
        return Err(Error::Domain(format!(
            "max_dim {max_dim} is smaller than the {} independent generators",
            basis.len()
        )));
    }
    let mut k = 0;
    while k < basis.len() {
        for j in 0..k {
            let c = basis[j].commutator(&basis[k]);
            if c.is_zero() || !span.insert(&to_vector(&c)) {
                continue;
            }
            witness.push(WitnessStep {
                left: basis[j].to_string(),
                right: basis[k].to_string(),
                result: c.to_string(),
            });
            basis.push(c);
            if basis.len() > max_dim {
                return Ok(ClosureReport {
                    closed: false,
                    dimension: basis.len(),
                    basis,
                    witness,
                    max_dim,
                    cutoff_exceeded: true,
                });
            }
        }
        k += 1;
    }
    Ok(ClosureReport { closed: true, dimension: basis.len(), basis, witness, max_dim, cutoff_exceeded: false })
}

/// Exact structure constants c[i][j][k] with [H_i, H_j] = Σ_k c[i][j][k] H_k.
pub fn symbolic_structure_constants(basis: &[BosonOperator]) -> Result<Vec<Vec<Vec<RatFn>>>> {
    let l = basis.len();
    let mut span = Span::default();
    for (i, b) in basis.iter().enumerate() {
        if !span.insert(&to_vector(b)) {
            return Err(Error::InvalidAlgebra(format!("basis element {i} ({b}) is linearly dependent")));
        }
    }
    let mut c = vec![vec![vec![RatFn::zero(); l]; l]; l];
    for i in 0..l {
        for j in (i + 1)..l {
            let comm = basis[i].commutator(&basis[j]);
            let coords = span.coordinates(&to_vector(&comm)).ok_or_else(|| {
                Error::NotClosed(format!("[{}, {}] = {} leaves the span", basis[i], basis[j], comm))
            })?;
            for (k, ck) in coords.into_iter().enumerate() {
                c[j][i][k] = -&ck;
                c[i][j][k] = ck;
            }
        }
    }
    Ok(c)
}

/// Structure constants with β specialized to `beta_value`.
pub fn structure_constants(basis: &[BosonOperator], labels: &[String], beta_value: f64) -> Result<LieAlgebraSpec> {
    if labels.len() != basis.len() {
        return Err(Error::InvalidAlgebra("one label per basis element required".into()));
    }
    let sym = symbolic_structure_constants(basis)?;
    let mut c = vec![vec![vec![0.0; basis.len()]; basis.len()]; basis.len()];
    for (i, row) in sym.iter().enumerate() {
        for (j, col) in row.iter().enumerate() {
            for (k, v) in col.iter().enumerate() {
                c[i][j][k] = v.eval(beta_value).ok_or_else(|| {
                    Error::InvalidAlgebra(format!("structure constant c[{i}][{j}][{k}] has a pole at β = {beta_value}"))
                })?;
            }
        }
    }
    LieAlgebraSpec::new(labels.to_vec(), c)
}

/// The closed set (I, a†(β + a†a), a, a†a) in factorization order.
pub fn factorization_basis() -> Vec<BosonOperator> {
    vec![
        BosonOperator::identity(),
        BosonOperator::birth_with_immigration(),
        BosonOperator::annihilation(),
        BosonOperator::number(),
    ]
}

pub fn factorization_labels() -> Vec<String> {
    ["I", "a†(β+a†a)", "a", "a†a"].iter().map(|s| s.to_string()).collect()
}

/// The naive generator set (I, a†, a, a†a, a†a†a).
pub fn naive_generators() -> Vec<BosonOperator> {
    vec![
        BosonOperator::identity(),
        BosonOperator::creation(),
        BosonOperator::annihilation(),
        BosonOperator::number(),
        BosonOperator::monomial(2, 1),
    ]
}

/// The factorization algebra with β specialized.
pub fn factorization_algebra(beta: f64) -> Result<LieAlgebraSpec> {
    structure_constants(&factorization_basis(), &factorization_labels(), beta)
}
