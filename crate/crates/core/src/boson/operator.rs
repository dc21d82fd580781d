//! Normal-ordered polynomials in the creation operator a† and the
//! annihilation operator a, with [a, a†] = 1.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num::{BigInt, BigRational};

use super::poly::Poly;

/// Exponents (p, q) of the normal-ordered monomial (a†)^p a^q.
pub type Monomial = (u32, u32);

/// A finite sum Σ c_{pq}(β) (a†)^p a^q in canonical (normal-ordered) form.
/// Zero coefficients are never stored, so structural equality is exact
/// operator equality.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BosonOperator {
    terms: BTreeMap<Monomial, Poly>,
}

fn binomial(n: u32, k: u32) -> BigInt {
    let mut acc = BigInt::from(1u32);
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

fn factorial(n: u32) -> BigInt {
    (1..=n).fold(BigInt::from(1u32), |acc, i| acc * BigInt::from(i))
}

impl BosonOperator {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn monomial(p: u32, q: u32) -> Self {
        Self::term(p, q, Poly::one())
    }

    pub fn term(p: u32, q: u32, coeff: Poly) -> Self {
        let mut op = Self::zero();
        op.add_term((p, q), coeff);
        op
    }

    pub fn identity() -> Self {
        Self::monomial(0, 0)
    }

    /// a†
    pub fn creation() -> Self {
        Self::monomial(1, 0)
    }

    /// a
    pub fn annihilation() -> Self {
        Self::monomial(0, 1)
    }

    /// a†a
    pub fn number() -> Self {
        Self::monomial(1, 1)
    }

    /// a†(β + a†a) = β a† + a†a†a
    pub fn birth_with_immigration() -> Self {
        &Self::term(1, 0, Poly::beta()) + &Self::monomial(2, 1)
    }

    pub fn terms(&self) -> &BTreeMap<Monomial, Poly> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, key: Monomial) -> Poly {
        self.terms.get(&key).cloned().unwrap_or_default()
    }

    fn add_term(&mut self, key: Monomial, coeff: Poly) {
        if coeff.is_zero() {
            return;
        }
        let entry = self.terms.entry(key).or_default();
        *entry = &*entry + &coeff;
        if entry.is_zero() {
            self.terms.remove(&key);
        }
    }

    pub fn scale(&self, c: &Poly) -> Self {
        let mut out = Self::zero();
        for (&k, v) in &self.terms {
            out.add_term(k, v * c);
        }
        out
    }

    /// Normal-ordered product, using
    /// a^q (a†)^r = Σ_k k! C(q,k) C(r,k) (a†)^{r−k} a^{q−k}.
    pub fn normal_order_multiply(&self, rhs: &Self) -> Self {
        let mut out = Self::zero();
        for (&(p, q), x) in &self.terms {
            for (&(r, s), y) in &rhs.terms {
                let xy = x * y;
                for k in 0..=q.min(r) {
                    let c = factorial(k) * binomial(q, k) * binomial(r, k);
                    let coeff = xy.scale(&BigRational::from_integer(c));
                    out.add_term((p + r - k, q + s - k), coeff);
                }
            }
        }
        out
    }

    pub fn commutator(&self, rhs: &Self) -> Self {
        &self.normal_order_multiply(rhs) - &rhs.normal_order_multiply(self)
    }

    /// Matrix element action on |n⟩ with a†|n⟩ = |n+1⟩, a|n⟩ = n|n−1⟩,
    /// for a numeric β. Returns the coefficients of |m⟩ for m = 0..len.
    pub fn apply_to_number_state(&self, n: u32, beta: f64) -> BTreeMap<u32, f64> {
        let mut out = BTreeMap::new();
        for (&(p, q), c) in &self.terms {
            if q > n {
                continue;
            }
            // a^q |n⟩ = n!/(n−q)! |n−q⟩
            let falling: f64 = (0..q).map(|i| f64::from(n - i)).product();
            *out.entry(n - q + p).or_insert(0.0) += c.eval(beta) * falling;
        }
        out.retain(|_, v| *v != 0.0);
        out
    }
}

impl Add for &BosonOperator {
    type Output = BosonOperator;
    fn add(self, rhs: &BosonOperator) -> BosonOperator {
        let mut out = self.clone();
        for (&k, v) in &rhs.terms {
            out.add_term(k, v.clone());
        }
        out
    }
}

impl Sub for &BosonOperator {
    type Output = BosonOperator;
    fn sub(self, rhs: &BosonOperator) -> BosonOperator {
        self + &(-rhs)
    }
}

impl Neg for &BosonOperator {
    type Output = BosonOperator;
    fn neg(self) -> BosonOperator {
        BosonOperator { terms: self.terms.iter().map(|(&k, v)| (k, -v)).collect() }
    }
}

impl Mul for &BosonOperator {
    type Output = BosonOperator;
    fn mul(self, rhs: &BosonOperator) -> BosonOperator {
        self.normal_order_multiply(rhs)
    }
}

fn write_monomial(f: &mut fmt::Formatter<'_>, p: u32, q: u32) -> fmt::Result {
    if p == 0 && q == 0 {
        return write!(f, "I");
    }
    for _ in 0..p {
        write!(f, "a†")?;
    }
    for _ in 0..q {
        write!(f, "a")?;
    }
    Ok(())
}

impl fmt::Display for BosonOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        // Highest total degree first: a†a†a + βa† reads naturally.
        let mut terms: Vec<_> = self.terms.iter().collect();
        terms.sort_by_key(|(&(p, q), _)| (std::cmp::Reverse(p + q), std::cmp::Reverse(p)));
        for (i, (&(p, q), c)) in terms.into_iter().enumerate() {
            let text = c.to_string();
            let single = c.coeffs().iter().filter(|x| !num::Zero::is_zero(*x)).count() == 1;
            let (neg, body) = match text.strip_prefix('-') {
                Some(rest) if single => (true, rest.to_string()),
                _ => (false, text),
            };
            if i == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { "-" } else { "+" })?;
            }
            let is_unit = body == "1";
            match (is_unit, p + q == 0) {
                (true, _) => write_monomial(f, p, q)?,
                (false, true) => write!(f, "{body}")?,
                (false, false) if single => {
                    write!(f, "{body} ")?;
                    write_monomial(f, p, q)?
                }
                (false, false) => {
                    write!(f, "({body}) ")?;
                    write_monomial(f, p, q)?
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ad() -> BosonOperator {
        BosonOperator::creation()
    }
    fn a() -> BosonOperator {
        BosonOperator::annihilation()
    }
    fn id() -> BosonOperator {
        BosonOperator::identity()
    }

    /// Independent oracle: rewrite words of a/a† with a a† → a† a + 1 until
    /// normal ordered.
    fn rewrite_word(word: &[bool]) -> BosonOperator {
        // true = a†, false = a
        if let Some(pos) = word.windows(2).position(|w| !w[0] && w[1]) {
            let mut swapped = word.to_vec();
            swapped.swap(pos, pos + 1);
            let mut contracted = word.to_vec();
            contracted.drain(pos..pos + 2);
            return &rewrite_word(&swapped) + &rewrite_word(&contracted);
        }
        let p = word.iter().filter(|&&x| x).count() as u32;
        BosonOperator::monomial(p, word.len() as u32 - p)
    }

    fn word(p: u32, q: u32) -> Vec<bool> {
        std::iter::repeat(true).take(p as usize).chain(std::iter::repeat(false).take(q as usize)).collect()
    }

    #[test]
    fn canonical_commutation() {
        assert_eq!(&a() * &ad(), &BosonOperator::number() + &id());
        assert_eq!(&ad() * &ad(), BosonOperator::monomial(2, 0));
        assert_eq!(a().commutator(&ad()), id());
    }

    #[test]
    fn double_annihilation_times_double_creation() {
        let lhs = &BosonOperator::monomial(0, 2) * &BosonOperator::monomial(2, 0);
        let expect = &(&BosonOperator::monomial(2, 2) + &BosonOperator::term(1, 1, Poly::int(4)))
            + &BosonOperator::term(0, 0, Poly::int(2));
        assert_eq!(lhs, expect);
        // (n+2)(n+1) = n(n−1) + 4n + 2 on |n⟩
        for n in 0..10u32 {
            let v = lhs.apply_to_number_state(n, 0.0);
            let nn = f64::from(n);
            assert_eq!(v.get(&n).copied().unwrap_or(0.0), (nn + 2.0) * (nn + 1.0));
        }
    }

    #[test]
    fn closed_form_matches_rewriting() {
        for p in 0..3 {
            for q in 0..4 {
                for r in 0..4 {
                    for s in 0..3 {
                        let mut w = word(p, q);
                        w.extend(word(r, s));
                        let direct = &BosonOperator::monomial(p, q) * &BosonOperator::monomial(r, s);
                        assert_eq!(direct, rewrite_word(&w), "({p},{q})·({r},{s})");
                    }
                }
            }
        }
    }

    #[test]
    fn basis_commutators() {
        let h2 = BosonOperator::birth_with_immigration();
        let n = BosonOperator::number();
        let a2a = BosonOperator::monomial(2, 1);
        assert_eq!(a2a.commutator(&ad()), BosonOperator::monomial(2, 0));
        assert_eq!(
            h2.commutator(&a()),
            &BosonOperator::term(0, 0, -&Poly::beta()) + &BosonOperator::term(1, 1, Poly::int(-2))
        );
        assert_eq!(h2.commutator(&n), -&h2);
        assert_eq!(a2a.commutator(&a()), BosonOperator::term(1, 1, Poly::int(-2)));
        assert_eq!(a2a.commutator(&n), -&a2a);
        assert_eq!(a().commutator(&n), a());
    }

    #[test]
    fn display() {
        assert_eq!(BosonOperator::birth_with_immigration().to_string(), "a†a†a + β a†");
        assert_eq!((-&BosonOperator::number()).to_string(), "-a†a");
        assert_eq!(BosonOperator::identity().to_string(), "I");
        let m = &BosonOperator::term(0, 0, -&Poly::beta()) + &BosonOperator::term(1, 1, Poly::int(-2));
        assert_eq!(m.to_string(), "-2 a†a - β");
    }
}
