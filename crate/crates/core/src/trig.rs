//! Exact trigonometric polynomials in (t, φ) with t-frequencies in ℤ/3.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::spectral::C64;

pub const MAX_TERMS: usize = 1_000_000;

/// Σ c_{n,m} e^{i n t / 3} e^{i m φ}, keyed by (n, m).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrigPoly {
    terms: BTreeMap<(i64, i64), C64>,
}

impl TrigPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: C64) -> Self {
        Self::monomial(0, 0, c)
    }

    pub fn monomial(n: i64, m: i64, c: C64) -> Self {
        let mut p = Self::zero();
        p.add_term(n, m, c);
        p
    }

    /// Accumulates `c` at (n, m); exact zeros are not stored.
    pub fn add_term(&mut self, n: i64, m: i64, c: C64) {
        if c == C64::new(0.0, 0.0) {
            return;
        }
        let slot = self.terms.entry((n, m)).or_default();
        *slot += c;
        if *slot == C64::new(0.0, 0.0) {
            self.terms.remove(&(n, m));
        }
    }

    pub fn coeff(&self, n: i64, m: i64) -> C64 {
        self.terms.get(&(n, m)).copied().unwrap_or_default()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = ((i64, i64), C64)> + '_ {
        self.terms.iter().map(|(&k, &v)| (k, v))
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for ((n, m), c) in other.terms() {
            out.add_term(n, m, c);
        }
        out
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = Self::zero();
        for ((n, m), c) in self.terms() {
            out.add_term(n, m, c * s);
        }
        out
    }

    /// Convolution of the term maps.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.len().saturating_mul(other.len()) > MAX_TERMS {
            return Err(Error::TermOverflow(MAX_TERMS));
        }
        let mut out = Self::zero();
        for ((n1, m1), c1) in self.terms() {
            for ((n2, m2), c2) in other.terms() {
                out.add_term(n1 + n2, m1 + m2, c1 * c2);
            }
        }
        Ok(out)
    }

    /// The polynomial of the complex-conjugate function.
    pub fn conj_reflect(&self) -> Self {
        Self {
            terms: self.terms().map(|((n, m), c)| ((-n, -m), c.conj())).collect(),
        }
    }

    /// Whether coeff(−n, −m) = conj(coeff(n, m)) within `tol`.
    pub fn is_real(&self, tol: f64) -> bool {
        self.terms()
            .all(|((n, m), c)| (self.coeff(-n, -m) - c.conj()).norm() <= tol)
    }

    pub fn evaluate(&self, t: f64, phi: f64) -> C64 {
        self.terms()
            .map(|((n, m), c)| c * C64::from_polar(1.0, n as f64 * t / 3.0 + m as f64 * phi))
            .sum()
    }

    /// Sum of coefficient moduli, a bound on the sup norm.
    pub fn l1_norm(&self) -> f64 {
        self.terms().map(|(_, c)| c.norm()).sum()
    }
}

/// ∫₀^{6π} ∫₀^{2π} P dφ dt. Every non-constant term has a whole number of
/// periods on the cell and integrates to zero exactly.
pub fn integrate_cell(p: &TrigPoly) -> C64 {
    p.coeff(0, 0) * (12.0 * PI * PI)
}

/// ∫∫ A·B·μ over the cell without forming the triple product.
pub fn integrate_triple(a: &TrigPoly, b: &TrigPoly, mu: &TrigPoly) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for ((n1, m1), c1) in a.terms() {
        for ((n2, m2), c2) in b.terms() {
            let w = mu.coeff(-(n1 + n2), -(m1 + m2));
            if w != C64::new(0.0, 0.0) {
                acc += c1 * c2 * w;
            }
        }
    }
    acc * (12.0 * PI * PI)
}
