//! Sparse multivariate polynomials and polynomial determinants.
//!
//! Monomials are exponent vectors. "Lexicographic order" throughout means
//! the usual lex order with `x0 > x1 > ...`; the leading term is the
//! lex-largest monomial, and serialized terms are listed in descending
//! lex order.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::Signed as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{format_rational, parse_rational, Num, Rational, Scalar, ScalarKind};

pub type Monomial = Vec<u32>;

#[derive(Clone, PartialEq)]
pub struct MultiPoly<S> {
    nvars: usize,
    terms: BTreeMap<Monomial, S>,
}

impl<S: fmt::Debug> fmt::Debug for MultiPoly<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.terms.iter().rev()).finish()
    }
}

impl<S: Scalar> MultiPoly<S> {
    pub fn zero(nvars: usize) -> Self {
        MultiPoly { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: S) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, S::one())
    }

    /// The polynomial `x_i`.
    pub fn var(nvars: usize, i: usize) -> Self {
        let mut exp = vec![0; nvars];
        exp[i] = 1;
        let mut p = Self::zero(nvars);
        p.add_term(exp, S::one());
        p
    }

    /// `sum_i coeffs[i] * x_i`.
    pub fn linear(coeffs: &[S]) -> Self {
        let n = coeffs.len();
        let mut p = Self::zero(n);
        for (i, c) in coeffs.iter().enumerate() {
            let mut exp = vec![0; n];
            exp[i] = 1;
            p.add_term(exp, c.clone());
        }
        p
    }

    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (Monomial, S)>) -> Self {
        let mut p = Self::zero(nvars);
        for (m, c) in terms {
            assert_eq!(m.len(), nvars, "monomial length");
            p.add_term(m, c);
        }
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, m: &[u32]) -> S {
        self.terms.get(m).cloned().unwrap_or_else(S::zero)
    }

    /// Terms in descending lex order.
    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &S)> {
        self.terms.iter().rev()
    }

    pub fn leading_term(&self) -> Option<(&Monomial, &S)> {
        self.terms.iter().next_back()
    }

    fn add_term(&mut self, m: Monomial, c: S) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(existing) => {
                let sum = existing.clone() + c;
                if sum.is_zero() {
                    self.terms.remove(&m);
                } else {
                    *existing = sum;
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.iter().sum()).max()
    }

    pub fn is_homogeneous(&self) -> bool {
        let mut degrees = self.terms.keys().map(|m| m.iter().sum::<u32>());
        match degrees.next() {
            None => true,
            Some(d) => degrees.all(|e| e == d),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.nvars, other.nvars, "variable count");
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Self {
        MultiPoly { nvars: self.nvars, terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, s: &S) -> Self {
        let mut out = Self::zero(self.nvars);
        for (m, c) in &self.terms {
            out.add_term(m.clone(), c.clone() * s.clone());
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.nvars, other.nvars, "variable count");
        let mut out = Self::zero(self.nvars);
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let m: Monomial = m1.iter().zip(m2).map(|(a, b)| a + b).collect();
                out.add_term(m, c1.clone() * c2.clone());
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> Self {
        (0..k).fold(Self::one(self.nvars), |acc, _| acc.mul(self))
    }

    pub fn eval(&self, point: &[S]) -> S {
        assert_eq!(point.len(), self.nvars, "point dimension");
        let mut total = S::zero();
        for (m, c) in &self.terms {
            let mut term = c.clone();
            for (x, &e) in point.iter().zip(m) {
                for _ in 0..e {
                    term = term * x.clone();
                }
            }
            total = total + term;
        }
        total
    }

    pub fn eval_f64(&self, point: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(m, c)| c.to_f64() * m.iter().zip(point).map(|(&e, x)| x.powi(e as i32)).product::<f64>())
            .sum()
    }

    /// Substitute polynomials (all in the same variables) for each variable.
    pub fn compose(&self, subs: &[MultiPoly<S>]) -> MultiPoly<S> {
        assert_eq!(subs.len(), self.nvars, "substitution count");
        let target = subs.first().map_or(0, MultiPoly::nvars);
        let mut out = MultiPoly::zero(target);
        for (m, c) in &self.terms {
            let mut term = MultiPoly::constant(target, c.clone());
            for (sub, &e) in subs.iter().zip(m) {
                if e > 0 {
                    term = term.mul(&sub.pow(e));
                }
            }
            out = out.add(&term);
        }
        out
    }

    /// Set variable `var` to zero and drop it.
    pub fn restrict_zero(&self, var: usize) -> MultiPoly<S> {
        let mut out = MultiPoly::zero(self.nvars - 1);
        for (m, c) in &self.terms {
            if m[var] == 0 {
                let mut reduced = m.clone();
                reduced.remove(var);
                out.add_term(reduced, c.clone());
            }
        }
        out
    }

    /// Exact quotient `self / divisor`, or `None` when the division leaves
    /// a remainder. Division is by lex leading terms; over floats, terms of
    /// magnitude at most `tol` are dropped from the running remainder.
    pub fn div_exact(&self, divisor: &Self, tol: f64) -> Option<Self> {
        let (lead_m, lead_c) = divisor.leading_term()?;
        let mut rem = self.clone();
        let mut quotient = Self::zero(self.nvars);
        let bound = tol * (1.0 + self.max_magnitude());
        while let Some((m, c)) = rem.leading_term() {
            if c.near_zero(bound) {
                let m = m.clone();
                rem.terms.remove(&m);
                continue;
            }
            if m.iter().zip(lead_m).any(|(a, b)| a < b) {
                return None;
            }
            let qm: Monomial = m.iter().zip(lead_m).map(|(a, b)| a - b).collect();
            let qc = c.clone() / lead_c.clone();
            let step = Self::from_terms(self.nvars, [(qm, qc)]);
            rem = rem.sub(&step.mul(divisor));
            quotient = quotient.add(&step);
        }
        Some(quotient)
    }

    pub fn max_magnitude(&self) -> f64 {
        self.terms.values().map(Num::magnitude).fold(0.0, f64::max)
    }

    /// Drop coefficients with magnitude at most `tol * max|coeff|`. No-op for
    /// exact coefficients.
    pub fn prune(&self, tol: f64) -> Self {
        if S::KIND == ScalarKind::Exact {
            return self.clone();
        }
        let bound = tol * self.max_magnitude();
        MultiPoly {
            nvars: self.nvars,
            terms: self.terms.iter().filter(|(_, c)| c.magnitude() > bound).map(|(m, c)| (m.clone(), c.clone())).collect(),
        }
    }

    /// Divide by the leading coefficient.
    pub fn monic(&self) -> Self {
        match self.leading_term() {
            None => self.clone(),
            Some((_, c)) => {
                let inv = S::one() / c.clone();
                self.scale(&inv)
            }
        }
    }

    pub fn near(&self, other: &Self, tol: f64) -> bool {
        self.sub(other).terms.values().all(|c| c.near_zero(tol))
    }

    pub fn display(&self, names: &[String]) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut out = String::new();
        for (i, (m, c)) in self.terms().enumerate() {
            let mono: Vec<String> = m
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(v, &e)| if e == 1 { names[v].clone() } else { format!("{}^{}", names[v], e) })
                .collect();
            let (negative, mag) = coefficient_text(c);
            if i == 0 {
                if negative {
                    out.push('-');
                }
            } else {
                out.push_str(if negative { " - " } else { " + " });
            }
            match (mono.is_empty(), mag.as_str()) {
                (true, _) => out.push_str(&mag),
                (false, "1") => out.push_str(&mono.join("*")),
                (false, _) => {
                    out.push_str(&mag);
                    out.push('*');
                    out.push_str(&mono.join("*"));
                }
            }
        }
        out
    }
}

/// Sign and magnitude text of a coefficient.
pub(crate) fn coefficient_text<S: Scalar>(c: &S) -> (bool, String) {
    match (c as &dyn std::any::Any).downcast_ref::<Rational>() {
        Some(r) => (r.is_negative(), format_rational(&r.abs())),
        None => {
            let v = c.to_f64();
            (v < 0.0, format!("{}", v.abs()))
        }
    }
}

impl MultiPoly<Rational> {
    pub fn to_f64(&self) -> MultiPoly<f64> {
        MultiPoly::from_terms(self.nvars, self.terms.iter().map(|(m, c)| (m.clone(), c.to_f64())))
    }

    /// Multiply through so all coefficients are integers with no common factor
    /// and a positive leading coefficient.
    pub fn primitive(&self) -> Self {
        use num_integer::Integer;
        let Some((_, lead)) = self.leading_term() else { return self.clone() };
        let lcm = self.terms.values().fold(num_bigint::BigInt::from(1), |acc, c| acc.lcm(c.denom()));
        let scaled = self.scale(&Rational::from_integer(lcm));
        let gcd = scaled.terms.values().fold(num_bigint::BigInt::from(0), |acc, c| acc.gcd(c.numer()));
        let mut factor = Rational::new(1.into(), gcd);
        if lead.is_negative() {
            factor = -factor;
        }
        scaled.scale(&factor)
    }
}

/// Determinant of a square matrix of polynomials. Exact coefficients use
/// fraction-free Bareiss elimination up to size 6 and cofactor expansion
/// beyond; float coefficients always use cofactor expansion.
pub fn poly_determinant<S: Scalar>(m: &[Vec<MultiPoly<S>>], nvars: usize) -> MultiPoly<S> {
    let n = m.len();
    assert!(m.iter().all(|row| row.len() == n), "square matrix required");
    if n == 0 {
        return MultiPoly::one(nvars);
    }
    if S::KIND == ScalarKind::Exact && n <= 6 {
        bareiss(m.to_vec(), nvars)
    } else {
        cofactor(m, nvars)
    }
}

fn bareiss<S: Scalar>(mut m: Vec<Vec<MultiPoly<S>>>, nvars: usize) -> MultiPoly<S> {
    let n = m.len();
    let mut negate = false;
    let mut prev = MultiPoly::one(nvars);
    for k in 0..n - 1 {
        if m[k][k].is_zero() {
            match (k + 1..n).find(|&i| !m[i][k].is_zero()) {
                Some(i) => {
                    m.swap(i, k);
                    negate = !negate;
                }
                None => return MultiPoly::zero(nvars),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = m[i][j].mul(&m[k][k]).sub(&m[i][k].mul(&m[k][j]));
                m[i][j] = num.div_exact(&prev, 0.0).expect("Bareiss step divides exactly");
            }
        }
        prev = m[k][k].clone();
    }
    let det = m[n - 1][n - 1].clone();
    if negate { det.neg() } else { det }
}

fn cofactor<S: Scalar>(m: &[Vec<MultiPoly<S>>], nvars: usize) -> MultiPoly<S> {
    let n = m.len();
    if n == 1 {
        return m[0][0].clone();
    }
    let mut total = MultiPoly::zero(nvars);
    for j in 0..n {
        if m[0][j].is_zero() {
            continue;
        }
        let minor: Vec<Vec<MultiPoly<S>>> =
            m[1..].iter().map(|row| row.iter().enumerate().filter(|(k, _)| *k != j).map(|(_, p)| p.clone()).collect()).collect();
        let term = m[0][j].mul(&cofactor(&minor, nvars));
        total = if j % 2 == 0 { total.add(&term) } else { total.sub(&term) };
    }
    total
}

/// One serialized term.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermRecord {
    pub exp: Vec<u32>,
    pub num: String,
    pub den: String,
}

/// Wire form of an exact polynomial: terms in descending lex order with
/// reduced fractions and positive denominators.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolyRecord {
    pub nvars: usize,
    pub terms: Vec<TermRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyDecodeError {
    #[error("malformed JSON: {0}")]
    Json(String),
    #[error("term {index}: exponent vector has length {got}, expected {expected}")]
    ExponentLength { index: usize, got: usize, expected: usize },
    #[error("term {index}: invalid integer `{text}`")]
    BadInteger { index: usize, text: String },
    #[error("term {index}: denominator must be positive")]
    BadDenominator { index: usize },
    #[error("term {index}: fraction not in lowest terms")]
    NotReduced { index: usize },
    #[error("term {index}: zero coefficient")]
    ZeroCoefficient { index: usize },
    #[error("term {index}: terms not in strictly descending lex order")]
    Unordered { index: usize },
}

impl MultiPoly<Rational> {
    pub fn to_record(&self) -> PolyRecord {
        PolyRecord {
            nvars: self.nvars,
            terms: self
                .terms()
                .map(|(m, c)| TermRecord { exp: m.clone(), num: c.numer().to_string(), den: c.denom().to_string() })
                .collect(),
        }
    }

    /// Strict decode: only canonical records are accepted, so that
    /// `to_record(from_record(x)) == x` whenever decoding succeeds.
    pub fn from_record(record: &PolyRecord) -> Result<Self, PolyDecodeError> {
        let mut p = MultiPoly::zero(record.nvars);
        let mut last: Option<&Monomial> = None;
        for (index, t) in record.terms.iter().enumerate() {
            if t.exp.len() != record.nvars {
                return Err(PolyDecodeError::ExponentLength { index, got: t.exp.len(), expected: record.nvars });
            }
            if let Some(prev) = last {
                if t.exp >= *prev {
                    return Err(PolyDecodeError::Unordered { index });
                }
            }
            last = Some(&t.exp);
            let num = parse_canonical_int(&t.num, true).ok_or_else(|| PolyDecodeError::BadInteger { index, text: t.num.clone() })?;
            let den = parse_canonical_int(&t.den, false).ok_or_else(|| PolyDecodeError::BadInteger { index, text: t.den.clone() })?;
            if den <= 0.into() {
                return Err(PolyDecodeError::BadDenominator { index });
            }
            if num == 0.into() {
                return Err(PolyDecodeError::ZeroCoefficient { index });
            }
            let value = Rational::new(num.clone(), den.clone());
            if *value.numer() != num || *value.denom() != den {
                return Err(PolyDecodeError::NotReduced { index });
            }
            p.terms.insert(t.exp.clone(), value);
        }
        Ok(p)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_record()).expect("records always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, PolyDecodeError> {
        let record: PolyRecord = serde_json::from_str(text).map_err(|e| PolyDecodeError::Json(e.to_string()))?;
        Self::from_record(&record)
    }
}

fn parse_canonical_int(text: &str, signed: bool) -> Option<num_bigint::BigInt> {
    let digits = if signed { text.strip_prefix('-').unwrap_or(text) } else { text };
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    if digits.len() > 1 && digits.starts_with('0') {
        return None;
    }
    if digits == "0" && digits.len() != text.len() {
        return None;
    }
    let value = parse_rational(text).ok()?;
    Some(value.numer().clone())
}
