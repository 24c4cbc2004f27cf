//! Focus hypersurfaces and focus hypercones as exact determinant
//! polynomials, regularity tests, dual nondegeneracy, linear factorization
//! in the commuting case, and the Euclidean slice identity at infinity.

use std::cmp::Ordering;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::poly::{coefficient_text, poly_determinant, MultiPoly};
use crate::scalar::{Num, Rational, Scalar, ScalarKind};
use crate::tensor::Matrix;
use crate::variety::{
    validate_degenerate_gauss, validate_normalized, Ambient, DegenerateGaussTensors, FundamentalTensors, IndexRanges,
    ValidationError, Violation,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FocalError {
    #[error("input failed validation: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    NotValidated(Vec<Violation>),
    #[error(transparent)]
    Invalid(#[from] ValidationError),
    #[error("all coordinates of the point are zero")]
    ZeroPoint,
    #[error("point has {got} coordinates, expected {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("operation requires euclidean data, got {0}")]
    WrongAmbient(&'static str),
    #[error("not factorable: {0}")]
    NotFactorable(String),
    #[error("eigenvalue iteration did not converge")]
    EigenFailure,
}

/// Data from which focal polynomials are formed.
pub trait FocalData<S: Scalar> {
    fn ranges(&self) -> IndexRanges;
    fn validate(&self, tol: f64) -> Result<(), FocalError>;
    /// `C_1 .. C_l` with entry `(p, q) = c^p_{aq}`.
    fn point_matrices(&self) -> Vec<Matrix<S>>;
    /// Matrices multiplying the hyperplane coordinates, with the coordinate names.
    fn hyperplane_matrices(&self) -> (Vec<Matrix<S>>, Vec<String>);
    /// Second fundamental forms paired with the point matrices in the
    /// symmetry condition `(B C_a)^T = B C_a`.
    fn second_forms(&self) -> Vec<Matrix<S>>;
    /// `(g_tangent, g_normal)` for Euclidean data.
    fn euclidean_metrics(&self) -> Option<(Matrix<S>, Matrix<S>)> {
        None
    }
    fn ambient_name(&self) -> &'static str;
}

fn validated(report: crate::variety::ValidationReport) -> Result<(), FocalError> {
    if report.passed() { Ok(()) } else { Err(FocalError::NotValidated(report.violations)) }
}

fn names(prefix: &str, range: std::ops::Range<usize>) -> Vec<String> {
    range.map(|i| format!("{prefix}{i}")).collect()
}

impl<S: Scalar> FocalData<S> for FundamentalTensors<S> {
    fn ranges(&self) -> IndexRanges {
        self.ranges
    }
    fn validate(&self, tol: f64) -> Result<(), FocalError> {
        validated(validate_normalized(self, tol)?)
    }
    fn point_matrices(&self) -> Vec<Matrix<S>> {
        (0..self.ranges.l).map(|a| self.c_matrix(a)).collect()
    }
    fn hyperplane_matrices(&self) -> (Vec<Matrix<S>>, Vec<String>) {
        let l = self.ranges.l;
        let forms: Vec<Matrix<S>> = (0..l).map(|a| self.b_matrix(a)).collect();
        if self.ambient.is_affine() {
            (forms, names("xi", 1..l + 1))
        } else {
            let r = self.ranges.r;
            let l_mat = Matrix::from_fn(r, r, |p, q| self.l_at(p, q).clone());
            (std::iter::once(l_mat).chain(forms).collect(), names("xi", 0..l + 1))
        }
    }
    fn second_forms(&self) -> Vec<Matrix<S>> {
        (0..self.ranges.l).map(|a| self.b_matrix(a)).collect()
    }
    fn euclidean_metrics(&self) -> Option<(Matrix<S>, Matrix<S>)> {
        if self.ambient != Ambient::Euclidean {
            return None;
        }
        Some((self.g_tangent_matrix()?, self.g_normal_matrix()?))
    }
    fn ambient_name(&self) -> &'static str {
        self.ambient.name()
    }
}

impl<S: Scalar> FocalData<S> for DegenerateGaussTensors<S> {
    fn ranges(&self) -> IndexRanges {
        self.ranges
    }
    fn validate(&self, tol: f64) -> Result<(), FocalError> {
        validated(validate_degenerate_gauss(self, tol)?)
    }
    fn point_matrices(&self) -> Vec<Matrix<S>> {
        (0..self.ranges.l).map(|a| self.c_matrix(a)).collect()
    }
    fn hyperplane_matrices(&self) -> (Vec<Matrix<S>>, Vec<String>) {
        let h = self.ranges.hyperplanes();
        ((0..h).map(|alpha| self.b_matrix(alpha)).collect(), names("xi", 1..h + 1))
    }
    fn second_forms(&self) -> Vec<Matrix<S>> {
        (0..self.ranges.hyperplanes()).map(|alpha| self.b_matrix(alpha)).collect()
    }
    fn ambient_name(&self) -> &'static str {
        "degenerate-gauss"
    }
}

/// `det(sum_i x_i M_i)` over the variables `x_i`.
pub fn pencil_determinant<S: Scalar>(mats: &[Matrix<S>]) -> MultiPoly<S> {
    let nvars = mats.len();
    let r = mats.first().map_or(0, Matrix::rows);
    let entries: Vec<Vec<MultiPoly<S>>> = (0..r)
        .map(|p| {
            (0..r)
                .map(|q| MultiPoly::linear(&mats.iter().map(|m| m.get(p, q).clone()).collect::<Vec<_>>()))
                .collect()
        })
        .collect();
    poly_determinant(&entries, nvars)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FocalReport<S> {
    pub variables: Vec<String>,
    /// Canonical form: leading coefficient in lex order equal to one.
    pub polynomial: MultiPoly<S>,
    /// Determinant as formed, before rescaling.
    pub raw: MultiPoly<S>,
    pub degree: Option<u32>,
    /// A point at which the polynomial does not vanish.
    pub regular_point: Option<Vec<S>>,
    /// Euclidean hypersurfaces only: `det(y0 g_{pq} - y_a b^a_{pq})`, `y_a = g_{ab} y^b`.
    pub lowered: Option<MultiPoly<S>>,
    pub factorization: Option<Factorization<S>>,
}

impl<S: Scalar> FocalReport<S> {
    fn new(variables: Vec<String>, raw: MultiPoly<S>) -> Self {
        let raw = if S::KIND == ScalarKind::Float { raw.prune(1e-14) } else { raw };
        let polynomial = raw.monic();
        FocalReport {
            variables,
            degree: polynomial.degree(),
            regular_point: regular_point(&polynomial),
            polynomial,
            raw,
            lowered: None,
            factorization: None,
        }
    }

    pub fn display(&self) -> String {
        self.polynomial.display(&self.variables)
    }
}

/// First point of the grid `{0..=deg}^m`, unit vectors first, at which `p`
/// does not vanish. A nonzero polynomial of degree `d` cannot vanish on the
/// whole grid.
fn regular_point<S: Scalar>(p: &MultiPoly<S>) -> Option<Vec<S>> {
    let m = p.nvars();
    let deg = p.degree()? as usize;
    let nonzero = |pt: &[S]| !p.eval(pt).is_zero();
    for i in 0..m {
        let pt: Vec<S> = (0..m).map(|j| if i == j { S::one() } else { S::zero() }).collect();
        if nonzero(&pt) {
            return Some(pt);
        }
    }
    crate::tensor::MultiIndex::new(&vec![deg + 1; m])
        .map(|idx| idx.iter().map(|&k| S::from_i64(k as i64)).collect::<Vec<S>>())
        .find(|pt| nonzero(pt))
}

/// `det(y0 δ^p_q + y^a c^p_{aq})` in the variables `y0 .. yl`.
pub fn focus_hypersurface_poly<S: Scalar, D: FocalData<S>>(data: &D, tol: f64) -> Result<FocalReport<S>, FocalError> {
    data.validate(tol)?;
    let r = data.ranges().r;
    let l = data.ranges().l;
    let mats: Vec<Matrix<S>> = std::iter::once(Matrix::identity(r)).chain(data.point_matrices()).collect();
    let mut report = FocalReport::new(names("y", 0..l + 1), pencil_determinant(&mats));
    if let Some((gt, gn)) = data.euclidean_metrics() {
        report.lowered = Some(lowered_hypersurface(&gt, &gn, &data.second_forms()));
    }
    Ok(report)
}

/// `det(y0 g_{pq} - y_a b^a_{pq})` with `y_a = g_{ab} y^b`.
fn lowered_hypersurface<S: Scalar>(gt: &Matrix<S>, gn: &Matrix<S>, forms: &[Matrix<S>]) -> MultiPoly<S> {
    let l = forms.len();
    // coefficient of y^b is -sum_a g_{ab} B^a
    let mats: Vec<Matrix<S>> = std::iter::once(gt.clone())
        .chain((0..l).map(|b| {
            forms
                .iter()
                .enumerate()
                .fold(Matrix::zeros(gt.rows(), gt.cols()), |acc, (a, form)| acc.sub(&form.scale(gn.get(a, b))))
        }))
        .collect();
    pencil_determinant(&mats)
}

/// Projective normalized data: `det(xi0 l + xi_a b^a)`; affine and Euclidean:
/// `det(xi_a b^a)`; degenerate-Gauss data: `det(xi_alpha b^alpha)`.
pub fn focus_hypercone_poly<S: Scalar, D: FocalData<S>>(data: &D, tol: f64) -> Result<FocalReport<S>, FocalError> {
    data.validate(tol)?;
    let (mats, vars) = data.hyperplane_matrices();
    Ok(FocalReport::new(vars, pencil_determinant(&mats)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct JacobianValue<S> {
    pub value: S,
    pub singular: bool,
}

/// Value of the focus-hypersurface polynomial at `y`; singular iff zero.
pub fn jacobian_at<S: Scalar, D: FocalData<S>>(data: &D, y: &[S], tol: f64) -> Result<JacobianValue<S>, FocalError> {
    let expected = data.ranges().l + 1;
    if y.len() != expected {
        return Err(FocalError::DimensionMismatch { got: y.len(), expected });
    }
    if y.iter().all(Num::is_zero) {
        return Err(FocalError::ZeroPoint);
    }
    let report = focus_hypersurface_poly(data, tol)?;
    let value = report.raw.eval(y);
    let singular = value.near_zero(tol);
    Ok(JacobianValue { value, singular })
}

/// True iff the focus-hypercone polynomial is not identically zero.
pub fn dual_nondegenerate<S: Scalar, D: FocalData<S>>(data: &D, tol: f64) -> Result<bool, FocalError> {
    Ok(!focus_hypercone_poly(data, tol)?.polynomial.is_zero())
}

#[derive(Debug, Clone, PartialEq)]
pub enum FocalFactor<S> {
    /// `(y0 + lambda_a y^a)^multiplicity`; `coeffs = [1, lambda_1, ..]`.
    Linear { coeffs: Vec<S>, multiplicity: usize },
    /// A factor without linear factors over the scalar field of the output.
    Nonlinear { polynomial: MultiPoly<S> },
}

impl<S: Scalar> FocalFactor<S> {
    pub fn expand(&self) -> MultiPoly<S> {
        match self {
            FocalFactor::Linear { coeffs, multiplicity } => MultiPoly::linear(coeffs).pow(*multiplicity as u32),
            FocalFactor::Nonlinear { polynomial } => polynomial.clone(),
        }
    }

    fn display(&self, vars: &[String]) -> String {
        match self {
            FocalFactor::Linear { coeffs, multiplicity } => {
                let mut text = String::from("(");
                let mut first = true;
                for (c, v) in coeffs.iter().zip(vars) {
                    if c.is_zero() {
                        continue;
                    }
                    let (negative, mag) = coefficient_text(c);
                    if negative {
                        text.push('-');
                    } else if !first {
                        text.push('+');
                    }
                    match mag.as_str() {
                        "1" => {}
                        m if m.contains('/') => text.push_str(&format!("({m})")),
                        m => text.push_str(m),
                    }
                    text.push_str(v);
                    first = false;
                }
                text.push(')');
                if *multiplicity > 1 {
                    text.push_str(&format!("^{multiplicity}"));
                }
                text
            }
            FocalFactor::Nonlinear { polynomial } => format!("({})", polynomial.display(vars).replace(' ', "")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Factorization<S> {
    pub factors: Vec<FocalFactor<S>>,
    pub text: String,
}

impl<S: Scalar> Factorization<S> {
    fn new(mut factors: Vec<FocalFactor<S>>, vars: &[String]) -> Self {
        factors.sort_by(compare_factors);
        let text = factors.iter().map(|f| f.display(vars)).collect();
        Factorization { factors, text }
    }

    pub fn product(&self, nvars: usize) -> MultiPoly<S> {
        self.factors.iter().fold(MultiPoly::one(nvars), |acc, f| acc.mul(&f.expand()))
    }

    /// Coefficient vectors of the linear factors, repeated by multiplicity.
    pub fn linear_roots(&self) -> Vec<Vec<S>> {
        let mut out = Vec::new();
        for f in &self.factors {
            if let FocalFactor::Linear { coeffs, multiplicity } = f {
                for _ in 0..*multiplicity {
                    out.push(coeffs[1..].to_vec());
                }
            }
        }
        out
    }
}

fn compare_factors<S: Scalar>(x: &FocalFactor<S>, y: &FocalFactor<S>) -> Ordering {
    match (x, y) {
        (FocalFactor::Linear { coeffs: a, .. }, FocalFactor::Linear { coeffs: b, .. }) => a
            .iter()
            .zip(b)
            .map(|(u, v)| u.to_rational().cmp(&v.to_rational()))
            .find(|o| *o != Ordering::Equal)
            .unwrap_or(Ordering::Equal),
        (FocalFactor::Linear { .. }, _) => Ordering::Less,
        (_, FocalFactor::Linear { .. }) => Ordering::Greater,
        _ => Ordering::Equal,
    }
}

/// Split the focus-hypersurface polynomial into linear factors
/// `y0 + lambda_a y^a`. Requires `l = 1`, or pairwise commuting `C_a` with
/// every `B C_a` symmetric. Exact data is factored over the rationals, with
/// any part lacking rational linear factors returned as one nonlinear
/// factor; float data is factored through a real Schur form, complex
/// conjugate pairs becoming quadratic factors.
pub fn factor_linear<S: Scalar, D: FocalData<S>>(data: &D, tol: f64) -> Result<Factorization<S>, FocalError> {
    let report = focus_hypersurface_poly(data, tol)?;
    let cs = data.point_matrices();
    let l = cs.len();
    if l > 1 {
        for a in 0..l {
            for b in a + 1..l {
                let comm = cs[a].mul(&cs[b]).sub(&cs[b].mul(&cs[a]));
                if !comm.is_zero(tol) {
                    return Err(FocalError::NotFactorable(format!("C_{} and C_{} do not commute", a + 1, b + 1)));
                }
            }
        }
        for (i, form) in data.second_forms().iter().enumerate() {
            for (a, c) in cs.iter().enumerate() {
                if !form.mul(c).is_symmetric(tol) {
                    return Err(FocalError::NotFactorable(format!("B^{} C_{} is not symmetric", i + 1, a + 1)));
                }
            }
        }
    }
    let factors = match S::KIND {
        ScalarKind::Exact => {
            let exact: Vec<Matrix<Rational>> = cs.iter().map(|m| to_rational_matrix(m)).collect::<Option<_>>().ok_or_else(
                || FocalError::NotFactorable("non-finite entry".into()),
            )?;
            let poly = MultiPoly::from_terms(
                l + 1,
                report.raw.terms().map(|(m, c)| (m.clone(), c.to_rational().expect("exact coefficient"))),
            );
            exact_factors(&exact, &poly)?
                .into_iter()
                .map(|f| match f {
                    FocalFactor::Linear { coeffs, multiplicity } => FocalFactor::Linear {
                        coeffs: coeffs.iter().map(S::from_rational).collect(),
                        multiplicity,
                    },
                    FocalFactor::Nonlinear { polynomial } => FocalFactor::Nonlinear {
                        polynomial: MultiPoly::from_terms(
                            l + 1,
                            polynomial.terms().map(|(m, c)| (m.clone(), S::from_rational(c))),
                        ),
                    },
                })
                .collect()
        }
        ScalarKind::Float => float_factors(&cs, tol)?
            .into_iter()
            .map(|f| match f {
                FocalFactor::Linear { coeffs, multiplicity } => FocalFactor::Linear {
                    coeffs: coeffs.iter().map(|&x| S::from_rational(&Rational::from_float(x).expect("finite"))).collect(),
                    multiplicity,
                },
                FocalFactor::Nonlinear { polynomial } => FocalFactor::Nonlinear {
                    polynomial: MultiPoly::from_terms(
                        l + 1,
                        polynomial.terms().map(|(m, c)| (m.clone(), S::from_rational(&Rational::from_float(*c).expect("finite")))),
                    ),
                },
            })
            .collect(),
    };
    Ok(Factorization::new(factors, &report.variables))
}

fn to_rational_matrix<S: Scalar>(m: &Matrix<S>) -> Option<Matrix<Rational>> {
    let rows = m.to_rows().iter().map(|row| row.iter().map(Scalar::to_rational).collect::<Option<Vec<_>>>()).collect::<Option<Vec<_>>>()?;
    Some(Matrix::from_rows(rows))
}

fn to_dmatrix<S: Scalar>(m: &Matrix<S>) -> DMatrix<f64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m.get(i, j).to_f64())
}

/// Weights of the generic combination `sum t_a C_a` on attempt `k`.
fn generic_weights(l: usize, attempt: usize) -> Vec<i64> {
    const PRIMES: [i64; 12] = [1, 3, 7, 13, 29, 53, 97, 193, 389, 769, 1543, 3079];
    (0..l).map(|a| PRIMES[(a * (attempt + 1) + attempt) % PRIMES.len()] + attempt as i64 * a as i64).collect()
}

const EXACT_ATTEMPTS: usize = 6;

fn exact_factors(cs: &[Matrix<Rational>], poly: &MultiPoly<Rational>) -> Result<Vec<FocalFactor<Rational>>, FocalError> {
    let l = cs.len();
    let r = cs[0].rows();
    let mut best: Option<Vec<(Vec<Rational>, usize)>> = None;
    for attempt in 0..EXACT_ATTEMPTS {
        let weights = generic_weights(l, attempt);
        let m = cs.iter().zip(&weights).fold(Matrix::zeros(r, r), |acc, (c, &w)| acc.add(&c.scale(&Rational::from_i64(w))));
        let Some((found, complete)) = joint_rational_eigenvalues(cs, &m)? else { continue };
        let total: usize = found.iter().map(|(_, k)| k).sum();
        if best.as_ref().is_none_or(|b| b.iter().map(|(_, k)| k).sum::<usize>() < total) {
            best = Some(found);
        }
        if complete {
            break;
        }
    }
    let linear = best.unwrap_or_default();
    let mut factors: Vec<FocalFactor<Rational>> = linear
        .into_iter()
        .map(|(lambda, k)| FocalFactor::Linear {
            coeffs: std::iter::once(Rational::one()).chain(lambda).collect(),
            multiplicity: k,
        })
        .collect();
    let product = factors.iter().fold(MultiPoly::one(l + 1), |acc, f| acc.mul(&f.expand()));
    let residual = poly.div_exact(&product, 0.0).ok_or_else(|| FocalError::NotFactorable("linear factors do not divide".into()))?;
    if residual.degree().unwrap_or(0) > 0 {
        factors.push(FocalFactor::Nonlinear { polynomial: residual });
    }
    Ok(factors)
}

/// Rational eigenvalues `mu` of `m` with their generalized eigenspaces, and
/// on each the common eigenvalue of every `C_a`. Returns `None` when some
/// `C_a` has more than one eigenvalue on a generalized eigenspace of `m`,
/// which means the weights were not generic. The flag reports whether the
/// rational eigenvalues account for the full dimension.
#[allow(clippy::type_complexity)]
fn joint_rational_eigenvalues(
    cs: &[Matrix<Rational>],
    m: &Matrix<Rational>,
) -> Result<Option<(Vec<(Vec<Rational>, usize)>, bool)>, FocalError> {
    let r = m.rows();
    let mut out = Vec::new();
    let mut covered = 0;
    for mu in rational_eigenvalue_candidates(m)? {
        let shifted = m.sub(&Matrix::identity(r).scale(&mu));
        let power = (1..r).fold(shifted.clone(), |acc, _| acc.mul(&shifted));
        let basis = power.null_space(0.0);
        let k = basis.len();
        if k == 0 {
            continue;
        }
        let v = Matrix::from_fn(r, k, |i, j| basis[j][i].clone());
        let vt = v.transpose();
        let gram_inv = vt.mul(&v).try_inverse(Num::is_zero).expect("basis is independent");
        let mut lambda = Vec::with_capacity(cs.len());
        for c in cs {
            let x = gram_inv.mul(&vt).mul(&c.mul(&v));
            let value = x.trace() / Rational::from_i64(k as i64);
            let nil = x.sub(&Matrix::identity(k).scale(&value));
            let nil_power = (1..k).fold(nil.clone(), |acc, _| acc.mul(&nil));
            if !nil_power.is_zero(0.0) {
                return Ok(None);
            }
            lambda.push(value);
        }
        covered += k;
        out.push((lambda, k));
    }
    Ok(Some((out, covered == r)))
}

/// Candidate rational eigenvalues: real parts of the floating point
/// eigenvalues, alone and averaged over clusters of several radii so that
/// multiple roots split by roundoff are recovered, then replaced by their
/// continued-fraction convergents. Candidates are only suggestions; callers
/// confirm them exactly.
fn rational_eigenvalue_candidates(m: &Matrix<Rational>) -> Result<Vec<Rational>, FocalError> {
    let fm = to_dmatrix(m);
    let scale = 1.0 + fm.amax();
    let schur = nalgebra::linalg::Schur::try_new(fm, 1e-15, 100_000).ok_or(FocalError::EigenFailure)?;
    let mut values: Vec<f64> = schur.complex_eigenvalues().iter().map(|z| z.re).collect();
    values.sort_by(f64::total_cmp);
    let mut centers: Vec<f64> = values.clone();
    for radius in [1e-6, 1e-4, 1e-2] {
        let mut clusters: Vec<Vec<f64>> = Vec::new();
        for &v in &values {
            match clusters.last_mut() {
                Some(c) if (v - c[c.len() - 1]).abs() <= radius * scale => c.push(v),
                _ => clusters.push(vec![v]),
            }
        }
        centers.extend(clusters.iter().filter(|c| c.len() > 1).map(|c| c.iter().sum::<f64>() / c.len() as f64));
    }
    let mut out: Vec<Rational> = Vec::new();
    for center in centers {
        for candidate in convergents(center, 1_000_000) {
            if (candidate.to_f64() - center).abs() <= 1e-2 * scale && !out.contains(&candidate) {
                out.push(candidate);
            }
        }
    }
    Ok(out)
}

/// Continued-fraction convergents of `x` with denominators up to `max_den`.
fn convergents(x: f64, max_den: i64) -> Vec<Rational> {
    use num_bigint::BigInt;
    let mut out = Vec::new();
    if !x.is_finite() {
        return out;
    }
    let (mut h_prev, mut h) = (BigInt::from(1), BigInt::from(x.floor() as i64));
    let (mut k_prev, mut k) = (BigInt::from(0), BigInt::from(1));
    let mut frac = x - x.floor();
    out.push(Rational::new(h.clone(), k.clone()));
    for _ in 0..40 {
        if frac.abs() < 1e-12 {
            break;
        }
        let inv = 1.0 / frac;
        let a = BigInt::from(inv.floor() as i64);
        frac = inv - inv.floor();
        let h_next = &a * &h + &h_prev;
        let k_next = &a * &k + &k_prev;
        if k_next > BigInt::from(max_den) {
            break;
        }
        (h_prev, h) = (h, h_next);
        (k_prev, k) = (k, k_next);
        out.push(Rational::new(h.clone(), k.clone()));
    }
    out
}

const FLOAT_ATTEMPTS: usize = 4;

fn float_factors<S: Scalar>(cs: &[Matrix<S>], tol: f64) -> Result<Vec<FocalFactor<f64>>, FocalError> {
    let l = cs.len();
    let r = cs[0].rows();
    let dm: Vec<DMatrix<f64>> = cs.iter().map(to_dmatrix).collect();
    let scale = 1.0 + dm.iter().map(|m| m.amax()).fold(0.0, f64::max);
    let mut last_err = FocalError::EigenFailure;
    for attempt in 0..FLOAT_ATTEMPTS {
        // irrational weights keep distinct joint eigenvalues apart
        let weights: Vec<f64> = (0..l).map(|a| ((a + 1) as f64 * (1.0 + attempt as f64) * 0.618_033_988_749_895).fract() + 0.5).collect();
        let m = dm.iter().zip(&weights).fold(DMatrix::zeros(r, r), |acc, (c, w)| acc + c * *w);
        let Some(schur) = nalgebra::linalg::Schur::try_new(m, 1e-15, 100_000) else { continue };
        let (q, t) = schur.unpack();
        let mut blocks: Vec<(usize, usize)> = Vec::new();
        let mut i = 0;
        while i < r {
            if i + 1 < r && t[(i + 1, i)].abs() > 1e-12 * scale {
                blocks.push((i, 2));
                i += 2;
            } else {
                blocks.push((i, 1));
                i += 1;
            }
        }
        let reduced: Vec<DMatrix<f64>> = dm.iter().map(|c| q.transpose() * c * &q).collect();
        let block_of = |row: usize| blocks.iter().position(|&(s, len)| row >= s && row < s + len).unwrap();
        let triangular = reduced.iter().all(|c| {
            (0..r).all(|row| (0..r).all(|col| block_of(row) <= block_of(col) || c[(row, col)].abs() <= tol.max(1e-9) * scale))
        });
        if !triangular {
            last_err = FocalError::NotFactorable("family is not block triangular in a common basis".into());
            continue;
        }
        let mut factors: Vec<FocalFactor<f64>> = Vec::new();
        for &(s, len) in &blocks {
            if len == 1 {
                let coeffs: Vec<f64> = std::iter::once(1.0).chain(reduced.iter().map(|c| c[(s, s)])).collect();
                match factors.iter_mut().find(|f| matches!(f, FocalFactor::Linear { coeffs: c, .. } if c.iter().zip(&coeffs).all(|(x, y)| (x - y).abs() <= tol.max(1e-12) * scale))) {
                    Some(FocalFactor::Linear { multiplicity, .. }) => *multiplicity += 1,
                    _ => factors.push(FocalFactor::Linear { coeffs, multiplicity: 1 }),
                }
            } else {
                let mats: Vec<Matrix<f64>> = std::iter::once(Matrix::identity(2))
                    .chain(reduced.iter().map(|c| Matrix::from_fn(2, 2, |i, j| c[(s + i, s + j)])))
                    .collect();
                factors.push(FocalFactor::Nonlinear { polynomial: pencil_determinant(&mats) });
            }
        }
        return Ok(factors);
    }
    Err(last_err)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SliceIdentity<S> {
    pub holds: bool,
    /// Lowered focus-hypersurface polynomial with `y0 = 0`, in `y1 .. yl`.
    pub restricted: MultiPoly<S>,
    /// Focus-hypercone polynomial with `xi_a = g_{ab} y^b`, in `y1 .. yl`.
    pub substituted: MultiPoly<S>,
    /// `(-1)^r`.
    pub sign: i64,
}

/// Compare the focus hypersurface at infinity with the focus hypercone
/// under the metric identification of normal vectors and hyperplanes.
pub fn infinity_slice_identity<S: Scalar>(data: &FundamentalTensors<S>, tol: f64) -> Result<SliceIdentity<S>, FocalError> {
    if data.ambient != Ambient::Euclidean {
        return Err(FocalError::WrongAmbient(data.ambient.name()));
    }
    let surface = focus_hypersurface_poly(data, tol)?;
    let cone = focus_hypercone_poly(data, tol)?;
    let (_, gn) = data.euclidean_metrics().expect("validated euclidean data has metrics");
    let l = data.ranges.l;
    let restricted = surface.lowered.expect("euclidean data has a lowered form").restrict_zero(0);
    let subs: Vec<MultiPoly<S>> = (0..l).map(|a| MultiPoly::linear(&gn.row(a))).collect();
    let substituted = cone.raw.compose(&subs);
    let sign = if data.ranges.r.is_multiple_of(2) { 1 } else { -1 };
    let signed = if sign == 1 { substituted.clone() } else { substituted.neg() };
    let holds = restricted.near(&signed, tol * (1.0 + restricted.max_magnitude()));
    Ok(SliceIdentity { holds, restricted, substituted, sign })
}
