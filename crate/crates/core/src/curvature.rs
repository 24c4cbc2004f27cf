//! Curvature of the induced tangential and normal connections, Ricci-type
//! tensors, flatness and classification predicates, and evaluation of
//! second fundamental forms.
//!
//! Tensor layouts: `R^p_{qst}` is stored `[p][q][s][t]`, `R^a_{bst}` is
//! stored `[a][b][s][t]`, Ricci-type tensors `[s][t]`.

use serde::Serialize;
use thiserror::Error;

use crate::scalar::{Num, Scalar};
use crate::tensor::{AxisClass, SmallTensor, TensorError};
use crate::variety::{
    invert_metric, validate_normalized, Ambient, DegenerateGaussTensors, FundamentalTensors, ValidationError,
    Violation,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CurvatureError {
    #[error("input failed validation: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    NotValidated(Vec<Violation>),
    #[error(transparent)]
    Invalid(#[from] ValidationError),
    #[error("operation requires an affine normalization, got {0:?} data with nonzero l")]
    WrongAmbient(Ambient),
    #[error("operation requires euclidean data")]
    NotEuclidean,
    #[error(transparent)]
    ShapeMismatch(#[from] TensorError),
}

fn ensure_valid<S: Scalar>(data: &FundamentalTensors<S>, tol: f64) -> Result<(), CurvatureError> {
    let report = validate_normalized(data, tol)?;
    if report.passed() { Ok(()) } else { Err(CurvatureError::NotValidated(report.violations)) }
}

fn delta<S: Num>(i: usize, j: usize) -> S {
    if i == j { S::one() } else { S::zero() }
}

/// `R^p_{qst} = l_{qs} δ^p_t + b^a_{qs} c^p_{at} - l_{qt} δ^p_s - b^a_{qt} c^p_{as}`.
pub fn tangential_curvature<S: Scalar>(data: &FundamentalTensors<S>, tol: f64) -> Result<SmallTensor<S>, CurvatureError> {
    ensure_valid(data, tol)?;
    Ok(tangential_curvature_unchecked(data))
}

pub(crate) fn tangential_curvature_unchecked<S: Scalar>(data: &FundamentalTensors<S>) -> SmallTensor<S> {
    let l = data.ranges.l;
    let axes = data.ranges.axes(&[AxisClass::Tangent; 4]);
    SmallTensor::from_fn(axes, |i| {
        let (p, q, s, t) = (i[0], i[1], i[2], i[3]);
        let mut acc = data.l_at(q, s).clone() * delta(p, t) - data.l_at(q, t).clone() * delta(p, s);
        for a in 0..l {
            acc = acc + data.b_at(a, q, s).clone() * data.c_at(a, p, t).clone()
                - data.b_at(a, q, t).clone() * data.c_at(a, p, s).clone();
        }
        acc
    })
}

/// `R_{pqst} = g_{ac} (b^a_{ps} b^c_{qt} - b^a_{pt} b^c_{qs})` for Euclidean data.
pub fn lowered_tangential_curvature<S: Scalar>(
    data: &FundamentalTensors<S>,
    tol: f64,
) -> Result<SmallTensor<S>, CurvatureError> {
    ensure_valid(data, tol)?;
    let gn = match (data.ambient, data.g_normal_matrix()) {
        (Ambient::Euclidean, Some(g)) => g,
        _ => return Err(CurvatureError::NotEuclidean),
    };
    let l = data.ranges.l;
    let axes = data.ranges.axes(&[AxisClass::Tangent; 4]);
    Ok(SmallTensor::from_fn(axes, |i| {
        let (p, q, s, t) = (i[0], i[1], i[2], i[3]);
        let mut acc = S::zero();
        for a in 0..l {
            for c in 0..l {
                let term = data.b_at(a, p, s).clone() * data.b_at(c, q, t).clone()
                    - data.b_at(a, p, t).clone() * data.b_at(c, q, s).clone();
                acc = acc + gn.get(a, c).clone() * term;
            }
        }
        acc
    }))
}

/// Sectional curvature `R_{stst} / (g_ss g_tt - g_st^2)` of the coordinate
/// plane spanned by tangent directions `s != t`, for Euclidean data.
pub fn sectional_curvature<S: Scalar>(
    data: &FundamentalTensors<S>,
    s: usize,
    t: usize,
    tol: f64,
) -> Result<S, CurvatureError> {
    let lowered = lowered_tangential_curvature(data, tol)?;
    let g = data.g_tangent_matrix().ok_or(CurvatureError::NotEuclidean)?;
    let area = g.get(s, s).clone() * g.get(t, t).clone() - g.get(s, t).clone() * g.get(t, s).clone();
    Ok(lowered.get(&[s, t, s, t]).clone() / area)
}

/// `R^a_{bst} = c^p_{bs} b^a_{pt} - c^p_{bt} b^a_{ps}`.
pub fn normal_curvature<S: Scalar>(data: &FundamentalTensors<S>, tol: f64) -> Result<SmallTensor<S>, CurvatureError> {
    ensure_valid(data, tol)?;
    Ok(normal_curvature_unchecked(data))
}

pub(crate) fn normal_curvature_unchecked<S: Scalar>(data: &FundamentalTensors<S>) -> SmallTensor<S> {
    let r = data.ranges.r;
    let axes = data.ranges.axes(&[AxisClass::Normal, AxisClass::Normal, AxisClass::Tangent, AxisClass::Tangent]);
    SmallTensor::from_fn(axes, |i| {
        let (a, b, s, t) = (i[0], i[1], i[2], i[3]);
        (0..r).fold(S::zero(), |acc, p| {
            acc + data.c_at(b, p, s).clone() * data.b_at(a, p, t).clone()
                - data.c_at(b, p, t).clone() * data.b_at(a, p, s).clone()
        })
    })
}

/// Contract the first two axes of a curvature tensor (`p = q` or `a = b`).
fn trace_first_pair<S: Scalar>(curv: &SmallTensor<S>) -> SmallTensor<S> {
    let ext = curv.extents();
    let axes = curv.axes()[2..].to_vec();
    SmallTensor::from_fn(axes, |i| (0..ext[0]).fold(S::zero(), |acc, p| acc + curv.get(&[p, p, i[0], i[1]]).clone()))
}

/// Both curvature tensors and their Ricci-type contractions.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureTensors<S> {
    pub tangential: SmallTensor<S>,
    pub normal: SmallTensor<S>,
    pub ricci_tangential: SmallTensor<S>,
    pub ricci_normal: SmallTensor<S>,
}

pub fn curvature_tensors<S: Scalar>(data: &FundamentalTensors<S>, tol: f64) -> Result<CurvatureTensors<S>, CurvatureError> {
    ensure_valid(data, tol)?;
    let tangential = tangential_curvature_unchecked(data);
    let normal = normal_curvature_unchecked(data);
    Ok(CurvatureTensors {
        ricci_tangential: trace_first_pair(&tangential),
        ricci_normal: trace_first_pair(&normal),
        tangential,
        normal,
    })
}

/// Ricci-type tensors `(R_{st}, R̃_{st})` of an affinely normalized variety.
/// Projective data is accepted only when `l` vanishes.
pub fn ricci_pair<S: Scalar>(
    data: &FundamentalTensors<S>,
    tol: f64,
) -> Result<(SmallTensor<S>, SmallTensor<S>), CurvatureError> {
    ensure_valid(data, tol)?;
    if data.ambient == Ambient::Projective && !data.l.is_zero(tol) {
        return Err(CurvatureError::WrongAmbient(data.ambient));
    }
    Ok((
        trace_first_pair(&tangential_curvature_unchecked(data)),
        trace_first_pair(&normal_curvature_unchecked(data)),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FlatnessReport {
    pub tangential_flat: bool,
    pub normal_flat: bool,
    /// Every `B^a C_b` is symmetric.
    pub products_symmetric: bool,
}

/// Flatness flags. Flatness over floats means max-norm below `tol`.
pub fn flatness_report<S: Scalar>(data: &FundamentalTensors<S>, tol: f64) -> Result<FlatnessReport, CurvatureError> {
    ensure_valid(data, tol)?;
    let l = data.ranges.l;
    let mut products_symmetric = true;
    for a in 0..l {
        let b = data.b_matrix(a);
        for c in 0..l {
            let h = b.mul(&data.c_matrix(c));
            if !h.sub(&h.transpose()).is_zero(tol) {
                products_symmetric = false;
            }
        }
    }
    let report = FlatnessReport {
        tangential_flat: tangential_curvature_unchecked(data).is_zero(tol),
        normal_flat: normal_curvature_unchecked(data).is_zero(tol),
        products_symmetric,
    };
    if S::KIND == crate::scalar::ScalarKind::Exact {
        debug_assert_eq!(report.normal_flat, report.products_symmetric);
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NormalizationClass<S> {
    /// `l = 0` and `c = 0`: all first normals pass through a fixed plane.
    Central,
    /// Affine ambient with `c = 0`: all first normals are parallel.
    Trivial,
    /// Affine ambient with `c^p_{aq} = δ^p_q c_a`.
    CentralAffine { witness: Vec<S> },
    General,
}

impl<S> NormalizationClass<S> {
    pub fn name(&self) -> &'static str {
        match self {
            NormalizationClass::Central => "central",
            NormalizationClass::Trivial => "trivial",
            NormalizationClass::CentralAffine { .. } => "central-affine",
            NormalizationClass::General => "general",
        }
    }
}

pub fn classify_normalization<S: Scalar>(data: &FundamentalTensors<S>, tol: f64) -> NormalizationClass<S> {
    let c_zero = data.c.is_zero(tol);
    if !data.ambient.is_affine() {
        return if c_zero && data.l.is_zero(tol) { NormalizationClass::Central } else { NormalizationClass::General };
    }
    if c_zero {
        return NormalizationClass::Trivial;
    }
    let r = data.ranges.r;
    let mut witness = Vec::with_capacity(data.ranges.l);
    for a in 0..data.ranges.l {
        let ca = data.c_at(a, 0, 0).clone();
        for p in 0..r {
            for q in 0..r {
                let expected = if p == q { ca.clone() } else { S::zero() };
                if !data.c_at(a, p, q).near(&expected, tol) {
                    return NormalizationClass::General;
                }
            }
        }
        witness.push(ca);
    }
    NormalizationClass::CentralAffine { witness }
}

/// Data carrying second fundamental forms `b^alpha_{pq}` and a `c` quasitensor.
pub trait SecondFormSource<S> {
    fn tangent_dim(&self) -> usize;
    fn fiber_dim(&self) -> usize;
    fn form_count(&self) -> usize;
    fn form(&self, alpha: usize, p: usize, q: usize) -> &S;
    /// `c^p_{aq}`.
    fn quasitensor(&self, a: usize, p: usize, q: usize) -> &S;
}

impl<S: Scalar> SecondFormSource<S> for FundamentalTensors<S> {
    fn tangent_dim(&self) -> usize {
        self.ranges.r
    }
    fn fiber_dim(&self) -> usize {
        self.ranges.l
    }
    fn form_count(&self) -> usize {
        self.ranges.l
    }
    fn form(&self, alpha: usize, p: usize, q: usize) -> &S {
        self.b_at(alpha, p, q)
    }
    fn quasitensor(&self, a: usize, p: usize, q: usize) -> &S {
        self.c_at(a, p, q)
    }
}

impl<S: Scalar> SecondFormSource<S> for DegenerateGaussTensors<S> {
    fn tangent_dim(&self) -> usize {
        self.ranges.r
    }
    fn fiber_dim(&self) -> usize {
        self.ranges.l
    }
    fn form_count(&self) -> usize {
        self.ranges.hyperplanes()
    }
    fn form(&self, alpha: usize, p: usize, q: usize) -> &S {
        self.b.get(&[alpha, p, q])
    }
    fn quasitensor(&self, a: usize, p: usize, q: usize) -> &S {
        self.c.get(&[a, p, q])
    }
}

/// `ξ_α b^α_{ps} (δ^s_q x^0 + c^s_{aq} x^a) w^p w^q`; without a generator
/// point this is the base-point form `ξ_α b^α_{pq} w^p w^q`.
pub fn second_fundamental_form<S: Scalar, D: SecondFormSource<S>>(
    data: &D,
    xi: &[S],
    w: &[S],
    generator_point: Option<(&S, &[S])>,
) -> Result<S, CurvatureError> {
    let r = data.tangent_dim();
    if xi.len() != data.form_count() || w.len() != r {
        return Err(TensorError::ShapeMismatch(format!(
            "expected {} hyperplane coefficients and {} direction components, got {} and {}",
            data.form_count(),
            r,
            xi.len(),
            w.len()
        ))
        .into());
    }
    if let Some((_, xa)) = generator_point {
        if xa.len() != data.fiber_dim() {
            return Err(TensorError::ShapeMismatch(format!(
                "generator point needs {} fiber coordinates, got {}",
                data.fiber_dim(),
                xa.len()
            ))
            .into());
        }
    }
    // J^s_q = δ^s_q x^0 + c^s_{aq} x^a
    let jac = |s: usize, q: usize| -> S {
        match generator_point {
            None => delta(s, q),
            Some((x0, xa)) => xa.iter().enumerate().fold(x0.clone() * delta(s, q), |acc, (a, x)| {
                acc + data.quasitensor(a, s, q).clone() * x.clone()
            }),
        }
    };
    let mut total = S::zero();
    for (alpha, x) in xi.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for p in 0..r {
            for q in 0..r {
                let coeff = (0..r).fold(S::zero(), |acc, s| acc + data.form(alpha, p, s).clone() * jac(s, q));
                total = total + x.clone() * coeff * w[p].clone() * w[q].clone();
            }
        }
    }
    Ok(total)
}

/// Inverse of the tangent metric, when present and invertible.
pub fn inverse_tangent_metric<S: Scalar>(data: &FundamentalTensors<S>, tol: f64) -> Option<crate::tensor::Matrix<S>> {
    data.g_tangent_matrix().and_then(|g| invert_metric(&g, tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{central_instance, random_instance};
    use crate::scalar::{int, Rational};
    use crate::variety::IndexRanges;

    fn ints3(v: &[&[&[i64]]]) -> Vec<Vec<Vec<Rational>>> {
        v.iter().map(|m| m.iter().map(|r| r.iter().map(|&x| int(x)).collect()).collect()).collect()
    }

    fn ints2(v: &[&[i64]]) -> Vec<Vec<Rational>> {
        v.iter().map(|r| r.iter().map(|&x| int(x)).collect()).collect()
    }

    /// r = 2, l = 1, b^1 = [[0,1],[1,0]], c^p_{1q} = [[1,0],[0,2]].
    fn example(ambient: Ambient, l: Option<&[&[i64]]>) -> FundamentalTensors<Rational> {
        FundamentalTensors::from_arrays(
            IndexRanges::new(3, 2).unwrap(),
            ambient,
            ints3(&[&[&[0, 1], &[1, 0]]]),
            ints3(&[&[&[1, 0], &[0, 2]]]),
            l.map(ints2),
            None,
            None,
        )
        .unwrap()
    }

    #[test]
    fn central_data_is_flat() {
        let data = central_instance(IndexRanges::new(5, 3).unwrap(), 11);
        let curv = curvature_tensors(&data, 0.0).unwrap();
        assert!(curv.tangential.is_zero(0.0));
        assert!(curv.normal.is_zero(0.0));
    }

    #[test]
    fn projective_example_component() {
        let data = example(Ambient::Projective, Some(&[&[1, 0], &[0, 0]]));
        let r = tangential_curvature(&data, 0.0).unwrap();
        // R^2_{112} in 1-based indices.
        assert_eq!(r.get(&[1, 0, 0, 1]), &int(1));
    }

    #[test]
    fn normal_example_component() {
        let data = example(Ambient::Projective, None);
        let r = normal_curvature(&data, 0.0).unwrap();
        assert_eq!(r.get(&[0, 0, 0, 1]), &int(-1));
    }

    #[test]
    fn ricci_example_values() {
        let data = example(Ambient::Affine, None);
        let (ric, ric_n) = ricci_pair(&data, 0.0).unwrap();
        assert_eq!(ric.get(&[0, 1]), &int(1));
        assert_eq!(ric_n.get(&[0, 1]), &int(-1));
    }

    #[test]
    fn ricci_rejects_projective_with_nonzero_l() {
        let data = example(Ambient::Projective, Some(&[&[1, 0], &[0, 0]]));
        assert_eq!(ricci_pair(&data, 0.0).unwrap_err(), CurvatureError::WrongAmbient(Ambient::Projective));
        // projective with l = 0 is accepted
        assert!(ricci_pair(&example(Ambient::Projective, None), 0.0).is_ok());
    }

    #[test]
    fn ricci_vanishes_for_zero_c() {
        let mut data = example(Ambient::Affine, None);
        data.c = SmallTensor::zeros(data.c.axes().to_vec());
        let (ric, ric_n) = ricci_pair(&data, 0.0).unwrap();
        assert!(ric.is_zero(0.0) && ric_n.is_zero(0.0));
    }

    #[test]
    fn sphere_sectional_curvature() {
        // b = g / 2 with an arbitrary positive definite g
        let g = ints2(&[&[3, 1], &[1, 2]]);
        let b: Vec<Vec<Vec<Rational>>> =
            vec![g.iter().map(|row| row.iter().map(|x| x.clone() / int(2)).collect()).collect()];
        let gt = crate::tensor::Matrix::from_rows(g.clone());
        let gn = crate::tensor::Matrix::identity(1);
        let bt = SmallTensor::from_fn(
            IndexRanges::new(3, 2).unwrap().axes(&[AxisClass::Normal, AxisClass::Tangent, AxisClass::Tangent]),
            |i| b[i[0]][i[1]][i[2]].clone(),
        );
        let c = crate::variety::metric_c_tensor(&bt, &gn, &gt.try_inverse(|_| false).unwrap(), 2, 1);
        let mut data = FundamentalTensors::from_arrays(
            IndexRanges::new(3, 2).unwrap(),
            Ambient::Euclidean,
            b,
            ints3(&[&[&[0, 0], &[0, 0]]]),
            None,
            Some(gn.to_rows()),
            Some(g),
        )
        .unwrap();
        data.c = c;
        assert_eq!(sectional_curvature(&data, 0, 1, 0.0).unwrap(), Rational::new(1.into(), 4.into()));
    }

    #[test]
    fn flatness_of_example() {
        let report = flatness_report(&example(Ambient::Projective, None), 0.0).unwrap();
        assert!(!report.normal_flat);
        assert!(!report.products_symmetric);
        let central = flatness_report(&central_instance(IndexRanges::new(4, 2).unwrap(), 3), 0.0).unwrap();
        assert!(central.tangential_flat && central.normal_flat && central.products_symmetric);
    }

    #[test]
    fn euclidean_hypersurface_is_normally_flat() {
        for seed in 0..50 {
            let data = random_instance(IndexRanges::new(4, 3).unwrap(), Ambient::Euclidean, seed);
            assert!(normal_curvature(&data, 0.0).unwrap().is_zero(0.0));
            assert!(flatness_report(&data, 0.0).unwrap().normal_flat);
        }
    }

    #[test]
    fn classification_cases() {
        let central = central_instance(IndexRanges::new(3, 2).unwrap(), 1);
        assert_eq!(classify_normalization(&central, 0.0), NormalizationClass::Central);

        let mut scaled = example(Ambient::Affine, None);
        scaled.c = SmallTensor::from_fn(scaled.c.axes().to_vec(), |i| if i[1] == i[2] { int(3) } else { int(0) });
        assert_eq!(classify_normalization(&scaled, 0.0), NormalizationClass::CentralAffine { witness: vec![int(3)] });

        assert_eq!(classify_normalization(&example(Ambient::Affine, None), 0.0), NormalizationClass::General);

        let mut trivial = example(Ambient::Affine, None);
        trivial.c = SmallTensor::zeros(trivial.c.axes().to_vec());
        assert_eq!(classify_normalization(&trivial, 0.0), NormalizationClass::Trivial);
    }

    #[test]
    fn invalid_data_is_rejected() {
        let data = example(Ambient::Affine, Some(&[&[0, 0], &[0, 1]]));
        assert!(matches!(tangential_curvature(&data, 0.0), Err(CurvatureError::NotValidated(_))));
        assert!(matches!(normal_curvature(&data, 0.0), Err(CurvatureError::NotValidated(_))));
    }

    #[test]
    fn second_form_evaluation() {
        let mut data = example(Ambient::Affine, None);
        data.b = SmallTensor::from_fn(data.b.axes().to_vec(), |i| if i[1] == i[2] { int(1) } else { int(0) });
        let value = second_fundamental_form(&data, &[int(1)], &[int(1), int(1)], None).unwrap();
        assert_eq!(value, int(2));
        let zero = second_fundamental_form(&data, &[int(1)], &[int(0), int(0)], None).unwrap();
        assert_eq!(zero, int(0));
        assert!(second_fundamental_form(&data, &[int(1), int(2)], &[int(1), int(1)], None).is_err());
    }

    #[test]
    fn generator_point_at_origin_reduces_to_base_form() {
        for seed in 0..20 {
            let data = random_instance(IndexRanges::new(5, 3).unwrap(), Ambient::Projective, seed);
            let xi = vec![int(2), int(-1)];
            let w = vec![int(1), int(3), int(-2)];
            let base = second_fundamental_form(&data, &xi, &w, None).unwrap();
            let gen = second_fundamental_form(&data, &xi, &w, Some((&int(1), &[int(0), int(0)]))).unwrap();
            assert_eq!(base, gen);
        }
    }
}
