//! Curvature and focal computations through the public API on small
//! hand-checked instances.

use focalframes::curvature::{
    classify_normalization, curvature_tensors, lowered_tangential_curvature, ricci_pair, tangential_curvature,
    CurvatureError, NormalizationClass,
};
use focalframes::focal::{
    dual_nondegenerate, factor_linear, focus_hypercone_poly, focus_hypersurface_poly, infinity_slice_identity,
    jacobian_at, FocalError, FocalFactor,
};
use focalframes::poly::{MultiPoly, PolyDecodeError};
use focalframes::scalar::{int, ratio, Rational};
use focalframes::variety::{Ambient, FundamentalTensors, IndexRanges};

fn rows(m: &[&[i64]]) -> Vec<Vec<Rational>> {
    m.iter().map(|row| row.iter().map(|&v| int(v)).collect()).collect()
}

fn affine_hypersurface(b: &[&[i64]], c: &[&[i64]]) -> FundamentalTensors<Rational> {
    let r = b.len();
    FundamentalTensors::from_arrays(IndexRanges::new(r + 1, r).unwrap(), Ambient::Affine, vec![rows(b)], vec![rows(c)], None, None, None)
        .unwrap()
}

fn diag23() -> FundamentalTensors<Rational> {
    affine_hypersurface(&[&[1, 0], &[0, 1]], &[&[2, 0], &[0, 3]])
}

#[test]
fn diagonal_hypersurface_focal_data() {
    let data = diag23();
    let report = focus_hypersurface_poly(&data, 0.0).unwrap();
    // (y0 + 2 y1)(y0 + 3 y1)
    let expected = MultiPoly::from_terms(2, [(vec![2, 0], int(1)), (vec![1, 1], int(5)), (vec![0, 2], int(6))]);
    assert_eq!(report.raw, expected);
    assert_eq!(report.degree, Some(2));
    let f = factor_linear(&data, 0.0).unwrap();
    assert_eq!(f.text, "(y0+2y1)(y0+3y1)");
    assert!(matches!(&f.factors[0], FocalFactor::Linear { multiplicity: 1, .. }));
    assert!(jacobian_at(&data, &[int(2), int(-1)], 0.0).unwrap().singular);
    assert_eq!(jacobian_at(&data, &[int(1), int(1)], 0.0).unwrap().value, int(12));
    assert!(dual_nondegenerate(&data, 0.0).unwrap());
    assert_eq!(focus_hypercone_poly(&data, 0.0).unwrap().raw, MultiPoly::from_terms(1, [(vec![2], int(1))]));
}

#[test]
fn diagonal_hypersurface_curvature() {
    let data = diag23();
    let t = tangential_curvature(&data, 0.0).unwrap();
    // b = I, C = diag(2, 3): R^p_{qst} = δ_qs C_pt - δ_qt C_ps
    assert_eq!(*t.get(&[0, 1, 1, 0]), int(2));
    assert_eq!(*t.get(&[1, 0, 0, 1]), int(3));
    assert_eq!(*t.get(&[0, 1, 0, 1]), int(-2));
    assert_eq!(*t.get(&[0, 0, 0, 1]), int(0));
    // R^a_{bst} = C_ts - C_st vanishes for symmetric C
    let all = curvature_tensors(&data, 0.0).unwrap();
    assert!(all.normal.data().iter().all(|v| *v == int(0)));
    let (rt, rn) = ricci_pair(&data, 0.0).unwrap();
    assert_eq!(rt, all.ricci_tangential);
    assert!(rt.data().iter().chain(rn.data()).all(|v| *v == int(0)));
    assert!(matches!(lowered_tangential_curvature(&data, 0.0), Err(CurvatureError::NotEuclidean)));
}

#[test]
fn classification_of_affine_examples() {
    let trivial = affine_hypersurface(&[&[1, 2], &[2, 0]], &[&[0, 0], &[0, 0]]);
    assert_eq!(classify_normalization(&trivial, 0.0), NormalizationClass::Trivial);
    let scalar = affine_hypersurface(&[&[1, 2], &[2, 0]], &[&[-3, 0], &[0, -3]]);
    assert_eq!(classify_normalization(&scalar, 0.0), NormalizationClass::CentralAffine { witness: vec![int(-3)] });
    assert_eq!(classify_normalization(&diag23(), 0.0), NormalizationClass::General);
}

#[test]
fn invalid_inputs_are_rejected() {
    let data = diag23();
    assert!(matches!(jacobian_at(&data, &[int(1)], 0.0), Err(FocalError::DimensionMismatch { got: 1, expected: 2 })));
    assert!(matches!(jacobian_at(&data, &[int(0), int(0)], 0.0), Err(FocalError::ZeroPoint)));
    assert!(matches!(infinity_slice_identity(&data, 0.0), Err(FocalError::WrongAmbient(_))));
    let asymmetric = affine_hypersurface(&[&[1, 2], &[3, 1]], &[&[0, 0], &[0, 0]]);
    assert!(matches!(tangential_curvature(&asymmetric, 0.0), Err(CurvatureError::NotValidated(_))));
    assert!(matches!(focus_hypersurface_poly(&asymmetric, 0.0), Err(FocalError::NotValidated(_))));
}

#[test]
fn euclidean_sphere_slice() {
    // unit sphere in 3-space: b = I, g = I, c = -I
    let data = FundamentalTensors::from_arrays(
        IndexRanges::new(3, 2).unwrap(),
        Ambient::Euclidean,
        vec![rows(&[&[1, 0], &[0, 1]])],
        vec![rows(&[&[-1, 0], &[0, -1]])],
        None,
        Some(rows(&[&[1]])),
        Some(rows(&[&[1, 0], &[0, 1]])),
    )
    .unwrap();
    let report = focus_hypersurface_poly(&data, 0.0).unwrap();
    assert_eq!(factor_linear(&data, 0.0).unwrap().text, "(y0-y1)^2");
    assert_eq!(report.lowered.unwrap(), report.raw);
    let s = infinity_slice_identity(&data, 0.0).unwrap();
    assert!(s.holds);
    assert_eq!(s.sign, 1);
    assert_eq!(s.restricted, MultiPoly::from_terms(1, [(vec![2], int(1))]));
}

#[test]
fn polynomial_records_decode_strictly() {
    let p = MultiPoly::from_terms(2, [(vec![1, 0], ratio(1, 2)), (vec![0, 1], int(-3))]);
    let json = p.to_json();
    assert_eq!(json, r#"{"nvars":2,"terms":[{"exp":[1,0],"num":"1","den":"2"},{"exp":[0,1],"num":"-3","den":"1"}]}"#);
    assert_eq!(MultiPoly::<Rational>::from_json(&json).unwrap(), p);
    let decode = |s: &str| MultiPoly::<Rational>::from_json(s).unwrap_err();
    assert!(matches!(decode(r#"{"nvars":2,"terms":[{"exp":[0,1],"num":"1","den":"1"},{"exp":[1,0],"num":"1","den":"1"}]}"#), PolyDecodeError::Unordered { index: 1 }));
    assert!(matches!(decode(r#"{"nvars":1,"terms":[{"exp":[1],"num":"2","den":"4"}]}"#), PolyDecodeError::NotReduced { index: 0 }));
    assert!(matches!(decode(r#"{"nvars":1,"terms":[{"exp":[1],"num":"0","den":"1"}]}"#), PolyDecodeError::ZeroCoefficient { index: 0 }));
    assert!(matches!(decode(r#"{"nvars":1,"terms":[{"exp":[1,2],"num":"1","den":"1"}]}"#), PolyDecodeError::ExponentLength { .. }));
    assert!(matches!(decode(r#"{"nvars":1,"terms":[{"exp":[1],"num":"+1","den":"1"}]}"#), PolyDecodeError::BadInteger { .. }));
    assert!(matches!(decode("[1, 2"), PolyDecodeError::Json(_)));
}
