//! Invariants over generated instances, each checked against an oracle that
//! does not share code with the implementation.

use focalframes::curvature::{
    classify_normalization, flatness_report, lowered_tangential_curvature, normal_curvature, ricci_pair,
    tangential_curvature, NormalizationClass,
};
use focalframes::focal::{factor_linear, focus_hypercone_poly, focus_hypersurface_poly, infinity_slice_identity};
use focalframes::immersion::{evaluate_jet1, ImmersionSpec};
use focalframes::poly::MultiPoly;
use focalframes::random::{central_instance, commuting_degenerate_gauss, flat_normal_instance, random_instance};
use focalframes::scalar::{format_rational, int, parse_rational, ratio, Num, Rational};
use focalframes::tensor::{contract, Axis, AxisClass, Matrix, SmallTensor};
use focalframes::variety::{validate_normalized, Ambient, FundamentalTensors, IndexRanges};
use proptest::prelude::*;

const SHAPES: [(usize, usize); 6] = [(3, 2), (4, 2), (4, 3), (5, 2), (5, 3), (6, 3)];
const AMBIENTS: [Ambient; 3] = [Ambient::Projective, Ambient::Affine, Ambient::Euclidean];

fn instance(seed: u64, ambient: Ambient) -> FundamentalTensors<Rational> {
    let (n, r) = SHAPES[(seed % SHAPES.len() as u64) as usize];
    random_instance(IndexRanges::new(n, r).unwrap(), ambient, seed)
}

fn cube(values: &[i64]) -> SmallTensor<Rational> {
    let axes = vec![Axis::new(AxisClass::Tangent, 3); 3];
    SmallTensor::from_vec(axes, values.iter().map(|&v| int(v)).collect()).unwrap()
}

fn entry(values: &[i64], i: usize, j: usize, k: usize) -> i64 {
    values[9 * i + 3 * j + k]
}

/// All permutations of `0..n` with their signs.
fn permutations(n: usize) -> Vec<(Vec<usize>, i64)> {
    if n == 0 {
        return vec![(vec![], 1)];
    }
    let mut out = Vec::new();
    for (perm, sign) in permutations(n - 1) {
        // insert n - 1 at position k: that many transpositions from the end
        for k in 0..n {
            let mut p = perm.clone();
            p.insert(k, n - 1);
            out.push((p, if (n - 1 - k).is_multiple_of(2) { sign } else { -sign }));
        }
    }
    out
}

/// Leibniz expansion of the determinant of a matrix of polynomials.
fn leibniz(m: &[Vec<MultiPoly<Rational>>], nvars: usize) -> MultiPoly<Rational> {
    permutations(m.len()).into_iter().fold(MultiPoly::zero(nvars), |acc, (perm, sign)| {
        let term = perm.iter().enumerate().fold(MultiPoly::one(nvars), |t, (row, &col)| t.mul(&m[row][col]));
        acc.add(&term.scale(&int(sign)))
    })
}

/// `sum_i y_i M_i` as a matrix of linear polynomials.
fn linear_pencil(mats: &[Matrix<Rational>]) -> Vec<Vec<MultiPoly<Rational>>> {
    let r = mats[0].rows();
    let nvars = mats.len();
    (0..r)
        .map(|p| {
            (0..r)
                .map(|q| {
                    let coeffs: Vec<Rational> = mats.iter().map(|m| m.get(p, q).clone()).collect();
                    MultiPoly::linear(&coeffs[..nvars])
                })
                .collect()
        })
        .collect()
}

fn small_rational() -> impl Strategy<Value = Rational> {
    (-50i64..=50, 1i64..=12).prop_map(|(n, d)| ratio(n, d))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn contraction_matches_a_triple_loop(
        x in prop::collection::vec(-9i64..=9, 27),
        y in prop::collection::vec(-9i64..=9, 27),
        z in prop::collection::vec(-9i64..=9, 27),
        k in -5i64..=5,
    ) {
        // contract axis 2 of the first with axis 0 of the second
        let got = contract(&cube(&x), &cube(&z), &[(2, 0)]).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                for u in 0..3 {
                    for v in 0..3 {
                        let want: i64 = (0..3).map(|s| entry(&x, i, j, s) * entry(&z, s, u, v)).sum();
                        prop_assert_eq!(got.get(&[i, j, u, v]), &int(want));
                    }
                }
            }
        }
        // linearity in the first argument
        let combo: Vec<i64> = x.iter().zip(&y).map(|(a, b)| k * a + b).collect();
        let lhs = contract(&cube(&combo), &cube(&z), &[(0, 1), (2, 2)]).unwrap();
        let cx = contract(&cube(&x), &cube(&z), &[(0, 1), (2, 2)]).unwrap();
        let cy = contract(&cube(&y), &cube(&z), &[(0, 1), (2, 2)]).unwrap();
        for (idx, value) in lhs.data().iter().enumerate() {
            prop_assert_eq!(value, &(int(k) * cx.data()[idx].clone() + cy.data()[idx].clone()));
        }
    }

    #[test]
    fn curvature_tensors_are_antisymmetric(seed in any::<u64>(), which in 0usize..3) {
        let data = instance(seed, AMBIENTS[which]);
        let r = data.ranges.r;
        let t = tangential_curvature(&data, 0.0).unwrap();
        let nc = normal_curvature(&data, 0.0).unwrap();
        for s in 0..r {
            for u in 0..r {
                for p in 0..r {
                    for q in 0..r {
                        prop_assert_eq!(t.get(&[p, q, s, u]).clone(), -t.get(&[p, q, u, s]).clone());
                    }
                }
                for a in 0..data.ranges.l {
                    for b in 0..data.ranges.l {
                        prop_assert_eq!(nc.get(&[a, b, s, u]).clone(), -nc.get(&[a, b, u, s]).clone());
                    }
                }
            }
        }
        if data.ambient == Ambient::Euclidean {
            let low = lowered_tangential_curvature(&data, 0.0).unwrap();
            for i in low.indices() {
                let swapped = [i[1], i[0], i[2], i[3]];
                let pairs = [i[2], i[3], i[0], i[1]];
                prop_assert_eq!(low.get(&i).clone(), -low.get(&swapped).clone());
                prop_assert_eq!(low.get(&i), low.get(&pairs));
            }
        }
    }

    #[test]
    fn euclidean_lowered_curvature_raises_to_the_mixed_tensor(seed in any::<u64>()) {
        let data = instance(seed, Ambient::Euclidean);
        let r = data.ranges.r;
        let mixed = tangential_curvature(&data, 0.0).unwrap();
        let low = lowered_tangential_curvature(&data, 0.0).unwrap();
        let g_inv = data.g_tangent_matrix().unwrap().try_inverse(|_| false).unwrap();
        for i in mixed.indices() {
            let raised = (0..r).fold(int(0), |acc, u| acc + g_inv.get(i[0], u).clone() * low.get(&[u, i[1], i[2], i[3]]).clone());
            prop_assert_eq!(mixed.get(&i), &raised);
        }
    }

    #[test]
    fn normal_flatness_is_symmetry_of_every_product(seed in any::<u64>(), flat in any::<bool>()) {
        let (n, r) = SHAPES[(seed % SHAPES.len() as u64) as usize];
        let ranges = IndexRanges::new(n, r).unwrap();
        let data = if flat { flat_normal_instance(ranges, seed) } else { random_instance(ranges, Ambient::Affine, seed) };
        let report = flatness_report(&data, 0.0).unwrap();
        let symmetric = (0..ranges.l).all(|a| {
            (0..ranges.l).all(|c| {
                let h = data.b_matrix(a).mul(&data.c_matrix(c));
                h == h.transpose()
            })
        });
        prop_assert_eq!(report.products_symmetric, symmetric);
        prop_assert_eq!(report.normal_flat, symmetric);
        if flat {
            prop_assert!(report.normal_flat);
        }
    }

    #[test]
    fn central_instances_classify_as_central(seed in any::<u64>()) {
        let (n, r) = SHAPES[(seed % SHAPES.len() as u64) as usize];
        let data = central_instance(IndexRanges::new(n, r).unwrap(), seed);
        prop_assert_eq!(classify_normalization(&data, 0.0), NormalizationClass::Central);
        let report = flatness_report(&data, 0.0).unwrap();
        prop_assert!(report.tangential_flat && report.normal_flat);
    }

    #[test]
    fn focal_polynomials_match_the_leibniz_expansion(seed in any::<u64>(), which in 0usize..3) {
        let data = instance(seed, AMBIENTS[which]);
        let (r, l) = (data.ranges.r, data.ranges.l);
        prop_assume!(r <= 3);
        let mats: Vec<Matrix<Rational>> = std::iter::once(Matrix::identity(r)).chain((0..l).map(|a| data.c_matrix(a))).collect();
        let surface = focus_hypersurface_poly(&data, 0.0).unwrap();
        prop_assert_eq!(&surface.raw, &leibniz(&linear_pencil(&mats), l + 1));
        let cone = focus_hypercone_poly(&data, 0.0).unwrap();
        if data.ambient.is_affine() {
            let bs: Vec<Matrix<Rational>> = (0..l).map(|a| data.b_matrix(a)).collect();
            prop_assert_eq!(&cone.raw, &leibniz(&linear_pencil(&bs), l));
        } else {
            let forms: Vec<Matrix<Rational>> = std::iter::once(Matrix::from_fn(r, r, |p, q| data.l_at(p, q).clone())).chain((0..l).map(|a| data.b_matrix(a))).collect();
            prop_assert_eq!(&cone.raw, &leibniz(&linear_pencil(&forms), l + 1));
        }
    }

    #[test]
    fn focal_polynomials_are_homogeneous(
        seed in any::<u64>(),
        which in 0usize..3,
        lambda in small_rational(),
        point in prop::collection::vec(small_rational(), 4),
    ) {
        let data = instance(seed, AMBIENTS[which]);
        let r = data.ranges.r as i32;
        let l = data.ranges.l;
        let surface = focus_hypersurface_poly(&data, 0.0).unwrap();
        prop_assert!(surface.raw.is_homogeneous());
        let y = &point[..l + 1];
        let scaled: Vec<Rational> = y.iter().map(|v| lambda.clone() * v.clone()).collect();
        let factor = (0..r).fold(int(1), |acc, _| acc * lambda.clone());
        prop_assert_eq!(surface.raw.eval(&scaled), factor * surface.raw.eval(y));
    }

    #[test]
    fn commuting_pencils_factor_exactly(seed in any::<u64>()) {
        let (n, r) = SHAPES[(seed % SHAPES.len() as u64) as usize];
        let data = flat_normal_instance(IndexRanges::new(n, r).unwrap(), seed);
        let f = factor_linear(&data, 0.0).unwrap();
        let surface = focus_hypersurface_poly(&data, 0.0).unwrap();
        prop_assert_eq!(f.linear_roots().len(), r);
        prop_assert_eq!(f.product(data.ranges.l + 1), surface.raw);
    }

    #[test]
    fn degenerate_gauss_products_are_symmetric(seed in any::<u64>(), shape in 0usize..4) {
        let (n, r, big) = [(4, 2, 6), (5, 3, 7), (4, 3, 6), (5, 2, 8)][shape];
        let ranges = IndexRanges::with_embedding(n, r, big).unwrap();
        let data = commuting_degenerate_gauss(ranges, seed);
        for alpha in 0..ranges.hyperplanes() {
            for i in 0..=ranges.l {
                let h = data.b_matrix(alpha).mul(&data.c_point_matrix(i));
                prop_assert_eq!(h.sub(&h.transpose()), Matrix::zeros(r, r));
            }
        }
    }

    #[test]
    fn rationals_round_trip_through_text(num in any::<i64>(), den in 1i64..=i64::MAX) {
        let x = ratio(num, den);
        prop_assert_eq!(parse_rational(&format_rational(&x)).unwrap(), x);
    }

    #[test]
    fn polynomials_round_trip_through_json(
        terms in prop::collection::vec((prop::collection::vec(0u32..4, 3), small_rational()), 0..12),
    ) {
        let p = MultiPoly::from_terms(3, terms);
        let text = p.to_json();
        let back = MultiPoly::<Rational>::from_json(&text).unwrap();
        prop_assert_eq!(&back, &p);
        prop_assert_eq!(back.to_json(), text);
    }

    #[test]
    fn first_derivatives_match_central_differences(u in -0.8f64..0.8, v in -0.8f64..0.8) {
        let spec = ImmersionSpec::new(
            vec!["u".into(), "v".into()],
            "u, v, sin(u*v) + exp(u)/(2 + v), log(3 + u - v)*cos(u), sqrt(2 + u^2*v)",
            vec![(-1.0, 1.0), (-1.0, 1.0)],
        )
        .unwrap();
        let h = 1e-5;
        let (_, jac) = evaluate_jet1(&spec, &[u, v]).unwrap();
        for q in 0..2 {
            let mut up = [u, v];
            let mut down = [u, v];
            up[q] += h;
            down[q] -= h;
            let fu = spec.eval(&up).unwrap();
            let fd = spec.eval(&down).unwrap();
            for i in 0..spec.n() {
                let diff = (fu[i] - fd[i]) / (2.0 * h);
                prop_assert!((jac[i][q] - diff).abs() < 1e-8, "component {} direction {}: {} vs {}", i, q, jac[i][q], diff);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn affine_ricci_tensors_cancel(seed in any::<u64>()) {
        let data = instance(seed, Ambient::Affine);
        let (rt, rn) = ricci_pair(&data, 0.0).unwrap();
        for (x, y) in rt.data().iter().zip(rn.data()) {
            prop_assert!((x.clone() + y.clone()).is_zero());
        }
    }

    #[test]
    fn slice_at_infinity_is_the_signed_hypercone(seed in any::<u64>()) {
        let data = instance(seed, Ambient::Euclidean);
        let s = infinity_slice_identity(&data, 0.0).unwrap();
        let signed = if data.ranges.r.is_multiple_of(2) { s.substituted.clone() } else { s.substituted.neg() };
        prop_assert!(s.holds);
        prop_assert_eq!(s.restricted, signed);
    }
}

#[test]
fn generated_instances_validate_across_ten_thousand_seeds() {
    for seed in 0..10_000u64 {
        let ambient = AMBIENTS[(seed / SHAPES.len() as u64 % 3) as usize];
        let data = instance(seed, ambient);
        let report = validate_normalized(&data, 0.0).unwrap();
        assert!(report.passed(), "seed {seed} {}: {:?}", ambient.name(), report.violations);
    }
}
