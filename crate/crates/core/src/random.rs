//! Seeded generators of exact test instances.
//!
//! Every generator is deterministic in its seed. Entries are small rationals
//! so that exact arithmetic stays cheap.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scalar::{int, ratio, Num, Rational};
use crate::tensor::Matrix;
use crate::variety::{metric_c_tensor, Ambient, DegenerateGaussTensors, FundamentalTensors, IndexRanges};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn small_rational(rng: &mut ChaCha8Rng) -> Rational {
    let den = [1, 1, 2, 3][rng.gen_range(0..4)];
    ratio(rng.gen_range(-6..=6), den)
}

fn nonzero_rational(rng: &mut ChaCha8Rng) -> Rational {
    loop {
        let x = small_rational(rng);
        if !x.is_zero() {
            return x;
        }
    }
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix<Rational> {
    Matrix::from_fn(rows, cols, |_, _| small_rational(rng))
}

fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> Matrix<Rational> {
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = small_rational(rng);
            m.set(i, j, v.clone());
            m.set(j, i, v);
        }
    }
    m
}

/// `M M^T + I` with small integer `M`: symmetric positive definite.
fn random_positive_definite(rng: &mut ChaCha8Rng, n: usize) -> Matrix<Rational> {
    let m = Matrix::from_fn(n, n, |_, _| int(rng.gen_range(-2..=2)));
    m.mul(&m.transpose()).add(&Matrix::identity(n))
}

/// Invertible matrix with small integer entries.
fn random_invertible(rng: &mut ChaCha8Rng, n: usize) -> (Matrix<Rational>, Matrix<Rational>) {
    loop {
        let p = Matrix::from_fn(n, n, |_, _| int(rng.gen_range(-3..=3)));
        if let Some(inv) = p.try_inverse(|_| false) {
            return (p, inv);
        }
    }
}

/// Rational orthogonal matrix `(I - S)(I + S)^{-1}` from a random skew `S`.
fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> Matrix<Rational> {
    let mut s = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let v = int(rng.gen_range(1..=3) * if rng.gen_bool(0.5) { 1 } else { -1 });
            s.set(i, j, v.clone());
            s.set(j, i, -v);
        }
    }
    let id = Matrix::identity(n);
    let plus = id.add(&s).try_inverse(|_| false).expect("I + S is invertible for skew S");
    id.sub(&s).mul(&plus)
}

fn distinct_diagonal(rng: &mut ChaCha8Rng, n: usize) -> Matrix<Rational> {
    let mut values: Vec<Rational> = Vec::with_capacity(n);
    while values.len() < n {
        let v = nonzero_rational(rng);
        if !values.contains(&v) {
            values.push(v);
        }
    }
    Matrix::from_fn(n, n, |i, j| if i == j { values[i].clone() } else { int(0) })
}

fn to_arrays(ms: &[Matrix<Rational>]) -> Vec<Vec<Vec<Rational>>> {
    ms.iter().map(Matrix::to_rows).collect()
}

/// Random normalized data valid for `ambient`. Affine and Euclidean data
/// get `l = 0`; Euclidean data gets positive definite metrics and the `c`
/// tensor determined by them.
pub fn random_instance(ranges: IndexRanges, ambient: Ambient, seed: u64) -> FundamentalTensors<Rational> {
    let mut rng = rng(seed);
    let (r, l) = (ranges.r, ranges.l);
    let b: Vec<Matrix<Rational>> = (0..l).map(|_| random_symmetric(&mut rng, r)).collect();
    match ambient {
        Ambient::Projective | Ambient::Affine => {
            let c: Vec<Matrix<Rational>> = (0..l).map(|_| random_matrix(&mut rng, r, r)).collect();
            let l_mat = if ambient == Ambient::Projective { random_matrix(&mut rng, r, r) } else { Matrix::zeros(r, r) };
            FundamentalTensors::from_arrays(ranges, ambient, to_arrays(&b), to_arrays(&c), Some(l_mat.to_rows()), None, None)
                .expect("generated shapes match ranges")
        }
        Ambient::Euclidean => {
            let gt = random_positive_definite(&mut rng, r);
            let gn = random_positive_definite(&mut rng, l);
            let gt_inv = gt.try_inverse(|_| false).expect("positive definite");
            let mut data = FundamentalTensors::from_arrays(
                ranges,
                ambient,
                to_arrays(&b),
                vec![vec![vec![int(0); r]; r]; l],
                None,
                Some(gn.to_rows()),
                Some(gt.to_rows()),
            )
            .expect("generated shapes match ranges");
            data.c = metric_c_tensor(&data.b, &gn, &gt_inv, r, l);
            data
        }
    }
}

/// Projective data with `l = 0` and `c = 0`.
pub fn central_instance(ranges: IndexRanges, seed: u64) -> FundamentalTensors<Rational> {
    let mut data = random_instance(ranges, Ambient::Projective, seed);
    data.l = crate::tensor::SmallTensor::zeros(data.l.axes().to_vec());
    data.c = crate::tensor::SmallTensor::zeros(data.c.axes().to_vec());
    data
}

/// Affine data whose `C_a` commute and whose `B^a C_b` are all symmetric:
/// `B^a = P^T D_a P`, `C_a = P^{-1} E_a P` with diagonal `D_a`, `E_a`.
pub fn flat_normal_instance(ranges: IndexRanges, seed: u64) -> FundamentalTensors<Rational> {
    let mut rng = rng(seed);
    let (r, l) = (ranges.r, ranges.l);
    let (p, p_inv) = random_invertible(&mut rng, r);
    let b: Vec<Matrix<Rational>> =
        (0..l).map(|_| p.transpose().mul(&distinct_diagonal(&mut rng, r)).mul(&p)).collect();
    let c: Vec<Matrix<Rational>> = (0..l).map(|_| p_inv.mul(&distinct_diagonal(&mut rng, r)).mul(&p)).collect();
    FundamentalTensors::from_arrays(ranges, Ambient::Affine, to_arrays(&b), to_arrays(&c), None, None, None)
        .expect("generated shapes match ranges")
}

/// Affine hypersurface (`l = 1`) with flat tangential connection:
/// `b = k u u^T`, `C_1 = v u^T`.
pub fn flat_tangential_hypersurface(r: usize, seed: u64) -> FundamentalTensors<Rational> {
    let mut rng = rng(seed);
    let ranges = IndexRanges::new(r + 1, r).expect("r >= 1");
    let u: Vec<Rational> = (0..r).map(|_| small_rational(&mut rng)).collect();
    let v: Vec<Rational> = (0..r).map(|_| small_rational(&mut rng)).collect();
    let k = nonzero_rational(&mut rng);
    let b = Matrix::from_fn(r, r, |p, q| k.clone() * u[p].clone() * u[q].clone());
    let c = Matrix::from_fn(r, r, |p, q| v[p].clone() * u[q].clone());
    FundamentalTensors::from_arrays(ranges, Ambient::Affine, to_arrays(&[b]), to_arrays(&[c]), None, None, None)
        .expect("generated shapes match ranges")
}

/// Degenerate-Gauss data with symmetric `B^alpha` and symmetric `C_a`, all
/// diagonal in one rational orthonormal basis, so every `B^alpha C_a` is
/// symmetric. The rotation is redrawn until every `B^alpha` has no zero
/// entries, which makes any single-entry change of a `C_a` detectable.
pub fn commuting_degenerate_gauss(ranges: IndexRanges, seed: u64) -> DegenerateGaussTensors<Rational> {
    let mut rng = rng(seed);
    let r = ranges.r;
    loop {
        let q = random_orthogonal(&mut rng, r);
        let b: Vec<Matrix<Rational>> = (0..ranges.hyperplanes())
            .map(|_| q.transpose().mul(&distinct_diagonal(&mut rng, r)).mul(&q))
            .collect();
        if b.iter().any(|m| m.to_rows().iter().flatten().any(Num::is_zero)) {
            continue;
        }
        let c: Vec<Matrix<Rational>> =
            (0..ranges.l).map(|_| q.transpose().mul(&distinct_diagonal(&mut rng, r)).mul(&q)).collect();
        return DegenerateGaussTensors::from_matrices(ranges, b, c).expect("generated shapes match ranges");
    }
}
