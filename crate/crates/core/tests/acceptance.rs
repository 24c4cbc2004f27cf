//! Acceptance suite. Prints one PASS or FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use focalframes::curvature::{
    normal_curvature, ricci_pair, sectional_curvature, tangential_curvature,
};
use focalframes::focal::{factor_linear, focus_hypersurface_poly, infinity_slice_identity};
use focalframes::immersion::{extract_frames, ImmersionSpec};
use focalframes::random::{
    central_instance, commuting_degenerate_gauss, flat_normal_instance, flat_tangential_hypersurface, random_instance,
};
use focalframes::scalar::{int, ratio, Num, Rational, Scalar};
use focalframes::tensor::{Matrix, SmallTensor};
use focalframes::transport::{
    holonomy_loop, parallel_variety, rotation_angle, swept_tangent_constancy, transport_matrix, transport_normal, Bundle,
    Grid, NormalSubbundleField, PathSpec, Rectangle,
};
use focalframes::variety::{
    validate_degenerate_gauss, validate_normalized, Ambient, DegenerateGaussTensors, FundamentalTensors, IndexRanges,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

struct Criterion {
    id: usize,
    name: &'static str,
    limit: Option<Duration>,
    check: fn() -> Outcome,
}

fn main() {
    let criteria = [
        Criterion { id: 1, name: "central instances have flat connections", limit: secs(5), check: central_flatness },
        Criterion { id: 2, name: "affine Ricci tensors cancel", limit: secs(5), check: affine_ricci_cancellation },
        Criterion { id: 3, name: "hypersurface normal curvature is minus the tangential trace", limit: None, check: hypersurface_trace },
        Criterion { id: 4, name: "degenerate-Gauss compatibility detects unit perturbations", limit: None, check: degenerate_gauss_validation },
        Criterion { id: 5, name: "focal polynomial contract and eigenvalue roots", limit: None, check: focal_contract },
        Criterion { id: 6, name: "commuting pencils factor into linear forms", limit: None, check: triangularizable_factorization },
        Criterion { id: 7, name: "slice at infinity equals the signed hypercone", limit: None, check: slice_identity },
        Criterion { id: 8, name: "frame extraction on sphere and cylinder", limit: secs(2), check: frame_extraction },
        Criterion { id: 9, name: "holonomy matches curvature with fourth-order convergence", limit: secs(10), check: holonomy_curvature },
        Criterion { id: 10, name: "parallel variety on the torus and its negative control", limit: None, check: parallel_varieties },
        Criterion { id: 11, name: "swept helix surfaces with Bishop and Frenet fields", limit: secs(5), check: swept_helix },
        Criterion { id: 12, name: "report-all is deterministic and matches golden files", limit: None, check: cli_determinism },
    ];
    let only: Option<usize> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let mut failed = 0;
    for c in criteria.iter().filter(|c| only.is_none_or(|k| k == c.id)) {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(c.check)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let elapsed = start.elapsed();
        let result = match (result, c.limit) {
            (Ok(_), Some(limit)) if elapsed > limit => Err(format!("took {elapsed:.2?}, limit {limit:?}")),
            (r, _) => r,
        };
        let (tag, detail) = match result {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} criterion {:>2}: {} [{:.2?}] {detail}", c.id, c.name, elapsed);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

fn secs(s: u64) -> Option<Duration> {
    Some(Duration::from_secs(s))
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn to_float(data: &FundamentalTensors<Rational>) -> FundamentalTensors<f64> {
    let f = |t: &SmallTensor<Rational>| t.map(Scalar::to_f64);
    FundamentalTensors {
        ranges: data.ranges,
        ambient: data.ambient,
        b: f(&data.b),
        c: f(&data.c),
        l: f(&data.l),
        g_normal: data.g_normal.as_ref().map(f),
        g_tangent: data.g_tangent.as_ref().map(f),
    }
}

fn immersion(params: &[&str], comps: &str, domain: &[(f64, f64)]) -> ImmersionSpec {
    ImmersionSpec::new(params.iter().map(|s| s.to_string()).collect(), comps, domain.to_vec()).expect("immersion parses")
}

fn identity_gap(m: &Matrix<f64>) -> f64 {
    let d = m.rows();
    (0..d).flat_map(|i| (0..d).map(move |j| (i, j))).map(|(i, j)| (m.get(i, j) - if i == j { 1.0 } else { 0.0 }).abs()).fold(0.0, f64::max)
}

fn central_flatness() -> Outcome {
    let shapes = [(3, 2), (4, 2), (5, 3)];
    for seed in 0..200u64 {
        let (n, r) = shapes[seed as usize % 3];
        let data = central_instance(IndexRanges::new(n, r).unwrap(), seed);
        let t = tangential_curvature(&data, 0.0).map_err(|e| e.to_string())?;
        let nc = normal_curvature(&data, 0.0).map_err(|e| e.to_string())?;
        ensure!(t.data().iter().all(Num::is_zero), "seed {seed}: tangential curvature nonzero");
        ensure!(nc.data().iter().all(Num::is_zero), "seed {seed}: normal curvature nonzero");
    }
    Ok("200 instances, exact zeros".into())
}

fn affine_ricci_cancellation() -> Outcome {
    let shapes = [(3, 2), (4, 2), (5, 3), (5, 2), (6, 3)];
    for seed in 0..200u64 {
        let (n, r) = shapes[seed as usize % shapes.len()];
        let data = random_instance(IndexRanges::new(n, r).unwrap(), Ambient::Affine, seed);
        let (rt, rn) = ricci_pair(&data, 0.0).map_err(|e| e.to_string())?;
        ensure!(!rt.data().iter().all(Num::is_zero) || seed > 0, "seed {seed}: degenerate sample");
        for (x, y) in rt.data().iter().zip(rn.data()) {
            ensure!((x.clone() + y.clone()).is_zero(), "seed {seed}: R + R~ = {}", x.clone() + y.clone());
        }
    }
    Ok("200 instances, exact cancellation".into())
}

fn hypersurface_trace() -> Outcome {
    for seed in 0..200u64 {
        let r = 2 + seed as usize % 3;
        let data = random_instance(IndexRanges::new(r + 1, r).unwrap(), Ambient::Affine, seed);
        let t = tangential_curvature(&data, 0.0).map_err(|e| e.to_string())?;
        let nc = normal_curvature(&data, 0.0).map_err(|e| e.to_string())?;
        for s in 0..r {
            for u in 0..r {
                let trace = (0..r).fold(int(0), |acc, p| acc + t.get(&[p, p, s, u]).clone());
                ensure!(*nc.get(&[0, 0, s, u]) == -trace, "seed {seed}: mismatch at ({s}, {u})");
            }
        }
    }
    for seed in 0..50u64 {
        let data = flat_tangential_hypersurface(2 + seed as usize % 3, seed);
        ensure!(tangential_curvature(&data, 0.0).unwrap().data().iter().all(Num::is_zero), "seed {seed}: family not flat");
        ensure!(normal_curvature(&data, 0.0).unwrap().data().iter().all(Num::is_zero), "seed {seed}: normal curvature nonzero");
    }
    Ok("200 random and 50 flat instances".into())
}

fn degenerate_gauss_validation() -> Outcome {
    let shapes = [(4, 2, 6), (5, 3, 7), (4, 3, 6), (5, 2, 8)];
    let mut perturbations = 0;
    for seed in 0..100u64 {
        let (n, r, big) = shapes[seed as usize % shapes.len()];
        let ranges = IndexRanges::with_embedding(n, r, big).unwrap();
        let data = commuting_degenerate_gauss(ranges, seed);
        ensure!(validate_degenerate_gauss(&data, 0.0).unwrap().passed(), "seed {seed}: constructed instance rejected");
        let bs: Vec<Matrix<Rational>> = (0..ranges.hyperplanes()).map(|a| data.b_matrix(a)).collect();
        let cs: Vec<Matrix<Rational>> = (0..ranges.l).map(|a| data.c_matrix(a)).collect();
        for a in 0..ranges.l {
            for p in 0..r {
                for q in 0..r {
                    let mut bumped = cs.clone();
                    let v = cs[a].get(p, q).clone() + int(1);
                    bumped[a].set(p, q, v);
                    let d = DegenerateGaussTensors::from_matrices(ranges, bs.clone(), bumped).unwrap();
                    ensure!(!validate_degenerate_gauss(&d, 0.0).unwrap().passed(), "seed {seed}: c[{a}][{p}][{q}] + 1 accepted");
                    perturbations += 1;
                }
            }
        }
    }
    Ok(format!("100 instances, {perturbations} perturbations rejected"))
}

/// Power sums `tr(C^k)` for `k = 1..=r`.
fn power_sums(c: &Matrix<Rational>) -> Vec<Rational> {
    let mut pow = c.clone();
    let mut out = Vec::new();
    for _ in 0..c.rows() {
        out.push(pow.trace());
        pow = pow.mul(c);
    }
    out
}

fn focal_contract() -> Outcome {
    let shapes = [(3, 2), (4, 2), (5, 3), (4, 3), (5, 2)];
    let ambients = [Ambient::Projective, Ambient::Affine, Ambient::Euclidean];
    for seed in 0..500u64 {
        let (n, r) = shapes[seed as usize % shapes.len()];
        let ambient = ambients[(seed as usize / shapes.len()) % 3];
        let data = random_instance(IndexRanges::new(n, r).unwrap(), ambient, seed);
        let report = focus_hypersurface_poly(&data, 0.0).map_err(|e| e.to_string())?;
        let l = n - r;
        for p in [&report.raw, &report.polynomial] {
            ensure!(p.degree().is_none_or(|d| d as usize <= r), "seed {seed}: degree above r");
            let mut lead = vec![0u32; l + 1];
            lead[0] = r as u32;
            ensure!(p.coeff(&lead) == int(1), "seed {seed}: y0^r coefficient {}", p.coeff(&lead));
            let mut e0 = vec![int(0); l + 1];
            e0[0] = int(1);
            ensure!(p.eval(&e0) == int(1), "seed {seed}: value at (1, 0, ..) is {}", p.eval(&e0));
        }
    }
    // float hypersurfaces: the roots are the eigenvalues of C, which is
    // self-adjoint for g; oracle via the symmetric problem L^-1 (-g_n b) L^-T
    let mut worst: f64 = 0.0;
    for seed in 0..100u64 {
        let r = 2 + seed as usize % 3;
        let exact = random_instance(IndexRanges::new(r + 1, r).unwrap(), Ambient::Euclidean, 1000 + seed);
        let data = to_float(&exact);
        let f = factor_linear(&data, 1e-9).map_err(|e| e.to_string())?;
        let mut roots: Vec<f64> = f.linear_roots().iter().map(|c| c[0]).collect();
        ensure!(roots.len() == r, "seed {seed}: {} linear roots for r = {r}", roots.len());
        let g = DMatrix::from_fn(r, r, |p, q| *data.g_tangent_matrix().unwrap().get(p, q));
        let gn = data.g_normal.as_ref().unwrap().get(&[0, 0]).to_f64();
        let b = DMatrix::from_fn(r, r, |p, q| -gn * data.b_at(0, p, q));
        let linv = g.cholesky().unwrap().l().try_inverse().unwrap();
        let sym = &linv * b * linv.transpose();
        let mut oracle: Vec<f64> = sym.symmetric_eigen().eigenvalues.iter().cloned().collect();
        roots.sort_by(f64::total_cmp);
        oracle.sort_by(f64::total_cmp);
        for (x, y) in roots.iter().zip(&oracle) {
            worst = worst.max((x - y).abs());
        }
    }
    ensure!(worst < 1e-9, "float roots differ from eigenvalues by {worst:e}");
    // rational triangularizable hypersurfaces: Newton power sums pin the multiset
    for seed in 0..100u64 {
        let r = 2 + seed as usize % 3;
        let data = flat_normal_instance(IndexRanges::new(r + 1, r).unwrap(), 2000 + seed);
        let f = factor_linear(&data, 0.0).map_err(|e| e.to_string())?;
        let roots: Vec<Rational> = f.linear_roots().iter().map(|c| c[0].clone()).collect();
        ensure!(roots.len() == r, "seed {seed}: {} rational roots for r = {r}", roots.len());
        let expected = power_sums(&data.c_matrix(0));
        for (k, want) in expected.iter().enumerate() {
            let got = roots.iter().fold(int(0), |acc, x| acc + num_traits::pow(x.clone(), k + 1));
            ensure!(got == *want, "seed {seed}: power sum {} is {got}, trace gives {want}", k + 1);
        }
    }
    Ok(format!("500 exact instances; float root error {worst:.1e}; 100 rational root sets"))
}

fn triangularizable_factorization() -> Outcome {
    let shapes = [(4, 2), (5, 3), (5, 2), (6, 3), (6, 4)];
    let mut r = rng(6);
    for seed in 0..100u64 {
        let (n, k) = shapes[seed as usize % shapes.len()];
        let data = flat_normal_instance(IndexRanges::new(n, k).unwrap(), seed);
        let poly = focus_hypersurface_poly(&data, 0.0).map_err(|e| e.to_string())?.raw;
        let f = factor_linear(&data, 0.0).map_err(|e| e.to_string())?;
        let forms: Vec<Vec<Rational>> = f.linear_roots();
        ensure!(forms.len() == k, "seed {seed}: {} linear factors for r = {k}", forms.len());
        let nvars = n - k + 1;
        for _ in 0..100 {
            let y: Vec<Rational> = (0..nvars).map(|_| ratio(r.gen_range(-20..=20), r.gen_range(1..=7))).collect();
            let product = forms.iter().fold(int(1), |acc, lam| {
                acc * lam.iter().zip(&y[1..]).fold(y[0].clone(), |s, (c, v)| s + c.clone() * v.clone())
            });
            ensure!(poly.eval(&y) == product, "seed {seed}: mismatch at {y:?}");
        }
    }
    Ok("100 instances at 100 points each".into())
}

fn slice_identity() -> Outcome {
    let mut nonzero = 0;
    let shapes = [(3, 2), (4, 2), (4, 3), (5, 3), (5, 2)];
    for seed in 0..500u64 {
        let (n, r) = shapes[seed as usize % shapes.len()];
        let data = random_instance(IndexRanges::new(n, r).unwrap(), Ambient::Euclidean, seed);
        let s = infinity_slice_identity(&data, 0.0).map_err(|e| e.to_string())?;
        let signed = if r % 2 == 0 { s.substituted.clone() } else { s.substituted.neg() };
        ensure!(s.holds && s.restricted == signed, "seed {seed}: slice identity fails");
        nonzero += usize::from(!s.restricted.is_zero());
    }
    // singular second forms legitimately give a vanishing slice
    ensure!(nonzero >= 400, "only {nonzero} of 500 comparisons are nonvacuous");
    Ok(format!("500 instances, exact, {nonzero} with a nonzero slice"))
}

fn frame_extraction() -> Outcome {
    let sphere = immersion(&["u", "v"], "2*cos(u)*cos(v), 2*cos(u)*sin(v), 2*sin(u)", &[(-1.4, 1.4), (-4.0, 4.0)]);
    let mut worst_k: f64 = 0.0;
    let mut worst_nc: f64 = 0.0;
    for &(u, v) in &[(0.0, 0.0), (0.3, 0.2), (-0.9, 1.7), (1.2, -2.5)] {
        let fr = extract_frames(&sphere, &[u, v]).map_err(|e| e.to_string())?;
        let g = [[4.0, 0.0], [0.0, 4.0 * f64::cos(u).powi(2)]];
        let sign = fr.b[0][0][0].signum();
        for p in 0..2 {
            for q in 0..2 {
                ensure!((fr.g.get(p, q) - g[p][q]).abs() < 1e-12, "g[{p}][{q}] = {} at ({u}, {v})", fr.g.get(p, q));
                ensure!((fr.b[0][p][q] - sign * g[p][q] / 2.0).abs() < 1e-12, "b[{p}][{q}] = {} at ({u}, {v})", fr.b[0][p][q]);
            }
        }
        let data = fr.fundamental_tensors();
        ensure!(validate_normalized(&data, 1e-9).unwrap().passed(), "extracted sphere data fails validation");
        worst_k = worst_k.max((sectional_curvature(&data, 0, 1, 1e-9).unwrap() - 0.25).abs());
        worst_nc = worst_nc.max(normal_curvature(&data, 1e-9).unwrap().max_magnitude());
    }
    ensure!(worst_k < 1e-7, "sectional curvature off by {worst_k:e}");
    let cylinder = immersion(&["u", "v"], "cos(u), sin(u), v", &[(-4.0, 4.0), (-2.0, 2.0)]);
    let mut worst_pc: f64 = 0.0;
    for &(u, v) in &[(0.0, 0.0), (1.1, 0.4), (-2.3, -1.5)] {
        let fr = extract_frames(&cylinder, &[u, v]).map_err(|e| e.to_string())?;
        // principal curvatures: eigenvalues of the shape operator -C
        let shape = DMatrix::from_fn(2, 2, |p, q| -fr.c[0][p][q]);
        let mut k: Vec<f64> = shape.complex_eigenvalues().iter().map(|z| z.re.abs()).collect();
        k.sort_by(f64::total_cmp);
        worst_pc = worst_pc.max((k[0] - 0.0).abs()).max((k[1] - 1.0).abs());
        worst_nc = worst_nc.max(normal_curvature(&fr.fundamental_tensors(), 1e-9).unwrap().max_magnitude());
    }
    ensure!(worst_pc < 1e-8, "cylinder principal curvatures off by {worst_pc:e}");
    let graph = immersion(&["u", "v"], "u, v, u^2 + u*v^3 - sin(v)", &[(-1.0, 1.0), (-1.0, 1.0)]);
    for &(u, v) in &[(0.1, 0.2), (-0.7, 0.5), (0.9, -0.9)] {
        let fr = extract_frames(&graph, &[u, v]).map_err(|e| e.to_string())?;
        worst_nc = worst_nc.max(normal_curvature(&fr.fundamental_tensors(), 1e-9).unwrap().max_magnitude());
    }
    ensure!(worst_nc < 1e-10, "hypersurface normal curvature {worst_nc:e}");
    Ok(format!("K error {worst_k:.1e}, principal curvature error {worst_pc:.1e}, normal curvature {worst_nc:.1e}"))
}

fn bessel_j0(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..40 {
        term *= -(x * x / 4.0) / (k as f64 * k as f64);
        sum += term;
    }
    sum
}

fn latitude_sphere() -> ImmersionSpec {
    immersion(&["u", "v"], "cos(u)*cos(v), cos(u)*sin(v), sin(u)", &[(-1.5, 1.5), (-1.0, 7.0)])
}

fn holonomy_curvature() -> Outcome {
    let sphere = latitude_sphere();
    // rectangle of spherical area 0.01 at latitude 0.3
    let delta = 0.01 / (0.4f64.sin() - 0.3f64.sin());
    let rect = Rectangle { corner: vec![0.3, 0.0], axes: (0, 1), eps: 0.1, delta };
    let path = PathSpec::rectangle(rect, 2500).map_err(|e| e.to_string())?;
    let h = holonomy_loop(&sphere, &path, Bundle::Tangential).map_err(|e| e.to_string())?;
    let angle = h.rotation_angle.unwrap();
    let rel = (angle - 0.01).abs() / 0.01;
    ensure!(rel < 0.01, "rotation {angle} differs from 0.01 by {:.3}%", rel * 100.0);

    let mut flat_gap: f64 = 0.0;
    let plane = immersion(&["u", "v"], "u, v, 0", &[(-2.0, 2.0), (-2.0, 2.0)]);
    let cylinder = immersion(&["u", "v"], "cos(u), sin(u), v", &[(-4.0, 4.0), (-2.0, 2.0)]);
    for spec in [&plane, &cylinder] {
        let rect = Rectangle { corner: vec![-0.4, -0.3], axes: (0, 1), eps: 0.9, delta: 0.7 };
        let path = PathSpec::rectangle(rect, 2500).unwrap();
        for bundle in [Bundle::Tangential, Bundle::Normal] {
            let h = holonomy_loop(spec, &path, bundle).map_err(|e| e.to_string())?;
            flat_gap = flat_gap.max(identity_gap(&h.matrix));
        }
    }
    ensure!(flat_gap < 1e-8, "flat loops deviate from identity by {flat_gap:e}");

    // wavy loop u = 0.3 + 0.5 sin 6t, v = t: the enclosed-area integral
    // gives 2 pi sin(0.3) J0(0.5)
    let exact = 2.0 * PI * 0.3f64.sin() * bessel_j0(0.5);
    let g0 = extract_frames(&sphere, &[0.3, 0.0]).unwrap().g;
    let mut errors = Vec::new();
    for steps in [100, 1000, 10000] {
        let path = PathSpec::single(&["0.3 + 0.5*sin(6*t)", "t"], 0.0, 2.0 * PI, steps).unwrap();
        let (m, _) = transport_matrix(&sphere, Bundle::Tangential, &path).map_err(|e| e.to_string())?;
        errors.push((rotation_angle(&m, &g0) - exact).abs());
    }
    let orders: Vec<f64> = errors.windows(2).map(|w| (w[0] / w[1]).log10()).collect();
    ensure!(orders.iter().all(|p| (p - 4.0).abs() < 0.5), "observed orders {orders:?} from errors {errors:?}");
    Ok(format!(
        "rotation {angle:.12}, flat gap {flat_gap:.1e}, errors {:.1e} {:.1e} {:.1e}, orders {:.2} {:.2}",
        errors[0], errors[1], errors[2], orders[0], orders[1]
    ))
}

fn parallel_varieties() -> Outcome {
    let torus = immersion(&["u", "v"], "cos(u), sin(u), cos(v), sin(v)", &[(-3.0, 3.0), (-3.0, 3.0)]);
    let grid = Grid::new(vec![0.2, -0.9], vec![0.6, -0.5], vec![3, 3]).unwrap();
    let rep = parallel_variety(&torus, &[0.2, -0.1], &grid, 400, 1e-9).map_err(|e| e.to_string())?;
    ensure!(rep.path_gap < 1e-7, "path dependence {:e}", rep.path_gap);
    ensure!(rep.max_angle < 1e-6, "tangent planes turn by {:e}", rep.max_angle);
    ensure!(rep.passed, "parallel variety not accepted");

    let generic = immersion(&["u", "v"], "u, v, u^2 - v^2, u*v", &[(-1.0, 1.0), (-1.0, 1.0)]);
    let grid = Grid::new(vec![-0.2, -0.2], vec![0.2, 0.2], vec![3, 3]).unwrap();
    ensure!(parallel_variety(&generic, &[0.1, 0.0], &grid, 400, 1e-9).is_err(), "generic surface accepted");
    let rect = Rectangle { corner: vec![-0.25, -0.25], axes: (0, 1), eps: 0.5, delta: 0.5 };
    let path = PathSpec::rectangle(rect, 500).unwrap();
    let y0 = [1.0, 0.0];
    let res = transport_normal(&generic, &path, &y0).map_err(|e| e.to_string())?;
    let residual = res.final_components.iter().zip(&y0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    ensure!(residual > 10.0 * 1e-9, "normal transport closes to {residual:e} on the generic surface");
    Ok(format!("torus gap {:.1e}, angle {:.1e}; generic loop residual {residual:.3e}", rep.path_gap, rep.max_angle))
}

fn swept_helix() -> Outcome {
    let helix = immersion(&["t"], "cos(t), sin(t), t", &[(-4.0, 4.0)]);
    let grid = Grid::new(vec![-1.0], vec![1.0], vec![5]).unwrap();
    let fiber = vec![vec![-0.5], vec![0.0], vec![0.5]];
    let bishop = NormalSubbundleField::parse_ambient(
        &helix,
        &[vec![
            "-cos(t/sqrt(2))*cos(t) - sin(t/sqrt(2))*sin(t)/sqrt(2)",
            "-cos(t/sqrt(2))*sin(t) + sin(t/sqrt(2))*cos(t)/sqrt(2)",
            "-sin(t/sqrt(2))/sqrt(2)",
        ]],
    )
    .map_err(|e| e.to_string())?;
    let b = swept_tangent_constancy(&helix, &bishop, &grid, &fiber, 1e-9, true).map_err(|e| e.to_string())?;
    ensure!(b.max_angle < 1e-6, "Bishop sweep turns by {:e}", b.max_angle);
    let frenet = NormalSubbundleField::parse_ambient(&helix, &[vec!["-cos(t)", "-sin(t)", "0"]]).unwrap();
    ensure!(swept_tangent_constancy(&helix, &frenet, &grid, &fiber, 1e-9, true).is_err(), "Frenet field passed the precondition");
    let f = swept_tangent_constancy(&helix, &frenet, &grid, &fiber, 1e-9, false).map_err(|e| e.to_string())?;
    ensure!(f.max_angle > 1e-3, "Frenet sweep turns only by {:e}", f.max_angle);
    Ok(format!("Bishop {:.1e} rad, Frenet {:.3} rad", b.max_angle, f.max_angle))
}

fn cli_determinism() -> Outcome {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests");
    for name in ["sphere", "central"] {
        let input = root.join(format!("fixtures/{name}.json"));
        let run = || {
            Command::new(env!("CARGO_BIN_EXE_focalframes"))
                .args(["report-all", "--input"])
                .arg(&input)
                .env_remove("FOCALFRAMES_TOLERANCE")
                .output()
                .expect("binary runs")
        };
        let (a, b) = (run(), run());
        ensure!(a.status.code() == Some(0), "{name}: exit {:?}", a.status.code());
        ensure!(a.stdout == b.stdout, "{name}: two runs differ");
        let golden = std::fs::read(root.join(format!("golden/{name}.report-all.json"))).map_err(|e| e.to_string())?;
        ensure!(a.stdout == golden, "{name}: report differs from golden file");
    }
    Ok("sphere and central".into())
}
