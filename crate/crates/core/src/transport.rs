//! Parallel transport in the induced tangential and normal connections of
//! an immersion, holonomy around closed loops, parallel varieties, parallel
//! normal subbundles and the tangent spaces of swept varieties.
//!
//! Transport integrates `dx^p/dt = -x^q K^p_{qs} du^s/dt` with the classical
//! fourth-order Runge-Kutta method at a fixed step, where `K` is either the
//! Christoffel symbols `Gamma^p_{qs}` or the normal connection coefficients
//! `gamma^a_{bs}`.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::curvature::{normal_curvature, tangential_curvature};
use crate::expr::{DomainError, Expr};
use crate::immersion::{extract_frames, tangent_connection, ImmersionError, ImmersionSpec};
use crate::jet::{seed1, Real};
use crate::parser::{parse_expr, ParseError};
use crate::tensor::Matrix;

/// Relative norm change above which a transport is rejected as too coarse.
pub const MAX_DRIFT: f64 = 0.1;
/// Largest parameter gap between the ends of a closed loop.
pub const CLOSURE_TOLERANCE: f64 = 1e-12;
/// Largest disagreement between the two lattice routes of a parallel variety.
pub const PATH_INDEPENDENCE_TOLERANCE: f64 = 1e-7;
/// Largest angle between the tangent spaces of a variety and its parallel variety.
pub const PARALLELISM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransportError {
    #[error(transparent)]
    Immersion(#[from] ImmersionError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("vector has {got} components, expected {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("norm drift {drift:.3e} exceeds {MAX_DRIFT}; increase the step count")]
    StepTooCoarse { drift: f64 },
    #[error("loop is not closed: endpoints differ by {gap:.3e}")]
    NotClosed { gap: f64 },
    #[error("normal connection is not flat: curvature {max:.3e} at {at:?}")]
    NotFlat { max: f64, at: Vec<f64> },
    #[error("lattice routes disagree by {gap:.3e}")]
    PathDependence { gap: f64 },
    #[error("field vectors are dependent at {at:?}")]
    RankDeficientField { at: Vec<f64> },
    #[error("precondition failed: {0}")]
    Precondition(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bundle {
    Tangential,
    Normal,
}

impl Bundle {
    pub fn name(self) -> &'static str {
        match self {
            Bundle::Tangential => "tangential",
            Bundle::Normal => "normal",
        }
    }
}

/// One smooth piece `t -> u(t)`, `t in [t0, t1]`, integrated with `steps` steps.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSegment {
    pub coords: Vec<Expr>,
    pub t0: f64,
    pub t1: f64,
    pub steps: usize,
}

impl PathSegment {
    /// Parse one expression in `t` per immersion parameter.
    pub fn parse(coords: &[&str], t0: f64, t1: f64, steps: usize) -> Result<Self, TransportError> {
        let names = ["t".to_string()];
        let coords = coords.iter().map(|c| parse_expr(c, &names)).collect::<Result<Vec<_>, _>>()?;
        Ok(PathSegment { coords, t0, t1, steps })
    }

    /// Straight segment from `a` to `b` over `t in [0, 1]`.
    pub fn line(a: &[f64], b: &[f64], steps: usize) -> Self {
        let coords = a
            .iter()
            .zip(b)
            .map(|(&x, &y)| {
                Expr::Add(Box::new(Expr::Const(x)), Box::new(Expr::Mul(Box::new(Expr::Const(y - x)), Box::new(Expr::Var(0)))))
            })
            .collect();
        PathSegment { coords, t0: 0.0, t1: 1.0, steps }
    }

    /// Position and velocity at `t`.
    pub fn at(&self, t: f64) -> Result<(Vec<f64>, Vec<f64>), DomainError> {
        let seed = seed1(&[t]);
        let mut pos = Vec::with_capacity(self.coords.len());
        let mut vel = Vec::with_capacity(self.coords.len());
        for c in &self.coords {
            let v = c.eval(&seed)?;
            pos.push(v.value);
            vel.push(v.d(0));
        }
        Ok((pos, vel))
    }
}

/// Axis-aligned rectangle `[s, s + eps] x [t, t + delta]` in parameters
/// `axes.0`, `axes.1`, traversed along `axes.0` first.
#[derive(Debug, Clone, PartialEq)]
pub struct Rectangle {
    pub corner: Vec<f64>,
    pub axes: (usize, usize),
    pub eps: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathSpec {
    pub segments: Vec<PathSegment>,
    pub rectangle: Option<Rectangle>,
}

impl PathSpec {
    pub fn new(segments: Vec<PathSegment>) -> Result<Self, TransportError> {
        let path = PathSpec { segments, rectangle: None };
        path.check()?;
        Ok(path)
    }

    pub fn single(coords: &[&str], t0: f64, t1: f64, steps: usize) -> Result<Self, TransportError> {
        Self::new(vec![PathSegment::parse(coords, t0, t1, steps)?])
    }

    /// Closed rectangular loop with `steps` steps per side.
    pub fn rectangle(rect: Rectangle, steps: usize) -> Result<Self, TransportError> {
        let (i, j) = rect.axes;
        if i == j || i >= rect.corner.len() || j >= rect.corner.len() {
            return Err(TransportError::InvalidPath("rectangle axes must be two distinct parameters".into()));
        }
        let mut corners = vec![rect.corner.clone(); 4];
        corners[1][i] += rect.eps;
        corners[2][i] += rect.eps;
        corners[2][j] += rect.delta;
        corners[3][j] += rect.delta;
        let segments = (0..4).map(|k| PathSegment::line(&corners[k], &corners[(k + 1) % 4], steps)).collect();
        let path = PathSpec { segments, rectangle: Some(rect) };
        path.check()?;
        Ok(path)
    }

    fn check(&self) -> Result<(), TransportError> {
        if self.segments.is_empty() {
            return Err(TransportError::InvalidPath("path has no segments".into()));
        }
        let dim = self.segments[0].coords.len();
        for s in &self.segments {
            if s.steps < 2 {
                return Err(TransportError::InvalidPath("each segment needs at least 2 steps".into()));
            }
            if s.coords.len() != dim {
                return Err(TransportError::InvalidPath("segments disagree on the parameter count".into()));
            }
            if !(s.t0.is_finite() && s.t1.is_finite()) || s.t0 == s.t1 {
                return Err(TransportError::InvalidPath("segment interval must be finite and nonempty".into()));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.segments[0].coords.len()
    }

    pub fn total_steps(&self) -> usize {
        self.segments.iter().map(|s| s.steps).sum()
    }

    pub fn start(&self) -> Result<Vec<f64>, DomainError> {
        let s = &self.segments[0];
        Ok(s.at(s.t0)?.0)
    }

    pub fn end(&self) -> Result<Vec<f64>, DomainError> {
        let s = self.segments.last().expect("nonempty");
        Ok(s.at(s.t1)?.0)
    }

    /// Largest coordinate gap between the start and the end.
    pub fn closure_gap(&self) -> Result<f64, DomainError> {
        let (a, b) = (self.start()?, self.end()?);
        Ok(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
    }
}

/// Connection coefficients `K^p_{qs}` and the fiber metric at a point.
struct Coefficients {
    k: Vec<Vec<Vec<f64>>>,
    metric: Matrix<f64>,
}

fn coefficients(spec: &ImmersionSpec, bundle: Bundle, u: &[f64]) -> Result<Coefficients, TransportError> {
    match bundle {
        Bundle::Tangential => {
            let (k, metric) = tangent_connection(spec, u)?;
            Ok(Coefficients { k, metric })
        }
        Bundle::Normal => {
            let frames = extract_frames(spec, u)?;
            let l = frames.l();
            Ok(Coefficients { k: frames.normal_connection, metric: Matrix::identity(l) })
        }
    }
}

fn fiber_dim(spec: &ImmersionSpec, bundle: Bundle) -> usize {
    match bundle {
        Bundle::Tangential => spec.r(),
        Bundle::Normal => spec.n() - spec.r(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportResult {
    pub final_components: Vec<f64>,
    /// `(tau, components)` after each step; `tau` runs over the concatenated
    /// segment intervals starting at zero.
    pub log: Vec<(f64, Vec<f64>)>,
    /// Largest relative change of the fiber norm along the path.
    pub drift: f64,
}

fn system_matrix(c: &Coefficients, vel: &[f64]) -> Vec<Vec<f64>> {
    let d = c.k.len();
    (0..d).map(|p| (0..d).map(|q| -c.k[p][q].iter().zip(vel).map(|(k, v)| k * v).sum::<f64>()).collect()).collect()
}

fn apply(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter().map(|row| row.iter().zip(x).map(|(m, v)| m * v).sum()).collect()
}

fn axpy(x: &[f64], h: f64, k: &[f64]) -> Vec<f64> {
    x.iter().zip(k).map(|(a, b)| a + h * b).collect()
}

fn norm_in(metric: &Matrix<f64>, x: &[f64]) -> f64 {
    let d = x.len();
    (0..d).map(|p| (0..d).map(|q| x[p] * metric.get(p, q) * x[q]).sum::<f64>()).sum::<f64>().max(0.0).sqrt()
}

/// Transport several fiber vectors at once. Returns the final vectors, the
/// log of the first vector, and the drift over all vectors.
fn integrate(
    spec: &ImmersionSpec,
    bundle: Bundle,
    path: &PathSpec,
    starts: &[Vec<f64>],
) -> Result<(Vec<Vec<f64>>, Vec<(f64, Vec<f64>)>, f64), TransportError> {
    if path.dim() != spec.r() {
        return Err(TransportError::DimensionMismatch { got: path.dim(), expected: spec.r() });
    }
    let d = fiber_dim(spec, bundle);
    for v in starts {
        if v.len() != d {
            return Err(TransportError::DimensionMismatch { got: v.len(), expected: d });
        }
    }
    let mut states: Vec<Vec<f64>> = starts.to_vec();
    let mut log = Vec::with_capacity(path.total_steps() + 1);
    let first = path.start()?;
    let base = coefficients(spec, bundle, &first)?;
    let norms0: Vec<f64> = states.iter().map(|x| norm_in(&base.metric, x)).collect();
    let mut drift: f64 = 0.0;
    let mut tau = 0.0;
    log.push((tau, states.first().cloned().unwrap_or_default()));
    let eval = |seg: &PathSegment, t: f64| -> Result<(Vec<Vec<f64>>, Matrix<f64>), TransportError> {
        let (u, vel) = seg.at(t)?;
        let c = coefficients(spec, bundle, &u)?;
        Ok((system_matrix(&c, &vel), c.metric))
    };
    for seg in &path.segments {
        let h = (seg.t1 - seg.t0) / seg.steps as f64;
        let (mut a0, _) = eval(seg, seg.t0)?;
        for step in 0..seg.steps {
            let t = seg.t0 + step as f64 * h;
            let t_end = if step + 1 == seg.steps { seg.t1 } else { t + h };
            let (am, _) = eval(seg, t + 0.5 * h)?;
            let (a1, metric1) = eval(seg, t_end)?;
            for (x, n0) in states.iter_mut().zip(&norms0) {
                let k1 = apply(&a0, x);
                let k2 = apply(&am, &axpy(x, 0.5 * h, &k1));
                let k3 = apply(&am, &axpy(x, 0.5 * h, &k2));
                let k4 = apply(&a1, &axpy(x, h, &k3));
                for i in 0..x.len() {
                    x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                }
                if *n0 > 0.0 {
                    drift = drift.max((norm_in(&metric1, x) - n0).abs() / n0);
                }
            }
            a0 = a1;
            tau += h.abs();
            log.push((tau, states.first().cloned().unwrap_or_default()));
        }
    }
    if drift > MAX_DRIFT {
        return Err(TransportError::StepTooCoarse { drift });
    }
    Ok((states, log, drift))
}

fn transport(spec: &ImmersionSpec, bundle: Bundle, path: &PathSpec, v0: &[f64]) -> Result<TransportResult, TransportError> {
    let (mut finals, log, drift) = integrate(spec, bundle, path, &[v0.to_vec()])?;
    Ok(TransportResult { final_components: finals.remove(0), log, drift })
}

/// Parallel transport of tangent components `x^p`.
pub fn transport_tangent(spec: &ImmersionSpec, path: &PathSpec, v0: &[f64]) -> Result<TransportResult, TransportError> {
    transport(spec, Bundle::Tangential, path, v0)
}

/// Parallel transport of normal components `y^a` in the orthonormal normal frame.
pub fn transport_normal(spec: &ImmersionSpec, path: &PathSpec, y0: &[f64]) -> Result<TransportResult, TransportError> {
    transport(spec, Bundle::Normal, path, y0)
}

/// Transport matrix along a path: column `j` is the transport of `e_j`.
pub fn transport_matrix(spec: &ImmersionSpec, bundle: Bundle, path: &PathSpec) -> Result<(Matrix<f64>, f64), TransportError> {
    let d = fiber_dim(spec, bundle);
    let basis: Vec<Vec<f64>> = (0..d).map(|j| (0..d).map(|i| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let (cols, _, drift) = integrate(spec, bundle, path, &basis)?;
    Ok((Matrix::from_fn(d, d, |i, j| cols[j][i]), drift))
}

#[derive(Debug, Clone, PartialEq)]
pub struct HolonomyReport {
    pub bundle: Bundle,
    pub matrix: Matrix<f64>,
    /// For rectangles: `I - R(e_i, e_j) eps delta` with the curvature at the
    /// rectangle center.
    pub prediction: Option<Matrix<f64>>,
    /// Max-entry distance between `matrix` and `prediction`.
    pub deviation: Option<f64>,
    /// `deviation / (eps delta (eps + delta))`.
    pub deviation_ratio: Option<f64>,
    /// Rotation angle for two-dimensional fibers, measured in an orthonormal
    /// basis at the base point.
    pub rotation_angle: Option<f64>,
    pub drift: f64,
}

/// Transport around a closed loop and compare with the curvature prediction
/// when the loop is a coordinate rectangle.
pub fn holonomy_loop(spec: &ImmersionSpec, path: &PathSpec, bundle: Bundle) -> Result<HolonomyReport, TransportError> {
    let gap = path.closure_gap()?;
    if gap > CLOSURE_TOLERANCE {
        return Err(TransportError::NotClosed { gap });
    }
    let (matrix, drift) = transport_matrix(spec, bundle, path)?;
    let d = matrix.rows();
    let base = path.start()?;
    let metric = coefficients(spec, bundle, &base)?.metric;
    let rotation_angle = (d == 2).then(|| rotation_angle(&matrix, &metric));
    let mut report = HolonomyReport {
        bundle,
        matrix,
        prediction: None,
        deviation: None,
        deviation_ratio: None,
        rotation_angle,
        drift,
    };
    if let Some(rect) = &path.rectangle {
        let (i, j) = rect.axes;
        let mut center = rect.corner.clone();
        center[i] += rect.eps / 2.0;
        center[j] += rect.delta / 2.0;
        let data = extract_frames(spec, &center)?.fundamental_tensors();
        let curvature = match bundle {
            Bundle::Tangential => tangential_curvature(&data, 1e-9),
            Bundle::Normal => normal_curvature(&data, 1e-9),
        }
        .map_err(|e| TransportError::Precondition(e.to_string()))?;
        let area = rect.eps * rect.delta;
        let prediction = Matrix::from_fn(d, d, |p, q| {
            let id = if p == q { 1.0 } else { 0.0 };
            id - curvature.get(&[p, q, i, j]) * area
        });
        let deviation = (0..d)
            .flat_map(|p| (0..d).map(move |q| (p, q)))
            .map(|(p, q)| (report.matrix.get(p, q) - prediction.get(p, q)).abs())
            .fold(0.0, f64::max);
        report.deviation = Some(deviation);
        report.deviation_ratio = Some(deviation / (area * (rect.eps.abs() + rect.delta.abs())));
        report.prediction = Some(prediction);
    }
    Ok(report)
}

/// Angle of a 2x2 `metric`-isometry: with `metric = L L^T`, the angle of
/// `L^T H L^{-T}`.
pub fn rotation_angle(h: &Matrix<f64>, metric: &Matrix<f64>) -> f64 {
    let g = DMatrix::from_fn(2, 2, |i, j| *metric.get(i, j));
    let hm = DMatrix::from_fn(2, 2, |i, j| *h.get(i, j));
    let l = g.cholesky().expect("metric is positive definite").l();
    let lt = l.transpose();
    let k = &lt * hm * lt.try_inverse().expect("triangular factor is invertible");
    k[(1, 0)].atan2(k[(0, 0)])
}

/// Sampling lattice: `counts[i]` equally spaced values in `[lo[i], hi[i]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Grid {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, counts: Vec<usize>) -> Result<Self, TransportError> {
        if lo.len() != hi.len() || lo.len() != counts.len() || counts.iter().any(|&c| c < 2) {
            return Err(TransportError::InvalidPath("grid needs matching bounds and at least 2 nodes per axis".into()));
        }
        Ok(Grid { lo, hi, counts })
    }

    pub fn node(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter()
            .enumerate()
            .map(|(i, &k)| self.lo[i] + (self.hi[i] - self.lo[i]) * k as f64 / (self.counts[i] - 1) as f64)
            .collect()
    }

    pub fn indices(&self) -> crate::tensor::MultiIndex {
        crate::tensor::MultiIndex::new(&self.counts)
    }

    fn flat(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.counts).fold(0, |acc, (&i, &c)| acc * c + i)
    }

    fn size(&self) -> usize {
        self.counts.iter().product()
    }
}

/// Fill the grid by transport from the lo corner, walking the axes in
/// `order`: first along `order[0]`, then from every reached node along
/// `order[1]`, and so on.
fn staircase(
    spec: &ImmersionSpec,
    grid: &Grid,
    y0: &[f64],
    order: &[usize],
    steps: usize,
) -> Result<Vec<Vec<f64>>, TransportError> {
    let mut values: Vec<Option<Vec<f64>>> = vec![None; grid.size()];
    let base = vec![0; grid.counts.len()];
    values[grid.flat(&base)] = Some(y0.to_vec());
    let mut reached = vec![base];
    for &axis in order {
        let mut next = Vec::new();
        for start in &reached {
            let mut idx = start.clone();
            let mut y = values[grid.flat(&idx)].clone().expect("reached nodes have values");
            next.push(idx.clone());
            for k in 1..grid.counts[axis] {
                let a = grid.node(&idx);
                idx[axis] = k;
                let b = grid.node(&idx);
                let path = PathSpec::new(vec![PathSegment::line(&a, &b, steps)])?;
                y = transport_normal(spec, &path, &y)?.final_components;
                values[grid.flat(&idx)] = Some(y.clone());
                next.push(idx.clone());
            }
        }
        reached = next;
    }
    Ok(values.into_iter().map(|v| v.expect("every node is reached")).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParallelVarietyReport {
    /// `(u, f(u) + y^a(u) A_a(u))` at every grid node.
    pub points: Vec<(Vec<f64>, Vec<f64>)>,
    /// Transported normal components at every grid node.
    pub components: Vec<Vec<f64>>,
    /// Largest disagreement between the two lattice routes.
    pub path_gap: f64,
    /// Largest angle between the tangent spaces of `X` and `X(y)`.
    pub max_angle: f64,
    /// Largest normal curvature seen on the grid.
    pub max_normal_curvature: f64,
    pub passed: bool,
}

/// Build the parallel variety through `f(u_0) + y0^a A_a(u_0)`, `u_0` the
/// lo corner of `grid`, by normal transport over the lattice.
pub fn parallel_variety(
    spec: &ImmersionSpec,
    y0: &[f64],
    grid: &Grid,
    steps: usize,
    tol: f64,
) -> Result<ParallelVarietyReport, TransportError> {
    let l = spec.n() - spec.r();
    if y0.len() != l {
        return Err(TransportError::DimensionMismatch { got: y0.len(), expected: l });
    }
    let mut max_curv: f64 = 0.0;
    for idx in grid.indices() {
        let u = grid.node(&idx);
        let data = extract_frames(spec, &u)?.fundamental_tensors();
        let curv = normal_curvature(&data, tol).map_err(|e| TransportError::Precondition(e.to_string()))?;
        let m = curv.max_magnitude();
        max_curv = max_curv.max(m);
        if m > tol {
            return Err(TransportError::NotFlat { max: m, at: u });
        }
    }
    let forward: Vec<usize> = (0..spec.r()).collect();
    let backward: Vec<usize> = forward.iter().rev().cloned().collect();
    let route_a = staircase(spec, grid, y0, &forward, steps)?;
    let route_b = staircase(spec, grid, y0, &backward, steps)?;
    let path_gap = route_a
        .iter()
        .zip(&route_b)
        .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max);
    if path_gap > PATH_INDEPENDENCE_TOLERANCE {
        return Err(TransportError::PathDependence { gap: path_gap });
    }
    let mut points = Vec::with_capacity(route_a.len());
    let mut max_angle: f64 = 0.0;
    for (idx, y) in grid.indices().zip(&route_a) {
        let u = grid.node(&idx);
        let fr = extract_frames(spec, &u)?;
        let n = spec.n();
        let point: Vec<f64> = (0..n).map(|i| fr.point[i] + (0..l).map(|a| y[a] * fr.normal[a][i]).sum::<f64>()).collect();
        // d/du^p (f + y^a A_a) with dy^a/du^p = -gamma^a_{bp} y^b
        let offset_tangent: Vec<Vec<f64>> = (0..spec.r())
            .map(|p| {
                (0..n)
                    .map(|i| {
                        let mut v = fr.tangent[p][i];
                        for a in 0..l {
                            let dy: f64 = -(0..l).map(|b| fr.normal_connection[a][b][p] * y[b]).sum::<f64>();
                            v += dy * fr.normal[a][i] + y[a] * fr.normal_derivatives[a][p][i];
                        }
                        v
                    })
                    .collect()
            })
            .collect();
        max_angle = max_angle.max(max_principal_angle(&fr.tangent, &offset_tangent));
        points.push((u, point));
    }
    Ok(ParallelVarietyReport {
        points,
        components: route_a,
        path_gap,
        max_angle,
        max_normal_curvature: max_curv,
        passed: path_gap <= PATH_INDEPENDENCE_TOLERANCE && max_angle <= PARALLELISM_TOLERANCE,
    })
}

/// Orthonormal basis (columns) of the span of `vectors`.
fn orthonormal_basis(vectors: &[Vec<f64>]) -> DMatrix<f64> {
    let n = vectors[0].len();
    let m = DMatrix::from_fn(n, vectors.len(), |i, j| vectors[j][i]);
    m.qr().q()
}

/// Largest principal angle between two subspaces of equal dimension, from the
/// singular values of `(I - Q_1 Q_1^T) Q_2`.
pub fn max_principal_angle(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let q1 = orthonormal_basis(a);
    let q2 = orthonormal_basis(b);
    let residual = &q2 - &q1 * (q1.transpose() * &q2);
    let s = residual.singular_values().iter().cloned().fold(0.0, f64::max);
    s.min(1.0).asin()
}

/// A field of `s` normal vectors `B_f`.
#[derive(Debug, Clone, PartialEq)]
pub enum NormalSubbundleField {
    /// Frame components `xi^a_f(u)` in the orthonormal normal frame.
    Frame(Vec<Vec<Expr>>),
    /// Ambient components of `B_f(u)`; tangential parts are projected away.
    Ambient(Vec<Vec<Expr>>),
}

impl NormalSubbundleField {
    fn parse_all(spec: &ImmersionSpec, fields: &[Vec<&str>]) -> Result<Vec<Vec<Expr>>, TransportError> {
        let names = spec.params().to_vec();
        Ok(fields
            .iter()
            .map(|f| f.iter().map(|e| parse_expr(e, &names)).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?)
    }

    pub fn parse_frame(spec: &ImmersionSpec, fields: &[Vec<&str>]) -> Result<Self, TransportError> {
        Ok(NormalSubbundleField::Frame(Self::parse_all(spec, fields)?))
    }

    pub fn parse_ambient(spec: &ImmersionSpec, fields: &[Vec<&str>]) -> Result<Self, TransportError> {
        Ok(NormalSubbundleField::Ambient(Self::parse_all(spec, fields)?))
    }

    pub fn len(&self) -> usize {
        match self {
            NormalSubbundleField::Frame(f) | NormalSubbundleField::Ambient(f) => f.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Field values at one point: frame components `xi[f][a]`, their covariant
/// derivatives `dxi[f][s][a]`, ambient vectors `vec[f]` and ambient
/// derivatives `dvec[f][s]`.
struct FieldSample {
    xi: Vec<Vec<f64>>,
    dxi: Vec<Vec<Vec<f64>>>,
    vec: Vec<Vec<f64>>,
    dvec: Vec<Vec<Vec<f64>>>,
}

fn sample_field(spec: &ImmersionSpec, field: &NormalSubbundleField, u: &[f64]) -> Result<(FieldSample, crate::immersion::FrameData), TransportError> {
    let fr = extract_frames(spec, u)?;
    let (n, r, l) = (spec.n(), spec.r(), fr.l());
    let seed = seed1(u);
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
    let mut sample = FieldSample { xi: vec![], dxi: vec![], vec: vec![], dvec: vec![] };
    match field {
        NormalSubbundleField::Frame(fields) => {
            for f in fields {
                if f.len() != l {
                    return Err(TransportError::DimensionMismatch { got: f.len(), expected: l });
                }
                let jets = f.iter().map(|e| e.eval(&seed)).collect::<Result<Vec<_>, _>>()?;
                let xi: Vec<f64> = jets.iter().map(|j| j.value).collect();
                let partial: Vec<Vec<f64>> = (0..r).map(|s| jets.iter().map(|j| j.d(s)).collect()).collect();
                let vec: Vec<f64> = (0..n).map(|i| (0..l).map(|a| xi[a] * fr.normal[a][i]).sum()).collect();
                let dvec: Vec<Vec<f64>> = (0..r)
                    .map(|s| {
                        (0..n)
                            .map(|i| (0..l).map(|a| partial[s][a] * fr.normal[a][i] + xi[a] * fr.normal_derivatives[a][s][i]).sum())
                            .collect()
                    })
                    .collect();
                let dxi = (0..r)
                    .map(|s| (0..l).map(|a| partial[s][a] + (0..l).map(|b| xi[b] * fr.normal_connection[a][b][s]).sum::<f64>()).collect())
                    .collect();
                sample.xi.push(xi);
                sample.dxi.push(dxi);
                sample.vec.push(vec);
                sample.dvec.push(dvec);
            }
        }
        NormalSubbundleField::Ambient(fields) => {
            for f in fields {
                if f.len() != n {
                    return Err(TransportError::DimensionMismatch { got: f.len(), expected: n });
                }
                let jets = f.iter().map(|e| e.eval(&seed)).collect::<Result<Vec<_>, _>>()?;
                let raw: Vec<f64> = jets.iter().map(|j| j.value).collect();
                let raw_d: Vec<Vec<f64>> = (0..r).map(|s| jets.iter().map(|j| j.d(s)).collect()).collect();
                let xi: Vec<f64> = (0..l).map(|a| dot(&raw, &fr.normal[a])).collect();
                // d xi^a = dB . A_a + B . dA_a
                let partial: Vec<Vec<f64>> = (0..r)
                    .map(|s| (0..l).map(|a| dot(&raw_d[s], &fr.normal[a]) + dot(&raw, &fr.normal_derivatives[a][s])).collect())
                    .collect();
                let vec: Vec<f64> = (0..n).map(|i| (0..l).map(|a| xi[a] * fr.normal[a][i]).sum()).collect();
                let dvec: Vec<Vec<f64>> = (0..r)
                    .map(|s| {
                        (0..n)
                            .map(|i| (0..l).map(|a| partial[s][a] * fr.normal[a][i] + xi[a] * fr.normal_derivatives[a][s][i]).sum())
                            .collect()
                    })
                    .collect();
                let dxi = (0..r)
                    .map(|s| (0..l).map(|a| partial[s][a] + (0..l).map(|b| xi[b] * fr.normal_connection[a][b][s]).sum::<f64>()).collect())
                    .collect();
                sample.xi.push(xi);
                sample.dxi.push(dxi);
                sample.vec.push(vec);
                sample.dvec.push(dvec);
            }
        }
    }
    Ok((sample, fr))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubbundleReport {
    pub parallel: bool,
    /// Largest projection residual per unit parameter speed.
    pub max_residual: f64,
}

/// Test whether the covariant derivatives of the field stay in its span.
/// Each residual is the component of `D_s xi_f` orthogonal to the span of
/// the `xi_g`, divided by `|A_s|` so that it is measured per unit length.
pub fn parallel_subbundle_check(
    spec: &ImmersionSpec,
    field: &NormalSubbundleField,
    grid: &Grid,
    tol: f64,
) -> Result<SubbundleReport, TransportError> {
    let l = spec.n() - spec.r();
    if field.is_empty() || field.len() > l {
        return Err(TransportError::Precondition(format!("field needs between 1 and {l} vectors")));
    }
    let mut max_residual: f64 = 0.0;
    for idx in grid.indices() {
        let u = grid.node(&idx);
        let (sample, fr) = sample_field(spec, field, &u)?;
        let s = sample.xi.len();
        let xi = DMatrix::from_fn(l, s, |a, f| sample.xi[f][a]);
        let sv = xi.singular_values();
        let top = sv.iter().cloned().fold(0.0, f64::max);
        if top == 0.0 || sv.iter().any(|&x| x <= 1e-10 * top) {
            return Err(TransportError::RankDeficientField { at: u });
        }
        let q = xi.qr().q();
        for f in 0..s {
            for (sigma, d) in sample.dxi[f].iter().enumerate() {
                let dv = nalgebra::DVector::from_column_slice(d);
                let residual = &dv - &q * (q.transpose() * &dv);
                let speed = fr.g.get(sigma, sigma).sqrt();
                max_residual = max_residual.max(residual.norm() / speed);
            }
        }
    }
    Ok(SubbundleReport { parallel: max_residual <= tol, max_residual })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    /// Largest principal angle between tangent spaces along one generator,
    /// per sample point.
    pub per_generator: Vec<(Vec<f64>, f64)>,
    pub max_angle: f64,
    /// Outcome of the parallel-subbundle precondition.
    pub precondition: SubbundleReport,
}

/// Sample the swept variety `(u, t) -> f(u) + t^f B_f(u)` and measure how
/// much its tangent space turns along each generator plane (fixed `u`).
/// `fiber` lists the fiber coordinates `t` to sample on each generator.
/// With `enforce_precondition` the field must pass
/// [`parallel_subbundle_check`] first.
pub fn swept_tangent_constancy(
    spec: &ImmersionSpec,
    field: &NormalSubbundleField,
    grid: &Grid,
    fiber: &[Vec<f64>],
    tol: f64,
    enforce_precondition: bool,
) -> Result<SweepReport, TransportError> {
    let precondition = parallel_subbundle_check(spec, field, grid, tol)?;
    if enforce_precondition && !precondition.parallel {
        return Err(TransportError::Precondition(format!(
            "field is not parallel in the normal connection (residual {:.3e})",
            precondition.max_residual
        )));
    }
    let s = field.len();
    if fiber.iter().any(|t| t.len() != s) || fiber.len() < 2 {
        return Err(TransportError::Precondition(format!("need at least two fiber samples with {s} coordinates")));
    }
    let mut per_generator = Vec::new();
    let mut max_angle: f64 = 0.0;
    for idx in grid.indices() {
        let u = grid.node(&idx);
        let (sample, fr) = sample_field(spec, field, &u)?;
        let (n, r) = (spec.n(), spec.r());
        let tangent_at = |t: &[f64]| -> Vec<Vec<f64>> {
            let mut span: Vec<Vec<f64>> = (0..r)
                .map(|p| (0..n).map(|i| fr.tangent[p][i] + (0..s).map(|f| t[f] * sample.dvec[f][p][i]).sum::<f64>()).collect())
                .collect();
            span.extend(sample.vec.iter().cloned());
            span
        };
        let reference = tangent_at(&fiber[0]);
        let worst = fiber[1..].iter().map(|t| max_principal_angle(&reference, &tangent_at(t))).fold(0.0, f64::max);
        max_angle = max_angle.max(worst);
        per_generator.push((u, worst));
    }
    Ok(SweepReport { per_generator, max_angle, precondition })
}
