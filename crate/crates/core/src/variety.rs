//! Index ranges, the two variety data models, and their validation.
//!
//! Indices are 0-based within each class: normal indices `a` in `0..l`,
//! tangent indices `p` in `0..r`, hyperplane indices `alpha` in `0..N-n`.
//! The `c` quasitensor is stored as `c[a][p][q] = c^p_{aq}` (upper index
//! second), the second fundamental tensor as `b[a][p][q] = b^a_{pq}`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;
use crate::tensor::{Axis, AxisClass, Matrix, SmallTensor, TensorError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexRanges {
    /// Ambient dimension (or dimension of the variety, for degenerate-Gauss data).
    pub n: usize,
    /// Dimension of a normalized variety, or rank of the Gauss map.
    pub r: usize,
    /// Fiber dimension `n - r`.
    pub l: usize,
    /// Embedding dimension `N` for degenerate-Gauss data.
    pub big_n: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RangeError {
    #[error("need 1 <= r < n, got n = {n}, r = {r}")]
    BadDimensions { n: usize, r: usize },
    #[error("embedding dimension N = {big_n} must exceed n = {n}")]
    BadEmbedding { n: usize, big_n: usize },
}

impl IndexRanges {
    pub fn new(n: usize, r: usize) -> Result<Self, RangeError> {
        if r == 0 || r >= n {
            return Err(RangeError::BadDimensions { n, r });
        }
        Ok(IndexRanges { n, r, l: n - r, big_n: None })
    }

    pub fn with_embedding(n: usize, r: usize, big_n: usize) -> Result<Self, RangeError> {
        let mut ranges = Self::new(n, r)?;
        if big_n <= n {
            return Err(RangeError::BadEmbedding { n, big_n });
        }
        ranges.big_n = Some(big_n);
        Ok(ranges)
    }

    /// Number of hyperplane indices `N - n` (zero without an embedding).
    pub fn hyperplanes(&self) -> usize {
        self.big_n.map_or(0, |big| big - self.n)
    }

    pub fn axis(&self, class: AxisClass) -> Axis {
        let extent = match class {
            AxisClass::Normal => self.l,
            AxisClass::Tangent => self.r,
            AxisClass::Hyperplane => self.hyperplanes(),
            AxisClass::Point => self.l + 1,
        };
        Axis::new(class, extent)
    }

    pub fn axes(&self, classes: &[AxisClass]) -> Vec<Axis> {
        classes.iter().map(|&c| self.axis(c)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ambient {
    Projective,
    Affine,
    Euclidean,
}

impl Ambient {
    /// Affine and Euclidean data both carry an affine normalization.
    pub fn is_affine(self) -> bool {
        matches!(self, Ambient::Affine | Ambient::Euclidean)
    }

    pub fn name(self) -> &'static str {
        match self {
            Ambient::Projective => "projective",
            Ambient::Affine => "affine",
            Ambient::Euclidean => "euclidean",
        }
    }
}

/// The `(b, c, l, g)` family of a normalized variety at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct FundamentalTensors<S> {
    pub ranges: IndexRanges,
    pub ambient: Ambient,
    /// `b[a][p][q] = b^a_{pq}`.
    pub b: SmallTensor<S>,
    /// `c[a][p][q] = c^p_{aq}`.
    pub c: SmallTensor<S>,
    /// `l[p][q] = l_{pq}`.
    pub l: SmallTensor<S>,
    pub g_normal: Option<SmallTensor<S>>,
    pub g_tangent: Option<SmallTensor<S>>,
}

const B_AXES: [AxisClass; 3] = [AxisClass::Normal, AxisClass::Tangent, AxisClass::Tangent];
const PQ_AXES: [AxisClass; 2] = [AxisClass::Tangent, AxisClass::Tangent];
const AB_AXES: [AxisClass; 2] = [AxisClass::Normal, AxisClass::Normal];

impl<S: Scalar> FundamentalTensors<S> {
    /// Build from nested coefficient arrays. `b` and `c` are indexed
    /// `[a][p][q]`, `l` and `g_tangent` `[p][q]`, `g_normal` `[a][b]`.
    pub fn from_arrays(
        ranges: IndexRanges,
        ambient: Ambient,
        b: Vec<Vec<Vec<S>>>,
        c: Vec<Vec<Vec<S>>>,
        l: Option<Vec<Vec<S>>>,
        g_normal: Option<Vec<Vec<S>>>,
        g_tangent: Option<Vec<Vec<S>>>,
    ) -> Result<Self, TensorError> {
        let b = tensor3(&ranges, "b", b)?.with_symmetry(1, 2);
        let c = tensor3(&ranges, "c", c)?;
        let l = match l {
            Some(l) => tensor2(ranges.axes(&PQ_AXES), "l", l)?,
            None => SmallTensor::zeros(ranges.axes(&PQ_AXES)),
        };
        let g_normal = g_normal.map(|g| tensor2(ranges.axes(&AB_AXES), "g_normal", g)).transpose()?;
        let g_tangent = g_tangent.map(|g| tensor2(ranges.axes(&PQ_AXES), "g_tangent", g)).transpose()?;
        Ok(FundamentalTensors {
            ranges,
            ambient,
            b,
            c,
            l,
            g_normal: g_normal.map(|g| g.with_symmetry(0, 1)),
            g_tangent: g_tangent.map(|g| g.with_symmetry(0, 1)),
        })
    }

    pub fn b_at(&self, a: usize, p: usize, q: usize) -> &S {
        self.b.get(&[a, p, q])
    }

    /// `c^p_{aq}`.
    pub fn c_at(&self, a: usize, p: usize, q: usize) -> &S {
        self.c.get(&[a, p, q])
    }

    pub fn l_at(&self, p: usize, q: usize) -> &S {
        self.l.get(&[p, q])
    }

    /// `B^a = (b^a_{pq})`.
    pub fn b_matrix(&self, a: usize) -> Matrix<S> {
        let r = self.ranges.r;
        Matrix::from_fn(r, r, |p, q| self.b_at(a, p, q).clone())
    }

    /// `C_a = (c^p_{aq})`, row `p`, column `q`.
    pub fn c_matrix(&self, a: usize) -> Matrix<S> {
        let r = self.ranges.r;
        Matrix::from_fn(r, r, |p, q| self.c_at(a, p, q).clone())
    }

    pub fn g_tangent_matrix(&self) -> Option<Matrix<S>> {
        let r = self.ranges.r;
        self.g_tangent.as_ref().map(|g| Matrix::from_fn(r, r, |p, q| g.get(&[p, q]).clone()))
    }

    pub fn g_normal_matrix(&self) -> Option<Matrix<S>> {
        let l = self.ranges.l;
        self.g_normal.as_ref().map(|g| Matrix::from_fn(l, l, |a, b| g.get(&[a, b]).clone()))
    }

    pub fn check_shapes(&self) -> Result<(), TensorError> {
        self.b.expect_shape("b", &self.ranges.axes(&B_AXES))?;
        self.c.expect_shape("c", &self.ranges.axes(&B_AXES))?;
        self.l.expect_shape("l", &self.ranges.axes(&PQ_AXES))?;
        if let Some(g) = &self.g_normal {
            g.expect_shape("g_normal", &self.ranges.axes(&AB_AXES))?;
        }
        if let Some(g) = &self.g_tangent {
            g.expect_shape("g_tangent", &self.ranges.axes(&PQ_AXES))?;
        }
        Ok(())
    }
}

fn tensor3<S: Scalar>(ranges: &IndexRanges, name: &str, data: Vec<Vec<Vec<S>>>) -> Result<SmallTensor<S>, TensorError> {
    let (l, r) = (ranges.l, ranges.r);
    if data.len() != l || data.iter().any(|m| m.len() != r || m.iter().any(|row| row.len() != r)) {
        return Err(TensorError::ShapeMismatch(format!("{name}: expected {l}x{r}x{r} array")));
    }
    SmallTensor::from_vec(ranges.axes(&B_AXES), data.into_iter().flatten().flatten().collect())
}

fn tensor2<S: Scalar>(axes: Vec<Axis>, name: &str, data: Vec<Vec<S>>) -> Result<SmallTensor<S>, TensorError> {
    let (m, k) = (axes[0].extent, axes[1].extent);
    if data.len() != m || data.iter().any(|row| row.len() != k) {
        return Err(TensorError::ShapeMismatch(format!("{name}: expected {m}x{k} array")));
    }
    SmallTensor::from_vec(axes, data.into_iter().flatten().collect())
}

/// `(B^alpha, C_a)` matrices of a variety with a degenerate Gauss map.
/// `C_0` is the identity and is not stored.
#[derive(Debug, Clone, PartialEq)]
pub struct DegenerateGaussTensors<S> {
    pub ranges: IndexRanges,
    /// `b[alpha][p][q] = b^alpha_{pq}`.
    pub b: SmallTensor<S>,
    /// `c[a][p][q] = c^p_{aq}`.
    pub c: SmallTensor<S>,
}

impl<S: Scalar> DegenerateGaussTensors<S> {
    pub fn from_matrices(ranges: IndexRanges, b: Vec<Matrix<S>>, c: Vec<Matrix<S>>) -> Result<Self, TensorError> {
        let r = ranges.r;
        if ranges.big_n.is_none() {
            return Err(TensorError::ShapeMismatch("degenerate-Gauss data needs an embedding dimension".into()));
        }
        if b.len() != ranges.hyperplanes() || c.len() != ranges.l {
            return Err(TensorError::ShapeMismatch(format!(
                "expected {} B matrices and {} C matrices, got {} and {}",
                ranges.hyperplanes(),
                ranges.l,
                b.len(),
                c.len()
            )));
        }
        if b.iter().chain(&c).any(|m| m.rows() != r || m.cols() != r) {
            return Err(TensorError::ShapeMismatch(format!("all matrices must be {r}x{r}")));
        }
        let bt = SmallTensor::from_fn(
            ranges.axes(&[AxisClass::Hyperplane, AxisClass::Tangent, AxisClass::Tangent]),
            |i| b[i[0]].get(i[1], i[2]).clone(),
        )
        .with_symmetry(1, 2);
        let ct = SmallTensor::from_fn(ranges.axes(&B_AXES), |i| c[i[0]].get(i[1], i[2]).clone());
        Ok(DegenerateGaussTensors { ranges, b: bt, c: ct })
    }

    pub fn b_matrix(&self, alpha: usize) -> Matrix<S> {
        let r = self.ranges.r;
        Matrix::from_fn(r, r, |p, q| self.b.get(&[alpha, p, q]).clone())
    }

    pub fn c_matrix(&self, a: usize) -> Matrix<S> {
        let r = self.ranges.r;
        Matrix::from_fn(r, r, |p, q| self.c.get(&[a, p, q]).clone())
    }

    /// `C_i` for `i` in `0..=l`, with `C_0` the identity.
    pub fn c_point_matrix(&self, i: usize) -> Matrix<S> {
        if i == 0 { Matrix::identity(self.ranges.r) } else { self.c_matrix(i - 1) }
    }

    pub fn check_shapes(&self) -> Result<(), TensorError> {
        if self.ranges.big_n.is_none() {
            return Err(TensorError::ShapeMismatch("missing embedding dimension".into()));
        }
        self.b.expect_shape("b", &self.ranges.axes(&[AxisClass::Hyperplane, AxisClass::Tangent, AxisClass::Tangent]))?;
        self.c.expect_shape("c", &self.ranges.axes(&B_AXES))
    }
}

/// A failed invariant. Indices are 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// `b^a_{pq} != b^a_{qp}`.
    SecondFormAsymmetric { a: usize, p: usize, q: usize },
    /// Affine or Euclidean data with `l_{pq} != 0`.
    AffineLNonzero { p: usize, q: usize },
    MissingMetric { which: MetricKind },
    MetricAsymmetric { which: MetricKind },
    /// `c^p_{aq} != -g^{ps} g_{ac} b^c_{sq}`.
    MetricCompatibility { a: usize, p: usize, q: usize },
    /// `B^alpha C_i` not symmetric at `(p, q)`; `i = 0` is the identity.
    GaussCompatibility { alpha: usize, i: usize, p: usize, q: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Normal,
    Tangent,
}

impl Violation {
    /// Short stable label for reports.
    pub fn label(&self) -> &'static str {
        match self {
            Violation::SecondFormAsymmetric { .. } => "second-form-symmetry",
            Violation::AffineLNonzero { .. } => "affine-l-vanishes",
            Violation::MissingMetric { .. } => "metric-present",
            Violation::MetricAsymmetric { .. } => "metric-symmetry",
            Violation::MetricCompatibility { .. } => "metric-compatibility",
            Violation::GaussCompatibility { .. } => "gauss-compatibility",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::SecondFormAsymmetric { a, p, q } => write!(f, "b[{a}] not symmetric at ({p}, {q})"),
            Violation::AffineLNonzero { p, q } => write!(f, "l[{p}][{q}] must vanish for an affine normalization"),
            Violation::MissingMetric { which } => write!(f, "euclidean data without {which:?} metric"),
            Violation::MetricAsymmetric { which } => write!(f, "{which:?} metric not symmetric"),
            Violation::MetricCompatibility { a, p, q } => {
                write!(f, "c[{a}][{p}][{q}] differs from -g^(-1) g b")
            }
            Violation::GaussCompatibility { alpha, i, p, q } => {
                write!(f, "B[{alpha}] C[{i}] not symmetric at ({p}, {q})")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, label: &str) -> bool {
        self.violations.iter().any(|v| v.label() == label)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidationError {
    #[error(transparent)]
    ShapeMismatch(#[from] TensorError),
    #[error("{0:?} metric is singular")]
    SingularMetric(MetricKind),
}

/// Check the invariants of normalized data: symmetry of `b`, vanishing `l`
/// for affine normalizations, and for Euclidean data symmetric nondegenerate
/// metrics with `c^p_{as} = -g^{pq} g_{ac} b^c_{qs}`.
pub fn validate_normalized<S: Scalar>(
    data: &FundamentalTensors<S>,
    tol: f64,
) -> Result<ValidationReport, ValidationError> {
    data.check_shapes()?;
    let IndexRanges { r, l, .. } = data.ranges;
    let mut report = ValidationReport::default();

    for idx in data.b.symmetry_violations(tol) {
        report.violations.push(Violation::SecondFormAsymmetric { a: idx[0], p: idx[1], q: idx[2] });
    }

    if data.ambient.is_affine() {
        for p in 0..r {
            for q in 0..r {
                if !data.l_at(p, q).near_zero(tol) {
                    report.violations.push(Violation::AffineLNonzero { p, q });
                }
            }
        }
    }

    if data.ambient == Ambient::Euclidean {
        let (gn, gt) = match (data.g_normal_matrix(), data.g_tangent_matrix()) {
            (Some(gn), Some(gt)) => (gn, gt),
            (gn, gt) => {
                if gn.is_none() {
                    report.violations.push(Violation::MissingMetric { which: MetricKind::Normal });
                }
                if gt.is_none() {
                    report.violations.push(Violation::MissingMetric { which: MetricKind::Tangent });
                }
                return Ok(report);
            }
        };
        for (m, which) in [(&gn, MetricKind::Normal), (&gt, MetricKind::Tangent)] {
            if !m.is_symmetric(tol) {
                report.violations.push(Violation::MetricAsymmetric { which });
            }
        }
        let gt_inv = invert_metric(&gt, tol).ok_or(ValidationError::SingularMetric(MetricKind::Tangent))?;
        invert_metric(&gn, tol).ok_or(ValidationError::SingularMetric(MetricKind::Normal))?;
        let expected = metric_c_tensor(&data.b, &gn, &gt_inv, r, l);
        for idx in data.c.indices() {
            let want = expected.get(&idx);
            let scale = 1.0 + want.magnitude();
            if !data.c.get(&idx).near(want, tol * scale) {
                report.violations.push(Violation::MetricCompatibility { a: idx[0], p: idx[1], q: idx[2] });
            }
        }
    }
    Ok(report)
}

pub(crate) fn invert_metric<S: Scalar>(g: &Matrix<S>, tol: f64) -> Option<Matrix<S>> {
    let scale = g.max_magnitude().max(1.0);
    g.try_inverse(|x| x.near_zero(tol * scale * 1e-3))
}

/// `c^p_{as} = -g^{pq} g_{ac} b^c_{qs}`, stored `[a][p][s]`.
pub fn metric_c_tensor<S: Scalar>(
    b: &SmallTensor<S>,
    g_normal: &Matrix<S>,
    g_tangent_inv: &Matrix<S>,
    r: usize,
    l: usize,
) -> SmallTensor<S> {
    // lowered[a][q][s] = g_{ac} b^c_{qs}
    let lowered = SmallTensor::from_fn(b.axes().to_vec(), |i| {
        (0..l).fold(S::zero(), |acc, c| acc + g_normal.get(i[0], c).clone() * b.get(&[c, i[1], i[2]]).clone())
    });
    SmallTensor::from_fn(b.axes().to_vec(), |i| {
        let (a, p, s) = (i[0], i[1], i[2]);
        let sum = (0..r).fold(S::zero(), |acc, q| acc + g_tangent_inv.get(p, q).clone() * lowered.get(&[a, q, s]).clone());
        -sum
    })
}

/// Check that every `H_i^alpha = B^alpha C_i` is symmetric, `C_0 = I`.
pub fn validate_degenerate_gauss<S: Scalar>(
    data: &DegenerateGaussTensors<S>,
    tol: f64,
) -> Result<ValidationReport, ValidationError> {
    data.check_shapes()?;
    let mut report = ValidationReport::default();
    for alpha in 0..data.ranges.hyperplanes() {
        let b = data.b_matrix(alpha);
        for i in 0..=data.ranges.l {
            let h = b.mul(&data.c_point_matrix(i));
            for p in 0..data.ranges.r {
                for q in p + 1..data.ranges.r {
                    let scale = 1.0 + h.get(p, q).magnitude();
                    if !h.get(p, q).near(h.get(q, p), tol * scale) {
                        report.violations.push(Violation::GaussCompatibility { alpha, i, p, q });
                    }
                }
            }
        }
    }
    Ok(report)
}
