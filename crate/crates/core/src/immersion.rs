//! Explicit immersions `f: U -> R^n`, their second-order jets, and the
//! Euclidean frame data extracted from them: metric, orthonormal normal
//! frame, second fundamental tensor, `c` tensor and connection coefficients.
//!
//! Text format, one `key: value` line each, `#` starts a comment:
//!
//! ```text
//! params: u, v
//! components: 2*cos(u)*cos(v), 2*cos(u)*sin(v), 2*sin(u)
//! domain: [-1.5, 1.5], [-pi, pi]
//! ```

use nalgebra::DMatrix;
use thiserror::Error;

use crate::expr::{DomainError, Expr};
use crate::jet::{seed1, seed2, Dual1, Dual2, Real};
use crate::parser::{parse_expr_at, parse_expr_list, split_top_level, Origin, ParseError, ParseErrorKind};
use crate::scalar::Num;
use crate::tensor::Matrix;
use crate::variety::{Ambient, FundamentalTensors, IndexRanges};

/// Projected basis vectors shorter than this are skipped when building the
/// normal frame.
pub const NORMAL_SKIP_THRESHOLD: f64 = 1e-8;
/// Relative singular value below which the Jacobian is rank deficient.
pub const RANK_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ImmersionError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("invalid immersion: {0}")]
    Shape(String),
    #[error("jacobian has rank {rank} < {expected} at {point:?}")]
    RankDeficient { point: Vec<f64>, rank: usize, expected: usize },
    #[error("point {point:?} lies outside the domain box")]
    OutsideDomain { point: Vec<f64> },
    #[error(transparent)]
    Domain(#[from] DomainError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImmersionSpec {
    params: Vec<String>,
    sources: Vec<String>,
    components: Vec<Expr>,
    domain: Vec<(f64, f64)>,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> ParseError {
    ParseError { kind: ParseErrorKind::SyntaxError, line, column, message: message.into() }
}

fn check_param_names(params: &[String], origin: Origin) -> Result<(), ParseError> {
    for (i, name) in params.iter().enumerate() {
        let valid = name.chars().next().is_some_and(|c| c.is_alphabetic() || c == '_')
            && name.chars().all(|c| c.is_alphanumeric() || c == '_');
        if !valid {
            return Err(syntax(origin.line, origin.column, format!("invalid parameter name `{name}`")));
        }
        if name == "pi" || crate::expr::Func::from_name(name).is_some() {
            return Err(syntax(origin.line, origin.column, format!("parameter name `{name}` is reserved")));
        }
        if params[..i].contains(name) {
            return Err(syntax(origin.line, origin.column, format!("duplicate parameter `{name}`")));
        }
    }
    Ok(())
}

/// Parse a constant bound such as `-pi/2`.
fn parse_bound(text: &str, origin: Origin) -> Result<f64, ParseError> {
    let e = parse_expr_at(text, &[], origin)?;
    let v = e.eval::<f64>(&[]).map_err(|err| syntax(origin.line, origin.column, err.to_string()))?;
    if v.is_finite() { Ok(v) } else { Err(syntax(origin.line, origin.column, "domain bound is not finite")) }
}

/// Parse `[lo, hi], [lo, hi], ...`.
pub fn parse_domain(text: &str, origin: Origin) -> Result<Vec<(f64, f64)>, ParseError> {
    let mut out = Vec::new();
    for (piece, at) in split_top_level(text, origin) {
        let lead = piece.len() - piece.trim_start().len();
        let at = Origin { line: at.line, column: at.column + lead };
        let trimmed = piece.trim();
        let inner = trimmed
            .strip_prefix('[')
            .and_then(|s| s.strip_suffix(']'))
            .ok_or_else(|| syntax(at.line, at.column, "expected an interval `[lo, hi]`"))?;
        let bounds = split_top_level(inner, Origin { line: at.line, column: at.column + 1 });
        if bounds.len() != 2 {
            return Err(syntax(at.line, at.column, "an interval needs exactly two bounds"));
        }
        let lo = parse_bound(&bounds[0].0, bounds[0].1)?;
        let hi = parse_bound(&bounds[1].0, bounds[1].1)?;
        if lo > hi {
            return Err(syntax(at.line, at.column, format!("empty interval [{lo}, {hi}]")));
        }
        out.push((lo, hi));
    }
    Ok(out)
}

impl ImmersionSpec {
    /// Build and check: `r < n`, one interval per parameter, and full rank
    /// Jacobian at the center of the domain box.
    pub fn new(params: Vec<String>, components: &str, domain: Vec<(f64, f64)>) -> Result<Self, ImmersionError> {
        let spec = Self::without_rank_check(params, components, domain)?;
        if spec.r() >= spec.n() {
            return Err(ImmersionError::Shape(format!(
                "need fewer parameters than components, got r = {} and n = {}",
                spec.r(),
                spec.n()
            )));
        }
        let center = spec.center();
        let jet = evaluate_jet2(&spec, &center)?;
        let rank = jacobian_rank(&jet.first);
        if rank < spec.r() {
            return Err(ImmersionError::RankDeficient { point: center, rank, expected: spec.r() });
        }
        Ok(spec)
    }

    /// Parse components and domain without the dimension and rank checks.
    /// Suitable for maps that are only differentiated.
    pub fn without_rank_check(params: Vec<String>, components: &str, domain: Vec<(f64, f64)>) -> Result<Self, ImmersionError> {
        check_param_names(&params, Origin::default())?;
        let parsed = parse_expr_list(components, &params, Origin::default())?;
        Self::assemble(params, components, parsed, domain)
    }

    fn assemble(params: Vec<String>, components: &str, parsed: Vec<Expr>, domain: Vec<(f64, f64)>) -> Result<Self, ImmersionError> {
        if params.is_empty() {
            return Err(ImmersionError::Shape("at least one parameter is required".into()));
        }
        if domain.len() != params.len() {
            return Err(ImmersionError::Shape(format!("{} parameters but {} domain intervals", params.len(), domain.len())));
        }
        if domain.iter().any(|(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo <= hi)) {
            return Err(ImmersionError::Shape("domain intervals must be finite with lo <= hi".into()));
        }
        let sources = split_top_level(components, Origin::default()).into_iter().map(|(s, _)| s.trim().to_string()).collect();
        Ok(ImmersionSpec { params, sources, components: parsed, domain })
    }

    pub fn params(&self) -> &[String] {
        &self.params
    }

    /// Component source texts.
    pub fn sources(&self) -> &[String] {
        &self.sources
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn domain(&self) -> &[(f64, f64)] {
        &self.domain
    }

    pub fn r(&self) -> usize {
        self.params.len()
    }

    pub fn n(&self) -> usize {
        self.components.len()
    }

    pub fn center(&self) -> Vec<f64> {
        self.domain.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect()
    }

    pub fn contains(&self, u: &[f64]) -> bool {
        u.len() == self.r()
            && u.iter().zip(&self.domain).all(|(x, (lo, hi))| {
                let slack = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
                *x >= lo - slack && *x <= hi + slack
            })
    }

    pub fn check_point(&self, u: &[f64]) -> Result<(), ImmersionError> {
        if self.contains(u) { Ok(()) } else { Err(ImmersionError::OutsideDomain { point: u.to_vec() }) }
    }

    /// Evaluate all components at `u` over any [`Real`] type.
    pub fn eval<T: Real>(&self, u: &[T]) -> Result<Vec<T>, DomainError> {
        self.components.iter().map(|e| e.eval(u)).collect()
    }
}

/// Parse the `params` / `components` / `domain` text format.
pub fn parse_immersion(text: &str) -> Result<ImmersionSpec, ImmersionError> {
    let mut params: Option<(Vec<String>, Origin)> = None;
    let mut components: Option<(String, Origin)> = None;
    let mut domain: Option<(String, Origin)> = None;
    let mut last_line = 1;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        let content = raw.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        let indent = content.len() - content.trim_start().len();
        let Some(colon) = content.find(':') else {
            return Err(syntax(line, indent + 1, "expected `key: value`").into());
        };
        let key = content[..colon].trim();
        let value = &content[colon + 1..];
        let origin = Origin { line, column: colon + 2 };
        let slot = match key {
            "params" => {
                if params.is_some() {
                    return Err(syntax(line, indent + 1, "duplicate key `params`").into());
                }
                let names: Vec<String> = value.split(',').map(|s| s.trim().to_string()).collect();
                check_param_names(&names, Origin { line, column: colon + 2 })?;
                params = Some((names, origin));
                continue;
            }
            "components" => &mut components,
            "domain" => &mut domain,
            other => return Err(syntax(line, indent + 1, format!("unknown key `{other}`")).into()),
        };
        if slot.is_some() {
            return Err(syntax(line, indent + 1, format!("duplicate key `{key}`")).into());
        }
        *slot = Some((value.to_string(), origin));
    }
    let missing = |k: &str| ImmersionError::from(syntax(last_line, 1, format!("missing key `{k}`")));
    let (params, _) = params.ok_or_else(|| missing("params"))?;
    let (comp_text, comp_origin) = components.ok_or_else(|| missing("components"))?;
    let (dom_text, dom_origin) = domain.ok_or_else(|| missing("domain"))?;
    let parsed = parse_expr_list(&comp_text, &params, comp_origin)?;
    let dom = parse_domain(&dom_text, dom_origin)?;
    if dom.len() != params.len() {
        return Err(syntax(dom_origin.line, dom_origin.column, format!("{} parameters but {} intervals", params.len(), dom.len())).into());
    }
    let spec = ImmersionSpec::assemble(params, &comp_text, parsed, dom)?;
    ImmersionSpec::new(spec.params, &spec.sources.join(", "), spec.domain)
}

/// Value, first and second derivatives of an immersion at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet2 {
    pub value: Vec<f64>,
    /// `first[i][q] = d f_i / d u^q`.
    pub first: Vec<Vec<f64>>,
    /// `second[i][s][t] = d^2 f_i / d u^s d u^t`.
    pub second: Vec<Vec<Vec<f64>>>,
}

pub fn evaluate_jet2(spec: &ImmersionSpec, u: &[f64]) -> Result<Jet2, ImmersionError> {
    spec.check_point(u)?;
    let r = spec.r();
    let values = spec.eval(&seed2(u))?;
    Ok(Jet2 {
        value: values.iter().map(|f| f.value.value).collect(),
        first: values.iter().map(|f| (0..r).map(|q| f.value.d(q)).collect()).collect(),
        second: values.iter().map(|f| hessian(f, r)).collect(),
    })
}

/// Second partials of a second-order jet, averaged over the two
/// differentiation orders so the result is exactly symmetric.
fn hessian(f: &Dual2, r: usize) -> Vec<Vec<f64>> {
    (0..r).map(|s| (0..r).map(|t| 0.5 * (f.d(s).d(t) + f.d(t).d(s))).collect()).collect()
}

/// Numerical rank of an `n x r` matrix given by rows.
pub fn jacobian_rank(first: &[Vec<f64>]) -> usize {
    let n = first.len();
    let r = first.first().map_or(0, Vec::len);
    if first.iter().flatten().any(|x| !x.is_finite()) {
        return 0;
    }
    let m = DMatrix::from_fn(n, r, |i, j| first[i][j]);
    let sv = m.singular_values();
    let top = sv.iter().cloned().fold(0.0, f64::max);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_THRESHOLD * top).count()
}

fn dot<T: Num>(x: &[T], y: &[T]) -> T {
    x.iter().zip(y).fold(T::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
}

/// Gram matrix `g_{pq} = A_p . A_q`.
pub fn gram<T: Num>(vectors: &[Vec<T>]) -> Matrix<T> {
    let r = vectors.len();
    Matrix::from_fn(r, r, |p, q| dot(&vectors[p], &vectors[q]))
}

/// Orthonormal frame of the orthogonal complement of `tangent` in `R^n`:
/// project the standard basis vectors in index order and apply Gram-Schmidt,
/// skipping projections shorter than [`NORMAL_SKIP_THRESHOLD`].
pub fn normal_frame<T: Real>(tangent: &[Vec<T>], n: usize) -> Vec<Vec<T>> {
    let r = tangent.len();
    let l = n - r;
    let g_inv = gram(tangent).try_inverse(|x| x.magnitude() == 0.0).expect("tangent vectors are independent");
    // coefficient vectors w_p = sum_q g^{pq} A_q
    let dual: Vec<Vec<T>> = (0..r)
        .map(|p| (0..n).map(|i| (0..r).fold(T::zero(), |acc, q| acc + g_inv.get(p, q).clone() * tangent[q][i].clone())).collect())
        .collect();
    let mut frame: Vec<Vec<T>> = Vec::with_capacity(l);
    for e in 0..n {
        if frame.len() == l {
            break;
        }
        // e_e - sum_p A_p (w_p)_e
        let mut v: Vec<T> = (0..n)
            .map(|i| {
                let base = if i == e { T::one() } else { T::zero() };
                (0..r).fold(base, |acc, p| acc - tangent[p][i].clone() * dual[p][e].clone())
            })
            .collect();
        for w in &frame {
            let k = dot(&v, w);
            v = v.iter().zip(w).map(|(x, y)| x.clone() - k.clone() * y.clone()).collect();
        }
        let norm = dot(&v, &v).sqrt();
        if norm.value_f64() < NORMAL_SKIP_THRESHOLD {
            continue;
        }
        frame.push(v.into_iter().map(|x| x / norm.clone()).collect());
    }
    frame
}

/// Frame data at one point of an immersion.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameData {
    pub point: Vec<f64>,
    /// Parameter values.
    pub at: Vec<f64>,
    /// `A_p = df/du^p`.
    pub tangent: Vec<Vec<f64>>,
    /// Orthonormal `A_a`.
    pub normal: Vec<Vec<f64>>,
    /// `dA_a/du^s`, indexed `[a][s]`.
    pub normal_derivatives: Vec<Vec<Vec<f64>>>,
    pub g: Matrix<f64>,
    pub g_inv: Matrix<f64>,
    /// `b^a_{pq} = A_a . d^2 f / du^p du^q`, indexed `[a][p][q]`.
    pub b: Vec<Vec<Vec<f64>>>,
    /// `c^p_{aq} = -g^{pu} b^a_{uq}`, indexed `[a][p][q]`.
    pub c: Vec<Vec<Vec<f64>>>,
    /// `Gamma^p_{qs}`, component of `dA_q/du^s` along `A_p`, indexed `[p][q][s]`.
    pub christoffel: Vec<Vec<Vec<f64>>>,
    /// `gamma^a_{bs} = A_a . dA_b/du^s`, indexed `[a][b][s]`.
    pub normal_connection: Vec<Vec<Vec<f64>>>,
}

impl FrameData {
    pub fn r(&self) -> usize {
        self.tangent.len()
    }

    pub fn l(&self) -> usize {
        self.normal.len()
    }

    /// Euclidean normalized data with `g_{ab} = δ_{ab}` and `l = 0`.
    pub fn fundamental_tensors(&self) -> FundamentalTensors<f64> {
        let (r, l) = (self.r(), self.l());
        let ranges = IndexRanges::new(r + l, r).expect("frame has r < n");
        let identity = Matrix::<f64>::identity(l).to_rows();
        FundamentalTensors::from_arrays(
            ranges,
            Ambient::Euclidean,
            self.b.clone(),
            self.c.clone(),
            None,
            Some(identity),
            Some(self.g.to_rows()),
        )
        .expect("frame shapes are consistent")
    }
}

fn tangent_jets(spec: &ImmersionSpec, u: &[f64]) -> Result<(Vec<f64>, Vec<Vec<Dual1>>, Vec<Vec<Vec<f64>>>), ImmersionError> {
    spec.check_point(u)?;
    let r = spec.r();
    let values = spec.eval(&seed2(u))?;
    let point = values.iter().map(|f| f.value.value).collect();
    // tangent[p][i] carries d f_i/du^p and its derivatives d^2 f_i/du^p du^s
    let tangent: Vec<Vec<Dual1>> = (0..r).map(|p| values.iter().map(|f| f.d(p)).collect()).collect();
    let second = values.iter().map(|f| hessian(f, r)).collect();
    Ok((point, tangent, second))
}

fn ensure_rank(tangent: &[Vec<Dual1>], u: &[f64]) -> Result<(), ImmersionError> {
    let r = tangent.len();
    let n = tangent.first().map_or(0, Vec::len);
    let rows: Vec<Vec<f64>> = (0..n).map(|i| (0..r).map(|p| tangent[p][i].value).collect()).collect();
    let rank = jacobian_rank(&rows);
    if rank < r {
        return Err(ImmersionError::RankDeficient { point: u.to_vec(), rank, expected: r });
    }
    Ok(())
}

pub fn extract_frames(spec: &ImmersionSpec, u: &[f64]) -> Result<FrameData, ImmersionError> {
    let (point, tangent_j, second) = tangent_jets(spec, u)?;
    ensure_rank(&tangent_j, u)?;
    let (n, r) = (spec.n(), spec.r());
    let normal_j = normal_frame(&tangent_j, n);
    let l = normal_j.len();
    if l != n - r {
        return Err(ImmersionError::RankDeficient { point: u.to_vec(), rank: n - l, expected: r });
    }
    let tangent: Vec<Vec<f64>> = tangent_j.iter().map(|v| v.iter().map(|x| x.value).collect()).collect();
    let normal: Vec<Vec<f64>> = normal_j.iter().map(|v| v.iter().map(|x| x.value).collect()).collect();
    let normal_derivatives: Vec<Vec<Vec<f64>>> =
        normal_j.iter().map(|v| (0..r).map(|s| v.iter().map(|x| x.d(s)).collect()).collect()).collect();
    let g = gram(&tangent);
    let g_inv = g.try_inverse(|x| *x == 0.0).expect("rank checked");
    // f_pq as vectors
    let fpq = |p: usize, q: usize| -> Vec<f64> { second.iter().map(|row: &Vec<Vec<f64>>| row[p][q]).collect() };
    let b: Vec<Vec<Vec<f64>>> = normal.iter().map(|na| (0..r).map(|p| (0..r).map(|q| dot(na, &fpq(p, q))).collect()).collect()).collect();
    let c: Vec<Vec<Vec<f64>>> = (0..l)
        .map(|a| (0..r).map(|p| (0..r).map(|q| -(0..r).map(|w| g_inv.get(p, w) * b[a][w][q]).sum::<f64>()).collect()).collect())
        .collect();
    let christoffel = christoffel_from(&tangent, &g_inv, &fpq);
    let normal_connection: Vec<Vec<Vec<f64>>> = (0..l)
        .map(|a| (0..l).map(|bb| (0..r).map(|s| dot(&normal[a], &normal_derivatives[bb][s])).collect()).collect())
        .collect();
    Ok(FrameData {
        point,
        at: u.to_vec(),
        tangent,
        normal,
        normal_derivatives,
        g,
        g_inv,
        b,
        c,
        christoffel,
        normal_connection,
    })
}

fn christoffel_from(tangent: &[Vec<f64>], g_inv: &Matrix<f64>, fpq: &dyn Fn(usize, usize) -> Vec<f64>) -> Vec<Vec<Vec<f64>>> {
    let r = tangent.len();
    // lowered[w][q][s] = A_w . f_qs
    let lowered: Vec<Vec<Vec<f64>>> =
        (0..r).map(|w| (0..r).map(|q| (0..r).map(|s| dot(&tangent[w], &fpq(q, s))).collect()).collect()).collect();
    (0..r)
        .map(|p| (0..r).map(|q| (0..r).map(|s| (0..r).map(|w| g_inv.get(p, w) * lowered[w][q][s]).sum()).collect()).collect())
        .collect()
}

/// `Gamma^p_{qs}` alone, without building the normal frame.
pub fn christoffel_at(spec: &ImmersionSpec, u: &[f64]) -> Result<Vec<Vec<Vec<f64>>>, ImmersionError> {
    Ok(tangent_connection(spec, u)?.0)
}

/// `Gamma^p_{qs}` together with the metric `g_{pq}`.
pub fn tangent_connection(spec: &ImmersionSpec, u: &[f64]) -> Result<(Vec<Vec<Vec<f64>>>, Matrix<f64>), ImmersionError> {
    let (_, tangent_j, second) = tangent_jets(spec, u)?;
    ensure_rank(&tangent_j, u)?;
    let tangent: Vec<Vec<f64>> = tangent_j.iter().map(|v| v.iter().map(|x| x.value).collect()).collect();
    let g = gram(&tangent);
    let g_inv = g.try_inverse(|x| *x == 0.0).expect("rank checked");
    let fpq = |p: usize, q: usize| -> Vec<f64> { second.iter().map(|row: &Vec<Vec<f64>>| row[p][q]).collect() };
    Ok((christoffel_from(&tangent, &g_inv, &fpq), g))
}

/// Tangential and normal connection coefficients `(Gamma^p_{qs}, gamma^a_{bs})`.
#[allow(clippy::type_complexity)]
pub fn connection_coefficients(spec: &ImmersionSpec, u: &[f64]) -> Result<(Vec<Vec<Vec<f64>>>, Vec<Vec<Vec<f64>>>), ImmersionError> {
    let frames = extract_frames(spec, u)?;
    Ok((frames.christoffel, frames.normal_connection))
}

/// First derivatives of the components at `u` (values and Jacobian rows).
pub fn evaluate_jet1(spec: &ImmersionSpec, u: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>), ImmersionError> {
    spec.check_point(u)?;
    let r = spec.r();
    let values = spec.eval(&seed1(u))?;
    Ok((values.iter().map(|f| f.value).collect(), values.iter().map(|f| (0..r).map(|q| f.d(q)).collect()).collect()))
}
