//! JSON variety specification files.
//!
//! A file holds either `tensors` or `immersion`, never both:
//!
//! ```json
//! {
//!   "label": "sphere of radius 2",
//!   "scalar_mode": "exact",
//!   "tensors": {
//!     "model": "normalized",
//!     "ambient": "euclidean",
//!     "n": 3, "r": 2,
//!     "b": { "axes": ["a", "p", "q"], "data": [[["1/2", 0], [0, "1/2"]]] },
//!     "c": { "axes": ["a", "p^", "q"], "data": [[["-1/2", 0], [0, "-1/2"]]] },
//!     "g_normal": { "axes": ["a", "b"], "data": [[1]] },
//!     "g_tangent": { "axes": ["p", "q"], "data": [[1, 0], [0, 1]] }
//!   }
//! }
//! ```
//!
//! Axis names fix the meaning of each nesting level: `a`, `b` run over
//! normals, `p`, `q` over tangent directions, `p^` is the upper tangent index
//! of `c^p_{aq}` and `alpha` runs over hyperplanes. Any order of the names is
//! accepted and the data is permuted accordingly. Coefficients are integers
//! or strings holding `p/q` fractions or decimals.

use std::fmt;

use serde::de::{self, Deserializer, SeqAccess, Visitor};
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::expr::Expr;
use crate::immersion::ImmersionSpec;
use crate::parser::{parse_expr, ParseError};
use crate::scalar::{parse_decimal, parse_rational, Rational, Scalar};
use crate::tensor::Matrix;
use crate::variety::{Ambient, DegenerateGaussTensors, FundamentalTensors, IndexRanges};

/// Input problem with file position when known.
#[derive(Debug, Clone, PartialEq)]
pub struct InputError {
    pub path: String,
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, "{}:{l}:{c}: {}", self.path, self.message),
            (Some(l), None) => write!(f, "{}:{l}: {}", self.path, self.message),
            _ => write!(f, "{}: {}", self.path, self.message),
        }
    }
}

impl std::error::Error for InputError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarMode {
    Exact,
    Float,
}

impl ScalarMode {
    pub fn name(self) -> &'static str {
        match self {
            ScalarMode::Exact => "exact",
            ScalarMode::Float => "float",
        }
    }
}

/// Nested coefficient arrays.
#[derive(Debug, Clone, PartialEq)]
pub enum Nested {
    Leaf(Rational),
    List(Vec<Nested>),
}

impl<'de> Deserialize<'de> for Nested {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = Nested;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an integer, a \"p/q\" string or an array")
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Nested, E> {
                Ok(Nested::Leaf(Rational::from_integer(v.into())))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Nested, E> {
                Ok(Nested::Leaf(Rational::from_integer(v.into())))
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Nested, E> {
                Err(E::custom(format!("non-integer number {v}; write it as a string such as \"1/3\" or \"0.25\"")))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Nested, E> {
                coefficient(v).map(Nested::Leaf).map_err(E::custom)
            }
            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Nested, A::Error> {
                let mut out = Vec::new();
                while let Some(x) = seq.next_element()? {
                    out.push(x);
                }
                Ok(Nested::List(out))
            }
        }
        d.deserialize_any(V)
    }
}

fn coefficient(text: &str) -> Result<Rational, String> {
    parse_rational(text)
        .ok()
        .or_else(|| {
            let t = text.trim();
            let (neg, body) = match t.strip_prefix('-') {
                Some(rest) => (true, rest),
                None => (false, t.strip_prefix('+').unwrap_or(t)),
            };
            parse_decimal(body).map(|v| if neg { -v } else { v })
        })
        .ok_or_else(|| format!("invalid coefficient `{text}`"))
        .and_then(|v| {
            // float mode converts every coefficient
            if Scalar::to_f64(&v).is_finite() { Ok(v) } else { Err(format!("coefficient `{text}` is out of range")) }
        })
}

/// A real number given as a JSON number or a constant expression string.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum RealText {
    Number(f64),
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorBlock {
    pub axes: Vec<String>,
    pub data: Nested,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    #[default]
    Normalized,
    DegenerateGauss,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorsBlock {
    #[serde(default)]
    pub model: Model,
    pub ambient: Option<Ambient>,
    pub n: usize,
    pub r: usize,
    pub big_n: Option<usize>,
    pub b: TensorBlock,
    pub c: TensorBlock,
    pub l: Option<TensorBlock>,
    pub g_normal: Option<TensorBlock>,
    pub g_tangent: Option<TensorBlock>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentBlock {
    pub coords: Vec<String>,
    pub t0: RealText,
    pub t1: RealText,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BundleName {
    #[default]
    Tangential,
    Normal,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransportBlock {
    #[serde(default)]
    pub bundle: BundleName,
    pub vector: Vec<f64>,
    pub path: Vec<SegmentBlock>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HolonomyBlock {
    pub corner: Option<Vec<RealText>>,
    pub axes: Option<[usize; 2]>,
    pub eps: Option<RealText>,
    pub delta: Option<RealText>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub lo: Vec<RealText>,
    pub hi: Vec<RealText>,
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParallelBlock {
    pub y0: Vec<f64>,
    pub grid: Option<GridBlock>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldBlock {
    pub frame: Option<Vec<Vec<String>>>,
    pub ambient: Option<Vec<Vec<String>>>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub field: FieldBlock,
    pub grid: Option<GridBlock>,
    pub fiber: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImmersionBlock {
    pub params: Vec<String>,
    pub components: Vec<String>,
    pub domain: Vec<[RealText; 2]>,
    pub point: Option<Vec<RealText>>,
    pub transport: Option<TransportBlock>,
    pub holonomy: Option<HolonomyBlock>,
    pub parallel: Option<ParallelBlock>,
    pub sweep: Option<SweepBlock>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VarietySpecFile {
    pub label: Option<String>,
    pub scalar_mode: Option<ScalarMode>,
    pub tensors: Option<TensorsBlock>,
    pub immersion: Option<ImmersionBlock>,
}

/// Tensor data in one of the two models.
#[derive(Debug, Clone, PartialEq)]
pub enum TensorData<S> {
    Normalized(FundamentalTensors<S>),
    DegenerateGauss(DegenerateGaussTensors<S>),
}

impl TensorData<Rational> {
    pub fn to_float(&self) -> TensorData<f64> {
        use crate::scalar::Scalar;
        let f = |x: &Rational| x.to_f64();
        match self {
            TensorData::Normalized(t) => TensorData::Normalized(FundamentalTensors {
                ranges: t.ranges,
                ambient: t.ambient,
                b: t.b.map(f),
                c: t.c.map(f),
                l: t.l.map(f),
                g_normal: t.g_normal.as_ref().map(|g| g.map(f)),
                g_tangent: t.g_tangent.as_ref().map(|g| g.map(f)),
            }),
            TensorData::DegenerateGauss(t) => {
                TensorData::DegenerateGauss(DegenerateGaussTensors { ranges: t.ranges, b: t.b.map(f), c: t.c.map(f) })
            }
        }
    }
}

/// Path segment in `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentInput {
    pub coords: Vec<String>,
    pub t0: f64,
    pub t1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportInput {
    pub bundle: BundleName,
    pub vector: Vec<f64>,
    pub path: Vec<SegmentInput>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HolonomyInput {
    pub corner: Option<Vec<f64>>,
    pub axes: (usize, usize),
    pub eps: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridInput {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepInput {
    pub frame: bool,
    pub field: Vec<Vec<String>>,
    pub grid: Option<GridInput>,
    pub fiber: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImmersionInput {
    pub spec: ImmersionSpec,
    pub point: Vec<f64>,
    pub transport: Option<TransportInput>,
    pub holonomy: HolonomyInput,
    pub parallel: Option<(Vec<f64>, Option<GridInput>)>,
    pub sweep: Option<SweepInput>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Variety {
    Tensors(TensorData<Rational>),
    Immersion(Box<ImmersionInput>),
}

/// A checked specification file.
#[derive(Debug, Clone, PartialEq)]
pub struct SpecFile {
    pub label: Option<String>,
    pub mode: ScalarMode,
    pub variety: Variety,
    /// `sha256:` followed by the hex digest of the file bytes.
    pub digest: String,
}

pub const DEFAULT_RECTANGLE_SIDE: f64 = 0.1;

pub fn digest(bytes: &[u8]) -> String {
    format!("sha256:{}", hex::encode(Sha256::digest(bytes)))
}

struct Ctx<'a> {
    path: &'a str,
    text: &'a str,
}

impl Ctx<'_> {
    fn err(&self, message: impl Into<String>) -> InputError {
        InputError { path: self.path.to_string(), line: None, column: None, message: message.into() }
    }

    /// Error located at the first occurrence of the string literal `lit`,
    /// shifted by `column - 1` characters into the literal.
    fn err_at_literal(&self, lit: &str, column: usize, message: impl Into<String>) -> InputError {
        let mut e = self.err(message);
        let quoted = serde_json::to_string(lit).unwrap_or_default();
        if let Some(pos) = self.text.find(&quoted) {
            let before = &self.text[..pos];
            let line = before.matches('\n').count() + 1;
            let line_start = before.rfind('\n').map_or(0, |i| i + 1);
            let col = self.text[line_start..pos].chars().count() + 1 + column;
            e.line = Some(line);
            e.column = Some(col);
        }
        e
    }

    fn parse_err(&self, lit: &str, err: &ParseError) -> InputError {
        self.err_at_literal(lit, err.column, format!("{:?}: {}", err.kind, err.message))
    }

    fn real(&self, v: &RealText, what: &str) -> Result<f64, InputError> {
        match v {
            RealText::Number(x) => Ok(*x),
            RealText::Text(s) => {
                let e = parse_expr(s, &[]).map_err(|err| self.parse_err(s, &err))?;
                let x = e.eval::<f64>(&[]).map_err(|err| self.err_at_literal(s, 1, err.to_string()))?;
                if x.is_finite() {
                    Ok(x)
                } else {
                    Err(self.err_at_literal(s, 1, format!("{what} is not finite")))
                }
            }
        }
    }

    fn reals(&self, v: &[RealText], what: &str) -> Result<Vec<f64>, InputError> {
        v.iter().map(|x| self.real(x, what)).collect()
    }
}

/// Parse and check a specification file.
pub fn parse_spec_file(path: &str, bytes: &[u8]) -> Result<SpecFile, InputError> {
    let text = std::str::from_utf8(bytes).map_err(|e| InputError {
        path: path.to_string(),
        line: None,
        column: None,
        message: format!("input is not UTF-8: {e}"),
    })?;
    let ctx = Ctx { path, text };
    let raw: VarietySpecFile = serde_json::from_str(text).map_err(|e| InputError {
        path: path.to_string(),
        line: Some(e.line()),
        column: Some(e.column()),
        message: e.to_string().split(" at line ").next().unwrap_or_default().to_string(),
    })?;
    let variety = match (&raw.tensors, &raw.immersion) {
        (Some(t), None) => Variety::Tensors(tensor_data(&ctx, t)?),
        (None, Some(i)) => Variety::Immersion(Box::new(immersion_input(&ctx, i)?)),
        _ => return Err(ctx.err("exactly one of `tensors` and `immersion` must be present")),
    };
    let mode = match (&variety, raw.scalar_mode) {
        (Variety::Immersion(_), Some(ScalarMode::Exact)) => {
            return Err(ctx.err("immersion data is numerical; scalar_mode must be `float`"))
        }
        (Variety::Immersion(_), _) => ScalarMode::Float,
        (Variety::Tensors(_), m) => m.unwrap_or(ScalarMode::Exact),
    };
    Ok(SpecFile { label: raw.label, mode, variety, digest: digest(bytes) })
}

fn extent(ranges: &IndexRanges, name: &str) -> Option<usize> {
    match name {
        "a" | "b" => Some(ranges.l),
        "p" | "q" | "p^" => Some(ranges.r),
        "alpha" => Some(ranges.hyperplanes()),
        _ => None,
    }
}

/// Read `block` into canonical axis order `canonical`, returning a flat
/// row-major coefficient list.
fn read_block(
    ctx: &Ctx,
    ranges: &IndexRanges,
    name: &str,
    block: &TensorBlock,
    canonical: &[&str],
) -> Result<Vec<Rational>, InputError> {
    let declared: Vec<&str> = block.axes.iter().map(String::as_str).collect();
    let mut sorted_decl = declared.clone();
    sorted_decl.sort_unstable();
    let mut sorted_canon = canonical.to_vec();
    sorted_canon.sort_unstable();
    if sorted_decl != sorted_canon {
        return Err(ctx.err(format!("`{name}` axes must be a permutation of {canonical:?}, got {:?}", block.axes)));
    }
    let extents: Vec<usize> = declared.iter().map(|a| extent(ranges, a).expect("known axis")).collect();
    let mut flat = Vec::new();
    collect(ctx, name, &block.data, &extents, &mut flat)?;
    // perm[k] = position in declared order of canonical axis k
    let perm: Vec<usize> = canonical.iter().map(|c| declared.iter().position(|d| d == c).expect("same names")).collect();
    let canon_ext: Vec<usize> = perm.iter().map(|&k| extents[k]).collect();
    let strides: Vec<usize> = (0..extents.len()).map(|k| extents[k + 1..].iter().product()).collect();
    let out = crate::tensor::MultiIndex::new(&canon_ext)
        .map(|idx| {
            let offset: usize = idx.iter().zip(&perm).map(|(&i, &k)| i * strides[k]).sum();
            flat[offset].clone()
        })
        .collect();
    Ok(out)
}

fn collect(ctx: &Ctx, name: &str, data: &Nested, extents: &[usize], out: &mut Vec<Rational>) -> Result<(), InputError> {
    match (data, extents.split_first()) {
        (Nested::Leaf(x), None) => {
            out.push(x.clone());
            Ok(())
        }
        (Nested::List(items), Some((&n, rest))) if items.len() == n => {
            items.iter().try_for_each(|item| collect(ctx, name, item, rest, out))
        }
        _ => Err(ctx.err(format!("`{name}` data does not have shape {extents:?}"))),
    }
}

fn rows(flat: &[Rational], r: usize, c: usize) -> Vec<Vec<Rational>> {
    (0..r).map(|i| flat[i * c..(i + 1) * c].to_vec()).collect()
}

fn cube(flat: &[Rational], l: usize, r: usize) -> Vec<Vec<Vec<Rational>>> {
    (0..l).map(|a| rows(&flat[a * r * r..(a + 1) * r * r], r, r)).collect()
}

fn tensor_data(ctx: &Ctx, t: &TensorsBlock) -> Result<TensorData<Rational>, InputError> {
    let ranges = match (t.model, t.big_n) {
        (Model::Normalized, None) => IndexRanges::new(t.n, t.r),
        (Model::Normalized, Some(_)) => return Err(ctx.err("`big_n` applies to degenerate-gauss data only")),
        (Model::DegenerateGauss, Some(big)) => IndexRanges::with_embedding(t.n, t.r, big),
        (Model::DegenerateGauss, None) => return Err(ctx.err("degenerate-gauss data needs `big_n`")),
    }
    .map_err(|e| ctx.err(e.to_string()))?;
    let (l, r) = (ranges.l, ranges.r);
    match t.model {
        Model::Normalized => {
            let ambient = t.ambient.ok_or_else(|| ctx.err("normalized data needs `ambient`"))?;
            let b = read_block(ctx, &ranges, "b", &t.b, &["a", "p", "q"])?;
            let c = read_block(ctx, &ranges, "c", &t.c, &["a", "p^", "q"])?;
            let lt = t.l.as_ref().map(|x| read_block(ctx, &ranges, "l", x, &["p", "q"])).transpose()?;
            let gn = t.g_normal.as_ref().map(|x| read_block(ctx, &ranges, "g_normal", x, &["a", "b"])).transpose()?;
            let gt = t.g_tangent.as_ref().map(|x| read_block(ctx, &ranges, "g_tangent", x, &["p", "q"])).transpose()?;
            let data = FundamentalTensors::from_arrays(
                ranges,
                ambient,
                cube(&b, l, r),
                cube(&c, l, r),
                lt.map(|x| rows(&x, r, r)),
                gn.map(|x| rows(&x, l, l)),
                gt.map(|x| rows(&x, r, r)),
            )
            .map_err(|e| ctx.err(e.to_string()))?;
            Ok(TensorData::Normalized(data))
        }
        Model::DegenerateGauss => {
            if t.ambient.is_some() || t.l.is_some() || t.g_normal.is_some() || t.g_tangent.is_some() {
                return Err(ctx.err("degenerate-gauss data takes only `b` and `c`"));
            }
            let h = ranges.hyperplanes();
            let b = read_block(ctx, &ranges, "b", &t.b, &["alpha", "p", "q"])?;
            let c = read_block(ctx, &ranges, "c", &t.c, &["a", "p^", "q"])?;
            let bm = (0..h).map(|k| Matrix::from_rows(rows(&b[k * r * r..(k + 1) * r * r], r, r))).collect();
            let cm = (0..l).map(|a| Matrix::from_rows(rows(&c[a * r * r..(a + 1) * r * r], r, r))).collect();
            let data = DegenerateGaussTensors::from_matrices(ranges, bm, cm).map_err(|e| ctx.err(e.to_string()))?;
            Ok(TensorData::DegenerateGauss(data))
        }
    }
}

fn grid_input(ctx: &Ctx, g: &GridBlock, r: usize) -> Result<GridInput, InputError> {
    let grid = GridInput { lo: ctx.reals(&g.lo, "grid bound")?, hi: ctx.reals(&g.hi, "grid bound")?, counts: g.counts.clone() };
    if grid.lo.len() != r || grid.hi.len() != r || grid.counts.len() != r || grid.counts.iter().any(|&c| c < 2) {
        return Err(ctx.err(format!("grid needs {r} bounds and counts, each count at least 2")));
    }
    Ok(grid)
}

fn check_exprs(ctx: &Ctx, exprs: &[String], names: &[String]) -> Result<Vec<Expr>, InputError> {
    exprs.iter().map(|e| parse_expr(e, names).map_err(|err| ctx.parse_err(e, &err))).collect()
}

fn immersion_input(ctx: &Ctx, i: &ImmersionBlock) -> Result<ImmersionInput, InputError> {
    check_exprs(ctx, &i.components, &i.params)?;
    let domain = i
        .domain
        .iter()
        .map(|[lo, hi]| Ok((ctx.real(lo, "domain bound")?, ctx.real(hi, "domain bound")?)))
        .collect::<Result<Vec<_>, InputError>>()?;
    let spec = ImmersionSpec::new(i.params.clone(), &i.components.join(", "), domain).map_err(|e| ctx.err(e.to_string()))?;
    let r = spec.r();
    let point = match &i.point {
        Some(p) => ctx.reals(p, "point coordinate")?,
        None => spec.center(),
    };
    if point.len() != r || !spec.contains(&point) {
        return Err(ctx.err(format!("`point` must have {r} coordinates inside the domain")));
    }
    let t_name = ["t".to_string()];
    let transport = i
        .transport
        .as_ref()
        .map(|t| {
            let path = t
                .path
                .iter()
                .map(|s| {
                    check_exprs(ctx, &s.coords, &t_name)?;
                    if s.coords.len() != r {
                        return Err(ctx.err(format!("path segments need {r} coordinate expressions")));
                    }
                    Ok(SegmentInput { coords: s.coords.clone(), t0: ctx.real(&s.t0, "t0")?, t1: ctx.real(&s.t1, "t1")? })
                })
                .collect::<Result<Vec<_>, InputError>>()?;
            if path.is_empty() {
                return Err(ctx.err("transport path needs at least one segment"));
            }
            Ok(TransportInput { bundle: t.bundle, vector: t.vector.clone(), path })
        })
        .transpose()?;
    let holonomy = match &i.holonomy {
        Some(h) => {
            let axes = h.axes.map_or((0, 1), |[a, b]| (a, b));
            let eps = h.eps.as_ref().map(|v| ctx.real(v, "eps")).transpose()?.unwrap_or(DEFAULT_RECTANGLE_SIDE);
            let delta = h.delta.as_ref().map(|v| ctx.real(v, "delta")).transpose()?.unwrap_or(DEFAULT_RECTANGLE_SIDE);
            let corner = h.corner.as_ref().map(|c| ctx.reals(c, "corner coordinate")).transpose()?;
            if corner.as_ref().is_some_and(|c| c.len() != r) {
                return Err(ctx.err(format!("holonomy corner needs {r} coordinates")));
            }
            HolonomyInput { corner, axes, eps, delta }
        }
        None => HolonomyInput { corner: None, axes: (0, 1), eps: DEFAULT_RECTANGLE_SIDE, delta: DEFAULT_RECTANGLE_SIDE },
    };
    let parallel = i
        .parallel
        .as_ref()
        .map(|p| Ok((p.y0.clone(), p.grid.as_ref().map(|g| grid_input(ctx, g, r)).transpose()?)))
        .transpose()?;
    let sweep = i
        .sweep
        .as_ref()
        .map(|s| {
            let (frame, field) = match (&s.field.frame, &s.field.ambient) {
                (Some(f), None) => (true, f.clone()),
                (None, Some(f)) => (false, f.clone()),
                _ => return Err(ctx.err("sweep field needs exactly one of `frame` and `ambient`")),
            };
            for f in &field {
                check_exprs(ctx, f, &i.params)?;
            }
            Ok(SweepInput { frame, field, grid: s.grid.as_ref().map(|g| grid_input(ctx, g, r)).transpose()?, fiber: s.fiber.clone() })
        })
        .transpose()?;
    Ok(ImmersionInput { spec, point, transport, holonomy, parallel, sweep })
}
