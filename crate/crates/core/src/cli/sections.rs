//! Report sections computed from tensor data and immersions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use super::report::{float, float_cube, float_rows, floats, matrix, object, poly, scalar, scalar_text, scalars, tensor, Section, Status};
use super::spec_file::{BundleName, GridInput, ImmersionInput, TensorData};
use crate::curvature::{
    classify_normalization, curvature_tensors, flatness_report, lowered_tangential_curvature, ricci_pair,
    sectional_curvature, NormalizationClass,
};
use crate::focal::{
    dual_nondegenerate, factor_linear, focus_hypercone_poly, focus_hypersurface_poly, infinity_slice_identity,
    jacobian_at, FocalFactor, FocalReport,
};
use crate::immersion::{extract_frames, FrameData};
use crate::scalar::{ratio, Scalar};
use crate::transport::{
    holonomy_loop, parallel_variety, swept_tangent_constancy, transport_normal, transport_tangent, Bundle, Grid,
    NormalSubbundleField, PathSegment, PathSpec, Rectangle, TransportError, PARALLELISM_TOLERANCE,
};
use crate::variety::{validate_degenerate_gauss, validate_normalized, Ambient, ValidationReport};

/// Largest accepted `|holonomy - prediction| / (eps delta (eps + delta))`.
pub const HOLONOMY_RATIO_LIMIT: f64 = 10.0;
/// Normal offset used when no parallel-variety vector is given.
pub const DEFAULT_OFFSET: f64 = 0.1;
/// Half width of the default sampling grid around the base point.
pub const DEFAULT_GRID_RADIUS: f64 = 0.05;
/// Rows kept from a transport log.
pub const LOG_ROWS: usize = 33;
/// Random points at which a factorization is compared with its polynomial.
pub const FACTOR_CHECK_POINTS: usize = 8;

#[derive(Debug, Clone, Copy)]
pub struct Settings {
    pub tolerance: f64,
    pub seed: u64,
    pub steps: usize,
}

const TANGENT4: [&str; 4] = ["p", "q", "s", "t"];

fn violations_json(report: &ValidationReport) -> Value {
    Value::Array(
        report
            .violations
            .iter()
            .map(|v| {
                let mut detail = serde_json::to_value(v).expect("violations serialize");
                if let Value::Object(m) = &mut detail {
                    m.insert("label".into(), Value::String(v.label().into()));
                    m.insert("message".into(), Value::String(v.to_string()));
                }
                detail
            })
            .collect(),
    )
}

fn class_json<S: Scalar>(class: &NormalizationClass<S>) -> Value {
    match class {
        NormalizationClass::CentralAffine { witness } => json!({ "kind": class.name(), "witness": scalars(witness) }),
        _ => json!({ "kind": class.name() }),
    }
}

fn shape_json<S: Scalar>(data: &TensorData<S>) -> Value {
    match data {
        TensorData::Normalized(t) => {
            json!({ "model": "normalized", "ambient": t.ambient.name(), "n": t.ranges.n, "r": t.ranges.r, "l": t.ranges.l })
        }
        TensorData::DegenerateGauss(t) => json!({
            "model": "degenerate-gauss", "n": t.ranges.n, "r": t.ranges.r, "l": t.ranges.l, "big_n": t.ranges.big_n
        }),
    }
}

/// Validation outcome: the section and whether the data is valid.
pub fn validate<S: Scalar>(data: &TensorData<S>, set: &Settings) -> (Section, bool) {
    let tol = set.tolerance;
    let outcome = match data {
        TensorData::Normalized(t) => validate_normalized(t, tol),
        TensorData::DegenerateGauss(t) => validate_degenerate_gauss(t, tol),
    };
    let report = match outcome {
        Ok(r) => r,
        Err(e) => return (Section::fail("validate", e.to_string()), false),
    };
    let valid = report.passed();
    let mut result = object(vec![
        ("data", shape_json(data)),
        ("valid", Value::Bool(valid)),
        ("violations", violations_json(&report)),
    ]);
    let mut section = Section::new("validate", if valid { Status::Pass } else { Status::Fail }, Value::Null);
    if valid {
        section = section.note("all invariants hold");
    } else {
        let labels: Vec<&str> = report.violations.iter().map(|v| v.label()).collect();
        section = section.note(format!("{} violations: {}", labels.len(), labels.join(", ")));
        section = section.with_reason(report.violations[0].to_string());
    }
    if let TensorData::Normalized(t) = data {
        let class = classify_normalization(t, tol);
        section = section.note(format!("classification: {}", class.name()));
        result["classification"] = class_json(&class);
    }
    section.result = result;
    (section, valid)
}

/// Section to emit in place of a computation on invalid data.
fn invalid(name: &str, in_report_all: bool, reason: &str) -> Section {
    if in_report_all {
        Section::skipped(name, "input failed validation")
    } else {
        Section::fail(name, format!("input failed validation: {reason}"))
    }
}

fn first_reason(validation: &Section) -> String {
    validation.reason.clone().unwrap_or_else(|| "invalid input".into())
}

pub fn classify<S: Scalar>(data: &TensorData<S>, set: &Settings, validation: &Section, in_report_all: bool) -> Section {
    if validation.status != Status::Pass {
        return invalid("classify", in_report_all, &first_reason(validation));
    }
    let tol = set.tolerance;
    match data {
        TensorData::Normalized(t) => {
            let class = classify_normalization(t, tol);
            match flatness_report(t, tol) {
                Ok(flat) => Section::pass(
                    "classify",
                    json!({
                        "classification": class_json(&class),
                        "tangential_flat": flat.tangential_flat,
                        "normal_flat": flat.normal_flat,
                        "products_symmetric": flat.products_symmetric,
                    }),
                )
                .note(format!("classification: {}", class.name()))
                .note(format!("tangential connection flat: {}", flat.tangential_flat))
                .note(format!("normal connection flat: {}", flat.normal_flat)),
                Err(e) => Section::fail("classify", e.to_string()),
            }
        }
        TensorData::DegenerateGauss(t) => match dual_nondegenerate(t, tol) {
            Ok(nd) => Section::pass("classify", json!({ "dual_nondegenerate": nd }))
                .note(format!("dual nondegenerate: {nd}")),
            Err(e) => Section::fail("classify", e.to_string()),
        },
    }
}

pub fn curvature<S: Scalar>(data: &TensorData<S>, set: &Settings, validation: &Section, in_report_all: bool) -> Section {
    let t = match data {
        TensorData::Normalized(t) => t,
        TensorData::DegenerateGauss(_) => return Section::skipped("curvature", "curvature needs normalized data"),
    };
    if validation.status != Status::Pass {
        return invalid("curvature", in_report_all, &first_reason(validation));
    }
    let tol = set.tolerance;
    let tensors = match curvature_tensors(t, tol) {
        Ok(x) => x,
        Err(e) => return Section::fail("curvature", e.to_string()),
    };
    let tangential_zero = tensors.tangential.is_zero(tol);
    let normal_zero = tensors.normal.is_zero(tol);
    let mut result = json!({
        "tangential": tensor(&tensors.tangential, &TANGENT4),
        "normal": tensor(&tensors.normal, &["a", "b", "s", "t"]),
        "ricci_tangential": tensor(&tensors.ricci_tangential, &["s", "t"]),
        "ricci_normal": tensor(&tensors.ricci_normal, &["s", "t"]),
        "tangential_zero": tangential_zero,
        "normal_zero": normal_zero,
    });
    let mut section = Section::new("curvature", Status::Pass, Value::Null)
        .note(format!("tangential curvature vanishes: {tangential_zero}"))
        .note(format!("normal curvature vanishes: {normal_zero}"));
    if let Ok((rt, rn)) = ricci_pair(t, tol) {
        let sum = crate::tensor::SmallTensor::from_fn(rt.axes().to_vec(), |i| rt.get(i).clone() + rn.get(i).clone());
        let vanishes = sum.is_zero(tol);
        result["ricci_sum_zero"] = Value::Bool(vanishes);
        section = section.note(format!("ricci sum vanishes: {vanishes}"));
    }
    if t.ambient == Ambient::Euclidean {
        if let Ok(lowered) = lowered_tangential_curvature(t, tol) {
            result["lowered_tangential"] = tensor(&lowered, &TANGENT4);
        }
        let r = t.ranges.r;
        let mut sectional = Vec::new();
        for s in 0..r {
            for u in s + 1..r {
                if let Ok(k) = sectional_curvature(t, s, u, tol) {
                    section = section.note(format!("sectional curvature ({s}, {u}): {}", scalar_text(&k)));
                    sectional.push(json!({ "s": s, "t": u, "value": scalar(&k) }));
                }
            }
        }
        result["sectional"] = Value::Array(sectional);
    }
    section.result = result;
    section
}

fn focal_json<S: Scalar>(report: &FocalReport<S>) -> Value {
    let mut v = json!({
        "polynomial": poly(&report.polynomial, &report.variables),
        "raw": poly(&report.raw, &report.variables),
        "degree": report.degree,
        "regular_point": report.regular_point.as_ref().map(|p| scalars(p)),
    });
    if let Some(lowered) = &report.lowered {
        v["lowered"] = poly(lowered, &report.variables);
    }
    v
}

fn random_point<S: Scalar>(rng: &mut ChaCha8Rng, m: usize) -> Vec<S> {
    (0..m).map(|_| S::from_rational(&ratio(rng.gen_range(-9..=9), rng.gen_range(1..=5)))).collect()
}

pub fn focal<S: Scalar>(data: &TensorData<S>, set: &Settings, validation: &Section, in_report_all: bool) -> Section {
    if validation.status != Status::Pass {
        return invalid("focal", in_report_all, &first_reason(validation));
    }
    let tol = set.tolerance;
    let (surface, cone, factors, dual) = match data {
        TensorData::Normalized(t) => {
            (focus_hypersurface_poly(t, tol), focus_hypercone_poly(t, tol), factor_linear(t, tol), None)
        }
        TensorData::DegenerateGauss(t) => (
            focus_hypersurface_poly(t, tol),
            focus_hypercone_poly(t, tol),
            factor_linear(t, tol),
            Some(dual_nondegenerate(t, tol)),
        ),
    };
    let (surface, cone) = match (surface, cone) {
        (Ok(s), Ok(c)) => (s, c),
        (Err(e), _) | (_, Err(e)) => return Section::fail("focal", e.to_string()),
    };
    let mut section = Section::new("focal", Status::Pass, Value::Null)
        .note(format!("focus hypersurface: {}", surface.display()))
        .note(format!("focus hypercone: {}", cone.display()));
    let mut result = json!({
        "hypersurface": focal_json(&surface),
        "hypercone": focal_json(&cone),
    });
    let nvars = surface.variables.len();
    match factors {
        Ok(f) => {
            let product = f.product(nvars);
            let mut rng = ChaCha8Rng::seed_from_u64(set.seed);
            let agrees = (0..FACTOR_CHECK_POINTS).all(|_| {
                let pt: Vec<S> = random_point(&mut rng, nvars);
                product.eval(&pt).near(&surface.polynomial.eval(&pt), tol * (1.0 + surface.polynomial.max_magnitude()))
            });
            let list: Vec<Value> = f
                .factors
                .iter()
                .map(|x| match x {
                    FocalFactor::Linear { coeffs, multiplicity } => {
                        json!({ "kind": "linear", "coeffs": scalars(coeffs), "multiplicity": multiplicity })
                    }
                    FocalFactor::Nonlinear { polynomial } => {
                        json!({ "kind": "nonlinear", "polynomial": poly(polynomial, &surface.variables) })
                    }
                })
                .collect();
            section = section.note(format!("factors: {}", f.text));
            result["factorization"] = json!({ "text": f.text, "factors": list, "product_matches": agrees });
            if !agrees {
                section.status = Status::Fail;
                section = section.with_reason("product of factors differs from the focus polynomial");
            }
        }
        Err(e) => {
            section = section.note(format!("no linear factorization: {e}"));
            result["factorization"] = json!({ "error": e.to_string() });
        }
    }
    if let Some(pt) = &surface.regular_point {
        let jac = match data {
            TensorData::Normalized(t) => jacobian_at(t, pt, tol),
            TensorData::DegenerateGauss(t) => jacobian_at(t, pt, tol),
        };
        if let Ok(j) = jac {
            result["jacobian_at_regular_point"] = json!({ "value": scalar(&j.value), "singular": j.singular });
        }
    }
    if let Some(Ok(nd)) = dual {
        result["dual_nondegenerate"] = Value::Bool(nd);
        section = section.note(format!("dual nondegenerate: {nd}"));
    }
    if let TensorData::Normalized(t) = data {
        if t.ambient == Ambient::Euclidean {
            if let Ok(slice) = infinity_slice_identity(t, tol) {
                let vars: Vec<String> = (1..=t.ranges.l).map(|a| format!("y{a}")).collect();
                result["slice_identity"] = json!({
                    "holds": slice.holds,
                    "sign": slice.sign,
                    "restricted": poly(&slice.restricted, &vars),
                    "substituted": poly(&slice.substituted, &vars),
                });
                section = section.note(format!("slice identity holds: {}", slice.holds));
                if !slice.holds {
                    section.status = Status::Fail;
                    section = section.with_reason("slice identity does not hold");
                }
            }
        }
    }
    section.result = result;
    section
}

pub fn frames_json(fr: &FrameData) -> Value {
    json!({
        "at": floats(&fr.at),
        "point": floats(&fr.point),
        "tangent": float_rows(&fr.tangent),
        "normal": float_rows(&fr.normal),
        "g": float_rows(&fr.g.to_rows()),
        "b": float_cube(&fr.b),
        "c": float_cube(&fr.c),
        "christoffel": float_cube(&fr.christoffel),
        "normal_connection": float_cube(&fr.normal_connection),
    })
}

pub fn frames(imm: &ImmersionInput) -> Result<(Section, FrameData), Section> {
    match extract_frames(&imm.spec, &imm.point) {
        Ok(fr) => {
            let section = Section::pass("frames", frames_json(&fr))
                .note(format!("r = {}, l = {}", fr.r(), fr.l()))
                .note(format!("metric: {:?}", fr.g.to_rows()));
            Ok((section, fr))
        }
        Err(e) => Err(Section::fail("frames", e.to_string())),
    }
}

fn bundle(b: BundleName) -> Bundle {
    match b {
        BundleName::Tangential => Bundle::Tangential,
        BundleName::Normal => Bundle::Normal,
    }
}

/// Default rectangle around the base point.
fn rectangle(imm: &ImmersionInput) -> Rectangle {
    let h = &imm.holonomy;
    let corner = h.corner.clone().unwrap_or_else(|| {
        let mut c = imm.point.clone();
        c[h.axes.0] -= h.eps / 2.0;
        c[h.axes.1] -= h.delta / 2.0;
        c
    });
    Rectangle { corner, axes: h.axes, eps: h.eps, delta: h.delta }
}

fn decimated_log(log: &[(f64, Vec<f64>)]) -> Value {
    let stride = log.len().div_ceil(LOG_ROWS - 1).max(1);
    let mut rows: Vec<Value> = log.iter().step_by(stride).map(|(t, x)| json!({ "t": float(*t), "x": floats(x) })).collect();
    if !(log.len() - 1).is_multiple_of(stride) {
        let (t, x) = log.last().expect("log is nonempty");
        rows.push(json!({ "t": float(*t), "x": floats(x) }));
    }
    Value::Array(rows)
}

pub fn transport(imm: &ImmersionInput, set: &Settings) -> Section {
    let spec = &imm.spec;
    let (which, vector, path) = match &imm.transport {
        Some(t) => {
            let segments: Result<Vec<PathSegment>, TransportError> = t
                .path
                .iter()
                .map(|s| {
                    let coords: Vec<&str> = s.coords.iter().map(String::as_str).collect();
                    PathSegment::parse(&coords, s.t0, s.t1, set.steps)
                })
                .collect();
            (bundle(t.bundle), t.vector.clone(), segments.and_then(PathSpec::new))
        }
        None => {
            if spec.r() < 2 {
                let seg = PathSegment::line(&imm.point, &imm.point.iter().map(|x| x + imm.holonomy.eps).collect::<Vec<_>>(), set.steps);
                let mut v = vec![0.0; spec.r()];
                v[0] = 1.0;
                (Bundle::Tangential, v, PathSpec::new(vec![seg]))
            } else {
                let mut v = vec![0.0; spec.r()];
                v[0] = 1.0;
                (Bundle::Tangential, v, PathSpec::rectangle(rectangle(imm), set.steps))
            }
        }
    };
    let outcome = path.and_then(|p| match which {
        Bundle::Tangential => transport_tangent(spec, &p, &vector),
        Bundle::Normal => transport_normal(spec, &p, &vector),
    });
    match outcome {
        Ok(res) => Section::pass(
            "transport",
            json!({
                "bundle": which.name(),
                "initial": floats(&vector),
                "final": floats(&res.final_components),
                "drift": float(res.drift),
                "log_length": res.log.len(),
                "log": decimated_log(&res.log),
            }),
        )
        .note(format!("{} transport of {:?} ends at {:?}", which.name(), vector, res.final_components))
        .note(format!("norm drift {:e}", res.drift)),
        Err(e) => Section::fail("transport", e.to_string()),
    }
}

pub fn holonomy(imm: &ImmersionInput, set: &Settings) -> Section {
    let spec = &imm.spec;
    if spec.r() < 2 {
        return Section::skipped("holonomy", "holonomy rectangles need two parameters");
    }
    let rect = rectangle(imm);
    let path = match PathSpec::rectangle(rect.clone(), set.steps) {
        Ok(p) => p,
        Err(e) => return Section::fail("holonomy", e.to_string()),
    };
    let mut section = Section::new("holonomy", Status::Pass, Value::Null);
    let mut parts = serde_json::Map::new();
    for which in [Bundle::Tangential, Bundle::Normal] {
        match holonomy_loop(spec, &path, which) {
            Ok(h) => {
                let ratio = h.deviation_ratio.unwrap_or(f64::INFINITY);
                let ok = ratio <= HOLONOMY_RATIO_LIMIT;
                if !ok {
                    section.status = Status::Fail;
                    section = section.with_reason(format!("{} holonomy deviates from the curvature prediction", which.name()));
                }
                section = section.note(format!(
                    "{} holonomy matches curvature prediction: {ok} (ratio {ratio:.6})",
                    which.name()
                ));
                if let Some(angle) = h.rotation_angle {
                    section = section.note(format!("{} rotation angle: {angle:.12}", which.name()));
                }
                parts.insert(
                    which.name().into(),
                    json!({
                        "matrix": matrix(&h.matrix),
                        "prediction": h.prediction.as_ref().map(matrix),
                        "deviation": h.deviation.map(float),
                        "deviation_ratio": float(ratio),
                        "rotation_angle": h.rotation_angle.map(float),
                        "drift": float(h.drift),
                        "passed": ok,
                    }),
                );
            }
            Err(e) => {
                section.status = Status::Fail;
                section = section.with_reason(format!("{}: {e}", which.name()));
            }
        }
    }
    parts.insert(
        "rectangle".into(),
        json!({ "corner": floats(&rect.corner), "axes": [rect.axes.0, rect.axes.1], "eps": float(rect.eps), "delta": float(rect.delta) }),
    );
    section.result = Value::Object(parts);
    section
}

fn grid(imm: &ImmersionInput, given: &Option<GridInput>) -> Result<Grid, TransportError> {
    match given {
        Some(g) => Grid::new(g.lo.clone(), g.hi.clone(), g.counts.clone()),
        None => {
            let dom = imm.spec.domain();
            let lo = imm.point.iter().zip(dom).map(|(x, (a, _))| (x - DEFAULT_GRID_RADIUS).max(*a)).collect();
            let hi = imm.point.iter().zip(dom).map(|(x, (_, b))| (x + DEFAULT_GRID_RADIUS).min(*b)).collect();
            Grid::new(lo, hi, vec![3; imm.point.len()])
        }
    }
}

pub fn parallel(imm: &ImmersionInput, set: &Settings) -> Section {
    let spec = &imm.spec;
    let l = spec.n() - spec.r();
    let (y0, given) = imm.parallel.clone().unwrap_or((vec![DEFAULT_OFFSET; l], None));
    let g = match grid(imm, &given) {
        Ok(g) => g,
        Err(e) => return Section::fail("parallel", e.to_string()),
    };
    match parallel_variety(spec, &y0, &g, set.steps, set.tolerance.max(1e-9)) {
        Ok(rep) => {
            let points: Vec<Value> = rep.points.iter().map(|(u, x)| json!({ "u": floats(u), "x": floats(x) })).collect();
            let mut s = Section::new(
                "parallel",
                if rep.passed { Status::Pass } else { Status::Fail },
                json!({
                    "y0": floats(&y0),
                    "path_gap": float(rep.path_gap),
                    "max_angle": float(rep.max_angle),
                    "max_normal_curvature": float(rep.max_normal_curvature),
                    "passed": rep.passed,
                    "points": points,
                }),
            )
            .note(format!("lattice routes agree to {:e}", rep.path_gap))
            .note(format!("largest tangent-plane angle {:e} rad", rep.max_angle));
            if !rep.passed {
                s = s.with_reason("parallel variety is not parallel to the variety");
            }
            s
        }
        Err(TransportError::NotFlat { max, .. }) => {
            Section::skipped("parallel", format!("normal connection is not flat (curvature {max:e})"))
        }
        Err(e) => Section::fail("parallel", e.to_string()),
    }
}

pub fn sweep(imm: &ImmersionInput, set: &Settings) -> Section {
    let Some(sw) = &imm.sweep else {
        return Section::skipped("sweep", "no normal subbundle field given");
    };
    let spec = &imm.spec;
    let exprs: Vec<Vec<&str>> = sw.field.iter().map(|f| f.iter().map(String::as_str).collect()).collect();
    let field = if sw.frame {
        NormalSubbundleField::parse_frame(spec, &exprs)
    } else {
        NormalSubbundleField::parse_ambient(spec, &exprs)
    };
    let g = grid(imm, &sw.grid);
    let outcome = field.and_then(|f| g.and_then(|g| swept_tangent_constancy(spec, &f, &g, &sw.fiber, set.tolerance.max(1e-9), false)));
    match outcome {
        Ok(rep) if !rep.precondition.parallel => Section::skipped(
            "sweep",
            format!("field is not parallel in the normal connection (residual {:e})", rep.precondition.max_residual),
        ),
        Ok(rep) => {
            let ok = rep.max_angle <= PARALLELISM_TOLERANCE;
            let mut s = Section::new(
                "sweep",
                if ok { Status::Pass } else { Status::Fail },
                json!({
                    "subbundle_residual": float(rep.precondition.max_residual),
                    "max_angle": float(rep.max_angle),
                    "per_generator": rep.per_generator.iter().map(|(u, a)| json!({ "u": floats(u), "angle": float(*a) })).collect::<Vec<_>>(),
                }),
            )
            .note(format!("largest tangent-plane angle along generators {:e} rad", rep.max_angle));
            if !ok {
                s = s.with_reason("tangent planes turn along generators");
            }
            s
        }
        Err(e) => Section::fail("sweep", e.to_string()),
    }
}
