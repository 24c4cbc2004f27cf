//! Command line front end.
//!
//! Exit codes: 0 on success, 2 when a check fails (the report is still
//! written), 1 on usage and input errors.

pub mod report;
pub mod sections;
pub mod spec_file;

use std::ffi::OsString;
use std::io::Write as _;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use crate::scalar::{Scalar, DEFAULT_TOLERANCE};
use report::{Report, Section, Status};
use sections::Settings;
use spec_file::{parse_spec_file, ImmersionInput, ScalarMode, SpecFile, TensorData, Variety};

/// Environment variable overriding the default tolerance.
pub const TOLERANCE_ENV: &str = "FOCALFRAMES_TOLERANCE";
pub const DEFAULT_STEPS: usize = 400;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CHECK_FAILED: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Check the invariants of the input data.
    Validate,
    /// Curvature tensors of the tangential and normal connections.
    Curvature,
    /// Focus hypersurface and hypercone polynomials.
    Focal,
    /// Classification and flatness predicates.
    Classify,
    /// Frame data of an immersion at its base point.
    Frames,
    /// Parallel transport along a path.
    Transport,
    /// Holonomy around a coordinate rectangle.
    Holonomy,
    /// Parallel variety over a sampling grid.
    Parallel,
    /// Tangent planes of a swept variety.
    Sweep,
    /// All applicable sections.
    ReportAll,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Curvature => "curvature",
            Command::Focal => "focal",
            Command::Classify => "classify",
            Command::Frames => "frames",
            Command::Transport => "transport",
            Command::Holonomy => "holonomy",
            Command::Parallel => "parallel",
            Command::Sweep => "sweep",
            Command::ReportAll => "report-all",
        }
    }

    fn needs_immersion(self) -> bool {
        matches!(self, Command::Frames | Command::Transport | Command::Holonomy | Command::Parallel | Command::Sweep)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Md,
}

#[derive(Debug, Parser)]
#[command(name = "focalframes", version, about = "Connections, curvature and focal varieties of normalized submanifolds")]
pub struct Args {
    #[command(subcommand)]
    pub command: Command,
    /// Variety specification file (JSON).
    #[arg(long, global = true)]
    pub input: Option<String>,
    /// Report destination; standard output when absent.
    #[arg(long, global = true)]
    pub output: Option<String>,
    #[arg(long, global = true, value_enum, default_value = "json")]
    pub format: Format,
    /// Comparison tolerance for float data.
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,
    /// Seed for randomized spot checks.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Integration steps per path segment.
    #[arg(long, global = true, default_value_t = DEFAULT_STEPS)]
    pub steps: usize,
    /// Record the wall time in the report.
    #[arg(long, global = true)]
    pub timing: bool,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Input(String),
    Io(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

/// Tolerance from the flag, the environment, or the default.
pub fn resolve_tolerance(flag: Option<f64>, env: Option<&str>) -> Result<f64, CliError> {
    let tol = match (flag, env) {
        (Some(t), _) => t,
        (None, Some(text)) => text
            .trim()
            .parse::<f64>()
            .map_err(|_| CliError::Usage(format!("{TOLERANCE_ENV} is not a number: `{text}`")))?,
        (None, None) => DEFAULT_TOLERANCE,
    };
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(CliError::Usage(format!("tolerance must be finite and nonnegative, got {tol}")));
    }
    Ok(tol)
}

fn tensor_sections<S: Scalar>(cmd: Command, data: &TensorData<S>, set: &Settings, prefix: Vec<Section>) -> Vec<Section> {
    let all = cmd == Command::ReportAll;
    let (validation, _) = sections::validate(data, set);
    let mut out = prefix;
    match cmd {
        Command::Validate => out.push(validation),
        Command::Classify => out.push(sections::classify(data, set, &validation, false)),
        Command::Curvature => out.push(sections::curvature(data, set, &validation, false)),
        Command::Focal => out.push(sections::focal(data, set, &validation, false)),
        Command::ReportAll => {
            let classify = sections::classify(data, set, &validation, all);
            let curvature = sections::curvature(data, set, &validation, all);
            let focal = sections::focal(data, set, &validation, all);
            out.extend([validation, classify, curvature, focal]);
        }
        _ => {}
    }
    out
}

fn immersion_sections(cmd: Command, imm: &ImmersionInput, set: &Settings) -> Vec<Section> {
    let frames = sections::frames(imm);
    let mut out = Vec::new();
    match cmd {
        Command::Frames => out.push(frames.map_or_else(|s| s, |(s, _)| s)),
        Command::Transport => out.push(sections::transport(imm, set)),
        Command::Holonomy => out.push(sections::holonomy(imm, set)),
        Command::Parallel => out.push(sections::parallel(imm, set)),
        Command::Sweep => out.push(sections::sweep(imm, set)),
        Command::Validate | Command::Classify | Command::Curvature | Command::Focal => match frames {
            Ok((_, fr)) => out = tensor_sections(cmd, &TensorData::Normalized(fr.fundamental_tensors()), set, out),
            Err(s) => out.push(Section::fail(cmd.name(), s.reason.unwrap_or_default())),
        },
        Command::ReportAll => {
            match frames {
                Ok((s, fr)) => out = tensor_sections(cmd, &TensorData::Normalized(fr.fundamental_tensors()), set, vec![s]),
                Err(s) => out.push(s),
            }
            out.push(sections::transport(imm, set));
            out.push(sections::holonomy(imm, set));
            out.push(sections::parallel(imm, set));
            out.push(sections::sweep(imm, set));
        }
    }
    out
}

/// Build the report for a parsed specification.
pub fn build_report(cmd: Command, spec: &SpecFile, set: &Settings) -> Result<Report, CliError> {
    let sections = match &spec.variety {
        Variety::Tensors(_) if cmd.needs_immersion() => {
            return Err(CliError::Usage(format!("`{}` needs an immersion input", cmd.name())))
        }
        Variety::Tensors(data) => match spec.mode {
            ScalarMode::Exact => tensor_sections(cmd, data, set, Vec::new()),
            ScalarMode::Float => tensor_sections(cmd, &data.to_float(), set, Vec::new()),
        },
        Variety::Immersion(imm) => immersion_sections(cmd, imm, set),
    };
    Ok(Report {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        operation: cmd.name().to_string(),
        label: spec.label.clone(),
        input_digest: spec.digest.clone(),
        scalar_mode: spec.mode.name().to_string(),
        tolerance: set.tolerance,
        seed: set.seed,
        steps: set.steps,
        status: Report::overall(&sections),
        sections,
        wall_time_ms: None,
    })
}

/// Execute parsed arguments. Returns the rendered report and its status.
pub fn execute(args: &Args, env_tolerance: Option<&str>) -> Result<(String, Status), CliError> {
    let start = Instant::now();
    let tolerance = resolve_tolerance(args.tolerance, env_tolerance)?;
    if args.steps < 2 {
        return Err(CliError::Usage("--steps must be at least 2".into()));
    }
    let path = args.input.as_deref().ok_or_else(|| CliError::Usage("--input is required".into()))?;
    let bytes = std::fs::read(path).map_err(|e| CliError::Input(format!("{path}: {e}")))?;
    let spec = parse_spec_file(path, &bytes).map_err(|e| CliError::Input(e.to_string()))?;
    let set = Settings { tolerance, seed: args.seed, steps: args.steps };
    let mut report = build_report(args.command, &spec, &set)?;
    if args.timing {
        report.wall_time_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    }
    let text = match args.format {
        Format::Json => report.to_json(),
        Format::Md => report.to_markdown(),
    };
    Ok((text, report.status))
}

/// Run with `argv` (including the program name) and return the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let env = std::env::var(TOLERANCE_ENV).ok();
    match execute(&args, env.as_deref()) {
        Ok((text, status)) => {
            let written = match &args.output {
                Some(path) => std::fs::write(path, &text).map_err(|e| CliError::Io(format!("{path}: {e}"))),
                None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string())),
            };
            if let Err(e) = written {
                eprintln!("focalframes: {e}");
                return EXIT_USAGE;
            }
            if status == Status::Fail { EXIT_CHECK_FAILED } else { EXIT_OK }
        }
        Err(e) => {
            eprintln!("focalframes: {e}");
            EXIT_USAGE
        }
    }
}
