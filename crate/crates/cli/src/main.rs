//! `qnetcap`: capacity bounds and thresholds for quantum repeater networks.

mod selftest;
mod sweep;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use qnetcap::bounds::BoundPair;
use qnetcap::channels::Family;
use qnetcap::network::{apply_split, BoundedEdge, Cut, NetworkGraph, Selector, Violation};
use qnetcap::routing::{capacity_report, max_flow, widest_path, CapacityReport, PathResult};
use qnetcap::wrn::{
    generate, min_nodal_density, threshold_report, CellType, DensityResult, FixedParams, ParamKind, ThresholdReport,
    WrnSpec,
};
use qnetcap::Error;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "qnetcap", version, about = "Capacity bounds for quantum repeater networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bound the end-to-end capacities of a network file.
    Analyze {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Bounding functions; chosen from the channel family by default.
        #[arg(long, value_enum)]
        bounds: Option<BoundsArg>,
    },
    /// Largest tolerable (or least required) parameter for a target flooding capacity.
    Threshold {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        target: f64,
        /// edge-length, internal-loss or receiver-noise.
        #[arg(long, default_value = "edge-length")]
        param: ParamKind,
        /// Link length used when solving for another parameter, km.
        #[arg(long)]
        length_km: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate thresholds over a parameter range as CSV.
    Sweep {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a weakly-regular lattice network.
    Generate {
        #[arg(long)]
        cell: Option<CellType>,
        #[arg(long)]
        radius: Option<u32>,
        /// Link length, km.
        #[arg(long)]
        d: Option<f64>,
        #[arg(long, value_enum)]
        family: Option<FamilyArg>,
        /// Lattice spec to start from; flags override its fields.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a network file and list every violation.
    Validate {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Randomised cross-checks of the solvers against brute force.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        cases: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum BoundsArg {
    /// Reverse coherent information and squashed entanglement.
    Ad,
    /// Reverse coherent information and relative entropy of entanglement.
    Thermal,
    /// Exact pure-loss capacity.
    PureLoss,
}

impl From<BoundsArg> for BoundPair {
    fn from(b: BoundsArg) -> Self {
        match b {
            BoundsArg::Ad => BoundPair::AD,
            BoundsArg::Thermal => BoundPair::THERMAL,
            BoundsArg::PureLoss => BoundPair::PURE_LOSS,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Ad,
    Tl,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Ad => Family::AmplitudeDamping,
            FamilyArg::Tl => Family::ThermalLoss,
        }
    }
}

/// A failed run, carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub kind: &'static str,
    pub message: String,
    pub violations: Vec<String>,
}

impl Failure {
    pub fn input(message: impl Into<String>) -> Self {
        Failure { code: 2, kind: "input", message: message.into(), violations: Vec::new() }
    }

    pub fn numeric(message: impl Into<String>) -> Self {
        Failure { code: 5, kind: "numeric", message: message.into(), violations: Vec::new() }
    }

    fn invalid(violations: &[Violation]) -> Self {
        Failure {
            code: 3,
            kind: "validation",
            message: format!("{} violation(s)", violations.len()),
            violations: violations.iter().map(ToString::to_string).collect(),
        }
    }

    pub fn unattainable(message: impl Into<String>) -> Self {
        Failure { code: 4, kind: "unattainable", message: message.into(), violations: Vec::new() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Invalid(v) => Failure { code: 3, kind: "validation", message: "invalid network".into(), violations: v },
            Error::NotAttainable { .. } => Failure::unattainable(e.to_string()),
            Error::Monotonicity { .. } | Error::Kraus(_) => Failure::numeric(e.to_string()),
            Error::Domain(_)
            | Error::EmptyCompound
            | Error::Family(_)
            | Error::NotFound(_)
            | Error::Size { .. } => Failure::input(e.to_string()),
        }
    }
}

type Run<T> = std::result::Result<T, Failure>;

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Run<T> {
    let text = fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

/// Write `text` to `out`, or to standard output.
pub fn emit(out: Option<&Path>, text: &str) -> Run<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::input(format!("{}: {e}", p.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|e| Failure::input(e.to_string()))
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct Both<T> {
    lower: T,
    upper: T,
}

#[derive(Serialize)]
struct CutReport {
    value: f64,
    mincut: Cut,
}

#[derive(Serialize)]
struct AnalyzeReport {
    family: Family,
    bounds: BoundPair,
    capacities: CapacityReport,
    widest_path: Both<PathResult>,
    flooding: Both<CutReport>,
    edges: Vec<BoundedEdge>,
}

fn analyze(input: &Path, out: Option<&Path>, bounds: Option<BoundsArg>) -> Run<()> {
    let graph: NetworkGraph = read_json(input)?;
    let violations = graph.validate();
    if !violations.is_empty() {
        return Err(Failure::invalid(&violations));
    }
    let kinds = match bounds {
        Some(b) => b.into(),
        None => graph.default_bounds()?,
    };
    let bg = apply_split(&graph, kinds)?;
    let cut = |sel| {
        let f = max_flow(&bg, sel);
        CutReport { value: f.value, mincut: f.mincut }
    };
    let report = AnalyzeReport {
        family: graph.resolve_family()?,
        bounds: kinds,
        capacities: capacity_report(&bg),
        widest_path: Both { lower: widest_path(&bg, Selector::Lower), upper: widest_path(&bg, Selector::Upper) },
        flooding: Both { lower: cut(Selector::Lower), upper: cut(Selector::Upper) },
        edges: bg.edges().to_vec(),
    };
    emit(out, &to_json(&report))
}

#[derive(Serialize)]
struct ThresholdOutput {
    k: u32,
    delta: u32,
    omega: f64,
    #[serde(flatten)]
    report: ThresholdReport,
    /// Minimum nodal density at the bulk bracket ends.
    #[serde(skip_serializing_if = "Option::is_none")]
    density: Option<[Option<DensityResult>; 2]>,
}

fn threshold(spec: &Path, target: f64, param: ParamKind, length_km: Option<f64>, out: Option<&Path>) -> Run<()> {
    let spec: WrnSpec = read_json(spec)?;
    if !(target > 0.0 && target.is_finite()) {
        return Err(Failure::input(format!("target must be positive, got {target}")));
    }
    let report = threshold_report(&spec, target, param, FixedParams { edge_length_km: length_km })?;
    let density = (param == ParamKind::EdgeLength).then(|| {
        report.bulk.bracket.map(|d| d.and_then(|d| min_nodal_density(d, spec.cell).ok()))
    });
    let output = ThresholdOutput { k: spec.k(), delta: spec.delta()?, omega: spec.omega()?, report, density };
    emit(out, &to_json(&output))?;
    for (edges, r) in [("bulk", &output.report.bulk), ("user", &output.report.user)] {
        if !r.attainable() {
            return Err(Failure::unattainable(format!(
                "target {target} cannot be met on {edges} edges: {}",
                r.notes.join("; ")
            )));
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn generate_cmd(
    cell: Option<CellType>,
    radius: Option<u32>,
    d: Option<f64>,
    family: Option<FamilyArg>,
    spec: Option<&Path>,
    out: Option<&Path>,
) -> Run<()> {
    let mut s = match (spec, cell) {
        (Some(p), _) => read_json::<WrnSpec>(p)?,
        (None, Some(c)) => WrnSpec::new(c, Family::ThermalLoss),
        (None, None) => return Err(Failure::input("either --cell or --spec is required")),
    };
    if let Some(c) = cell {
        s.cell = c;
    }
    if let Some(r) = radius {
        s.radius = r;
    }
    if let Some(d) = d {
        s.edge_length_km = d;
    }
    if let Some(f) = family {
        s.family = f.into();
    }
    let graph = generate(&s)?;
    emit(out, &to_json(&graph))
}

#[derive(Serialize)]
struct ValidateOutput {
    valid: bool,
    violations: Vec<String>,
}

fn validate(input: &Path) -> Run<()> {
    let graph: NetworkGraph = read_json(input)?;
    let violations = graph.validate();
    let out = ValidateOutput { valid: violations.is_empty(), violations: violations.iter().map(ToString::to_string).collect() };
    emit(None, &to_json(&out))?;
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Failure::invalid(&violations))
    }
}

fn run(cli: Cli) -> Run<()> {
    match cli.command {
        Command::Analyze { input, out, bounds } => analyze(&input, out.as_deref(), bounds),
        Command::Threshold { spec, target, param, length_km, out } => {
            threshold(&spec, target, param, length_km, out.as_deref())
        }
        Command::Sweep { spec, out } => sweep::run(&spec, out.as_deref()),
        Command::Generate { cell, radius, d, family, spec, out } => {
            generate_cmd(cell, radius, d, family, spec.as_deref(), out.as_deref())
        }
        Command::Validate { input } => validate(&input),
        Command::Selftest { seed, cases } => selftest::run(seed, cases),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let body = serde_json::json!({
                "error": f.kind,
                "message": f.message,
                "violations": f.violations,
                "exit_code": f.code,
            });
            eprintln!("{body}");
            ExitCode::from(f.code)
        }
    }
}
