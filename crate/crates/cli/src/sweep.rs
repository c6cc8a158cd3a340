//! Threshold tables over a range of one parameter.
//!
//! The output is CSV with a versioned comment line followed by a fixed
//! header: `<variable>,lower,upper,rho_min_lower,rho_min_upper` plus one
//! `nbar_r_<preset>` column per compared QKD preset. `lower` and `upper`
//! are the pessimistic and optimistic ends of the threshold bracket. Cells
//! are left empty where a value does not apply or cannot be reached.

use std::fmt::Write as _;
use std::path::Path;

use qnetcap::channels::FibreParams;
use qnetcap::qkd::preset;
use qnetcap::wrn::{min_nodal_density, threshold_report, FixedParams, ParamKind, Scale, ThresholdResult, WrnSpec};
use rayon::prelude::*;
use serde::Deserialize;

use crate::{emit, read_json, Failure};

pub const SCHEMA: &str = "qnetcap sweep v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Variable {
    EdgeLength,
    InternalLoss,
    ReceiverNoise,
    TargetCapacity,
}

impl Variable {
    fn name(self) -> &'static str {
        match self {
            Variable::EdgeLength => "edgeLength",
            Variable::InternalLoss => "internalLoss",
            Variable::ReceiverNoise => "receiverNoise",
            Variable::TargetCapacity => "targetCapacity",
        }
    }

    fn param(self) -> Option<ParamKind> {
        match self {
            Variable::EdgeLength => Some(ParamKind::EdgeLength),
            Variable::InternalLoss => Some(ParamKind::InternalLoss),
            Variable::ReceiverNoise => Some(ParamKind::ReceiverNoise),
            Variable::TargetCapacity => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
    #[serde(default)]
    pub scale: Spacing,
}

impl Range {
    pub fn points(&self) -> Result<Vec<f64>, Failure> {
        if self.steps < 2 {
            return Err(Failure::input(format!("range needs at least 2 steps, got {}", self.steps)));
        }
        if !(self.start.is_finite() && self.stop.is_finite() && self.start < self.stop) {
            return Err(Failure::input(format!("range needs start < stop, got [{}, {}]", self.start, self.stop)));
        }
        if self.scale == Spacing::Log && self.start <= 0.0 {
            return Err(Failure::input("log range needs positive endpoints"));
        }
        let last = (self.steps - 1) as f64;
        Ok((0..self.steps)
            .map(|i| {
                if i + 1 == self.steps {
                    return self.stop;
                }
                let t = i as f64 / last;
                match self.scale {
                    Spacing::Linear => self.start + t * (self.stop - self.start),
                    Spacing::Log => self.start * (self.stop / self.start).powf(t),
                }
            })
            .collect())
    }
}

fn default_solve() -> ParamKind {
    ParamKind::EdgeLength
}

fn default_scale() -> Scale {
    Scale::Delta
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub variable: Variable,
    pub range: Range,
    pub wrn: WrnSpec,
    /// Target flooding capacity; required unless it is the swept variable.
    #[serde(default)]
    pub target: Option<f64>,
    /// Parameter solved for at each point.
    #[serde(default = "default_solve")]
    pub solve: ParamKind,
    /// Bulk (`delta`) or user (`omega`) edges.
    #[serde(default = "default_scale")]
    pub x: Scale,
    /// QKD presets whose receiver noise is tabulated alongside.
    #[serde(default)]
    pub compare_qkd: Vec<String>,
}

impl SweepSpec {
    fn check(&self) -> Result<Vec<f64>, Failure> {
        if self.variable.param() == Some(self.solve) {
            return Err(Failure::input(format!("cannot sweep and solve for {} at once", self.variable.name())));
        }
        match (self.variable, self.target) {
            (Variable::TargetCapacity, Some(_)) => {
                return Err(Failure::input("target is swept; remove the fixed target"));
            }
            (Variable::TargetCapacity, None) => {
                if self.range.start <= 0.0 {
                    return Err(Failure::input("target capacities must be positive"));
                }
            }
            (_, None) => return Err(Failure::input("target is required")),
            (_, Some(t)) if !(t > 0.0 && t.is_finite()) => {
                return Err(Failure::input(format!("target must be positive, got {t}")));
            }
            _ => {}
        }
        for name in &self.compare_qkd {
            preset(name)?;
        }
        self.range.points()
    }

    fn header(&self) -> String {
        let mut h = format!(
            "# {SCHEMA} variable={} solve={} x={} cell={} family={}\n{},lower,upper,rho_min_lower,rho_min_upper",
            self.variable.name(),
            param_name(self.solve),
            match self.x {
                Scale::Delta => "delta",
                Scale::Omega => "omega",
            },
            self.wrn.cell,
            self.wrn.family,
            self.variable.name(),
        );
        for name in &self.compare_qkd {
            h.push_str(",nbar_r_");
            h.push_str(name);
        }
        h.push('\n');
        h
    }

    /// Spec, target and fixed link length at sweep value `v`.
    fn at(&self, v: f64) -> Result<(WrnSpec, f64, FixedParams), Failure> {
        let mut wrn = self.wrn.clone();
        let mut fixed = FixedParams::default();
        let target = match self.variable {
            Variable::TargetCapacity => v,
            Variable::EdgeLength => {
                fixed.edge_length_km = Some(v);
                wrn.edge_length_km = v;
                self.target.unwrap_or_default()
            }
            other => {
                wrn = wrn.with_param(other.param().expect("non-target variable"), v)?;
                self.target.unwrap_or_default()
            }
        };
        Ok((wrn, target, fixed))
    }

    fn row(&self, v: f64) -> Result<String, Failure> {
        let (wrn, target, fixed) = self.at(v)?;
        let report = threshold_report(&wrn, target, self.solve, fixed)?;
        let r: &ThresholdResult = match self.x {
            Scale::Delta => &report.bulk,
            Scale::Omega => &report.user,
        };
        let mut cells = vec![cell(Some(v)), cell(r.bracket[0]), cell(r.bracket[1])];
        for end in r.bracket {
            let rho = match (self.solve, end) {
                (ParamKind::EdgeLength, Some(d)) if d > 0.0 => Some(min_nodal_density(d, wrn.cell)?.rho_min),
                _ => None,
            };
            cells.push(cell(rho));
        }
        // Receiver noise needs a known link length.
        let length = (self.solve != ParamKind::EdgeLength).then_some(wrn.edge_length_km);
        for name in &self.compare_qkd {
            let q = preset(name)?;
            let nbar = match length {
                Some(d) => {
                    let eta = FibreParams { gamma: wrn.gamma, nbar_b: q.nbar_b, length_km: d }.transmissivity();
                    Some(q.receiver_noise(eta)?)
                }
                None => None,
            };
            cells.push(cell(nbar));
        }
        let mut line = cells.join(",");
        line.push('\n');
        Ok(line)
    }
}

fn param_name(p: ParamKind) -> String {
    serde_json::to_value(p).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default()
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// The full CSV table for `spec`.
pub fn table(spec: &SweepSpec) -> Result<String, Failure> {
    let points = spec.check()?;
    let rows: Vec<String> = points.par_iter().map(|&v| spec.row(v)).collect::<Result<_, _>>()?;
    let mut out = spec.header();
    for r in rows {
        write!(out, "{r}").expect("writing to a string");
    }
    Ok(out)
}

pub fn run(path: &Path, out: Option<&Path>) -> Result<(), Failure> {
    let spec: SweepSpec = read_json(path)?;
    emit(out, &table(&spec)?)
}
