//! Parameter sweeps over the required-SINR solvers.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::Deserialize;
use urllc_noma::fbl::{DispersionMode, SystemConfig};
use urllc_noma::numerics::Probability;
use urllc_noma::planner::{solve_required_sinr, solve_required_sinr_oma, Modes, SinrSolution};
use urllc_noma::traffic::{QosExponent, TrafficModel};

use crate::format::{number, optional, parse_optional};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum SweepVariable {
    /// Transmission error target.
    #[serde(rename = "eps_c")]
    EpsC,
    /// QoS exponent.
    #[serde(rename = "theta")]
    Theta,
    /// Packet size in bytes.
    #[serde(rename = "u")]
    PacketBytes,
    /// Transmission phase in seconds.
    #[serde(rename = "phi")]
    TxPhase,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::EpsC => "eps_c",
            SweepVariable::Theta => "theta",
            SweepVariable::PacketBytes => "u",
            SweepVariable::TxPhase => "phi",
        }
    }
}

impl fmt::Display for SweepVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepVariable {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "eps_c" => Ok(SweepVariable::EpsC),
            "theta" => Ok(SweepVariable::Theta),
            "u" => Ok(SweepVariable::PacketBytes),
            "phi" => Ok(SweepVariable::TxPhase),
            other => Err(format!("unknown sweep variable {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Log,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Access {
    Noma,
    Oma,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub spacing: Spacing,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    pub overlay_variable: Option<SweepVariable>,
    pub overlay: Vec<f64>,
    pub theta: f64,
    pub eps_c: f64,
    pub base: SystemConfig,
    pub traffic: TrafficModel,
    pub modes: Modes,
}

/// Figure presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Error target sweep, one curve per packet size.
    Fig1,
    /// Error target sweep, one curve per transmission phase.
    Fig2,
    /// QoS exponent sweep, one curve per packet size.
    Fig3,
    /// QoS exponent sweep, one curve per transmission phase.
    Fig4,
    /// Error targets up to 0.5 for NOMA against OMA.
    Compare,
}

impl Preset {
    pub fn spec(self, base: SystemConfig, traffic: TrafficModel, modes: Modes) -> SweepSpec {
        let packet_sizes = vec![5.0, 15.0, 25.0];
        let phases = vec![1e-5, 3e-4];
        let (variable, start, stop, points, overlay_variable, overlay) = match self {
            Preset::Fig1 => (SweepVariable::EpsC, 1e-5, 1e-3, 20, SweepVariable::PacketBytes, packet_sizes),
            Preset::Fig2 => (SweepVariable::EpsC, 1e-5, 1e-3, 20, SweepVariable::TxPhase, phases),
            Preset::Fig3 => (SweepVariable::Theta, 1e-3, 1.0, 20, SweepVariable::PacketBytes, packet_sizes),
            Preset::Fig4 => (SweepVariable::Theta, 1e-3, 1.0, 20, SweepVariable::TxPhase, phases),
            Preset::Compare => (SweepVariable::EpsC, 1e-5, 0.5, 25, SweepVariable::PacketBytes, packet_sizes),
        };
        SweepSpec {
            variable,
            spacing: Spacing::Log,
            start,
            stop,
            points,
            overlay_variable: Some(overlay_variable),
            overlay,
            theta: 0.1,
            eps_c: 1e-5,
            base,
            traffic,
            modes,
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.start < self.stop) {
            return Err(format!("start {} must be below stop {}", self.start, self.stop));
        }
        if self.points < 2 {
            return Err(format!("need at least 2 points, got {}", self.points));
        }
        if self.spacing == Spacing::Log && !(self.start > 0.0) {
            return Err("log spacing needs positive endpoints".into());
        }
        if let Some(v) = self.overlay_variable {
            if v == self.variable {
                return Err(format!("overlay variable {v} is also the swept variable"));
            }
            if self.overlay.is_empty() {
                return Err("overlay_variable given without overlay values".into());
            }
        } else if !self.overlay.is_empty() {
            return Err("overlay values given without overlay_variable".into());
        }
        Ok(())
    }

    /// Grid values with both endpoints exact.
    pub fn grid(&self) -> Vec<f64> {
        let n = self.points;
        (0..n)
            .map(|i| {
                if i == 0 {
                    return self.start;
                }
                if i == n - 1 {
                    return self.stop;
                }
                let t = i as f64 / (n - 1) as f64;
                match self.spacing {
                    Spacing::Linear => self.start + t * (self.stop - self.start),
                    Spacing::Log => (self.start.ln() + t * (self.stop.ln() - self.start.ln())).exp(),
                }
            })
            .collect()
    }

    fn overlays(&self) -> Vec<Option<f64>> {
        if self.overlay_variable.is_some() {
            self.overlay.iter().copied().map(Some).collect()
        } else {
            vec![None]
        }
    }

    fn solve_point(&self, value: f64, overlay: Option<f64>, access: Access) -> urllc_noma::Result<SinrSolution> {
        let mut cfg = self.base;
        let mut theta = self.theta;
        let mut eps_c = self.eps_c;
        let assignments = [(Some(self.variable), value)]
            .into_iter()
            .chain(overlay.map(|v| (self.overlay_variable, v)));
        for (variable, v) in assignments {
            match variable {
                Some(SweepVariable::EpsC) => eps_c = v,
                Some(SweepVariable::Theta) => theta = v,
                Some(SweepVariable::PacketBytes) => cfg = cfg.with_packet_bytes(v)?,
                Some(SweepVariable::TxPhase) => cfg = cfg.with_tx_phase(v)?,
                None => {}
            }
        }
        let qos = QosExponent::new(theta)?;
        let eps = Probability::new(eps_c)?;
        let mode: DispersionMode = self.modes.dispersion;
        match access {
            Access::Noma => solve_required_sinr(&cfg, &self.traffic, qos, eps, mode),
            Access::Oma => solve_required_sinr_oma(&cfg, &self.traffic, qos, eps, mode),
        }
    }

    /// Evaluates every grid point, overlay-major. Solver failures are kept
    /// as infeasible rows.
    pub fn run(&self, access: Access) -> SweepResult {
        let grid = self.grid();
        let mut rows = Vec::with_capacity(grid.len() * self.overlay.len().max(1));
        for overlay in self.overlays() {
            for &value in &grid {
                rows.push(match self.solve_point(value, overlay, access) {
                    Ok(sol) => SweepRow {
                        value,
                        overlay,
                        snr_db: Some(sol.sinr.db()),
                        snr_linear: Some(sol.sinr.linear()),
                        feasible: true,
                        iterations: sol.iterations,
                    },
                    Err(_) => SweepRow {
                        value,
                        overlay,
                        snr_db: None,
                        snr_linear: None,
                        feasible: false,
                        iterations: 0,
                    },
                });
            }
        }
        SweepResult {
            variable: self.variable,
            overlay_variable: self.overlay_variable,
            rows,
        }
    }

    /// Paired NOMA and OMA requirements at every grid point.
    pub fn compare(&self) -> CompareResult {
        let noma = self.run(Access::Noma);
        let oma = self.run(Access::Oma);
        let rows = noma
            .rows
            .iter()
            .zip(&oma.rows)
            .map(|(n, o)| CompareRow {
                value: n.value,
                overlay: n.overlay,
                gamma_noma: n.snr_linear,
                gamma_oma: o.snr_linear,
                gap_db: match (n.snr_linear, o.snr_linear) {
                    (Some(a), Some(b)) if a == 0.0 && b == 0.0 => Some(0.0),
                    (Some(a), Some(b)) => Some(10.0 * (b / a).log10()),
                    _ => None,
                },
            })
            .collect();
        CompareResult {
            variable: self.variable,
            overlay_variable: self.overlay_variable,
            rows,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub overlay: Option<f64>,
    pub snr_db: Option<f64>,
    pub snr_linear: Option<f64>,
    pub feasible: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub variable: SweepVariable,
    pub overlay_variable: Option<SweepVariable>,
    pub rows: Vec<SweepRow>,
}

const OVERLAY_NONE: &str = "overlay";

fn header_names(variable: SweepVariable, overlay: Option<SweepVariable>) -> [String; 2] {
    [
        variable.name().to_owned(),
        overlay.map_or(OVERLAY_NONE.to_owned(), |v| v.name().to_owned()),
    ]
}

fn parse_header(record: &csv::StringRecord, tail: &[&str]) -> Result<(SweepVariable, Option<SweepVariable>), String> {
    let fields: Vec<&str> = record.iter().collect();
    if fields.len() != 2 + tail.len() || fields[2..] != *tail {
        return Err(format!("unexpected header {fields:?}"));
    }
    let variable = fields[0].parse()?;
    let overlay = match fields[1] {
        OVERLAY_NONE => None,
        name => Some(name.parse()?),
    };
    Ok((variable, overlay))
}

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().has_headers(false).from_reader(input)
}

const SWEEP_COLUMNS: [&str; 4] = ["snr_db", "snr_linear", "feasible", "iterations"];
const COMPARE_COLUMNS: [&str; 3] = ["gamma_noma", "gamma_oma", "gap_db"];

impl SweepResult {
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = writer(out);
        let [a, b] = header_names(self.variable, self.overlay_variable);
        w.write_record([a.as_str(), b.as_str()].iter().chain(SWEEP_COLUMNS.iter()))?;
        for r in &self.rows {
            w.write_record([
                number(r.value),
                optional(r.overlay),
                optional(r.snr_db),
                optional(r.snr_linear),
                r.feasible.to_string(),
                r.iterations.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self, String> {
        let mut records = reader(input).into_records();
        let header = records.next().ok_or("empty file")?.map_err(|e| e.to_string())?;
        let (variable, overlay_variable) = parse_header(&header, &SWEEP_COLUMNS)?;
        let mut rows = Vec::new();
        for record in records {
            let r = record.map_err(|e| e.to_string())?;
            if r.len() != 6 {
                return Err(format!("expected 6 fields, got {}", r.len()));
            }
            rows.push(SweepRow {
                value: parse_optional(&r[0])?.ok_or("missing variable value")?,
                overlay: parse_optional(&r[1])?,
                snr_db: parse_optional(&r[2])?,
                snr_linear: parse_optional(&r[3])?,
                feasible: r[4].parse().map_err(|_| format!("bad flag {:?}", &r[4]))?,
                iterations: r[5].parse().map_err(|_| format!("bad count {:?}", &r[5]))?,
            });
        }
        Ok(Self {
            variable,
            overlay_variable,
            rows,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub value: f64,
    pub overlay: Option<f64>,
    pub gamma_noma: Option<f64>,
    pub gamma_oma: Option<f64>,
    /// `10·log10(γ_OMA/γ_NOMA)`, zero when both are zero.
    pub gap_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareResult {
    pub variable: SweepVariable,
    pub overlay_variable: Option<SweepVariable>,
    pub rows: Vec<CompareRow>,
}

impl CompareResult {
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = writer(out);
        let [a, b] = header_names(self.variable, self.overlay_variable);
        w.write_record([a.as_str(), b.as_str()].iter().chain(COMPARE_COLUMNS.iter()))?;
        for r in &self.rows {
            w.write_record([
                number(r.value),
                optional(r.overlay),
                optional(r.gamma_noma),
                optional(r.gamma_oma),
                optional(r.gap_db),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self, String> {
        let mut records = reader(input).into_records();
        let header = records.next().ok_or("empty file")?.map_err(|e| e.to_string())?;
        let (variable, overlay_variable) = parse_header(&header, &COMPARE_COLUMNS)?;
        let mut rows = Vec::new();
        for record in records {
            let r = record.map_err(|e| e.to_string())?;
            if r.len() != 5 {
                return Err(format!("expected 5 fields, got {}", r.len()));
            }
            rows.push(CompareRow {
                value: parse_optional(&r[0])?.ok_or("missing variable value")?,
                overlay: parse_optional(&r[1])?,
                gamma_noma: parse_optional(&r[2])?,
                gamma_oma: parse_optional(&r[3])?,
                gap_db: parse_optional(&r[4])?,
            });
        }
        Ok(Self {
            variable,
            overlay_variable,
            rows,
        })
    }
}
