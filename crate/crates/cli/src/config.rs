//! Configuration files.
//!
//! A config is a TOML document with one table per concern:
//!
//! ```toml
//! [system]
//! frame_duration_s = 5e-4
//! bandwidth_hz = 1e5
//! packet_size_bytes = 15
//! tx_phase_s = 3e-4
//! delay_bound_s = 8e-4
//! # noise_psd = 3.981071705534972e-21   (W/Hz, optional)
//!
//! [traffic]
//! mean_arrivals_per_frame = 0.01
//! # eta = 1.0
//! # [traffic.m12]  per-message override, also m11 and m22
//! # mean_arrivals_per_frame = 0.02
//!
//! [reliability]
//! eps_d = 1e-5
//! split = "equal"            # "equal", "fixed" (needs ratio) or "optimized"
//!
//! [link]
//! h1_sq = 2.0
//! h2_sq = 1.0
//! alpha1 = 0.2
//! alpha2 = 0.8
//!
//! [modes]
//! dispersion = "paper_literal"   # or "standard"
//! sinr = "paper_literal"         # or "corrected"
//! ```
//!
//! `sweep` and `compare` read a `[sweep]` table (see [`SweepSection`]) and
//! `simulate` reads `[traffic]` and `[simulation]`. Unknown keys are
//! rejected.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use urllc_noma::fbl::{DispersionMode, SystemConfig};
use urllc_noma::noma::{LinkGeometry, SinrMode};
use urllc_noma::numerics::Probability;
use urllc_noma::planner::{MessageTraffic, Modes, PlanInputs, SplitPolicy};
use urllc_noma::sim::QueueSimConfig;
use urllc_noma::traffic::TrafficModel;

use crate::error::{CliError, Result};
use crate::sweep::{Spacing, SweepSpec, SweepVariable};

const THERMAL_NOISE_PSD: f64 = 3.981_071_705_534_972e-21;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub frame_duration_s: f64,
    pub bandwidth_hz: f64,
    pub packet_size_bytes: f64,
    pub tx_phase_s: f64,
    pub delay_bound_s: f64,
    pub noise_psd: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreamSection {
    pub mean_arrivals_per_frame: f64,
    pub eta: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrafficSection {
    pub mean_arrivals_per_frame: f64,
    pub eta: Option<f64>,
    pub m11: Option<StreamSection>,
    pub m12: Option<StreamSection>,
    pub m22: Option<StreamSection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitName {
    Equal,
    Fixed,
    Optimized,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReliabilitySection {
    pub eps_d: f64,
    #[serde(default = "default_split")]
    pub split: SplitName,
    pub ratio: Option<f64>,
}

fn default_split() -> SplitName {
    SplitName::Equal
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSection {
    pub h1_sq: f64,
    pub h2_sq: f64,
    pub alpha1: f64,
    pub alpha2: f64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModesSection {
    #[serde(default)]
    pub dispersion: DispersionMode,
    #[serde(default)]
    pub sinr: SinrMode,
}

/// Grid definition for `sweep` and `compare`.
///
/// `theta` and `eps_c` fix the QoS exponent and transmission error target
/// for every point unless one of them is the swept or overlaid variable.
/// Packet sizes are in bytes and transmission phases in seconds.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub variable: SweepVariable,
    #[serde(default = "default_spacing")]
    pub spacing: Spacing,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    pub overlay_variable: Option<SweepVariable>,
    #[serde(default)]
    pub overlay: Vec<f64>,
    pub theta: f64,
    pub eps_c: f64,
}

fn default_spacing() -> Spacing {
    Spacing::Log
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub seed: u64,
    pub num_frames: u64,
    pub service_packets_per_frame: f64,
    pub frame_duration_s: f64,
    pub delay_bound_s: f64,
    pub warmup_frames: Option<u64>,
    #[serde(default)]
    pub substream: u64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub system: Option<SystemSection>,
    pub traffic: Option<TrafficSection>,
    pub reliability: Option<ReliabilitySection>,
    pub link: Option<LinkSection>,
    pub modes: Option<ModesSection>,
    pub sweep: Option<SweepSection>,
    pub simulation: Option<SimulationSection>,
}

/// A parsed config together with where it came from, for error messages.
#[derive(Debug, Clone)]
pub struct Config {
    pub path: PathBuf,
    pub file: ConfigFile,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::config(path, e))?;
        Self::parse(path, &text)
    }

    pub fn parse(path: &Path, text: &str) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| CliError::config(path, e.to_string().trim_end()))?;
        Ok(Self {
            path: path.to_path_buf(),
            file,
        })
    }

    fn err(&self, message: impl ToString) -> CliError {
        CliError::config(&self.path, message)
    }

    fn section<'a, T>(&self, value: &'a Option<T>, name: &str) -> Result<&'a T> {
        value
            .as_ref()
            .ok_or_else(|| self.err(format!("missing section [{name}]")))
    }

    fn check<T>(&self, what: &str, r: urllc_noma::Result<T>) -> Result<T> {
        r.map_err(|e| self.err(format!("{what}: {e}")))
    }

    pub fn system(&self) -> Result<SystemConfig> {
        let s = self.section(&self.file.system, "system")?;
        self.check(
            "[system]",
            SystemConfig::new(
                s.frame_duration_s,
                s.bandwidth_hz,
                8.0 * s.packet_size_bytes,
                s.tx_phase_s,
                s.noise_psd.unwrap_or(THERMAL_NOISE_PSD),
                s.delay_bound_s,
            ),
        )
    }

    fn stream(&self, name: &str, lambda: f64, eta: Option<f64>, frame_s: f64) -> Result<TrafficModel> {
        let model = self.check(name, TrafficModel::new(lambda, frame_s))?;
        match eta {
            Some(eta) => self.check(name, model.with_eta(eta)),
            None => Ok(model),
        }
    }

    /// Per-message arrival models, all on the given frame duration.
    pub fn traffic(&self, frame_duration_s: f64) -> Result<MessageTraffic> {
        let t = self.section(&self.file.traffic, "traffic")?;
        let base = self.stream("[traffic]", t.mean_arrivals_per_frame, t.eta, frame_duration_s)?;
        let pick = |name: &str, o: &Option<StreamSection>| match o {
            Some(s) => self.stream(name, s.mean_arrivals_per_frame, s.eta.or(t.eta), frame_duration_s),
            None => Ok(base),
        };
        Ok(MessageTraffic {
            m11: pick("[traffic.m11]", &t.m11)?,
            m12: pick("[traffic.m12]", &t.m12)?,
            m22: pick("[traffic.m22]", &t.m22)?,
        })
    }

    pub fn modes(&self) -> Modes {
        self.file
            .modes
            .as_ref()
            .map(|m| Modes {
                dispersion: m.dispersion,
                sinr: m.sinr,
            })
            .unwrap_or_default()
    }

    pub fn plan_inputs(&self, mode_override: Option<Modes>) -> Result<PlanInputs> {
        let cfg = self.system()?;
        let traffic = self.traffic(cfg.frame_duration_s)?;
        let r = self.section(&self.file.reliability, "reliability")?;
        let eps_d = self.check("[reliability] eps_d", Probability::new(r.eps_d))?;
        let policy = match (r.split, r.ratio) {
            (SplitName::Equal, None) => SplitPolicy::EqualSplit,
            (SplitName::Optimized, None) => SplitPolicy::Optimized,
            (SplitName::Fixed, Some(ratio)) if ratio > 0.0 && ratio < 1.0 => SplitPolicy::FixedSplit(ratio),
            (SplitName::Fixed, Some(ratio)) => {
                return Err(self.err(format!("[reliability] ratio must lie in (0, 1), got {ratio}")))
            }
            (SplitName::Fixed, None) => return Err(self.err("[reliability] split = \"fixed\" needs a ratio")),
            (_, Some(_)) => return Err(self.err("[reliability] ratio is only valid with split = \"fixed\"")),
        };
        let l = self.section(&self.file.link, "link")?;
        let geometry = self.check("[link]", LinkGeometry::new(l.h1_sq, l.h2_sq, l.alpha1, l.alpha2))?;
        Ok(PlanInputs {
            cfg,
            traffic,
            geometry,
            eps_d,
            policy,
            modes: mode_override.unwrap_or_else(|| self.modes()),
        })
    }

    /// Sweep grid from `[sweep]` over this config's system and traffic.
    pub fn sweep(&self, mode_override: Option<Modes>) -> Result<SweepSpec> {
        let s = self.section(&self.file.sweep, "sweep")?;
        let base = self.system()?;
        let traffic = self.traffic(base.frame_duration_s)?.m11;
        let spec = SweepSpec {
            variable: s.variable,
            spacing: s.spacing,
            start: s.start,
            stop: s.stop,
            points: s.points,
            overlay_variable: s.overlay_variable,
            overlay: s.overlay.clone(),
            theta: s.theta,
            eps_c: s.eps_c,
            base,
            traffic,
            modes: mode_override.unwrap_or_else(|| self.modes()),
        };
        spec.validate().map_err(|e| self.err(format!("[sweep] {e}")))?;
        Ok(spec)
    }

    pub fn queue(&self) -> Result<(QueueSimConfig, f64)> {
        let s = self.section(&self.file.simulation, "simulation")?;
        let t = self.section(&self.file.traffic, "traffic")?;
        let traffic = self.stream("[traffic]", t.mean_arrivals_per_frame, t.eta, s.frame_duration_s)?;
        let mut q = self.check(
            "[simulation]",
            QueueSimConfig::new(s.seed, s.num_frames, s.service_packets_per_frame, traffic),
        )?;
        q.substream = s.substream;
        if let Some(w) = s.warmup_frames {
            if w >= s.num_frames {
                return Err(self.err("[simulation] warmup_frames must be below num_frames"));
            }
            q.warmup_frames = w;
        }
        if !(s.delay_bound_s >= 0.0 && s.delay_bound_s.is_finite()) {
            return Err(self.err(format!(
                "[simulation] delay_bound_s must be non-negative, got {}",
                s.delay_bound_s
            )));
        }
        Ok((q, s.delay_bound_s))
    }
}
