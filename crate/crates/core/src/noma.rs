//! Two-user downlink power-domain NOMA.
//!
//! User 1 has the stronger channel. User 2 decodes its own message `m₂`
//! treating `m₁` as interference; user 1 first decodes `m₂` (SIC), removes
//! it, then decodes `m₁` interference-free. With transmit SNR ρ:
//!
//! ```text
//! γ₂₂ = α₂|h₂|²ρ / (α₁|h₂|²ρ + 1)
//! γ₁₂ = α₂|h₁|²ρ / (α₁|h_k|²ρ + 1)     k = 2 (paper-literal) or 1 (corrected)
//! γ₁₁ = α₁|h₁|²ρ
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::fbl::Sinr;

/// Which channel gain sits in the interference term of γ₁₂.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SinrMode {
    /// Weak user's gain `|h₂|²` in the denominator.
    #[default]
    PaperLiteral,
    /// Strong user's own gain `|h₁|²`, the physically consistent form.
    Corrected,
}

pub const DEFAULT_ALPHA1: f64 = 0.2;
pub const DEFAULT_ALPHA2: f64 = 0.8;

/// Channel gains and power split, without the transmit SNR.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkGeometry {
    h1_sq: f64,
    h2_sq: f64,
    alpha1: f64,
    alpha2: f64,
    swapped: bool,
}

impl LinkGeometry {
    /// Gains are reordered so that `h1_sq ≥ h2_sq`; [`Self::swapped`]
    /// records whether that happened.
    pub fn new(h1_sq: f64, h2_sq: f64, alpha1: f64, alpha2: f64) -> Result<Self> {
        for (name, h) in [("h1_sq", h1_sq), ("h2_sq", h2_sq)] {
            if !(h > 0.0 && h.is_finite()) {
                return domain(format!("{name} must be positive and finite, got {h}"));
            }
        }
        for (name, a) in [("alpha1", alpha1), ("alpha2", alpha2)] {
            if !(a > 0.0 && a < 1.0) {
                return domain(format!("{name} must lie in (0, 1), got {a}"));
            }
        }
        if (alpha1 + alpha2 - 1.0).abs() > 1e-12 {
            return domain(format!(
                "power split must sum to one, got {alpha1} + {alpha2} = {}",
                alpha1 + alpha2
            ));
        }
        if !(alpha2 > alpha1) {
            return domain(format!(
                "the weak user needs the larger power share for SIC (alpha2 = {alpha2} <= alpha1 = {alpha1})"
            ));
        }
        let swapped = h1_sq < h2_sq;
        let (h1_sq, h2_sq) = if swapped { (h2_sq, h1_sq) } else { (h1_sq, h2_sq) };
        Ok(Self {
            h1_sq,
            h2_sq,
            alpha1,
            alpha2,
            swapped,
        })
    }

    pub fn with_default_split(h1_sq: f64, h2_sq: f64) -> Result<Self> {
        Self::new(h1_sq, h2_sq, DEFAULT_ALPHA1, DEFAULT_ALPHA2)
    }

    pub fn h1_sq(&self) -> f64 {
        self.h1_sq
    }
    pub fn h2_sq(&self) -> f64 {
        self.h2_sq
    }
    pub fn alpha1(&self) -> f64 {
        self.alpha1
    }
    pub fn alpha2(&self) -> f64 {
        self.alpha2
    }
    pub fn swapped(&self) -> bool {
        self.swapped
    }

    fn interference_gain(&self, mode: SinrMode) -> f64 {
        match mode {
            SinrMode::PaperLiteral => self.h2_sq,
            SinrMode::Corrected => self.h1_sq,
        }
    }

    /// Supremum of γ₁₂ over ρ.
    pub fn strong_user_sic_ceiling(&self, mode: SinrMode) -> f64 {
        self.alpha2 * self.h1_sq / (self.alpha1 * self.interference_gain(mode))
    }

    pub fn at_rho(self, rho: f64) -> Result<NomaLink> {
        if !(rho > 0.0 && rho.is_finite()) {
            return domain(format!("transmit SNR must be positive, got {rho}"));
        }
        Ok(NomaLink { geometry: self, rho })
    }
}

/// A link geometry operated at transmit SNR ρ (linear).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NomaLink {
    pub geometry: LinkGeometry,
    pub rho: f64,
}

impl NomaLink {
    pub fn new(h1_sq: f64, h2_sq: f64, alpha1: f64, alpha2: f64, rho: f64) -> Result<Self> {
        LinkGeometry::new(h1_sq, h2_sq, alpha1, alpha2)?.at_rho(rho)
    }
}

/// SINRs of the three decoding steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinrTriple {
    /// User 2 decoding its own message.
    pub gamma_22: Sinr,
    /// User 1 decoding user 2's message before cancellation.
    pub gamma_12: Sinr,
    /// User 1 decoding its own message after cancellation.
    pub gamma_11: Sinr,
}

pub fn sinr_triple(link: &NomaLink, mode: SinrMode) -> SinrTriple {
    let g = &link.geometry;
    let rho = link.rho;
    let gamma_22 = g.alpha2 * g.h2_sq * rho / (g.alpha1 * g.h2_sq * rho + 1.0);
    let gamma_12 = g.alpha2 * g.h1_sq * rho / (g.alpha1 * g.interference_gain(mode) * rho + 1.0);
    let gamma_11 = g.alpha1 * rho * g.h1_sq;
    SinrTriple {
        gamma_22: Sinr::new(gamma_22).unwrap_or(Sinr::ZERO),
        gamma_12: Sinr::new(gamma_12).unwrap_or(Sinr::ZERO),
        gamma_11: Sinr::new(gamma_11).unwrap_or(Sinr::ZERO),
    }
}

/// `α₂/α₁`, the limit of γ₂₂ as ρ → ∞.
pub fn weak_user_sinr_ceiling(geometry: &LinkGeometry) -> f64 {
    geometry.alpha2 / geometry.alpha1
}

/// The decoding step that set the required transmit SNR.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Constraint {
    #[serde(rename = "gamma_22")]
    Gamma22,
    #[serde(rename = "gamma_12")]
    Gamma12,
    #[serde(rename = "gamma_11")]
    Gamma11,
}

impl Constraint {
    pub fn label(self) -> &'static str {
        match self {
            Constraint::Gamma22 => "gamma_22",
            Constraint::Gamma12 => "gamma_12",
            Constraint::Gamma11 => "gamma_11",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RhoSolution {
    pub rho: f64,
    pub binding: Constraint,
}

/// Smallest transmit SNR meeting all three SINR targets.
///
/// Interference-limited targets at or above their ceilings are reported as
/// [`Error::Infeasible`], naming the constraint and the ceiling.
pub fn solve_rho_for_targets(
    geometry: &LinkGeometry,
    target: &SinrTriple,
    mode: SinrMode,
) -> Result<RhoSolution> {
    let g = geometry;
    let t22 = target.gamma_22.linear();
    let t12 = target.gamma_12.linear();
    let t11 = target.gamma_11.linear();

    // ρ ≥ t / (h_sig·α₂ − h_int·α₁·t), needs the denominator positive
    let interference_limited = |t: f64, h_sig: f64, h_int: f64, which: Constraint| -> Result<f64> {
        if t == 0.0 {
            return Ok(0.0);
        }
        let ceiling = g.alpha2 * h_sig / (g.alpha1 * h_int);
        let headroom = g.alpha2 * h_sig - g.alpha1 * h_int * t;
        if !(t < ceiling) || !(headroom > 0.0) {
            return Err(Error::Infeasible(format!(
                "{} target {t} meets or exceeds its ceiling {ceiling} at any transmit power",
                which.label()
            )));
        }
        Ok(t / headroom)
    };

    let candidates = [
        (
            interference_limited(t22, g.h2_sq, g.h2_sq, Constraint::Gamma22)?,
            Constraint::Gamma22,
        ),
        (
            interference_limited(t12, g.h1_sq, g.interference_gain(mode), Constraint::Gamma12)?,
            Constraint::Gamma12,
        ),
        (t11 / (g.alpha1 * g.h1_sq), Constraint::Gamma11),
    ];
    let (rho, binding) = candidates
        .into_iter()
        .fold((0.0, Constraint::Gamma22), |best, c| if c.0 > best.0 { c } else { best });
    Ok(RhoSolution { rho, binding })
}
