//! Finite-blocklength rate model.
//!
//! The number of packets that fit in one frame at error probability ε is
//! the normal approximation in nats, converted to packets of `u` bits:
//!
//! ```text
//! s = n/(u·ln 2) · [ ln(1+γ) − √(V/n) · Q⁻¹(ε) ],   n = φ·B
//! ```
//!
//! With the orthogonal two-user split each user sees half the blocklength,
//! which doubles the dispersion penalty inside the root and halves the
//! prefactor.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::numerics::{inv_q_function, q_function, Probability};
use crate::traffic::DelayBound;

/// Blocklengths below this are flagged: the normal approximation is
/// unreliable for very short codes.
pub const SHORT_BLOCKLENGTH: f64 = 50.0;

/// Physical-layer and frame parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub frame_duration_s: f64,
    pub bandwidth_hz: f64,
    pub packet_size_bits: f64,
    pub tx_phase_s: f64,
    /// One-sided noise power spectral density, W/Hz.
    pub noise_psd: f64,
    pub delay_bound_s: f64,
}

impl SystemConfig {
    pub fn new(
        frame_duration_s: f64,
        bandwidth_hz: f64,
        packet_size_bits: f64,
        tx_phase_s: f64,
        noise_psd: f64,
        delay_bound_s: f64,
    ) -> Result<Self> {
        let cfg = Self {
            frame_duration_s,
            bandwidth_hz,
            packet_size_bits,
            tx_phase_s,
            noise_psd,
            delay_bound_s,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Frame 0.5 ms, B = 100 kHz, 15-byte packets, φ = 0.3 ms, D = 0.8 ms,
    /// thermal noise at −174 dBm/Hz.
    pub fn table1() -> Self {
        Self {
            frame_duration_s: 5e-4,
            bandwidth_hz: 1e5,
            packet_size_bits: 120.0,
            tx_phase_s: 3e-4,
            noise_psd: 3.981_071_705_534_972e-21,
            delay_bound_s: 8e-4,
        }
    }

    pub fn with_packet_bytes(mut self, bytes: f64) -> Result<Self> {
        self.packet_size_bits = 8.0 * bytes;
        self.validate()?;
        Ok(self)
    }

    pub fn with_packet_bits(mut self, bits: f64) -> Result<Self> {
        self.packet_size_bits = bits;
        self.validate()?;
        Ok(self)
    }

    pub fn with_tx_phase(mut self, tx_phase_s: f64) -> Result<Self> {
        self.tx_phase_s = tx_phase_s;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("frame_duration_s", self.frame_duration_s),
            ("bandwidth_hz", self.bandwidth_hz),
            ("packet_size_bits", self.packet_size_bits),
            ("tx_phase_s", self.tx_phase_s),
            ("noise_psd", self.noise_psd),
            ("delay_bound_s", self.delay_bound_s),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return domain(format!("{name} must be positive and finite, got {v}"));
            }
        }
        if self.tx_phase_s > self.frame_duration_s {
            return domain(format!(
                "transmission phase {} s exceeds frame duration {} s",
                self.tx_phase_s, self.frame_duration_s
            ));
        }
        // allow for φ·B landing a hair under an integer
        if self.blocklength() < 1.0 - 1e-9 {
            return domain(format!(
                "blocklength φ·B = {} is below one symbol",
                self.blocklength()
            ));
        }
        Ok(())
    }

    /// Channel uses per frame, `n = φ·B`.
    pub fn blocklength(&self) -> f64 {
        let n = self.tx_phase_s * self.bandwidth_hz;
        // φ and B are usually decimal values whose product is a whole
        // number of symbols; undo the rounding of the product
        let whole = n.round();
        if (n - whole).abs() <= 1e-9 * whole {
            whole
        } else {
            n
        }
    }

    pub fn is_short_blocklength(&self) -> bool {
        self.blocklength() < SHORT_BLOCKLENGTH
    }

    pub fn delay_bound(&self) -> Result<DelayBound> {
        DelayBound::new(self.delay_bound_s)
    }

    /// Transmit SNR `P/(N_o·B)` for a transmit power in watts.
    pub fn transmit_snr(&self, power_w: f64) -> f64 {
        power_w / (self.noise_psd * self.bandwidth_hz)
    }
}

/// Linear SINR.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Sinr(f64);

impl Sinr {
    pub const ZERO: Sinr = Sinr(0.0);

    pub fn new(gamma: f64) -> Result<Self> {
        if gamma >= 0.0 && gamma.is_finite() {
            Ok(Self(gamma))
        } else {
            domain(format!("SINR must be finite and non-negative, got {gamma}"))
        }
    }

    pub fn from_db(db: f64) -> Result<Self> {
        Self::new(10f64.powf(db / 10.0))
    }

    pub fn linear(self) -> f64 {
        self.0
    }

    pub fn db(self) -> f64 {
        10.0 * self.0.log10()
    }
}

impl TryFrom<f64> for Sinr {
    type Error = crate::error::Error;
    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Sinr> for f64 {
    fn from(s: Sinr) -> f64 {
        s.0
    }
}

/// Which channel dispersion to use in the rate penalty.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DispersionMode {
    /// `V = 1 − 1/(1+γ)`.
    #[default]
    PaperLiteral,
    /// `V = 1 − (1+γ)⁻²`, the AWGN dispersion in nats².
    Standard,
}

pub fn channel_dispersion(gamma: Sinr, mode: DispersionMode) -> f64 {
    let g = gamma.linear();
    let one_plus = 1.0 + g;
    match mode {
        DispersionMode::PaperLiteral => g / one_plus,
        DispersionMode::Standard => g * (2.0 + g) / (one_plus * one_plus),
    }
}

/// Packets per frame; negative values mean the error target cannot be met.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Packets(f64);

impl Packets {
    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_feasible(self) -> bool {
        self.0 > 0.0
    }
}

/// Blocklength multiplier of the access scheme: NOMA users see the whole
/// block, the orthogonal baseline splits it between two users.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Access {
    Noma,
    Oma,
}

impl Access {
    pub(crate) fn share(self) -> f64 {
        match self {
            Access::Noma => 1.0,
            Access::Oma => 2.0,
        }
    }
}

pub(crate) fn packets_for(
    access: Access,
    gamma: Sinr,
    cfg: &SystemConfig,
    eps_c: Probability,
    mode: DispersionMode,
) -> f64 {
    let n = cfg.blocklength();
    let k = access.share();
    let v = channel_dispersion(gamma, mode);
    let nats = gamma.linear().ln_1p() - (k * v / n).sqrt() * inv_q_function(eps_c);
    n / (k * cfg.packet_size_bits * LN_2) * nats
}

/// Maximum packets per frame at SINR `gamma` and error probability `eps_c`.
pub fn achievable_packets(
    gamma: Sinr,
    cfg: &SystemConfig,
    eps_c: Probability,
    mode: DispersionMode,
) -> Packets {
    Packets(packets_for(Access::Noma, gamma, cfg, eps_c, mode))
}

/// Per-user packets per frame under the orthogonal two-user split.
pub fn achievable_packets_oma(
    gamma: Sinr,
    cfg: &SystemConfig,
    eps_c: Probability,
    mode: DispersionMode,
) -> Packets {
    Packets(packets_for(Access::Oma, gamma, cfg, eps_c, mode))
}

/// Error probability at which `packets_per_frame` are achievable; the
/// inverse of [`achievable_packets`] in its ε argument. Returns a value in
/// `[0, 1]`, which may round to either end.
pub fn transmission_error_probability(
    gamma: Sinr,
    cfg: &SystemConfig,
    packets_per_frame: f64,
    mode: DispersionMode,
) -> Result<f64> {
    if !(packets_per_frame >= 0.0) {
        return domain(format!(
            "packets per frame must be non-negative, got {packets_per_frame}"
        ));
    }
    if gamma.linear() == 0.0 {
        return domain("no rate is achievable at zero SINR");
    }
    let n = cfg.blocklength();
    let v = channel_dispersion(gamma, mode);
    let margin = gamma.linear().ln_1p() - packets_per_frame * cfg.packet_size_bits * LN_2 / n;
    Ok(q_function((n / v).sqrt() * margin))
}
