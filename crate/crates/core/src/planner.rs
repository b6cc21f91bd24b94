//! Required-SNR planning.
//!
//! A message stream served at the constant rate `E_B(θ)` carries
//! `T_f·E_B(θ)` packets per frame. Setting that equal to the finite
//! blocklength capacity gives the SINR requirement, in nats:
//!
//! ```text
//! ln(1+γ) = k·T_f·u·ln2·E_B(θ)/n + √(k·V(γ)/n)·Q⁻¹(ε_C)
//! ```
//!
//! with `k = 1` for NOMA and `k = 2` for the orthogonal baseline. The
//! dispersion depends on γ, so the equation is solved as a fixed point in
//! `x = ln(1+γ)`, seeded with `V = 1` and bracketed by the Shannon point.
//!
//! The overall loss target ε_D is split additively into a transmission
//! error budget ε_C and a queueing-delay violation budget ε_Q; the latter is
//! converted into a QoS exponent θ through the delay bound.

use std::collections::BTreeMap;
use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::fbl::{packets_for, Access, DispersionMode, Sinr, SystemConfig};
use crate::noma::{
    sinr_triple, solve_rho_for_targets, weak_user_sinr_ceiling, Constraint, LinkGeometry,
    SinrMode, SinrTriple,
};
use crate::numerics::{fixed_point_with_fallback, inv_q_function, Probability, SolverSettings, Strategy};
use crate::traffic::{effective_bandwidth, solve_qos_exponent, DelayBound, QosExponent, TrafficModel};

/// How ε_D is divided between transmission errors and queueing delay.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitPolicy {
    #[default]
    EqualSplit,
    /// Fraction of ε_D assigned to transmission errors.
    FixedSplit(f64),
    /// Split minimising the required SINR.
    Optimized,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReliabilityBudget {
    pub eps_d: Probability,
    pub eps_c: Probability,
    pub eps_q: Probability,
    pub split_policy: SplitPolicy,
}

impl ReliabilityBudget {
    /// Assigns `ratio·ε_D` to transmission errors and the rest to queueing.
    pub fn with_ratio(eps_d: Probability, ratio: f64, split_policy: SplitPolicy) -> Result<Self> {
        if !(ratio > 0.0 && ratio < 1.0) {
            return domain(format!("split ratio must lie in (0, 1), got {ratio}"));
        }
        let eps_c = eps_d.value() * ratio;
        let eps_q = eps_d.value() - eps_c;
        Ok(Self {
            eps_d,
            eps_c: Probability::new(eps_c)?,
            eps_q: Probability::new(eps_q)?,
            split_policy,
        })
    }

    pub fn ratio(&self) -> f64 {
        self.eps_c.value() / self.eps_d.value()
    }
}

/// Result of one required-SINR solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SinrSolution {
    pub sinr: Sinr,
    pub iterations: usize,
    /// `None` when a closed form applied.
    pub strategy: Option<Strategy>,
}

fn solver_settings() -> SolverSettings {
    SolverSettings {
        rel_tolerance: 4.0 * f64::EPSILON,
        abs_tolerance: 1e-300,
        max_iterations: 200,
    }
}

fn solve_required(
    access: Access,
    cfg: &SystemConfig,
    traffic: &TrafficModel,
    qos: QosExponent,
    eps_c: Probability,
    mode: DispersionMode,
) -> Result<SinrSolution> {
    cfg.validate()?;
    let n = cfg.blocklength();
    let k = access.share();
    let packets_per_frame = cfg.frame_duration_s * effective_bandwidth(traffic, qos);
    let rate_term = k * cfg.packet_size_bits * LN_2 * packets_per_frame / n;
    let dispersion_scale = (k / n).sqrt() * inv_q_function(eps_c);

    let closed = |x: f64| -> Result<SinrSolution> {
        Ok(SinrSolution {
            sinr: Sinr::new(x.exp_m1())?,
            iterations: 0,
            strategy: None,
        })
    };
    if rate_term == 0.0 {
        // nothing to carry
        return closed(0.0);
    }
    if dispersion_scale == 0.0 {
        return closed(rate_term);
    }

    let dispersion = |x: f64| match mode {
        DispersionMode::PaperLiteral => -(-x).exp_m1(),
        DispersionMode::Standard => -(-2.0 * x).exp_m1(),
    };
    let map = |x: f64| rate_term + dispersion_scale * dispersion(x.max(0.0)).sqrt();
    let seed = (rate_term + dispersion_scale).max(0.0);
    let bracket = if dispersion_scale > 0.0 {
        (rate_term, seed)
    } else {
        (seed, rate_term)
    };
    let fp = fixed_point_with_fallback(map, seed, Some(bracket), &solver_settings())?;
    Ok(SinrSolution {
        sinr: Sinr::new(fp.value.exp_m1())?,
        iterations: fp.iterations,
        strategy: Some(fp.strategy),
    })
}

/// Minimum SINR at which a NOMA message stream meets its QoS exponent and
/// transmission error budget.
pub fn required_sinr(
    cfg: &SystemConfig,
    traffic: &TrafficModel,
    qos: QosExponent,
    eps_c: Probability,
    mode: DispersionMode,
) -> Result<Sinr> {
    solve_required_sinr(cfg, traffic, qos, eps_c, mode).map(|s| s.sinr)
}

pub fn solve_required_sinr(
    cfg: &SystemConfig,
    traffic: &TrafficModel,
    qos: QosExponent,
    eps_c: Probability,
    mode: DispersionMode,
) -> Result<SinrSolution> {
    solve_required(Access::Noma, cfg, traffic, qos, eps_c, mode)
}

/// Minimum per-user SNR under the orthogonal two-user split.
pub fn required_sinr_oma(
    cfg: &SystemConfig,
    traffic: &TrafficModel,
    qos: QosExponent,
    eps_c: Probability,
    mode: DispersionMode,
) -> Result<Sinr> {
    solve_required_sinr_oma(cfg, traffic, qos, eps_c, mode).map(|s| s.sinr)
}

pub fn solve_required_sinr_oma(
    cfg: &SystemConfig,
    traffic: &TrafficModel,
    qos: QosExponent,
    eps_c: Probability,
    mode: DispersionMode,
) -> Result<SinrSolution> {
    solve_required(Access::Oma, cfg, traffic, qos, eps_c, mode)
}

/// Search interval for split ratios.
pub const SPLIT_RANGE: (f64, f64) = (1e-6, 1.0 - 1e-6);

fn logit(r: f64) -> f64 {
    (r / (1.0 - r)).ln()
}

fn logistic(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

/// `ln(1+γ)` required under split `ratio`, or +∞ if that split cannot be
/// planned.
pub fn split_objective(
    eps_d: Probability,
    ratio: f64,
    cfg: &SystemConfig,
    traffic: &TrafficModel,
    bound: DelayBound,
    mode: DispersionMode,
) -> f64 {
    let attempt = || -> Result<f64> {
        let budget = ReliabilityBudget::with_ratio(eps_d, ratio, SplitPolicy::Optimized)?;
        let qos = solve_qos_exponent(traffic, bound, budget.eps_q)?;
        Ok(required_sinr(cfg, traffic, qos, budget.eps_c, mode)?.linear().ln_1p())
    };
    attempt().unwrap_or(f64::INFINITY)
}

/// Divides ε_D according to `policy`.
///
/// The optimized split scans the ratio on a logit grid, refines the best
/// cell by golden-section search, and never returns a split worse than the
/// equal one.
pub fn split_budget(
    eps_d: Probability,
    policy: SplitPolicy,
    cfg: &SystemConfig,
    traffic: &TrafficModel,
    bound: DelayBound,
    mode: DispersionMode,
) -> Result<ReliabilityBudget> {
    match policy {
        SplitPolicy::EqualSplit => ReliabilityBudget::with_ratio(eps_d, 0.5, policy),
        SplitPolicy::FixedSplit(r) => ReliabilityBudget::with_ratio(eps_d, r, policy),
        SplitPolicy::Optimized => {
            if traffic.mean_arrivals_per_frame() == 0.0 {
                return ReliabilityBudget::with_ratio(eps_d, 0.5, policy);
            }
            let ratio = optimize_split(eps_d, cfg, traffic, bound, mode)?;
            ReliabilityBudget::with_ratio(eps_d, ratio, policy)
        }
    }
}

fn optimize_split(
    eps_d: Probability,
    cfg: &SystemConfig,
    traffic: &TrafficModel,
    bound: DelayBound,
    mode: DispersionMode,
) -> Result<f64> {
    const GRID: usize = 48;
    const GOLDEN: f64 = 0.618_033_988_749_894_9;

    let f = |t: f64| split_objective(eps_d, logistic(t), cfg, traffic, bound, mode);
    let (lo, hi) = (logit(SPLIT_RANGE.0), logit(SPLIT_RANGE.1));
    let step = (hi - lo) / GRID as f64;
    let grid: Vec<(f64, f64)> = (0..=GRID)
        .map(|i| {
            let t = lo + step * i as f64;
            (t, f(t))
        })
        .collect();
    let (best_i, best) = grid
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .map(|(i, p)| (i, *p))
        .expect("grid is non-empty");
    if !best.1.is_finite() {
        return Err(Error::Infeasible(format!(
            "no split of eps_d = {} in [{:e}, {}] yields a solvable plan",
            eps_d.value(),
            SPLIT_RANGE.0,
            SPLIT_RANGE.1
        )));
    }

    let mut a = grid[best_i.saturating_sub(1)].0;
    let mut b = grid[(best_i + 1).min(GRID)].0;
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if (b - a).abs() < 1e-10 {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = f(d);
        }
    }

    let candidates = [(best.0, best.1), (c, fc), (d, fd), (0.0, f(0.0))];
    let (t, _) = candidates
        .into_iter()
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .expect("non-empty");
    Ok(logistic(t).clamp(SPLIT_RANGE.0, SPLIT_RANGE.1))
}

/// Which decoding step a message stream belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MessageLabel {
    /// User 1 decoding its own message.
    #[serde(rename = "11")]
    M11,
    /// User 1 decoding user 2's message before cancellation.
    #[serde(rename = "12")]
    M12,
    /// User 2 decoding its own message.
    #[serde(rename = "22")]
    M22,
}

impl MessageLabel {
    pub const ALL: [MessageLabel; 3] = [MessageLabel::M11, MessageLabel::M12, MessageLabel::M22];

    pub fn constraint(self) -> Constraint {
        match self {
            MessageLabel::M11 => Constraint::Gamma11,
            MessageLabel::M12 => Constraint::Gamma12,
            MessageLabel::M22 => Constraint::Gamma22,
        }
    }
}

/// Arrival model per decoded message stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MessageTraffic {
    pub m11: TrafficModel,
    pub m12: TrafficModel,
    pub m22: TrafficModel,
}

impl MessageTraffic {
    pub fn uniform(traffic: TrafficModel) -> Self {
        Self {
            m11: traffic,
            m12: traffic,
            m22: traffic,
        }
    }

    pub fn get(&self, label: MessageLabel) -> &TrafficModel {
        match label {
            MessageLabel::M11 => &self.m11,
            MessageLabel::M12 => &self.m12,
            MessageLabel::M22 => &self.m22,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Modes {
    pub dispersion: DispersionMode,
    pub sinr: SinrMode,
}

impl Modes {
    pub fn paper() -> Self {
        Self::default()
    }

    pub fn corrected() -> Self {
        Self {
            dispersion: DispersionMode::Standard,
            sinr: SinrMode::Corrected,
        }
    }
}

/// Everything [`plan_noma`] needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanInputs {
    pub cfg: SystemConfig,
    pub traffic: MessageTraffic,
    pub geometry: LinkGeometry,
    pub eps_d: Probability,
    pub policy: SplitPolicy,
    pub modes: Modes,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MessagePlan {
    pub eps_c: f64,
    pub eps_q: f64,
    pub split_ratio: f64,
    /// Absent when the stream has no arrivals.
    pub qos_exponent: Option<f64>,
    /// Packets per second.
    pub effective_bandwidth: Option<f64>,
    pub required_sinr: Option<f64>,
    pub required_sinr_db: Option<f64>,
    pub solver_iterations: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanResult {
    pub messages: BTreeMap<MessageLabel, MessagePlan>,
    pub eps_d: f64,
    pub split_policy: SplitPolicy,
    pub modes: Modes,
    pub blocklength: f64,
    pub weak_user_ceiling: f64,
    pub strong_user_sic_ceiling: f64,
    pub required_rho: Option<f64>,
    pub required_rho_db: Option<f64>,
    pub binding_constraint: Option<Constraint>,
    /// SINRs delivered at `required_rho`.
    pub achieved: Option<SinrTriple>,
    pub feasible: bool,
    pub diagnostics: String,
}

impl PlanResult {
    pub fn required_sinr(&self, label: MessageLabel) -> Option<f64> {
        self.messages.get(&label).and_then(|m| m.required_sinr)
    }
}

fn plan_message(inputs: &PlanInputs, label: MessageLabel) -> Result<MessagePlan> {
    let traffic = inputs.traffic.get(label);
    let bound = inputs.cfg.delay_bound()?;
    let budget = split_budget(
        inputs.eps_d,
        inputs.policy,
        &inputs.cfg,
        traffic,
        bound,
        inputs.modes.dispersion,
    )?;
    let mut plan = MessagePlan {
        eps_c: budget.eps_c.value(),
        eps_q: budget.eps_q.value(),
        split_ratio: budget.ratio(),
        qos_exponent: None,
        effective_bandwidth: None,
        required_sinr: None,
        required_sinr_db: None,
        solver_iterations: 0,
        error: None,
    };
    if traffic.mean_arrivals_per_frame() == 0.0 {
        plan.required_sinr = Some(0.0);
        plan.required_sinr_db = Some(f64::NEG_INFINITY);
        return Ok(plan);
    }
    let mut step = || -> Result<()> {
        let qos = solve_qos_exponent(traffic, bound, budget.eps_q)?;
        plan.qos_exponent = Some(qos.theta());
        plan.effective_bandwidth = Some(effective_bandwidth(traffic, qos));
        let sol = solve_required_sinr(&inputs.cfg, traffic, qos, budget.eps_c, inputs.modes.dispersion)?;
        plan.required_sinr = Some(sol.sinr.linear());
        plan.required_sinr_db = Some(sol.sinr.db());
        plan.solver_iterations = sol.iterations;
        Ok(())
    };
    if let Err(e) = step() {
        plan.error = Some(e.to_string());
    }
    Ok(plan)
}

/// Plans the two-user NOMA link end to end. Infeasibility is reported in
/// the result; only malformed inputs return an error.
pub fn plan_noma(inputs: &PlanInputs) -> Result<PlanResult> {
    inputs.cfg.validate()?;
    let geometry = inputs.geometry;
    let mut messages = BTreeMap::new();
    let mut problems = Vec::new();
    for label in MessageLabel::ALL {
        let plan = plan_message(inputs, label)?;
        if let Some(e) = &plan.error {
            problems.push(format!("message {}: {e}", label_text(label)));
        }
        messages.insert(label, plan);
    }

    let mut result = PlanResult {
        messages,
        eps_d: inputs.eps_d.value(),
        split_policy: inputs.policy,
        modes: inputs.modes,
        blocklength: inputs.cfg.blocklength(),
        weak_user_ceiling: weak_user_sinr_ceiling(&geometry),
        strong_user_sic_ceiling: geometry.strong_user_sic_ceiling(inputs.modes.sinr),
        required_rho: None,
        required_rho_db: None,
        binding_constraint: None,
        achieved: None,
        feasible: false,
        diagnostics: String::new(),
    };

    if problems.is_empty() {
        let target = |label| Sinr::new(result.required_sinr(label).unwrap_or(0.0));
        let targets = SinrTriple {
            gamma_22: target(MessageLabel::M22)?,
            gamma_12: target(MessageLabel::M12)?,
            gamma_11: target(MessageLabel::M11)?,
        };
        match solve_rho_for_targets(&geometry, &targets, inputs.modes.sinr) {
            Ok(sol) => {
                result.required_rho = Some(sol.rho);
                result.required_rho_db = Some(10.0 * sol.rho.log10());
                result.binding_constraint = Some(sol.binding);
                if sol.rho > 0.0 {
                    let link = geometry.at_rho(sol.rho)?;
                    result.achieved = Some(sinr_triple(&link, inputs.modes.sinr));
                }
                result.feasible = true;
            }
            Err(e) => problems.push(format!("power: {e}")),
        }
    }

    if inputs.cfg.is_short_blocklength() {
        problems.push(format!(
            "warning: blocklength {} is below {}; the normal approximation is unreliable",
            inputs.cfg.blocklength(),
            crate::fbl::SHORT_BLOCKLENGTH
        ));
    }
    if geometry.swapped() {
        problems.push("note: channel gains were reordered so that h1_sq >= h2_sq".into());
    }
    result.diagnostics = if problems.is_empty() {
        "ok".into()
    } else {
        problems.join("; ")
    };
    Ok(result)
}

fn label_text(label: MessageLabel) -> &'static str {
    match label {
        MessageLabel::M11 => "(1,1)",
        MessageLabel::M12 => "(1,2)",
        MessageLabel::M22 => "(2,2)",
    }
}

/// Per-message check that the planned SINR carries exactly the
/// constant-rate load `T_f·E_B(θ)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MessageCheck {
    pub achievable_packets: f64,
    pub required_packets: f64,
    /// Relative when the load is positive, absolute otherwise. Positive
    /// means spare capacity.
    pub residual: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub messages: BTreeMap<MessageLabel, MessageCheck>,
    pub tolerance: f64,
    pub all_pass: bool,
}

pub const VERIFY_TOLERANCE: f64 = 1e-9;

pub fn verify_plan(
    plan: &PlanResult,
    cfg: &SystemConfig,
    traffic: &MessageTraffic,
    mode: DispersionMode,
) -> Result<VerificationReport> {
    let mut messages = BTreeMap::new();
    for (label, m) in &plan.messages {
        let Some(gamma) = m.required_sinr else {
            continue;
        };
        let traffic = traffic.get(*label);
        let required_packets = match m.qos_exponent {
            Some(theta) => cfg.frame_duration_s * effective_bandwidth(traffic, QosExponent::new(theta)?),
            None => 0.0,
        };
        let achieved = packets_for(
            Access::Noma,
            Sinr::new(gamma)?,
            cfg,
            Probability::new(m.eps_c)?,
            mode,
        );
        let residual = if required_packets > 0.0 {
            (achieved - required_packets) / required_packets
        } else {
            achieved - required_packets
        };
        messages.insert(
            *label,
            MessageCheck {
                achievable_packets: achieved,
                required_packets,
                residual,
                pass: residual.abs() < VERIFY_TOLERANCE,
            },
        );
    }
    let all_pass = messages.values().all(|c| c.pass);
    Ok(VerificationReport {
        messages,
        tolerance: VERIFY_TOLERANCE,
        all_pass,
    })
}
