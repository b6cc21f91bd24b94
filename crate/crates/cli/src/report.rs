//! JSON documents emitted by `plan` and `simulate`.

use serde::Serialize;
use urllc_noma::planner::{plan_noma, verify_plan, PlanInputs, PlanResult, VerificationReport};
use urllc_noma::sim::{empirical_violation, validate_queue, DelayHistogram, QueueSimConfig, QueueValidation};
use urllc_noma::traffic::{delay_violation_probability, DelayBound, QosExponent};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanReport {
    pub plan: PlanResult,
    pub verification: VerificationReport,
}

pub fn plan_report(inputs: &PlanInputs) -> urllc_noma::Result<PlanReport> {
    let plan = plan_noma(inputs)?;
    let verification = verify_plan(&plan, &inputs.cfg, &inputs.traffic, inputs.modes.dispersion)?;
    Ok(PlanReport { plan, verification })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationSettings {
    pub seed: u64,
    pub substream: u64,
    pub num_frames: u64,
    pub warmup_frames: u64,
    pub service_packets_per_frame: f64,
    pub mean_arrivals_per_frame: f64,
    pub frame_duration_s: f64,
}

/// Violation probability at the configured delay bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundComparison {
    pub delay_bound_s: f64,
    pub bound_frames: u64,
    pub analytic: f64,
    pub empirical: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub exceeding: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub settings: SimulationSettings,
    /// Absent when no packet arrived.
    pub at_delay_bound: Option<BoundComparison>,
    pub validation: QueueValidation,
}

pub fn simulation_report(
    cfg: &QueueSimConfig,
    delay_bound_s: f64,
) -> urllc_noma::Result<(SimulationReport, DelayHistogram)> {
    let (validation, hist) = validate_queue(cfg)?;
    let t_f = cfg.traffic.frame_duration_s();
    let at_delay_bound = if hist.total_packets > 0 {
        let est = empirical_violation(&hist, delay_bound_s, t_f)?;
        let analytic = if delay_bound_s > 0.0 {
            delay_violation_probability(
                &cfg.traffic,
                QosExponent::new(validation.theta_star)?,
                DelayBound::new(delay_bound_s)?,
            )
        } else {
            1.0
        };
        Some(BoundComparison {
            delay_bound_s,
            bound_frames: est.bound_frames,
            analytic,
            empirical: est.probability,
            ci_low: est.ci_low,
            ci_high: est.ci_high,
            exceeding: est.exceeding,
        })
    } else {
        None
    };
    let report = SimulationReport {
        settings: SimulationSettings {
            seed: cfg.seed,
            substream: cfg.substream,
            num_frames: cfg.num_frames,
            warmup_frames: cfg.warmup_frames,
            service_packets_per_frame: cfg.service_packets_per_frame,
            mean_arrivals_per_frame: cfg.traffic.mean_arrivals_per_frame(),
            frame_duration_s: t_f,
        },
        at_delay_bound,
        validation,
    };
    Ok((report, hist))
}
