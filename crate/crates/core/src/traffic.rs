//! Effective bandwidth of Poisson packet arrivals and the exponential
//! approximation of the queueing-delay violation probability.
//!
//! Units: arrivals are counted in packets per frame, the effective bandwidth
//! is returned in packets per second, and delay bounds are in seconds, so
//! the exponent `θ·E_B(θ)·D` is dimensionless.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::numerics::{bisect, Probability, SolverSettings};

/// Poisson packet arrivals, counted per frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrafficModel {
    mean_arrivals_per_frame: f64,
    frame_duration_s: f64,
    /// Probability of a non-empty buffer, the prefactor of the violation
    /// approximation. Defaults to 1.
    eta: f64,
}

impl TrafficModel {
    pub fn new(mean_arrivals_per_frame: f64, frame_duration_s: f64) -> Result<Self> {
        if !(mean_arrivals_per_frame >= 0.0) || !mean_arrivals_per_frame.is_finite() {
            return domain(format!(
                "mean arrivals per frame must be finite and non-negative, got {mean_arrivals_per_frame}"
            ));
        }
        if !(frame_duration_s > 0.0) || !frame_duration_s.is_finite() {
            return domain(format!(
                "frame duration must be positive, got {frame_duration_s}"
            ));
        }
        Ok(Self {
            mean_arrivals_per_frame,
            frame_duration_s,
            eta: 1.0,
        })
    }

    /// Sets the non-empty-buffer prefactor, which must lie in `(0, 1]`.
    pub fn with_eta(mut self, eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta <= 1.0) {
            return domain(format!("eta must lie in (0, 1], got {eta}"));
        }
        self.eta = eta;
        Ok(self)
    }

    pub fn mean_arrivals_per_frame(&self) -> f64 {
        self.mean_arrivals_per_frame
    }

    pub fn frame_duration_s(&self) -> f64 {
        self.frame_duration_s
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Mean arrival rate in packets per second.
    pub fn mean_rate(&self) -> f64 {
        self.mean_arrivals_per_frame / self.frame_duration_s
    }
}

/// QoS exponent θ, per packet.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct QosExponent(f64);

impl QosExponent {
    pub fn new(theta: f64) -> Result<Self> {
        if theta > 0.0 && theta.is_finite() {
            Ok(Self(theta))
        } else {
            domain(format!("QoS exponent must be positive and finite, got {theta}"))
        }
    }

    pub fn theta(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for QosExponent {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<QosExponent> for f64 {
    fn from(q: QosExponent) -> f64 {
        q.0
    }
}

/// Queueing-delay bound in seconds.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct DelayBound(f64);

impl DelayBound {
    pub fn new(d_max_s: f64) -> Result<Self> {
        if d_max_s > 0.0 && d_max_s.is_finite() {
            Ok(Self(d_max_s))
        } else {
            domain(format!("delay bound must be positive, got {d_max_s}"))
        }
    }

    pub fn seconds(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for DelayBound {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<DelayBound> for f64 {
    fn from(d: DelayBound) -> f64 {
        d.0
    }
}

/// Effective bandwidth `E_B(θ) = ln E[e^{θA}] / (T_f·θ)` in packets per
/// second. For Poisson arrivals the log-MGF is `λ(e^θ − 1)`.
pub fn effective_bandwidth(traffic: &TrafficModel, qos: QosExponent) -> f64 {
    let theta = qos.theta();
    traffic.mean_arrivals_per_frame * theta.exp_m1() / (traffic.frame_duration_s * theta)
}

/// The dimensionless decay exponent `θ·E_B(θ)·D`.
pub fn violation_exponent(traffic: &TrafficModel, qos: QosExponent, bound: DelayBound) -> f64 {
    qos.theta() * effective_bandwidth(traffic, qos) * bound.seconds()
}

/// Approximate queueing-delay violation probability
/// `η·exp(−θ·E_B(θ)·D)`, clamped to `(0, 1]`.
pub fn delay_violation_probability(
    traffic: &TrafficModel,
    qos: QosExponent,
    bound: DelayBound,
) -> f64 {
    let p = traffic.eta * (-violation_exponent(traffic, qos, bound)).exp();
    p.clamp(f64::MIN_POSITIVE, 1.0)
}

/// Smallest and largest QoS exponents [`solve_qos_exponent`] will return.
pub const QOS_SEARCH_RANGE: (f64, f64) = (1e-12, 1e6);

/// Finds θ with `delay_violation_probability(traffic, θ, bound) = target`.
///
/// `θ·E_B(θ)·D = λ·D·(e^θ − 1)/T_f` is strictly increasing in θ, so the
/// inverse is unique and available in closed form.
pub fn solve_qos_exponent(
    traffic: &TrafficModel,
    bound: DelayBound,
    target: Probability,
) -> Result<QosExponent> {
    let (lo, hi) = QOS_SEARCH_RANGE;
    let describe_range = || {
        let at = |t: f64| delay_violation_probability(traffic, QosExponent(t), bound);
        format!("achievable violation probabilities span [{:e}, {:e}]", at(hi), at(lo))
    };
    if traffic.mean_arrivals_per_frame == 0.0 {
        return Err(Error::Infeasible(format!(
            "no arrivals: the violation approximation is {} for every QoS exponent",
            traffic.eta
        )));
    }
    let required_exponent = (traffic.eta / target.value()).ln();
    if !(required_exponent > 0.0) {
        return Err(Error::Infeasible(format!(
            "target {} is not below eta = {}; {}",
            target.value(),
            traffic.eta,
            describe_range()
        )));
    }
    // e^θ − 1 = K
    let k = required_exponent * traffic.frame_duration_s
        / (traffic.mean_arrivals_per_frame * bound.seconds());
    let theta = k.ln_1p();
    if !(lo..=hi).contains(&theta) {
        return Err(Error::Infeasible(format!(
            "target {} needs QoS exponent {theta:e} outside [{lo:e}, {hi:e}]; {}",
            target.value(),
            describe_range()
        )));
    }
    QosExponent::new(theta)
}

/// The QoS exponent at which the effective bandwidth equals a constant
/// service rate (packets per second). This θ is the decay rate of the
/// queue-length tail for a server of that rate.
pub fn operating_point(traffic: &TrafficModel, service_rate_pps: f64) -> Result<QosExponent> {
    let mean = traffic.mean_rate();
    if !(service_rate_pps > mean) || mean == 0.0 {
        return Err(Error::Stability {
            service: service_rate_pps * traffic.frame_duration_s,
            arrivals: traffic.mean_arrivals_per_frame,
        });
    }
    // E_B(θ)/mean = (e^θ − 1)/θ is increasing and unbounded
    let ratio = service_rate_pps / mean;
    let growth = |t: f64| t.exp_m1() / t - ratio;
    let mut hi = 1.0;
    while growth(hi) < 0.0 {
        hi *= 2.0;
    }
    let settings = SolverSettings::new(1e-15, 1e-300, 400)?;
    let theta = bisect(growth, 1e-300, hi, &settings)?;
    QosExponent::new(theta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table1() -> TrafficModel {
        TrafficModel::new(0.01, 5e-4).unwrap()
    }

    #[test]
    fn effective_bandwidth_at_table_point() {
        let eb = effective_bandwidth(&table1(), QosExponent::new(0.1).unwrap());
        let want = 0.01 * (0.1_f64.exp() - 1.0) / (5e-4 * 0.1);
        assert!((eb - want).abs() / want < 1e-14);
        assert!((eb - 21.034).abs() < 1e-3);
    }

    #[test]
    fn effective_bandwidth_small_theta_limit() {
        let eb = effective_bandwidth(&table1(), QosExponent::new(1e-9).unwrap());
        assert!((eb - 20.0).abs() / 20.0 < 1e-6);
    }

    #[test]
    fn empty_source_has_no_bandwidth() {
        let t = TrafficModel::new(0.0, 5e-4).unwrap();
        for th in [1e-3, 0.1, 10.0] {
            assert_eq!(effective_bandwidth(&t, QosExponent::new(th).unwrap()), 0.0);
        }
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        assert!(QosExponent::new(0.0).is_err());
        assert!(QosExponent::new(-1.0).is_err());
        assert!(DelayBound::new(0.0).is_err());
        assert!(TrafficModel::new(-0.1, 5e-4).is_err());
        assert!(TrafficModel::new(0.1, 0.0).is_err());
        assert!(table1().with_eta(0.0).is_err());
        assert!(table1().with_eta(1.5).is_err());
    }

    #[test]
    fn violation_at_table_point() {
        let p = delay_violation_probability(
            &table1(),
            QosExponent::new(0.1).unwrap(),
            DelayBound::new(8e-4).unwrap(),
        );
        assert!((p - 0.99832).abs() < 1e-5);
    }

    #[test]
    fn tiny_delay_budget_is_almost_always_violated() {
        let p = delay_violation_probability(
            &table1(),
            QosExponent::new(0.1).unwrap(),
            DelayBound::new(1e-300).unwrap(),
        );
        assert_eq!(p, 1.0);
    }

    #[test]
    fn doubling_bound_squares_probability() {
        let t = TrafficModel::new(0.5, 5e-4).unwrap();
        let q = QosExponent::new(0.7).unwrap();
        let p1 = delay_violation_probability(&t, q, DelayBound::new(8e-4).unwrap());
        let p2 = delay_violation_probability(&t, q, DelayBound::new(16e-4).unwrap());
        assert!((p2 - p1 * p1).abs() / p2 < 1e-12);
    }

    #[test]
    fn eta_scales_violation() {
        let t = table1().with_eta(0.5).unwrap();
        let q = QosExponent::new(0.1).unwrap();
        let d = DelayBound::new(8e-4).unwrap();
        let base = delay_violation_probability(&table1(), q, d);
        assert!((delay_violation_probability(&t, q, d) - 0.5 * base).abs() < 1e-15);
    }

    #[test]
    fn qos_for_unit_exponent() {
        let t = table1();
        let d = DelayBound::new(8e-4).unwrap();
        let q = solve_qos_exponent(&t, d, Probability::new((-1.0_f64).exp()).unwrap()).unwrap();
        assert!((violation_exponent(&t, q, d) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn qos_round_trip() {
        let t = table1();
        let d = DelayBound::new(8e-4).unwrap();
        for th in [0.01, 0.1, 1.0] {
            let p = delay_violation_probability(&t, QosExponent::new(th).unwrap(), d);
            let back = solve_qos_exponent(&t, d, Probability::new(p).unwrap()).unwrap();
            assert!((back.theta() - th).abs() / th < 1e-8, "theta {th} -> {}", back.theta());
        }
    }

    #[test]
    fn qos_for_lenient_target_is_small_but_positive() {
        let t = table1();
        let d = DelayBound::new(1e-6).unwrap();
        let q = solve_qos_exponent(&t, d, Probability::new(0.999999).unwrap()).unwrap();
        assert!(q.theta() > 0.0 && q.theta() < 1e-1);
    }

    #[test]
    fn qos_unreachable_targets() {
        let d = DelayBound::new(8e-4).unwrap();
        let idle = TrafficModel::new(0.0, 5e-4).unwrap();
        assert!(matches!(
            solve_qos_exponent(&idle, d, Probability::new(0.1).unwrap()),
            Err(Error::Infeasible(_))
        ));
        // target above eta
        let t = table1().with_eta(0.5).unwrap();
        assert!(matches!(
            solve_qos_exponent(&t, d, Probability::new(0.7).unwrap()),
            Err(Error::Infeasible(_))
        ));
        // needs theta far below the search floor
        let long = DelayBound::new(1.0).unwrap();
        assert!(matches!(
            solve_qos_exponent(&table1(), long, Probability::new(1.0 - 1e-14).unwrap()),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn operating_point_matches_service_rate() {
        let t = TrafficModel::new(0.5, 5e-4).unwrap();
        let rate = 1.0 / 5e-4;
        let q = operating_point(&t, rate).unwrap();
        assert!((effective_bandwidth(&t, q) - rate).abs() / rate < 1e-12);
        assert!(matches!(operating_point(&t, 0.4 / 5e-4), Err(Error::Stability { .. })));
    }
}
