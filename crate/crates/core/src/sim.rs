//! Seeded Monte Carlo checks.
//!
//! [`simulate_queue`] runs a frame-slotted FIFO queue fed by Poisson
//! arrivals and drained by a constant-rate server. Fractional service rates
//! accumulate as credit and a packet leaves whenever a whole unit of credit
//! is available. A packet served in the frame it arrived has a sojourn of
//! one frame.
//!
//! Randomness comes from ChaCha20 (`rand_chacha::ChaCha20Rng`), a
//! counter-based generator: the 64-bit seed selects the key and the
//! substream index selects the ChaCha stream, so parallel runs can share a
//! seed without overlapping.

use std::collections::VecDeque;
use std::io::{self, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Exp, Poisson};
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::traffic::{effective_bandwidth, operating_point, QosExponent, TrafficModel};

/// Seeded generator for a given substream.
pub fn rng_for(seed: u64, substream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(substream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueueSimConfig {
    pub seed: u64,
    pub substream: u64,
    pub num_frames: u64,
    pub service_packets_per_frame: f64,
    pub traffic: TrafficModel,
    pub warmup_frames: u64,
    /// Replaces Poisson arrivals with a fixed count per frame.
    pub forced_arrivals_per_frame: Option<u32>,
}

impl QueueSimConfig {
    /// Discards the first 1% of frames as warmup.
    pub fn new(
        seed: u64,
        num_frames: u64,
        service_packets_per_frame: f64,
        traffic: TrafficModel,
    ) -> Result<Self> {
        let cfg = Self {
            seed,
            substream: 0,
            num_frames,
            service_packets_per_frame,
            traffic,
            warmup_frames: num_frames / 100,
            forced_arrivals_per_frame: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_frames == 0 {
            return domain("num_frames must be at least 1");
        }
        if !(self.service_packets_per_frame > 0.0 && self.service_packets_per_frame.is_finite()) {
            return domain(format!(
                "service rate must be positive, got {}",
                self.service_packets_per_frame
            ));
        }
        let stable = match self.forced_arrivals_per_frame {
            Some(n) => self.service_packets_per_frame >= n as f64,
            None => self.service_packets_per_frame > self.traffic.mean_arrivals_per_frame(),
        };
        if !stable {
            return Err(Error::Stability {
                service: self.service_packets_per_frame,
                arrivals: self
                    .forced_arrivals_per_frame
                    .map(f64::from)
                    .unwrap_or(self.traffic.mean_arrivals_per_frame()),
            });
        }
        Ok(())
    }
}

/// Sojourn times in whole frames.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct DelayHistogram {
    /// `counts[d]` packets spent exactly `d` frames in the system.
    pub counts: Vec<u64>,
    pub total_packets: u64,
}

impl DelayHistogram {
    pub fn record(&mut self, delay_frames: usize) {
        if self.counts.len() <= delay_frames {
            self.counts.resize(delay_frames + 1, 0);
        }
        self.counts[delay_frames] += 1;
        self.total_packets += 1;
    }

    pub fn merge(&mut self, other: &DelayHistogram) {
        if self.counts.len() < other.counts.len() {
            self.counts.resize(other.counts.len(), 0);
        }
        for (c, o) in self.counts.iter_mut().zip(&other.counts) {
            *c += o;
        }
        self.total_packets += other.total_packets;
    }

    /// Packets with sojourn strictly greater than `d` frames.
    pub fn exceeding(&self, d: usize) -> u64 {
        self.counts.iter().skip(d + 1).sum()
    }

    /// Empirical `P(D > d)` for `d = 0, 1, …, max`.
    pub fn ccdf(&self) -> Vec<f64> {
        let n = self.total_packets as f64;
        let mut tail = self.total_packets;
        self.counts
            .iter()
            .map(|&c| {
                tail -= c;
                tail as f64 / n
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "delay_frames,count")?;
        for (d, c) in self.counts.iter().enumerate() {
            writeln!(out, "{d},{c}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QueueRun {
    pub histogram: DelayHistogram,
    pub arrived: u64,
    pub departed: u64,
    pub backlog: u64,
}

pub fn simulate_queue(cfg: &QueueSimConfig) -> Result<QueueRun> {
    cfg.validate()?;
    let lambda = cfg.traffic.mean_arrivals_per_frame();
    let mut rng = rng_for(cfg.seed, cfg.substream);
    let poisson = match cfg.forced_arrivals_per_frame {
        None if lambda > 0.0 => Some(
            Poisson::new(lambda).map_err(|e| Error::Domain(format!("poisson mean {lambda}: {e}")))?,
        ),
        _ => None,
    };

    let mut queue: VecDeque<u64> = VecDeque::new();
    let mut histogram = DelayHistogram::default();
    let mut credit = 0.0_f64;
    let (mut arrived, mut departed) = (0_u64, 0_u64);

    for frame in 0..cfg.num_frames {
        let arrivals = match (cfg.forced_arrivals_per_frame, &poisson) {
            (Some(n), _) => n as u64,
            (None, Some(d)) => d.sample(&mut rng) as u64,
            (None, None) => 0,
        };
        arrived += arrivals;
        queue.extend(std::iter::repeat_n(frame, arrivals as usize));

        credit += cfg.service_packets_per_frame;
        while credit >= 1.0 {
            let Some(arrival_frame) = queue.pop_front() else {
                break;
            };
            credit -= 1.0;
            departed += 1;
            if arrival_frame >= cfg.warmup_frames {
                histogram.record((frame - arrival_frame + 1) as usize);
            }
        }
        if queue.is_empty() {
            // an idle server cannot bank whole units of service
            credit = credit.fract();
        }
    }

    let backlog = queue.len() as u64;
    assert_eq!(arrived, departed + backlog, "packet conservation violated");
    Ok(QueueRun {
        histogram,
        arrived,
        departed,
        backlog,
    })
}

const Z_95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ViolationEstimate {
    pub probability: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub exceeding: u64,
    pub total: u64,
    pub bound_frames: u64,
}

/// Wilson score interval at 95%.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z_95 * Z_95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z_95 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

/// Fraction of packets whose sojourn exceeds `bound_s`, rounded up to
/// whole frames.
pub fn empirical_violation(
    hist: &DelayHistogram,
    bound_s: f64,
    frame_duration_s: f64,
) -> Result<ViolationEstimate> {
    if hist.total_packets == 0 {
        return domain("histogram holds no packets");
    }
    if !(bound_s >= 0.0) || !(frame_duration_s > 0.0) {
        return domain(format!(
            "need bound >= 0 and frame duration > 0, got {bound_s} and {frame_duration_s}"
        ));
    }
    let bound_frames = (bound_s / frame_duration_s - 1e-9).ceil().max(0.0) as u64;
    let exceeding = hist.exceeding(bound_frames as usize);
    let (ci_low, ci_high) = wilson_interval(exceeding, hist.total_packets);
    Ok(ViolationEstimate {
        probability: exceeding as f64 / hist.total_packets as f64,
        ci_low,
        ci_high,
        exceeding,
        total: hist.total_packets,
        bound_frames,
    })
}

/// Least-squares slope of `ln P(D > d)` against `d` over `d ≥ 1` with at
/// least `min_samples` packets in the tail. `None` with fewer than two
/// usable points.
pub fn tail_slope(hist: &DelayHistogram, min_samples: u64) -> Option<f64> {
    let points: Vec<(f64, f64)> = (1..hist.counts.len())
        .map(|d| (d, hist.exceeding(d)))
        .take_while(|&(_, tail)| tail >= min_samples)
        .map(|(d, tail)| (d as f64, (tail as f64 / hist.total_packets as f64).ln()))
        .collect();
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

/// Relative tolerance on the tail slope and slack on per-bound violation.
pub const MODEL_SLACK: f64 = 0.15;
pub const MIN_TAIL_SAMPLES: u64 = 100;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheck {
    pub bound_frames: u64,
    pub analytic: f64,
    pub empirical: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub tail_samples: u64,
    pub pass: bool,
}

/// Simulation against the exponential violation approximation, with θ at
/// the operating point where the effective bandwidth equals the service
/// rate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueueValidation {
    pub theta_star: f64,
    /// `−θ*·E_B(θ*)·T_f`, log-probability per extra frame of delay.
    pub analytic_slope: f64,
    pub empirical_slope: Option<f64>,
    pub slope_rel_error: Option<f64>,
    pub slope_pass: bool,
    pub bounds: Vec<BoundCheck>,
    /// Every bound within the analytic value plus slack and CI half-width.
    pub bounds_pass: bool,
    /// Outcome of the slope comparison.
    pub pass: bool,
    pub arrived: u64,
    pub departed: u64,
    pub backlog: u64,
    pub recorded_packets: u64,
}

pub fn validate_queue(cfg: &QueueSimConfig) -> Result<(QueueValidation, DelayHistogram)> {
    let run = simulate_queue(cfg)?;
    let t_f = cfg.traffic.frame_duration_s();
    let theta_star: QosExponent = operating_point(&cfg.traffic, cfg.service_packets_per_frame / t_f)?;
    let decay_per_frame = theta_star.theta() * effective_bandwidth(&cfg.traffic, theta_star) * t_f;
    let analytic_slope = -decay_per_frame;

    let hist = run.histogram;
    let empirical_slope = tail_slope(&hist, MIN_TAIL_SAMPLES);
    let slope_rel_error = empirical_slope.map(|s| ((s - analytic_slope) / analytic_slope).abs());
    let slope_pass = slope_rel_error.is_some_and(|e| e <= MODEL_SLACK);

    let mut bounds = Vec::new();
    if hist.total_packets > 0 {
        for d in 1..hist.counts.len() {
            let est = empirical_violation(&hist, d as f64 * t_f, t_f)?;
            if est.exceeding < MIN_TAIL_SAMPLES {
                break;
            }
            let analytic = (-decay_per_frame * d as f64).exp();
            let half_width = 0.5 * (est.ci_high - est.ci_low);
            bounds.push(BoundCheck {
                bound_frames: d as u64,
                analytic,
                empirical: est.probability,
                ci_low: est.ci_low,
                ci_high: est.ci_high,
                tail_samples: est.exceeding,
                pass: est.probability <= analytic * (1.0 + MODEL_SLACK) + half_width,
            });
        }
    }
    let bounds_pass = !bounds.is_empty() && bounds.iter().all(|b| b.pass);

    Ok((
        QueueValidation {
            theta_star: theta_star.theta(),
            analytic_slope,
            empirical_slope,
            slope_rel_error,
            slope_pass,
            bounds,
            bounds_pass,
            pass: slope_pass,
            arrived: run.arrived,
            departed: run.departed,
            backlog: run.backlog,
            recorded_packets: hist.total_packets,
        },
        hist,
    ))
}

/// I.i.d. exponential power gains (Rayleigh amplitudes) with the given
/// mean, each pair ordered so the first gain is the larger.
pub fn rayleigh_gains(seed: u64, count: usize, mean_gain: f64) -> Result<Vec<(f64, f64)>> {
    if !(mean_gain > 0.0 && mean_gain.is_finite()) {
        return domain(format!("mean gain must be positive, got {mean_gain}"));
    }
    if count == 0 {
        return domain("count must be at least 1");
    }
    let exp = Exp::new(1.0 / mean_gain).map_err(|e| Error::Domain(e.to_string()))?;
    let mut rng = rng_for(seed, 0);
    Ok((0..count)
        .map(|_| {
            let a: f64 = exp.sample(&mut rng);
            let b: f64 = exp.sample(&mut rng);
            if a >= b {
                (a, b)
            } else {
                (b, a)
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn traffic(lambda: f64) -> TrafficModel {
        TrafficModel::new(lambda, 5e-4).unwrap()
    }

    #[test]
    fn idle_source_gives_empty_histogram() {
        let cfg = QueueSimConfig::new(1, 1000, 1.0, traffic(0.0)).unwrap();
        let run = simulate_queue(&cfg).unwrap();
        assert_eq!(run.histogram.total_packets, 0);
        assert_eq!(run.arrived, 0);
    }

    #[test]
    fn lock_step_delays_are_one_frame() {
        let mut cfg = QueueSimConfig::new(1, 1000, 1.0, traffic(0.0)).unwrap();
        cfg.forced_arrivals_per_frame = Some(1);
        cfg.warmup_frames = 0;
        let run = simulate_queue(&cfg).unwrap();
        assert_eq!(run.histogram.total_packets, 1000);
        assert_eq!(run.histogram.counts, vec![0, 1000]);
    }

    #[test]
    fn fractional_service_accumulates_credit() {
        // one arrival per frame, half a packet of service: unstable
        let mut cfg = QueueSimConfig::new(1, 10, 1.0, traffic(0.0)).unwrap();
        cfg.forced_arrivals_per_frame = Some(1);
        cfg.service_packets_per_frame = 0.5;
        assert!(matches!(cfg.validate(), Err(Error::Stability { .. })));

        // two arrivals every frame, 2.5 packets of service
        cfg.forced_arrivals_per_frame = Some(2);
        cfg.service_packets_per_frame = 2.5;
        cfg.warmup_frames = 0;
        let run = simulate_queue(&cfg).unwrap();
        assert_eq!(run.histogram.counts, vec![0, 20]);
    }

    #[test]
    fn unstable_queue_is_rejected() {
        assert!(matches!(
            QueueSimConfig::new(1, 10, 0.4, traffic(0.5)),
            Err(Error::Stability { .. })
        ));
    }

    #[test]
    fn seeded_runs_are_identical() {
        let cfg = QueueSimConfig::new(42, 20_000, 1.0, traffic(0.5)).unwrap();
        assert_eq!(simulate_queue(&cfg).unwrap(), simulate_queue(&cfg).unwrap());
        let mut other = cfg;
        other.substream = 1;
        assert_ne!(simulate_queue(&cfg).unwrap(), simulate_queue(&other).unwrap());
    }

    #[test]
    fn violation_edges() {
        let mut h = DelayHistogram::default();
        for d in [1, 1, 2, 3] {
            h.record(d);
        }
        let none = empirical_violation(&h, 10.0 * 5e-4, 5e-4).unwrap();
        assert_eq!(none.probability, 0.0);
        assert!(none.ci_high > 0.0 && none.ci_high < 1.0);
        assert_eq!(empirical_violation(&h, 0.0, 5e-4).unwrap().probability, 1.0);
        // 0.8 ms rounds up to 2 frames
        let e = empirical_violation(&h, 8e-4, 5e-4).unwrap();
        assert_eq!(e.bound_frames, 2);
        assert_eq!(e.exceeding, 1);
        assert!(empirical_violation(&DelayHistogram::default(), 1.0, 5e-4).is_err());
    }

    #[test]
    fn histogram_merge_and_csv() {
        let mut a = DelayHistogram::default();
        a.record(1);
        let mut b = DelayHistogram::default();
        b.record(3);
        let mut ab = a.clone();
        ab.merge(&b);
        let mut ba = b.clone();
        ba.merge(&a);
        assert_eq!(ab, ba);
        assert_eq!(ab.total_packets, 2);
        let mut out = Vec::new();
        ab.write_csv(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "delay_frames,count\n0,0\n1,1\n2,0\n3,1\n");
    }

    #[test]
    fn ccdf_is_nonincreasing() {
        let cfg = QueueSimConfig::new(7, 50_000, 1.0, traffic(0.6)).unwrap();
        let h = simulate_queue(&cfg).unwrap().histogram;
        assert_eq!(h.counts.iter().sum::<u64>(), h.total_packets);
        let ccdf = h.ccdf();
        assert!(ccdf.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn wilson_interval_contains_estimate() {
        let (lo, hi) = wilson_interval(30, 100);
        assert!(lo < 0.3 && 0.3 < hi);
        let (lo, hi) = wilson_interval(0, 100);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0);
    }

    #[test]
    fn rayleigh_pairs_are_ordered_and_reproducible() {
        let a = rayleigh_gains(9, 100, 2.0).unwrap();
        assert!(a.iter().all(|(h1, h2)| h1 >= h2));
        assert_eq!(a, rayleigh_gains(9, 100, 2.0).unwrap());
        assert_eq!(rayleigh_gains(3, 1, 1.0).unwrap().len(), 1);
        assert!(rayleigh_gains(3, 1, 0.0).is_err());
        assert!(rayleigh_gains(3, 0, 1.0).is_err());
    }
}
