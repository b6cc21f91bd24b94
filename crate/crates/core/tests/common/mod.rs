//! Reference computations that share no code path with the library.

#![allow(dead_code)]

use std::f64::consts::PI;

fn pdf(t: f64) -> f64 {
    (-0.5 * t * t).exp() / (2.0 * PI).sqrt()
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adaptive(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + adaptive(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson quadrature with a relative tolerance.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let rough = simpson(a, b, fa, fm, fb);
    // split into panels so the first estimate is not fooled by a narrow peak
    let panels = 64;
    let h = (b - a) / panels as f64;
    let scale = (0..panels)
        .map(|i| {
            let lo = a + h * i as f64;
            let hi = lo + h;
            simpson(lo, hi, f(lo), f(0.5 * (lo + hi)), f(hi))
        })
        .sum::<f64>()
        .abs()
        .max(rough.abs());
    (0..panels)
        .map(|i| {
            let lo = a + h * i as f64;
            let hi = lo + h;
            let (flo, fmid, fhi) = (f(lo), f(0.5 * (lo + hi)), f(hi));
            let whole = simpson(lo, hi, flo, fmid, fhi);
            adaptive(f, lo, hi, flo, fmid, fhi, whole, rel_tol * scale / panels as f64, 40)
        })
        .sum()
}

/// Gaussian upper tail by quadrature of the density over `[x, x + 40]`.
pub fn gaussian_tail(x: f64) -> f64 {
    if x < 0.0 {
        return 1.0 - gaussian_tail(-x);
    }
    integrate(&pdf, x, x + 40.0, 1e-13)
}

/// Inverse Gaussian tail by bisection on the quadrature.
pub fn gaussian_tail_inverse(p: f64) -> f64 {
    let (mut lo, mut hi) = (0.0_f64, 40.0_f64);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if gaussian_tail(mid) > p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `ln E[e^{θA}]` for `A ~ Poisson(λ)` by direct summation of the pmf.
/// Sums `pmf(k)·(e^{θk} − 1)` so that small results keep full precision.
pub fn poisson_log_mgf(lambda: f64, theta: f64) -> f64 {
    let mut pmf = (-lambda).exp();
    let mut excess = 0.0;
    let mut k = 0u32;
    loop {
        k += 1;
        pmf *= lambda / k as f64;
        let term = pmf * (theta * k as f64).exp_m1();
        excess += term;
        if k as f64 > lambda && term < 1e-16 * excess {
            break;
        }
    }
    excess.ln_1p()
}

/// `P(delay > d)` for `d = 0..=max_d` in the unit-service frame queue with
/// Poisson(λ) batches, from the stationary backlog of the embedded chain.
///
/// A packet's delay is one plus the backlog left by the previous frame plus
/// the packets ahead of it in its own batch (size-biased position).
pub fn unit_service_delay_tail(lambda: f64, max_d: usize) -> Vec<f64> {
    let n = 160;
    let mut pmf = vec![0.0; n];
    pmf[0] = (-lambda).exp();
    for k in 1..n {
        pmf[k] = pmf[k - 1] * lambda / k as f64;
    }
    let mut backlog = vec![0.0; n];
    backlog[0] = 1.0;
    for _ in 0..4_000 {
        let mut next = vec![0.0; n];
        for (l, &pl) in backlog.iter().enumerate() {
            if pl == 0.0 {
                continue;
            }
            for (a, &pa) in pmf.iter().enumerate() {
                let m = (l + a).saturating_sub(1);
                if m < n {
                    next[m] += pl * pa;
                }
            }
        }
        let total: f64 = next.iter().sum();
        backlog = next.into_iter().map(|v| v / total).collect();
    }
    // P(J = j) = P(A > j) / λ
    let ahead: Vec<f64> = (0..n)
        .map(|j| pmf[j + 1..].iter().rev().sum::<f64>() / lambda)
        .collect();
    let mut position = vec![0.0; n];
    for (l, &pl) in backlog.iter().enumerate() {
        for (j, &pj) in ahead.iter().enumerate() {
            if l + j < n {
                position[l + j] += pl * pj;
            }
        }
    }
    // delay = position + 1
    (0..=max_d)
        .map(|d| position.iter().skip(d).rev().sum::<f64>())
        .collect()
}
