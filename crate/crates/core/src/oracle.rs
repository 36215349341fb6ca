//! Radial shooting for rotationally symmetric translators.
//!
//! For `σ = dr² + f(r)² dθ²` and `w = w(r)` the translator equation reduces to
//!
//! ```text
//! w'' / (1 + w'²) + (f'/f) w' = λ,    w'(0) = 0,    −w'(R) = a,
//! ```
//!
//! the last condition being `D_ν w = a` with the inward normal. `λ` is found
//! by bisection on the end slope; the slope is increasing in `λ`.

use crate::error::{Error, Result};
use crate::geometry::MetricDescriptor;

/// Number of samples in the returned profile.
pub const PROFILE_SAMPLES: usize = 10_000;
const SUBSTEPS: usize = 4;
const LAMBDA_TOL: f64 = 1e-13;

#[derive(Clone, Debug)]
pub struct RadialProfile {
    pub a: f64,
    pub lambda: f64,
    pub radius: f64,
    pub r: Vec<f64>,
    /// Profile normalized to zero area-weighted mean.
    pub w: Vec<f64>,
    pub slope: Vec<f64>,
}

impl RadialProfile {
    /// Linear interpolation of `w` at radius `r ∈ [0, R]`.
    pub fn value_at(&self, r: f64) -> f64 {
        let n = self.r.len() - 1;
        let x = (r / self.radius * n as f64).clamp(0.0, n as f64);
        let k = (x.floor() as usize).min(n - 1);
        let t = x - k as f64;
        self.w[k] * (1.0 - t) + self.w[k + 1] * t
    }
}

struct Shot {
    p: Vec<f64>,
    w: Vec<f64>,
}

/// `p' = (1 + p²)(λ − (f'/f) p)`; at the origin `(f'/f)p → p'(0) = λ/2`.
fn slope_rate(metric: &MetricDescriptor, lambda: f64, r: f64, p: f64) -> f64 {
    if r == 0.0 {
        return 0.5 * lambda;
    }
    let (f, df, _) = metric.warp(r);
    (1.0 + p * p) * (lambda - df / f * p)
}

/// RK4 for `(p, w)` from `r = 0`; `None` if the slope blows up.
fn shoot(metric: &MetricDescriptor, lambda: f64, radius: f64, keep: bool) -> Option<Shot> {
    let steps = (PROFILE_SAMPLES - 1) * SUBSTEPS;
    let h = radius / steps as f64;
    let (mut p, mut w) = (0.0f64, 0.0f64);
    let mut out = Shot {
        p: Vec::with_capacity(if keep { PROFILE_SAMPLES } else { 0 }),
        w: Vec::with_capacity(if keep { PROFILE_SAMPLES } else { 0 }),
    };
    if keep {
        out.p.push(p);
        out.w.push(w);
    }
    for k in 0..steps {
        let r = k as f64 * h;
        let k1 = slope_rate(metric, lambda, r, p);
        let p2 = p + 0.5 * h * k1;
        let k2 = slope_rate(metric, lambda, r + 0.5 * h, p2);
        let p3 = p + 0.5 * h * k2;
        let k3 = slope_rate(metric, lambda, r + 0.5 * h, p3);
        let p4 = p + h * k3;
        let k4 = slope_rate(metric, lambda, r + h, p4);
        w += h / 6.0 * (p + 2.0 * p2 + 2.0 * p3 + p4);
        p += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if !p.is_finite() || p.abs() > 1e8 {
            return None;
        }
        if keep && (k + 1) % SUBSTEPS == 0 {
            out.p.push(p);
            out.w.push(w);
        }
    }
    if !keep {
        out.p.push(p);
    }
    Some(out)
}

/// Signed mismatch `w'(R) + a`; a blown-up slope counts as `±∞` by the sign of `λ`.
fn mismatch(metric: &MetricDescriptor, lambda: f64, radius: f64, a: f64) -> f64 {
    match shoot(metric, lambda, radius, false) {
        Some(s) => s.p[0] + a,
        None => f64::INFINITY.copysign(lambda),
    }
}

/// Translator eigenvalue and profile for constant boundary data `φ ≡ a`.
pub fn radial_oracle(a: f64, metric: &MetricDescriptor, radius: f64) -> Result<RadialProfile> {
    if !(radius > 0.0 && radius < metric.validity_radius()) {
        return Err(Error::RadiusOutsideChart {
            radius,
            r_max: metric.validity_radius(),
        });
    }
    if !a.is_finite() {
        return Err(Error::BracketFailure {
            a,
            reason: "non-finite boundary slope".into(),
        });
    }
    let samples: Vec<f64> = (0..PROFILE_SAMPLES)
        .map(|k| radius * k as f64 / (PROFILE_SAMPLES - 1) as f64)
        .collect();
    if a == 0.0 {
        return Ok(RadialProfile {
            a,
            lambda: 0.0,
            radius,
            r: samples,
            w: vec![0.0; PROFILE_SAMPLES],
            slope: vec![0.0; PROFILE_SAMPLES],
        });
    }

    // first-order guess |λ| ≈ |a| · length(∂Ω) / area(Ω)
    let (f_end, _, _) = metric.warp(radius);
    let area: f64 = samples
        .windows(2)
        .map(|s| 0.5 * (s[1] - s[0]) * (metric.warp(s[0]).0 + metric.warp(s[1]).0))
        .sum();
    let mut bound = 2.0 * a.abs() * f_end / area;
    let mut found = false;
    for _ in 0..60 {
        if mismatch(metric, -bound, radius, a) < 0.0 && mismatch(metric, bound, radius, a) > 0.0 {
            found = true;
            break;
        }
        bound *= 2.0;
    }
    if !found {
        return Err(Error::BracketFailure {
            a,
            reason: format!("no sign change of the end slope within |λ| ≤ {bound:e}"),
        });
    }
    let (mut lo, mut hi) = (-bound, bound);
    while hi - lo > LAMBDA_TOL {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let m = mismatch(metric, mid, radius, a);
        if m == 0.0 {
            lo = mid;
            hi = mid;
        } else if m < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lambda = 0.5 * (lo + hi);
    let shot = shoot(metric, lambda, radius, true).ok_or_else(|| Error::BracketFailure {
        a,
        reason: "profile blew up at the converged eigenvalue".into(),
    })?;
    let end_slope = *shot.p.last().unwrap();
    if (end_slope + a).abs() > 1e-10 {
        return Err(Error::BracketFailure {
            a,
            reason: format!("end slope mismatch {:e}", end_slope + a),
        });
    }

    // zero area-weighted mean: ∫ w f dr / ∫ f dr
    let weights: Vec<f64> = samples.iter().map(|&r| metric.warp(r).0).collect();
    let mut num = 0.0;
    let mut den = 0.0;
    for k in 0..PROFILE_SAMPLES - 1 {
        let dr = samples[k + 1] - samples[k];
        num += 0.5 * dr * (shot.w[k] * weights[k] + shot.w[k + 1] * weights[k + 1]);
        den += 0.5 * dr * (weights[k] + weights[k + 1]);
    }
    let mean = num / den;
    Ok(RadialProfile {
        a,
        lambda,
        radius,
        r: samples,
        w: shot.w.iter().map(|w| w - mean).collect(),
        slope: shot.p,
    })
}
