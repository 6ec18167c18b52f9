//! The rotationally symmetric alpha-stable transition density `q_t(x)`.
//!
//! Everything is evaluated through the unit-time profile
//! `P(u) = q_1(u)`, using `q_t(x) = t^{-d/alpha} P(|x| t^{-1/alpha})`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::quad::{self, QuadSettings};
use crate::specfun::{gamma_fn, ln_gamma, unit_sphere_area};

/// Dimension, stability index and quadrature settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    d: u32,
    alpha: f64,
    pub quad: QuadSettings,
    /// Fourier integrals stop at `xi` with `xi^alpha = truncation` (unit time).
    pub truncation: f64,
}

impl KernelParams {
    pub fn new(d: u32, alpha: f64) -> Result<Self> {
        if d == 0 {
            return domain("dimension d must be >= 1");
        }
        if !(alpha > 0.0 && alpha < 2.0) {
            return domain(format!("alpha must lie in (0, 2), got {alpha}"));
        }
        Ok(Self {
            d,
            alpha,
            quad: QuadSettings::with_tol(1e-15, 1e-12),
            truncation: 40.0,
        })
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn df(&self) -> f64 {
        self.d as f64
    }

    /// `d / alpha`, the on-diagonal decay exponent.
    pub fn d_over_alpha(&self) -> f64 {
        self.df() / self.alpha
    }

    pub fn omega_d(&self) -> f64 {
        unit_sphere_area(self.d)
    }
}

fn check_t(t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return domain(format!("time must be positive and finite, got {t}"));
    }
    Ok(())
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub(crate) fn check_point(kp: &KernelParams, x: &[f64]) -> Result<f64> {
    if x.len() != kp.d as usize {
        return Err(Error::Shape(format!(
            "point has {} coordinates, dimension is {}",
            x.len(),
            kp.d
        )));
    }
    Ok(norm(x))
}

/// `q_1(0) = omega_d Gamma(d/alpha) / (alpha (2 pi)^d)`.
pub fn profile_at_zero(kp: &KernelParams) -> f64 {
    let d = kp.df();
    kp.omega_d() * gamma_fn(d / kp.alpha).expect("d/alpha > 0") / (kp.alpha * (2.0 * PI).powf(d))
}

/// Tail constant `c_{d,alpha}` in `P(u) ~ c_{d,alpha} u^{-d-alpha}`.
pub fn tail_constant(kp: &KernelParams) -> f64 {
    let (d, a) = (kp.df(), kp.alpha);
    a * 2f64.powf(a - 1.0) * PI.powf(-d / 2.0 - 1.0) * (PI * a / 2.0).sin()
        * gamma_fn((d + a) / 2.0).expect("positive")
        * gamma_fn(a / 2.0).expect("positive")
}

fn cauchy_kappa(d: f64) -> f64 {
    gamma_fn((d + 1.0) / 2.0).expect("positive") / PI.powf((d + 1.0) / 2.0)
}

/// Outcome of a term-by-term tail series.
enum SeriesOutcome {
    Value(f64),
    Rejected,
}

/// `(1/pi) sum_{k>=1} (-1)^{k+1} Gamma(alpha k + s)/k! sin(pi alpha k/2) u^{-alpha k - e}`
/// with `(s, e) = (1, 1)` for the density and `(0, 0)` for the survival
/// function. Accepted only when it converges to ~1e-15 without cancellation.
fn tail_series(alpha: f64, u: f64, s: f64, e: f64) -> SeriesOutcome {
    let lu = u.ln();
    let mut sum = 0.0;
    let mut max_term = 0.0f64;
    let mut prev_mag = f64::INFINITY;
    for k in 1..400usize {
        let kf = k as f64;
        let lg = match ln_gamma(alpha * kf + s) {
            Ok(v) => v,
            Err(_) => return SeriesOutcome::Rejected,
        };
        let lmag = lg - ln_gamma(kf + 1.0).expect("k >= 1") - (alpha * kf + e) * lu;
        let mag = lmag.exp();
        if alpha > 1.0 && mag > prev_mag && k > 2 {
            // asymptotic series started diverging before converging
            return SeriesOutcome::Rejected;
        }
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        let term = sign * mag * (PI * alpha * kf / 2.0).sin();
        sum += term;
        max_term = max_term.max(term.abs());
        if mag <= 1e-16 * sum.abs() && k > 2 {
            if max_term > 1e3 * sum.abs() || !(sum > 0.0) {
                return SeriesOutcome::Rejected;
            }
            return SeriesOutcome::Value(sum / PI);
        }
        prev_mag = mag;
    }
    SeriesOutcome::Rejected
}

/// Breakpoints `start, start + period, ...` strictly inside `(0, end)`, with 0 and `end`.
fn breakpoints(first: f64, period: f64, end: f64) -> Vec<f64> {
    let mut pts = vec![0.0];
    let mut x = first;
    while x < end {
        if x > 0.0 {
            pts.push(x);
        }
        x += period;
    }
    pts.push(end);
    pts
}

/// `J_0(x)` by the periodic trapezoid rule on `(1/pi) int_0^pi cos(x sin th) dth`.
pub(crate) fn bessel_j0(x: f64) -> f64 {
    let n = (x.abs() * 0.6 + 40.0) as usize;
    let h = PI / n as f64;
    let mut s = 0.0;
    for i in 0..n {
        let th = (i as f64 + 0.5) * h;
        s += (x * th.sin()).cos();
    }
    s / n as f64
}

/// Unit-time profile `P(u) = q_1(u)` for `u >= 0`.
pub fn profile(kp: &KernelParams, u: f64) -> Result<f64> {
    let (d, alpha) = (kp.df(), kp.alpha);
    if !(u >= 0.0) || !u.is_finite() {
        return domain(format!("profile needs finite u >= 0, got {u}"));
    }
    if alpha == 1.0 {
        return Ok(cauchy_kappa(d) / (1.0 + u * u).powf((d + 1.0) / 2.0));
    }
    if u == 0.0 {
        return Ok(profile_at_zero(kp));
    }
    if kp.d == 1 && u > 0.5 {
        if let SeriesOutcome::Value(v) = tail_series(alpha, u, 1.0, 1.0) {
            return Ok(v);
        }
    }
    let xi_max = kp.truncation.powf(1.0 / alpha);
    let settings = kp.quad;
    let est = match kp.d {
        1 => {
            let pts = breakpoints(0.5 * PI / u, PI / u, xi_max);
            quad::integrate_pieces(|xi| (-xi.powf(alpha)).exp() * (u * xi).cos(), &pts, settings)?
                .value
                / PI
        }
        2 => {
            let pts = breakpoints(0.75 * PI / u, PI / u, xi_max);
            quad::integrate_pieces(
                |r| (-r.powf(alpha)).exp() * bessel_j0(u * r) * r,
                &pts,
                settings,
            )?
            .value
                / (2.0 * PI)
        }
        3 => {
            let pts = breakpoints(PI / u, PI / u, xi_max);
            quad::integrate_pieces(|r| (-r.powf(alpha)).exp() * (u * r).sin() * r, &pts, settings)?
                .value
                / (2.0 * PI * PI * u)
        }
        _ => return domain(format!("Fourier inversion implemented for d <= 3, got {}", kp.d)),
    };
    Ok(est.max(0.0))
}

/// Heat kernel `q_t(x)` of `-(-Delta)^{alpha/2}`.
pub fn q_density(kp: &KernelParams, t: f64, x: &[f64]) -> Result<f64> {
    let r = check_point(kp, x)?;
    q_radial(kp, t, r)
}

/// `q_t` as a function of `|x|`.
pub fn q_radial(kp: &KernelParams, t: f64, r: f64) -> Result<f64> {
    check_t(t)?;
    let s = t.powf(1.0 / kp.alpha);
    Ok(profile(kp, r.abs() / s)? / s.powf(kp.df()))
}

/// Distribution function of the one-dimensional profile.
pub fn profile_cdf(kp: &KernelParams, u: f64) -> Result<f64> {
    if u.is_nan() {
        return domain("cdf of NaN");
    }
    if u < 0.0 {
        return profile_sf(kp, -u);
    }
    Ok(1.0 - profile_sf(kp, u)?)
}

/// Survival function `P(U > u)` of the one-dimensional profile, accurate in
/// the far tail.
pub fn profile_sf(kp: &KernelParams, u: f64) -> Result<f64> {
    if kp.d != 1 {
        return domain("distribution function is defined for d = 1 only");
    }
    if u.is_nan() {
        return domain("survival function of NaN");
    }
    if u < 0.0 {
        return Ok(1.0 - profile_sf(kp, -u)?);
    }
    if u == 0.0 {
        return Ok(0.5);
    }
    let alpha = kp.alpha;
    if alpha == 1.0 {
        return Ok((1.0 / u).atan() / PI);
    }
    if u.is_infinite() {
        return Ok(0.0);
    }
    if u > 0.5 {
        if let SeriesOutcome::Value(v) = tail_series(alpha, u, 0.0, 0.0) {
            return Ok(v);
        }
    }
    let xi_max = kp.truncation.powf(1.0 / alpha);
    let pts = breakpoints(PI / u, PI / u, xi_max);
    let v = quad::integrate_pieces(
        |xi| {
            if xi == 0.0 {
                u
            } else {
                (-xi.powf(alpha)).exp() * (u * xi).sin() / xi
            }
        },
        &pts,
        kp.quad,
    )?
    .value;
    Ok(0.5 - v / PI)
}

/// Mass of `q_t` on `[a, b]` in d = 1, computed through survival functions in
/// the far tails to avoid cancellation.
pub fn q_interval_mass(kp: &KernelParams, t: f64, a: f64, b: f64) -> Result<f64> {
    check_t(t)?;
    if b <= a {
        return Ok(0.0);
    }
    let s = t.powf(1.0 / kp.alpha);
    let (ua, ub) = (a / s, b / s);
    if ua >= 0.0 {
        // both in the right half: difference of survival functions
        return Ok(profile_sf(kp, ua)? - profile_sf(kp, ub)?);
    }
    if ub <= 0.0 {
        return q_interval_mass(kp, t, -b, -a);
    }
    Ok(profile_cdf(kp, ub)? - profile_cdf(kp, ua)?)
}

/// `min(t^{-d/alpha}, t / |x|^{d+alpha})`.
pub fn minform_kernel(kp: &KernelParams, t: f64, x: &[f64]) -> Result<f64> {
    let r = check_point(kp, x)?;
    check_t(t)?;
    Ok(minform_radial(kp, t, r))
}

pub(crate) fn minform_radial(kp: &KernelParams, t: f64, r: f64) -> f64 {
    let d = kp.df();
    let on_diag = t.powf(-d / kp.alpha);
    if r == 0.0 {
        return on_diag;
    }
    on_diag.min(t / r.powf(d + kp.alpha))
}
