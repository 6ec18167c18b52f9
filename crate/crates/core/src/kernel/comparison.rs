//! The explicit comparison kernel `g(t,x)` and closed forms built on it.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::density::{check_point, minform_radial, q_radial, KernelParams};
use crate::error::{domain, Result};
use crate::quad;
use crate::specfun::{bessel_k, gamma_fn, BesselQuery};

/// `g(t,x) = kappa t / (t^{2/alpha} + |x|^2)^{(d+alpha)/2}` with unit mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonKernel {
    pub params: KernelParams,
    pub kappa: f64,
}

/// `kappa_{d,alpha} = Gamma((d+alpha)/2) / (pi^{d/2} Gamma(alpha/2))`.
pub fn kappa(d: f64, alpha: f64) -> f64 {
    gamma_fn((d + alpha) / 2.0).expect("positive") / (PI.powf(d / 2.0) * gamma_fn(alpha / 2.0).expect("positive"))
}

impl ComparisonKernel {
    pub fn new(params: KernelParams) -> Self {
        Self {
            params,
            kappa: kappa(params.df(), params.alpha()),
        }
    }

    pub(crate) fn radial(&self, t: f64, r: f64) -> f64 {
        let (d, a) = (self.params.df(), self.params.alpha());
        self.kappa * t / (t.powf(2.0 / a) + r * r).powf((d + a) / 2.0)
    }

    /// `g(t,x)^p` evaluated in a way that stays finite for tiny `t`.
    pub(crate) fn radial_pow(&self, t: f64, r: f64, p: f64) -> f64 {
        let (d, a) = (self.params.df(), self.params.alpha());
        let s = t.powf(1.0 / a);
        let u = r / s;
        (self.kappa / s.powf(d)).powf(p) * (1.0 + u * u).powf(-p * (d + a) / 2.0)
    }
}

/// Comparison kernel value at `(t, x)`.
pub fn g_comparison(ck: &ComparisonKernel, t: f64, x: &[f64]) -> Result<f64> {
    let r = check_point(&ck.params, x)?;
    if !(t > 0.0) {
        return domain(format!("time must be positive, got {t}"));
    }
    Ok(ck.radial(t, r))
}

/// Closed form of `int g(t,y)^p dy`.
pub fn g_p_integral(ck: &ComparisonKernel, t: f64, p: f64) -> Result<f64> {
    let (d, a) = (ck.params.df(), ck.params.alpha());
    if !(p > d / (d + a)) {
        return domain(format!("need p > d/(d+alpha) = {}, got {p}", d / (d + a)));
    }
    if !(t > 0.0) {
        return domain(format!("time must be positive, got {t}"));
    }
    let m = p * (d + a) / 2.0;
    Ok(ck.kappa.powf(p) * PI.powf(d / 2.0) * t.powf(-(p - 1.0) * d / a) * gamma_fn(m - d / 2.0)?
        / gamma_fn(m)?)
}

/// Radial quadrature of `int_{R^d} f(|y|) dy` for d = 1, 2, 3 with a power-law tail.
pub(crate) fn radial_integral<F: FnMut(f64) -> f64>(
    kp: &KernelParams,
    mut f: F,
    scale: f64,
) -> Result<f64> {
    let d = kp.d();
    let omega = kp.omega_d();
    let e = quad::integrate_power_tail(
        |r| if d == 1 { f(r) } else { f(r) * r.powi(d as i32 - 1) },
        0.0,
        scale,
        kp.quad,
    )?;
    Ok(omega * e.value)
}

/// Extrema of `q/minform` and `q/g` over a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    /// `min q_t(x) / min(t^{-d/alpha}, t |x|^{-d-alpha})`
    pub c1_minform: f64,
    pub c2_minform: f64,
    /// `min q_t(x) / g(t,x)`
    pub c1_g: f64,
    pub c2_g: f64,
}

/// Empirical two-sided comparison constants of `q` against the min-form
/// kernel and against `g`. These are grid extrema, not proven constants.
pub fn kernel_sandwich_check(ck: &ComparisonKernel, grid: &[(f64, f64)]) -> Result<SandwichReport> {
    if grid.is_empty() {
        return domain("sandwich grid is empty");
    }
    let kp = &ck.params;
    let mut rep = SandwichReport {
        c1_minform: f64::INFINITY,
        c2_minform: 0.0,
        c1_g: f64::INFINITY,
        c2_g: 0.0,
    };
    for &(t, r) in grid {
        if !(t > 0.0) {
            return domain(format!("grid time must be positive, got {t}"));
        }
        let q = q_radial(kp, t, r)?;
        let m = q / minform_radial(kp, t, r.abs());
        let g = q / ck.radial(t, r.abs());
        rep.c1_minform = rep.c1_minform.min(m);
        rep.c2_minform = rep.c2_minform.max(m);
        rep.c1_g = rep.c1_g.min(g);
        rep.c2_g = rep.c2_g.max(g);
    }
    Ok(rep)
}

/// Fourier transform of `(a^2 + |x|^2)^{-mu-1}` over `R^d` at frequency `|z|`.
pub fn fourier_power_transform(d: u32, mu: f64, a: f64, z: f64) -> Result<f64> {
    let df = d as f64;
    if !(mu > (df - 2.0) / 2.0) {
        return domain(format!("need mu > (d-2)/2, got mu = {mu}"));
    }
    if !(a > 0.0) {
        return domain(format!("need a > 0, got {a}"));
    }
    let z = z.abs();
    if z == 0.0 {
        // total mass: pi^{d/2} Gamma(mu + 1 - d/2) / Gamma(mu + 1) a^{d - 2 mu - 2}
        return Ok(PI.powf(df / 2.0) * gamma_fn(mu + 1.0 - df / 2.0)? / gamma_fn(mu + 1.0)?
            * a.powf(df - 2.0 * mu - 2.0));
    }
    let nu = (df - 2.0) / 2.0 - mu;
    let k = bessel_k(BesselQuery::new(nu, a * z)?)?;
    Ok((2.0 * PI).powf(df / 2.0) / (2f64.powf(mu) * gamma_fn(mu + 1.0)?)
        * (z / a).powf(mu + 1.0 - df / 2.0)
        * k)
}

/// `nu = p(d+alpha)/2 - d/2` and `c_nu = pi^{d/2} Gamma(nu) / Gamma(d/2 + nu)`.
pub fn nu_and_c_nu(kp: &KernelParams, p: f64) -> Result<(f64, f64)> {
    let (d, a) = (kp.df(), kp.alpha());
    if !(p > d / (d + a)) {
        return domain(format!("need p > d/(d+alpha) = {}, got {p}", d / (d + a)));
    }
    let nu = p * (d + a) / 2.0 - d / 2.0;
    Ok((nu, PI.powf(d / 2.0) * gamma_fn(nu)? / gamma_fn(d / 2.0 + nu)?))
}

/// Exact Fourier transform of `g(t,.)^p` at `|z|`.
pub fn fourier_g_power(ck: &ComparisonKernel, t: f64, z: f64, p: f64) -> Result<f64> {
    let kp = &ck.params;
    let (d, a) = (kp.df(), kp.alpha());
    nu_and_c_nu(kp, p)?;
    let mu = p * (d + a) / 2.0 - 1.0;
    Ok(ck.kappa.powf(p) * t.powf(p) * fourier_power_transform(kp.d(), mu, t.powf(1.0 / a), z)?)
}

/// Lower bound `kappa^p c_nu t^{-(p-1)d/alpha} e^{-t^{1/alpha}|z|}` for the
/// Fourier transform of `g(t,.)^p`.
pub fn fourier_g_power_lower(ck: &ComparisonKernel, t: f64, z: f64, p: f64) -> Result<f64> {
    let kp = &ck.params;
    let (d, a) = (kp.df(), kp.alpha());
    let (_, c_nu) = nu_and_c_nu(kp, p)?;
    Ok(ck.kappa.powf(p) * c_nu * t.powf(-(p - 1.0) * d / a) * (-t.powf(1.0 / a) * z.abs()).exp())
}
