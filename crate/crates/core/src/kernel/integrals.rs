//! Weighted space-time integrals of the heat kernel and of the min-form kernel.

use std::cell::RefCell;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::density::{profile, KernelParams};
use crate::error::{domain, Result};
use crate::quad::{self, QuadSettings};
use crate::specfun::gamma_fn;

fn check_ipc(kp: &KernelParams, beta: f64, c: f64, p: f64) -> Result<()> {
    let (d, a) = (kp.df(), kp.alpha());
    if !(beta > 0.0) {
        return domain(format!("beta must be positive, got {beta}"));
    }
    if !(p >= 1.0 && p < 1.0 + a / d) {
        return domain(format!("p must lie in [1, 1 + alpha/d) = [1, {}), got {p}", 1.0 + a / d));
    }
    if !(c >= 0.0 && c < d + a) {
        return domain(format!("c must lie in [0, d + alpha) = [0, {}), got {c}", d + a));
    }
    if !(p > d / (d + a - c)) {
        return domain(format!("need p > d/(d + alpha - c) = {}, got {p}", d / (d + a - c)));
    }
    Ok(())
}

/// Two-term closed form `I(beta, c, p)` majorising the weighted kernel integral.
pub fn i_formula(kp: &KernelParams, beta: f64, c: f64, p: f64) -> Result<f64> {
    check_ipc(kp, beta, c, p)?;
    let (d, a) = (kp.df(), kp.alpha());
    let e = (p - 1.0) * d / a;
    let pb = p * beta;
    let first = p * (d + a) / (d * (p * (d + a) - d)) * gamma_fn(1.0 - e)? * pb.powf(e - 1.0);
    let second = p * (d + a) / ((d + p * c) * (p * (d + a - c) - d))
        * gamma_fn(1.0 + p * c / a - e)?
        * pb.powf(e - p * c / a - 1.0);
    Ok(first + second)
}

/// Quadrature of `int_0^inf int {e^{-beta t} (1+|x|)^c q_t(x)}^p dx dt`.
///
/// Uses `x = t^{1/alpha} u` and `t = tau / (p beta)` so the integrand is
/// resolved at every `beta`. Profile values are memoised across the inner
/// integrals, which share most of their nodes.
pub fn weighted_kernel_integral(kp: &KernelParams, beta: f64, c: f64, p: f64) -> Result<f64> {
    check_ipc(kp, beta, c, p)?;
    let (d, a) = (kp.df(), kp.alpha());
    let dim = kp.d();
    let omega = kp.omega_d();
    let settings = QuadSettings::with_tol(1e-14, 1e-9);
    let cache: RefCell<HashMap<u64, f64>> = RefCell::new(HashMap::new());
    let err: RefCell<Option<crate::Error>> = RefCell::new(None);
    let prof = |u: f64| -> f64 {
        if let Some(v) = cache.borrow().get(&u.to_bits()) {
            return *v;
        }
        let v = match profile(kp, u) {
            Ok(v) => v,
            Err(e) => {
                err.borrow_mut().get_or_insert(e);
                0.0
            }
        };
        cache.borrow_mut().insert(u.to_bits(), v);
        v
    };
    // J(t) = omega int_0^inf (1 + t^{1/alpha} u)^{cp} P(u)^p u^{d-1} du
    let inner = |t: f64| -> f64 {
        let s = t.powf(1.0 / a);
        let f = |u: f64| {
            let w = if c == 0.0 { 1.0 } else { (1.0 + s * u).powf(c * p) };
            w * prof(u).powf(p) * if dim == 1 { 1.0 } else { u.powi(dim as i32 - 1) }
        };
        match quad::integrate_power_tail(f, 0.0, 4.0, settings) {
            Ok(e) => omega * e.value,
            Err(e) => {
                err.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        }
    };
    let pb = p * beta;
    let e = (p - 1.0) * d / a;
    let outer = |tau: f64| -> f64 {
        if tau == 0.0 {
            return 0.0;
        }
        let t = tau / pb;
        (-tau).exp() * t.powf(-e) * inner(t)
    };
    let pts = [0.0, 0.25, 1.0, 4.0, 12.0, 30.0, 60.0];
    let total = quad::integrate_pieces(outer, &pts, settings);
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    Ok(total?.value / pb)
}

/// Closed-form and quadrature values of the level-set moment of the min-form kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HMoment {
    pub closed_form: f64,
    pub quadrature: f64,
}

/// `c_{d,alpha}^{(p)} = omega_d (d+alpha)^2 / (d (2d+alpha) (d+alpha-pd))`.
pub fn h_moment_constant(kp: &KernelParams, p: f64) -> Result<f64> {
    let (d, a) = (kp.df(), kp.alpha());
    if !(p >= 0.0 && p < 1.0 + a / d) {
        return domain(format!("p must lie in [0, 1 + alpha/d), got {p}"));
    }
    Ok(kp.omega_d() * (d + a) * (d + a) / (d * (2.0 * d + a) * (d + a - p * d)))
}

/// Exact `int_{R^d} h_t(y)^p 1{h_t(y) > eps} dy` for the min-form kernel `h`.
pub fn minform_level_moment(kp: &KernelParams, t: f64, eps: f64, p: f64) -> f64 {
    let (d, a) = (kp.df(), kp.alpha());
    if t <= 0.0 || t >= eps.powf(-a / d) {
        return 0.0;
    }
    let omega = kp.omega_d();
    let r0 = t.powf(1.0 / a);
    let r1 = (t / eps).powf(1.0 / (d + a));
    let core = omega / d * t.powf((1.0 - p) * d / a);
    let ex = d - p * (d + a);
    let shell = if ex.abs() < 1e-12 {
        (r1 / r0).ln()
    } else {
        (r1.powf(ex) - r0.powf(ex)) / ex
    };
    core + omega * t.powf(p) * shell
}

/// Space-time volume of `{h > eps}`, `omega_d (d+alpha) / (d (2d+alpha)) eps^{-(1+alpha/d)}`.
pub fn minform_level_volume(kp: &KernelParams, eps: f64) -> f64 {
    let (d, a) = (kp.df(), kp.alpha());
    kp.omega_d() * (d + a) / (d * (2.0 * d + a)) * eps.powf(-(1.0 + a / d))
}

/// Level-set moment `int_0^inf int h^p 1{h > eps}` of the min-form kernel:
/// closed form against nested quadrature of the defining integral.
pub fn h_moment(kp: &KernelParams, eps: f64, p: f64) -> Result<HMoment> {
    if !(eps > 0.0) {
        return domain(format!("eps must be positive, got {eps}"));
    }
    let c = h_moment_constant(kp, p)?;
    let (d, a) = (kp.df(), kp.alpha());
    let closed_form = c * eps.powf(-(1.0 + a / d - p));
    let omega = kp.omega_d();
    let dim = kp.d() as i32;
    let settings = QuadSettings::with_tol(1e-15, 1e-11);
    let mut failure = None;
    let mut inner = |t: f64| -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let r0 = t.powf(1.0 / a);
        let r1 = (t / eps).powf(1.0 / (d + a));
        let h = |r: f64| -> f64 {
            let v = (t.powf(-d / a)).min(t / r.powf(d + a));
            if v > eps {
                omega * v.powf(p) * r.powi(dim - 1)
            } else {
                0.0
            }
        };
        match quad::integrate_pieces(h, &[0.0, r0, r1.max(r0)], settings) {
            Ok(e) => e.value,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        }
    };
    let t_end = eps.powf(-a / d);
    let outer = quad::integrate(&mut inner, 0.0, t_end, settings);
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(HMoment {
        closed_form,
        quadrature: outer?.value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn kp(d: u32, a: f64) -> KernelParams {
        KernelParams::new(d, a).unwrap()
    }

    #[test]
    fn i_formula_examples() {
        let k = kp(1, 1.0);
        assert_relative_eq!(i_formula(&k, 2.0, 0.0, 1.0).unwrap(), 2.0, max_relative = 1e-14);
        assert_relative_eq!(i_formula(&k, 4.0, 0.0, 1.0).unwrap(), 1.0, max_relative = 1e-14);
        let r = i_formula(&k, 30.0, 0.0, 1.0).unwrap() / i_formula(&k, 3.0, 0.0, 1.0).unwrap();
        assert_relative_eq!(r, 0.1, max_relative = 1e-13);
    }

    #[test]
    fn i_formula_domain() {
        let k = kp(1, 1.5);
        assert!(i_formula(&k, 1.0, 0.0, 2.5).is_err());
        assert!(i_formula(&k, 1.0, 0.0, 0.9).is_err());
        assert!(i_formula(&k, 1.0, 2.5, 1.0).is_err());
        assert!(i_formula(&k, -1.0, 0.0, 1.0).is_err());
        // p > d/(d + alpha - c) fails for c close to d + alpha
        assert!(i_formula(&k, 1.0, 2.2, 1.2).is_err());
    }

    #[test]
    fn weighted_integral_unit_mass_case() {
        let k = kp(1, 1.0);
        let w = weighted_kernel_integral(&k, 2.0, 0.0, 1.0).unwrap();
        assert_relative_eq!(w, 0.5, max_relative = 1e-7);
        let k = kp(1, 1.5);
        let w = weighted_kernel_integral(&k, 3.0, 0.0, 1.0).unwrap();
        assert_relative_eq!(w, 1.0 / 3.0, max_relative = 1e-7);
    }

    #[test]
    fn weighted_integral_ratio_bounded() {
        let k = kp(1, 1.5);
        let mut ratios = Vec::new();
        for &b in &[1.0, 2.0, 4.0, 8.0, 16.0] {
            let w = weighted_kernel_integral(&k, b, 0.4, 1.2).unwrap();
            ratios.push(w / i_formula(&k, b, 0.4, 1.2).unwrap());
        }
        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().cloned().fold(0.0, f64::max);
        assert!(lo > 0.0 && hi / lo < 3.0, "{ratios:?}");
    }

    #[test]
    fn h_moment_exact() {
        let k = kp(1, 1.0);
        assert_relative_eq!(h_moment_constant(&k, 0.0).unwrap(), 4.0 / 3.0, max_relative = 1e-14);
        let h = h_moment(&k, 1.0, 0.0).unwrap();
        assert_relative_eq!(h.quadrature, 4.0 / 3.0, max_relative = 1e-8);
        let h2 = h_moment(&k, 0.5, 0.0).unwrap();
        assert_relative_eq!(h2.quadrature / h.quadrature, 4.0, max_relative = 1e-8);
        for &a in &[1.0, 1.5] {
            let k = kp(1, a);
            for &p in &[0.0, 0.5, 1.0] {
                for &eps in &[0.25, 1.0, 4.0] {
                    let h = h_moment(&k, eps, p).unwrap();
                    assert_relative_eq!(h.quadrature, h.closed_form, max_relative = 1e-8);
                }
            }
        }
    }

    #[test]
    fn level_moment_closed_form_integrates() {
        for (d, a) in [(1u32, 1.5f64), (2, 1.0), (3, 1.7)] {
            let k = kp(d, a);
            for &p in &[0.0, 0.7, 1.2] {
                if p >= 1.0 + a / d as f64 {
                    continue;
                }
                let eps = 0.6f64;
                let end = eps.powf(-a / d as f64);
                let num = quad::integrate(|t| minform_level_moment(&k, t, eps, p), 0.0, end, QuadSettings::default())
                    .unwrap()
                    .value;
                let want = h_moment_constant(&k, p).unwrap() * eps.powf(-(1.0 + a / d as f64 - p));
                assert_relative_eq!(num, want, max_relative = 1e-8);
            }
            let v = minform_level_volume(&k, 0.6);
            let c0 = h_moment_constant(&k, 0.0).unwrap() * 0.6f64.powf(-(1.0 + a / d as f64));
            assert_relative_eq!(v, c0, max_relative = 1e-13);
        }
    }

    proptest::proptest! {
        #[test]
        fn i_formula_decreasing(b in 0.01f64..1e4, c in 0.0f64..1.4, p in 1.0f64..2.45) {
            let k = kp(1, 1.5);
            if let (Ok(x), Ok(y)) = (i_formula(&k, b, c, p), i_formula(&k, b * 1.1, c, p)) {
                proptest::prop_assert!(y < x);
            }
        }
    }
}
