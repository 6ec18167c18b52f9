//! Renewal weight of the second-moment lower bound and the discrete Volterra
//! solver for `f = c3 + c4 (w * f)`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::kernel::{h_moment_constant, minform_level_moment, minform_level_volume, KernelParams};
use crate::noise::{check_nondegenerate, LevyMeasureSpec};

/// `w_p^{(eps)}` tabulated on `t_k = k dt`, computed on the min-form kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenewalWeight {
    pub p: f64,
    pub eps: f64,
    pub delta: f64,
    pub dt: f64,
    pub values: Vec<f64>,
    /// `int_{|z|>delta} |z|^p lambda / max(1, lambda([-delta,delta]^c) V_eps)^{1-p/2}`.
    pub prefactor: f64,
    /// Space-time volume `V_eps` of the level set.
    pub level_volume: f64,
    /// `int_0^inf w dt` in closed form.
    pub integral: f64,
}

impl RenewalWeight {
    /// End of the support; the level set is empty after `eps^{-alpha/d}`.
    pub fn support_end(kp: &KernelParams, eps: f64) -> f64 {
        eps.powf(-kp.alpha() / kp.df())
    }
}

pub fn renewal_weight(
    kp: &KernelParams,
    levy: &LevyMeasureSpec,
    p: f64,
    eps: f64,
    delta: f64,
    dt: f64,
    n_steps: usize,
) -> Result<RenewalWeight> {
    let (d, a) = (kp.df(), kp.alpha());
    if !(p > 1.0 && p < 1.0 + a / d) {
        return domain(format!("p must lie in (1, 1 + alpha/d) = (1, {}), got {p}", 1.0 + a / d));
    }
    if !(eps > 0.0) {
        return domain(format!("eps must be positive, got {eps}"));
    }
    if !(dt > 0.0) || n_steps == 0 {
        return domain("time grid needs dt > 0 and at least one step");
    }
    check_nondegenerate(levy, delta)?;
    let volume = minform_level_volume(kp, eps);
    let numer = levy.restricted_moment(p, delta);
    let prefactor = numer / (levy.mass_outside(delta) * volume).max(1.0).powf(1.0 - p / 2.0);
    let values = (0..=n_steps)
        .map(|k| prefactor * minform_level_moment(kp, k as f64 * dt, eps, p))
        .collect();
    let integral = prefactor * h_moment_constant(kp, p)? * eps.powf(-(1.0 + a / d - p));
    Ok(RenewalWeight {
        p,
        eps,
        delta,
        dt,
        values,
        prefactor,
        level_volume: volume,
        integral,
    })
}

/// Predicted `int w(eps_1) / int w(eps_2) = (eps_2/eps_1)^{p(alpha/d-1)/2}`,
/// exact once `lambda([-delta,delta]^c) V_eps >= 1` at both levels.
pub fn weight_scaling_prediction(kp: &KernelParams, p: f64, eps1: f64, eps2: f64) -> f64 {
    (eps2 / eps1).powf(p * (kp.alpha() / kp.df() - 1.0) / 2.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenewalProblem {
    pub c3: f64,
    pub c4: f64,
    /// `w(k dt)` for `k = 0..=T/dt`.
    pub weight: Vec<f64>,
    pub dt: f64,
}

impl RenewalProblem {
    pub fn horizon(&self) -> f64 {
        self.dt * (self.weight.len().saturating_sub(1)) as f64
    }

    fn validate(&self) -> Result<()> {
        if !(self.c3 > 0.0 && self.c3.is_finite()) {
            return domain(format!("c3 must be positive, got {}", self.c3));
        }
        if !(self.c4 >= 0.0 && self.c4.is_finite()) {
            return domain(format!("c4 must be >= 0, got {}", self.c4));
        }
        if !(self.dt > 0.0) {
            return domain(format!("dt must be positive, got {}", self.dt));
        }
        if self.weight.len() < 3 {
            return domain("weight needs at least three grid values");
        }
        if self.weight.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return domain("weight must be finite and >= 0");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitCheck {
    /// `e^{-beta1 T} f(T)`.
    pub observed: f64,
    /// `c3 / (beta1 c4 int t e^{-beta1 t} w dt)`.
    pub predicted: f64,
}

impl LimitCheck {
    pub fn rel_error(&self) -> f64 {
        (self.observed / self.predicted - 1.0).abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenewalSolution {
    pub dt: f64,
    pub f: Vec<f64>,
    pub beta1: Option<f64>,
    pub limit_check: Option<LimitCheck>,
    pub warnings: Vec<String>,
}

impl RenewalSolution {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.f.len()).map(move |k| k as f64 * self.dt)
    }
}

/// Trapezoidal product integration of `f = c3 + c4 (w * f)` with step
/// `stride * dt`, reading `w` at every `stride`-th node.
fn volterra_trapezoid(c3: f64, c4: f64, w: &[f64], dt: f64, stride: usize) -> Result<Vec<f64>> {
    let w: Vec<f64> = w.iter().step_by(stride).copied().collect();
    let h = dt * stride as f64;
    let diag = 1.0 - 0.5 * c4 * h * w[0];
    if !(diag > 0.0) {
        return Err(Error::Domain(format!(
            "step too large: 1 - c4 dt w(0)/2 = {diag} <= 0"
        )));
    }
    let mut f = Vec::with_capacity(w.len());
    f.push(c3);
    for n in 1..w.len() {
        let mut acc = 0.5 * w[n] * f[0];
        for k in 1..n {
            acc += w[n - k] * f[k];
        }
        f.push((c3 + c4 * h * acc) / diag);
    }
    Ok(f)
}

/// Trapezoid on the full grid, Richardson-combined with the stride-2 grid.
fn romberg<F: Fn(usize) -> f64>(g: F, n: usize, dt: f64) -> f64 {
    let trap = |stride: usize| -> f64 {
        let m = n / stride;
        let mut s = 0.5 * (g(0) + g(m * stride));
        for k in 1..m {
            s += g(k * stride);
        }
        s * dt * stride as f64
    };
    if n % 2 == 0 && n >= 4 {
        (4.0 * trap(1) - trap(2)) / 3.0
    } else {
        trap(1)
    }
}

fn laplace(rp: &RenewalProblem, beta: f64, moment: i32) -> f64 {
    let n = rp.weight.len() - 1;
    romberg(
        |k| {
            let t = k as f64 * rp.dt;
            t.powi(moment) * (-beta * t).exp() * rp.weight[k]
        },
        n,
        rp.dt,
    )
}

/// Solves the renewal equation on the grid of `rp.weight`. The trapezoidal
/// solution at `dt` is Richardson-combined with the one at `2 dt`; odd nodes
/// take the interpolated correction.
pub fn renewal_solve(rp: &RenewalProblem) -> Result<RenewalSolution> {
    rp.validate()?;
    let n = rp.weight.len() - 1;
    let mut warnings = Vec::new();
    let wmax = rp.weight.iter().cloned().fold(0.0, f64::max);
    if rp.c4 * rp.dt * wmax > 0.5 {
        warnings.push(format!(
            "c4 dt max w = {} > 0.5; the step is coarse relative to the weight",
            rp.c4 * rp.dt * wmax
        ));
    }
    let fine = volterra_trapezoid(rp.c3, rp.c4, &rp.weight, rp.dt, 1)?;
    let f = if n >= 4 {
        let coarse = volterra_trapezoid(rp.c3, rp.c4, &rp.weight, rp.dt, 2)?;
        let corr: Vec<f64> = coarse.iter().enumerate().map(|(j, c)| (fine[2 * j] - c) / 3.0).collect();
        let m = corr.len() - 1;
        fine.iter()
            .enumerate()
            .map(|(k, v)| {
                let j = k / 2;
                let c = if k % 2 == 0 {
                    corr[j]
                } else if j < m {
                    0.5 * (corr[j] + corr[j + 1])
                } else {
                    1.5 * corr[m] - 0.5 * corr[m - 1]
                };
                v + c
            })
            .collect()
    } else {
        fine
    };

    let total = rp.c4 * laplace(rp, 0.0, 0);
    let (beta1, limit_check) = if total > 1.0 {
        let cond = |b: f64| rp.c4 * laplace(rp, b, 0) - 1.0;
        let mut hi = 1.0;
        while cond(hi) > 0.0 {
            hi *= 2.0;
            if hi > 1e12 {
                return Err(Error::NoRoot("Laplace condition still above 1 at beta = 1e12".into()));
            }
        }
        let mut lo = 0.0;
        while hi - lo > 1e-13 * hi {
            let mid = 0.5 * (lo + hi);
            if cond(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let b = 0.5 * (lo + hi);
        let t_end = rp.horizon();
        let observed = (-b * t_end).exp() * f[n];
        let predicted = rp.c3 / (b * rp.c4 * laplace(rp, b, 1));
        if b * t_end < 5.0 {
            warnings.push(format!("beta1 T = {} is small; the limit check is not yet asymptotic", b * t_end));
        }
        (Some(b), Some(LimitCheck { observed, predicted }))
    } else {
        warnings.push(format!("c4 int w = {total} <= 1; beta1 does not exist"));
        (None, None)
    };
    Ok(RenewalSolution {
        dt: rp.dt,
        f,
        beta1,
        limit_check,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn exp_problem(scale: f64, c4: f64) -> RenewalProblem {
        let dt = 1e-3;
        RenewalProblem {
            c3: 1.0,
            c4,
            weight: (0..=10_000).map(|k| scale * (-(k as f64) * dt).exp()).collect(),
            dt,
        }
    }

    #[test]
    fn linear_growth_case() {
        let sol = renewal_solve(&exp_problem(1.0, 1.0)).unwrap();
        let err = sol.times().zip(&sol.f).map(|(t, f)| (f - (1.0 + t)).abs()).fold(0.0, f64::max);
        assert!(err < 1e-6, "max error {err}");
        // int w = 1 - e^{-10} < 1
        assert!(sol.beta1.is_none());
    }

    #[test]
    fn exponential_growth_case() {
        let sol = renewal_solve(&exp_problem(2.0, 1.0)).unwrap();
        let err = sol
            .times()
            .zip(&sol.f)
            .map(|(t, f)| (f / (2.0 * t.exp() - 1.0) - 1.0).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-6, "max relative error {err}");
        assert_relative_eq!(sol.beta1.unwrap(), 1.0, max_relative = 1e-6);
        let lc = sol.limit_check.unwrap();
        assert_relative_eq!(lc.predicted, 2.0, max_relative = 1e-6);
        assert!(lc.rel_error() < 1e-4, "{lc:?}");
    }

    #[test]
    fn no_memory() {
        let sol = renewal_solve(&exp_problem(1.0, 0.0)).unwrap();
        assert!(sol.f.iter().all(|&f| f == 1.0));
    }

    #[test]
    fn rejects_bad_input() {
        let mut rp = exp_problem(1.0, 1.0);
        rp.weight[3] = -1.0;
        assert!(renewal_solve(&rp).is_err());
        let huge = RenewalProblem {
            c3: 1.0,
            c4: 1.0,
            weight: vec![1e4; 10],
            dt: 1.0,
        };
        assert!(renewal_solve(&huge).is_err());
    }

    #[test]
    fn weight_prefactor_and_integral() {
        let kp = KernelParams::new(1, 1.0).unwrap();
        let levy = LevyMeasureSpec::symmetric_unit_atoms();
        let w = renewal_weight(&kp, &levy, 1.2, 0.5, 0.5, 1e-3, 2000).unwrap();
        assert_eq!(levy.restricted_moment(1.2, 0.5), 2.0);
        // lambda V = 2 * (2 * 2 / 3) * 0.5^{-2} > 1
        assert_relative_eq!(w.prefactor, 2.0 / (2.0 * w.level_volume).powf(0.4), max_relative = 1e-14);
        // integrable t^{(1-p)d/alpha} singularity at 0
        let pts = [0.0, 1e-8, 1e-6, 1e-4, 1e-2, 0.5, 1.0, 2.0];
        let f = |t: f64| w.prefactor * minform_level_moment(&kp, t, 0.5, 1.2);
        let quad = crate::quad::integrate_pieces(f, &pts, crate::quad::QuadSettings::with_tol(1e-14, 1e-10)).unwrap();
        assert_relative_eq!(quad.value, w.integral, max_relative = 1e-6);
        let w2 = renewal_weight(&kp, &levy, 1.2, 0.05, 0.5, 1e-3, 10).unwrap();
        assert_relative_eq!(w2.integral, w.integral, max_relative = 1e-12);
        assert!(renewal_weight(&kp, &levy, 1.2, 0.5, 2.0, 1e-3, 10).is_err());
    }

    #[test]
    fn weight_eps_scaling() {
        let kp = KernelParams::new(1, 1.5).unwrap();
        let levy = LevyMeasureSpec::symmetric_unit_atoms();
        let integral = |eps: f64| {
            let end = RenewalWeight::support_end(&kp, eps);
            let w = renewal_weight(&kp, &levy, 1.2, eps, 0.5, end, 1).unwrap();
            let pts: Vec<f64> = [0.0, 1e-8, 1e-6, 1e-4, 1e-2, 0.25, 0.5, 1.0].iter().map(|u| u * end).collect();
            let f = |t: f64| w.prefactor * minform_level_moment(&kp, t, eps, 1.2);
            crate::quad::integrate_pieces(f, &pts, crate::quad::QuadSettings::with_tol(1e-14, 1e-10)).unwrap().value
        };
        let ratio = integral(0.25) / integral(1.0);
        let pred = weight_scaling_prediction(&kp, 1.2, 0.25, 1.0);
        assert_relative_eq!(pred, 4f64.powf(0.3), max_relative = 1e-14);
        assert_relative_eq!(ratio, pred, max_relative = 1e-6);
    }
}
