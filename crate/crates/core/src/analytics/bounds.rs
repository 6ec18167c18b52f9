//! Contraction constant, `beta_0` and the Lyapunov / growth-index bounds.

use serde::{Deserialize, Serialize};

use super::model::{admissible_p_range, ConstantsConfig, ModelSpec};
use crate::error::{domain, Error, Result};
use crate::kernel::{chain_exponent, i_formula, ComparisonKernel, ConvConstants, KernelParams};
use crate::noise::check_rho;

/// Bisection bracket for `beta_0`.
pub const BETA_BRACKET: (f64, f64) = (1e-6, 1e12);
/// Relative tolerance of the `beta_0` bisection.
pub const BETA_REL_TOL: f64 = 1e-10;

fn check_contraction_args(ms: &ModelSpec, beta: f64, c: f64, p: f64) -> Result<()> {
    let a = ms.kp.alpha();
    let (lo, hi) = admissible_p_range(&ms.kp);
    if !(p >= lo && p < hi) {
        return domain(format!("p must lie in [{lo}, {hi}), got {p}"));
    }
    if !(c >= 0.0 && c < a) {
        return domain(format!("c must lie in [0, alpha) = [0, {a}), got {c}"));
    }
    if !(beta > 0.0) {
        return domain(format!("beta must be positive, got {beta}"));
    }
    check_rho(ms.rho, ms.kp.d(), a, p)?;
    ms.levy.check_moment(p)?;
    if p >= 2.0 {
        ms.levy.check_moment(2.0)?;
    }
    Ok(())
}

/// Majorant `c_{beta,c,p}` of the weighted-norm Lipschitz constant of the
/// mild-solution map, divided by `L_sigma`.
pub fn contraction_constant(ms: &ModelSpec, consts: &ConstantsConfig, beta: f64, c: f64, p: f64) -> Result<f64> {
    check_contraction_args(ms, beta, c, p)?;
    let kp = &ms.kp;
    let mut total = 0.0;
    if ms.rho > 0.0 {
        total += ms.rho * consts.k1 * i_formula(kp, beta, c, 2.0)?.sqrt();
    }
    let b = ms.drift();
    if b != 0.0 {
        total += b.abs() * consts.k2 * i_formula(kp, beta, c, 1.0)?;
    }
    let mp = ms.levy.moment(p);
    total += mp.powf(1.0 / p) * consts.k3 * i_formula(kp, beta, c, p)?.powf(1.0 / p);
    if p >= 2.0 {
        total += consts.k4 * ms.levy.moment(2.0).sqrt() * i_formula(kp, beta, c, 2.0)?.sqrt();
    }
    Ok(total)
}

/// Smallest `beta` with `L_sigma c_{beta,c,p} <= 1/2`, by bisection on
/// [`BETA_BRACKET`].
pub fn beta0(ms: &ModelSpec, consts: &ConstantsConfig, c: f64, p: f64) -> Result<f64> {
    let lip = ms.lip();
    if !(lip > 0.0) {
        return Err(Error::Hypothesis(format!("L_sigma must be positive, got {lip}")));
    }
    let excess = |beta: f64| -> Result<f64> { Ok(lip * contraction_constant(ms, consts, beta, c, p)? - 0.5) };
    let (mut lo, mut hi) = BETA_BRACKET;
    if excess(hi)? > 0.0 {
        return Err(Error::NoRoot(format!(
            "L_sigma c_beta stays above 1/2 up to beta = {hi:e}; check the levy measure"
        )));
    }
    if excess(lo)? <= 0.0 {
        return Ok(lo);
    }
    // geometric bisection: the bracket spans 18 decades
    while hi - lo > BETA_REL_TOL * hi {
        let mid = if hi / lo > 4.0 { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
        if excess(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// Output of [`bounds_report`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub p: f64,
    pub c: f64,
    pub beta0: f64,
    pub lyap_upper: f64,
    pub growth_upper: Option<f64>,
    pub growth_lower_exp: Option<f64>,
    pub subexp_rate: Option<f64>,
    pub eta_star: Option<f64>,
    pub constants: ConvConstants,
    pub assumptions: Vec<String>,
    /// Why optional fields were left out.
    pub notes: Vec<String>,
}

/// Hypotheses of the growth-index upper bound: `sigma(0) = 0` and a
/// polynomially decaying `u_0` with exponent in `(0, alpha)`.
pub fn check_growth_hypotheses(ms: &ModelSpec) -> Result<f64> {
    let s0 = ms.sigma.eval(0.0);
    if s0 != 0.0 {
        return Err(Error::Hypothesis(format!("growth bound needs sigma(0) = 0, got {s0}")));
    }
    let dc = ms.u0.decay_c();
    if !(dc > 0.0 && dc < ms.kp.alpha()) {
        return Err(Error::Hypothesis(format!(
            "growth bound needs u0 decay c in (0, alpha) = (0, {}), got {dc}",
            ms.kp.alpha()
        )));
    }
    Ok(dc)
}

/// `(lyap_upper, growth_upper)` = `(p beta_0, beta_0 / c)`. The growth bound
/// is only produced when `with_growth` is set, and then its hypotheses must hold.
pub fn upper_bounds(ms: &ModelSpec, consts: &ConstantsConfig, c: f64, p: f64, with_growth: bool) -> Result<(f64, f64, Option<f64>)> {
    let growth_c = if with_growth { Some(check_growth_hypotheses(ms)?) } else { None };
    let b0 = beta0(ms, consts, c, p)?;
    Ok((b0, p * b0, growth_c.map(|dc| b0 / dc)))
}

fn check_lower_hypotheses(ms: &ModelSpec) -> Result<()> {
    let (d, a) = (ms.kp.d(), ms.kp.alpha());
    if d != 1 || !(a > 1.0) {
        return Err(Error::Hypothesis(format!("lower bounds need alpha > d = 1 (d = {d}, alpha = {a})")));
    }
    let b = ms.drift();
    if b != 0.0 {
        return Err(Error::Hypothesis(format!("lower bounds need b = 0, got {b}")));
    }
    if !(ms.lip0() > 0.0) {
        return Err(Error::Hypothesis("lower bounds need L_sigma0 > 0".into()));
    }
    Ok(())
}

/// `c_** = K5 sigma_lambda L_sigma0^p C_{1,g}^p / 4`.
fn c_star_star(consts: &ConstantsConfig, sigma_lambda: f64, lip0: f64, p: f64) -> f64 {
    consts.k5 * sigma_lambda * lip0.powf(p) * consts.c1_g.powf(p) / 4.0
}

/// Lower bound on the exponential growth index for `p in [2, 1 + alpha)`.
pub fn lower_bound_exponential(ms: &ModelSpec, consts: &ConstantsConfig, p: f64) -> Result<f64> {
    check_lower_hypotheses(ms)?;
    let kp = &ms.kp;
    let (d, a) = (kp.df(), kp.alpha());
    if !(p >= 2.0 && p < 1.0 + a / d) {
        return domain(format!("p must lie in [2, 1 + alpha/d) = [2, {}), got {p}", 1.0 + a / d));
    }
    ms.levy.check_moment(p)?;
    let ck = ComparisonKernel::new(*kp);
    let cc = ConvConstants::new(&ck, p)?;
    let css = c_star_star(consts, ms.levy.moment(p), ms.lip0(), p);
    Ok((css * cc.lambda_p).powf(1.0 / chain_exponent(&ck, p)) / (p * (d + a)))
}

/// `r_* = p (1 - d/alpha) / (2 (1 - (p-1) d/alpha))`.
pub fn r_star(kp: &KernelParams, p: f64) -> Result<f64> {
    let (d, a) = (kp.df(), kp.alpha());
    if kp.d() != 1 || !(a > 1.0) {
        return Err(Error::Hypothesis(format!("subexponential rate needs alpha > d = 1 (d = {d}, alpha = {a})")));
    }
    // p = 2 is the boundary case quoted with r_* = 1
    if !(p > 1.0 && p <= 2.0) {
        return domain(format!("p must lie in (1, 2], got {p}"));
    }
    Ok(p * (1.0 - d / a) / (2.0 * (1.0 - (p - 1.0) * d / a)))
}

/// `(r_*, eta_*)` of the stretched-exponential lower bound for `p in (1, 2]`.
pub fn subexp_rate(ms: &ModelSpec, consts: &ConstantsConfig, p: f64) -> Result<(f64, f64)> {
    let r = r_star(&ms.kp, p)?;
    check_lower_hypotheses(ms)?;
    let kp = &ms.kp;
    let (d, a) = (kp.df(), kp.alpha());
    ms.levy.check_moment(p)?;
    let ck = ComparisonKernel::new(*kp);
    let cc = ConvConstants::new(&ck, p)?;
    let css = c_star_star(consts, ms.levy.restricted_moment(p, consts.delta), ms.lip0(), p);
    let eta = (css * cc.theta_p).powf(1.0 / chain_exponent(&ck, p)) / ((p + 1.0) * (d + a));
    Ok((r, eta))
}

/// Every bound that applies to `(ms, c, p)`; absent entries are explained in `notes`.
pub fn bounds_report(ms: &ModelSpec, consts: &ConstantsConfig, c: f64, p: f64) -> Result<BoundsReport> {
    consts.validate()?;
    ms.validate(p)?;
    let b0 = beta0(ms, consts, c, p)?;
    let mut used = vec!["k3"];
    if ms.rho > 0.0 {
        used.push("k1");
    }
    if ms.drift() != 0.0 {
        used.push("k2");
    }
    if p >= 2.0 {
        used.push("k4");
    }
    let mut notes = Vec::new();
    let growth_upper = match check_growth_hypotheses(ms) {
        Ok(dc) => Some(b0 / dc),
        Err(e) => {
            notes.push(format!("growth_upper omitted: {e}"));
            None
        }
    };
    let growth_lower_exp = if p >= 2.0 {
        match lower_bound_exponential(ms, consts, p) {
            Ok(v) => {
                used.extend(["k5", "c1_g"]);
                Some(v)
            }
            Err(e) => {
                notes.push(format!("growth_lower_exp omitted: {e}"));
                None
            }
        }
    } else {
        notes.push("growth_lower_exp omitted: needs p >= 2".into());
        None
    };
    let (subexp, eta) = if p > 1.0 && p <= 2.0 {
        match subexp_rate(ms, consts, p) {
            Ok((r, e)) => {
                used.extend(["k5", "c1_g", "delta"]);
                (Some(r), Some(e))
            }
            Err(e) => {
                notes.push(format!("subexp_rate omitted: {e}"));
                (None, None)
            }
        }
    } else {
        notes.push("subexp_rate omitted: needs p in (1, 2]".into());
        (None, None)
    };
    used.sort_unstable();
    used.dedup();
    let ck = ComparisonKernel::new(ms.kp);
    Ok(BoundsReport {
        p,
        c,
        beta0: b0,
        lyap_upper: p * b0,
        growth_upper,
        growth_lower_exp,
        subexp_rate: subexp,
        eta_star: eta,
        constants: ConvConstants::new(&ck, p)?,
        assumptions: consts.assumptions(&used),
        notes,
    })
}
