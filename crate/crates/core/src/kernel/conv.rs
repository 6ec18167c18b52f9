//! Space and space-time convolutions of powers of `g`, their lower bounds,
//! and the resolvent-type series `K^{(p)}`.

use serde::{Deserialize, Serialize};

use super::comparison::{nu_and_c_nu, ComparisonKernel};
use super::integrals::h_moment_constant;
use crate::error::{domain, Error, Result};
use crate::quad::{self, QuadSettings};
use crate::specfun::{gamma_fn, ml_series, MLQuery};

/// Constants of the convolution lower bounds for one exponent `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvConstants {
    pub p: f64,
    pub nu: f64,
    pub c_nu: f64,
    pub gamma_p: f64,
    pub lambda_p: f64,
    pub theta_p: f64,
    /// Level-set constant `c_{d,alpha}^{(p)}`; absent when `p >= 1 + alpha/d`.
    pub c_hmom: Option<f64>,
    pub omega_d: f64,
}

fn gamma_const(ck: &ComparisonKernel, p: f64) -> Result<f64> {
    let kp = &ck.params;
    let d = kp.df();
    let (_, c_nu) = nu_and_c_nu(kp, p)?;
    let two_pi_d = (2.0 * std::f64::consts::PI).powf(d);
    Ok(ck.kappa.powf(p) * c_nu * c_nu * kp.omega_d() * gamma_fn(d)?
        / (2f64.powf(p * (d + kp.alpha()) + d) * two_pi_d))
}

/// `a = 1 - (p-1) d/alpha`, the time exponent of the convolution chains.
pub fn chain_exponent(ck: &ComparisonKernel, p: f64) -> f64 {
    1.0 - (p - 1.0) * ck.params.d_over_alpha()
}

impl ConvConstants {
    pub fn new(ck: &ComparisonKernel, p: f64) -> Result<Self> {
        let kp = &ck.params;
        let (d, a) = (kp.df(), kp.alpha());
        if !(p > d / (d + a) && p < 1.0 + a / d) {
            return domain(format!(
                "p must lie in (d/(d+alpha), 1+alpha/d) = ({}, {}), got {p}",
                d / (d + a),
                1.0 + a / d
            ));
        }
        let (nu, c_nu) = nu_and_c_nu(kp, p)?;
        let ga = gamma_fn(chain_exponent(ck, p))?;
        let gamma_p = gamma_const(ck, p)?;
        let lambda_p = gamma_p * ga / 2f64.powf(1.0 + p * (1.0 + d / a));
        let theta_p = gamma_const(ck, p + 1.0)? * ga / (2f64.powf(1.0 + (p + 1.0) * (1.0 + d / a)) * ck.kappa);
        Ok(Self {
            p,
            nu,
            c_nu,
            gamma_p,
            lambda_p,
            theta_p,
            c_hmom: h_moment_constant(kp, p).ok(),
            omega_d: kp.omega_d(),
        })
    }
}

fn require_d1(ck: &ComparisonKernel) -> Result<()> {
    if ck.params.d() != 1 {
        return domain("convolution quadrature is implemented for d = 1");
    }
    Ok(())
}

/// Integral over the real line with power-law tails on both sides; `marks`
/// are peaks of width `scale`, refined by geometric breakpoints around each.
///
/// The tails beyond `[lo, hi]` are mapped onto unit intervals by
/// `y = hi + scale (1/u - 1)` (and its mirror) so the whole line is one
/// globally adaptive integral.
fn line_integral<F: FnMut(f64) -> f64>(mut f: F, marks: &[f64], scale: f64, s: QuadSettings) -> Result<f64> {
    let lo = marks.iter().cloned().fold(f64::INFINITY, f64::min) - scale;
    let hi = marks.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + scale;
    let mut pts: Vec<f64> = vec![lo, hi];
    for &m in marks {
        pts.push(m);
        let mut h = scale;
        while m + h < hi || m - h > lo {
            if m + h < hi {
                pts.push(m + h);
            }
            if m - h > lo {
                pts.push(m - h);
            }
            h *= 4.0;
        }
    }
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    pts.dedup();
    // variable v: [lo-1, lo) left tail, [lo, hi] line, (hi, hi+1] right tail
    let mut g = |v: f64| -> f64 {
        let (y, u) = if v < lo {
            let u = v - (lo - 1.0);
            (lo - scale * (1.0 / u - 1.0), u)
        } else if v > hi {
            let u = (hi + 1.0) - v;
            (hi + scale * (1.0 / u - 1.0), u)
        } else {
            return f(v);
        };
        if u <= 0.0 {
            return 0.0;
        }
        let w = f(y) * scale / (u * u);
        if w.is_finite() {
            w
        } else {
            0.0
        }
    };
    let mut all = Vec::with_capacity(pts.len() + 4);
    all.extend_from_slice(&[lo - 1.0, lo - 0.5]);
    all.extend_from_slice(&pts);
    all.extend_from_slice(&[hi + 0.5, hi + 1.0]);
    Ok(quad::integrate_global(&mut g, &all, s)?.value)
}

/// Relative slack allowed in certificates whose left side is a quadrature.
pub const QUAD_REL_TOL: f64 = 1e-7;
/// Relative slack allowed in closed-form certificates, some of which are equalities.
pub const ROUNDING_TOL: f64 = 1e-12;

/// Breakpoints on `[0, h]` graded toward 0.
fn graded_pieces(h: f64) -> Vec<f64> {
    let mut pts = vec![0.0];
    for k in (1..=8).rev() {
        pts.push(h * 8f64.powi(-k));
    }
    pts.push(h);
    pts
}

fn inner_settings() -> QuadSettings {
    QuadSettings::with_tol(1e-300, 1e-10)
}

fn outer_settings() -> QuadSettings {
    QuadSettings::with_tol(1e-300, 1e-8)
}

/// `{f * h}(x)` for radial kernels of widths `wf`, `wh`. The narrower one is
/// centred at the origin so its peak is resolved without cancellation in `x - y`.
pub(crate) fn convolve_line<F, H>(f: F, h: H, wf: f64, wh: f64, x: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
    H: Fn(f64) -> f64,
{
    let w = wf.min(wh);
    if wh <= wf {
        line_integral(|y| f((x - y).abs()) * h(y.abs()), &[0.0, x], w, inner_settings())
    } else {
        line_integral(|y| f(y.abs()) * h((x - y).abs()), &[0.0, x], w, inner_settings())
    }
}

/// Space convolution `{g(t-s,.)^p * g(s,.)^p}(x)` in d = 1.
pub fn space_convolution(ck: &ComparisonKernel, p: f64, t: f64, s: f64, x: f64) -> Result<f64> {
    require_d1(ck)?;
    if !(s > 0.0 && s < t) {
        return domain(format!("need 0 < s < t, got s = {s}, t = {t}"));
    }
    let ia = 1.0 / ck.params.alpha();
    convolve_line(
        |r| ck.radial_pow(t - s, r, p),
        |r| ck.radial_pow(s, r, p),
        (t - s).powf(ia),
        s.powf(ia),
        x,
    )
}

/// Two-factor space-time convolution `int_0^t {f(t-s,.) * h(s,.)}(x) ds`
/// of radial kernels in d = 1. Each half of `[0, t]` is integrated in the
/// variable that is small there, so times near `t` are not rounded.
fn time_space<F, H>(ck: &ComparisonKernel, f: F, h: H, t: f64, x: f64) -> Result<f64>
where
    F: Fn(f64, f64) -> f64,
    H: Fn(f64, f64) -> f64,
{
    let ia = 1.0 / ck.params.alpha();
    let mut failure = None;
    let mut total = 0.0;
    for near_start in [true, false] {
        let mut slice = |sigma: f64| -> f64 {
            if sigma <= 0.0 {
                return 0.0;
            }
            let big = t - sigma;
            let r = if near_start {
                convolve_line(|r| f(big, r), |r| h(sigma, r), big.powf(ia), sigma.powf(ia), x)
            } else {
                convolve_line(|r| f(sigma, r), |r| h(big, r), sigma.powf(ia), big.powf(ia), x)
            };
            match r {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            }
        };
        let v = quad::integrate_global(&mut slice, &graded_pieces(0.5 * t), outer_settings());
        if let Some(e) = failure.take() {
            return Err(e);
        }
        total += v?.value;
    }
    Ok(total)
}

/// `(g^p star g^p)(t,x)` in d = 1.
pub fn g_power_chain2(ck: &ComparisonKernel, p: f64, t: f64, x: f64) -> Result<f64> {
    require_d1(ck)?;
    time_space(ck, |s, r| ck.radial_pow(s, r, p), |s, r| ck.radial_pow(s, r, p), t, x)
}

/// `g^{(p)}(t,x) = g(t,x)^{p+1} / g(t,0)`.
pub(crate) fn g_mod(ck: &ComparisonKernel, p: f64, t: f64, r: f64) -> f64 {
    ck.radial_pow(t, r, p + 1.0) / ck.radial(t, 0.0)
}

/// `(g^{(p)} star g^{(p)})(t,x)` in d = 1.
pub fn g_mod_chain2(ck: &ComparisonKernel, p: f64, t: f64, x: f64) -> Result<f64> {
    require_d1(ck)?;
    time_space(ck, |s, r| g_mod(ck, p, s, r), |s, r| g_mod(ck, p, s, r), t, x)
}

/// Lower bound for the `(n+1)`-fold chain: `Lambda^n Gamma(a)/Gamma((n+1)a) t^{na} g^p`.
pub fn chain_lower(ck: &ComparisonKernel, cc: &ConvConstants, n: usize, t: f64, r: f64) -> Result<f64> {
    let a = chain_exponent(ck, cc.p);
    let nf = n as f64;
    Ok(cc.lambda_p.powf(nf) * gamma_fn(a)? / gamma_fn((nf + 1.0) * a)? * t.powf(nf * a) * ck.radial_pow(t, r, cc.p))
}

/// One checked point of a certificate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertPoint {
    pub t: f64,
    pub s: Option<f64>,
    pub x: f64,
    pub lhs: f64,
    pub rhs: f64,
}

impl CertPoint {
    pub fn slack(&self) -> f64 {
        self.lhs / self.rhs
    }
}

/// Outcome of a grid certificate: every point must have
/// `lhs >= rhs (1 - tolerance)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertReport {
    pub passed: bool,
    pub tolerance: f64,
    pub min_slack: f64,
    pub worst: Option<CertPoint>,
    pub violations: Vec<CertPoint>,
    pub points: usize,
}

impl CertReport {
    pub fn from_points(points: &[CertPoint], tolerance: f64) -> Self {
        let mut worst: Option<CertPoint> = None;
        let mut violations = Vec::new();
        for p in points {
            if !(p.lhs >= p.rhs * (1.0 - tolerance)) {
                violations.push(*p);
            }
            if worst.map_or(true, |w| p.slack() < w.slack()) {
                worst = Some(*p);
            }
        }
        Self {
            passed: violations.is_empty(),
            tolerance,
            min_slack: worst.map_or(f64::INFINITY, |w| w.slack()),
            worst,
            violations,
            points: points.len(),
        }
    }
}

/// Certifies, on a grid of `x`, the lower bounds for
/// the space convolution at `(t, s)`, the two-fold space-time chain of `g^p`
/// and the two-fold chain of `g^{(p)}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvCertificate {
    pub constants: ConvConstants,
    pub space: CertReport,
    pub chain: CertReport,
    pub modified_chain: CertReport,
}

impl ConvCertificate {
    pub fn passed(&self) -> bool {
        self.space.passed && self.chain.passed && self.modified_chain.passed
    }

    pub fn min_slack(&self) -> f64 {
        self.space.min_slack.min(self.chain.min_slack).min(self.modified_chain.min_slack)
    }
}

pub fn conv_lower_certify(ck: &ComparisonKernel, p: f64, t: f64, s: f64, xs: &[f64]) -> Result<ConvCertificate> {
    require_d1(ck)?;
    let cc = ConvConstants::new(ck, p)?;
    if !(s > 0.0 && s <= t) {
        return domain(format!("need 0 < s <= t, got s = {s}, t = {t}"));
    }
    let da = ck.params.d_over_alpha();
    let a = chain_exponent(ck, p);
    let mut space = Vec::new();
    if s < t {
        for &x in xs {
            let lhs = space_convolution(ck, p, t, s, x)?;
            let rhs = cc.gamma_p * (t - s).powf(da) / (s.powf((p - 1.0) * da) * t.powf(da))
                * ck.radial_pow(t - s, x.abs(), p);
            space.push(CertPoint { t, s: Some(s), x, lhs, rhs });
        }
    }
    let ratio = gamma_fn(a)? / gamma_fn(2.0 * a)? * t.powf(a);
    let mut chain = Vec::new();
    let mut modified = Vec::new();
    for &x in xs {
        let lhs = g_power_chain2(ck, p, t, x)?;
        let rhs = cc.lambda_p * ratio * ck.radial_pow(t, x.abs(), p);
        chain.push(CertPoint { t, s: None, x, lhs, rhs });
        let lhs = g_mod_chain2(ck, p, t, x)?;
        let rhs = cc.theta_p * ratio * g_mod(ck, p, t, x.abs());
        modified.push(CertPoint { t, s: None, x, lhs, rhs });
    }
    Ok(ConvCertificate {
        constants: cc,
        space: CertReport::from_points(&space, QUAD_REL_TOL),
        chain: CertReport::from_points(&chain, QUAD_REL_TOL),
        modified_chain: CertReport::from_points(&modified, QUAD_REL_TOL),
    })
}

/// Tabulated two-fold chain `Phi(v) = (g^p star g^p)(1, v)`, cubic Hermite in
/// `(ln(1+v), ln Phi)`; other times follow from
/// `(g^p star g^p)(t,x) = t^{(alpha+d-2dp)/alpha} Phi(x / t^{1/alpha})`.
struct ChainTable {
    step: f64,
    log_phi: Vec<f64>,
    exponent: f64,
    inv_alpha: f64,
}

impl ChainTable {
    fn build(ck: &ComparisonKernel, p: f64) -> Result<Self> {
        let alpha = ck.params.alpha();
        let n = 81;
        let step = (1e4f64).ln_1p() / (n - 1) as f64;
        let mut log_phi = Vec::with_capacity(n);
        for i in 0..n {
            let v = g_power_chain2(ck, p, 1.0, (step * i as f64).exp_m1())?;
            if !(v > 0.0) {
                return Err(Error::Quadrature { estimate: v, tolerance: 0.0 });
            }
            log_phi.push(v.ln());
        }
        Ok(Self {
            step,
            log_phi,
            exponent: (alpha + 1.0 - 2.0 * p) / alpha,
            inv_alpha: 1.0 / alpha,
        })
    }

    fn phi(&self, v: f64) -> f64 {
        let y = &self.log_phi;
        let n = y.len();
        let w = v.ln_1p() / self.step;
        if w >= (n - 1) as f64 {
            return (y[n - 1] + (y[n - 1] - y[n - 2]) * (w - (n - 1) as f64)).exp();
        }
        let i = (w as usize).min(n - 2);
        let s = w - i as f64;
        // five-point slopes in the interior; Phi is even in v, so the slope at w = 0 vanishes
        let m = |j: usize| -> f64 {
            if j == 0 {
                0.0
            } else if j == 1 || j == n - 2 {
                0.5 * (y[j + 1] - y[j - 1])
            } else if j == n - 1 {
                y[n - 1] - y[n - 2]
            } else {
                (8.0 * (y[j + 1] - y[j - 1]) - (y[j + 2] - y[j - 2])) / 12.0
            }
        };
        let (y0, y1, m0, m1) = (y[i], y[i + 1], m(i), m(i + 1));
        let s2 = s * s;
        let s3 = s2 * s;
        let val = (2.0 * s3 - 3.0 * s2 + 1.0) * y0 + (s3 - 2.0 * s2 + s) * m0 + (-2.0 * s3 + 3.0 * s2) * y1 + (s3 - s2) * m1;
        val.exp()
    }

    fn eval(&self, t: f64, r: f64) -> f64 {
        t.powf(self.exponent) * self.phi(r / t.powf(self.inv_alpha))
    }
}

/// Partial sum of `K^{(p)}(c; t, x)` against its Mittag-Leffler lower bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSeriesReport {
    /// `c^n` times the `(n+1)`-fold chain; computed for `n <= 2`, the chain
    /// lower bound beyond.
    pub terms: Vec<f64>,
    pub partial_sum: f64,
    /// `Gamma(a) g^p E_{a,a}(c Lambda t^a)`, the full series bound.
    pub ml_lower: f64,
    /// The same bound truncated at `n_max`.
    pub ml_lower_truncated: f64,
    pub passed: bool,
    /// Set when the Mittag-Leffler tail beyond `n_max` exceeds 1e-6 of the bound.
    pub truncation_warning: Option<String>,
}

pub fn k_series(ck: &ComparisonKernel, c: f64, p: f64, t: f64, x: f64, n_max: usize) -> Result<KSeriesReport> {
    require_d1(ck)?;
    if !(c > 0.0) {
        return domain(format!("series constant must be positive, got {c}"));
    }
    let cc = ConvConstants::new(ck, p)?;
    let a = chain_exponent(ck, p);
    if !(a > 0.0) {
        return domain("need (p-1) d/alpha < 1");
    }
    if !(t >= 0.0) {
        return domain(format!("time must be >= 0, got {t}"));
    }
    let r = x.abs();
    if t == 0.0 {
        // E_{a,a}(0) = 1/Gamma(a): only the n = 0 term g(0, x)^p = 0 survives
        if r == 0.0 {
            return Err(crate::Error::Divergence("g(0, 0) is infinite".into()));
        }
        return Ok(KSeriesReport {
            terms: vec![0.0],
            partial_sum: 0.0,
            ml_lower: 0.0,
            ml_lower_truncated: 0.0,
            passed: true,
            truncation_warning: None,
        });
    }
    let gp = ck.radial_pow(t, r, p);
    let ga = gamma_fn(a)?;
    let z = c * cc.lambda_p * t.powf(a);
    let mut terms = vec![gp];
    if n_max >= 1 {
        terms.push(c * g_power_chain2(ck, p, t, x)?);
    }
    if n_max >= 2 {
        let table = ChainTable::build(ck, p)?;
        let v = time_space(ck, |s, rr| table.eval(s, rr), |s, rr| ck.radial_pow(s, rr, p), t, x)?;
        terms.push(c * c * v);
    }
    for n in 3..=n_max {
        terms.push(c.powi(n as i32) * chain_lower(ck, &cc, n, t, r)?);
    }
    let partial_sum: f64 = terms.iter().sum();
    let mut truncated = 0.0;
    for n in 0..=n_max {
        truncated += z.powi(n as i32) / gamma_fn((n as f64 + 1.0) * a)?;
    }
    let ml_lower_truncated = ga * gp * truncated;
    let ml_lower = ga * gp * ml_series(MLQuery::new(a, a, z)?)?;
    let tail = ml_lower - ml_lower_truncated;
    let truncation_warning = if tail > 1e-6 * ml_lower {
        Some(format!(
            "series truncated at n = {n_max}; omitted bound mass {:.3e} of {:.3e}",
            tail, ml_lower
        ))
    } else {
        None
    };
    Ok(KSeriesReport {
        passed: partial_sum >= ml_lower_truncated,
        terms,
        partial_sum,
        ml_lower,
        ml_lower_truncated,
        truncation_warning,
    })
}

/// Checks `g(t, x - y) >= kappa^{-1} t^{d/alpha} g(t, sqrt2 x) g(t, sqrt2 y)`
/// on all pairs of `xs` (d = 1 points, any sign).
pub fn check_triangle_split(ck: &ComparisonKernel, ts: &[f64], xs: &[f64]) -> CertReport {
    let da = ck.params.d_over_alpha();
    let s2 = std::f64::consts::SQRT_2;
    let mut pts = Vec::new();
    for &t in ts {
        for &x in xs {
            for &y in xs {
                let lhs = ck.radial(t, (x - y).abs());
                let rhs = t.powf(da) / ck.kappa * ck.radial(t, s2 * x.abs()) * ck.radial(t, s2 * y.abs());
                pts.push(CertPoint { t, s: Some(y), x, lhs, rhs });
            }
        }
    }
    CertReport::from_points(&pts, ROUNDING_TOL)
}

/// Checks `s^{d/alpha} g(s,x) >= t^{d/alpha} / 2^{1+d/alpha} g(t,x)` for `t/2 <= s <= t`.
pub fn check_time_comparison(ck: &ComparisonKernel, ts: &[f64], xs: &[f64]) -> CertReport {
    let da = ck.params.d_over_alpha();
    let mut pts = Vec::new();
    for &t in ts {
        for k in 0..=8 {
            let s = t * (0.5 + 0.5 * k as f64 / 8.0);
            for &x in xs {
                let lhs = s.powf(da) * ck.radial(s, x.abs());
                let rhs = t.powf(da) / 2f64.powf(1.0 + da) * ck.radial(t, x.abs());
                pts.push(CertPoint { t, s: Some(s), x, lhs, rhs });
            }
        }
    }
    CertReport::from_points(&pts, ROUNDING_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::KernelParams;
    use approx::assert_relative_eq;

    fn ck(a: f64) -> ComparisonKernel {
        ComparisonKernel::new(KernelParams::new(1, a).unwrap())
    }

    #[test]
    fn constants_at_cauchy_point() {
        let cc = ConvConstants::new(&ck(1.0), 1.0).unwrap();
        assert_relative_eq!(cc.gamma_p, 0.125, max_relative = 1e-14);
        assert_relative_eq!(cc.lambda_p, 1.0 / 64.0, max_relative = 1e-14);
        assert_relative_eq!(cc.nu, 0.5);
        assert_relative_eq!(cc.c_nu, std::f64::consts::PI, max_relative = 1e-14);
        assert_relative_eq!(cc.c_hmom.unwrap(), 2.0 * 4.0 / 3.0, max_relative = 1e-14);
        assert!(ConvConstants::new(&ck(1.0), 2.0).is_err());
        assert!(ConvConstants::new(&ck(1.0), 0.5).is_err());
    }

    #[test]
    fn space_convolution_cauchy_semigroup() {
        // p = 1, alpha = 1: Cauchy kernels convolve exactly
        let c = ck(1.0);
        for &x in &[0.0, 0.7, 5.0, 40.0] {
            let v = space_convolution(&c, 1.0, 2.0, 0.6, x).unwrap();
            assert_relative_eq!(v, c.radial(2.0, x), max_relative = 1e-9);
        }
    }

    #[test]
    fn chain_of_unit_mass_kernels() {
        // p = 1: (g star g)(t,.) integrates to t; check the x = 0 value against 1 star g
        let c = ck(1.0);
        let v = g_power_chain2(&c, 1.0, 1.0, 0.0).unwrap();
        // int_0^1 g(1, 0) ds by the semigroup property
        assert_relative_eq!(v, c.radial(1.0, 0.0), max_relative = 1e-7);
    }

    #[test]
    fn certificate_alpha_15() {
        let c = ck(1.5);
        let xs: Vec<f64> = (0..=10).map(|i| -5.0 + i as f64).collect();
        let cert = conv_lower_certify(&c, 1.2, 1.0, 0.4, &xs).unwrap();
        assert!(cert.passed(), "{cert:?}");
        assert!(cert.min_slack() >= 1.0);
    }

    #[test]
    fn elementary_inequalities() {
        let c = ck(1.5);
        let ts = [0.25, 0.5, 1.0, 2.0, 4.0];
        let xs: Vec<f64> = (-20..=20).map(|i| i as f64).collect();
        assert!(check_triangle_split(&c, &ts, &xs).passed);
        assert!(check_time_comparison(&c, &ts, &xs).passed);
    }

    #[test]
    fn k_series_single_term() {
        let c = ck(1.5);
        let r = k_series(&c, 1.0, 1.2, 1.0, 0.3, 0).unwrap();
        assert_eq!(r.terms.len(), 1);
        assert_relative_eq!(r.partial_sum, c.radial_pow(1.0, 0.3, 1.2), max_relative = 1e-15);
        // n = 0 bound is Gamma(a) g^p / Gamma(a) = g^p
        assert_relative_eq!(r.ml_lower_truncated, r.partial_sum, max_relative = 1e-13);
        assert!(r.passed);
    }

    #[test]
    fn k_series_at_time_zero() {
        let c = ck(1.5);
        let r = k_series(&c, 1.0, 1.2, 0.0, 0.7, 3).unwrap();
        assert_eq!(r.terms, vec![0.0]);
        assert!(r.passed && r.ml_lower == 0.0);
        assert!(matches!(k_series(&c, 1.0, 1.2, 0.0, 0.0, 3), Err(crate::Error::Divergence(_))));
        assert!(k_series(&c, 1.0, 1.2, -1.0, 0.7, 3).is_err());
    }

    #[test]
    fn k_series_two_terms() {
        let c = ck(1.5);
        let r = k_series(&c, 1.0, 1.2, 1.0, 0.0, 1).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(r.partial_sum > r.ml_lower_truncated);
    }

    #[test]
    fn chain_table_scaling() {
        let c = ck(1.5);
        let table = ChainTable::build(&c, 1.2).unwrap();
        for &(t, x) in &[(0.5, 0.3), (2.0, 1.7), (1.3, 0.0), (0.2, 30.0), (1.0, 5e4)] {
            let direct = g_power_chain2(&c, 1.2, t, x).unwrap();
            assert_relative_eq!(table.eval(t, x), direct, max_relative = 1e-4);
        }
    }
}
