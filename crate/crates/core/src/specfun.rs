//! Gamma, Beta, the two-parameter Mittag-Leffler function and the modified
//! Bessel function of the second kind.

use std::f64::consts::PI;

use crate::error::{domain, Error, Result};
use crate::quad;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x == x.floor()
}

fn lanczos_sum(x: f64) -> f64 {
    // x is the shifted argument (original minus one)
    let mut a = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    a
}

/// Gamma function. Lanczos approximation on `x >= 0.5`, reflection below.
pub fn gamma_fn(x: f64) -> Result<f64> {
    if x.is_nan() {
        return domain("gamma of NaN");
    }
    if is_nonpositive_integer(x) {
        return Err(Error::Pole(x));
    }
    if x < 0.5 {
        let s = (PI * x).sin();
        return Ok(PI / (s * gamma_fn(1.0 - x)?));
    }
    if x > 171.7 {
        return Err(Error::Overflow(format!("gamma({x}) exceeds f64 range")));
    }
    if x == x.floor() && x <= 21.0 {
        // exact factorials
        let mut f = 1.0;
        let mut k = 2.0;
        while k < x {
            f *= k;
            k += 1.0;
        }
        return Ok(f);
    }
    let z = x - 1.0;
    let t = z + LANCZOS_G + 0.5;
    // split the power so t^{z+1/2} does not overflow before e^{-t} is applied
    let half_pow = t.powf(0.5 * (z + 0.5)) * (-0.5 * t).exp();
    Ok((2.0 * PI).sqrt() * half_pow * half_pow * lanczos_sum(z))
}

/// `ln |Gamma(x)|`. Usable far beyond the range where `gamma_fn` overflows.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if is_nonpositive_integer(x) {
        return Err(Error::Pole(x));
    }
    if x < 0.5 {
        let s = (PI * x).sin().abs();
        return Ok(PI.ln() - s.ln() - ln_gamma(1.0 - x)?);
    }
    let z = x - 1.0;
    let t = z + LANCZOS_G + 0.5;
    Ok(0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + lanczos_sum(z).ln())
}

/// `1 / Gamma(x)`, zero at the poles.
pub fn recip_gamma(x: f64) -> f64 {
    if is_nonpositive_integer(x) {
        return 0.0;
    }
    if x > 171.0 {
        return 0.0;
    }
    match gamma_fn(x) {
        Ok(g) => 1.0 / g,
        Err(_) => 0.0,
    }
}

pub fn beta_fn(p: f64, q: f64) -> Result<f64> {
    if p <= 0.0 || q <= 0.0 {
        return domain(format!("beta needs p, q > 0, got ({p}, {q})"));
    }
    Ok((ln_gamma(p)? + ln_gamma(q)? - ln_gamma(p + q)?).exp())
}

/// Hurwitz zeta `sum_{n>=0} (n + q)^{-s}` for `s > 1`, `q > 0`, by
/// Euler-Maclaurin summation after ten explicit terms.
pub fn hurwitz_zeta(s: f64, q: f64) -> Result<f64> {
    if !(s > 1.0) || !(q > 0.0) || !s.is_finite() || !q.is_finite() {
        return domain(format!("hurwitz zeta needs s > 1 and q > 0, got s = {s}, q = {q}"));
    }
    // B_{2j} / (2j)!
    const B: [f64; 7] = [
        1.0 / 12.0,
        -1.0 / 720.0,
        1.0 / 30240.0,
        -1.0 / 1209600.0,
        1.0 / 47900160.0,
        -691.0 / 1307674368000.0,
        1.0 / 74724249600.0,
    ];
    const N: usize = 10;
    let mut sum: f64 = (0..N).map(|n| (q + n as f64).powf(-s)).sum();
    let a = q + N as f64;
    sum += a.powf(1.0 - s) / (s - 1.0) + 0.5 * a.powf(-s);
    // rising factorial s (s+1) ... (s+2j-2) times a^{-s-2j+1}
    let mut fac = s * a.powf(-s - 1.0);
    for (j, b) in B.iter().enumerate() {
        sum += b * fac;
        let k = 2.0 * j as f64;
        fac *= (s + k + 1.0) * (s + k + 2.0) / (a * a);
    }
    Ok(sum)
}

/// Surface area of the unit sphere in R^d, `2 pi^{d/2} / Gamma(d/2)`.
pub fn unit_sphere_area(d: u32) -> f64 {
    let h = d as f64 / 2.0;
    2.0 * PI.powf(h) / gamma_fn(h).expect("d >= 1")
}

/// Arguments of `E_{a,b}(z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MLQuery {
    a: f64,
    b: f64,
    z: f64,
}

impl MLQuery {
    pub fn new(a: f64, b: f64, z: f64) -> Result<Self> {
        if !(a > 0.0) {
            return domain(format!("Mittag-Leffler parameter a must be > 0, got {a}"));
        }
        if !(b > 0.0) {
            return domain(format!("Mittag-Leffler parameter b must be > 0, got {b}"));
        }
        if !z.is_finite() {
            return domain("Mittag-Leffler argument must be finite");
        }
        Ok(Self { a, b, z })
    }
    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn z(&self) -> f64 {
        self.z
    }
}

/// Which evaluation route produced a Mittag-Leffler value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MLRegime {
    Series,
    /// Leading exponential term only; relative error of order `z^{-1/a}`
    /// times the first algebraic correction.
    Asymptotic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MLValue {
    pub value: f64,
    pub regime: MLRegime,
}

const ML_MAX_TERMS: usize = 20_000;
/// Terms must start shrinking before this index for the series route.
const ML_SERIES_DECAY_INDEX: usize = 200;
/// Largest `z^{1/a}` evaluated by the series in [`mittag_leffler`].
const ML_SERIES_EXP_LIMIT: f64 = 30.0;

/// Direct summation of `sum z^n / Gamma(a n + b)`, terms in log space.
///
/// Stops when the tail is below `1e-17` of the partial sum and the terms
/// decrease geometrically. Fails with `Overflow` above `f64::MAX`.
pub fn ml_series(q: MLQuery) -> Result<f64> {
    let MLQuery { a, b, z } = q;
    if z == 0.0 {
        return Ok(recip_gamma(b));
    }
    let lz = z.abs().ln();
    let neg = z < 0.0;
    // Kahan-compensated sum; for negative z the terms alternate.
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    let mut max_term = 0.0f64;
    let mut prev_mag = f64::INFINITY;
    for n in 0..ML_MAX_TERMS {
        let arg = a * n as f64 + b;
        let mag = if is_nonpositive_integer(arg) {
            0.0
        } else {
            let lg = ln_gamma(arg)?;
            let sign = if arg < 0.0 && (arg.floor() as i64) % 2 != 0 {
                -1.0
            } else {
                1.0
            };
            let l = n as f64 * lz - lg;
            if l > 709.0 {
                return Err(Error::Overflow(format!(
                    "Mittag-Leffler series term {n} exceeds f64 range"
                )));
            }
            sign * l.exp()
        };
        let term = if neg && n % 2 == 1 { -mag } else { mag };
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        max_term = max_term.max(mag.abs());
        if n > 2 && mag.abs() < prev_mag && mag.abs() <= 1e-17 * sum.abs().max(1e-300) {
            if neg && max_term > 1e8 * sum.abs() {
                return Err(Error::Domain(format!(
                    "Mittag-Leffler series lost all precision at z = {z}"
                )));
            }
            if !sum.is_finite() {
                return Err(Error::Overflow("Mittag-Leffler series".into()));
            }
            return Ok(sum);
        }
        prev_mag = mag.abs();
    }
    Err(Error::Domain(format!(
        "Mittag-Leffler series did not converge within {ML_MAX_TERMS} terms"
    )))
}

/// Leading exponential asymptotics `(1/a) z^{(1-b)/a} exp(z^{1/a})`.
pub fn ml_asymptotic(q: MLQuery) -> Result<f64> {
    let MLQuery { a, b, z } = q;
    if !(a > 0.0 && a < 2.0) {
        return domain(format!("asymptotic form needs a in (0,2), got {a}"));
    }
    if !(z > 0.0) {
        return domain(format!("asymptotic form needs z > 0, got {z}"));
    }
    let root = z.powf(1.0 / a);
    let l = -a.ln() + (1.0 - b) / a * z.ln() + root;
    if l > 709.78 {
        return Err(Error::Overflow(format!("E_{{{a},{b}}}({z}) exceeds f64 range")));
    }
    Ok(l.exp())
}

/// Whether the series route should be used for this argument.
fn ml_series_preferred(q: &MLQuery) -> bool {
    if q.z <= 0.0 {
        return true;
    }
    if q.a >= 2.0 {
        return true;
    }
    if q.z.powf(1.0 / q.a) >= ML_SERIES_EXP_LIMIT {
        return false;
    }
    // index of the largest term: Gamma(a n + b) ~ z^n around n ~ z^{1/a} / a
    let peak = q.z.powf(1.0 / q.a) / q.a;
    peak < ML_SERIES_DECAY_INDEX as f64
}

/// Two-parameter Mittag-Leffler function `E_{a,b}(z)` for real `z`.
///
/// The series is summed while its terms peak before index 200 and
/// `z^{1/a} < 30`; otherwise the leading exponential asymptotics is used and
/// the result is flagged [`MLRegime::Asymptotic`].
pub fn mittag_leffler(q: MLQuery) -> Result<MLValue> {
    if ml_series_preferred(&q) {
        return Ok(MLValue {
            value: ml_series(q)?,
            regime: MLRegime::Series,
        });
    }
    Ok(MLValue {
        value: ml_asymptotic(q)?,
        regime: MLRegime::Asymptotic,
    })
}

/// Arguments of `K_nu(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselQuery {
    nu: f64,
    x: f64,
}

impl BesselQuery {
    pub fn new(nu: f64, x: f64) -> Result<Self> {
        if !nu.is_finite() {
            return domain("Bessel order must be finite");
        }
        if !(x >= 0.0) || !x.is_finite() {
            return domain(format!("Bessel argument must be >= 0, got {x}"));
        }
        // K_nu = K_{-nu}
        Ok(Self { nu: nu.abs(), x })
    }
    pub fn nu(&self) -> f64 {
        self.nu
    }
    pub fn x(&self) -> f64 {
        self.x
    }
}

/// Modified Bessel function of the second kind via
/// `K_nu(x) = int_0^inf exp(-x cosh t) cosh(nu t) dt` and tanh-sinh quadrature.
pub fn bessel_k(q: BesselQuery) -> Result<f64> {
    let (nu, x) = (q.nu, q.x);
    if x == 0.0 {
        return Err(Error::Divergence(format!("K_{nu}(0) is infinite")));
    }
    // Work with exp(-x (cosh t - 1)) cosh(nu t) and restore e^{-x} at the end.
    let h = |t: f64| -> f64 {
        let e = -x * (t.cosh() - 1.0) + nu * t;
        0.5 * (e.exp() + (-x * (t.cosh() - 1.0) - nu * t).exp())
    };
    // log of the integrand peak, then truncate where it has fallen by e^{-50}
    let log_h = |t: f64| -x * (t.cosh() - 1.0) + nu * t;
    let t_peak = if nu > x { (nu / x).asinh() } else { 0.0 };
    let peak = log_h(t_peak);
    let mut t_max = t_peak + 1.0;
    while log_h(t_max) > peak - 50.0 {
        t_max *= 1.5;
    }
    let pieces = [0.0, t_peak, t_max];
    let mut total = 0.0;
    for w in pieces.windows(2) {
        if w[1] > w[0] {
            total += quad::tanh_sinh(h, w[0], w[1], 1e-13)?.value;
        }
    }
    Ok(total * (-x).exp())
}

/// Power-series form of `K_nu(x)` for non-integer `nu`. Cancels badly near
/// integer orders; kept as a cross-check on small arguments.
pub fn bessel_k_series(q: BesselQuery) -> Result<f64> {
    let (nu, x) = (q.nu, q.x);
    if x == 0.0 {
        return Err(Error::Divergence(format!("K_{nu}(0) is infinite")));
    }
    if (nu - nu.round()).abs() < 1e-8 {
        return domain("series form is undefined at integer order");
    }
    let half = x / 2.0;
    let series = |order: f64| -> f64 {
        let mut s = 0.0;
        let mut n_fact = 1.0;
        for n in 0..60 {
            if n > 0 {
                n_fact *= n as f64;
            }
            s += half.powf(order + 2.0 * n as f64) / n_fact * recip_gamma(order + n as f64 + 1.0);
        }
        s
    };
    Ok(PI / (2.0 * (nu * PI).sin()) * (series(-nu) - series(nu)))
}

#[cfg(test)]
mod hurwitz_tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn hurwitz_values() {
        assert_relative_eq!(hurwitz_zeta(2.0, 1.0).unwrap(), PI * PI / 6.0, max_relative = 1e-14);
        assert_relative_eq!(hurwitz_zeta(4.0, 1.0).unwrap(), PI.powi(4) / 90.0, max_relative = 1e-14);
        // zeta(s, 1/2) = (2^s - 1) zeta(s)
        assert_relative_eq!(hurwitz_zeta(2.0, 0.5).unwrap(), 3.0 * PI * PI / 6.0, max_relative = 1e-14);
        for (s, q) in [(1.5, 0.3), (1.2, 7.0), (2.7, 120.0)] {
            let d = hurwitz_zeta(s, q).unwrap() - hurwitz_zeta(s, q + 1.0).unwrap();
            assert_relative_eq!(d, q.powf(-s), max_relative = 1e-10);
        }
        assert!(hurwitz_zeta(1.0, 1.0).is_err());
    }
}
