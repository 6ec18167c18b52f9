//! Numerical checks of the two elementary moment inequalities the lower
//! bounds rest on.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::specfun::ln_gamma;

/// `E[X^r]` for `X ~ Poisson(lam)`, by direct summation until the terms past
/// the mode drop below `1e-17` of the partial sum.
pub fn poisson_moment(lam: f64, r: f64) -> Result<f64> {
    if !(lam > 0.0 && lam.is_finite()) {
        return domain(format!("Poisson mean must be positive, got {lam}"));
    }
    if !(r > 0.0) {
        return domain(format!("moment order must be positive, got {r}"));
    }
    let mut sum = 0.0;
    let mut k = 1u64;
    loop {
        let kf = k as f64;
        let term = (r * kf.ln() - lam + kf * lam.ln() - ln_gamma(kf + 1.0)?).exp();
        sum += term;
        if kf > lam + r && term < 1e-17 * sum {
            return Ok(sum);
        }
        k += 1;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoissonFit {
    /// Largest `c` with `E[X^r] >= c lam` (`lam < 1`) and `>= c lam^r` (`lam >= 1`) on the grid.
    pub c: f64,
    /// `(lam, r, E[X^r], ratio)` per grid point.
    pub points: Vec<(f64, f64, f64, f64)>,
}

pub fn poisson_moment_constant(lams: &[f64], rs: &[f64]) -> Result<PoissonFit> {
    let mut points = Vec::with_capacity(lams.len() * rs.len());
    for &lam in lams {
        for &r in rs {
            let m = poisson_moment(lam, r)?;
            let scale = if lam < 1.0 { lam } else { lam.powf(r) };
            points.push((lam, r, m, m / scale));
        }
    }
    let c = points.iter().map(|p| p.3).fold(f64::INFINITY, f64::min);
    Ok(PoissonFit { c, points })
}

/// `1/4` for `p in (1, 2]`, `1/6` for `p in (2, 3]`.
pub fn abs_moment_lower_constant(p: f64) -> Result<f64> {
    if p > 1.0 && p <= 2.0 {
        Ok(0.25)
    } else if p > 2.0 && p <= 3.0 {
        Ok(1.0 / 6.0)
    } else {
        domain(format!("p must lie in (1, 3], got {p}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbsMomentCheck {
    pub a: f64,
    pub p: f64,
    /// Sample mean of `|a + X|^p`.
    pub lhs: f64,
    pub lhs_se: f64,
    /// `kappa_p (|a|^p + E|X|^p)` with the sample `E|X|^p`.
    pub rhs: f64,
    pub passed: bool,
}

/// Compares the sample estimate of `E|a + X|^p` with `kappa_p (|a|^p + E|X|^p)`;
/// passes when `lhs >= rhs - 3 SE`. `samples` should come from a mean-zero law.
pub fn abs_moment_lower_check(samples: &[f64], a: f64, p: f64) -> Result<AbsMomentCheck> {
    let kappa = abs_moment_lower_constant(p)?;
    if samples.len() < 2 {
        return domain("need at least two samples");
    }
    let n = samples.len() as f64;
    let vals: Vec<f64> = samples.iter().map(|x| (a + x).abs().powf(p)).collect();
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    let se = (var / n).sqrt();
    let ex = samples.iter().map(|x| x.abs().powf(p)).sum::<f64>() / n;
    let rhs = kappa * (a.abs().powf(p) + ex);
    Ok(AbsMomentCheck {
        a,
        p,
        lhs: mean,
        lhs_se: se,
        rhs,
        passed: mean >= rhs - 3.0 * se,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Exp1, StandardNormal};

    #[test]
    fn poisson_integer_moments() {
        for lam in [0.1, 1.0, 10.0] {
            assert_relative_eq!(poisson_moment(lam, 1.0).unwrap(), lam, max_relative = 1e-13);
            assert_relative_eq!(poisson_moment(lam, 2.0).unwrap(), lam + lam * lam, max_relative = 1e-13);
        }
    }

    #[test]
    fn poisson_constant_positive() {
        let fit = poisson_moment_constant(&[0.1, 1.0, 10.0], &[0.5, 1.0, 2.0]).unwrap();
        assert_eq!(fit.points.len(), 9);
        assert!(fit.c > 0.3 && fit.c <= 1.0, "{}", fit.c);
    }

    #[test]
    fn abs_moment_inequality_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let gauss: Vec<f64> = (0..20_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let skew: Vec<f64> = (0..20_000).map(|_| { let e: f64 = Exp1.sample(&mut rng); e - 1.0 }).collect();
        for samples in [&gauss, &skew] {
            for p in [1.2, 1.5, 2.0, 2.5] {
                for a in [-3.0, -0.5, 0.0, 0.2, 1.0, 5.0] {
                    let chk = abs_moment_lower_check(samples, a, p).unwrap();
                    assert!(chk.passed, "{chk:?}");
                }
            }
        }
        assert!(abs_moment_lower_constant(1.0).is_err());
        assert_eq!(abs_moment_lower_constant(3.0).unwrap(), 1.0 / 6.0);
    }
}
