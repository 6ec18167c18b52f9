use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{domain, Result};

/// Least-squares line with a two-sided 95% confidence interval on the slope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub ci95: (f64, f64),
    pub n: usize,
}

impl SlopeFit {
    pub fn significantly_positive(&self) -> bool {
        self.ci95.0 > 0.0
    }

    pub fn significantly_negative(&self) -> bool {
        self.ci95.1 < 0.0
    }
}

/// Ordinary least squares of `ys` on `xs`; the interval uses Student t with
/// `n - 2` degrees of freedom.
pub fn ols(xs: &[f64], ys: &[f64]) -> Result<SlopeFit> {
    let n = xs.len();
    if n != ys.len() {
        return domain("x and y lengths differ");
    }
    if n < 3 {
        return domain(format!("a slope with an interval needs at least 3 points, got {n}"));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if !(sxx > 0.0) {
        return domain("x values are all equal");
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let slope_se = (rss / (nf - 2.0) / sxx).sqrt();
    let q = StudentsT::new(0.0, 1.0, nf - 2.0).expect("dof > 0").inverse_cdf(0.975);
    Ok(SlopeFit {
        slope,
        intercept,
        slope_se,
        ci95: (slope - q * slope_se, slope + q * slope_se),
        n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exact_line() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64 * 0.3).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x - 1.0).collect();
        let f = ols(&xs, &ys).unwrap();
        assert_relative_eq!(f.slope, 3.0, max_relative = 1e-12);
        assert_relative_eq!(f.intercept, -1.0, max_relative = 1e-12);
        assert!(f.slope_se < 1e-12);
        assert!(ols(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn interval_width() {
        // residuals +-1 alternate: rss = n, t quantile at 3 dof
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0];
        let ys = [1.0, -1.0, 1.0, -1.0, 1.0];
        let f = ols(&xs, &ys).unwrap();
        let q = StudentsT::new(0.0, 1.0, 3.0).unwrap().inverse_cdf(0.975);
        assert_relative_eq!(q, 3.182446305284263, max_relative = 1e-9);
        assert_relative_eq!(f.ci95.1 - f.ci95.0, 2.0 * q * f.slope_se, max_relative = 1e-12);
    }
}
