//! Ordering check of the estimated `inf_x E|X|^p` against the renewal solution.

use serde::{Deserialize, Serialize};

use super::fit::SlopeFit;
use super::{lyapunov_fit, MomentSeries};
use crate::analytics::{renewal_solve, RenewalProblem};
use crate::error::{domain, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenewalCheck {
    pub c3: f64,
    pub c4: f64,
    pub times: Vec<f64>,
    pub inf_mean: Vec<f64>,
    pub inf_se: Vec<f64>,
    /// Renewal solution interpolated at `times`.
    pub f: Vec<f64>,
    /// `inf_mean - f`.
    pub margin: Vec<f64>,
    /// Every margin is `>= -2 SE`.
    pub ordered: bool,
    pub beta1: Option<f64>,
    /// Lower Lyapunov slope over the last half of the series, when it has 5 points.
    pub lower_slope: Option<SlopeFit>,
    pub warnings: Vec<String>,
}

impl RenewalCheck {
    /// Every margin from index `from` on is `>= -2 SE`.
    pub fn ordered_from(&self, from: usize) -> bool {
        self.margin.iter().zip(&self.inf_se).skip(from).all(|(m, se)| *m >= -2.0 * se)
    }
}

/// Solves `f = c3 + c4 (w * f)` with `w` tabulated at step `dt` and compares
/// it with the series' `inf_x` moment at the series times.
pub fn renewal_check(series: &MomentSeries, weight: &[f64], dt: f64, c3: f64, c4: f64) -> Result<RenewalCheck> {
    let t_end = series.times.last().copied().unwrap_or(0.0);
    let covered = dt * weight.len().saturating_sub(1) as f64;
    if covered < t_end * (1.0 - 1e-12) {
        return domain(format!("weight covers [0, {covered}], series runs to {t_end}"));
    }
    if let Some((i, v)) = series.inf_mean.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(crate::Error::NonPositiveMoment { index: i, value: *v });
    }
    let sol = renewal_solve(&RenewalProblem {
        c3,
        c4,
        weight: weight.to_vec(),
        dt,
    })?;
    let f: Vec<f64> = series
        .times
        .iter()
        .map(|&t| {
            let u = t / dt;
            let k = (u.floor() as usize).min(sol.f.len() - 2);
            let s = u - k as f64;
            sol.f[k] * (1.0 - s) + sol.f[k + 1] * s
        })
        .collect();
    let margin: Vec<f64> = series.inf_mean.iter().zip(&f).map(|(a, b)| a - b).collect();
    let ordered = margin.iter().zip(&series.inf_se).all(|(m, se)| *m >= -2.0 * se);
    let lower_slope = lyapunov_fit(series, 0.5 * t_end, t_end).ok().map(|l| l.lower);
    Ok(RenewalCheck {
        c3,
        c4,
        times: series.times.clone(),
        inf_mean: series.inf_mean.clone(),
        inf_se: series.inf_se.clone(),
        f,
        margin,
        ordered,
        beta1: sol.beta1,
        lower_slope,
        warnings: sol.warnings,
    })
}

/// Heuristic `(c3, c4)` from the first two saved times: `c3 = I(t_0)` and
/// `I(t_1) = c3 + c4 c3 int_0^{t_1} w`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenewalCalibration {
    pub c3: f64,
    pub c4: f64,
    pub note: String,
}

pub fn calibrate_renewal(series: &MomentSeries, weight: &[f64], dt: f64) -> Result<RenewalCalibration> {
    if series.times.len() < 2 {
        return domain("calibration needs two saved times");
    }
    let c3 = series.inf_mean[0];
    if !(c3 > 0.0) {
        return domain(format!("inf moment at the first time must be positive, got {c3}"));
    }
    let t1 = series.times[1];
    let m = ((t1 / dt).round() as usize).min(weight.len() - 1);
    if m == 0 {
        return domain("the second saved time is below the weight step");
    }
    let w1: f64 = dt * (0.5 * (weight[0] + weight[m]) + weight[1..m].iter().sum::<f64>());
    let c4 = if w1 > 0.0 { ((series.inf_mean[1] - c3) / (c3 * w1)).max(0.0) } else { 0.0 };
    Ok(RenewalCalibration {
        c3,
        c4,
        note: "heuristic calibration from the first two saved times; not a derived constant".into(),
    })
}
