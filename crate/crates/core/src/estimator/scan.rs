//! Sup of the moment surface over the receding regions `|x| >= e^{eta t^r} - 1`.

use serde::{Deserialize, Serialize};

use super::fit::{ols, SlopeFit};
use super::{surface, Aggregator};
use crate::error::{domain, Result};
use crate::solver::Trajectory;

/// `e^{eta t^r} - 1`; the `- 1` makes `eta = 0` the whole line and does not
/// change the growth indices.
pub fn region_threshold(eta: f64, t: f64, r: f64) -> f64 {
    (eta * t.powf(r)).exp_m1()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthScan {
    pub etas: Vec<f64>,
    pub r: f64,
    pub times: Vec<f64>,
    /// `values[i][k]`: sup over cells with `|x| >= region_threshold(etas[i], times[k], r)`;
    /// `None` when no grid cell lies that far out.
    pub values: Vec<Vec<Option<f64>>>,
    /// Fit window `[lo, hi]` in time.
    pub window: (f64, f64),
    /// Slope of `log value` against `t^r` over the window, per eta.
    pub slopes: Vec<Option<SlopeFit>>,
    /// Largest eta whose slope is positive at 95% confidence.
    pub eta_low: Option<f64>,
    /// Smallest eta `>= eta_low` whose slope is negative at 95% confidence.
    pub eta_high: Option<f64>,
}

impl GrowthScan {
    pub fn empty(&self, i: usize, k: usize) -> bool {
        self.values[i][k].is_none()
    }
}

/// Scan of a moment surface `surface[k][j]` given at `times[k]`, cell centres `xs[j]`.
/// The default window is the last half of the time range.
pub fn growth_index_scan_surface(
    times: &[f64],
    xs: &[f64],
    surface: &[Vec<f64>],
    etas: &[f64],
    r: f64,
    window: Option<(f64, f64)>,
) -> Result<GrowthScan> {
    if !(r > 0.0 && r <= 1.0) {
        return domain(format!("rate exponent r must lie in (0, 1], got {r}"));
    }
    if surface.len() != times.len() || surface.iter().any(|row| row.len() != xs.len()) {
        return domain("surface shape does not match times x cells");
    }
    if etas.iter().any(|e| !(*e >= 0.0)) {
        return domain("eta values must be >= 0");
    }
    let t_end = times.last().copied().unwrap_or(0.0);
    let window = window.unwrap_or((0.5 * t_end, t_end));
    let values: Vec<Vec<Option<f64>>> = etas
        .iter()
        .map(|&eta| {
            times
                .iter()
                .zip(surface)
                .map(|(&t, row)| {
                    let thr = region_threshold(eta, t, r);
                    xs.iter()
                        .zip(row)
                        .filter(|(x, _)| x.abs() >= thr)
                        .map(|(_, &v)| v)
                        .reduce(f64::max)
                })
                .collect()
        })
        .collect();
    let slopes: Vec<Option<SlopeFit>> = values
        .iter()
        .map(|vals| {
            let (s, y): (Vec<f64>, Vec<f64>) = times
                .iter()
                .zip(vals)
                .filter(|(&t, v)| t >= window.0 && t <= window.1 && v.is_some_and(|v| v > 0.0))
                .map(|(&t, v)| (t.powf(r), v.expect("filtered").ln()))
                .unzip();
            ols(&s, &y).ok()
        })
        .collect();
    let eta_low = etas
        .iter()
        .zip(&slopes)
        .filter(|(_, s)| s.is_some_and(|s| s.significantly_positive()))
        .map(|(&e, _)| e)
        .reduce(f64::max);
    let eta_high = etas
        .iter()
        .zip(&slopes)
        .filter(|(&e, s)| s.is_some_and(|s| s.significantly_negative()) && eta_low.is_none_or(|lo| e >= lo))
        .map(|(&e, _)| e)
        .reduce(f64::min);
    Ok(GrowthScan {
        etas: etas.to_vec(),
        r,
        times: times.to_vec(),
        values,
        window,
        slopes,
        eta_low,
        eta_high,
    })
}

/// Scan of the estimated `p`-th moment surface of `trajs`.
pub fn growth_index_scan(trajs: &[Trajectory], p: f64, etas: &[f64], r: f64, agg: Aggregator, window: Option<(f64, f64)>) -> Result<GrowthScan> {
    if !(p >= 1.0) {
        return domain(format!("p must be >= 1, got {p}"));
    }
    let surf = surface(trajs, p, agg)?;
    let means: Vec<Vec<f64>> = surf.iter().map(|row| row.iter().map(|e| e.mean).collect()).collect();
    growth_index_scan_surface(&trajs[0].times(), &trajs[0].grid.centers(), &means, etas, r, window)
}
