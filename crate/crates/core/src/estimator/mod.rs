//! Monte Carlo moments of simulated trajectories and the fits built on them.

mod fit;
mod renewal_check;
mod scan;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use fit::{ols, SlopeFit};
pub use renewal_check::{calibrate_renewal, renewal_check, RenewalCalibration, RenewalCheck};
pub use scan::{growth_index_scan, growth_index_scan_surface, region_threshold, GrowthScan};

use crate::error::{domain, Error, Result};
use crate::kernel::KernelParams;
use crate::solver::Trajectory;

/// Per-cell aggregation of `|X|^p` over replicas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Aggregator {
    Mean,
    MedianOfMeans { blocks: usize },
}

pub const DEFAULT_MOM_BLOCKS: usize = 16;

impl Aggregator {
    /// Median-of-means for `p > 1.5`, the plain mean otherwise.
    pub fn default_for(p: f64) -> Self {
        if p > 1.5 {
            Self::MedianOfMeans {
                blocks: DEFAULT_MOM_BLOCKS,
            }
        } else {
            Self::Mean
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellEstimate {
    pub mean: f64,
    pub se: f64,
}

fn mean_se(vals: &[f64]) -> (f64, f64) {
    let n = vals.len() as f64;
    let m = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// Aggregates replica values. Median-of-means splits the replicas, in order,
/// into contiguous blocks; its standard error is `sqrt(pi/2)` times the
/// standard error of the block means.
pub fn aggregate(vals: &[f64], agg: Aggregator) -> Result<CellEstimate> {
    if vals.len() < 2 {
        return Err(Error::TooFewReplicas {
            needed: 2,
            got: vals.len(),
        });
    }
    match agg {
        Aggregator::Mean => {
            let (mean, se) = mean_se(vals);
            Ok(CellEstimate { mean, se })
        }
        Aggregator::MedianOfMeans { blocks } => {
            let b = blocks.clamp(2, vals.len());
            let n = vals.len();
            let mut means: Vec<f64> = (0..b)
                .map(|i| {
                    let (lo, hi) = (i * n / b, (i + 1) * n / b);
                    vals[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
                })
                .collect();
            let (_, se_blocks) = mean_se(&means);
            means.sort_by(|a, b| a.partial_cmp(b).expect("finite moments"));
            let mean = if b % 2 == 1 {
                means[b / 2]
            } else {
                0.5 * (means[b / 2 - 1] + means[b / 2])
            };
            Ok(CellEstimate {
                mean,
                se: (std::f64::consts::PI / 2.0).sqrt() * se_blocks,
            })
        }
    }
}

fn check_replicas(trajs: &[Trajectory]) -> Result<()> {
    if trajs.len() < 2 {
        return Err(Error::TooFewReplicas {
            needed: 2,
            got: trajs.len(),
        });
    }
    let first = &trajs[0];
    if trajs.iter().any(|t| t.grid != first.grid || t.steps != first.steps) {
        return Err(Error::Shape("replicas have different grids or saved steps".into()));
    }
    Ok(())
}

fn check_p(kp: &KernelParams, p: f64) -> Result<()> {
    let hi = 1.0 + kp.alpha() / kp.df();
    if !(p >= 1.0 && p < hi) {
        return domain(format!("p must lie in [1, {hi}), got {p}"));
    }
    Ok(())
}

/// Estimates of `E|X(t_row, x_j)|^p` for the requested cells.
pub fn moment_estimate(trajs: &[Trajectory], kp: &KernelParams, p: f64, row: usize, cells: &[usize], agg: Aggregator) -> Result<Vec<CellEstimate>> {
    check_replicas(trajs)?;
    check_p(kp, p)?;
    let (rows, n) = (trajs[0].n_rows(), trajs[0].grid.n_x);
    if row >= rows || cells.iter().any(|&j| j >= n) {
        return domain(format!("row {row} or a cell index is outside the {rows} x {n} trajectory"));
    }
    cells
        .iter()
        .map(|&j| {
            let vals: Vec<f64> = trajs.iter().map(|t| t.row(row)[j].abs().powf(p)).collect();
            aggregate(&vals, agg)
        })
        .collect()
}

/// All cells of all saved rows, `[row][cell]`, without the range check on `p`.
fn surface(trajs: &[Trajectory], p: f64, agg: Aggregator) -> Result<Vec<Vec<CellEstimate>>> {
    check_replicas(trajs)?;
    let (rows, n) = (trajs[0].n_rows(), trajs[0].grid.n_x);
    (0..rows)
        .into_par_iter()
        .map(|r| {
            (0..n)
                .map(|j| {
                    let vals: Vec<f64> = trajs.iter().map(|t| t.row(r)[j].abs().powf(p)).collect();
                    aggregate(&vals, agg)
                })
                .collect()
        })
        .collect()
}

/// Per-time spatial extrema over grid cells of the estimated `p`-th moment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSeries {
    pub p: f64,
    pub replicas: usize,
    pub aggregator: Aggregator,
    pub times: Vec<f64>,
    pub sup_mean: Vec<f64>,
    pub sup_se: Vec<f64>,
    pub inf_mean: Vec<f64>,
    pub inf_se: Vec<f64>,
    /// `p < 1 + alpha/d`; above it the moments are infinite and no estimate converges.
    pub certified: bool,
}

impl MomentSeries {
    /// Indices of times in `[lo, hi]`.
    pub fn window(&self, lo: f64, hi: f64) -> Vec<usize> {
        (0..self.times.len()).filter(|&i| self.times[i] >= lo && self.times[i] <= hi).collect()
    }
}

/// Sup and inf over cells of the moment surface at every saved time. Any
/// `p >= 1` is accepted; `certified` is false outside `[1, 1 + alpha/d)`.
pub fn moment_series(trajs: &[Trajectory], kp: &KernelParams, p: f64, agg: Aggregator) -> Result<MomentSeries> {
    if !(p >= 1.0) {
        return domain(format!("p must be >= 1, got {p}"));
    }
    let surf = surface(trajs, p, agg)?;
    let mut s = MomentSeries {
        p,
        replicas: trajs.len(),
        aggregator: agg,
        times: trajs[0].times(),
        sup_mean: Vec::new(),
        sup_se: Vec::new(),
        inf_mean: Vec::new(),
        inf_se: Vec::new(),
        certified: check_p(kp, p).is_ok(),
    };
    for row in &surf {
        let hi = row.iter().max_by(|a, b| a.mean.total_cmp(&b.mean)).expect("n_x >= 2");
        let lo = row.iter().min_by(|a, b| a.mean.total_cmp(&b.mean)).expect("n_x >= 2");
        s.sup_mean.push(hi.mean);
        s.sup_se.push(hi.se);
        s.inf_mean.push(lo.mean);
        s.inf_se.push(lo.se);
    }
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovFit {
    /// Slope of `log sup_x` against `t`.
    pub upper: SlopeFit,
    /// Slope of `log inf_x` against `t`.
    pub lower: SlopeFit,
}

/// Least-squares Lyapunov slopes over the times in `[lo, hi]`.
pub fn lyapunov_fit(series: &MomentSeries, lo: f64, hi: f64) -> Result<LyapunovFit> {
    let idx = series.window(lo, hi);
    if idx.len() < 5 {
        return domain(format!("fit window [{lo}, {hi}] holds {} times, need 5", idx.len()));
    }
    for &i in &idx {
        for v in [series.sup_mean[i], series.inf_mean[i]] {
            if !(v > 0.0) {
                return Err(Error::NonPositiveMoment { index: i, value: v });
            }
        }
    }
    let ts: Vec<f64> = idx.iter().map(|&i| series.times[i]).collect();
    let up: Vec<f64> = idx.iter().map(|&i| series.sup_mean[i].ln()).collect();
    let dn: Vec<f64> = idx.iter().map(|&i| series.inf_mean[i].ln()).collect();
    Ok(LyapunovFit {
        upper: ols(&ts, &up)?,
        lower: ols(&ts, &dn)?,
    })
}

/// Slope of `log E|X(t_row, x)|^p` against `log(1 + |x|)` over cells with
/// `|x|` in `[x_lo, x_hi]`.
pub fn spatial_tail_slope(trajs: &[Trajectory], kp: &KernelParams, p: f64, row: usize, x_lo: f64, x_hi: f64, agg: Aggregator) -> Result<SlopeFit> {
    check_replicas(trajs)?;
    let xs = trajs[0].grid.centers();
    let cells: Vec<usize> = (0..xs.len()).filter(|&j| xs[j].abs() >= x_lo && xs[j].abs() <= x_hi).collect();
    let est = moment_estimate(trajs, kp, p, row, &cells, agg)?;
    let mut lx = Vec::with_capacity(cells.len());
    let mut ly = Vec::with_capacity(cells.len());
    for (&j, e) in cells.iter().zip(&est) {
        if !(e.mean > 0.0) {
            return Err(Error::NonPositiveMoment { index: j, value: e.mean });
        }
        lx.push(xs[j].abs().ln_1p());
        ly.push(e.mean.ln());
    }
    ols(&lx, &ly)
}

#[cfg(test)]
mod tests;
