//! Discrete Picard iteration for the mild equation, with the weighted
//! distance between successive iterates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dkernel::DiscreteKernel;
use super::grid::GridSpec;
use crate::analytics::{beta0, ConstantsConfig, ModelSpec};
use crate::error::{domain, Error, Result};
use crate::noise::IncrementField;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PicardOptions {
    pub n_iter: usize,
    pub beta: f64,
    pub c: f64,
    pub p: f64,
    /// Required reduction per iteration; the contraction argument gives 1/2.
    pub factor: f64,
    /// Standard errors allowed on top of the reduction.
    pub slack_sigmas: f64,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self {
            n_iter: 5,
            beta: 1.0,
            c: 0.0,
            p: 1.0,
            factor: 0.5,
            slack_sigmas: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PicardReport {
    pub beta: f64,
    /// `beta_0` for `(c, p)`, when it could be computed.
    pub beta0: Option<f64>,
    /// `log_distances[n]` is the log of the weighted distance between
    /// iterates `n + 1` and `n`; `-inf` when they coincide. Logs keep the
    /// comparison meaningful when `e^{-beta t}` underflows.
    pub log_distances: Vec<f64>,
    /// Log of the statistical slack of each distance.
    pub log_slacks: Vec<f64>,
    /// Whether the halving was checked (`beta >= beta0`).
    pub checked: bool,
    /// Indices `n` with `d[n] > factor d[n-1] + slack[n]`.
    pub violations: Vec<usize>,
    pub notes: Vec<String>,
}

impl PicardReport {
    pub fn contraction_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn distances(&self) -> Vec<f64> {
        self.log_distances.iter().map(|v| v.exp()).collect()
    }

    /// `d[n] / d[n-1]` for `n >= 1`; NaN where both vanish.
    pub fn ratios(&self) -> Vec<f64> {
        self.log_distances.windows(2).map(|w| (w[1] - w[0]).exp()).collect()
    }
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        m
    } else {
        m + ((a - m).exp() + (b - m).exp()).ln()
    }
}

/// `X^0_k = K^k u_0` for `k = 0..=n_t`, row-major.
fn heat_flow(u0: &[f64], dk: &DiscreteKernel, n_t: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity((n_t + 1) * u0.len());
    let mut x = u0.to_vec();
    out.extend_from_slice(&x);
    for _ in 0..n_t {
        dk.apply(&mut x);
        out.extend_from_slice(&x);
    }
    out
}

/// `X^{n+1}_k = X^0_k + sum_{m<k} K^{k-m} sigma(X^n_m) dLambda_m / dx`.
fn iterate(prev: &[f64], x0: &[f64], dk: &DiscreteKernel, ms: &ModelSpec, noise: &IncrementField) -> Vec<f64> {
    let n = dk.len();
    let n_t = noise.grid.n_t;
    let b = ms.drift();
    let inv_dx = 1.0 / dk.dx;
    let mut out = Vec::with_capacity(x0.len());
    out.extend_from_slice(&x0[..n]);
    let mut s = vec![0.0; n];
    for k in 0..n_t {
        let dl = noise.delta_lambda(k, b);
        for ((sv, &xv), l) in s.iter_mut().zip(&prev[k * n..(k + 1) * n]).zip(&dl) {
            *sv += ms.sigma.eval(xv) * l * inv_dx;
        }
        dk.apply(&mut s);
        out.extend(x0[(k + 1) * n..(k + 2) * n].iter().zip(&s).map(|(a, b)| a + b));
    }
    out
}

/// `(log max weighted distance, log slack)` over all cells.
fn weighted_distance(a: &[Vec<f64>], b: &[Vec<f64>], grid: &GridSpec, opts: &PicardOptions) -> (f64, f64) {
    let n = grid.n_x;
    let xs = grid.centers();
    let r = a.len() as f64;
    let mut best = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for cell in 0..a[0].len() {
        let (k, j) = (cell / n, cell % n);
        let vals: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x[cell] - y[cell]).abs().powf(opts.p)).collect();
        let mean = vals.iter().sum::<f64>() / r;
        if mean == 0.0 {
            continue;
        }
        let log_w = -opts.beta * grid.time(k) + opts.c * xs[j].abs().ln_1p();
        let d = log_w + mean.ln() / opts.p;
        if d > best.0 {
            let se = if a.len() > 1 {
                (vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (r - 1.0) / r).sqrt()
            } else {
                0.0
            };
            let grow = (1.0 + opts.slack_sigmas * se / mean).powf(1.0 / opts.p) - 1.0;
            best = (d, d + grow.ln());
        }
    }
    best
}

/// Runs `n_iter` Picard iterations on every replica's noise and reports the
/// weighted distances `max_{k,j} e^{-beta t_k} (1+|x_j|)^c (mean |X^{n+1} - X^n|^p)^{1/p}`.
/// When `beta >= beta_0` each distance is checked against `factor` times the previous one.
pub fn picard_solve(
    ms: &ModelSpec,
    consts: &ConstantsConfig,
    grid: &GridSpec,
    dk: &DiscreteKernel,
    noises: &[IncrementField],
    opts: &PicardOptions,
) -> Result<PicardReport> {
    grid.validate()?;
    if noises.is_empty() {
        return Err(Error::TooFewReplicas { needed: 1, got: 0 });
    }
    if !(opts.beta > 0.0) || opts.n_iter == 0 {
        return domain("Picard iteration needs beta > 0 and n_iter >= 1");
    }
    if !(opts.c >= 0.0 && opts.c < ms.kp.alpha()) {
        return domain(format!("c must lie in [0, alpha), got {}", opts.c));
    }
    if noises.iter().any(|z| z.grid.n_t != grid.n_t || z.grid.n_x != grid.n_x) {
        return Err(Error::Shape("noise grid does not match the solver grid".into()));
    }
    let mut notes = Vec::new();
    let b0 = match beta0(ms, consts, opts.c, opts.p) {
        Ok(v) => Some(v),
        Err(e) => {
            notes.push(format!("beta0 unavailable, halving not checked: {e}"));
            None
        }
    };
    let checked = b0.is_some_and(|v| opts.beta >= v);
    let x0 = heat_flow(&super::initial_field(ms, grid), dk, grid.n_t);
    let mut current: Vec<Vec<f64>> = noises.iter().map(|_| x0.clone()).collect();
    let mut distances: Vec<f64> = Vec::with_capacity(opts.n_iter);
    let mut slacks = Vec::with_capacity(opts.n_iter);
    let mut violations = Vec::new();
    for n in 0..opts.n_iter {
        let next: Vec<Vec<f64>> = current
            .par_iter()
            .zip(noises)
            .map(|(prev, noise)| iterate(prev, &x0, dk, ms, noise))
            .collect();
        if let Some(bad) = next.iter().flatten().position(|v| !v.is_finite()) {
            let n_cells = x0.len();
            return Err(Error::BlowUp {
                step: (bad % n_cells) / grid.n_x,
                cell: bad % grid.n_x,
                value: f64::INFINITY,
            });
        }
        let (d, slack) = weighted_distance(&next, &current, grid, opts);
        if checked && n > 0 && d > log_add_exp(opts.factor.ln() + distances[n - 1], slack) {
            violations.push(n);
        }
        distances.push(d);
        slacks.push(slack);
        current = next;
    }
    if !violations.is_empty() {
        notes.push(format!(
            "reduction by {} failed at beta = {} for iterations {violations:?}",
            opts.factor, opts.beta
        ));
    }
    Ok(PicardReport {
        beta: opts.beta,
        beta0: b0,
        log_distances: distances,
        log_slacks: slacks,
        checked,
        violations,
        notes,
    })
}
