//! Semigroup-Euler scheme for the mild equation on a periodic 1-d grid.

mod dkernel;
mod grid;
mod picard;

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use dkernel::{build_discrete_kernel, heat_step, DiscreteKernel};
pub use grid::GridSpec;
pub use picard::{picard_solve, PicardOptions, PicardReport};

use crate::analytics::ModelSpec;
use crate::error::{domain, Error, Result};
use crate::noise::{sample_increments, IncrementField};

/// Default blow-up threshold on `|X|`.
pub const BLOWUP_THRESHOLD: f64 = 1e12;

/// `u_0` at the cell centres.
pub fn initial_field(ms: &ModelSpec, grid: &GridSpec) -> Vec<f64> {
    grid.centers().into_iter().map(|x| ms.u0.eval(x)).collect()
}

/// `X_{k+1} = K (X_k + sigma(X_k) dLambda_k / dx)`, with `dLambda_k` the
/// increments of time step `k` (compensated jumps, drift `b dt dx`, Gaussian).
pub fn mild_step(x: &[f64], dk: &DiscreteKernel, ms: &ModelSpec, incr: &IncrementField, k: usize, threshold: f64) -> Result<Vec<f64>> {
    let n = dk.len();
    if x.len() != n || incr.grid.n_x != n {
        return Err(Error::Shape(format!(
            "field has {} cells, kernel {n}, increments {}",
            x.len(),
            incr.grid.n_x
        )));
    }
    if k >= incr.grid.n_t {
        return domain(format!("time step {k} outside the {} sampled steps", incr.grid.n_t));
    }
    let dl = incr.delta_lambda(k, ms.drift());
    let inv_dx = 1.0 / dk.dx;
    let mut next: Vec<f64> = x.iter().zip(&dl).map(|(&v, &l)| v + ms.sigma.eval(v) * l * inv_dx).collect();
    dk.apply(&mut next);
    check_blowup(&next, k + 1, threshold)?;
    Ok(next)
}

fn check_blowup(x: &[f64], step: usize, threshold: f64) -> Result<()> {
    match x.iter().position(|v| !(v.abs() <= threshold)) {
        Some(cell) => Err(Error::BlowUp {
            step,
            cell,
            value: x[cell],
        }),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    pub blowup_threshold: f64,
    /// Keep every `save_every`-th time row (row 0 and the last row are always kept).
    pub save_every: usize,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            blowup_threshold: BLOWUP_THRESHOLD,
            save_every: 1,
        }
    }
}

/// Saved rows of one replica.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub grid: GridSpec,
    pub seed: u64,
    pub replica: u64,
    /// Time-step index of each saved row.
    pub steps: Vec<usize>,
    /// Row-major `steps.len() x n_x`.
    pub fields: Vec<f64>,
}

impl Trajectory {
    pub fn row(&self, r: usize) -> &[f64] {
        let n = self.grid.n_x;
        &self.fields[r * n..(r + 1) * n]
    }

    pub fn times(&self) -> Vec<f64> {
        self.steps.iter().map(|&k| self.grid.time(k)).collect()
    }

    pub fn n_rows(&self) -> usize {
        self.steps.len()
    }

    /// `t,x,X` rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,x,X")?;
        let xs = self.grid.centers();
        for (r, &k) in self.steps.iter().enumerate() {
            let t = self.grid.time(k);
            for (x, v) in xs.iter().zip(self.row(r)) {
                writeln!(w, "{t:.16e},{x:.16e},{v:.16e}")?;
            }
        }
        Ok(())
    }

    const MAGIC: &'static [u8; 8] = b"FSHETRJ1";

    /// Little-endian dump: magic, rows, n_x, dt, dx, seed, replica, model
    /// hash, then the saved rows.
    pub fn write_binary<W: Write>(&self, mut w: W, model_hash: u64) -> std::io::Result<()> {
        w.write_all(Self::MAGIC)?;
        w.write_all(&(self.steps.len() as u64).to_le_bytes())?;
        w.write_all(&(self.grid.n_x as u64).to_le_bytes())?;
        w.write_all(&self.grid.dt().to_le_bytes())?;
        w.write_all(&self.grid.dx().to_le_bytes())?;
        w.write_all(&self.seed.to_le_bytes())?;
        w.write_all(&self.replica.to_le_bytes())?;
        w.write_all(&model_hash.to_le_bytes())?;
        for &k in &self.steps {
            w.write_all(&(k as u64).to_le_bytes())?;
        }
        for v in &self.fields {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }
}

/// Advances `u_0` through all `n_t` steps with the given noise.
pub fn simulate_with_noise(ms: &ModelSpec, grid: &GridSpec, dk: &DiscreteKernel, noise: &IncrementField, opts: &SimOptions) -> Result<Trajectory> {
    grid.validate()?;
    if noise.grid.n_t != grid.n_t || noise.grid.n_x != grid.n_x {
        return Err(Error::Shape("noise grid does not match the solver grid".into()));
    }
    if (dk.dt - grid.dt()).abs() > 1e-12 * grid.dt() {
        return Err(Error::Shape(format!("kernel step {} differs from grid step {}", dk.dt, grid.dt())));
    }
    let every = opts.save_every.max(1);
    let mut x = initial_field(ms, grid);
    let mut steps = vec![0];
    let mut fields = x.clone();
    for k in 0..grid.n_t {
        x = mild_step(&x, dk, ms, noise, k, opts.blowup_threshold)?;
        if (k + 1) % every == 0 || k + 1 == grid.n_t {
            steps.push(k + 1);
            fields.extend_from_slice(&x);
        }
    }
    Ok(Trajectory {
        grid: *grid,
        seed: noise.grid.seed,
        replica: noise.grid.replica_index,
        steps,
        fields,
    })
}

/// One replica: samples its noise from `(seed, replica)` and advances it.
pub fn simulate(ms: &ModelSpec, grid: &GridSpec, dk: &DiscreteKernel, seed: u64, replica: u64, opts: &SimOptions) -> Result<Trajectory> {
    let noise = sample_increments(&ms.levy, &grid.noise_grid(seed, replica), ms.rho)?;
    simulate_with_noise(ms, grid, dk, &noise, opts)
}

/// Replicas `0..replicas`, run concurrently and returned in replica order.
pub fn simulate_replicas(ms: &ModelSpec, grid: &GridSpec, dk: &DiscreteKernel, seed: u64, replicas: usize, opts: &SimOptions) -> Result<Vec<Trajectory>> {
    (0..replicas as u64)
        .into_par_iter()
        .map(|r| simulate(ms, grid, dk, seed, r, opts))
        .collect()
}

#[cfg(test)]
mod tests;
