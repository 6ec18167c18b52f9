use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::grid::GridSpec;
use crate::error::{domain, Result};
use crate::kernel::{profile_sf, tail_constant, KernelParams};
use crate::specfun::hurwitz_zeta;

/// Explicitly summed periodic images stop once a ring carries less mass than this.
const IMAGE_TOL: f64 = 1e-12;
const MAX_EXPLICIT_RINGS: usize = 16;

/// One-step kernel on the periodic grid: cell masses of `q_dt`, with every
/// periodic image folded in, normalised to unit sum.
///
/// `weights[m]` belongs to the displacement `m dx` (mod `2L`), so the image
/// of a unit mass at cell `j` is `weights[(i - j) mod n]` at cell `i`.
#[derive(Clone)]
pub struct DiscreteKernel {
    pub dt: f64,
    pub dx: f64,
    pub weights: Vec<f64>,
    /// Cell masses before wrapping, indexed like `weights`.
    pub direct: Vec<f64>,
    /// Mass that arrived from periodic images.
    pub image_mass: f64,
    /// Sum before normalisation; `1 - raw_sum` is the roundoff and truncation loss.
    pub raw_sum: f64,
    spectrum: Vec<Complex<f64>>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for DiscreteKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DiscreteKernel")
            .field("dt", &self.dt)
            .field("dx", &self.dx)
            .field("n", &self.weights.len())
            .field("image_mass", &self.image_mass)
            .field("raw_sum", &self.raw_sum)
            .finish()
    }
}

/// Extends `masses` to the cells `[(j - 1/2) dx, (j + 1/2) dx]`, `j < count`.
fn extend_masses(kp: &KernelParams, dt: f64, dx: f64, masses: &mut Vec<f64>, count: usize) -> Result<()> {
    let s = dt.powf(1.0 / kp.alpha());
    let edge = |j: usize| profile_sf(kp, (j as f64 + 0.5) * dx / s);
    if masses.is_empty() {
        masses.push((1.0 - 2.0 * edge(0)?).max(0.0));
    }
    let mut sf_prev = edge(masses.len() - 1)?;
    for j in masses.len()..count {
        let sf = edge(j)?;
        masses.push((sf_prev - sf).max(0.0));
        sf_prev = sf;
    }
    Ok(())
}

pub fn build_discrete_kernel(kp: &KernelParams, grid: &GridSpec, dt: f64) -> Result<DiscreteKernel> {
    if kp.d() != 1 {
        return domain("the solver is one-dimensional");
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return domain(format!("dt must be positive, got {dt}"));
    }
    grid.validate()?;
    let n = grid.n_x;
    let dx = grid.dx();
    let half = (n / 2) as isize;
    let offset = |m: usize| -> isize {
        let m = m as isize;
        if m < half {
            m
        } else {
            m - n as isize
        }
    };

    let mut masses = Vec::new();
    extend_masses(kp, dt, dx, &mut masses, n / 2 + 1)?;
    let direct: Vec<f64> = (0..n).map(|m| masses[offset(m).unsigned_abs()]).collect();
    let mut weights = direct.clone();
    let mut image_mass = 0.0;
    let mut rings = 0;
    while rings < MAX_EXPLICIT_RINGS {
        rings += 1;
        extend_masses(kp, dt, dx, &mut masses, rings * n + n / 2 + 1)?;
        let mut ring = 0.0;
        for (m, w) in weights.iter_mut().enumerate() {
            let o = offset(m);
            let k = (rings * n) as isize;
            let v = masses[(k + o).unsigned_abs()] + masses[(k - o).unsigned_abs()];
            *w += v;
            ring += v;
        }
        image_mass += ring;
        if ring < IMAGE_TOL {
            break;
        }
    }
    // remaining rings through the power tail q_dt(y) ~ c dt |y|^{-1-alpha}
    let s_exp = 1.0 + kp.alpha();
    let c = tail_constant(kp) * dt * dx * (n as f64 * dx).powf(-s_exp);
    for (m, w) in weights.iter_mut().enumerate() {
        let r = offset(m) as f64 / n as f64;
        let q0 = (rings + 1) as f64;
        let v = c * (hurwitz_zeta(s_exp, q0 + r)? + hurwitz_zeta(s_exp, q0 - r)?);
        *w += v;
        image_mass += v;
    }

    let raw_sum: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= raw_sum;
    }
    let mut planner = FftPlanner::new();
    let forward = planner.plan_fft_forward(n);
    let inverse = planner.plan_fft_inverse(n);
    let mut spectrum: Vec<Complex<f64>> = weights.iter().map(|&w| Complex::new(w, 0.0)).collect();
    forward.process(&mut spectrum);
    Ok(DiscreteKernel {
        dt,
        dx,
        weights,
        direct,
        image_mass,
        raw_sum,
        spectrum,
        forward,
        inverse,
    })
}

impl DiscreteKernel {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Circular convolution with the weights, in place.
    ///
    /// Preserves the mean up to roundoff. Nonnegative input stays
    /// nonnegative up to FFT roundoff of order `1e-16 max |field|`.
    pub fn apply(&self, field: &mut [f64]) {
        let n = self.weights.len();
        assert_eq!(field.len(), n, "field length must match the kernel");
        let mut buf: Vec<Complex<f64>> = field.iter().map(|&v| Complex::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        for (b, s) in buf.iter_mut().zip(&self.spectrum) {
            *b *= s;
        }
        self.inverse.process(&mut buf);
        let scale = 1.0 / n as f64;
        for (f, b) in field.iter_mut().zip(&buf) {
            *f = b.re * scale;
        }
    }
}

/// `field` convolved with the discrete kernel.
pub fn heat_step(field: &[f64], dk: &DiscreteKernel) -> Vec<f64> {
    let mut out = field.to_vec();
    dk.apply(&mut out);
    out
}
