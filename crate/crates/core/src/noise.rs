//! Levy jump measures and reproducible space-time noise increments on a grid.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// A point mass `mass` at jump size `z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub z: f64,
    pub mass: f64,
}

/// The jump measure `lambda`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LevyMeasureSpec {
    Atoms { atoms: Vec<Atom> },
    /// Symmetric density `amplitude |z|^{-1-gamma_exp}` on `inner_cut <= |z| <= outer_cut`.
    TruncatedPower {
        gamma_exp: f64,
        inner_cut: f64,
        outer_cut: f64,
        amplitude: f64,
    },
}

/// `int_a^b z^e dz` for `0 < a < b <= inf`.
fn power_integral(e: f64, a: f64, b: f64) -> f64 {
    if (e + 1.0).abs() < 1e-14 {
        return (b / a).ln();
    }
    if b.is_infinite() {
        return if e < -1.0 { -a.powf(e + 1.0) / (e + 1.0) } else { f64::INFINITY };
    }
    (b.powf(e + 1.0) - a.powf(e + 1.0)) / (e + 1.0)
}

impl LevyMeasureSpec {
    pub fn atoms(pairs: &[(f64, f64)]) -> Result<Self> {
        let s = Self::Atoms {
            atoms: pairs.iter().map(|&(z, mass)| Atom { z, mass }).collect(),
        };
        s.validate()?;
        Ok(s)
    }

    /// Unit masses at `+1` and `-1`.
    pub fn symmetric_unit_atoms() -> Self {
        Self::Atoms {
            atoms: vec![Atom { z: 1.0, mass: 1.0 }, Atom { z: -1.0, mass: 1.0 }],
        }
    }

    pub fn truncated_power(gamma_exp: f64, inner_cut: f64, outer_cut: f64, amplitude: f64) -> Result<Self> {
        let s = Self::TruncatedPower {
            gamma_exp,
            inner_cut,
            outer_cut,
            amplitude,
        };
        s.validate()?;
        Ok(s)
    }

    /// Finite, nonzero total mass and well-formed parameters.
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Atoms { atoms } => {
                if atoms.is_empty() {
                    return Err(Error::Config("levy measure has no atoms".into()));
                }
                for a in atoms {
                    if !a.z.is_finite() || !(a.mass >= 0.0) || !a.mass.is_finite() {
                        return Err(Error::Config(format!("invalid atom ({}, {})", a.z, a.mass)));
                    }
                }
            }
            Self::TruncatedPower {
                gamma_exp,
                inner_cut,
                outer_cut,
                amplitude,
            } => {
                if !gamma_exp.is_finite() {
                    return Err(Error::Config(format!("gamma_exp must be finite, got {gamma_exp}")));
                }
                if !(*inner_cut > 0.0 && inner_cut.is_finite()) {
                    return Err(Error::Config(format!("inner_cut must be positive, got {inner_cut}")));
                }
                if !(*outer_cut > *inner_cut) {
                    return Err(Error::Config(format!(
                        "outer_cut must exceed inner_cut, got {outer_cut} <= {inner_cut}"
                    )));
                }
                if !(*amplitude >= 0.0 && amplitude.is_finite()) {
                    return Err(Error::Config(format!("amplitude must be finite and >= 0, got {amplitude}")));
                }
                if outer_cut.is_infinite() && *gamma_exp <= 0.0 {
                    return Err(Error::Config("infinite outer_cut needs gamma_exp > 0 for finite mass".into()));
                }
            }
        }
        if !(self.total_mass() > 0.0) {
            return Err(Error::Config("levy measure must be nonzero".into()));
        }
        Ok(())
    }

    /// Moment conditions for a working exponent `p`.
    pub fn check_moment(&self, p: f64) -> Result<()> {
        let m = self.moment(p);
        if !m.is_finite() {
            return Err(Error::Config(format!("int |z|^{p} lambda(dz) diverges")));
        }
        Ok(())
    }

    /// `int |z|^p lambda(dz)`.
    pub fn moment(&self, p: f64) -> f64 {
        self.restricted_moment(p, 0.0)
    }

    /// `int_{|z| > delta} |z|^p lambda(dz)`.
    pub fn restricted_moment(&self, p: f64, delta: f64) -> f64 {
        match self {
            Self::Atoms { atoms } => atoms
                .iter()
                .filter(|a| a.z.abs() > delta && a.mass > 0.0)
                .map(|a| a.mass * a.z.abs().powf(p))
                .sum(),
            Self::TruncatedPower {
                gamma_exp,
                inner_cut,
                outer_cut,
                amplitude,
            } => {
                let lo = inner_cut.max(delta);
                if lo >= *outer_cut {
                    return 0.0;
                }
                2.0 * amplitude * power_integral(p - 1.0 - gamma_exp, lo, *outer_cut)
            }
        }
    }

    /// `lambda(R)`.
    pub fn total_mass(&self) -> f64 {
        self.moment(0.0)
    }

    /// `lambda([-delta, delta]^c)`.
    pub fn mass_outside(&self, delta: f64) -> f64 {
        self.restricted_moment(0.0, delta)
    }

    /// `int z lambda(dz)`.
    pub fn first_moment(&self) -> f64 {
        match self {
            Self::Atoms { atoms } => atoms.iter().map(|a| a.z * a.mass).sum(),
            Self::TruncatedPower { .. } => 0.0,
        }
    }

    pub fn is_symmetric(&self) -> bool {
        match self {
            Self::Atoms { atoms } => {
                let mut pos: Vec<(f64, f64)> = atoms.iter().filter(|a| a.z > 0.0).map(|a| (a.z, a.mass)).collect();
                let mut neg: Vec<(f64, f64)> = atoms.iter().filter(|a| a.z < 0.0).map(|a| (-a.z, a.mass)).collect();
                let key = |v: &mut Vec<(f64, f64)>| v.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
                key(&mut pos);
                key(&mut neg);
                pos == neg
            }
            Self::TruncatedPower { .. } => true,
        }
    }

    /// `int_{|z| < inner_cut} z^2 lambda(dz)` of the untruncated power law;
    /// the L2 size of the discarded small jumps. Zero for atoms.
    pub fn discarded_small_jump_l2(&self) -> f64 {
        match self {
            Self::Atoms { .. } => 0.0,
            Self::TruncatedPower {
                gamma_exp,
                inner_cut,
                amplitude,
                ..
            } => {
                if *gamma_exp >= 2.0 {
                    f64::INFINITY
                } else {
                    2.0 * amplitude * inner_cut.powf(2.0 - gamma_exp) / (2.0 - gamma_exp)
                }
            }
        }
    }

    /// One jump size from `lambda / lambda(R)`.
    fn sample_jump<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Atoms { atoms } => {
                let total = self.total_mass();
                let mut u = rng.random::<f64>() * total;
                for a in atoms {
                    if u < a.mass {
                        return a.z;
                    }
                    u -= a.mass;
                }
                atoms.iter().rev().find(|a| a.mass > 0.0).map(|a| a.z).unwrap_or(0.0)
            }
            Self::TruncatedPower {
                gamma_exp,
                inner_cut,
                outer_cut,
                ..
            } => {
                let u: f64 = rng.random();
                let (a, b, g) = (*inner_cut, *outer_cut, *gamma_exp);
                let r = if g.abs() < 1e-14 {
                    a * (b / a).powf(u)
                } else {
                    let (ta, tb) = (a.powf(-g), if b.is_infinite() { 0.0 } else { b.powf(-g) });
                    (ta - u * (ta - tb)).powf(-1.0 / g)
                };
                if rng.random::<bool>() {
                    r
                } else {
                    -r
                }
            }
        }
    }
}

/// `lambda([-delta, delta]^c) > 0`, needed by every lower bound that uses
/// only jumps larger than `delta`.
pub fn check_nondegenerate(spec: &LevyMeasureSpec, delta: f64) -> Result<()> {
    if !(spec.mass_outside(delta) > 0.0) {
        return Err(Error::Config(format!("levy measure has no mass outside [-{delta}, {delta}]")));
    }
    Ok(())
}

/// `int |z|^p lambda(dz)`.
pub fn levy_moment(spec: &LevyMeasureSpec, p: f64) -> Result<f64> {
    if !(p >= 0.0) {
        return domain(format!("moment order must be >= 0, got {p}"));
    }
    Ok(spec.moment(p))
}

/// `b = int_{|z| >= 1} z lambda(dz)`.
pub fn drift_b(spec: &LevyMeasureSpec) -> f64 {
    match spec {
        LevyMeasureSpec::Atoms { atoms } => {
            if spec.is_symmetric() {
                return 0.0;
            }
            atoms.iter().filter(|a| a.z.abs() >= 1.0).map(|a| a.z * a.mass).sum()
        }
        LevyMeasureSpec::TruncatedPower { .. } => 0.0,
    }
}

/// Gaussian part is only allowed when `p >= 2` and `d < alpha`.
pub fn check_rho(rho: f64, d: u32, alpha: f64, p: f64) -> Result<()> {
    if !(rho >= 0.0 && rho.is_finite()) {
        return Err(Error::Config(format!("rho must be finite and >= 0, got {rho}")));
    }
    if rho > 0.0 && (p < 2.0 || d as f64 >= alpha) {
        return Err(Error::Hypothesis(format!(
            "rho must be 0 when p < 2 or d >= alpha (p = {p}, d = {d}, alpha = {alpha})"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseGrid {
    pub dt: f64,
    pub dx: f64,
    pub n_t: usize,
    pub n_x: usize,
    pub seed: u64,
    pub replica_index: u64,
}

impl NoiseGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dx > 0.0 && self.dt.is_finite() && self.dx.is_finite()) {
            return Err(Error::Config(format!("dt and dx must be positive, got {} and {}", self.dt, self.dx)));
        }
        if self.n_t == 0 || self.n_x == 0 {
            return Err(Error::Config("noise grid needs n_t, n_x >= 1".into()));
        }
        Ok(())
    }

    pub fn cell_volume(&self) -> f64 {
        self.dt * self.dx
    }
}

/// Words of the ChaCha stream reserved for each cell.
const CELL_STRIDE_BITS: u32 = 24;

/// Generator positioned at the start of `cell`'s block; the key comes from
/// `seed`, the stream from the replica, so cells are independent of order.
struct CellRng {
    rng: ChaCha8Rng,
}

impl CellRng {
    fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng }
    }

    fn at(&mut self, cell: usize) -> &mut ChaCha8Rng {
        self.rng.set_word_pos((cell as u128) << CELL_STRIDE_BITS);
        &mut self.rng
    }
}

/// Stream used for thinning in the tilted mode, disjoint from replica streams.
const TILT_STREAM_FLAG: u64 = 1 << 63;

/// Sampled noise on `n_t x n_x` cells, row-major by time step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncrementField {
    pub grid: NoiseGrid,
    /// Sum of jump sizes per cell.
    pub jump_sum: Vec<f64>,
    /// `dt dx int z lambda(dz)`, the same for every cell.
    pub compensator: f64,
    /// `rho` times a `Normal(0, dt dx)` draw per cell; empty when `rho = 0`.
    pub gaussian: Vec<f64>,
    pub rho: f64,
}

impl IncrementField {
    pub fn index(&self, k: usize, j: usize) -> usize {
        k * self.grid.n_x + j
    }

    /// `Lambda` increments of time step `k`: compensated jumps + `b dt dx` + Gaussian.
    pub fn delta_lambda(&self, k: usize, b: f64) -> Vec<f64> {
        let n = self.grid.n_x;
        let shift = b * self.grid.cell_volume() - self.compensator;
        let row = &self.jump_sum[k * n..(k + 1) * n];
        if self.gaussian.is_empty() {
            row.iter().map(|v| v + shift).collect()
        } else {
            row.iter().zip(&self.gaussian[k * n..(k + 1) * n]).map(|(v, g)| v + shift + g).collect()
        }
    }

    /// Compensated jump increments `jump_sum - compensator` of all cells.
    pub fn compensated(&self) -> impl Iterator<Item = f64> + '_ {
        self.jump_sum.iter().map(move |v| v - self.compensator)
    }

    const MAGIC: &'static [u8; 8] = b"FSHEINC1";

    /// Little-endian dump: magic, header `{n_t, n_x, dt, dx, seed, replica,
    /// compensator, rho}`, then `jump_sum` and (if `rho > 0`) `gaussian`, row-major.
    pub fn write_binary<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let g = &self.grid;
        w.write_all(Self::MAGIC)?;
        w.write_all(&(g.n_t as u64).to_le_bytes())?;
        w.write_all(&(g.n_x as u64).to_le_bytes())?;
        w.write_all(&g.dt.to_le_bytes())?;
        w.write_all(&g.dx.to_le_bytes())?;
        w.write_all(&g.seed.to_le_bytes())?;
        w.write_all(&g.replica_index.to_le_bytes())?;
        w.write_all(&self.compensator.to_le_bytes())?;
        w.write_all(&self.rho.to_le_bytes())?;
        for v in self.jump_sum.iter().chain(&self.gaussian) {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let io = |e: std::io::Error| Error::Config(format!("increment dump: {e}"));
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(io)?;
        if &magic != Self::MAGIC {
            return Err(Error::Config("increment dump: bad magic".into()));
        }
        let mut b = [0u8; 8];
        let mut next = |r: &mut R| -> Result<[u8; 8]> {
            r.read_exact(&mut b).map_err(io)?;
            Ok(b)
        };
        let n_t = u64::from_le_bytes(next(&mut r)?) as usize;
        let n_x = u64::from_le_bytes(next(&mut r)?) as usize;
        let dt = f64::from_le_bytes(next(&mut r)?);
        let dx = f64::from_le_bytes(next(&mut r)?);
        let seed = u64::from_le_bytes(next(&mut r)?);
        let replica_index = u64::from_le_bytes(next(&mut r)?);
        let compensator = f64::from_le_bytes(next(&mut r)?);
        let rho = f64::from_le_bytes(next(&mut r)?);
        let cells = n_t
            .checked_mul(n_x)
            .ok_or_else(|| Error::Config("increment dump: grid too large".into()))?;
        let mut read_vec = |r: &mut R| -> Result<Vec<f64>> {
            (0..cells).map(|_| Ok(f64::from_le_bytes(next(r)?))).collect()
        };
        let jump_sum = read_vec(&mut r)?;
        let gaussian = if rho > 0.0 { read_vec(&mut r)? } else { Vec::new() };
        Ok(Self {
            grid: NoiseGrid {
                dt,
                dx,
                n_t,
                n_x,
                seed,
                replica_index,
            },
            jump_sum,
            compensator,
            gaussian,
            rho,
        })
    }
}

/// Jump sizes of one cell with Poisson mean `mean`.
fn cell_jumps<R: Rng>(spec: &LevyMeasureSpec, pois: Option<&Poisson<f64>>, rng: &mut R, out: &mut Vec<f64>) {
    out.clear();
    let n = match pois {
        Some(p) => p.sample(rng) as usize,
        None => 0,
    };
    for _ in 0..n {
        out.push(spec.sample_jump(rng));
    }
}

fn poisson(mean: f64) -> Result<Option<Poisson<f64>>> {
    if mean == 0.0 {
        return Ok(None);
    }
    Poisson::new(mean)
        .map(Some)
        .map_err(|e| Error::Config(format!("poisson mean {mean}: {e}")))
}

/// Samples every cell of `grid`: `N ~ Poisson(dt dx lambda(R))` jumps with
/// sizes from `lambda / lambda(R)`, and a Gaussian part when `rho > 0`.
/// Fully determined by `(seed, replica_index, cell)`.
pub fn sample_increments(spec: &LevyMeasureSpec, grid: &NoiseGrid, rho: f64) -> Result<IncrementField> {
    spec.validate()?;
    grid.validate()?;
    if !(rho >= 0.0 && rho.is_finite()) {
        return Err(Error::Config(format!("rho must be finite and >= 0, got {rho}")));
    }
    let vol = grid.cell_volume();
    let pois = poisson(vol * spec.total_mass())?;
    let cells = grid.n_t * grid.n_x;
    let mut gen = CellRng::new(grid.seed, grid.replica_index);
    let mut jump_sum = Vec::with_capacity(cells);
    let mut gaussian = Vec::with_capacity(if rho > 0.0 { cells } else { 0 });
    let scale = rho * vol.sqrt();
    let mut buf = Vec::new();
    for cell in 0..cells {
        let rng = gen.at(cell);
        cell_jumps(spec, pois.as_ref(), rng, &mut buf);
        jump_sum.push(buf.iter().sum());
        if rho > 0.0 {
            let g: f64 = StandardNormal.sample(rng);
            gaussian.push(scale * g);
        }
    }
    Ok(IncrementField {
        grid: *grid,
        jump_sum,
        compensator: vol * spec.first_moment(),
        gaussian,
        rho,
    })
}

/// Jumps of `mu_0`: those of the replica's `mu` with `|z| > delta` in cells
/// before the target time, each kept with probability
/// `tilt(t - s, x - y) = q_{t-s}(x-y) / q_{t-s}(0)` evaluated at the cell's
/// left time and centre.
///
/// The last time slab `[t - dt, t)` is excluded, where the ratio is a
/// degenerate point mass on the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TiltedIncrements {
    pub target_step: usize,
    pub target_cell: usize,
    /// Sum of kept jump sizes per cell, rows `0..target_step - 1`.
    pub jump_sum: Vec<f64>,
    /// `nu_0` of each cell: `dt dx lambda(|z| > delta) tilt`.
    pub cell_mass: Vec<f64>,
    /// `nu_0` of the whole window.
    pub total_mass: f64,
}

pub fn sample_tilted<F>(
    spec: &LevyMeasureSpec,
    grid: &NoiseGrid,
    delta: f64,
    target_step: usize,
    target_cell: usize,
    tilt: F,
) -> Result<TiltedIncrements>
where
    F: Fn(f64, f64) -> f64,
{
    spec.validate()?;
    grid.validate()?;
    check_nondegenerate(spec, delta)?;
    if target_step > grid.n_t || target_cell >= grid.n_x {
        return domain(format!(
            "target ({target_step}, {target_cell}) outside the {} x {} grid",
            grid.n_t, grid.n_x
        ));
    }
    let vol = grid.cell_volume();
    let pois = poisson(vol * spec.total_mass())?;
    let big = vol * spec.mass_outside(delta);
    let rows = target_step.saturating_sub(1);
    let n = grid.n_x;
    let mut gen = CellRng::new(grid.seed, grid.replica_index);
    let mut thin = CellRng::new(grid.seed, grid.replica_index | TILT_STREAM_FLAG);
    let mut jump_sum = Vec::with_capacity(rows * n);
    let mut cell_mass = Vec::with_capacity(rows * n);
    let mut buf = Vec::new();
    for k in 0..rows {
        let lag = (target_step - k) as f64 * grid.dt;
        for j in 0..n {
            // periodic distance between cell centres
            let dj = (j as isize - target_cell as isize).rem_euclid(n as isize) as usize;
            let dist = dj.min(n - dj) as f64 * grid.dx;
            let w = tilt(lag, dist).clamp(0.0, 1.0);
            let cell = k * n + j;
            cell_jumps(spec, pois.as_ref(), gen.at(cell), &mut buf);
            let rng = thin.at(cell);
            let mut s = 0.0;
            for &z in &buf {
                let u: f64 = rng.random();
                if z.abs() > delta && u < w {
                    s += z;
                }
            }
            jump_sum.push(s);
            cell_mass.push(big * w);
        }
    }
    let total_mass = cell_mass.iter().sum();
    Ok(TiltedIncrements {
        target_step,
        target_cell,
        jump_sum,
        cell_mass,
        total_mass,
    })
}

/// One intensity level of the compensated-integral monitor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompensatedRatio {
    pub intensity_scale: f64,
    /// Monte Carlo `E |int H d(N - m)|^p`.
    pub lhs: f64,
    pub lhs_se: f64,
    /// `int |H|^p dm / (1 v m(E))^{1 - p/2}`.
    pub rhs: f64,
}

impl CompensatedRatio {
    pub fn ratio(&self) -> f64 {
        self.lhs / self.rhs
    }
}

/// Monitors `E|int H d(N-m)|^p` against `int |H|^p dm / (1 v m(E))^{1-p/2}`
/// for the deterministic test function `H(cell, z) = h_cell z`, with
/// `h_cell` cycling through `[0.5, 1]`, on `cells` cells of unit volume with
/// intensity `scale lambda`. The ratio is recorded, not asserted.
pub fn compensated_integral_monitor(
    spec: &LevyMeasureSpec,
    p: f64,
    scales: &[f64],
    cells: usize,
    samples: usize,
    seed: u64,
) -> Result<Vec<CompensatedRatio>> {
    spec.validate()?;
    if !(p > 1.0 && p <= 2.0) {
        return domain(format!("monitor needs p in (1, 2], got {p}"));
    }
    if samples < 2 || cells == 0 {
        return domain("monitor needs cells >= 1 and samples >= 2");
    }
    let h: Vec<f64> = (0..cells).map(|i| 0.5 + 0.5 * (i % 5) as f64 / 4.0).collect();
    let mut out = Vec::new();
    for (si, &scale) in scales.iter().enumerate() {
        if !(scale > 0.0) {
            return domain(format!("intensity scale must be positive, got {scale}"));
        }
        let pois = poisson(scale * spec.total_mass())?;
        let comp = scale * spec.first_moment();
        let mut gen = CellRng::new(seed, si as u64);
        let mut buf = Vec::new();
        let mut vals = Vec::with_capacity(samples);
        for r in 0..samples {
            let mut acc = 0.0;
            for (c, hc) in h.iter().enumerate() {
                cell_jumps(spec, pois.as_ref(), gen.at(r * cells + c), &mut buf);
                acc += hc * (buf.iter().sum::<f64>() - comp);
            }
            vals.push(acc.abs().powf(p));
        }
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let m_total = scale * spec.total_mass() * cells as f64;
        let rhs = h.iter().map(|hc| hc.powf(p)).sum::<f64>() * scale * spec.moment(p) / m_total.max(1.0).powf(1.0 - p / 2.0);
        out.push(CompensatedRatio {
            intensity_scale: scale,
            lhs: mean,
            lhs_se: (var / n).sqrt(),
            rhs,
        });
    }
    Ok(out)
}
