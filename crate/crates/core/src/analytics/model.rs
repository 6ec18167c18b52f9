//! Model description shared by the bounds, the solver and the CLI.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::KernelParams;
use crate::noise::{check_rho, LevyMeasureSpec};

/// Nonlinearity `sigma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SigmaSpec {
    /// `sigma(x) = kappa x`
    Linear { kappa: f64 },
    /// `sigma(x) = slope x + offset`
    Affine { slope: f64, offset: f64 },
    /// Piecewise linear through `(xs, ys)`, extended linearly past the ends.
    Table { xs: Vec<f64>, ys: Vec<f64> },
}

impl SigmaSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Linear { kappa } if !kappa.is_finite() => Err(Error::Config(format!("sigma kappa must be finite, got {kappa}"))),
            Self::Affine { slope, offset } if !(slope.is_finite() && offset.is_finite()) => {
                Err(Error::Config("sigma slope and offset must be finite".into()))
            }
            Self::Table { xs, ys } => {
                if xs.len() < 2 || xs.len() != ys.len() {
                    return Err(Error::Config("sigma table needs at least two (x, y) pairs of equal length".into()));
                }
                if xs.windows(2).any(|w| !(w[1] > w[0])) || xs.iter().chain(ys).any(|v| !v.is_finite()) {
                    return Err(Error::Config("sigma table xs must be finite and strictly increasing".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Self::Linear { kappa } => kappa * x,
            Self::Affine { slope, offset } => slope * x + offset,
            Self::Table { xs, ys } => {
                let n = xs.len();
                let i = match xs.partition_point(|&v| v <= x) {
                    0 => 0,
                    k if k >= n => n - 2,
                    k => k - 1,
                };
                let s = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]);
                ys[i] + s * (x - xs[i])
            }
        }
    }

    fn table_slopes(xs: &[f64], ys: &[f64]) -> Vec<f64> {
        xs.windows(2).zip(ys.windows(2)).map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0])).collect()
    }

    /// Lipschitz constant `L_sigma`.
    pub fn lip(&self) -> f64 {
        match self {
            Self::Linear { kappa } => kappa.abs(),
            Self::Affine { slope, .. } => slope.abs(),
            Self::Table { xs, ys } => Self::table_slopes(xs, ys).iter().fold(0.0, |m, s| m.max(s.abs())),
        }
    }

    /// `L_{sigma,0} = inf_{w != 0} |sigma(w)| / |w|`.
    pub fn lip0(&self) -> f64 {
        match self {
            Self::Linear { kappa } => kappa.abs(),
            Self::Affine { slope, offset } => {
                if *offset == 0.0 {
                    slope.abs()
                } else {
                    0.0
                }
            }
            Self::Table { xs, ys } => {
                let slopes = Self::table_slopes(xs, ys);
                // sigma(w)/w = s + (sigma(a) - s a)/w is monotone on each piece,
                // so the infimum is at a breakpoint, at 0 or at infinity
                let mut cands = vec![slopes[0].abs(), slopes[slopes.len() - 1].abs()];
                let s0 = self.eval(0.0);
                let probe = 1e-9 * xs.iter().fold(1.0f64, |m, v| m.max(v.abs()));
                for w in [-probe, probe] {
                    cands.push((self.eval(w) / w).abs());
                }
                if s0 != 0.0 {
                    cands.pop();
                    cands.pop();
                }
                for &x in xs {
                    if x != 0.0 {
                        cands.push((self.eval(x) / x).abs());
                    }
                }
                // a sign change away from the origin gives a zero
                for w in xs.windows(2) {
                    let (a, b) = (self.eval(w[0]), self.eval(w[1]));
                    if a * b < 0.0 {
                        cands.push(0.0);
                    }
                }
                cands.into_iter().fold(f64::INFINITY, f64::min)
            }
        }
    }
}

/// Initial condition `u_0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialSpec {
    Constant { value: f64 },
    /// `c0 (1 + |x|)^{-decay}`
    PolyDecay { c0: f64, decay: f64 },
}

impl InitialSpec {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Self::Constant { value } => value,
            Self::PolyDecay { c0, decay } => c0 * (1.0 + x.abs()).powf(-decay),
        }
    }

    /// The decay exponent `c`; zero for a constant.
    pub fn decay_c(&self) -> f64 {
        match *self {
            Self::Constant { .. } => 0.0,
            Self::PolyDecay { decay, .. } => decay,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kp: KernelParams,
    pub rho: f64,
    pub levy: LevyMeasureSpec,
    pub sigma: SigmaSpec,
    pub u0: InitialSpec,
}

impl ModelSpec {
    /// Validates the model for working exponent `p`.
    pub fn validate(&self, p: f64) -> Result<()> {
        let (d, a) = (self.kp.df(), self.kp.alpha());
        self.levy.validate()?;
        self.sigma.validate()?;
        let (lo, hi) = admissible_p_range(&self.kp);
        if !(p >= lo && p < hi) {
            return Err(Error::Config(format!("p must lie in [{lo}, {hi}), got {p}")));
        }
        self.levy.check_moment(p)?;
        check_rho(self.rho, self.kp.d(), a, p)?;
        if let InitialSpec::PolyDecay { c0, decay } = self.u0 {
            if !(decay >= 0.0 && decay < a) {
                return Err(Error::Config(format!("u0 decay must lie in [0, alpha) = [0, {a}), got {decay}")));
            }
            if !(c0 >= 0.0 && c0.is_finite()) {
                return Err(Error::Config(format!("u0 c0 must be finite and >= 0, got {c0}")));
            }
        }
        if let InitialSpec::Constant { value } = self.u0 {
            if !value.is_finite() {
                return Err(Error::Config("u0 value must be finite".into()));
            }
        }
        let _ = d;
        Ok(())
    }

    pub fn lip(&self) -> f64 {
        self.sigma.lip()
    }

    pub fn lip0(&self) -> f64 {
        self.sigma.lip0()
    }

    pub fn drift(&self) -> f64 {
        crate::noise::drift_b(&self.levy)
    }
}

/// `[1, 1 + alpha/d)`, returned as its two ends.
pub fn admissible_p_range(kp: &KernelParams) -> (f64, f64) {
    (1.0, 1.0 + kp.alpha() / kp.df())
}

/// Values of the constants the proofs leave non-explicit. Every report that
/// uses them echoes them as assumptions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstantsConfig {
    /// Maximal-inequality constant of the Gaussian term.
    pub k1: f64,
    /// Constant of the drift term.
    pub k2: f64,
    /// Maximal-inequality constant of the `|z|^p` jump term.
    pub k3: f64,
    /// Constant of the `z^2` jump term, used when `p >= 2`.
    pub k4: f64,
    /// Constant of the compensated-integral lower bound.
    pub k5: f64,
    /// Lower comparison constant `C_{1,g}` of `q` against `g`.
    pub c1_g: f64,
    /// Jumps with `|z| > delta` enter the lower bounds and the renewal weight.
    pub delta: f64,
    /// Additive constant of the renewal inequality.
    pub c3: f64,
}

impl Default for ConstantsConfig {
    fn default() -> Self {
        Self {
            k1: 1.0,
            k2: 1.0,
            k3: 1.0,
            k4: 1.0,
            k5: 1.0,
            c1_g: 1.0,
            delta: 0.5,
            c3: 1.0,
        }
    }
}

impl ConstantsConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in self.named() {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("constants.{name} must be finite and positive, got {v}")));
            }
        }
        Ok(())
    }

    fn named(&self) -> [(&'static str, f64); 8] {
        [
            ("k1", self.k1),
            ("k2", self.k2),
            ("k3", self.k3),
            ("k4", self.k4),
            ("k5", self.k5),
            ("c1_g", self.c1_g),
            ("delta", self.delta),
            ("c3", self.c3),
        ]
    }

    /// `name = value` lines for the constants a report relied on.
    pub fn assumptions(&self, used: &[&str]) -> Vec<String> {
        self.named()
            .iter()
            .filter(|(n, _)| used.contains(n))
            .map(|(n, v)| format!("{n} = {v} (configured, not derived)"))
            .collect()
    }

    /// Assumption lines for every constant.
    pub fn all_assumptions(&self) -> Vec<String> {
        self.assumptions(&self.named().map(|(n, _)| n))
    }
}
