//! Experiment configuration: a TOML file with the sections `model`, `levy`,
//! `grid`, `run`, `constants`, `renewal` and `lemmas`. Every key is optional
//! and falls back to the documented default.

use std::path::Path;

use fshe::analytics::{ConstantsConfig, InitialSpec, ModelSpec, SigmaSpec};
use fshe::estimator::{Aggregator, DEFAULT_MOM_BLOCKS};
use fshe::kernel::{KernelParams, LemmaGrid};
use fshe::noise::LevyMeasureSpec;
use fshe::solver::{GridSpec, SimOptions, BLOWUP_THRESHOLD};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub d: u32,
    pub alpha: f64,
    pub rho: f64,
    pub sigma: SigmaSpec,
    pub u0: InitialSpec,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            d: 1,
            alpha: 1.5,
            rho: 0.0,
            sigma: SigmaSpec::Linear { kappa: 1.0 },
            u0: InitialSpec::Constant { value: 1.0 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub half_width: f64,
    pub n_x: usize,
    pub horizon: f64,
    pub n_t: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        let g = GridSpec::default();
        Self {
            half_width: g.half_width,
            n_x: g.n_x,
            horizon: g.horizon,
            n_t: g.n_t,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregatorChoice {
    /// Median-of-means for `p > 1.5`, the plain mean otherwise.
    Auto,
    Mean,
    MedianOfMeans,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub p: Vec<f64>,
    pub replicas: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    pub aggregator: AggregatorChoice,
    pub mom_blocks: usize,
    pub save_every: usize,
    pub blowup_threshold: f64,
    /// Exponent of the spatial weight `(1 + |x|)^c` in `beta_0`.
    pub weight_c: f64,
    /// Time window of the Lyapunov and scan fits; last half when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_window: Option<[f64; 2]>,
    pub etas: Vec<f64>,
    /// Exponent `r` of the growth-scan region `|x| >= e^{eta t^r} - 1`.
    pub scan_r: f64,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            p: vec![2.0],
            replicas: 100,
            seed: 0,
            output_dir: None,
            aggregator: AggregatorChoice::Auto,
            mom_blocks: DEFAULT_MOM_BLOCKS,
            save_every: 1,
            blowup_threshold: BLOWUP_THRESHOLD,
            weight_c: 0.0,
            fit_window: None,
            etas: (0..=10).map(|i| i as f64 / 10.0).collect(),
            scan_r: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenewalSection {
    /// Additive constant; `constants.c3` when absent (or calibrated from a series).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c3: Option<f64>,
    /// Weight multiplier; 1 when absent (or calibrated from a series).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c4: Option<f64>,
    /// Moment order of the weight; `run.p[0]` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    pub eps: f64,
    pub dt: f64,
    /// Solve horizon; `grid.horizon` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
}

impl Default for RenewalSection {
    fn default() -> Self {
        Self {
            c3: None,
            c4: None,
            p: None,
            eps: 1.0,
            dt: 1e-3,
            horizon: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default = "LevyMeasureSpec::symmetric_unit_atoms")]
    pub levy: LevyMeasureSpec,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub constants: ConstantsConfig,
    #[serde(default)]
    pub renewal: RenewalSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lemmas: Option<LemmaGrid>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: ModelSection::default(),
            levy: LevyMeasureSpec::symmetric_unit_atoms(),
            grid: GridSection::default(),
            run: RunSection::default(),
            constants: ConstantsConfig::default(),
            renewal: RenewalSection::default(),
            lemmas: None,
        }
    }
}

fn invalid(key: &str, e: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("{key}: {e}"))
}

impl ExperimentConfig {
    /// Parses TOML, reporting the first offending key path.
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let de = toml::Deserializer::parse(text).map_err(|e| CliError::Validation(e.to_string()))?;
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            invalid(&path, e.into_inner().message())
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    #[cfg(test)]
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let json = crate::output::canonical_json(self);
        Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn kernel(&self) -> Result<KernelParams, CliError> {
        KernelParams::new(self.model.d, self.model.alpha).map_err(|e| invalid("model", e))
    }

    pub fn model_spec(&self) -> Result<ModelSpec, CliError> {
        Ok(ModelSpec {
            kp: self.kernel()?,
            rho: self.model.rho,
            levy: self.levy.clone(),
            sigma: self.model.sigma.clone(),
            u0: self.model.u0,
        })
    }

    pub fn grid_spec(&self) -> Result<GridSpec, CliError> {
        let g = GridSpec {
            half_width: self.grid.half_width,
            n_x: self.grid.n_x,
            horizon: self.grid.horizon,
            n_t: self.grid.n_t,
        };
        g.validate().map_err(|e| invalid("grid", e))?;
        Ok(g)
    }

    pub fn sim_options(&self) -> SimOptions {
        SimOptions {
            blowup_threshold: self.run.blowup_threshold,
            save_every: self.run.save_every,
        }
    }

    pub fn aggregator(&self, p: f64) -> Aggregator {
        match self.run.aggregator {
            AggregatorChoice::Auto => match Aggregator::default_for(p) {
                Aggregator::MedianOfMeans { .. } => Aggregator::MedianOfMeans {
                    blocks: self.run.mom_blocks,
                },
                a => a,
            },
            AggregatorChoice::Mean => Aggregator::Mean,
            AggregatorChoice::MedianOfMeans => Aggregator::MedianOfMeans {
                blocks: self.run.mom_blocks,
            },
        }
    }

    /// Validates everything the simulation subcommands need.
    pub fn validate(&self) -> Result<(), CliError> {
        let ms = self.model_spec()?;
        if self.model.d != 1 {
            return Err(invalid("model.d", "the solver is one-dimensional"));
        }
        self.grid_spec()?;
        self.constants.validate().map_err(|e| invalid("constants", e))?;
        if self.run.p.is_empty() {
            return Err(invalid("run.p", "at least one moment order is needed"));
        }
        for &p in &self.run.p {
            ms.validate(p).map_err(|e| invalid("run.p", e))?;
        }
        if self.run.replicas < 2 {
            return Err(invalid("run.replicas", "at least two replicas are needed"));
        }
        if self.run.mom_blocks < 1 {
            return Err(invalid("run.mom_blocks", "at least one block"));
        }
        if self.run.save_every < 1 {
            return Err(invalid("run.save_every", "must be at least 1"));
        }
        if !(self.run.blowup_threshold > 0.0) {
            return Err(invalid("run.blowup_threshold", "must be positive"));
        }
        if let Some([lo, hi]) = self.run.fit_window {
            if !(lo < hi) {
                return Err(invalid("run.fit_window", "needs lo < hi"));
            }
        }
        Ok(())
    }

    /// `[lo, hi]` of the fits.
    pub fn fit_window(&self) -> (f64, f64) {
        match self.run.fit_window {
            Some([lo, hi]) => (lo, hi),
            None => (0.5 * self.grid.horizon, self.grid.horizon),
        }
    }

    pub fn lemma_grid(&self) -> LemmaGrid {
        self.lemmas.clone().unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = ExperimentConfig::from_toml("").unwrap();
        assert_eq!(c, ExperimentConfig::default());
        c.validate().unwrap();
    }

    #[test]
    fn roundtrip_is_lossless() {
        let text = r#"
[model]
alpha = 1.2
sigma = { kind = "affine", slope = 0.5, offset = 0.25 }
u0 = { kind = "poly_decay", c0 = 2.0, decay = 0.3 }

[levy]
kind = "atoms"
atoms = [{ z = 1.0, mass = 0.5 }, { z = -2.0, mass = 0.25 }]

[run]
p = [1.2, 1.5]
fit_window = [0.25, 0.75]
output_dir = "out"

[constants]
k3 = 2.0
"#;
        let c = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(c.model.alpha, 1.2);
        assert_eq!(c.run.fit_window, Some([0.25, 0.75]));
        let back = ExperimentConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
    }

    #[test]
    fn unknown_key_names_its_path() {
        let e = ExperimentConfig::from_toml("[model]\nalpah = 1.0\n").unwrap_err();
        assert!(matches!(&e, CliError::Validation(m) if m.starts_with("model")), "{e}");
        let e = ExperimentConfig::from_toml("[run]\nseed = \"x\"\n").unwrap_err();
        assert!(matches!(&e, CliError::Validation(m) if m.starts_with("run.seed")), "{e}");
    }

    #[test]
    fn validation_rejects_bad_p() {
        let mut c = ExperimentConfig::default();
        c.run.p = vec![3.0];
        assert!(matches!(c.validate(), Err(CliError::Validation(m)) if m.starts_with("run.p")));
    }

    #[test]
    fn hash_tracks_content() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        b.run.seed = 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn auto_aggregator_follows_p() {
        let c = ExperimentConfig::default();
        assert_eq!(c.aggregator(1.2), Aggregator::Mean);
        assert_eq!(c.aggregator(2.0), Aggregator::MedianOfMeans { blocks: 16 });
    }
}
