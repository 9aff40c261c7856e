//! TOML experiment and audit configurations.
//!
//! ```toml
//! id = "gmm-corrupt"
//! data = "corrupt rate=0.05 base=(mixture k=2 w=0.5,0.5 (gaussian d=1 mean=-8.0 var=1.0) (gaussian d=1 mean=8.0 var=1.0)) noise=(uniform d=1 low=-50.0 high=50.0)"
//! trials = 100
//! seed = 1
//! out = "gmm.csv"
//!
//! [grid]
//! half_width = 10.0
//! mean_step = 0.25
//! logvar_min = -1.5
//! logvar_max = 1.5
//! logvar_step = 0.3
//!
//! [decoder]
//! kind = "mixture"        # or "gaussian", "fixed"
//! radius = 1
//! sample_size = 40
//! k = 2
//! lift_alpha = 0.5
//! lift_beta = 0.2
//!
//! [params]
//! mode = "desk"           # or "paper"
//! alpha = 0.3
//! beta = 0.1
//! epsilon = 20.0
//! delta = 0.25
//!
//! [judge]
//! method = "mc"           # or "quadrature" (d = 1 only)
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::{HarnessError, Result};
use crate::decode::{FixedDecoder, GaussianDecoder, LiftMode, LiftParams, LiftedDecoder, StableListDecoder};
use crate::distributions::{parse_spec, CandidateKey, DistributionSpec, ParameterGrid};
use crate::reduction::{derive_params, desk_params, DeskOverrides, Mode, ReductionParams};

fn config_err<E: std::fmt::Display>(what: &str) -> impl FnOnce(E) -> HarnessError + '_ {
    move |e| HarnessError::Config(format!("{what}: {e}"))
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub half_width: f64,
    pub mean_step: f64,
    pub logvar_min: f64,
    pub logvar_max: f64,
    pub logvar_step: f64,
    #[serde(default = "one")]
    pub dim: usize,
}

fn one() -> usize {
    1
}

fn default_stability() -> f64 {
    0.91
}

fn default_grid_alpha() -> f64 {
    0.1
}

fn default_budget() -> u64 {
    2000
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
pub enum LiftModeConfig {
    Product,
    #[default]
    Partition,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DecoderConfig {
    Gaussian {
        radius: u32,
        sample_size: usize,
        #[serde(default = "default_stability")]
        stability: f64,
        #[serde(default = "default_grid_alpha")]
        alpha: f64,
    },
    Mixture {
        radius: u32,
        sample_size: usize,
        #[serde(default = "default_stability")]
        stability: f64,
        #[serde(default = "default_grid_alpha")]
        alpha: f64,
        k: usize,
        lift_alpha: f64,
        lift_beta: f64,
        #[serde(default)]
        lift_mode: LiftModeConfig,
        #[serde(default = "default_budget")]
        subset_budget: u64,
        #[serde(default)]
        random_subsets: usize,
    },
    Fixed {
        keys: Vec<String>,
        sample_size: usize,
    },
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    #[serde(default = "desk")]
    pub mode: String,
    pub alpha: f64,
    pub beta: f64,
    pub epsilon: f64,
    pub delta: f64,
    /// Defaults to the decoder's C.
    pub c: Option<f64>,
    pub lists: Option<usize>,
    pub accept_fraction: Option<f64>,
    pub beta_prime: Option<f64>,
    pub mde_samples: Option<usize>,
    pub mc_samples: Option<usize>,
    pub tv_abs_tol: Option<f64>,
}

fn desk() -> String {
    "desk".into()
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum JudgeMethod {
    Quadrature,
    Mc,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct JudgeConfig {
    /// Defaults to quadrature in one dimension, Monte Carlo otherwise.
    pub method: Option<JudgeMethod>,
    #[serde(default = "default_abs_tol")]
    pub abs_tol: f64,
    #[serde(default = "default_judge_mc")]
    pub mc_samples: usize,
}

fn default_abs_tol() -> f64 {
    1e-4
}

fn default_judge_mc() -> usize {
    20_000
}

impl Default for JudgeConfig {
    fn default() -> Self {
        JudgeConfig { method: None, abs_tol: default_abs_tol(), mc_samples: default_judge_mc() }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub id: String,
    pub data: String,
    pub trials: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    /// Stand-in for OPT in the bound; defaults to the contamination rate.
    pub opt_proxy: Option<f64>,
    /// Off by default so reruns produce identical files.
    #[serde(default)]
    pub record_runtime: bool,
    pub grid: GridConfig,
    pub decoder: DecoderConfig,
    pub params: ParamsConfig,
    #[serde(default)]
    pub judge: JudgeConfig,
}

/// A validated configuration, ready to run.
pub struct Experiment {
    pub id: String,
    pub data: DistributionSpec,
    pub decoder: Box<dyn StableListDecoder>,
    pub params: ReductionParams,
    pub trials: usize,
    pub seed: u64,
    pub opt_proxy: f64,
    pub record_runtime: bool,
    pub judge: JudgeConfig,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(config_err("experiment config"))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn build(&self) -> Result<Experiment> {
        if self.trials == 0 {
            return Err(HarnessError::Config("trials must be >= 1".into()));
        }
        let data = parse_spec(&self.data).map_err(config_err("data"))?;
        let g = &self.grid;
        let grid = ParameterGrid::new(g.half_width, g.mean_step, g.logvar_min, g.logvar_max, g.logvar_step, g.dim)
            .map_err(config_err("grid"))?;
        if data.dim() != grid.dim() {
            return Err(HarnessError::Config(format!("data has d = {}, grid has d = {}", data.dim(), grid.dim())));
        }
        let decoder = build_decoder(&self.decoder, grid)?;
        let params = build_params(&self.params, decoder.as_ref())?;
        let opt_proxy = match (self.opt_proxy, &data) {
            (Some(v), _) => v,
            (None, DistributionSpec::Corrupted(c)) => c.rate(),
            (None, _) => 0.0,
        };
        if !(0.0..=1.0).contains(&opt_proxy) {
            return Err(HarnessError::Config(format!("opt_proxy {opt_proxy} outside [0, 1]")));
        }
        if matches!(self.judge.method, Some(JudgeMethod::Quadrature)) && data.dim() != 1 {
            return Err(HarnessError::Config("quadrature judge needs d = 1".into()));
        }
        Ok(Experiment {
            id: self.id.clone(),
            data,
            decoder,
            params,
            trials: self.trials,
            seed: self.seed,
            opt_proxy,
            record_runtime: self.record_runtime,
            judge: self.judge.clone(),
        })
    }
}

pub fn build_decoder(cfg: &DecoderConfig, grid: ParameterGrid) -> Result<Box<dyn StableListDecoder>> {
    let dec: Box<dyn StableListDecoder> = match cfg {
        DecoderConfig::Gaussian { radius, sample_size, stability, alpha } => Box::new(
            GaussianDecoder::new(grid, *radius, *sample_size, *stability, *alpha).map_err(config_err("decoder"))?,
        ),
        DecoderConfig::Mixture {
            radius,
            sample_size,
            stability,
            alpha,
            k,
            lift_alpha,
            lift_beta,
            lift_mode,
            subset_budget,
            random_subsets,
        } => {
            let base = GaussianDecoder::new(grid, *radius, *sample_size, *stability, *alpha)
                .map_err(config_err("decoder"))?;
            let mode = match lift_mode {
                LiftModeConfig::Product => LiftMode::Product,
                LiftModeConfig::Partition => LiftMode::Partition,
            };
            let mut lp = LiftParams::new(*k, *lift_alpha, *lift_beta, mode);
            lp.subset_budget = *subset_budget;
            lp.random_subsets = *random_subsets;
            Box::new(LiftedDecoder::new(base, lp).map_err(config_err("decoder"))?)
        }
        DecoderConfig::Fixed { keys, sample_size } => {
            let keys = keys
                .iter()
                .map(|k| k.parse::<CandidateKey>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(config_err("decoder keys"))?;
            Box::new(FixedDecoder::new(grid, keys, *sample_size).map_err(config_err("decoder"))?)
        }
    };
    Ok(dec)
}

pub fn build_params(cfg: &ParamsConfig, decoder: &dyn StableListDecoder) -> Result<ReductionParams> {
    let mode: Mode = cfg.mode.parse().map_err(config_err("mode"))?;
    let contract = decoder.contract();
    let c = cfg.c.unwrap_or(contract.c);
    let mut p = match mode {
        Mode::PaperFaithful => derive_params(cfg.alpha, cfg.beta, cfg.epsilon, cfg.delta, c, contract),
        Mode::DeskScale => {
            let d = DeskOverrides::default();
            let o = DeskOverrides {
                lists: cfg.lists.unwrap_or(d.lists),
                accept_fraction: cfg.accept_fraction.unwrap_or(d.accept_fraction),
                beta_prime: cfg.beta_prime,
                mde_samples: cfg.mde_samples,
            };
            desk_params(cfg.alpha, cfg.beta, cfg.epsilon, cfg.delta, c, contract, &o)
        }
    }
    .map_err(config_err("params"))?;
    if mode == Mode::PaperFaithful && (cfg.lists.is_some() || cfg.accept_fraction.is_some()) {
        return Err(HarnessError::Config("lists and accept_fraction are desk-mode overrides".into()));
    }
    if let Some(mc) = cfg.mc_samples {
        if mc == 0 {
            return Err(HarnessError::Config("mc_samples must be >= 1".into()));
        }
        p.mc_samples = mc;
    }
    if let Some(t) = cfg.tv_abs_tol {
        p.tv_abs_tol = t;
    }
    Ok(p)
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum AuditKind {
    /// A count query released with truncated Laplace noise.
    TlapRelease,
    /// The same count with no noise; a control that must fail.
    ExactRelease,
    /// The binary search and choosing mechanism on eight synthetic lists.
    Pipeline,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default = "default_pipeline_alpha")]
    pub alpha: f64,
    #[serde(default = "default_pipeline_beta")]
    pub beta: f64,
    #[serde(default = "default_pipeline_c")]
    pub c: f64,
}

fn default_pipeline_alpha() -> f64 {
    0.3
}

fn default_pipeline_beta() -> f64 {
    0.1
}

fn default_pipeline_c() -> f64 {
    3.0
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig { alpha: default_pipeline_alpha(), beta: default_pipeline_beta(), c: default_pipeline_c() }
    }
}

fn default_confidence() -> f64 {
    0.95
}

fn default_count() -> u64 {
    10
}

fn default_bins() -> usize {
    64
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AuditConfig {
    pub id: String,
    pub kind: AuditKind,
    pub trials: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub epsilon: f64,
    pub delta: f64,
    #[serde(default = "default_confidence")]
    pub confidence: f64,
    /// The count on one neighbor; the other holds `count + 1`.
    #[serde(default = "default_count")]
    pub count: u64,
    /// Intervals for real-valued releases.
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default)]
    pub pipeline: PipelineConfig,
}

impl AuditConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(config_err("audit config"))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }
}
