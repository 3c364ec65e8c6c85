//! Run configuration: a TOML file with nested sections. Unknown keys are
//! errors, every error names the offending line, and the fully resolved
//! configuration is written next to the outputs of every run.

use std::path::{Path, PathBuf};

use flock_core::dynamics::{IntegratorConfig, ParticleState};
use flock_core::kinetic::{sample_initial, InitialLaw, InitialSpec};
use flock_core::model::{CouplingSpec, KernelSpec, ModelSpec, RepulsionSpec};
use flock_core::transport::GroundMetric;
use serde::{Deserialize, Serialize};

use crate::seeds::derive_seed;
use crate::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Root seed; every module seed is derived from it by label.
    pub seed: u64,
    #[serde(default)]
    pub metric: MetricName,
    pub model: ModelConfig,
    pub initial: InitialConfig,
    pub integrator: IntegratorSection,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub assumptions: AssumptionConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum MetricName {
    #[default]
    Euclidean,
    Sum,
}

impl MetricName {
    /// The metric on phase space R^d × R^d.
    pub fn ground_metric(self, d: usize) -> GroundMetric {
        match self {
            MetricName::Euclidean => GroundMetric::Euclidean,
            MetricName::Sum => GroundMetric::sum_of_norms(d),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub dimension: usize,
    pub kernel: KernelConfig,
    pub coupling: CouplingConfig,
    #[serde(default)]
    pub repulsion: RepulsionConfig,
    /// Declared lower bound of Φ. Defaults to the kernel minimum over the
    /// initial position diameter.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_star: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelConfig {
    Constant { level: f64 },
    CuckerSmale { amplitude: f64, decay: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CouplingConfig {
    Linear,
    Power { alpha: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RepulsionConfig {
    #[default]
    Zero,
    Saturated { cap: f64, softening: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub n: usize,
    pub law: LawConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LawConfig {
    UniformBall {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        x_center: Option<Vec<f64>>,
        x_radius: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        v_center: Option<Vec<f64>>,
        v_radius: f64,
    },
    GaussianTruncated {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        x_mean: Option<Vec<f64>>,
        x_std: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        v_mean: Option<Vec<f64>>,
        v_std: f64,
        truncation: f64,
    },
    TwoCluster { x_centers: [Vec<f64>; 2], v_centers: [Vec<f64>; 2], x_radius: f64, v_radius: f64 },
    /// Fixed atoms, one row per particle.
    Explicit { x: Vec<Vec<f64>>, v: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "defaults::error_tol")]
    pub error_tol: f64,
    #[serde(default = "defaults::max_steps")]
    pub max_steps: usize,
    #[serde(default = "defaults::observer_stride")]
    pub observer_stride: usize,
    #[serde(default)]
    pub checkpoints: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    /// Every k-th recorded snapshot is written as a snapshot file; the
    /// first and the last always are. 0 writes only those two.
    #[serde(default = "defaults::one")]
    pub snapshot_stride: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: None, snapshot_stride: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssumptionConfig {
    /// Radius of the sampled x and v balls.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default = "defaults::assumption_samples")]
    pub samples: usize,
}

impl Default for AssumptionConfig {
    fn default() -> Self {
        Self { radius: None, samples: defaults::assumption_samples() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhiStarSource {
    /// Kernel minimum over the largest particle separation of the run.
    #[default]
    Observed,
    /// The model's declared Φ*.
    Declared,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default = "defaults::rel_tol")]
    pub rel_tol: f64,
    #[serde(default)]
    pub phi_star: PhiStarSource,
    #[serde(default = "defaults::v_tol")]
    pub conservation_v_tol: f64,
    #[serde(default = "defaults::x_tol")]
    pub conservation_x_tol: f64,
    /// Plateau window; defaults to a fifth of the horizon.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_window: Option<f64>,
    #[serde(default = "defaults::gamma_fraction")]
    pub gamma_fraction: f64,
    #[serde(default = "defaults::c_cap")]
    pub support_c_cap: f64,
    #[serde(default)]
    pub stability: StabilityConfig,
    #[serde(default)]
    pub meanfield: MeanfieldConfig,
    #[serde(default)]
    pub flocking: FlockingConfig,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            rel_tol: defaults::rel_tol(),
            phi_star: PhiStarSource::default(),
            conservation_v_tol: defaults::v_tol(),
            conservation_x_tol: defaults::x_tol(),
            gamma_window: None,
            gamma_fraction: defaults::gamma_fraction(),
            support_c_cap: defaults::c_cap(),
            stability: StabilityConfig::default(),
            meanfield: MeanfieldConfig::default(),
            flocking: FlockingConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilityConfig {
    #[serde(default = "defaults::perturbations")]
    pub perturbations: Vec<f64>,
    #[serde(default = "defaults::stability_times")]
    pub times: Vec<f64>,
    /// Largest acceptable shared growth rate.
    #[serde(default = "defaults::c_cap")]
    pub c_cap: f64,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        Self { perturbations: defaults::perturbations(), times: defaults::stability_times(), c_cap: defaults::c_cap() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairingName {
    #[default]
    AgainstLargest,
    Consecutive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeanfieldConfig {
    #[serde(default = "defaults::ns")]
    pub ns: Vec<usize>,
    #[serde(default = "defaults::meanfield_times")]
    pub times: Vec<f64>,
    #[serde(default = "defaults::seeds")]
    pub seeds: usize,
    #[serde(default)]
    pub pairing: PairingName,
    /// Largest accepted ratio of the last evaluation column to the first.
    #[serde(default = "defaults::max_ratio")]
    pub max_ratio: f64,
}

impl Default for MeanfieldConfig {
    fn default() -> Self {
        Self {
            ns: defaults::ns(),
            times: defaults::meanfield_times(),
            seeds: defaults::seeds(),
            pairing: PairingName::default(),
            max_ratio: defaults::max_ratio(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlockingConfig {
    /// Evaluation time; defaults to the horizon.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<f64>,
    #[serde(default = "defaults::one_f")]
    pub monotone_after: f64,
    #[serde(default = "defaults::slack")]
    pub slack: f64,
}

impl Default for FlockingConfig {
    fn default() -> Self {
        Self { time: None, monotone_after: 1.0, slack: defaults::slack() }
    }
}

mod defaults {
    pub fn error_tol() -> f64 {
        1e-10
    }
    pub fn max_steps() -> usize {
        1_000_000
    }
    pub fn observer_stride() -> usize {
        10
    }
    pub fn one() -> usize {
        1
    }
    pub fn one_f() -> f64 {
        1.0
    }
    pub fn assumption_samples() -> usize {
        2000
    }
    pub fn rel_tol() -> f64 {
        1e-3
    }
    pub fn v_tol() -> f64 {
        1e-9
    }
    pub fn x_tol() -> f64 {
        1e-8
    }
    pub fn gamma_fraction() -> f64 {
        0.05
    }
    pub fn c_cap() -> f64 {
        10.0
    }
    pub fn perturbations() -> Vec<f64> {
        vec![1e-3, 1e-2]
    }
    pub fn stability_times() -> Vec<f64> {
        vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]
    }
    pub fn ns() -> Vec<usize> {
        vec![64, 256, 1024]
    }
    pub fn meanfield_times() -> Vec<f64> {
        vec![0.0, 1.0]
    }
    pub fn seeds() -> usize {
        5
    }
    pub fn max_ratio() -> f64 {
        3.0
    }
    pub fn slack() -> f64 {
        1e-9
    }
}

/// 1-based line of `key` inside `[section]` (dotted for nested tables), or
/// of the section header when the key is absent.
pub fn locate(source: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    let mut header = None;
    for (k, line) in source.lines().enumerate() {
        let t = line.trim();
        if let Some(name) = t.strip_prefix('[').and_then(|r| r.split(']').next()) {
            current = name.trim().to_string();
            if current == section {
                header = Some(k + 1);
            }
            continue;
        }
        let name = t.split('=').next().unwrap_or("").trim();
        if current == section && !name.is_empty() && name == key {
            return Some(k + 1);
        }
    }
    // Inline tables: fall back to the key holding the table.
    header.or_else(|| section.rsplit_once('.').and_then(|(parent, last)| locate(source, parent, last)))
}

impl RunConfig {
    pub fn parse(source: &str) -> Result<Self, HarnessError> {
        let cfg: RunConfig = toml::from_str(source).map_err(|e| {
            let line = e.span().map(|s| source[..s.start].matches('\n').count() + 1);
            HarnessError::config(line, e.message().trim())
        })?;
        cfg.validate(source)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let source = std::fs::read_to_string(path).map_err(|e| HarnessError::input_io(path, e))?;
        Self::parse(&source).map_err(|e| e.in_file(path))
    }

    /// Serializes the configuration with every default filled in.
    pub fn resolved(&self) -> Result<Self, HarnessError> {
        let mut out = self.clone();
        out.model.phi_star = Some(self.model_spec()?.phi_star);
        out.verify.gamma_window = Some(self.gamma_window());
        out.verify.flocking.time = Some(self.flocking_time());
        out.assumptions.radius = Some(self.assumption_radius());
        Ok(out)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    fn validate(&self, source: &str) -> Result<(), HarnessError> {
        let err = |section: &str, key: &str, message: String| HarnessError::config(locate(source, section, key), message);
        let d = self.model.dimension;
        self.model_spec_declared().map_err(|e| err("model", "", e))?;
        if self.initial.n == 0 {
            return Err(err("initial", "n", "n must be >= 1".into()));
        }
        match &self.initial.law {
            LawConfig::Explicit { x, v } => {
                if x.len() != self.initial.n || v.len() != self.initial.n {
                    return Err(err("initial.law", "x", format!("explicit law needs {} rows of x and v", self.initial.n)));
                }
                if x.iter().chain(v).any(|r| r.len() != d) {
                    return Err(err("initial.law", "x", format!("explicit rows must have {d} coordinates")));
                }
            }
            _ => self.initial_spec()?.validate().map_err(|e| err("initial.law", "kind", e.to_string()))?,
        }
        self.integrator_config().validate().map_err(|e| err("integrator", "dt", e.to_string()))?;
        if let Some(p) = self.model.phi_star {
            if !(p > 0.0 && p.is_finite()) {
                return Err(err("model", "phi_star", format!("phi_star = {p} must be > 0")));
            }
        }
        let v = &self.verify;
        if v.rel_tol.is_nan() || v.rel_tol < 0.0 {
            return Err(err("verify", "rel_tol", "rel_tol must be >= 0".into()));
        }
        if let Some(w) = v.gamma_window {
            if w.is_nan() || w <= 0.0 {
                return Err(err("verify", "gamma_window", "gamma_window must be > 0".into()));
            }
        }
        if v.stability.perturbations.iter().any(|p| !(*p >= 0.0 && p.is_finite())) {
            return Err(err("verify.stability", "perturbations", "perturbations must be finite and >= 0".into()));
        }
        if v.stability.times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
            return Err(err("verify.stability", "times", "times must be finite and >= 0".into()));
        }
        let ns = &v.meanfield.ns;
        if ns.len() < 3 || ns[0] == 0 || ns.windows(2).any(|w| w[0] >= w[1]) {
            return Err(err("verify.meanfield", "ns", "ns must be strictly increasing with at least 3 entries".into()));
        }
        if v.meanfield.times.is_empty() || v.meanfield.times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
            return Err(err("verify.meanfield", "times", "times must be non-empty, finite and >= 0".into()));
        }
        if v.meanfield.seeds == 0 {
            return Err(err("verify.meanfield", "seeds", "seeds must be >= 1".into()));
        }
        if let Some(t) = v.flocking.time {
            if !(t >= 0.0 && t <= self.integrator.t_end) {
                return Err(err("verify.flocking", "time", format!("time must lie in [0, {}]", self.integrator.t_end)));
            }
        }
        Ok(())
    }

    fn model_spec_declared(&self) -> Result<ModelSpec, String> {
        let m = &self.model;
        let spec = ModelSpec {
            dimension: m.dimension,
            kernel: match m.kernel {
                KernelConfig::Constant { level } => KernelSpec::Constant { level },
                KernelConfig::CuckerSmale { amplitude, decay } => KernelSpec::CuckerSmale { amplitude, decay },
            },
            coupling: match m.coupling {
                CouplingConfig::Linear => CouplingSpec::Linear,
                CouplingConfig::Power { alpha } => CouplingSpec::Power { alpha },
            },
            repulsion: match m.repulsion {
                RepulsionConfig::Zero => RepulsionSpec::Zero,
                RepulsionConfig::Saturated { cap, softening } => RepulsionSpec::Saturated { cap, softening },
            },
            phi_star: m.phi_star.unwrap_or(1.0),
        };
        spec.validate().map_err(|e| e.to_string())?;
        Ok(spec)
    }

    /// The model, with Φ* resolved.
    pub fn model_spec(&self) -> Result<ModelSpec, HarnessError> {
        let spec = self.model_spec_declared().map_err(|m| HarnessError::config(None, m))?;
        Ok(match self.model.phi_star {
            Some(_) => spec,
            None => spec.with_phi_star(spec.kernel.min_on(2.0 * self.position_reach())),
        })
    }

    /// Upper bound of |x| over the initial cloud.
    fn position_reach(&self) -> f64 {
        let reach = |c: &Option<Vec<f64>>, r: f64| c.as_deref().map_or(0.0, |c| c.iter().map(|x| x * x).sum::<f64>().sqrt()) + r;
        match &self.initial.law {
            LawConfig::UniformBall { x_center, x_radius, .. } => reach(x_center, *x_radius),
            LawConfig::GaussianTruncated { x_mean, x_std, truncation, .. } => reach(x_mean, x_std * truncation),
            LawConfig::TwoCluster { x_centers, x_radius, .. } => {
                x_centers.iter().map(|c| reach(&Some(c.clone()), *x_radius)).fold(0.0, f64::max)
            }
            LawConfig::Explicit { x, .. } => {
                x.iter().map(|r| r.iter().map(|c| c * c).sum::<f64>().sqrt()).fold(0.0, f64::max)
            }
        }
    }

    /// The sampled initial law; explicit atoms have none.
    pub fn initial_spec(&self) -> Result<InitialSpec, HarnessError> {
        let d = self.model.dimension;
        let zero = || vec![0.0; d];
        let law = match self.initial.law.clone() {
            LawConfig::UniformBall { x_center, x_radius, v_center, v_radius } => InitialLaw::UniformBall {
                x_center: x_center.unwrap_or_else(zero),
                x_radius,
                v_center: v_center.unwrap_or_else(zero),
                v_radius,
            },
            LawConfig::GaussianTruncated { x_mean, x_std, v_mean, v_std, truncation } => InitialLaw::GaussianTruncated {
                x_mean: x_mean.unwrap_or_else(zero),
                x_std,
                v_mean: v_mean.unwrap_or_else(zero),
                v_std,
                truncation,
            },
            LawConfig::TwoCluster { x_centers, v_centers, x_radius, v_radius } => {
                InitialLaw::TwoCluster { x_centers, v_centers, x_radius, v_radius }
            }
            LawConfig::Explicit { .. } => {
                return Err(HarnessError::config(None, "this study needs a sampled initial law, not explicit atoms"))
            }
        };
        Ok(InitialSpec { n: self.initial.n, dimension: d, law, seed: derive_seed(self.seed, "initial") })
    }

    pub fn initial_state(&self) -> Result<ParticleState, HarnessError> {
        let state = match &self.initial.law {
            LawConfig::Explicit { x, v } => {
                ParticleState::from_rows(self.model.dimension, 0.0, &x.concat(), &v.concat())
            }
            _ => sample_initial(&self.initial_spec()?),
        };
        state.map_err(|e| HarnessError::config(None, e.to_string()))
    }

    pub fn integrator_config(&self) -> IntegratorConfig {
        let s = &self.integrator;
        IntegratorConfig {
            dt: s.dt,
            t_end: s.t_end,
            error_tol: s.error_tol,
            max_steps: s.max_steps,
            observer_stride: s.observer_stride,
            checkpoints: s.checkpoints.clone(),
        }
    }

    pub fn ground_metric(&self) -> GroundMetric {
        self.metric.ground_metric(self.model.dimension)
    }

    pub fn gamma_window(&self) -> f64 {
        self.verify.gamma_window.unwrap_or(self.integrator.t_end / 5.0)
    }

    pub fn flocking_time(&self) -> f64 {
        self.verify.flocking.time.unwrap_or(self.integrator.t_end)
    }

    /// Defaults to the initial position diameter, the range of pair
    /// distances on which the declared Φ* has to hold at t = 0.
    pub fn assumption_radius(&self) -> f64 {
        self.assumptions.radius.unwrap_or_else(|| 2.0 * self.position_reach())
    }

    pub fn output_dir(&self, command: &str) -> PathBuf {
        self.output.dir.clone().unwrap_or_else(|| PathBuf::from("runs").join(command))
    }
}
