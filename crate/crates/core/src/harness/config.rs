use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{generate_params, load_params, EnergyModel, Model, ShapeConfig, PRESETS};
use crate::samplers::{SamplerConfig, SamplerKind};

/// Benchmark scale of a named preset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Desk,
    Paper,
}

/// Where the target comes from: a named preset, an explicit shape, or a
/// parameter file. Exactly one of `preset`, `shape`, `path` must be set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<ShapeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub scale: Scale,
    /// Overrides the preset's size knob (N, lattice side, FHMM length, RBM visibles).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size: Option<usize>,
    /// Seed for parameter generation.
    #[serde(default)]
    pub seed: u64,
}

impl ModelSpec {
    pub fn preset(name: &str) -> Self {
        Self {
            preset: Some(name.to_string()),
            ..Self::default()
        }
    }

    pub fn shape(shape: ShapeConfig) -> Self {
        Self {
            shape: Some(shape),
            ..Self::default()
        }
    }

    fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let sources = [self.preset.is_some(), self.shape.is_some(), self.path.is_some()];
        match sources.iter().filter(|s| **s).count() {
            0 => out.push("model: one of preset, shape or path is required".into()),
            1 => {}
            _ => out.push("model: preset, shape and path are mutually exclusive".into()),
        }
        if let Some(name) = &self.preset {
            if !PRESETS.contains(&name.as_str()) {
                out.push(format!("model: unknown preset {name:?} (known: {})", PRESETS.join(", ")));
            }
        }
        if self.size == Some(0) {
            out.push("model: size must be at least 1".into());
        }
        out
    }

    /// Resolved shape for generated models.
    pub fn resolved_shape(&self) -> Option<ShapeConfig> {
        let shape = match (&self.preset, &self.shape) {
            (Some(name), _) => match self.scale {
                Scale::Desk => ShapeConfig::desk_preset(name)?,
                Scale::Paper => ShapeConfig::preset(name)?,
            },
            (None, Some(shape)) => shape.clone(),
            _ => return None,
        };
        Some(match self.size {
            Some(s) => shape.with_size(s),
            None => shape,
        })
    }

    pub fn build(&self) -> Result<Model> {
        let problems = self.violations();
        if !problems.is_empty() {
            return Err(Error::Config(problems));
        }
        match (&self.path, self.resolved_shape()) {
            (Some(path), _) => load_params(path),
            (None, Some(shape)) => generate_params(&shape, self.seed),
            (None, None) => unreachable!("validated above"),
        }
    }

    /// Display name for result rows.
    pub fn name(&self) -> String {
        if let Some(p) = &self.preset {
            return p.clone();
        }
        if let Some(path) = &self.path {
            return path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| path.display().to_string());
        }
        match &self.shape {
            Some(s) => format!("{:?}", s.family()).to_lowercase(),
            None => "model".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuningConfig {
    #[serde(default)]
    pub enabled: bool,
    /// Shared target; when absent rwm aims at 0.234 and the rest at 0.574.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_rate: Option<f64>,
    #[serde(default = "default_adaptation_steps")]
    pub adaptation_steps: usize,
}

fn default_adaptation_steps() -> usize {
    2000
}

impl Default for TuningConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            target_rate: None,
            adaptation_steps: default_adaptation_steps(),
        }
    }
}

impl TuningConfig {
    pub fn target_for(&self, kind: SamplerKind) -> f64 {
        self.target_rate.unwrap_or(match kind {
            SamplerKind::Rwm => 0.234,
            _ => 0.574,
        })
    }
}

fn yes() -> bool {
    true
}

/// One experiment: a target, samplers, and the chain protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub samplers: Vec<SamplerConfig>,
    pub chains: usize,
    /// Total steps per chain, burn-in included.
    pub steps: u64,
    pub burn_in: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tuning: TuningConfig,
    /// Output directory for `results.csv` and `summary.json`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Measure wall-clock time for `ess_per_second`. Timing makes outputs
    /// differ between runs; disable it for byte-identical reruns.
    #[serde(default = "yes")]
    pub wall_clock: bool,
}

impl ExperimentConfig {
    /// Every shape-independent problem with the configuration.
    pub fn violations(&self) -> Vec<String> {
        let mut out = self.model.violations();
        if self.samplers.is_empty() {
            out.push("samplers: at least one sampler is required".into());
        }
        for (i, s) in self.samplers.iter().enumerate() {
            out.extend(s.violations().into_iter().map(|v| format!("samplers[{i}]: {v}")));
        }
        if self.chains == 0 {
            out.push("chains must be at least 1".into());
        }
        if self.burn_in >= self.steps {
            out.push(format!(
                "burn_in ({}) must be smaller than steps ({})",
                self.burn_in, self.steps
            ));
        }
        if self.steps - self.burn_in.min(self.steps) < crate::diagnostics::MIN_TRACE_LEN as u64 {
            out.push(format!(
                "steps − burn_in must be at least {} for ESS",
                crate::diagnostics::MIN_TRACE_LEN
            ));
        }
        if let Some(t) = self.tuning.target_rate {
            if !(t > 0.0 && t < 1.0) {
                out.push(format!("tuning.target_rate {t} must lie in (0, 1)"));
            }
        }
        if self.tuning.enabled && self.tuning.adaptation_steps == 0 {
            out.push("tuning.adaptation_steps must be at least 1 when tuning is enabled".into());
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v))
        }
    }

    /// Problems that need the model's shape.
    pub fn model_violations<M: EnergyModel + ?Sized>(&self, model: &M) -> Vec<String> {
        self.samplers
            .iter()
            .enumerate()
            .flat_map(|(i, s)| {
                s.violations_for(model.dim(), model.n_categories())
                    .into_iter()
                    .filter(|v| v.starts_with("block_gibbs"))
                    .map(move |v| format!("samplers[{i}]: {v}"))
            })
            .collect()
    }

    pub fn from_json(text: &str, origin: &Path) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::parse(origin, &e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, path)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Benchmark protocol for a named model regime: all eight samplers with
    /// `g = √t`, tuning on. Desk scale runs 10 chains × 20 000 steps, paper
    /// scale 100 × 100 000, half of each as burn-in.
    pub fn preset(name: &str, scale: Scale) -> Result<Self> {
        if !PRESETS.contains(&name) {
            return Err(Error::Config(vec![format!(
                "unknown preset {name:?} (known: {})",
                PRESETS.join(", ")
            )]));
        }
        let (chains, steps) = match scale {
            Scale::Desk => (10, 20_000),
            Scale::Paper => (100, 100_000),
        };
        let samplers = vec![
            SamplerConfig::new(SamplerKind::Rwm),
            SamplerConfig::new(SamplerKind::BlockGibbs).with_block_size(2),
            SamplerConfig::new(SamplerKind::HammingBall).with_block_size(10),
            SamplerConfig::new(SamplerKind::Gwg),
            SamplerConfig::new(SamplerKind::Pas),
            SamplerConfig::new(SamplerKind::Dmala),
            SamplerConfig::new(SamplerKind::Dlmcf),
            SamplerConfig::new(SamplerKind::Dlmc),
        ];
        Ok(Self {
            model: ModelSpec {
                scale,
                ..ModelSpec::preset(name)
            },
            samplers,
            chains,
            steps,
            burn_in: steps / 2,
            seed: 0,
            tuning: TuningConfig {
                enabled: true,
                ..TuningConfig::default()
            },
            output: None,
            wall_clock: true,
        })
    }
}
