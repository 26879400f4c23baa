//! The training configuration file and its flag overrides. Precedence is
//! built-in defaults, then the TOML file, then command-line flags; the
//! effective result is echoed into every report, so a run can always be
//! reproduced from its output.

use std::path::Path;

use serde::Deserialize;

use samlp_core::tuner::PipelineConfig;

use crate::failure::{Failure, OrInput};

/// Every key is optional; omitted keys keep their defaults. Unknown keys
/// are rejected so a typo cannot silently fall back to a default.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub seed: Option<u64>,
    pub holdout_ratio: Option<f64>,
    pub cv_folds: Option<usize>,
    pub selection_repetitions: Option<usize>,
    pub configs_per_family: Option<usize>,
    pub alpha_min: Option<f64>,
    pub alpha_max: Option<f64>,
    pub alpha_points: Option<usize>,
    pub shap_mode: Option<String>,
    pub shap_background: Option<usize>,
    pub shap_permutations: Option<usize>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<ConfigFile, Failure> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Failure::Input(format!("cannot read config file {}: {e}", path.display()))
        })?;
        toml::from_str(&text)
            .map_err(|e| Failure::Input(format!("config file {}: {e}", path.display())))
    }

    /// Defaults overlaid with the file's values.
    pub fn into_pipeline(self) -> PipelineConfig {
        let d = PipelineConfig::default();
        PipelineConfig {
            seed: self.seed.unwrap_or(d.seed),
            holdout_ratio: self.holdout_ratio.unwrap_or(d.holdout_ratio),
            cv_folds: self.cv_folds.unwrap_or(d.cv_folds),
            selection_repetitions: self
                .selection_repetitions
                .unwrap_or(d.selection_repetitions),
            configs_per_family: self.configs_per_family.unwrap_or(d.configs_per_family),
            alpha_min: self.alpha_min.unwrap_or(d.alpha_min),
            alpha_max: self.alpha_max.unwrap_or(d.alpha_max),
            alpha_points: self.alpha_points.unwrap_or(d.alpha_points),
            shap_mode: self.shap_mode.unwrap_or(d.shap_mode),
            shap_background: self.shap_background.unwrap_or(d.shap_background),
            shap_permutations: self.shap_permutations.unwrap_or(d.shap_permutations),
        }
    }
}

/// Flag overrides shared by the commands that run the pipeline.
#[derive(Debug, Default, clap::Args)]
pub struct PipelineFlags {
    /// Master seed for every random draw in the run.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Fraction of each dataset kept for training (the rest is the test
    /// split).
    #[arg(long)]
    pub holdout_ratio: Option<f64>,
    /// Cross-validation folds for model ranking and alpha search.
    #[arg(long)]
    pub cv_folds: Option<usize>,
    /// Balanced repetitions of the feature-selection vote.
    #[arg(long)]
    pub selection_repetitions: Option<usize>,
    /// Sampled configurations per classifier family.
    #[arg(long)]
    pub configs_per_family: Option<usize>,
    /// Lower edge of the starting alpha grid.
    #[arg(long)]
    pub alpha_min: Option<f64>,
    /// Upper edge of the starting alpha grid.
    #[arg(long)]
    pub alpha_max: Option<f64>,
    /// Points on the alpha grid.
    #[arg(long)]
    pub alpha_points: Option<usize>,
}

/// Resolve file + flags into a validated pipeline configuration.
pub fn effective_config(
    file: Option<&Path>,
    flags: &PipelineFlags,
) -> Result<PipelineConfig, Failure> {
    let base = match file {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let mut config = base.into_pipeline();
    if let Some(v) = flags.seed {
        config.seed = v;
    }
    if let Some(v) = flags.holdout_ratio {
        config.holdout_ratio = v;
    }
    if let Some(v) = flags.cv_folds {
        config.cv_folds = v;
    }
    if let Some(v) = flags.selection_repetitions {
        config.selection_repetitions = v;
    }
    if let Some(v) = flags.configs_per_family {
        config.configs_per_family = v;
    }
    if let Some(v) = flags.alpha_min {
        config.alpha_min = v;
    }
    if let Some(v) = flags.alpha_max {
        config.alpha_max = v;
    }
    if let Some(v) = flags.alpha_points {
        config.alpha_points = v;
    }
    config.validate().or_input()?;
    Ok(config)
}
