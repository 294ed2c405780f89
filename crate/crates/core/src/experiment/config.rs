use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Result, ScodError};
use crate::metrics::TprGrid;
use crate::poscod::{FitConfig, Sigmoid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Closed-form or heuristic parameters.
    #[default]
    Plugin,
    /// Parameters optimized for AuSRT on the evaluation table itself.
    Tuned,
}

/// How a selector score is assembled from table columns. Column values are
/// in the accept-if-low orientation (after any declared negation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Recipe {
    Single {
        #[serde(default)]
        name: Option<String>,
        col: String,
    },
    /// `r + beta g` with `beta = alpha tpr_min / (1 - alpha)` (plugin) or
    /// `cos(angle) r + sin(angle) g` over the angle grid (tuned).
    Linear {
        #[serde(default)]
        name: Option<String>,
        r_col: String,
        g_col: String,
        #[serde(default)]
        mode: Mode,
    },
    /// SIRC on `s1 = -s1_col`, `s2 = -s2_col` with `S1_max = -s1_min`.
    Sirc {
        #[serde(default)]
        name: Option<String>,
        s1_col: String,
        s2_col: String,
        #[serde(default)]
        s1_min: f64,
        #[serde(default)]
        mode: Mode,
    },
    /// Plugin linear score with a likelihood ratio learned by the corrected
    /// (or standard) sigmoid on `feature_cols`. Without `params` the model
    /// is fitted on the table's ID and UNLABELED rows.
    Poscod {
        #[serde(default)]
        name: Option<String>,
        r_col: String,
        feature_cols: Vec<String>,
        #[serde(default)]
        sigmoid: Sigmoid,
        #[serde(default)]
        params: Option<PathBuf>,
    },
}

impl Recipe {
    pub fn name(&self) -> String {
        let mode_str = |m: &Mode| match m {
            Mode::Plugin => "plugin",
            Mode::Tuned => "tuned",
        };
        match self {
            Recipe::Single { name: Some(n), .. }
            | Recipe::Linear { name: Some(n), .. }
            | Recipe::Sirc { name: Some(n), .. }
            | Recipe::Poscod { name: Some(n), .. } => n.clone(),
            Recipe::Single { col, .. } => format!("single({col})"),
            Recipe::Linear { r_col, g_col, mode, .. } => {
                format!("linear-{}({r_col},{g_col})", mode_str(mode))
            }
            Recipe::Sirc { s1_col, s2_col, mode, .. } => {
                format!("sirc-{}({s1_col},{s2_col})", mode_str(mode))
            }
            Recipe::Poscod { r_col, sigmoid, .. } => {
                let s = match sigmoid {
                    Sigmoid::Corrected => "corrected",
                    Sigmoid::Standard => "standard",
                };
                format!("poscod-{s}({r_col})")
            }
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Recipe::Single { .. } => "single",
            Recipe::Linear { .. } => "linear",
            Recipe::Sirc { .. } => "sirc",
            Recipe::Poscod { .. } => "poscod",
        }
    }

    pub fn columns(&self) -> Vec<&str> {
        match self {
            Recipe::Single { col, .. } => vec![col],
            Recipe::Linear { r_col, g_col, .. } => vec![r_col, g_col],
            Recipe::Sirc { s1_col, s2_col, .. } => vec![s1_col, s2_col],
            Recipe::Poscod { r_col, feature_cols, .. } => {
                std::iter::once(r_col.as_str())
                    .chain(feature_cols.iter().map(String::as_str))
                    .collect()
            }
        }
    }
}

/// Training-data sizes for sweeps that resample the unlabeled mixture from
/// a synthetic world.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainSizes {
    pub n_id: usize,
    pub n_mixture: usize,
}

impl Default for TrainSizes {
    fn default() -> Self {
        Self {
            n_id: 20_000,
            n_mixture: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub alpha: f64,
    pub tpr_min: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub grid: TprGrid,
    #[serde(default = "default_loss_col")]
    pub loss_col: String,
    /// Columns whose native orientation is higher = more acceptable; they
    /// are negated on load.
    #[serde(default)]
    pub higher_is_better: Vec<String>,
    pub recipes: Vec<Recipe>,
    #[serde(default)]
    pub fit: FitConfig,
    /// World description used to regenerate training data in `pi_o_tr` sweeps.
    #[serde(default)]
    pub world: Option<PathBuf>,
    #[serde(default)]
    pub train: TrainSizes,
}

fn default_loss_col() -> String {
    "loss".to_string()
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(ScodError::Config(format!("alpha = {} outside [0,1]", self.alpha)));
        }
        if !(self.tpr_min > 0.0 && self.tpr_min <= 1.0) {
            return Err(ScodError::Config(format!("tpr_min = {} outside (0,1]", self.tpr_min)));
        }
        if self.recipes.is_empty() {
            return Err(ScodError::Config("no score recipes given".into()));
        }
        Ok(())
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| {
            ScodError::Config(format!("config line {} column {}: {e}", e.line(), e.column()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads a config; relative paths inside it resolve against its directory.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ScodError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_json_str(&text)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(w) = cfg.world.as_mut() {
            resolve(w);
        }
        for r in cfg.recipes.iter_mut() {
            if let Recipe::Poscod { params: Some(p), .. } = r {
                resolve(p);
            }
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_recipes() {
        let cfg = ExperimentConfig::from_json_str(
            r#"{"alpha":0.5,"tpr_min":0.9,"recipes":[
                {"kind":"single","col":"r"},
                {"kind":"linear","r_col":"r","g_col":"g","mode":"tuned"},
                {"kind":"sirc","s1_col":"r","s2_col":"g"},
                {"kind":"poscod","r_col":"r","feature_cols":["x0"],"sigmoid":"standard"}]}"#,
        )
        .unwrap();
        assert_eq!(cfg.loss_col, "loss");
        assert_eq!(cfg.grid, TprGrid::Empirical);
        let names: Vec<String> = cfg.recipes.iter().map(Recipe::name).collect();
        assert_eq!(
            names,
            ["single(r)", "linear-tuned(r,g)", "sirc-plugin(r,g)", "poscod-standard(r)"]
        );
    }

    #[test]
    fn config_errors_carry_location() {
        let err = ExperimentConfig::from_json_str("{\n\"alpha\": 0.5,\n\"tpr_min\": }").unwrap_err();
        assert!(matches!(err, ScodError::Config(ref m) if m.contains("line 3")));
        let err = ExperimentConfig::from_json_str(r#"{"alpha":1.5,"tpr_min":0.9,"recipes":[{"kind":"single","col":"r"}]}"#)
            .unwrap_err();
        assert!(matches!(err, ScodError::Config(_)));
        let err = ExperimentConfig::from_json_str(r#"{"alpha":0.5,"tpr_min":0.9,"recipes":[]}"#).unwrap_err();
        assert!(matches!(err, ScodError::Config(_)));
    }

    #[test]
    fn uniform_grid_option() {
        let cfg = ExperimentConfig::from_json_str(
            r#"{"alpha":0.5,"tpr_min":0.9,"grid":{"uniform":{"points":101}},"recipes":[{"kind":"single","col":"r"}]}"#,
        )
        .unwrap();
        assert_eq!(cfg.grid, TprGrid::uniform101());
    }
}
