//! Selective classification in the presence of out-of-distribution data.
//!
//! The crate provides
//!
//! * [`synthetic`]: Gaussian worlds with exact posteriors, conditional
//!   risks and OOD/ID likelihood ratios, used as ground truth;
//! * [`selectors`]: the optimal linear score `r + beta g`, SIRC, plugin
//!   Bayes risk and TPR-targeted threshold calibration;
//! * [`poscod`]: learning `g` from ID data plus an unlabeled ID/OOD mixture
//!   with the corrected sigmoid, and the end-to-end plugin selector;
//! * [`metrics`]: TPR/FPR/selective risk, SCOD risk at a TPR constraint,
//!   AuSRT, AuRC and AuROC;
//! * [`tuning`]: plugin heuristics and search grids for two-score selectors;
//! * [`experiment`]: CSV/JSON ingestion, score recipes, reports and sweeps
//!   behind the `scod` command-line tool.

pub mod error;
pub mod experiment;
pub mod metrics;
pub mod poscod;
pub mod selectors;
pub mod synthetic;
pub mod tuning;

pub use error::{Result, ScodError};
pub use metrics::{ausrt, aurc, auroc, empirical_rates, scod_risk_at_tpr, CurvePoint, Origin, ScoredSample, TprGrid};
pub use poscod::{
    bce_and_gradient, csm_posterior, estimate_g, fit_csm, recover_prior, run_poscod, CsmParams,
    FitConfig, LikelihoodRatioModel, MixtureDataset, MixtureOrigin, PoscodConfig, PoscodModel,
};
pub use selectors::{
    accept, calibrate_threshold, linear_score, plugin_conditional_risk, sirc_score, ScoreVector,
    Selector,
};
pub use synthetic::{GaussianComponent, Label, LabeledSample, SyntheticWorld};
pub use tuning::{linear_angle_grid, sirc_grid, sirc_plugin_params, tune_on_eval, SircParams};
