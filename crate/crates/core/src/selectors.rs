//! Scores and selectors.
//!
//! Every score in this crate uses one convention: lower is more acceptable,
//! and a selector accepts a sample when `s(x) <= lambda`. Scores that come
//! from the outside with the opposite orientation (SIRC, MSP, ...) are
//! negated before they get here.

use serde::{Deserialize, Serialize};

use crate::error::{Result, ScodError};

/// Per-sample scores, all finite.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScoreVector(Vec<f64>);

impl ScoreVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(ScodError::invalid(format!(
                "score {i} is not finite ({})",
                values[i]
            )));
        }
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Threshold selector: accept below `threshold`, accept with probability
/// `tau` exactly at it, reject above.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Selector {
    pub threshold: f64,
    pub tau: f64,
}

impl Selector {
    pub fn new(threshold: f64, tau: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&tau) {
            return Err(ScodError::invalid(format!("tau = {tau} outside [0,1]")));
        }
        Ok(Self { threshold, tau })
    }

    /// `u` is a uniform variate in `[0,1)` supplied by the caller.
    pub fn accept(&self, score: f64, u: f64) -> bool {
        accept(self, score, u)
    }
}

pub fn accept(selector: &Selector, score: f64, u: f64) -> bool {
    if score < selector.threshold {
        true
    } else if score == selector.threshold {
        u < selector.tau
    } else {
        false
    }
}

/// Weight on `g` in the optimal linear score; `None` when `alpha = 1`, where
/// the score degenerates to `g` alone.
pub fn linear_beta(alpha: f64, tpr_min: f64) -> Option<f64> {
    if alpha >= 1.0 {
        None
    } else {
        Some(alpha * tpr_min / (1.0 - alpha))
    }
}

/// `r + alpha * tpr_min / (1 - alpha) * g`, or `g` when `alpha = 1`.
pub fn linear_score(r: f64, g: f64, alpha: f64, tpr_min: f64) -> f64 {
    match linear_beta(alpha, tpr_min) {
        Some(beta) => r + beta * g,
        None => g,
    }
}

pub fn linear_scores(r: &[f64], g: &[f64], alpha: f64, tpr_min: f64) -> Vec<f64> {
    r.iter()
        .zip(g)
        .map(|(&r, &g)| linear_score(r, g, alpha, tpr_min))
        .collect()
}

/// The SIRC combination in its native orientation (higher = more ID-like):
/// `-(s1_max - s1) * (1 + exp(-b (s2 - a)))`.
pub fn sirc_score(s1: f64, s2: f64, s1_max: f64, a: f64, b: f64) -> f64 {
    -(s1_max - s1) * (1.0 + (-b * (s2 - a)).exp())
}

/// SIRC negated into the accept-if-low convention.
pub fn sirc_selector_score(s1: f64, s2: f64, s1_max: f64, a: f64, b: f64) -> f64 {
    -sirc_score(s1, s2, s1_max, a, b)
}

/// Below `ln` of the smallest positive double; stands in for `ln 0`.
const LOG_ZERO: f64 = -746.0;

/// `ln` of [`sirc_selector_score`]: orders samples identically but stays
/// finite where `exp(-b (s2 - a))` overflows. Requires `s1 <= s1_max`
/// (NaN otherwise); `s1 = s1_max` maps below every other value.
pub fn sirc_log_selector_score(s1: f64, s2: f64, s1_max: f64, a: f64, b: f64) -> f64 {
    let base = s1_max - s1;
    if base < 0.0 {
        return f64::NAN;
    }
    if base == 0.0 {
        return LOG_ZERO;
    }
    let z = -b * (s2 - a);
    let softplus = if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
    base.ln() + softplus
}

/// Bayes decision under `posterior` and `loss[y][y']` (true `y`, predicted
/// `y'`), returning the arg-min label (lowest index on ties) and the
/// conditional risk at that label.
pub fn plugin_conditional_risk(posterior: &[f64], loss: &[Vec<f64>]) -> Result<(usize, f64)> {
    let k = posterior.len();
    if k == 0 {
        return Err(ScodError::invalid("empty posterior"));
    }
    if posterior.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
        return Err(ScodError::invalid("posterior entries must be finite and nonnegative"));
    }
    let total: f64 = posterior.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(ScodError::invalid(format!("posterior sums to {total}, expected 1")));
    }
    if loss.len() != k || loss.iter().any(|row| row.len() != k) {
        return Err(ScodError::invalid(format!(
            "loss must be {k}x{k} to match the posterior"
        )));
    }
    let mut best = (0, f64::INFINITY);
    for predicted in 0..k {
        let expected: f64 = (0..k).map(|y| posterior[y] * loss[y][predicted]).sum();
        if expected < best.1 {
            best = (predicted, expected);
        }
    }
    Ok(best)
}

/// Smallest number of accepted ID samples out of `m` reaching `tpr_min`.
pub(crate) fn min_accepted(m: usize, tpr_min: f64) -> usize {
    let mut k = ((tpr_min * m as f64).ceil() as usize).clamp(1, m);
    while k > 1 && (k - 1) as f64 / m as f64 >= tpr_min {
        k -= 1;
    }
    while k < m && (k as f64 / m as f64) < tpr_min {
        k += 1;
    }
    k
}

/// Deterministic selector whose threshold is the smallest observed ID score
/// at which the empirical TPR reaches `tpr_min`.
pub fn calibrate_threshold(id_scores: &[f64], tpr_min: f64) -> Result<Selector> {
    if id_scores.is_empty() {
        return Err(ScodError::invalid("cannot calibrate on an empty ID sample"));
    }
    if !(tpr_min > 0.0 && tpr_min <= 1.0) {
        return Err(ScodError::invalid(format!("tpr_min = {tpr_min} outside (0,1]")));
    }
    if id_scores.iter().any(|s| !s.is_finite()) {
        return Err(ScodError::invalid("ID scores must be finite"));
    }
    let mut sorted = id_scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    let k = min_accepted(sorted.len(), tpr_min);
    Ok(Selector {
        threshold: sorted[k - 1],
        tau: 0.0,
    })
}

/// Fraction of `scores` accepted by a deterministic threshold.
pub fn acceptance_rate(scores: &[f64], threshold: f64) -> f64 {
    if scores.is_empty() {
        return 0.0;
    }
    scores.iter().filter(|&&s| s <= threshold).count() as f64 / scores.len() as f64
}
