//! Hyperparameter protocols for the two-score selectors: the SIRC plugin
//! heuristic and its search grid, the angle grid for the linear
//! combination, and exhaustive tuning on an evaluation set.
//!
//! Tuned parameters are picked on the data they are evaluated on, so they
//! are an optimistic bound and not something a deployed selector can use.

use std::f64::consts::PI;

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ScodError};
use crate::metrics::{ausrt, ScoredSample, TprGrid};
use crate::selectors::sirc_log_selector_score;

/// Points per axis before the heuristic value is added.
pub const GRID_SAMPLES: usize = 40;
pub const ANGLE_SAMPLES: usize = 1600;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SircParams {
    pub a: f64,
    pub b: f64,
}

/// Mean and unbiased standard deviation.
fn mean_std(values: &[f64]) -> Result<(f64, f64)> {
    if values.len() < 2 {
        return Err(ScodError::DegenerateScore(
            "need at least two ID values to estimate a spread".into(),
        ));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(ScodError::invalid("score values must be finite"));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let std = var.sqrt();
    if !(std > 0.0) {
        return Err(ScodError::DegenerateScore("second score is constant on ID data".into()));
    }
    Ok((mean, std))
}

/// `a = mean - 3 std`, `b = 1 / std` of the second score on ID data.
pub fn sirc_plugin_params(s2_id_values: &[f64]) -> Result<SircParams> {
    let (mean, std) = mean_std(s2_id_values)?;
    Ok(SircParams {
        a: mean - 3.0 * std,
        b: 1.0 / std,
    })
}

/// `count` inclusive, evenly spaced values from `lo` to `hi`.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (count - 1) as f64;
            (0..count)
                .map(|i| if i == count - 1 { hi } else { lo + step * i as f64 })
                .collect()
        }
    }
}

fn axis_with(lo: f64, hi: f64, extra: f64) -> Vec<f64> {
    let mut axis = linspace(lo, hi, GRID_SAMPLES);
    axis.push(extra);
    axis.sort_by(f64::total_cmp);
    axis
}

/// 41 x 41 candidates: `a` over `[a_plug - 3 std, a_plug + 3 std]` and `b`
/// over `[b_plug / 10, 10 b_plug]`, each axis 40 even samples plus the
/// heuristic value.
pub fn sirc_grid(s2_id_values: &[f64]) -> Result<Vec<SircParams>> {
    let (_, std) = mean_std(s2_id_values)?;
    let plug = sirc_plugin_params(s2_id_values)?;
    let a_axis = axis_with(plug.a - 3.0 * std, plug.a + 3.0 * std, plug.a);
    let b_axis = axis_with(plug.b / 10.0, plug.b * 10.0, plug.b);
    Ok(a_axis
        .iter()
        .flat_map(|&a| b_axis.iter().map(move |&b| SircParams { a, b }))
        .collect())
}

/// 1600 even samples of `[0, 2 pi]` plus `pi/2`, `pi` and `3 pi / 2`.
pub fn linear_angle_grid() -> Vec<f64> {
    let mut angles = linspace(0.0, 2.0 * PI, ANGLE_SAMPLES);
    angles.extend([PI / 2.0, PI, 1.5 * PI]);
    angles.sort_by(f64::total_cmp);
    angles
}

/// `cos(angle) s1 + sin(angle) s2`.
pub fn angle_score(s1: f64, s2: f64, angle: f64) -> f64 {
    angle.cos() * s1 + angle.sin() * s2
}

/// SIRC scores in accept-if-low orientation for native (higher = more ID)
/// inputs, in the overflow-safe log form (same ordering, so the same
/// metrics, as the plain product).
pub fn sirc_scores(s1: &[f64], s2: &[f64], s1_max: f64, params: SircParams) -> Vec<f64> {
    s1.iter()
        .zip(s2)
        .map(|(&u, &v)| sirc_log_selector_score(u, v, s1_max, params.a, params.b))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningResult<C> {
    pub best_index: usize,
    pub best: C,
    pub best_value: f64,
    /// Objective value per candidate, in candidate order.
    pub objectives: Vec<f64>,
}

/// Exhaustive arg-min of `objective` over `candidates`; the first candidate
/// wins ties. NaN objectives never win.
pub fn tune_on_eval<C, F>(candidates: &[C], objective: F) -> Result<TuningResult<C>>
where
    C: Clone + Sync,
    F: Fn(&C) -> Result<f64> + Sync,
{
    if candidates.is_empty() {
        return Err(ScodError::invalid("no candidates to tune over"));
    }
    #[cfg(feature = "parallel")]
    let objectives: Vec<f64> = candidates.par_iter().map(&objective).collect::<Result<_>>()?;
    #[cfg(not(feature = "parallel"))]
    let objectives: Vec<f64> = candidates.iter().map(&objective).collect::<Result<_>>()?;
    let mut best_index = 0;
    for (i, &v) in objectives.iter().enumerate() {
        if v < objectives[best_index] || (objectives[best_index].is_nan() && !v.is_nan()) {
            best_index = i;
        }
    }
    Ok(TuningResult {
        best_index,
        best: candidates[best_index].clone(),
        best_value: objectives[best_index],
        objectives,
    })
}

/// Tunes by AuSRT: `scores_for(candidate)` must return one score per entry
/// of `template`, whose origins and losses are reused.
pub fn tune_ausrt<C, F>(
    candidates: &[C],
    template: &[ScoredSample],
    alpha: f64,
    grid: &TprGrid,
    scores_for: F,
) -> Result<TuningResult<C>>
where
    C: Clone + Sync,
    F: Fn(&C) -> Vec<f64> + Sync,
{
    tune_on_eval(candidates, |c| {
        let scores = scores_for(c);
        if scores.len() != template.len() {
            return Err(ScodError::invalid("candidate produced the wrong number of scores"));
        }
        let samples: Vec<ScoredSample> = template
            .iter()
            .zip(&scores)
            .map(|(t, &s)| ScoredSample { score: s, ..*t })
            .collect();
        ausrt(&samples, alpha, grid)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plugin_examples() {
        // mean 0, unbiased std 1
        let v = [-1.0, 1.0, -1.0, 1.0];
        let s = (4.0f64 / 3.0).sqrt();
        let p = sirc_plugin_params(&v).unwrap();
        assert!((p.a + 3.0 * s).abs() < 1e-15 && (p.b - 1.0 / s).abs() < 1e-15);

        let unit = [-0.5f64.sqrt(), 0.5f64.sqrt()];
        let p = sirc_plugin_params(&unit).unwrap();
        assert!((p.a + 3.0).abs() < 1e-12 && (p.b - 1.0).abs() < 1e-12);

        // mean 1, std 2
        let v = [-1.0, 3.0];
        let p = sirc_plugin_params(&v).unwrap();
        let s = 8.0f64.sqrt();
        assert!((p.a - (1.0 - 3.0 * s)).abs() < 1e-15 && (p.b - 1.0 / s).abs() < 1e-15);

        let exact = [1.0 - 2.0 / 2f64.sqrt(), 1.0 + 2.0 / 2f64.sqrt()];
        let p = sirc_plugin_params(&exact).unwrap();
        assert!((p.a + 5.0).abs() < 1e-12 && (p.b - 0.5).abs() < 1e-12);

        assert!(matches!(
            sirc_plugin_params(&[2.0, 2.0, 2.0]),
            Err(ScodError::DegenerateScore(_))
        ));
        assert!(sirc_plugin_params(&[2.0]).is_err());
    }

    #[test]
    fn sirc_grid_shape() {
        let values: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin()).collect();
        let grid = sirc_grid(&values).unwrap();
        assert_eq!(grid.len(), 1681);
        let plug = sirc_plugin_params(&values).unwrap();
        assert!(grid.contains(&plug));
        let (_, std) = mean_std(&values).unwrap();
        let a_min = grid.iter().map(|p| p.a).fold(f64::INFINITY, f64::min);
        let a_max = grid.iter().map(|p| p.a).fold(f64::NEG_INFINITY, f64::max);
        assert!((a_min - (plug.a - 3.0 * std)).abs() < 1e-12);
        assert!((a_max - (plug.a + 3.0 * std)).abs() < 1e-12);
        let b_min = grid.iter().map(|p| p.b).fold(f64::INFINITY, f64::min);
        let b_max = grid.iter().map(|p| p.b).fold(f64::NEG_INFINITY, f64::max);
        assert!((b_min - plug.b / 10.0).abs() < 1e-12 && (b_max - 10.0 * plug.b).abs() < 1e-12);
        assert_eq!(sirc_grid(&values).unwrap(), grid);
    }

    #[test]
    fn angle_grid_shape() {
        let grid = linear_angle_grid();
        assert_eq!(grid.len(), 1603);
        assert!(grid.contains(&(PI / 2.0)));
        assert!(grid.contains(&PI) && grid.contains(&(1.5 * PI)));
        assert_eq!((grid[0], grid[1602]), (0.0, 2.0 * PI));
        assert_eq!(angle_score(0.7, 123.0, 0.0), 0.7);
    }

    #[test]
    fn tuning_rules() {
        let single = tune_on_eval(&[42], |_| Ok(3.0)).unwrap();
        assert_eq!((single.best, single.best_index), (42, 0));
        let ties = tune_on_eval(&[1, 2, 3], |_| Ok(0.5)).unwrap();
        assert_eq!(ties.best, 1);
        let picks = tune_on_eval(&[3.0, 1.0, 2.0, 1.0], |c: &f64| Ok(*c)).unwrap();
        assert_eq!(picks.best_index, 1);
        assert_eq!(picks.objectives, vec![3.0, 1.0, 2.0, 1.0]);
        let nan_first = tune_on_eval(&[f64::NAN, 2.0], |c: &f64| Ok(*c)).unwrap();
        assert_eq!(nan_first.best_index, 1);
        assert!(tune_on_eval::<i32, _>(&[], |_| Ok(0.0)).is_err());
    }
}
