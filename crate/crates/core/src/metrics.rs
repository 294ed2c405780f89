//! Empirical SCOD metrics.
//!
//! Selectors are deterministic thresholds `s(x) <= lambda`. The candidate
//! thresholds are the observed score values; since every rate is a step
//! function of `lambda` that only changes at those values, minimizing over
//! them is the same as minimizing over all reals.

use serde::{Deserialize, Serialize};

use crate::error::{Result, ScodError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Origin {
    Id,
    Ood,
}

/// One evaluation record. `loss` is the classifier's loss on the sample if
/// accepted; OOD rows carry zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredSample {
    pub score: f64,
    pub origin: Origin,
    pub loss: f64,
}

impl ScoredSample {
    pub fn id(score: f64, loss: f64) -> Self {
        Self {
            score,
            origin: Origin::Id,
            loss,
        }
    }

    pub fn ood(score: f64) -> Self {
        Self {
            score,
            origin: Origin::Ood,
            loss: 0.0,
        }
    }

    pub fn is_id(&self) -> bool {
        self.origin == Origin::Id
    }
}

/// Builds records from parallel slices: ID scores with their losses, then OOD scores.
pub fn scored_samples(id_scores: &[f64], id_losses: &[f64], ood_scores: &[f64]) -> Vec<ScoredSample> {
    id_scores
        .iter()
        .zip(id_losses)
        .map(|(&s, &l)| ScoredSample::id(s, l))
        .chain(ood_scores.iter().map(|&s| ScoredSample::ood(s)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub tpr_min: f64,
    pub scod_risk: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rates {
    pub tpr: f64,
    /// Zero when there are no OOD samples; see `has_ood`.
    pub fpr: f64,
    pub has_ood: bool,
    /// `None` when nothing ID is accepted.
    pub selective_risk: Option<f64>,
}

fn validate(samples: &[ScoredSample]) -> Result<(usize, usize)> {
    let mut m = 0;
    for (i, s) in samples.iter().enumerate() {
        if !s.score.is_finite() {
            return Err(ScodError::invalid(format!("score of sample {i} is not finite")));
        }
        if s.is_id() {
            if !(s.loss >= 0.0) || !s.loss.is_finite() {
                return Err(ScodError::invalid(format!("loss of ID sample {i} must be finite and >= 0")));
            }
            m += 1;
        }
    }
    if m == 0 {
        return Err(ScodError::invalid("at least one ID sample is required"));
    }
    Ok((m, samples.len() - m))
}

pub fn empirical_rates(samples: &[ScoredSample], threshold: f64) -> Result<Rates> {
    let (m, n) = validate(samples)?;
    let (mut id_acc, mut ood_acc, mut loss_acc) = (0usize, 0usize, 0.0);
    for s in samples.iter().filter(|s| s.score <= threshold) {
        match s.origin {
            Origin::Id => {
                id_acc += 1;
                loss_acc += s.loss;
            }
            Origin::Ood => ood_acc += 1,
        }
    }
    Ok(Rates {
        tpr: id_acc as f64 / m as f64,
        fpr: if n == 0 { 0.0 } else { ood_acc as f64 / n as f64 },
        has_ood: n > 0,
        selective_risk: (id_acc > 0).then(|| loss_acc / id_acc as f64),
    })
}

/// Cumulative counts at each distinct observed score, ascending.
#[derive(Debug, Clone)]
pub struct ThresholdSweep {
    thresholds: Vec<f64>,
    id_accepted: Vec<usize>,
    ood_accepted: Vec<usize>,
    loss_accepted: Vec<f64>,
    m: usize,
    n: usize,
}

impl ThresholdSweep {
    pub fn new(samples: &[ScoredSample]) -> Result<Self> {
        let (m, n) = validate(samples)?;
        let mut sorted: Vec<&ScoredSample> = samples.iter().collect();
        sorted.sort_by(|a, b| a.score.total_cmp(&b.score));
        let mut sweep = Self {
            thresholds: Vec::new(),
            id_accepted: Vec::new(),
            ood_accepted: Vec::new(),
            loss_accepted: Vec::new(),
            m,
            n,
        };
        let (mut ids, mut oods, mut loss) = (0usize, 0usize, 0.0);
        let mut i = 0;
        while i < sorted.len() {
            let value = sorted[i].score;
            while i < sorted.len() && sorted[i].score == value {
                match sorted[i].origin {
                    Origin::Id => {
                        ids += 1;
                        loss += sorted[i].loss;
                    }
                    Origin::Ood => oods += 1,
                }
                i += 1;
            }
            sweep.thresholds.push(value);
            sweep.id_accepted.push(ids);
            sweep.ood_accepted.push(oods);
            sweep.loss_accepted.push(loss);
        }
        Ok(sweep)
    }

    pub fn num_id(&self) -> usize {
        self.m
    }

    pub fn num_ood(&self) -> usize {
        self.n
    }

    fn objective(&self, j: usize, alpha: f64) -> f64 {
        let k = self.id_accepted[j];
        let risk = self.loss_accepted[j] / k as f64;
        let fpr = if self.n == 0 {
            0.0
        } else {
            self.ood_accepted[j] as f64 / self.n as f64
        };
        (1.0 - alpha) * risk + alpha * fpr
    }

    /// `best[j]` = minimal SCOD risk over thresholds `j..`.
    fn suffix_minima(&self, alpha: f64) -> Vec<f64> {
        let mut best = vec![f64::INFINITY; self.thresholds.len() + 1];
        for j in (0..self.thresholds.len()).rev() {
            let here = if self.id_accepted[j] == 0 {
                f64::INFINITY
            } else {
                self.objective(j, alpha)
            };
            best[j] = here.min(best[j + 1]);
        }
        best
    }

    fn first_feasible(&self, tpr_min: f64) -> usize {
        let m = self.m as f64;
        self.id_accepted
            .partition_point(|&k| k == 0 || (k as f64 / m) < tpr_min)
    }

    pub fn scod_risk(&self, alpha: f64, tpr_min: f64) -> f64 {
        let best = self.suffix_minima(alpha);
        best[self.first_feasible(tpr_min)]
    }

    pub fn curve(&self, alpha: f64, grid: &[f64]) -> Vec<CurvePoint> {
        let best = self.suffix_minima(alpha);
        grid.iter()
            .map(|&t| CurvePoint {
                tpr_min: t,
                scod_risk: best[self.first_feasible(t)],
            })
            .collect()
    }
}

/// Which `tpr_min` values the SCOD risk curve is evaluated at.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TprGrid {
    /// Every achievable empirical TPR `k/m`, `k = 1..m`.
    #[default]
    Empirical,
    /// `points` evenly spaced values over `[0, 1]`, endpoints included. At
    /// `tpr_min = 0` a threshold must still accept at least one ID sample.
    Uniform { points: usize },
    Custom { values: Vec<f64> },
}

impl TprGrid {
    pub fn uniform101() -> Self {
        TprGrid::Uniform { points: 101 }
    }

    pub fn values(&self, num_id: usize) -> Vec<f64> {
        match self {
            TprGrid::Empirical => (1..=num_id).map(|k| k as f64 / num_id as f64).collect(),
            TprGrid::Uniform { points } => {
                let p = (*points).max(2);
                (0..p).map(|i| i as f64 / (p - 1) as f64).collect()
            }
            TprGrid::Custom { values } => values.clone(),
        }
    }

    pub fn describe(&self) -> &'static str {
        match self {
            TprGrid::Empirical => "empirical_tpr_levels",
            TprGrid::Uniform { .. } => "uniform",
            TprGrid::Custom { .. } => "custom",
        }
    }
}

pub fn scod_risk_at_tpr(samples: &[ScoredSample], alpha: f64, tpr_min: f64) -> Result<f64> {
    if !(tpr_min > 0.0 && tpr_min <= 1.0) {
        return Err(ScodError::invalid(format!("tpr_min = {tpr_min} outside (0,1]")));
    }
    Ok(ThresholdSweep::new(samples)?.scod_risk(alpha, tpr_min))
}

pub fn scod_curve(samples: &[ScoredSample], alpha: f64, grid: &TprGrid) -> Result<Vec<CurvePoint>> {
    let sweep = ThresholdSweep::new(samples)?;
    let values = grid.values(sweep.num_id());
    check_grid(&values)?;
    Ok(sweep.curve(alpha, &values))
}

fn check_grid(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(ScodError::invalid("tpr grid is empty"));
    }
    if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(ScodError::invalid("tpr grid values must lie in [0,1]"));
    }
    if values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ScodError::invalid("tpr grid must be strictly increasing"));
    }
    Ok(())
}

/// Trapezoidal area under a curve normalized by its `tpr_min` span. A
/// single-point curve returns that point's risk.
pub fn curve_area(points: &[CurvePoint]) -> f64 {
    match points {
        [] => f64::NAN,
        [only] => only.scod_risk,
        _ => {
            let area: f64 = points
                .windows(2)
                .map(|w| 0.5 * (w[0].scod_risk + w[1].scod_risk) * (w[1].tpr_min - w[0].tpr_min))
                .sum();
            area / (points[points.len() - 1].tpr_min - points[0].tpr_min)
        }
    }
}

pub fn ausrt(samples: &[ScoredSample], alpha: f64, grid: &TprGrid) -> Result<f64> {
    Ok(curve_area(&scod_curve(samples, alpha, grid)?))
}

/// `P(s_id < s_ood) + P(s_id = s_ood) / 2` over all ID x OOD pairs.
pub fn auroc(samples: &[ScoredSample]) -> Result<f64> {
    let mut ood: Vec<f64> = samples
        .iter()
        .filter(|s| !s.is_id())
        .map(|s| s.score)
        .collect();
    let id: Vec<f64> = samples.iter().filter(|s| s.is_id()).map(|s| s.score).collect();
    if id.is_empty() || ood.is_empty() {
        return Err(ScodError::invalid("auroc needs at least one ID and one OOD sample"));
    }
    if samples.iter().any(|s| !s.score.is_finite()) {
        return Err(ScodError::invalid("scores must be finite"));
    }
    ood.sort_by(f64::total_cmp);
    let n = ood.len() as u64;
    let twice_wins: u64 = id
        .iter()
        .map(|&s| {
            let below = ood.partition_point(|&o| o < s) as u64;
            let at_or_below = ood.partition_point(|&o| o <= s) as u64;
            2 * (n - at_or_below) + (at_or_below - below)
        })
        .sum();
    Ok(twice_wins as f64 / (2 * id.len() as u64 * n) as f64)
}

/// Mean selective risk over coverages `k/m`, thresholding at the `k`-th
/// smallest ID score. OOD rows are ignored.
pub fn aurc(samples: &[ScoredSample]) -> Result<f64> {
    let ids: Vec<ScoredSample> = samples.iter().filter(|s| s.is_id()).copied().collect();
    let sweep = ThresholdSweep::new(&ids)?;
    let m = sweep.num_id();
    let mut total = 0.0;
    let mut previous = 0;
    for j in 0..sweep.thresholds.len() {
        let k = sweep.id_accepted[j];
        let risk = sweep.loss_accepted[j] / k as f64;
        total += (k - previous) as f64 * risk;
        previous = k;
    }
    Ok(total / m as f64)
}

/// Batch-means standard error of AuSRT. ID and OOD samples are dealt
/// round-robin into `batches` folds (stratified by origin), AuSRT is computed
/// per fold, and the spread of the fold values is scaled by `1/sqrt(batches)`.
/// The fold count is capped at the number of ID samples.
pub fn ausrt_standard_error(
    samples: &[ScoredSample],
    alpha: f64,
    grid: &TprGrid,
    batches: usize,
) -> Result<f64> {
    let n_id = samples.iter().filter(|s| s.is_id()).count();
    let batches = batches.min(n_id);
    if batches < 2 {
        return Err(ScodError::invalid("need at least two batches, each with an ID sample"));
    }
    let mut folds: Vec<Vec<ScoredSample>> = vec![Vec::new(); batches];
    let (mut next_id, mut next_ood) = (0, 0);
    for s in samples {
        let slot = if s.is_id() { &mut next_id } else { &mut next_ood };
        folds[*slot % batches].push(*s);
        *slot += 1;
    }
    let values: Vec<f64> = folds
        .iter()
        .map(|fold| ausrt(fold, alpha, grid))
        .collect::<Result<_>>()?;
    let mean = values.iter().sum::<f64>() / batches as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (batches - 1) as f64;
    Ok((var / batches as f64).sqrt())
}
