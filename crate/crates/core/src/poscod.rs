//! Plugin estimate of the optimal SCOD strategy.
//!
//! The likelihood ratio `g = p_O / p_I` is learned from a labeled ID sample
//! and an unlabeled ID/OOD mixture by fitting the corrected sigmoid
//!
//! ```text
//! p(z = I | x) = 1 / (1 + |a| + exp(theta^T [x; 1]))
//! ```
//!
//! to the shuffled concatenation of both samples. The fitted `|a|` gives back
//! the OOD fraction of the mixture, which rescales the posterior odds into an
//! estimate of `g`. Fixing `a = 0` yields the ordinary logistic model.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ScodError};
use crate::selectors::{calibrate_threshold, linear_score, plugin_conditional_risk, Selector};
use crate::synthetic::{LabeledSample, SyntheticWorld};

/// Lower bound for a recovered OOD prior.
pub const PRIOR_FLOOR: f64 = 1e-3;

const ARMIJO_C: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;
const CHUNK: usize = 2048;

fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Corrected-sigmoid parameters: weights with the bias as the last entry,
/// and the correction `a` (only `|a|` enters the model).
#[derive(Debug, Clone, PartialEq)]
pub struct CsmParams {
    theta: Vec<f64>,
    a: f64,
}

impl CsmParams {
    pub fn new(theta: Vec<f64>, a: f64) -> Result<Self> {
        if theta.is_empty() {
            return Err(ScodError::invalid("theta needs at least the bias entry"));
        }
        if theta.iter().any(|v| !v.is_finite()) || !a.is_finite() {
            return Err(ScodError::invalid("corrected-sigmoid parameters must be finite"));
        }
        Ok(Self { theta, a })
    }

    pub fn zeros(dim: usize, a: f64) -> Self {
        Self {
            theta: vec![0.0; dim + 1],
            a,
        }
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    /// Feature dimension, excluding the bias.
    pub fn dim(&self) -> usize {
        self.theta.len() - 1
    }

    /// `theta^T [x; 1]` for a feature vector without the bias entry.
    fn activation(&self, x: &[f64]) -> f64 {
        let d = self.dim();
        self.theta[..d]
            .iter()
            .zip(x)
            .map(|(w, v)| w * v)
            .sum::<f64>()
            + self.theta[d]
    }

    /// `p(z = I | x)` for a feature vector without the bias entry.
    pub fn id_posterior(&self, x: &[f64]) -> f64 {
        let t = self.activation(x);
        (-log_add_exp(self.a.abs().ln_1p(), t)).exp()
    }

    /// `log(p(z=U|x) / p(z=I|x)) = log(|a| + exp(t))`.
    fn log_odds_unlabeled(&self, x: &[f64]) -> f64 {
        log_add_exp(self.a.abs().ln(), self.activation(x))
    }
}

/// Appends the constant bias coordinate.
pub fn with_bias(x: &[f64]) -> Vec<f64> {
    let mut v = x.to_vec();
    v.push(1.0);
    v
}

fn split_bias<'a>(params: &CsmParams, features_with_bias: &'a [f64]) -> Result<&'a [f64]> {
    if features_with_bias.len() != params.theta.len() {
        return Err(ScodError::invalid(format!(
            "input has {} entries, parameters expect {}",
            features_with_bias.len(),
            params.theta.len()
        )));
    }
    let (x, bias) = features_with_bias.split_at(params.dim());
    if bias[0] != 1.0 {
        return Err(ScodError::invalid("last input entry must be the bias 1"));
    }
    Ok(x)
}

/// `1 / (1 + |a| + exp(theta^T x))` for an input that already carries the bias.
pub fn csm_posterior(params: &CsmParams, features_with_bias: &[f64]) -> Result<f64> {
    let x = split_bias(params, features_with_bias)?;
    Ok(params.id_posterior(x))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MixtureOrigin {
    /// Drawn from the labeled ID sample.
    Id,
    /// Drawn from the unlabeled ID/OOD mixture.
    Unlabeled,
}

/// The shuffled ID-vs-unlabeled training sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureDataset {
    features: Vec<Vec<f64>>,
    origins: Vec<MixtureOrigin>,
    dim: usize,
}

impl MixtureDataset {
    pub fn new(features: Vec<Vec<f64>>, origins: Vec<MixtureOrigin>) -> Result<Self> {
        if features.len() != origins.len() {
            return Err(ScodError::invalid("features and origins differ in length"));
        }
        let dim = features.first().map_or(0, Vec::len);
        if features.iter().any(|f| f.len() != dim) {
            return Err(ScodError::invalid("all feature vectors must share one dimension"));
        }
        if features.iter().flatten().any(|v| !v.is_finite()) {
            return Err(ScodError::invalid("features must be finite"));
        }
        Ok(Self {
            features,
            origins,
            dim,
        })
    }

    /// Concatenates both samples and shuffles the result with `seed`.
    pub fn from_parts(id: &[Vec<f64>], unlabeled: &[Vec<f64>], seed: u64) -> Result<Self> {
        let mut rows: Vec<(Vec<f64>, MixtureOrigin)> = id
            .iter()
            .map(|x| (x.clone(), MixtureOrigin::Id))
            .chain(unlabeled.iter().map(|x| (x.clone(), MixtureOrigin::Unlabeled)))
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rows.shuffle(&mut rng);
        let (features, origins) = rows.into_iter().unzip();
        Self::new(features, origins)
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn count(&self, origin: MixtureOrigin) -> usize {
        self.origins.iter().filter(|&&o| o == origin).count()
    }

    /// Known fraction of unlabeled rows, `n / (n + m)`.
    pub fn pi_u(&self) -> f64 {
        self.count(MixtureOrigin::Unlabeled) as f64 / self.len() as f64
    }

    pub fn rows(&self) -> impl Iterator<Item = (&[f64], MixtureOrigin)> {
        self.features
            .iter()
            .map(Vec::as_slice)
            .zip(self.origins.iter().copied())
    }

    fn check_fittable(&self) -> Result<()> {
        if self.count(MixtureOrigin::Id) == 0 {
            return Err(ScodError::invalid("training sequence has no ID rows"));
        }
        if self.count(MixtureOrigin::Unlabeled) == 0 {
            return Err(ScodError::invalid("training sequence has no unlabeled rows"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BceEval {
    pub loss: f64,
    pub grad_theta: Vec<f64>,
    /// Derivative with respect to the signed `a`; zero at `a = 0`.
    pub grad_a: f64,
    /// Derivative with respect to `|a|` (one-sided at `a = 0`).
    pub grad_abs_a: f64,
}

#[derive(Clone)]
struct Partial {
    loss: f64,
    grad_theta: Vec<f64>,
    grad_big_a: f64,
}

impl Partial {
    fn zero(d: usize) -> Self {
        Self {
            loss: 0.0,
            grad_theta: vec![0.0; d + 1],
            grad_big_a: 0.0,
        }
    }

    fn add(mut self, other: &Partial) -> Self {
        self.loss += other.loss;
        for (a, b) in self.grad_theta.iter_mut().zip(&other.grad_theta) {
            *a += b;
        }
        self.grad_big_a += other.grad_big_a;
        self
    }
}

/// Mean binary cross-entropy of the corrected sigmoid and its exact gradient.
pub fn bce_and_gradient(params: &CsmParams, data: &MixtureDataset) -> Result<BceEval> {
    if data.is_empty() {
        return Err(ScodError::invalid("empty training sequence"));
    }
    if data.dim() != params.dim() {
        return Err(ScodError::invalid(format!(
            "data has dimension {}, parameters {}",
            data.dim(),
            params.dim()
        )));
    }
    let d = params.dim();
    let big_a = params.a.abs();
    let log_one_plus_a = big_a.ln_1p();
    let log_a = big_a.ln();

    // fixed chunking keeps the reduction order independent of thread count
    #[cfg(feature = "parallel")]
    let chunks = data.features.par_chunks(CHUNK).zip(data.origins.par_chunks(CHUNK));
    #[cfg(not(feature = "parallel"))]
    let chunks = data.features.chunks(CHUNK).zip(data.origins.chunks(CHUNK));
    let partials: Vec<Partial> = chunks
        .map(|(xs, zs)| {
            let mut acc = Partial::zero(d);
            for (x, z) in xs.iter().zip(zs) {
                let t = params.activation(x);
                let log_den = log_add_exp(log_one_plus_a, t);
                let q = (t - log_den).exp();
                let inv_den = (-log_den).exp();
                let (loss, dt, d_big_a) = match z {
                    MixtureOrigin::Id => (log_den, q, inv_den),
                    MixtureOrigin::Unlabeled => {
                        let log_odds = log_add_exp(log_a, t);
                        let inv_odds = (-log_odds).exp();
                        (inv_odds.ln_1p(), q - (t - log_odds).exp(), inv_den - inv_odds)
                    }
                };
                acc.loss += loss;
                for (g, v) in acc.grad_theta[..d].iter_mut().zip(x) {
                    *g += dt * v;
                }
                acc.grad_theta[d] += dt;
                acc.grad_big_a += d_big_a;
            }
            acc
        })
        .collect();
    let total = partials
        .iter()
        .fold(Partial::zero(d), |acc, p| acc.add(p));
    let n = data.len() as f64;
    let sign = if params.a > 0.0 {
        1.0
    } else if params.a < 0.0 {
        -1.0
    } else {
        0.0
    };
    Ok(BceEval {
        loss: total.loss / n,
        grad_theta: total.grad_theta.iter().map(|g| g / n).collect(),
        grad_a: sign * total.grad_big_a / n,
        grad_abs_a: total.grad_big_a / n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    /// First trial step of the line search.
    pub step_size: f64,
    pub max_epochs: usize,
    pub grad_tolerance: f64,
    /// Shuffle seed for the ID-vs-unlabeled sequence.
    pub seed: u64,
    /// Standard logistic model: keep `a` at zero.
    pub fix_a_at_zero: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            step_size: 1.0,
            max_epochs: 20_000,
            grad_tolerance: 1e-7,
            seed: 0,
            fix_a_at_zero: false,
        }
    }
}

impl FitConfig {
    pub fn standard(mut self) -> Self {
        self.fix_a_at_zero = true;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0) || !(self.grad_tolerance > 0.0) {
            return Err(ScodError::invalid("step size and gradient tolerance must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub params: CsmParams,
    pub initial_loss: f64,
    pub loss: f64,
    pub epochs: usize,
    pub grad_norm: f64,
    pub converged: bool,
}

/// Norm of the projected gradient over `(theta, |a|)` with `|a| >= 0`: at
/// `|a| = 0` only a descent direction into the feasible side counts.
fn projected_grad_norm(eval: &BceEval, abs_a: Option<f64>) -> f64 {
    let a_part = match abs_a {
        None => 0.0,
        Some(0.0) => eval.grad_abs_a.min(0.0),
        Some(_) => eval.grad_abs_a,
    };
    (eval.grad_theta.iter().map(|g| g * g).sum::<f64>() + a_part * a_part).sqrt()
}

/// Full-batch projected gradient descent on the BCE over `theta` and
/// `A = |a| >= 0`, with an Armijo backtracking line search. Each trial step
/// starts from the Barzilai-Borwein estimate of the previous iteration and
/// is halved until the sufficient-decrease test passes. The optimum may sit
/// on `A = 0`, where `|a|` has a kink; working with `A` directly lets the
/// iterate land there exactly instead of oscillating around it.
pub fn fit_csm(data: &MixtureDataset, config: &FitConfig) -> Result<FitReport> {
    config.validate()?;
    data.check_fittable()?;
    let fix_a = config.fix_a_at_zero;
    let mut params = CsmParams::zeros(data.dim(), if fix_a { 0.0 } else { data.pi_u() });
    let mut eval = bce_and_gradient(&params, data)?;
    let initial_loss = eval.loss;
    let mut step = config.step_size;
    let mut epochs = 0;
    let abs_a = |p: &CsmParams| (!fix_a).then_some(p.a);

    while epochs < config.max_epochs {
        if projected_grad_norm(&eval, abs_a(&params)) <= config.grad_tolerance {
            break;
        }
        let mut trial_step = step;
        let mut accepted = None;
        let mut overflow = None;
        for _ in 0..MAX_HALVINGS {
            let theta: Vec<f64> = params
                .theta
                .iter()
                .zip(&eval.grad_theta)
                .map(|(p, g)| p - trial_step * g)
                .collect();
            let a = if fix_a {
                0.0
            } else {
                (params.a - trial_step * eval.grad_abs_a).max(0.0)
            };
            let candidate = CsmParams { theta, a };
            // squared length of the projected step, divided by the step size
            let moved = candidate
                .theta
                .iter()
                .zip(&params.theta)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                + (candidate.a - params.a).powi(2);
            if moved == 0.0 {
                break;
            }
            let next = bce_and_gradient(&candidate, data)?;
            if !next.loss.is_finite() {
                overflow = Some(next.loss);
                trial_step *= 0.5;
                continue;
            }
            overflow = None;
            if next.loss <= eval.loss - ARMIJO_C * moved / trial_step {
                accepted = Some((candidate, next));
                break;
            }
            trial_step *= 0.5;
        }
        if let Some(loss) = overflow {
            return Err(ScodError::FitDiverged { epoch: epochs, loss });
        }
        // no representable step decreases the loss any further
        let Some((candidate, next)) = accepted else { break };
        epochs += 1;

        // Barzilai-Borwein proposal for the next trial step
        let mut s_dot_s = 0.0;
        let mut s_dot_y = 0.0;
        for i in 0..candidate.theta.len() {
            let s = candidate.theta[i] - params.theta[i];
            s_dot_s += s * s;
            s_dot_y += s * (next.grad_theta[i] - eval.grad_theta[i]);
        }
        if !fix_a {
            let s = candidate.a - params.a;
            s_dot_s += s * s;
            s_dot_y += s * (next.grad_abs_a - eval.grad_abs_a);
        }
        step = if s_dot_y > 0.0 {
            (s_dot_s / s_dot_y).clamp(1e-8, 1e6)
        } else {
            (trial_step * 2.0).min(1e6)
        };
        params = candidate;
        eval = next;
    }
    let grad_norm = projected_grad_norm(&eval, abs_a(&params));
    Ok(FitReport {
        params,
        initial_loss,
        loss: eval.loss,
        epochs,
        grad_norm,
        converged: grad_norm <= config.grad_tolerance,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorEstimate {
    pub value: f64,
    /// Set when the raw estimate fell outside `[PRIOR_FLOOR, 1]`.
    pub clamped: bool,
}

/// OOD fraction of the unlabeled mixture, `1 + |a| - |a| / pi_u`.
pub fn recover_prior(a_hat: f64, pi_u: f64) -> Result<PriorEstimate> {
    if !(pi_u > 0.0 && pi_u < 1.0) {
        return Err(ScodError::invalid(format!("pi_u = {pi_u} outside (0,1)")));
    }
    let a = a_hat.abs();
    let raw = 1.0 + a - a / pi_u;
    let value = raw.clamp(PRIOR_FLOOR, 1.0);
    Ok(PriorEstimate {
        value,
        clamped: value != raw,
    })
}

/// Likelihood-ratio estimate without the additive constant:
/// `p(U|x)/p(I|x) * (1 - pi_u) / (pi_u * pi_o_tr_hat)`.
pub fn estimate_g(
    params: &CsmParams,
    pi_u: f64,
    pi_o_tr_hat: f64,
    features_with_bias: &[f64],
) -> Result<f64> {
    let x = split_bias(params, features_with_bias)?;
    g_from_features(params, pi_u, pi_o_tr_hat, x)
}

fn g_from_features(params: &CsmParams, pi_u: f64, pi_o_tr_hat: f64, x: &[f64]) -> Result<f64> {
    if !(pi_o_tr_hat > 0.0) {
        return Err(ScodError::invalid(format!("pi_o_tr_hat = {pi_o_tr_hat} must be positive")));
    }
    if !(pi_u > 0.0 && pi_u < 1.0) {
        return Err(ScodError::invalid(format!("pi_u = {pi_u} outside (0,1)")));
    }
    let log_scale = (1.0 - pi_u).ln() - pi_u.ln() - pi_o_tr_hat.ln();
    Ok((params.log_odds_unlabeled(x) + log_scale).exp())
}

/// Fitted corrected (or standard) sigmoid together with the quantities
/// needed to turn it into a likelihood-ratio estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodRatioModel {
    pub params: CsmParams,
    pub pi_u: f64,
    pub prior: PriorEstimate,
}

impl LikelihoodRatioModel {
    pub fn new(params: CsmParams, pi_u: f64) -> Result<Self> {
        let prior = recover_prior(params.a(), pi_u)?;
        Ok(Self { params, pi_u, prior })
    }

    pub fn fit(data: &MixtureDataset, config: &FitConfig) -> Result<(Self, FitReport)> {
        let report = fit_csm(data, config)?;
        Ok((Self::new(report.params.clone(), data.pi_u())?, report))
    }

    /// `g_hat(x)` for features without the bias entry.
    pub fn g(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.params.dim() {
            return Err(ScodError::invalid(format!(
                "features have dimension {}, model expects {}",
                x.len(),
                self.params.dim()
            )));
        }
        g_from_features(&self.params, self.pi_u, self.prior.value, x)
    }

    pub fn to_json(&self, sigmoid: Sigmoid) -> FittedCsm {
        FittedCsm {
            theta: self.params.theta().to_vec(),
            a: self.params.a(),
            pi_u: self.pi_u,
            pi_o_tr_hat: self.prior.value,
            clamped: self.prior.clamped,
            sigmoid,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Sigmoid {
    #[default]
    Corrected,
    Standard,
}

/// JSON form of a fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedCsm {
    pub theta: Vec<f64>,
    pub a: f64,
    pub pi_u: f64,
    pub pi_o_tr_hat: f64,
    pub clamped: bool,
    #[serde(default)]
    pub sigmoid: Sigmoid,
}

impl FittedCsm {
    pub fn model(&self) -> Result<LikelihoodRatioModel> {
        Ok(LikelihoodRatioModel {
            params: CsmParams::new(self.theta.clone(), self.a)?,
            pi_u: self.pi_u,
            prior: PriorEstimate {
                value: self.pi_o_tr_hat,
                clamped: self.clamped,
            },
        })
    }
}

/// Supplies the ID class posterior `p_I(y | x)`.
pub trait PosteriorSource {
    fn posterior(&self, x: &[f64]) -> Result<Vec<f64>>;
}

impl PosteriorSource for SyntheticWorld {
    fn posterior(&self, x: &[f64]) -> Result<Vec<f64>> {
        SyntheticWorld::posterior(self, x)
    }
}

impl<F> PosteriorSource for F
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    fn posterior(&self, x: &[f64]) -> Result<Vec<f64>> {
        self(x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoscodConfig {
    pub alpha: f64,
    pub tpr_min: f64,
    pub loss: Vec<Vec<f64>>,
    pub fit: FitConfig,
}

/// A learned selective classifier: plugin Bayes classifier plus the
/// calibrated linear selector on `r_hat + beta * g_hat`.
#[derive(Debug, Clone, PartialEq)]
pub struct PoscodModel {
    pub ratio: LikelihoodRatioModel,
    pub selector: Selector,
    pub alpha: f64,
    pub tpr_min: f64,
    pub loss: Vec<Vec<f64>>,
    pub fit: FitReport,
}

impl PoscodModel {
    /// Plugin Bayes label and conditional risk for a posterior vector.
    pub fn classify(&self, posterior: &[f64]) -> Result<(usize, f64)> {
        plugin_conditional_risk(posterior, &self.loss)
    }

    pub fn score_with_posterior(&self, x: &[f64], posterior: &[f64]) -> Result<f64> {
        let (_, r) = self.classify(posterior)?;
        Ok(linear_score(r, self.ratio.g(x)?, self.alpha, self.tpr_min))
    }

    pub fn score<S: PosteriorSource + ?Sized>(&self, x: &[f64], source: &S) -> Result<f64> {
        self.score_with_posterior(x, &source.posterior(x)?)
    }

    /// `Some(label)` when accepted, `None` when rejected.
    pub fn predict<S: PosteriorSource + ?Sized>(&self, x: &[f64], source: &S) -> Result<Option<usize>> {
        let posterior = source.posterior(x)?;
        let score = self.score_with_posterior(x, &posterior)?;
        if score <= self.selector.threshold {
            Ok(Some(self.classify(&posterior)?.0))
        } else {
            Ok(None)
        }
    }
}

/// End-to-end learning of the selective classifier from an ID sample and an
/// unlabeled ID/OOD mixture.
pub fn run_poscod<S: PosteriorSource + ?Sized>(
    id_data: &[LabeledSample],
    mixture: &[Vec<f64>],
    source: &S,
    config: &PoscodConfig,
) -> Result<PoscodModel> {
    if !(0.0..=1.0).contains(&config.alpha) {
        return Err(ScodError::invalid(format!("alpha = {} outside [0,1]", config.alpha)));
    }
    if !(config.tpr_min > 0.0 && config.tpr_min <= 1.0) {
        return Err(ScodError::invalid(format!("tpr_min = {} outside (0,1]", config.tpr_min)));
    }
    let id_features: Vec<Vec<f64>> = id_data.iter().map(|s| s.features.clone()).collect();
    let risks: Vec<f64> = id_features
        .iter()
        .map(|x| plugin_conditional_risk(&source.posterior(x)?, &config.loss).map(|(_, r)| r))
        .collect::<Result<_>>()?;

    let data = MixtureDataset::from_parts(&id_features, mixture, config.fit.seed)?;
    let (ratio, fit) = LikelihoodRatioModel::fit(&data, &config.fit)?;

    let scores: Vec<f64> = id_features
        .iter()
        .zip(&risks)
        .map(|(x, &r)| Ok(linear_score(r, ratio.g(x)?, config.alpha, config.tpr_min)))
        .collect::<Result<_>>()?;
    let selector = calibrate_threshold(&scores, config.tpr_min)?;
    Ok(PoscodModel {
        ratio,
        selector,
        alpha: config.alpha,
        tpr_min: config.tpr_min,
        loss: config.loss.clone(),
        fit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::gaussian_pair_world;

    fn params(theta: &[f64], a: f64) -> CsmParams {
        CsmParams::new(theta.to_vec(), a).unwrap()
    }

    #[test]
    fn posterior_examples() {
        assert_eq!(csm_posterior(&params(&[0.0, 0.0], 0.0), &[3.0, 1.0]).unwrap(), 0.5);
        let third = csm_posterior(&params(&[0.0, 0.0], 1.0), &[3.0, 1.0]).unwrap();
        assert!((third - 1.0 / 3.0).abs() < 1e-15);
        let saturated = csm_posterior(&params(&[1.0, 0.0], 0.2), &[800.0, 1.0]).unwrap();
        assert_eq!(saturated, 0.0);
        let top = csm_posterior(&params(&[1.0, 0.0], 0.2), &[-800.0, 1.0]).unwrap();
        assert!((top - 1.0 / 1.2).abs() < 1e-15);
        assert!(csm_posterior(&params(&[1.0, 0.0], 0.0), &[1.0]).is_err());
        assert!(csm_posterior(&params(&[1.0, 0.0], 0.0), &[1.0, 0.5]).is_err());
    }

    #[test]
    fn balanced_zero_params_give_log_two() {
        let data = MixtureDataset::new(
            vec![vec![1.0], vec![-2.0], vec![0.5], vec![3.0]],
            vec![
                MixtureOrigin::Id,
                MixtureOrigin::Unlabeled,
                MixtureOrigin::Id,
                MixtureOrigin::Unlabeled,
            ],
        )
        .unwrap();
        let eval = bce_and_gradient(&CsmParams::zeros(1, 0.0), &data).unwrap();
        assert!((eval.loss - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(eval.grad_a, 0.0);
    }

    #[test]
    fn prior_recovery_examples() {
        assert_eq!(recover_prior(0.5, 0.5).unwrap().value, 0.5);
        assert_eq!(recover_prior(0.0, 0.3).unwrap(), PriorEstimate { value: 1.0, clamped: false });
        let a = 0.5 * (1.0 - 0.2) / (1.0 - 0.5);
        assert!((a - 0.8f64).abs() < 1e-15);
        assert!((recover_prior(a, 0.5).unwrap().value - 0.2).abs() < 1e-12);
        assert_eq!(recover_prior(-0.5, 0.5).unwrap().value, 0.5);
        let floor = recover_prior(5.0, 0.5).unwrap();
        assert_eq!(floor, PriorEstimate { value: PRIOR_FLOOR, clamped: true });
        assert!(recover_prior(0.1, 1.0).is_err());
    }

    #[test]
    fn g_examples() {
        let p = params(&[0.0, 0.0], 0.0);
        assert!((estimate_g(&p, 0.5, 0.5, &[1.7, 1.0]).unwrap() - 2.0).abs() < 1e-14);
        assert!(estimate_g(&p, 0.5, 0.0, &[1.7, 1.0]).is_err());

        // as p(z=I|x) -> 1/(1+|a|), g_hat approaches its floor |a| * scale
        let p = params(&[1.0, 0.0], 0.3);
        let scale = (1.0 - 0.4) / (0.4 * 0.7);
        for x in [-5.0, -20.0, -200.0] {
            let g = estimate_g(&p, 0.4, 0.7, &[x, 1.0]).unwrap();
            assert!(g >= 0.3 * scale * (1.0 - 1e-15), "x = {x}");
            let post = csm_posterior(&p, &[x, 1.0]).unwrap();
            assert!(1.0 - post >= 0.3 * post * (1.0 - 1e-15));
        }
        let far = estimate_g(&p, 0.4, 0.7, &[-200.0, 1.0]).unwrap();
        assert!((far - 0.3 * scale).abs() < 1e-12);
    }

    #[test]
    fn fit_rejects_missing_partitions() {
        let only_id = MixtureDataset::from_parts(&[vec![0.0], vec![1.0]], &[], 1).unwrap();
        assert!(matches!(
            fit_csm(&only_id, &FitConfig::default()),
            Err(ScodError::InvalidArgument(_))
        ));
        let only_u = MixtureDataset::from_parts(&[], &[vec![0.0]], 1).unwrap();
        assert!(fit_csm(&only_u, &FitConfig::default()).is_err());
    }

    #[test]
    fn standard_fit_keeps_a_at_zero() {
        let world = gaussian_pair_world(vec![0.0], vec![2.0], vec![vec![1.0]]).unwrap();
        let id: Vec<Vec<f64>> = world.sample_id(2000, 1).into_iter().map(|s| s.features).collect();
        let mix = world.sample_mixture(2000, 0.5, 2).unwrap();
        let data = MixtureDataset::from_parts(&id, &mix, 3).unwrap();
        let report = fit_csm(&data, &FitConfig::default().standard()).unwrap();
        assert_eq!(report.params.a(), 0.0);
        assert!(report.loss <= report.initial_loss);
        let corrected = fit_csm(&data, &FitConfig::default()).unwrap();
        assert!(corrected.loss <= report.loss + 1e-12);
        assert!(corrected.converged);
    }

    #[test]
    fn shuffle_is_seeded() {
        let id: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
        let u: Vec<Vec<f64>> = (20..40).map(|i| vec![i as f64]).collect();
        let a = MixtureDataset::from_parts(&id, &u, 5).unwrap();
        let b = MixtureDataset::from_parts(&id, &u, 5).unwrap();
        let c = MixtureDataset::from_parts(&id, &u, 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.pi_u(), 0.5);
    }
}
