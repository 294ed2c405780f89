//! Gaussian synthetic worlds with exact densities.
//!
//! A [`SyntheticWorld`] is a labeled Gaussian mixture for in-distribution data
//! plus a single Gaussian out-of-distribution component. Everything the
//! optimal selector needs (class posterior, Bayes decision, conditional risk,
//! OOD/ID likelihood ratio) is available in closed form, which makes these
//! worlds the reference oracle for the learned and plugin estimators.
//!
//! All densities are evaluated in log space through the Cholesky factor.

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ScodError};
use crate::poscod::CsmParams;
use crate::selectors::plugin_conditional_risk;

/// Multivariate normal described by its mean and lower-triangular Cholesky factor.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianComponent {
    mean: Vec<f64>,
    cov_factor: Vec<Vec<f64>>,
    log_norm: f64,
}

impl GaussianComponent {
    pub fn new(mean: Vec<f64>, cov_factor: Vec<Vec<f64>>) -> Result<Self> {
        let d = mean.len();
        if d == 0 {
            return Err(ScodError::invalid("gaussian component needs dimension >= 1"));
        }
        if cov_factor.len() != d || cov_factor.iter().any(|row| row.len() != d) {
            return Err(ScodError::invalid(format!(
                "covariance factor must be {d}x{d} to match the mean"
            )));
        }
        for (i, row) in cov_factor.iter().enumerate() {
            if !(row[i] > 0.0) || !row[i].is_finite() {
                return Err(ScodError::invalid(format!(
                    "covariance factor diagonal entry {i} must be strictly positive"
                )));
            }
            if row[i + 1..].iter().any(|&v| v != 0.0) {
                return Err(ScodError::invalid("covariance factor must be lower triangular"));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(ScodError::invalid("covariance factor must be finite"));
            }
        }
        if mean.iter().any(|v| !v.is_finite()) {
            return Err(ScodError::invalid("mean must be finite"));
        }
        let log_det: f64 = (0..d).map(|i| 2.0 * cov_factor[i][i].ln()).sum();
        let log_norm = -0.5 * (d as f64 * (2.0 * PI).ln() + log_det);
        Ok(Self {
            mean,
            cov_factor,
            log_norm,
        })
    }

    /// Isotropic component `N(mean, sigma^2 I)`.
    pub fn isotropic(mean: Vec<f64>, sigma: f64) -> Result<Self> {
        let d = mean.len();
        let factor = (0..d)
            .map(|i| (0..d).map(|j| if i == j { sigma } else { 0.0 }).collect())
            .collect();
        Self::new(mean, factor)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn cov_factor(&self) -> &[Vec<f64>] {
        &self.cov_factor
    }

    /// Solves `L z = x - mean`.
    fn whiten(&self, x: &[f64]) -> Vec<f64> {
        let centered: Vec<f64> = x.iter().zip(&self.mean).map(|(a, b)| a - b).collect();
        forward_solve(&self.cov_factor, &centered)
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        let z = self.whiten(x);
        self.log_norm - 0.5 * z.iter().map(|v| v * v).sum::<f64>()
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let eps: Vec<f64> = (0..self.dim()).map(|_| rng.sample(StandardNormal)).collect();
        self.mean
            .iter()
            .zip(&self.cov_factor)
            .map(|(m, row)| m + row.iter().zip(&eps).map(|(l, e)| l * e).sum::<f64>())
            .collect()
    }
}

/// `L z = b` for lower-triangular `L`.
pub(crate) fn forward_solve(l: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let mut z = vec![0.0; b.len()];
    for i in 0..b.len() {
        let partial: f64 = (0..i).map(|j| l[i][j] * z[j]).sum();
        z[i] = (b[i] - partial) / l[i][i];
    }
    z
}

/// `L^T x = y` for lower-triangular `L`.
pub(crate) fn backward_solve_transpose(l: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let n = y.len();
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let partial: f64 = (i + 1..n).map(|j| l[j][i] * x[j]).sum();
        x[i] = (y[i] - partial) / l[i][i];
    }
    x
}

pub(crate) fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Label from the extended label set: an ID class index or the OOD marker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Class(usize),
    Ood,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub features: Vec<f64>,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdClass {
    pub component: GaussianComponent,
    pub prior: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticWorld {
    id_classes: Vec<IdClass>,
    ood: GaussianComponent,
    loss: Vec<Vec<f64>>,
    shared_covariance: bool,
}

impl SyntheticWorld {
    pub fn new(
        id_classes: Vec<IdClass>,
        ood: GaussianComponent,
        loss: Vec<Vec<f64>>,
        shared_covariance: bool,
    ) -> Result<Self> {
        let k = id_classes.len();
        if k == 0 {
            return Err(ScodError::invalid("world needs at least one ID class"));
        }
        let d = ood.dim();
        if id_classes.iter().any(|c| c.component.dim() != d) {
            return Err(ScodError::invalid("all components must share one dimension"));
        }
        if id_classes.iter().any(|c| !(c.prior > 0.0 && c.prior < 1.0) && k > 1) {
            return Err(ScodError::invalid("class priors must lie in (0,1)"));
        }
        let total: f64 = id_classes.iter().map(|c| c.prior).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(ScodError::invalid(format!("class priors sum to {total}, expected 1")));
        }
        if loss.len() != k || loss.iter().any(|row| row.len() != k) {
            return Err(ScodError::invalid(format!("loss must be a {k}x{k} matrix")));
        }
        for (y, row) in loss.iter().enumerate() {
            for (yp, &v) in row.iter().enumerate() {
                let ok = if y == yp { v == 0.0 } else { v > 0.0 && v.is_finite() };
                if !ok {
                    return Err(ScodError::invalid(format!(
                        "loss[{y}][{yp}] = {v} violates zero-diagonal / positive off-diagonal"
                    )));
                }
            }
        }
        if shared_covariance {
            let reference = ood.cov_factor();
            if id_classes.iter().any(|c| c.component.cov_factor() != reference) {
                return Err(ScodError::invalid(
                    "shared_covariance is set but covariance factors differ",
                ));
            }
        }
        Ok(Self {
            id_classes,
            ood,
            loss,
            shared_covariance,
        })
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let spec: WorldSpec = serde_json::from_str(text).map_err(|e| {
            ScodError::Config(format!(
                "world spec line {} column {}: {}",
                e.line(),
                e.column(),
                e
            ))
        })?;
        spec.build()
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ScodError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn to_spec(&self) -> WorldSpec {
        WorldSpec {
            id_classes: self
                .id_classes
                .iter()
                .map(|c| ClassSpec {
                    mean: c.component.mean().to_vec(),
                    cov_factor: c.component.cov_factor().to_vec(),
                    prior: c.prior,
                })
                .collect(),
            ood: ComponentSpec {
                mean: self.ood.mean().to_vec(),
                cov_factor: self.ood.cov_factor().to_vec(),
            },
            loss: Some(self.loss.clone()),
            shared_covariance: self.shared_covariance,
        }
    }

    pub fn dim(&self) -> usize {
        self.ood.dim()
    }

    pub fn num_classes(&self) -> usize {
        self.id_classes.len()
    }

    pub fn id_classes(&self) -> &[IdClass] {
        &self.id_classes
    }

    pub fn ood(&self) -> &GaussianComponent {
        &self.ood
    }

    pub fn loss(&self) -> &[Vec<f64>] {
        &self.loss
    }

    pub fn shared_covariance(&self) -> bool {
        self.shared_covariance
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(ScodError::invalid(format!(
                "feature vector has dimension {}, world has {}",
                x.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    fn draw_class<R: Rng>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (k, c) in self.id_classes.iter().enumerate() {
            acc += c.prior;
            if u < acc {
                return k;
            }
        }
        self.id_classes.len() - 1
    }

    fn draw_id<R: Rng>(&self, rng: &mut R) -> LabeledSample {
        let k = self.draw_class(rng);
        LabeledSample {
            features: self.id_classes[k].component.sample(rng),
            label: Label::Class(k),
        }
    }

    pub fn sample_id(&self, n: usize, seed: u64) -> Vec<LabeledSample> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| self.draw_id(&mut rng)).collect()
    }

    pub fn sample_ood(&self, n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| self.ood.sample(&mut rng)).collect()
    }

    /// Unlabeled draw where each point is OOD with probability `pi_o_tr`.
    pub fn sample_mixture(&self, n: usize, pi_o_tr: f64, seed: u64) -> Result<Vec<Vec<f64>>> {
        Ok(self
            .sample_mixture_labeled(n, pi_o_tr, seed)?
            .into_iter()
            .map(|s| s.features)
            .collect())
    }

    /// Same draw as [`Self::sample_mixture`] with the hidden origin kept.
    pub fn sample_mixture_labeled(
        &self,
        n: usize,
        pi_o_tr: f64,
        seed: u64,
    ) -> Result<Vec<LabeledSample>> {
        if !(0.0..=1.0).contains(&pi_o_tr) {
            return Err(ScodError::invalid(format!("pi_o_tr = {pi_o_tr} outside [0,1]")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok((0..n)
            .map(|_| {
                let u: f64 = rng.random();
                if u < pi_o_tr {
                    LabeledSample {
                        features: self.ood.sample(&mut rng),
                        label: Label::Ood,
                    }
                } else {
                    self.draw_id(&mut rng)
                }
            })
            .collect())
    }

    /// Per-class `log pi_k + log N_k(x)`.
    fn log_joint(&self, x: &[f64]) -> Vec<f64> {
        self.id_classes
            .iter()
            .map(|c| c.prior.ln() + c.component.log_density(x))
            .collect()
    }

    /// `log p_I(x)`, the ID marginal.
    pub fn log_id_density(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(log_sum_exp(&self.log_joint(x)))
    }

    pub fn log_ood_density(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.ood.log_density(x))
    }

    pub fn posterior(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let joint = self.log_joint(x);
        let norm = log_sum_exp(&joint);
        Ok(joint.iter().map(|j| (j - norm).exp()).collect())
    }

    /// Bayes decision and its conditional risk under the world's loss.
    pub fn bayes_classify(&self, x: &[f64]) -> Result<(usize, f64)> {
        let post = self.posterior(x)?;
        plugin_conditional_risk(&post, &self.loss)
    }

    /// `g(x) = p_O(x) / p_I(x)`.
    pub fn likelihood_ratio(&self, x: &[f64]) -> Result<f64> {
        Ok((self.log_ood_density(x)? - self.log_id_density(x)?).exp())
    }

    /// True `p(z = I | x)` for the ID-vs-unlabeled concatenation with
    /// unlabeled fraction `pi_u` and OOD fraction `pi_o_tr` inside the
    /// unlabeled part.
    pub fn mixture_id_posterior(&self, x: &[f64], pi_u: f64, pi_o_tr: f64) -> Result<f64> {
        let log_id = self.log_id_density(x)?;
        let log_ood = self.log_ood_density(x)?;
        let terms_id = (1.0 - pi_u).ln() + log_id;
        let mut terms = vec![terms_id, pi_u.ln() + (1.0 - pi_o_tr).ln() + log_id];
        if pi_o_tr > 0.0 {
            terms.push(pi_u.ln() + pi_o_tr.ln() + log_ood);
        }
        Ok((terms_id - log_sum_exp(&terms)).exp())
    }

    /// Closed-form corrected-sigmoid parameters for a single-Gaussian ID
    /// world sharing its covariance with the OOD component.
    ///
    /// With `C = L L^T`, `w = C^{-1}(mu_O - mu_I)`:
    /// `theta = [w; ln(pi_u pi_o / (1 - pi_u)) + (mu_I^T C^{-1} mu_I - mu_O^T C^{-1} mu_O) / 2]`
    /// and `a = pi_u (1 - pi_o) / (1 - pi_u)`.
    pub fn analytic_csm_params(&self, pi_u: f64, pi_o_tr: f64) -> Result<CsmParams> {
        if !self.shared_covariance {
            return Err(ScodError::UnsupportedOracle(
                "closed form requires shared_covariance".into(),
            ));
        }
        if self.id_classes.len() != 1 {
            return Err(ScodError::UnsupportedOracle(format!(
                "closed form requires a single ID Gaussian, world has {}",
                self.id_classes.len()
            )));
        }
        if !(pi_u > 0.0 && pi_u < 1.0) {
            return Err(ScodError::invalid(format!("pi_u = {pi_u} outside (0,1)")));
        }
        if !(pi_o_tr > 0.0 && pi_o_tr <= 1.0) {
            return Err(ScodError::invalid(format!(
                "pi_o_tr = {pi_o_tr} outside (0,1]; the bias term is undefined at 0"
            )));
        }
        let l = self.ood.cov_factor();
        let mu_i = self.id_classes[0].component.mean();
        let mu_o = self.ood.mean();
        let prec = |v: &[f64]| backward_solve_transpose(l, &forward_solve(l, v));
        let diff: Vec<f64> = mu_o.iter().zip(mu_i).map(|(o, i)| o - i).collect();
        let mut theta = prec(&diff);
        let quad = |v: &[f64]| {
            let z = forward_solve(l, v);
            z.iter().map(|e| e * e).sum::<f64>()
        };
        let bias = (pi_u * pi_o_tr / (1.0 - pi_u)).ln() + 0.5 * (quad(mu_i) - quad(mu_o));
        theta.push(bias);
        let a = pi_u * (1.0 - pi_o_tr) / (1.0 - pi_u);
        CsmParams::new(theta, a)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ComponentSpec {
    pub mean: Vec<f64>,
    pub cov_factor: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ClassSpec {
    pub mean: Vec<f64>,
    pub cov_factor: Vec<Vec<f64>>,
    pub prior: f64,
}

/// JSON layout of a world description.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct WorldSpec {
    pub id_classes: Vec<ClassSpec>,
    pub ood: ComponentSpec,
    /// Defaults to the 0/1 loss when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub shared_covariance: bool,
}

impl WorldSpec {
    pub fn build(self) -> Result<SyntheticWorld> {
        let k = self.id_classes.len();
        let cfg = |field: String, e: ScodError| ScodError::Config(format!("{field}: {e}"));
        let mut classes = Vec::with_capacity(k);
        for (i, c) in self.id_classes.into_iter().enumerate() {
            let component = GaussianComponent::new(c.mean, c.cov_factor)
                .map_err(|e| cfg(format!("id_classes[{i}]"), e))?;
            classes.push(IdClass {
                component,
                prior: c.prior,
            });
        }
        let ood = GaussianComponent::new(self.ood.mean, self.ood.cov_factor)
            .map_err(|e| cfg("ood".into(), e))?;
        let loss = self.loss.unwrap_or_else(|| zero_one_loss(k));
        SyntheticWorld::new(classes, ood, loss, self.shared_covariance)
            .map_err(|e| cfg("world".into(), e))
    }
}

pub fn zero_one_loss(k: usize) -> Vec<Vec<f64>> {
    (0..k)
        .map(|i| (0..k).map(|j| if i == j { 0.0 } else { 1.0 }).collect())
        .collect()
}

/// Single ID Gaussian and an OOD Gaussian sharing covariance `L L^T`, the
/// setting in which the corrected sigmoid is exact.
pub fn gaussian_pair_world(
    mu_i: Vec<f64>,
    mu_o: Vec<f64>,
    cov_factor: Vec<Vec<f64>>,
) -> Result<SyntheticWorld> {
    let id = GaussianComponent::new(mu_i, cov_factor.clone())?;
    let ood = GaussianComponent::new(mu_o, cov_factor)?;
    SyntheticWorld::new(
        vec![IdClass {
            component: id,
            prior: 1.0,
        }],
        ood,
        zero_one_loss(1),
        true,
    )
}

/// Derives an independent seed for sub-stream `stream` of `seed` (splitmix64).
pub fn split_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Random world used by tests, benches and the demo: `k` isotropic ID
/// classes placed around the origin and one OOD component offset from them.
pub fn random_world(d: usize, k: usize, seed: u64) -> Result<SyntheticWorld> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigma = 1.0;
    let mut classes = Vec::with_capacity(k);
    let raw: Vec<f64> = (0..k).map(|_| 0.5 + rng.random::<f64>()).collect();
    let total: f64 = raw.iter().sum();
    for w in raw.iter().take(k) {
        let mean: Vec<f64> = (0..d).map(|_| 2.0 * rng.sample::<f64, _>(StandardNormal)).collect();
        classes.push(IdClass {
            component: GaussianComponent::isotropic(mean, sigma)?,
            prior: w / total,
        });
    }
    let ood_mean: Vec<f64> = (0..d)
        .map(|_| 2.5 + rng.sample::<f64, _>(StandardNormal))
        .collect();
    let ood = GaussianComponent::isotropic(ood_mean, 1.5 * sigma)?;
    SyntheticWorld::new(classes, ood, zero_one_loss(k), false)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn symmetric_world() -> SyntheticWorld {
        SyntheticWorld::new(
            vec![
                IdClass {
                    component: GaussianComponent::isotropic(vec![-1.0], 1.0).unwrap(),
                    prior: 0.5,
                },
                IdClass {
                    component: GaussianComponent::isotropic(vec![1.0], 1.0).unwrap(),
                    prior: 0.5,
                },
            ],
            GaussianComponent::isotropic(vec![4.0], 1.0).unwrap(),
            zero_one_loss(2),
            true,
        )
        .unwrap()
    }

    fn one_class_world(mu_i: f64, mu_o: f64) -> SyntheticWorld {
        SyntheticWorld::new(
            vec![IdClass {
                component: GaussianComponent::isotropic(vec![mu_i], 1.0).unwrap(),
                prior: 1.0,
            }],
            GaussianComponent::isotropic(vec![mu_o], 1.0).unwrap(),
            zero_one_loss(1),
            true,
        )
        .unwrap()
    }

    #[test]
    fn empty_draw() {
        assert!(symmetric_world().sample_id(0, 7).is_empty());
    }

    #[test]
    fn sampling_is_deterministic() {
        let w = symmetric_world();
        assert_eq!(w.sample_id(5, 3), w.sample_id(5, 3));
        assert_ne!(w.sample_id(5, 3), w.sample_id(5, 4));
    }

    #[test]
    fn class_frequencies_match_priors() {
        let w = random_world(2, 4, 11).unwrap();
        let n = 100_000;
        let samples = w.sample_id(n, 1);
        for (k, c) in w.id_classes().iter().enumerate() {
            let count = samples
                .iter()
                .filter(|s| s.label == Label::Class(k))
                .count() as f64;
            let sd = (n as f64 * c.prior * (1.0 - c.prior)).sqrt();
            assert!((count - n as f64 * c.prior).abs() < 3.0 * sd, "class {k}");
        }
    }

    #[test]
    fn mixture_fraction_and_degenerate_cases() {
        let w = symmetric_world();
        let n = 100_000;
        let mixed = w.sample_mixture_labeled(n, 0.5, 9).unwrap();
        let ood = mixed.iter().filter(|s| s.label == Label::Ood).count() as f64;
        assert!((ood - 0.5 * n as f64).abs() < 3.0 * (n as f64 * 0.25).sqrt());

        let none = w.sample_mixture_labeled(1000, 0.0, 9).unwrap();
        assert!(none.iter().all(|s| s.label != Label::Ood));
        let all = w.sample_mixture_labeled(1000, 1.0, 9).unwrap();
        assert!(all.iter().all(|s| s.label == Label::Ood));

        assert!(matches!(
            w.sample_mixture(10, 1.5, 0),
            Err(ScodError::InvalidArgument(_))
        ));
        assert!(w.sample_mixture(10, -0.1, 0).is_err());
    }

    #[test]
    fn posterior_examples() {
        let w = symmetric_world();
        let p0 = w.posterior(&[0.0]).unwrap();
        assert!((p0[0] - 0.5).abs() < 1e-15 && (p0[1] - 0.5).abs() < 1e-15);
        let p1 = w.posterior(&[1.0]).unwrap();
        let expected = 1.0 / (1.0 + (-2.0f64).exp());
        assert!((p1[1] - expected).abs() < 1e-12);
        assert!((p1[1] - 0.8808).abs() < 1e-4);
        let far = w.posterior(&[40.0]).unwrap();
        assert!(far[1] > 1.0 - 1e-12);
        assert!(matches!(
            w.posterior(&[0.0, 1.0]),
            Err(ScodError::InvalidArgument(_))
        ));
    }

    #[test]
    fn bayes_examples() {
        let w = symmetric_world();
        let (label, risk) = w.bayes_classify(&[0.0]).unwrap();
        assert_eq!(label, 0);
        assert!((risk - 0.5).abs() < 1e-15);
        let (label, risk) = w.bayes_classify(&[1.0]).unwrap();
        assert_eq!(label, 1);
        assert!((risk - 1.0 / (1.0 + 2.0f64.exp())).abs() < 1e-12);
        assert!((risk - 0.1192).abs() < 1e-4);
        assert!(w.bayes_classify(&[]).is_err());
    }

    #[test]
    fn asymmetric_loss_matches_exhaustive_argmin() {
        let base = symmetric_world();
        let loss = vec![vec![0.0, 1.0], vec![10.0, 0.0]];
        let w = SyntheticWorld::new(
            base.id_classes().to_vec(),
            base.ood().clone(),
            loss.clone(),
            true,
        )
        .unwrap();
        for i in -40..=40 {
            let x = [i as f64 * 0.1];
            let post = w.posterior(&x).unwrap();
            let expected: Vec<f64> = (0..2)
                .map(|yp| (0..2).map(|y| post[y] * loss[y][yp]).sum())
                .collect();
            let best = if expected[1] < expected[0] { 1 } else { 0 };
            let (label, risk) = w.bayes_classify(&x).unwrap();
            assert_eq!(label, best, "x = {}", x[0]);
            assert_eq!(risk, expected[best]);
        }
        // predicting class 1 is 10x costlier when wrong... the cheap class
        // grabs the point the symmetric world would call a tie
        assert_eq!(w.bayes_classify(&[0.0]).unwrap().0, 1);
    }

    #[test]
    fn likelihood_ratio_examples() {
        let same = one_class_world(0.0, 0.0);
        for x in [-3.0, 0.0, 2.5] {
            assert!((same.likelihood_ratio(&[x]).unwrap() - 1.0).abs() < 1e-14);
        }
        let w = one_class_world(0.0, 1.0);
        assert!((w.likelihood_ratio(&[0.0]).unwrap() - (-0.5f64).exp()).abs() < 1e-14);
        assert!((w.likelihood_ratio(&[0.0]).unwrap() - 0.60653).abs() < 1e-5);
        assert!((w.likelihood_ratio(&[0.5]).unwrap() - 1.0).abs() < 1e-14);
        assert!(w.likelihood_ratio(&[1.0]).unwrap() > w.likelihood_ratio(&[0.0]).unwrap());
    }

    #[test]
    fn analytic_params_examples() {
        let w = one_class_world(0.0, 1.0);
        let p = w.analytic_csm_params(0.5, 0.5).unwrap();
        assert!((p.a() - 0.5).abs() < 1e-15);
        assert_eq!(w.analytic_csm_params(0.5, 1.0).unwrap().a(), 0.0);
        let same = one_class_world(0.3, 0.3);
        let p = same.analytic_csm_params(0.4, 0.5).unwrap();
        assert_eq!(p.theta()[0], 0.0);

        assert!(matches!(
            symmetric_world().analytic_csm_params(0.5, 0.5),
            Err(ScodError::UnsupportedOracle(_))
        ));
        let unshared = random_world(2, 1, 3).unwrap();
        assert!(matches!(
            unshared.analytic_csm_params(0.5, 0.5),
            Err(ScodError::UnsupportedOracle(_))
        ));
    }

    #[test]
    fn world_validation() {
        let c = GaussianComponent::isotropic(vec![0.0], 1.0).unwrap();
        let bad_prior = SyntheticWorld::new(
            vec![
                IdClass { component: c.clone(), prior: 0.5 },
                IdClass { component: c.clone(), prior: 0.4 },
            ],
            c.clone(),
            zero_one_loss(2),
            false,
        );
        assert!(bad_prior.is_err());
        let bad_loss = SyntheticWorld::new(
            vec![IdClass { component: c.clone(), prior: 1.0 }],
            c.clone(),
            vec![vec![1.0]],
            false,
        );
        assert!(bad_loss.is_err());
        assert!(GaussianComponent::new(vec![0.0, 0.0], vec![vec![1.0, 0.0], vec![0.0, -1.0]]).is_err());
        assert!(GaussianComponent::new(vec![0.0, 0.0], vec![vec![1.0, 0.5], vec![0.0, 1.0]]).is_err());
        assert!(GaussianComponent::new(vec![0.0], vec![vec![1.0, 0.0]]).is_err());
    }

    #[test]
    fn json_round_trip_and_diagnostics() {
        let text = r#"{"id_classes":[{"mean":[0,0],"cov_factor":[[1,0],[0.5,1]],"prior":1.0}],
            "ood":{"mean":[2,1],"cov_factor":[[1,0],[0.5,1]]},"loss":[[0]],"shared_covariance":true}"#;
        let w = SyntheticWorld::from_json_str(text).unwrap();
        assert!(w.shared_covariance());
        let again = w.to_spec().build().unwrap();
        assert_eq!(w, again);

        let err = SyntheticWorld::from_json_str("{\"id_classes\": [}").unwrap_err();
        assert!(matches!(err, ScodError::Config(ref m) if m.contains("line 1")));
        let err = SyntheticWorld::from_json_str(
            r#"{"id_classes":[{"mean":[0],"cov_factor":[[0]],"prior":1}],"ood":{"mean":[0],"cov_factor":[[1]]}}"#,
        )
        .unwrap_err();
        assert!(matches!(err, ScodError::Config(ref m) if m.contains("id_classes[0]")));
    }
}
