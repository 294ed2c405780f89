//! Shared test helpers: exact brute-force metric oracles and oracle-scored
//! samples from synthetic worlds.
#![allow(dead_code)]

use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use scod::metrics::ScoredSample;
use scod::poscod::{bce_and_gradient, CsmParams, MixtureDataset, MixtureOrigin};
use scod::synthetic::{split_seed, Label, SyntheticWorld};

pub fn q(v: f64) -> BigRational {
    BigRational::from_float(v).expect("finite")
}

pub fn to_f64(v: &BigRational) -> f64 {
    v.to_f64().expect("representable")
}

/// SCOD risk at every observed threshold, computed by a full scan per
/// threshold. `None` where no ID sample is accepted.
fn risks_per_threshold(samples: &[ScoredSample], alpha: &BigRational) -> Vec<(usize, Option<BigRational>)> {
    let m = samples.iter().filter(|s| s.is_id()).count();
    let n = samples.len() - m;
    let one = BigRational::from_integer(1.into());
    let mut out = Vec::new();
    for t in samples {
        let lambda = t.score;
        let (mut k, mut o, mut loss) = (0usize, 0usize, BigRational::zero());
        for s in samples {
            if s.score <= lambda {
                if s.is_id() {
                    k += 1;
                    loss += q(s.loss);
                } else {
                    o += 1;
                }
            }
        }
        let risk = (k > 0).then(|| {
            let rs = loss / BigRational::from_integer(k.into());
            let fpr = if n == 0 {
                BigRational::zero()
            } else {
                BigRational::new(o.into(), n.into())
            };
            (&one - alpha) * rs + alpha * fpr
        });
        out.push((k, risk));
    }
    out
}

/// Exact minimum SCOD risk subject to TPR >= tpr_min.
pub fn oracle_scod_risk(samples: &[ScoredSample], alpha: f64, tpr_min: f64) -> BigRational {
    let m = samples.iter().filter(|s| s.is_id()).count();
    let table = risks_per_threshold(samples, &q(alpha));
    min_feasible(&table, m, tpr_min)
}

/// Feasibility compares the rounded `k/m` with `tpr_min`, so a constraint
/// written as `0.35` admits `7/20`.
fn min_feasible(table: &[(usize, Option<BigRational>)], m: usize, tpr_min: f64) -> BigRational {
    table
        .iter()
        .filter(|(k, r)| r.is_some() && *k as f64 / m as f64 >= tpr_min)
        .map(|(_, r)| r.clone().unwrap())
        .min()
        .expect("some threshold is feasible")
}

/// Exact AuSRT on the empirical grid `k/m`: trapezoid rule divided by the
/// grid span (a single grid point gives its own risk).
pub fn oracle_ausrt(samples: &[ScoredSample], alpha: f64) -> BigRational {
    let m = samples.iter().filter(|s| s.is_id()).count();
    let table = risks_per_threshold(samples, &q(alpha));
    let grid: Vec<BigRational> = (1..=m).map(|k| BigRational::new(k.into(), m.into())).collect();
    let risks: Vec<BigRational> = (1..=m).map(|k| min_feasible(&table, m, k as f64 / m as f64)).collect();
    if m == 1 {
        return risks[0].clone();
    }
    let half = BigRational::new(1.into(), 2.into());
    let mut area = BigRational::zero();
    for i in 1..m {
        area += &half * (&risks[i - 1] + &risks[i]) * (&grid[i] - &grid[i - 1]);
    }
    area / (&grid[m - 1] - &grid[0])
}

/// Pairwise AuROC: ID below OOD counts 1, ties 1/2.
pub fn oracle_auroc(samples: &[ScoredSample]) -> BigRational {
    let (mut num, mut pairs) = (BigRational::zero(), 0usize);
    let half = BigRational::new(1.into(), 2.into());
    for a in samples.iter().filter(|s| s.is_id()) {
        for b in samples.iter().filter(|s| !s.is_id()) {
            pairs += 1;
            if a.score < b.score {
                num += BigRational::from_integer(1.into());
            } else if a.score == b.score {
                num += &half;
            }
        }
    }
    num / BigRational::from_integer(pairs.into())
}

/// Mean over `k = 1..m` of the selective risk when accepting every ID
/// sample scored at most the `k`-th smallest ID score.
pub fn oracle_aurc(samples: &[ScoredSample]) -> BigRational {
    let mut ids: Vec<&ScoredSample> = samples.iter().filter(|s| s.is_id()).collect();
    ids.sort_by(|a, b| a.score.total_cmp(&b.score));
    let m = ids.len();
    let mut total = BigRational::zero();
    for k in 0..m {
        let lambda = ids[k].score;
        let accepted: Vec<&&ScoredSample> = ids.iter().filter(|s| s.score <= lambda).collect();
        let loss: BigRational = accepted.iter().map(|s| q(s.loss)).sum();
        total += loss / BigRational::from_integer(accepted.len().into());
    }
    total / BigRational::from_integer(m.into())
}

/// Exact scores for `n` ID and `n` OOD draws: conditional risk `r`,
/// likelihood ratio `g` (and `ln g`), and the 0/1 loss of the Bayes label
/// on ID rows. ID rows come first.
pub struct OracleScores {
    pub r: Vec<f64>,
    pub g: Vec<f64>,
    pub log_g: Vec<f64>,
    pub losses: Vec<f64>,
    pub features: Vec<Vec<f64>>,
    pub n_id: usize,
}

impl OracleScores {
    pub fn draw(world: &SyntheticWorld, n: usize, seed: u64) -> Self {
        let id = world.sample_id(n, split_seed(seed, 1));
        let ood = world.sample_ood(n, split_seed(seed, 2));
        let mut out = Self {
            r: Vec::with_capacity(2 * n),
            g: Vec::with_capacity(2 * n),
            log_g: Vec::with_capacity(2 * n),
            losses: Vec::with_capacity(n),
            features: Vec::with_capacity(2 * n),
            n_id: n,
        };
        let mut push = |x: &[f64]| {
            let (label, risk) = world.bayes_classify(x).unwrap();
            let lg = world.log_ood_density(x).unwrap() - world.log_id_density(x).unwrap();
            out.r.push(risk);
            out.g.push(lg.exp().min(f64::MAX));
            out.log_g.push(lg);
            out.features.push(x.to_vec());
            label
        };
        let mut losses = Vec::with_capacity(n);
        for s in &id {
            let label = push(&s.features);
            match s.label {
                Label::Class(y) => losses.push(world.loss()[y][label]),
                Label::Ood => unreachable!(),
            }
        }
        for x in &ood {
            push(x);
        }
        out.losses = losses;
        out
    }

    pub fn samples(&self, scores: &[f64]) -> Vec<ScoredSample> {
        scod::metrics::scored_samples(&scores[..self.n_id], &self.losses, &scores[self.n_id..])
    }
}

/// Spearman rank correlation (average ranks for ties).
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0;
            for &k in &idx[i..=j] {
                r[k] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

/// Random corrected-sigmoid parameters and a small mixed dataset.
pub fn random_case(seed: u64) -> (CsmParams, MixtureDataset) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = rng.random_range(1..=8);
    let n = rng.random_range(20..200);
    let mut features = Vec::with_capacity(n);
    let mut origins = Vec::with_capacity(n);
    for i in 0..n {
        features.push((0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect());
        // first two rows pin both origins
        origins.push(match i {
            0 => MixtureOrigin::Id,
            1 => MixtureOrigin::Unlabeled,
            _ if rng.random::<bool>() => MixtureOrigin::Id,
            _ => MixtureOrigin::Unlabeled,
        });
    }
    let theta = (0..=d).map(|_| 0.7 * rng.sample::<f64, _>(StandardNormal)).collect();
    let magnitude = rng.random_range(0.05..2.0);
    let a = if rng.random::<bool>() { magnitude } else { -magnitude };
    (CsmParams::new(theta, a).unwrap(), MixtureDataset::new(features, origins).unwrap())
}

pub fn loss_at(params: &CsmParams, data: &MixtureDataset) -> f64 {
    bce_and_gradient(params, data).unwrap().loss
}

/// Central differences, `h = 1e-6`, over theta and the signed `a`.
pub fn numeric_gradient(params: &CsmParams, data: &MixtureDataset) -> Vec<f64> {
    let h = 1e-6;
    let mut out = Vec::new();
    for i in 0..params.theta().len() {
        let shifted = |delta: f64| {
            let mut t = params.theta().to_vec();
            t[i] += delta;
            loss_at(&CsmParams::new(t, params.a()).unwrap(), data)
        };
        out.push((shifted(h) - shifted(-h)) / (2.0 * h));
    }
    let shifted = |delta: f64| loss_at(&CsmParams::new(params.theta().to_vec(), params.a() + delta).unwrap(), data);
    out.push((shifted(h) - shifted(-h)) / (2.0 * h));
    out
}

pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(b.iter().map(|x| x * x).sum::<f64>().sqrt());
    if scale == 0.0 { diff } else { diff / scale }
}
