//! Browser bindings for the interactive demo page in `www/`.
//!
//! Three operations, each returning a JSON string:
//!
//! * [`compare_selectors`]: SCOD risk curves of single scores, SIRC and the
//!   linear selector on a random 2-D world;
//! * [`fit_likelihood_ratio`]: corrected vs standard sigmoid fitted on an
//!   ID sample plus an unlabeled mixture, against the closed form;
//! * [`selector_map`]: accept/reject regions of the calibrated linear
//!   selector over the plane.
//!
//! The `*_json` functions hold the logic and run natively in tests; the
//! `#[wasm_bindgen]` wrappers only convert errors.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use scod::metrics::{ausrt_standard_error, scod_curve, scored_samples, ScoredSample, TprGrid};
use scod::poscod::{FitConfig, LikelihoodRatioModel, MixtureDataset};
use scod::selectors::{calibrate_threshold, linear_scores, sirc_log_selector_score};
use scod::synthetic::{gaussian_pair_world, random_world, split_seed, Label, SyntheticWorld};
use scod::tuning::sirc_plugin_params;
use scod::{ausrt, Result, ScodError};

const MAX_SAMPLES: usize = 50_000;
const SCATTER_POINTS: usize = 300;

fn check_sizes(n: usize, classes: usize) -> Result<()> {
    if !(2..=MAX_SAMPLES).contains(&n) {
        return Err(ScodError::InvalidArgument(format!("sample size must be in 2..={MAX_SAMPLES}")));
    }
    if !(1..=10).contains(&classes) {
        return Err(ScodError::InvalidArgument("classes must be in 1..=10".into()));
    }
    Ok(())
}

#[derive(Serialize)]
struct Point {
    x: f64,
    y: f64,
    ood: bool,
}

#[derive(Serialize)]
struct CurveSummary {
    name: &'static str,
    ausrt: f64,
    ausrt_se: f64,
    /// `[tpr_min, scod_risk]` pairs on 101 evenly spaced constraints.
    curve: Vec<[f64; 2]>,
}

#[derive(Serialize)]
struct Comparison {
    alpha: f64,
    tpr_min: f64,
    curves: Vec<CurveSummary>,
    points: Vec<Point>,
}

struct OracleSample {
    r: Vec<f64>,
    log_g: Vec<f64>,
    losses: Vec<f64>,
    features: Vec<Vec<f64>>,
    n_id: usize,
}

/// `n` ID and `n` OOD points with their exact conditional risk and `ln g`.
fn oracle_sample(world: &SyntheticWorld, n: usize, seed: u64) -> Result<OracleSample> {
    let id = world.sample_id(n, split_seed(seed, 1));
    let ood = world.sample_ood(n, split_seed(seed, 2));
    let mut out = OracleSample {
        r: Vec::with_capacity(2 * n),
        log_g: Vec::with_capacity(2 * n),
        losses: Vec::with_capacity(n),
        features: Vec::with_capacity(2 * n),
        n_id: n,
    };
    for s in &id {
        let (decision, risk) = world.bayes_classify(&s.features)?;
        if let Label::Class(y) = s.label {
            out.losses.push(world.loss()[y][decision]);
        }
        out.r.push(risk);
        out.log_g.push(world.log_ood_density(&s.features)? - world.log_id_density(&s.features)?);
        out.features.push(s.features.clone());
    }
    for x in ood {
        out.r.push(world.bayes_classify(&x)?.1);
        out.log_g.push(world.log_ood_density(&x)? - world.log_id_density(&x)?);
        out.features.push(x);
    }
    Ok(out)
}

fn summarize(name: &'static str, scores: &[f64], o: &OracleSample, alpha: f64) -> Result<CurveSummary> {
    let samples = scored_samples(&scores[..o.n_id], &o.losses, &scores[o.n_id..]);
    let curve = scod_curve(&samples, alpha, &TprGrid::uniform101())?
        .iter()
        .map(|p| [p.tpr_min, p.scod_risk])
        .collect();
    Ok(CurveSummary {
        name,
        ausrt: ausrt(&samples, alpha, &TprGrid::Empirical)?,
        ausrt_se: ausrt_standard_error(&samples, alpha, &TprGrid::Empirical, 10)?,
        curve,
    })
}

fn scatter(o: &OracleSample) -> Vec<Point> {
    let stride = (o.features.len() / SCATTER_POINTS).max(1);
    // interleave so both partitions show up
    (0..o.n_id)
        .step_by(stride)
        .flat_map(|i| [i, i + o.n_id])
        .filter(|&i| i < o.features.len())
        .map(|i| Point {
            x: o.features[i][0],
            y: o.features[i][1],
            ood: i >= o.n_id,
        })
        .collect()
}

pub fn compare_selectors_json(classes: usize, seed: u64, n: usize, alpha: f64, tpr_min: f64) -> Result<String> {
    check_sizes(n, classes)?;
    if !(0.0..=1.0).contains(&alpha) || !(tpr_min > 0.0 && tpr_min <= 1.0) {
        return Err(ScodError::InvalidArgument("alpha must be in [0,1] and tpr_min in (0,1]".into()));
    }
    let world = random_world(2, classes, seed)?;
    let o = oracle_sample(&world, n, split_seed(seed, 10))?;
    let g: Vec<f64> = o.log_g.iter().map(|v| v.exp().min(f64::MAX)).collect();
    let s2_id: Vec<f64> = o.log_g[..o.n_id].iter().map(|v| -v).collect();
    let sirc = sirc_plugin_params(&s2_id)?;
    let sirc_scores: Vec<f64> = o
        .r
        .iter()
        .zip(&o.log_g)
        .map(|(&r, &lg)| sirc_log_selector_score(-r, -lg, 0.0, sirc.a, sirc.b))
        .collect();
    let curves = vec![
        summarize("risk only", &o.r, &o, alpha)?,
        summarize("likelihood ratio only", &g, &o, alpha)?,
        summarize("SIRC (plugin)", &sirc_scores, &o, alpha)?,
        summarize("linear (optimal)", &linear_scores(&o.r, &g, alpha, tpr_min), &o, alpha)?,
    ];
    to_string(&Comparison {
        alpha,
        tpr_min,
        curves,
        points: scatter(&o),
    })
}

#[derive(Serialize)]
struct FittedSummary {
    theta: Vec<f64>,
    a: f64,
    pi_o_tr_hat: f64,
    epochs: usize,
    posterior_mae: f64,
    ausrt: f64,
}

#[derive(Serialize)]
struct FitComparison {
    pi_o_tr: f64,
    pi_u: f64,
    truth: FittedSummary,
    corrected: FittedSummary,
    standard: FittedSummary,
}

pub fn fit_likelihood_ratio_json(pi_o_tr: f64, n: usize, seed: u64) -> Result<String> {
    check_sizes(n, 1)?;
    if !(pi_o_tr > 0.0 && pi_o_tr <= 1.0) {
        return Err(ScodError::InvalidArgument("pi_o_tr must be in (0,1]".into()));
    }
    let world = gaussian_pair_world(vec![0.0, 0.0], vec![2.0, 1.0], vec![vec![1.0, 0.0], vec![0.3, 0.8]])?;
    let id: Vec<Vec<f64>> = world
        .sample_id(n, split_seed(seed, 1))
        .into_iter()
        .map(|s| s.features)
        .collect();
    let mixture = world.sample_mixture(n, pi_o_tr, split_seed(seed, 2))?;
    let data = MixtureDataset::from_parts(&id, &mixture, split_seed(seed, 3))?;
    let pi_u = data.pi_u();

    // a single-class world has zero conditional risk, so the selector is
    // driven by g alone and AuSRT reduces to the OOD-acceptance term
    let eval = oracle_sample(&world, n, split_seed(seed, 4))?;
    let eval_ausrt = |g: &dyn Fn(&[f64]) -> Result<f64>| -> Result<f64> {
        let scores: Vec<f64> = eval.features.iter().map(|x| g(x)).collect::<Result<_>>()?;
        let samples: Vec<ScoredSample> = scored_samples(&scores[..eval.n_id], &eval.losses, &scores[eval.n_id..]);
        ausrt(&samples, 0.5, &TprGrid::Empirical)
    };
    let mae = |model: &LikelihoodRatioModel| -> Result<f64> {
        let mut total = 0.0;
        for x in &eval.features {
            total += (model.params.id_posterior(x) - world.mixture_id_posterior(x, pi_u, pi_o_tr)?).abs();
        }
        Ok(total / eval.features.len() as f64)
    };

    let analytic = world.analytic_csm_params(pi_u, pi_o_tr)?;
    let truth = FittedSummary {
        theta: analytic.theta().to_vec(),
        a: analytic.a(),
        pi_o_tr_hat: pi_o_tr,
        epochs: 0,
        posterior_mae: 0.0,
        ausrt: eval_ausrt(&|x| world.likelihood_ratio(x))?,
    };
    let fit = FitConfig {
        max_epochs: 5_000,
        seed,
        ..FitConfig::default()
    };
    let mut fitted = Vec::with_capacity(2);
    for config in [fit, fit.standard()] {
        let (model, report) = LikelihoodRatioModel::fit(&data, &config)?;
        fitted.push(FittedSummary {
            theta: model.params.theta().to_vec(),
            a: model.params.a(),
            pi_o_tr_hat: model.prior.value,
            epochs: report.epochs,
            posterior_mae: mae(&model)?,
            ausrt: eval_ausrt(&|x| model.g(x))?,
        });
    }
    let standard = fitted.pop().expect("two fits");
    let corrected = fitted.pop().expect("two fits");
    to_string(&FitComparison {
        pi_o_tr,
        pi_u,
        truth,
        corrected,
        standard,
    })
}

#[derive(Serialize)]
struct SelectorMap {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
    resolution: usize,
    threshold: f64,
    /// Row-major from `(x_min, y_min)`: predicted class, or -1 when rejected.
    cells: Vec<i32>,
    points: Vec<Point>,
}

pub fn selector_map_json(classes: usize, seed: u64, alpha: f64, tpr_min: f64, resolution: usize) -> Result<String> {
    check_sizes(2000, classes)?;
    if !(4..=200).contains(&resolution) {
        return Err(ScodError::InvalidArgument("resolution must be in 4..=200".into()));
    }
    if !(0.0..=1.0).contains(&alpha) || !(tpr_min > 0.0 && tpr_min <= 1.0) {
        return Err(ScodError::InvalidArgument("alpha must be in [0,1] and tpr_min in (0,1]".into()));
    }
    let world = random_world(2, classes, seed)?;
    let o = oracle_sample(&world, 2000, split_seed(seed, 20))?;
    let g: Vec<f64> = o.log_g.iter().map(|v| v.exp().min(f64::MAX)).collect();
    let scores = linear_scores(&o.r, &g, alpha, tpr_min);
    let selector = calibrate_threshold(&scores[..o.n_id], tpr_min)?;

    let (mut x_min, mut x_max, mut y_min, mut y_max) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for f in &o.features {
        x_min = x_min.min(f[0]);
        x_max = x_max.max(f[0]);
        y_min = y_min.min(f[1]);
        y_max = y_max.max(f[1]);
    }
    let step_x = (x_max - x_min) / resolution as f64;
    let step_y = (y_max - y_min) / resolution as f64;
    let mut cells = Vec::with_capacity(resolution * resolution);
    for j in 0..resolution {
        for i in 0..resolution {
            let x = [x_min + (i as f64 + 0.5) * step_x, y_min + (j as f64 + 0.5) * step_y];
            let (label, r) = world.bayes_classify(&x)?;
            let g = world.likelihood_ratio(&x)?.min(f64::MAX);
            let s = scod::linear_score(r, g, alpha, tpr_min);
            cells.push(if s <= selector.threshold { label as i32 } else { -1 });
        }
    }
    to_string(&SelectorMap {
        x_min,
        x_max,
        y_min,
        y_max,
        resolution,
        threshold: selector.threshold,
        cells,
        points: scatter(&o),
    })
}

fn to_string<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string(value).map_err(|e| ScodError::Data(e.to_string()))
}

fn js(r: Result<String>) -> std::result::Result<String, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn compare_selectors(classes: usize, seed: u32, n: usize, alpha: f64, tpr_min: f64) -> std::result::Result<String, JsError> {
    js(compare_selectors_json(classes, seed as u64, n, alpha, tpr_min))
}

#[wasm_bindgen]
pub fn fit_likelihood_ratio(pi_o_tr: f64, n: usize, seed: u32) -> std::result::Result<String, JsError> {
    js(fit_likelihood_ratio_json(pi_o_tr, n, seed as u64))
}

#[wasm_bindgen]
pub fn selector_map(classes: usize, seed: u32, alpha: f64, tpr_min: f64, resolution: usize) -> std::result::Result<String, JsError> {
    js(selector_map_json(classes, seed as u64, alpha, tpr_min, resolution))
}
