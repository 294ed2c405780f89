//! Experiment orchestration behind the `scod` command-line tool: sampling
//! synthetic tables, fitting the likelihood-ratio model, evaluating score
//! recipes and running one-axis sweeps.
//!
//! Every command writes into an output directory. Data files are CSV with
//! 17 significant digits, reports are pretty-printed JSON, and every file
//! ends with a newline.

pub mod config;
pub mod table;

use std::path::{Path, PathBuf};

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Result, ScodError};
use crate::metrics::{
    aurc, auroc, ausrt, ausrt_standard_error, curve_area, scod_risk_at_tpr, scored_samples,
    CurvePoint, ScoredSample, TprGrid,
};
use crate::poscod::{FitConfig, FittedCsm, LikelihoodRatioModel, MixtureDataset, Sigmoid};
use crate::selectors::{linear_beta, linear_scores, plugin_conditional_risk};
use crate::synthetic::{split_seed, Label, SyntheticWorld};
use crate::tuning::{
    angle_score, linear_angle_grid, sirc_grid, sirc_plugin_params, sirc_scores, tune_ausrt,
    SircParams,
};

pub use config::{ExperimentConfig, Mode, Recipe, TrainSizes};
pub use table::{format_float, SampleRow, SampleTable, Split};

/// Folds used for the batch-means standard error of AuSRT.
pub const SE_BATCHES: usize = 10;

const ROUNDING: &str = "percent = 100 * value rounded half-to-even to 2 decimals";

/// Writes `text` to `dir/name`, creating `dir` and appending a final newline
/// if missing.
pub fn write_output(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let mut body = text.to_string();
    if !body.ends_with('\n') {
        body.push('\n');
    }
    std::fs::write(&path, body)?;
    Ok(path)
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| ScodError::Data(format!("json: {e}")))
}

/// `100 v` with two decimals, ties to even. Ties are judged on the shortest
/// decimal form of `v` (so `0.00125` is a tie), not on its binary expansion.
pub fn percent(value: f64) -> String {
    if !value.is_finite() {
        return value.to_string();
    }
    let sci = format!("{:e}", value.abs());
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i64 = exp.parse().expect("integer exponent");
    let digits: Vec<u8> = mantissa.bytes().filter(u8::is_ascii_digit).map(|b| b - b'0').collect();
    // value = 0.d1d2d3... * 10^(exp + 1); percent hundredths = value * 10^4
    let point = exp + 1 + 4;
    let (keep, rest): (Vec<u8>, Vec<u8>) = if point <= 0 {
        (Vec::new(), std::iter::repeat_n(0, (-point) as usize).chain(digits).collect())
    } else if point as usize >= digits.len() {
        let mut k = digits.clone();
        k.resize(point as usize, 0);
        (k, Vec::new())
    } else {
        (digits[..point as usize].to_vec(), digits[point as usize..].to_vec())
    };
    let mut units: u128 = keep.iter().fold(0, |acc, &d| acc * 10 + d as u128);
    let round_up = match rest.first() {
        None => false,
        Some(&d) if d > 5 => true,
        Some(&d) if d < 5 => false,
        Some(_) => rest[1..].iter().any(|&d| d > 0) || units % 2 == 1,
    };
    if round_up {
        units += 1;
    }
    let sign = if value < 0.0 && units > 0 { "-" } else { "" };
    format!("{sign}{}.{:02}", units / 100, units % 100)
}

// ---------------------------------------------------------------- synth

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOptions {
    pub n_id: usize,
    pub n_ood: usize,
    pub n_mixture: usize,
    pub pi_o_tr: f64,
    pub seed: u64,
}

/// Samples ID, OOD and unlabeled rows from `world`.
///
/// Columns: `loss` (loss of the Bayes decision on ID rows, empty otherwise),
/// features `x0..`, the oracle scores `r_true`, `g_true` (saturating at
/// `f64::MAX`) and `log_g_true`, and the class posterior `p0..`. The three
/// partitions use independent seed streams.
pub fn synth_table(world: &SyntheticWorld, opts: &SynthOptions) -> Result<SampleTable> {
    let d = world.dim();
    let k = world.num_classes();
    let mut columns = vec!["loss".to_string()];
    columns.extend((0..d).map(|i| format!("x{i}")));
    columns.extend(["r_true", "g_true", "log_g_true"].map(String::from));
    columns.extend((0..k).map(|i| format!("p{i}")));
    let mut table = SampleTable::new(columns)?;

    let id = world.sample_id(opts.n_id, split_seed(opts.seed, 1));
    let ood = world.sample_ood(opts.n_ood, split_seed(opts.seed, 2));
    let mixture = world.sample_mixture(opts.n_mixture, opts.pi_o_tr, split_seed(opts.seed, 3))?;

    let row = |prefix: &str, i: usize, split: Split, label: Option<usize>, x: &[f64]| -> Result<SampleRow> {
        let post = world.posterior(x)?;
        let (decision, risk) = plugin_conditional_risk(&post, world.loss())?;
        let log_g = world.log_ood_density(x)? - world.log_id_density(x)?;
        let mut values = Vec::with_capacity(4 + d + k);
        values.push(label.map(|y| world.loss()[y][decision]));
        values.extend(x.iter().map(|&v| Some(v)));
        values.push(Some(risk));
        values.push(Some(log_g.exp().min(f64::MAX)));
        values.push(Some(log_g));
        values.extend(post.iter().map(|&p| Some(p)));
        Ok(SampleRow {
            sample_id: format!("{prefix}-{:06}", i + 1),
            split,
            label: label.map_or(-1, |y| y as i64),
            values,
        })
    };

    for (i, s) in id.iter().enumerate() {
        let y = match s.label {
            Label::Class(y) => y,
            Label::Ood => unreachable!("ID sampler only emits classes"),
        };
        table.push(row("id", i, Split::Id, Some(y), &s.features)?)?;
    }
    for (i, x) in ood.iter().enumerate() {
        table.push(row("ood", i, Split::Ood, None, x)?)?;
    }
    for (i, x) in mixture.iter().enumerate() {
        table.push(row("mix", i, Split::Unlabeled, None, x)?)?;
    }
    Ok(table)
}

pub fn cmd_synth(world_path: &Path, opts: &SynthOptions, out_dir: &Path) -> Result<PathBuf> {
    let world = SyntheticWorld::from_json_file(world_path)?;
    if !(0.0..=1.0).contains(&opts.pi_o_tr) {
        return Err(ScodError::Config(format!("pi_o_tr = {} outside [0,1]", opts.pi_o_tr)));
    }
    let table = synth_table(&world, opts)?;
    write_output(out_dir, "samples.csv", &table.to_csv_string()?)
}

// ------------------------------------------------------------------ fit

/// Contents of `params.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOutput {
    #[serde(flatten)]
    pub model: FittedCsm,
    pub features: Vec<String>,
    pub n_id: usize,
    pub n_unlabeled: usize,
    pub loss: f64,
    pub epochs: usize,
    pub converged: bool,
}

/// Fits the corrected (or standard) sigmoid on the table's ID and
/// UNLABELED rows; `pi_u` is the unlabeled share of those rows.
pub fn fit_table(
    table: &SampleTable,
    features: &[String],
    sigmoid: Sigmoid,
    fit: &FitConfig,
) -> Result<FitOutput> {
    if features.is_empty() {
        return Err(ScodError::Config("no feature columns given".into()));
    }
    for f in features {
        table.column_index(f)?;
    }
    let (n_id, n_unlabeled) = (table.count(Split::Id), table.count(Split::Unlabeled));
    if n_id == 0 || n_unlabeled == 0 {
        return Err(ScodError::Data(format!(
            "fitting needs ID and UNLABELED rows, table has {n_id} ID and {n_unlabeled} UNLABELED"
        )));
    }
    let id = table.features(features, Split::Id)?;
    let unlabeled = table.features(features, Split::Unlabeled)?;
    let fit = match sigmoid {
        Sigmoid::Corrected => FitConfig {
            fix_a_at_zero: false,
            ..*fit
        },
        Sigmoid::Standard => fit.standard(),
    };
    let data = MixtureDataset::from_parts(&id, &unlabeled, fit.seed)?;
    let (model, report) = LikelihoodRatioModel::fit(&data, &fit)?;
    Ok(FitOutput {
        model: model.to_json(sigmoid),
        features: features.to_vec(),
        n_id,
        n_unlabeled,
        loss: report.loss,
        epochs: report.epochs,
        converged: report.converged,
    })
}

pub fn cmd_fit(
    table_path: &Path,
    features: &[String],
    sigmoid: Sigmoid,
    fit: &FitConfig,
    out_dir: &Path,
) -> Result<(FitOutput, PathBuf)> {
    let table = SampleTable::read_path(table_path)?;
    let out = fit_table(&table, features, sigmoid, fit)?;
    let path = write_output(out_dir, "params.json", &to_json(&out)?)?;
    Ok((out, path))
}

pub fn load_fit_config(path: &Path) -> Result<FitConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ScodError::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| {
        ScodError::Config(format!(
            "{} line {} column {}: {e}",
            path.display(),
            e.line(),
            e.column()
        ))
    })
}

fn load_fitted(path: &Path) -> Result<FittedCsm> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ScodError::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| {
        ScodError::Config(format!(
            "{} line {} column {}: {e}",
            path.display(),
            e.line(),
            e.column()
        ))
    })
}

// ----------------------------------------------------------------- eval

/// Objective table of a tuned recipe, in candidate order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TuningTrace {
    pub recipe: String,
    pub parameters: Vec<&'static str>,
    pub candidates: Vec<Vec<f64>>,
    pub ausrt: Vec<f64>,
    pub best_index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecipeResult {
    pub name: String,
    pub kind: &'static str,
    pub params: serde_json::Value,
    pub ausrt: f64,
    pub ausrt_se: f64,
    pub aurc: f64,
    pub auroc: Option<f64>,
    pub scod_risk: f64,
    pub curve: Vec<CurvePoint>,
    pub tuning: Option<TuningTrace>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub alpha: f64,
    pub tpr_min: f64,
    pub seed: u64,
    pub grid: TprGrid,
    pub n_id: usize,
    pub n_ood: usize,
    pub recipes: Vec<RecipeResult>,
}

/// Column access with the declared higher-is-better columns negated.
struct Columns<'a> {
    table: &'a SampleTable,
    negate: &'a [String],
}

impl Columns<'_> {
    fn get(&self, name: &str, split: Split) -> Result<Vec<f64>> {
        let mut v = self.table.column_values(name, split)?;
        if self.negate.iter().any(|c| c == name) {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        Ok(v)
    }

    /// ID values followed by OOD values.
    fn eval(&self, name: &str) -> Result<Vec<f64>> {
        let mut v = self.get(name, Split::Id)?;
        v.extend(self.get(name, Split::Ood)?);
        Ok(v)
    }
}

/// Fitted likelihood-ratio models for the poscod recipes, in recipe order
/// (`None` for other kinds). Models given by `params` are loaded; the rest
/// are fitted on the table's ID and UNLABELED rows.
pub fn resolve_models(table: &SampleTable, config: &ExperimentConfig) -> Result<Vec<Option<FittedCsm>>> {
    config
        .recipes
        .iter()
        .map(|r| match r {
            Recipe::Poscod {
                feature_cols,
                sigmoid,
                params: Some(path),
                ..
            } => {
                let m = load_fitted(path)?;
                if m.theta.len() != feature_cols.len() + 1 {
                    return Err(ScodError::Config(format!(
                        "{} holds {} weights, recipe has {} feature columns",
                        path.display(),
                        m.theta.len(),
                        feature_cols.len()
                    )));
                }
                if m.sigmoid != *sigmoid {
                    return Err(ScodError::Config(format!(
                        "{} was fitted with a different sigmoid",
                        path.display()
                    )));
                }
                Ok(Some(m))
            }
            Recipe::Poscod {
                feature_cols,
                sigmoid,
                params: None,
                ..
            } => Ok(Some(fit_table(table, feature_cols, *sigmoid, &config.fit)?.model)),
            _ => Ok(None),
        })
        .collect()
}

fn with_scores(template: &[ScoredSample], scores: &[f64]) -> Vec<ScoredSample> {
    template
        .iter()
        .zip(scores)
        .map(|(t, &s)| ScoredSample { score: s, ..*t })
        .collect()
}

fn score_recipe(
    recipe: &Recipe,
    model: Option<&FittedCsm>,
    cols: &Columns,
    config: &ExperimentConfig,
    template: &[ScoredSample],
) -> Result<(Vec<f64>, serde_json::Value, Option<TuningTrace>)> {
    let (alpha, tpr_min) = (config.alpha, config.tpr_min);
    match recipe {
        Recipe::Single { col, .. } => Ok((cols.eval(col)?, json!({ "col": col }), None)),
        Recipe::Linear { r_col, g_col, mode, .. } => {
            let (r, g) = (cols.eval(r_col)?, cols.eval(g_col)?);
            match mode {
                Mode::Plugin => Ok((
                    linear_scores(&r, &g, alpha, tpr_min),
                    json!({ "beta": linear_beta(alpha, tpr_min) }),
                    None,
                )),
                Mode::Tuned => {
                    let angles = linear_angle_grid();
                    let result = tune_ausrt(&angles, template, alpha, &config.grid, |&t| {
                        r.iter().zip(&g).map(|(&u, &v)| angle_score(u, v, t)).collect()
                    })?;
                    let angle = result.best;
                    let scores = r.iter().zip(&g).map(|(&u, &v)| angle_score(u, v, angle)).collect();
                    let trace = TuningTrace {
                        recipe: recipe.name(),
                        parameters: vec!["angle"],
                        candidates: angles.iter().map(|&t| vec![t]).collect(),
                        ausrt: result.objectives,
                        best_index: result.best_index,
                    };
                    Ok((scores, json!({ "angle": angle }), Some(trace)))
                }
            }
        }
        Recipe::Sirc {
            s1_col,
            s2_col,
            s1_min,
            mode,
            ..
        } => {
            // internal columns are accept-if-low; SIRC wants higher = more ID
            let s1: Vec<f64> = cols.eval(s1_col)?.iter().map(|v| -v).collect();
            let s2: Vec<f64> = cols.eval(s2_col)?.iter().map(|v| -v).collect();
            let s1_max = -s1_min;
            if let Some(i) = s1.iter().position(|&v| v > s1_max) {
                return Err(ScodError::Data(format!(
                    "column '{s1_col}' value {} at evaluation row {i} is below s1_min = {s1_min}",
                    -s1[i]
                )));
            }
            let s2_id: Vec<f64> = cols.get(s2_col, Split::Id)?.iter().map(|v| -v).collect();
            let (params, trace) = match mode {
                Mode::Plugin => (sirc_plugin_params(&s2_id)?, None),
                Mode::Tuned => {
                    let grid = sirc_grid(&s2_id)?;
                    let result = tune_ausrt(&grid, template, alpha, &config.grid, |p: &SircParams| {
                        sirc_scores(&s1, &s2, s1_max, *p)
                    })?;
                    let trace = TuningTrace {
                        recipe: recipe.name(),
                        parameters: vec!["a", "b"],
                        candidates: grid.iter().map(|p| vec![p.a, p.b]).collect(),
                        ausrt: result.objectives,
                        best_index: result.best_index,
                    };
                    (result.best, Some(trace))
                }
            };
            Ok((
                sirc_scores(&s1, &s2, s1_max, params),
                json!({ "a": params.a, "b": params.b, "s1_max": s1_max }),
                trace,
            ))
        }
        Recipe::Poscod { r_col, feature_cols, .. } => {
            let fitted = model.ok_or_else(|| ScodError::Config("poscod recipe has no model".into()))?;
            let ratio = fitted.model()?;
            let r = cols.eval(r_col)?;
            let mut x = cols.table.features(feature_cols, Split::Id)?;
            x.extend(cols.table.features(feature_cols, Split::Ood)?);
            let g: Vec<f64> = x.iter().map(|x| ratio.g(x)).collect::<Result<_>>()?;
            let params = json!({
                "theta": fitted.theta,
                "a": fitted.a,
                "pi_u": fitted.pi_u,
                "pi_o_tr_hat": fitted.pi_o_tr_hat,
                "clamped": fitted.clamped,
                "sigmoid": fitted.sigmoid,
                "beta": linear_beta(alpha, tpr_min),
            });
            Ok((linear_scores(&r, &g, alpha, tpr_min), params, None))
        }
    }
}

/// Evaluates every recipe on the table's ID and OOD rows, with poscod
/// models already resolved (see [`resolve_models`]).
pub fn evaluate_with_models(
    table: &SampleTable,
    config: &ExperimentConfig,
    models: &[Option<FittedCsm>],
) -> Result<EvalReport> {
    config.validate()?;
    for r in &config.recipes {
        for c in r.columns() {
            table.column_index(c)?;
        }
    }
    let (n_id, n_ood) = (table.count(Split::Id), table.count(Split::Ood));
    if n_id == 0 {
        return Err(ScodError::Data("evaluation needs at least one ID row".into()));
    }
    let cols = Columns {
        table,
        negate: &config.higher_is_better,
    };
    let losses = table.column_values(&config.loss_col, Split::Id)?;
    let template = scored_samples(&vec![0.0; n_id], &losses, &vec![0.0; n_ood]);

    let mut recipes = Vec::with_capacity(config.recipes.len());
    for (recipe, model) in config.recipes.iter().zip(models) {
        let (scores, params, tuning) = score_recipe(recipe, model.as_ref(), &cols, config, &template)?;
        let samples = with_scores(&template, &scores);
        let curve = crate::metrics::scod_curve(&samples, config.alpha, &config.grid)?;
        recipes.push(RecipeResult {
            name: recipe.name(),
            kind: recipe.kind(),
            params,
            ausrt: curve_area(&curve),
            ausrt_se: ausrt_standard_error(&samples, config.alpha, &config.grid, SE_BATCHES)?,
            aurc: aurc(&samples)?,
            auroc: if n_ood > 0 { Some(auroc(&samples)?) } else { None },
            scod_risk: scod_risk_at_tpr(&samples, config.alpha, config.tpr_min)?,
            curve,
            tuning,
        });
    }
    Ok(EvalReport {
        alpha: config.alpha,
        tpr_min: config.tpr_min,
        seed: config.seed,
        grid: config.grid.clone(),
        n_id,
        n_ood,
        recipes,
    })
}

pub fn evaluate(table: &SampleTable, config: &ExperimentConfig) -> Result<EvalReport> {
    let models = resolve_models(table, config)?;
    evaluate_with_models(table, config, &models)
}

/// Direct AuSRT of a score vector; handy for callers that bypass recipes.
pub fn ausrt_of(id_scores: &[f64], id_losses: &[f64], ood_scores: &[f64], alpha: f64, grid: &TprGrid) -> Result<f64> {
    ausrt(&scored_samples(id_scores, id_losses, ood_scores), alpha, grid)
}

#[derive(Serialize)]
struct MetricEntry {
    value: Option<f64>,
    percent: Option<String>,
    convention: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    omitted: Option<String>,
}

impl MetricEntry {
    fn of(value: f64, convention: String) -> Self {
        Self {
            value: Some(value),
            percent: Some(percent(value)),
            convention,
            omitted: None,
        }
    }
}

#[derive(Serialize)]
struct RecipeSummary<'a> {
    name: &'a str,
    kind: &'a str,
    params: &'a serde_json::Value,
    metrics: RecipeMetrics,
}

#[derive(Serialize)]
struct RecipeMetrics {
    ausrt: MetricEntry,
    ausrt_standard_error: MetricEntry,
    aurc: MetricEntry,
    auroc: MetricEntry,
    scod_risk_at_tpr_min: MetricEntry,
}

fn grid_text(grid: &TprGrid) -> String {
    match grid {
        TprGrid::Empirical => "tpr_min in {k/m : k = 1..m}".into(),
        TprGrid::Uniform { points } => format!("{points} evenly spaced tpr_min values in [0,1]"),
        TprGrid::Custom { values } => format!("{} custom tpr_min values", values.len()),
    }
}

impl EvalReport {
    pub fn recipe(&self, name: &str) -> Option<&RecipeResult> {
        self.recipes.iter().find(|r| r.name == name)
    }

    fn summaries(&self) -> Vec<RecipeSummary<'_>> {
        let grid = grid_text(&self.grid);
        self.recipes
            .iter()
            .map(|r| RecipeSummary {
                name: &r.name,
                kind: r.kind,
                params: &r.params,
                metrics: RecipeMetrics {
                    ausrt: MetricEntry::of(
                        r.ausrt,
                        format!(
                            "trapezoidal area of min SCOD risk (alpha = {}) over {grid}, divided by the grid span",
                            self.alpha
                        ),
                    ),
                    ausrt_standard_error: MetricEntry::of(
                        r.ausrt_se,
                        format!("batch means over {SE_BATCHES} folds dealt round-robin within ID and within OOD"),
                    ),
                    aurc: MetricEntry::of(
                        r.aurc,
                        "mean selective risk over coverages k/m, threshold at the k-th smallest ID score, tied scores accepted together"
                            .into(),
                    ),
                    auroc: match r.auroc {
                        Some(v) => MetricEntry::of(v, "P(ID score < OOD score) + P(tie)/2".into()),
                        None => MetricEntry {
                            value: None,
                            percent: None,
                            convention: "P(ID score < OOD score) + P(tie)/2".into(),
                            omitted: Some("no OOD rows in the evaluation table".into()),
                        },
                    },
                    scod_risk_at_tpr_min: MetricEntry::of(
                        r.scod_risk,
                        format!(
                            "min of (1 - alpha) selective risk + alpha FPR over thresholds with TPR >= {}",
                            self.tpr_min
                        ),
                    ),
                },
            })
            .collect()
    }

    pub fn summary_json(&self) -> Result<String> {
        to_json(&json!({
            "alpha": self.alpha,
            "tpr_min": self.tpr_min,
            "seed": self.seed,
            "grid": self.grid,
            "rounding": ROUNDING,
            "score_orientation": "accept if score <= threshold",
            "counts": { "id": self.n_id, "ood": self.n_ood },
            "recipes": self.summaries(),
        }))
    }

    /// One row per recipe and metric: `recipe,metric,value,percent`.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from("recipe,metric,value,percent\n");
        for r in &self.recipes {
            let mut metrics = vec![
                ("ausrt", Some(r.ausrt)),
                ("ausrt_standard_error", Some(r.ausrt_se)),
                ("aurc", Some(r.aurc)),
                ("auroc", r.auroc),
                ("scod_risk_at_tpr_min", Some(r.scod_risk)),
            ];
            for (m, v) in metrics.drain(..) {
                let (value, pct) = match v {
                    Some(v) => (format_float(v), percent(v)),
                    None => (String::new(), String::new()),
                };
                out.push_str(&format!("{},{m},{value},{pct}\n", csv_field(&r.name)));
            }
        }
        out
    }

    pub fn curves_csv(&self) -> String {
        let mut out = String::from("recipe,tpr_min,scod_risk\n");
        for r in &self.recipes {
            let name = csv_field(&r.name);
            for p in &r.curve {
                out.push_str(&format!("{name},{},{}\n", format_float(p.tpr_min), format_float(p.scod_risk)));
            }
        }
        out
    }

    pub fn tuning_json(&self) -> Option<Result<String>> {
        let traces: Vec<&TuningTrace> = self.recipes.iter().filter_map(|r| r.tuning.as_ref()).collect();
        (!traces.is_empty()).then(|| to_json(&traces))
    }

    /// Fixed-width table for the terminal, values in percent.
    pub fn human_summary(&self) -> String {
        let width = self.recipes.iter().map(|r| r.name.len()).max().unwrap_or(6).max(6);
        let mut out = format!(
            "{:<width$}  {:>8}  {:>6}  {:>8}  {:>8}  {:>9}\n",
            "recipe", "AuSRT", "se", "AuRC", "AuROC", "risk@tpr"
        );
        for r in &self.recipes {
            out.push_str(&format!(
                "{:<width$}  {:>8}  {:>6}  {:>8}  {:>8}  {:>9}\n",
                r.name,
                percent(r.ausrt),
                percent(r.ausrt_se),
                percent(r.aurc),
                r.auroc.map(percent).unwrap_or_else(|| "-".into()),
                percent(r.scod_risk)
            ));
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SummaryFormat {
    #[default]
    Json,
    Csv,
}

/// Writes `summary.json` (or `summary.csv`), `curves.csv` and, when a
/// recipe was tuned, `tuning.json`. Returns the written paths.
pub fn write_eval(report: &EvalReport, format: SummaryFormat, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths = vec![match format {
        SummaryFormat::Json => write_output(out_dir, "summary.json", &report.summary_json()?)?,
        SummaryFormat::Csv => write_output(out_dir, "summary.csv", &report.summary_csv())?,
    }];
    paths.push(write_output(out_dir, "curves.csv", &report.curves_csv())?);
    if let Some(t) = report.tuning_json() {
        paths.push(write_output(out_dir, "tuning.json", &t?)?);
    }
    Ok(paths)
}

pub fn cmd_eval(
    table_path: &Path,
    config: &ExperimentConfig,
    format: SummaryFormat,
    out_dir: &Path,
) -> Result<(EvalReport, Vec<PathBuf>)> {
    let table = SampleTable::read_path(table_path)?;
    let report = evaluate(&table, config)?;
    let paths = write_eval(&report, format, out_dir)?;
    Ok((report, paths))
}

// ---------------------------------------------------------------- sweep

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Alpha,
    PiOTr,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Alpha => "alpha",
            SweepAxis::PiOTr => "pi_o_tr",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub recipe: String,
    pub ausrt: f64,
    pub ausrt_se: f64,
    pub aurc: f64,
    pub auroc: Option<f64>,
    pub scod_risk: f64,
}

/// Re-evaluates the base config once per axis value. The evaluation table is
/// the same for every value. Along `alpha` the poscod models are fitted once;
/// along `pi_o_tr` they are refitted on ID and unlabeled training rows drawn
/// from `config.world` with the fit seed.
pub fn sweep(table: &SampleTable, axis: SweepAxis, values: &[f64], config: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(ScodError::Config("sweep needs at least one value".into()));
    }
    let world = match axis {
        SweepAxis::Alpha => None,
        SweepAxis::PiOTr => {
            let path = config
                .world
                .as_ref()
                .ok_or_else(|| ScodError::Config("a pi_o_tr sweep needs \"world\" in the config".into()))?;
            Some(SyntheticWorld::from_json_file(path)?)
        }
    };
    let shared_models = match axis {
        SweepAxis::Alpha => Some(resolve_models(table, config)?),
        SweepAxis::PiOTr => None,
    };

    #[cfg(feature = "parallel")]
    let values_iter = values.par_iter();
    #[cfg(not(feature = "parallel"))]
    let values_iter = values.iter();
    let per_value: Vec<Vec<SweepRow>> = values_iter
        .map(|&v| {
            let mut cfg = config.clone();
            let models = match axis {
                SweepAxis::Alpha => {
                    cfg.alpha = v;
                    cfg.validate()?;
                    shared_models.clone().unwrap_or_default()
                }
                SweepAxis::PiOTr => {
                    if !(0.0..=1.0).contains(&v) {
                        return Err(ScodError::Config(format!("pi_o_tr = {v} outside [0,1]")));
                    }
                    let world = world.as_ref().expect("world loaded for pi_o_tr");
                    let train = synth_table(
                        world,
                        &SynthOptions {
                            n_id: config.train.n_id,
                            n_ood: 0,
                            n_mixture: config.train.n_mixture,
                            pi_o_tr: v,
                            seed: config.fit.seed,
                        },
                    )?;
                    for r in cfg.recipes.iter_mut() {
                        if let Recipe::Poscod { params, .. } = r {
                            *params = None;
                        }
                    }
                    resolve_models(&train, &cfg)?
                }
            };
            let report = evaluate_with_models(table, &cfg, &models)?;
            Ok(report
                .recipes
                .into_iter()
                .map(|r| SweepRow {
                    value: v,
                    recipe: r.name,
                    ausrt: r.ausrt,
                    ausrt_se: r.ausrt_se,
                    aurc: r.aurc,
                    auroc: r.auroc,
                    scod_risk: r.scod_risk,
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(per_value.into_iter().flatten().collect())
}

pub fn sweep_csv(axis: SweepAxis, rows: &[SweepRow]) -> String {
    let mut out = String::from("axis,value,recipe,ausrt,ausrt_standard_error,aurc,auroc,scod_risk_at_tpr_min\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            axis.name(),
            format_float(r.value),
            csv_field(&r.recipe),
            format_float(r.ausrt),
            format_float(r.ausrt_se),
            format_float(r.aurc),
            r.auroc.map(format_float).unwrap_or_default(),
            format_float(r.scod_risk)
        ));
    }
    out
}

pub fn cmd_sweep(
    table_path: &Path,
    axis: SweepAxis,
    values: &[f64],
    config: &ExperimentConfig,
    out_dir: &Path,
) -> Result<(Vec<SweepRow>, PathBuf)> {
    let table = SampleTable::read_path(table_path)?;
    let rows = sweep(&table, axis, values, config)?;
    let path = write_output(out_dir, "sweep.csv", &sweep_csv(axis, &rows))?;
    Ok((rows, path))
}
