//! Experiment orchestration: single runs, learning-rate sweeps, reports.

mod config;
mod report;

use std::time::Instant;

use rayon::prelude::*;

pub use config::{Algorithm, ExperimentConfig, DEFAULT_LR_GRID};
pub use report::{
    best_by_algorithm, emit_report, read_csv, render_svg, to_csv_string, write_csv, ChartMetric,
    MetricsReport, ReportFormat, CSV_HEADER, FAILED,
};

use crate::baselines::{train_bpr, train_mf, CalibratedModel, Heuristic};
use crate::dataset::{load_ratings, split_train_test, RatingsDataset};
use crate::error::{Error, Result};
use crate::factors::FactorModel;
use crate::listwise::{default_steps, train_zeroshot, MAX_DEFAULT_STEPS};
use crate::metrics::{mae_on, matthew_degree, topk_recommend};
use crate::predictor::Predictor;

/// Default MF epoch count.
pub const DEFAULT_MF_EPOCHS: u64 = 20;

/// A trained model of any algorithm.
pub enum Trained {
    Factors(FactorModel),
    Calibrated(CalibratedModel),
    Heuristic(Heuristic),
}

impl Trained {
    pub fn predictor(&self) -> &dyn Predictor {
        match self {
            Trained::Factors(m) => m,
            Trained::Calibrated(m) => m,
            Trained::Heuristic(h) => h,
        }
    }

    pub fn factors(&self) -> Option<&FactorModel> {
        match self {
            Trained::Factors(m) => Some(m),
            Trained::Calibrated(m) => Some(&m.model),
            Trained::Heuristic(_) => None,
        }
    }
}

/// Step budget used when the config leaves `steps` unset.
pub fn default_steps_for(algorithm: Algorithm, train: &RatingsDataset) -> u64 {
    match algorithm {
        Algorithm::ZeroshotListwise => default_steps(train.n_users(), train.n_items()),
        Algorithm::Mf => DEFAULT_MF_EPOCHS,
        Algorithm::Bpr => (10 * train.len() as u64).min(MAX_DEFAULT_STEPS),
        _ => 0,
    }
}

/// Loads the configured dataset and splits it.
pub fn prepare(cfg: &ExperimentConfig) -> Result<(RatingsDataset, RatingsDataset)> {
    cfg.validate()?;
    let ds = load_ratings(&cfg.dataset, cfg.format, cfg.columns.as_ref(), cfg.scale)?;
    split_train_test(&ds, &cfg.split()?)
}

/// Trains `algorithm` on `train` with learning rate `lr`.
///
/// The zero-shot trainer receives only the grid shape and scale of
/// `train`; its ratings are never passed on.
pub fn train_algorithm(
    cfg: &ExperimentConfig,
    algorithm: Algorithm,
    lr: f64,
    train: &RatingsDataset,
) -> Result<(Trained, u64)> {
    let steps = cfg.steps.unwrap_or_else(|| default_steps_for(algorithm, train));
    let tc = cfg.train_config(lr, steps);
    let trained = match algorithm {
        Algorithm::ZeroshotListwise => {
            Trained::Factors(train_zeroshot(train.n_users(), train.n_items(), &tc, train.scale())?)
        }
        Algorithm::Mf => Trained::Factors(train_mf(train, &tc)?),
        Algorithm::Bpr => Trained::Calibrated(CalibratedModel::fit(train_bpr(train, &tc)?, train)),
        heuristic => Trained::Heuristic(Heuristic::fit(
            train,
            heuristic.heuristic().expect("non-factor algorithms are heuristics"),
            cfg.seed,
        )?),
    };
    Ok((trained, if algorithm.has_factors() { steps } else { 0 }))
}

/// Trains and evaluates one algorithm on an existing split.
pub fn run_on_split(
    cfg: &ExperimentConfig,
    algorithm: Algorithm,
    lr: f64,
    train: &RatingsDataset,
    test: &RatingsDataset,
) -> Result<MetricsReport> {
    let start = Instant::now();
    let (trained, steps) = train_algorithm(cfg, algorithm, lr, train)?;
    let predictor = trained.predictor();
    let mae = mae_on(predictor, test)?;
    let (degree, _) = matthew_degree(predictor, train, cfg.k)?;
    Ok(MetricsReport {
        algorithm: algorithm.to_string(),
        lr,
        dim: cfg.dim,
        steps,
        seed: cfg.seed,
        k: cfg.k,
        mae,
        matthew_degree: degree,
        runtime_ms: start.elapsed().as_millis() as u64,
        failure: None,
    })
}

/// Loads, splits, trains the configured algorithm and evaluates it.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<MetricsReport> {
    let (train, test) = prepare(cfg)?;
    run_on_split(cfg, cfg.algorithm, cfg.learning_rate, &train, &test)
}

/// Reports of a sweep in grid order, with failed points marked.
#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub reports: Vec<MetricsReport>,
    pub errors: Vec<Error>,
}

impl SweepOutcome {
    pub fn is_partial_failure(&self) -> bool {
        !self.errors.is_empty()
    }
}

/// Runs every (algorithm, learning rate) point on one shared split.
///
/// Points execute concurrently; each uses `cfg.seed`, so a point's row does
/// not depend on the grid it appears in. Rows come back algorithm-major in
/// the order given.
pub fn sweep_algorithms(cfg: &ExperimentConfig, algorithms: &[Algorithm]) -> Result<SweepOutcome> {
    if algorithms.is_empty() {
        return Err(Error::usage("no algorithms to sweep"));
    }
    let (train, test) = prepare(cfg)?;
    let grid = cfg.grid();
    let points: Vec<(Algorithm, f64)> = algorithms
        .iter()
        .flat_map(|&a| grid.iter().map(move |&lr| (a, lr)))
        .collect();

    let results: Vec<Result<MetricsReport>> = points
        .par_iter()
        .map(|&(algorithm, lr)| run_on_split(cfg, algorithm, lr, &train, &test))
        .collect();

    let mut outcome = SweepOutcome {
        reports: Vec::with_capacity(results.len()),
        errors: Vec::new(),
    };
    for ((algorithm, lr), result) in points.into_iter().zip(results) {
        match result {
            Ok(report) => outcome.reports.push(report),
            Err(err) => {
                outcome.reports.push(MetricsReport {
                    algorithm: algorithm.to_string(),
                    lr,
                    dim: cfg.dim,
                    steps: cfg.steps.unwrap_or(0),
                    seed: cfg.seed,
                    k: cfg.k,
                    mae: f64::NAN,
                    matthew_degree: f64::NAN,
                    runtime_ms: 0,
                    failure: Some(err.to_string()),
                });
                outcome.errors.push(err);
            }
        }
    }
    Ok(outcome)
}

/// Sweeps the configured algorithm over its learning-rate grid.
pub fn sweep(cfg: &ExperimentConfig) -> Result<SweepOutcome> {
    sweep_algorithms(cfg, &[cfg.algorithm])
}

/// One recommended item, by original id.
#[derive(Debug, Clone, PartialEq)]
pub struct Recommendation {
    pub item: String,
    pub score: f64,
}

/// Top-`cfg.k` items for a user given by original id, excluding the
/// user's training items.
pub fn recommend(cfg: &ExperimentConfig, user: &str) -> Result<Vec<Recommendation>> {
    let (train, _) = prepare(cfg)?;
    let dense = train
        .user_ids()
        .dense(user)
        .ok_or_else(|| Error::data(format!("unknown user `{user}`")))?;
    let (trained, _) = train_algorithm(cfg, cfg.algorithm, cfg.learning_rate, &train)?;
    let predictor = trained.predictor();
    let seen = &train.items_by_user()[dense];
    let items = topk_recommend(predictor, dense, cfg.k, seen)?;
    Ok(items
        .into_iter()
        .map(|item| Recommendation {
            item: train.item_ids().original(item).unwrap_or_default().to_owned(),
            score: predictor.predict(dense, item),
        })
        .collect())
}
