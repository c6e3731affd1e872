//! Comparison algorithms: classic matrix factorization, BPR-MF and simple
//! rating heuristics.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::dataset::{RatingsDataset, Scale};
use crate::error::{Error, Result};
use crate::factors::{dot, init_factors, FactorModel, InitMode, InitSpec};
use crate::listwise::TrainConfig;
use crate::predictor::Predictor;
use crate::rng;

/// Squared error `(r - u.v)^2` of one rating.
pub fn mf_loss(u: &[f64], v: &[f64], rating: f64) -> f64 {
    let e = rating - dot(u, v);
    e * e
}

/// Gradients of [`mf_loss`]: `(-2 e v, -2 e u)` with `e = r - u.v`.
pub fn mf_gradient(u: &[f64], v: &[f64], rating: f64) -> (Vec<f64>, Vec<f64>) {
    let e = rating - dot(u, v);
    (
        v.iter().map(|&vk| -2.0 * e * vk).collect(),
        u.iter().map(|&uk| -2.0 * e * uk).collect(),
    )
}

fn ensure_finite(model: &FactorModel, rows: (usize, usize), step: u64) -> Result<()> {
    if model.user(rows.0).iter().chain(model.item(rows.1)).all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::numeric(step, "factor diverged to a non-finite value"))
    }
}

/// Classic matrix factorization by SGD on the squared error.
///
/// `cfg.steps` is the number of epochs; each epoch visits every training
/// rating once in a seeded shuffled order.
pub fn train_mf(train: &RatingsDataset, cfg: &TrainConfig) -> Result<FactorModel> {
    cfg.validate()?;
    let init = InitSpec {
        seed: cfg.seed,
        mode: InitMode::Gaussian,
    };
    let mut model = init_factors(train.n_users(), train.n_items(), cfg.dim, train.scale(), &init)?;
    let mut rng = rng::seeded(rng::derive(cfg.seed, &[0x4d46]));
    let mut order: Vec<usize> = (0..train.len()).collect();
    let lr = cfg.learning_rate;
    let mut step = 0u64;

    for _epoch in 0..cfg.steps {
        order.shuffle(&mut rng);
        for &idx in &order {
            step += 1;
            let r = train.ratings()[idx];
            let (g_u, g_v) = mf_gradient(model.user(r.user), model.item(r.item), r.value);
            for (x, g) in model.user_mut(r.user).iter_mut().zip(&g_u) {
                *x -= lr * g;
            }
            for (x, g) in model.item_mut(r.item).iter_mut().zip(&g_v) {
                *x -= lr * g;
            }
            ensure_finite(&model, (r.user, r.item), step)?;
        }
    }
    Ok(model)
}

/// Logistic probability that a pair scored `x_ij` outranks one scored `x_kt`.
pub fn bpr_pair_prob(x_ij: f64, x_kt: f64) -> f64 {
    let z = x_ij - x_kt;
    // split by sign so exp never overflows
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Index tuple `(i, j, k, t)` with `R_ij > R_kt` in the training data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Quadruple {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub t: usize,
}

/// Rejection attempts allowed per requested quadruple.
pub const BPR_REJECTION_FACTOR: u64 = 100;

/// Draws ordered quadruples by rejection from a rating table.
struct QuadrupleSampler<'a> {
    train: &'a RatingsDataset,
    budget: u64,
}

impl QuadrupleSampler<'_> {
    fn sample(&mut self, rng: &mut rng::Rng) -> Result<Quadruple> {
        let ratings = self.train.ratings();
        loop {
            if self.budget == 0 {
                return Err(Error::data("no strictly ordered rating pair found within the rejection budget"));
            }
            self.budget -= 1;
            let a = ratings[rng.random_range(0..ratings.len())];
            let b = ratings[rng.random_range(0..ratings.len())];
            if a.value == b.value {
                continue;
            }
            let (hi, lo) = if a.value > b.value { (a, b) } else { (b, a) };
            return Ok(Quadruple {
                i: hi.user,
                j: hi.item,
                k: lo.user,
                t: lo.item,
            });
        }
    }
}

/// BPR-MF: ascends `sum ln sigma(U_i.V_j - U_k.V_t)` over sampled quadruples.
pub fn train_bpr(train: &RatingsDataset, cfg: &TrainConfig) -> Result<FactorModel> {
    cfg.validate()?;
    let first = train.ratings().first().map(|r| r.value);
    if train.ratings().iter().all(|r| Some(r.value) == first) {
        return Err(Error::data("BPR needs at least two distinct rating values"));
    }
    let init = InitSpec {
        seed: cfg.seed,
        mode: InitMode::Gaussian,
    };
    let mut model = init_factors(train.n_users(), train.n_items(), cfg.dim, train.scale(), &init)?;
    let mut rng = rng::seeded(rng::derive(cfg.seed, &[0x42_5052]));
    let mut sampler = QuadrupleSampler {
        train,
        budget: BPR_REJECTION_FACTOR.saturating_mul(cfg.steps.max(1)),
    };
    let lr = cfg.learning_rate;
    let dim = cfg.dim;

    for step in 1..=cfg.steps {
        let q = sampler.sample(&mut rng)?;
        let (u_i, v_j) = (model.user(q.i).to_vec(), model.item(q.j).to_vec());
        let (u_k, v_t) = (model.user(q.k).to_vec(), model.item(q.t).to_vec());
        let s = 1.0 - bpr_pair_prob(dot(&u_i, &v_j), dot(&u_k, &v_t));

        // all four deltas come from the pre-update rows
        for d in 0..dim {
            model.user_mut(q.i)[d] += lr * s * v_j[d];
            model.item_mut(q.j)[d] += lr * s * u_i[d];
            model.user_mut(q.k)[d] -= lr * s * v_t[d];
            model.item_mut(q.t)[d] -= lr * s * u_k[d];
        }
        ensure_finite(&model, (q.i, q.j), step)?;
        ensure_finite(&model, (q.k, q.t), step)?;
    }
    Ok(model)
}

/// Affine map `a * x + b` from raw BPR scores to the rating scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineCalibration {
    pub slope: f64,
    pub intercept: f64,
}

impl AffineCalibration {
    /// Least-squares fit of training ratings on model dot products.
    /// Degenerate (constant) scores fall back to the training mean.
    pub fn fit(model: &FactorModel, train: &RatingsDataset) -> Self {
        let n = train.len() as f64;
        let pairs: Vec<(f64, f64)> = train
            .ratings()
            .iter()
            .map(|r| (model.dot(r.user, r.item), r.value))
            .collect();
        let mean_x = pairs.iter().map(|p| p.0).sum::<f64>() / n;
        let mean_y = pairs.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = pairs.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
        let sxy: f64 = pairs.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
        if sxx <= f64::EPSILON * n {
            return AffineCalibration {
                slope: 0.0,
                intercept: mean_y,
            };
        }
        let slope = sxy / sxx;
        AffineCalibration {
            slope,
            intercept: mean_y - slope * mean_x,
        }
    }

    pub fn apply(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }
}

/// BPR model with its rating-scale calibration.
#[derive(Debug, Clone)]
pub struct CalibratedModel {
    pub model: FactorModel,
    pub calibration: AffineCalibration,
}

impl CalibratedModel {
    pub fn fit(model: FactorModel, train: &RatingsDataset) -> Self {
        let calibration = AffineCalibration::fit(&model, train);
        CalibratedModel { model, calibration }
    }
}

impl Predictor for CalibratedModel {
    fn n_users(&self) -> usize {
        self.model.n_users()
    }

    fn n_items(&self) -> usize {
        self.model.n_items()
    }

    fn predict(&self, user: usize, item: usize) -> f64 {
        self.model
            .scale()
            .clamp(self.calibration.apply(self.model.dot(user, item)))
    }
}

/// Non-learning rating predictors used as reference points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeuristicMode {
    GlobalMean,
    UserMean,
    ItemMean,
    RandomUniform,
}

impl HeuristicMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            HeuristicMode::GlobalMean => "global_mean",
            HeuristicMode::UserMean => "user_mean",
            HeuristicMode::ItemMean => "item_mean",
            HeuristicMode::RandomUniform => "random_uniform",
        }
    }
}

impl fmt::Display for HeuristicMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for HeuristicMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            HeuristicMode::GlobalMean,
            HeuristicMode::UserMean,
            HeuristicMode::ItemMean,
            HeuristicMode::RandomUniform,
        ]
        .into_iter()
        .find(|m| m.as_str() == s)
        .ok_or_else(|| Error::usage(format!("unknown heuristic `{s}`")))
    }
}

/// A fitted heuristic. Means are precomputed from the training table.
#[derive(Debug, Clone)]
pub struct Heuristic {
    mode: HeuristicMode,
    seed: u64,
    scale: Scale,
    integer_draws: bool,
    global: f64,
    user_means: Vec<Option<f64>>,
    item_means: Vec<Option<f64>>,
}

fn group_means(n: usize, keyed: impl Iterator<Item = (usize, f64)>) -> Vec<Option<f64>> {
    let mut sums = vec![(0.0, 0usize); n];
    for (key, value) in keyed {
        sums[key].0 += value;
        sums[key].1 += 1;
    }
    sums.into_iter()
        .map(|(s, c)| (c > 0).then(|| s / c as f64))
        .collect()
}

impl Heuristic {
    pub fn fit(train: &RatingsDataset, mode: HeuristicMode, seed: u64) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::data("heuristics need at least one training rating"));
        }
        let ratings = train.ratings();
        Ok(Heuristic {
            mode,
            seed,
            scale: train.scale(),
            integer_draws: train.is_integer_valued(),
            global: train.mean(),
            user_means: group_means(train.n_users(), ratings.iter().map(|r| (r.user, r.value))),
            item_means: group_means(train.n_items(), ratings.iter().map(|r| (r.item, r.value))),
        })
    }

    pub fn mode(&self) -> HeuristicMode {
        self.mode
    }

    fn random_draw(&self, user: usize, item: usize) -> f64 {
        let mut rng = rng::seeded(rng::derive(self.seed, &[user as u64, item as u64]));
        if self.integer_draws {
            let lo = self.scale.min as i64;
            let hi = self.scale.max as i64;
            rng.random_range(lo..=hi) as f64
        } else {
            rng.random_range(self.scale.min..=self.scale.max)
        }
    }
}

impl Predictor for Heuristic {
    fn n_users(&self) -> usize {
        self.user_means.len()
    }

    fn n_items(&self) -> usize {
        self.item_means.len()
    }

    fn predict(&self, user: usize, item: usize) -> f64 {
        match self.mode {
            HeuristicMode::GlobalMean => self.global,
            HeuristicMode::UserMean => self.user_means[user].unwrap_or(self.global),
            HeuristicMode::ItemMean => self.item_means[item].unwrap_or(self.global),
            HeuristicMode::RandomUniform => self.random_draw(user, item),
        }
    }
}

/// One-shot heuristic prediction. Prefer [`Heuristic::fit`] for many calls.
///
/// On integer-valued data `random_uniform` draws whole stars; otherwise it
/// draws from the continuous scale interval.
pub fn heuristic_predict(
    train: &RatingsDataset,
    mode: HeuristicMode,
    user: usize,
    item: usize,
    seed: u64,
) -> Result<f64> {
    if user >= train.n_users() || item >= train.n_items() {
        return Err(Error::usage(format!("index ({user}, {item}) out of range")));
    }
    Ok(Heuristic::fit(train, mode, seed)?.predict(user, item))
}
