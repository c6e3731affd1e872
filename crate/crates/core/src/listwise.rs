//! Zero-shot listwise learning to rank.
//!
//! The model treats the factor dot product `x = U_i . V_j` as a rating
//! value and uses `x` itself as the (unnormalized) frequency of that value,
//! so the joint order-statistic likelihood of the full rating grid becomes
//!
//! ```text
//! L  ∝  prod_{i,j} x_ij ^ x_ij
//! ```
//!
//! Training ascends this likelihood with per-pair SGD. The gradient of
//! `x^x` with respect to `U_i` is
//!
//! ```text
//! x * x^(x-1) * V_j + x^x * ln(x) * V_j  =  x^x (1 + ln x) V_j
//! ```
//!
//! and symmetrically for `V_j`. No observed rating enters either formula,
//! which is why [`train_zeroshot`] only takes the grid shape.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::dataset::Scale;
use crate::error::{Error, Result};
use crate::factors::{dot, init_factors, FactorModel, InitMode, InitSpec};
use crate::rng;

/// Default lower clamp on `x` before taking logarithms.
pub const DEFAULT_EPS: f64 = 1e-3;

/// Upper bound on the default number of listwise SGD steps.
pub const MAX_DEFAULT_STEPS: u64 = 2_000_000;

/// SGD settings shared by the listwise trainer and the baselines.
///
/// For matrix factorization `steps` counts epochs; for the listwise and
/// BPR trainers it counts single-sample updates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub steps: u64,
    pub dim: usize,
    pub seed: u64,
    #[serde(default = "default_eps")]
    pub eps: f64,
}

fn default_eps() -> f64 {
    DEFAULT_EPS
}

impl TrainConfig {
    pub fn new(learning_rate: f64, steps: u64, dim: usize, seed: u64) -> Self {
        TrainConfig {
            learning_rate,
            steps,
            dim,
            seed,
            eps: DEFAULT_EPS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        // lr = 0 is accepted: it reproduces the initialization.
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(Error::usage(format!(
                "learning rate must be finite and non-negative, got {}",
                self.learning_rate
            )));
        }
        if self.dim == 0 {
            return Err(Error::usage("dimension must be at least 1"));
        }
        if !(self.eps > 0.0 && self.eps < (-1.0f64).exp()) {
            return Err(Error::usage(format!("eps must lie in (0, 1/e), got {}", self.eps)));
        }
        Ok(())
    }
}

/// Default step budget: ten samples per grid cell, capped.
pub fn default_steps(n_users: usize, n_items: usize) -> u64 {
    (10 * n_users as u64 * n_items as u64).min(MAX_DEFAULT_STEPS)
}

/// Gradient of `x^x` for one (user, item) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairGradient {
    /// Gradient with respect to the user row.
    pub g_u: Vec<f64>,
    /// Gradient with respect to the item row.
    pub g_v: Vec<f64>,
    /// Clamped dot product the gradient was evaluated at.
    pub x: f64,
}

/// `x^x`, computed as `exp(x ln x)`.
pub fn power_self(x: f64) -> f64 {
    (x * x.ln()).exp()
}

/// `d/dx x^x = x^x (1 + ln x)`.
pub fn gradient_scalar(x: f64) -> f64 {
    power_self(x) * (1.0 + x.ln())
}

/// The same derivative written term by term: `x * x^(x-1) + x^x * ln x`.
pub fn gradient_scalar_two_term(x: f64) -> f64 {
    let ln = x.ln();
    x * ((x - 1.0) * ln).exp() + power_self(x) * ln
}

/// Evaluates the ascent direction of `x^x` at `x = max(u . v, eps)`.
pub fn pair_gradient(u: &[f64], v: &[f64], eps: f64) -> Result<PairGradient> {
    if u.len() != v.len() {
        return Err(Error::usage(format!(
            "factor rows differ in length ({} vs {})",
            u.len(),
            v.len()
        )));
    }
    if u.iter().chain(v).any(|x| !x.is_finite()) {
        return Err(Error::numeric(0, "non-finite factor entry in pair gradient"));
    }
    let x = dot(u, v).max(eps);
    let s = gradient_scalar(x);
    Ok(PairGradient {
        g_u: v.iter().map(|&vk| s * vk).collect(),
        g_v: u.iter().map(|&uk| s * uk).collect(),
        x,
    })
}

/// Log of the listwise likelihood up to its additive constant:
/// `sum_{i,j} x ln x` over every (user, item) pair, with `x >= eps`.
pub fn log_objective(model: &FactorModel, eps: f64) -> f64 {
    let items = model.items();
    (0..model.users().rows())
        .map(|i| {
            let u = model.user(i);
            (0..items.rows())
                .map(|j| {
                    let x = dot(u, items.row(j)).max(eps);
                    x * x.ln()
                })
                .sum::<f64>()
        })
        .sum()
}

/// Projected SGD ascent on a constrained factor model.
#[derive(Debug, Clone)]
pub struct ListwiseTrainer {
    model: FactorModel,
    learning_rate: f64,
    eps: f64,
    steps_taken: u64,
}

impl ListwiseTrainer {
    pub fn new(model: FactorModel, learning_rate: f64, eps: f64) -> Result<Self> {
        if !model.is_constrained() {
            return Err(Error::usage("listwise training needs a constrained model"));
        }
        Ok(ListwiseTrainer {
            model,
            learning_rate,
            eps,
            steps_taken: 0,
        })
    }

    pub fn model(&self) -> &FactorModel {
        &self.model
    }

    pub fn into_model(self) -> FactorModel {
        self.model
    }

    pub fn steps_taken(&self) -> u64 {
        self.steps_taken
    }

    /// One ascent update on pair `(i, j)` followed by projection of both rows.
    pub fn step(&mut self, i: usize, j: usize) -> Result<()> {
        self.steps_taken += 1;
        let step = self.steps_taken;
        let grad = pair_gradient(self.model.user(i), self.model.item(j), self.eps)
            .map_err(|e| match e {
                Error::Numeric { message, .. } => Error::numeric(step, message),
                other => other,
            })?;
        let lr = self.learning_rate;
        for (x, g) in self.model.user_mut(i).iter_mut().zip(&grad.g_u) {
            *x += lr * g;
        }
        for (x, g) in self.model.item_mut(j).iter_mut().zip(&grad.g_v) {
            *x += lr * g;
        }
        self.model.project_user(i);
        self.model.project_item(j);
        if self.model.user(i).iter().chain(self.model.item(j)).any(|x| !x.is_finite()) {
            return Err(Error::numeric(step, format!("non-finite factor after update of ({i}, {j})")));
        }
        Ok(())
    }

    /// One deterministic pass over every pair in row-major order.
    pub fn sweep(&mut self) -> Result<()> {
        for i in 0..self.model.users().rows() {
            for j in 0..self.model.items().rows() {
                self.step(i, j)?;
            }
        }
        Ok(())
    }
}

/// Trains the zero-shot listwise model on an `n_users` x `n_items` grid.
///
/// Pairs are drawn uniformly from the full grid; nothing about observed
/// ratings is available here beyond the grid shape and rating scale.
pub fn train_zeroshot(
    n_users: usize,
    n_items: usize,
    cfg: &TrainConfig,
    scale: Scale,
) -> Result<FactorModel> {
    cfg.validate()?;
    let init = InitSpec {
        seed: cfg.seed,
        mode: InitMode::UniformCapped,
    };
    let model = init_factors(n_users, n_items, cfg.dim, scale, &init)?;
    let mut trainer = ListwiseTrainer::new(model, cfg.learning_rate, cfg.eps)?;
    // separate stream from the initializer
    let mut rng = rng::seeded(rng::derive(cfg.seed, &[0x5a4d]));
    for _ in 0..cfg.steps {
        let i = rng.random_range(0..n_users);
        let j = rng.random_range(0..n_items);
        trainer.step(i, j)?;
    }
    Ok(trainer.into_model())
}
