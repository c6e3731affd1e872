//! Zero-shot listwise learning to rank for recommendation.
//!
//! The crate is organised bottom-up:
//!
//! * [`dataset`] loads and splits user-item rating tables.
//! * [`factors`] owns the latent factor matrices shared by every trainer.
//! * [`listwise`] is the zero-shot trainer: it ascends the power-law
//!   order-statistic likelihood `prod (u.v)^(u.v)` and never reads a rating.
//! * [`baselines`] holds classic matrix factorization, BPR-MF and the
//!   mean/random heuristics used for comparison.
//! * [`orderstat`] evaluates the joint density of order statistics and
//!   checks its normalization by Monte Carlo.
//! * [`metrics`] computes MAE and the Degree of Matthew Effect.
//! * [`harness`] wires everything into single runs, learning-rate sweeps
//!   and CSV/SVG reports.

pub mod baselines;
pub mod dataset;
pub mod error;
pub mod factors;
pub mod harness;
pub mod listwise;
pub mod metrics;
pub mod orderstat;
pub mod predictor;
mod rng;

pub use dataset::{load_ratings, rating_histogram, split_train_test, Rating, RatingsDataset, Scale, SplitSpec};
pub use error::{Error, Result};
pub use factors::{init_factors, FactorModel, InitMode, InitSpec};
pub use listwise::{train_zeroshot, TrainConfig};
pub use predictor::Predictor;
