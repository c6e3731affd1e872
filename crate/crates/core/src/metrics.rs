//! Accuracy and fairness metrics.
//!
//! The Degree of Matthew Effect is measured on recommendation popularity:
//! every user gets a top-K list, items are ranked by how many lists they
//! appear in, and the degree is the magnitude of the OLS slope of
//! `ln(count)` against `ln(rank)`. A flatter profile (smaller degree) means
//! recommendations are spread more evenly across the catalogue.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::RatingsDataset;
use crate::error::{Error, Result};
use crate::predictor::Predictor;

/// Default top-K list length for the Matthew metric.
pub const DEFAULT_K: usize = 10;

/// Mean absolute error over `(predicted, actual)` pairs.
pub fn mae(pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::usage("MAE of an empty prediction set"));
    }
    Ok(pairs.iter().map(|(p, a)| (p - a).abs()).sum::<f64>() / pairs.len() as f64)
}

/// MAE of a predictor over every rating in `test`.
pub fn mae_on<P: Predictor + ?Sized>(predictor: &P, test: &RatingsDataset) -> Result<f64> {
    let pairs: Vec<(f64, f64)> = test
        .ratings()
        .iter()
        .map(|r| (predictor.predict(r.user, r.item), r.value))
        .collect();
    mae(&pairs)
}

/// Result of a log-log least-squares fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares of `ln(count)` on `ln(rank)`.
pub fn loglog_slope(points: &[(usize, f64)]) -> Result<LogLogFit> {
    if points.len() < 2 {
        return Err(Error::usage("log-log fit needs at least two points"));
    }
    if let Some(&(rank, count)) = points.iter().find(|&&(r, c)| r == 0 || !(c > 0.0 && c.is_finite())) {
        return Err(Error::usage(format!(
            "log-log fit needs positive ranks and counts, got ({rank}, {count})"
        )));
    }
    let logs: Vec<(f64, f64)> = points
        .iter()
        .map(|&(r, c)| ((r as f64).ln(), c.ln()))
        .collect();
    let n = logs.len() as f64;
    let mean_x = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let syy: f64 = logs.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::usage("log-log fit needs at least two distinct ranks"));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    Ok(LogLogFit {
        slope,
        intercept: mean_y - slope * mean_x,
        r_squared,
    })
}

/// Top-`k` items for `user` by predicted rating, skipping `exclude`
/// (which must be sorted ascending). Ties go to the lower item index.
pub fn topk_recommend<P: Predictor + ?Sized>(
    predictor: &P,
    user: usize,
    k: usize,
    exclude: &[usize],
) -> Result<Vec<usize>> {
    if k == 0 {
        return Err(Error::usage("k must be at least 1"));
    }
    if user >= predictor.n_users() {
        return Err(Error::usage(format!("user {user} out of range")));
    }
    let mut scored: Vec<(f64, usize)> = (0..predictor.n_items())
        .filter(|item| exclude.binary_search(item).is_err())
        .map(|item| (predictor.predict(user, item), item))
        .collect();
    if scored.is_empty() {
        return Err(Error::data(format!("user {user} has no candidate items")));
    }
    let order = |a: &(f64, usize), b: &(f64, usize)| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1));
    if scored.len() > k {
        scored.select_nth_unstable_by(k - 1, order);
        scored.truncate(k);
    }
    scored.sort_unstable_by(order);
    Ok(scored.into_iter().map(|(_, item)| item).collect())
}

/// Recommendation counts and their log-log fit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PopularityProfile {
    /// Occurrences in top-K lists, only for items that appear at least once.
    pub counts: BTreeMap<usize, usize>,
    pub fitted_slope: f64,
    pub r_squared: f64,
}

/// Matthew degree of a per-item occurrence tally.
///
/// Items with zero occurrences are left out of the fit. Fewer than two
/// recommended items, or a single distinct count, give degree zero.
pub fn popularity_degree(tally: &[usize]) -> (f64, PopularityProfile) {
    let counts: BTreeMap<usize, usize> = tally
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(item, &c)| (item, c))
        .collect();

    let mut ranked: Vec<(usize, usize)> = counts.iter().map(|(&i, &c)| (i, c)).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let points: Vec<(usize, f64)> = ranked
        .iter()
        .enumerate()
        .map(|(rank, &(_, c))| (rank + 1, c as f64))
        .collect();

    let fit = if points.len() < 2 {
        LogLogFit {
            slope: 0.0,
            intercept: points.first().map_or(0.0, |p| p.1.ln()),
            r_squared: 1.0,
        }
    } else {
        loglog_slope(&points).expect("ranks distinct and counts positive")
    };
    let profile = PopularityProfile {
        counts,
        fitted_slope: fit.slope,
        r_squared: fit.r_squared,
    };
    (fit.slope.abs(), profile)
}

/// Degree of Matthew Effect of `predictor`'s top-`k` lists.
///
/// Each user's training items are excluded from their list. Users left
/// with no candidates are skipped; it is an error if every user is.
pub fn matthew_degree<P: Predictor + ?Sized>(
    predictor: &P,
    train: &RatingsDataset,
    k: usize,
) -> Result<(f64, PopularityProfile)> {
    if k == 0 {
        return Err(Error::usage("k must be at least 1"));
    }
    let seen = train.items_by_user();
    let n_items = predictor.n_items();
    let lists: Vec<Option<Vec<usize>>> = (0..predictor.n_users())
        .into_par_iter()
        .map(|user| {
            let exclude = seen.get(user).map_or(&[][..], Vec::as_slice);
            if exclude.len() >= n_items {
                return Ok(None);
            }
            topk_recommend(predictor, user, k, exclude).map(Some)
        })
        .collect::<Result<_>>()?;

    let mut tally = vec![0usize; n_items];
    let mut served = 0usize;
    for list in lists.iter().flatten() {
        served += 1;
        for &item in list {
            tally[item] += 1;
        }
    }
    if served == 0 {
        return Err(Error::data("no user has a candidate item to recommend"));
    }
    Ok(popularity_degree(&tally))
}
