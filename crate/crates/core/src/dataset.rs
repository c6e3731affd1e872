//! Rating tables: loading, validation, splitting and summaries.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use ordered_float::OrderedFloat;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// One observed rating with dense indices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rating {
    pub user: usize,
    pub item: usize,
    pub value: f64,
}

/// Closed rating interval `[min, max]` in stars.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scale {
    pub min: f64,
    pub max: f64,
}

impl Scale {
    /// The 1-5 star scale used by MovieLens.
    pub const MOVIELENS: Scale = Scale { min: 1.0, max: 5.0 };

    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min.is_finite() && max.is_finite()) || min >= max {
            return Err(Error::usage(format!(
                "rating scale must satisfy min < max, got [{min}, {max}]"
            )));
        }
        Ok(Scale { min, max })
    }

    pub fn contains(&self, value: f64) -> bool {
        value >= self.min && value <= self.max
    }

    pub fn clamp(&self, value: f64) -> f64 {
        value.clamp(self.min, self.max)
    }

    pub fn width(&self) -> f64 {
        self.max - self.min
    }
}

/// Bijection between original identifiers and dense 0-based indices.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct IdMap {
    originals: Vec<String>,
    #[serde(skip)]
    dense: HashMap<String, usize>,
}

impl IdMap {
    /// Returns the dense index for `id`, assigning the next one if unseen.
    fn intern(&mut self, id: &str) -> usize {
        if let Some(&idx) = self.dense.get(id) {
            return idx;
        }
        let idx = self.originals.len();
        self.originals.push(id.to_owned());
        self.dense.insert(id.to_owned(), idx);
        idx
    }

    pub fn dense(&self, original: &str) -> Option<usize> {
        self.dense.get(original).copied()
    }

    pub fn original(&self, dense: usize) -> Option<&str> {
        self.originals.get(dense).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.originals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.originals.is_empty()
    }
}

/// Immutable sparse user-item rating table.
///
/// Users and items are re-indexed densely in order of first appearance, so
/// factor matrices can be addressed directly by `Rating::user` and
/// `Rating::item`. Train/test halves produced by [`split_train_test`] share
/// the id maps, shape and scale of the dataset they came from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatingsDataset {
    ratings: Vec<Rating>,
    n_users: usize,
    n_items: usize,
    scale: Scale,
    users: Arc<IdMap>,
    items: Arc<IdMap>,
}

impl RatingsDataset {
    /// Builds a dataset from `(user id, item id, value)` triples in row order.
    ///
    /// Without a `scale` override the bounds are the observed min and max.
    /// A single distinct observed value `v > 0` yields the scale `[0, v]`.
    pub fn from_triples<I, U, T>(triples: I, scale: Option<Scale>) -> Result<Self>
    where
        I: IntoIterator<Item = (U, T, f64)>,
        U: AsRef<str>,
        T: AsRef<str>,
    {
        let mut users = IdMap::default();
        let mut items = IdMap::default();
        let mut seen = HashSet::new();
        let mut ratings = Vec::new();

        for (row, (user, item, value)) in triples.into_iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::data(format!("row {}: non-finite rating", row + 1)));
            }
            let user = users.intern(user.as_ref());
            let item = items.intern(item.as_ref());
            if !seen.insert((user, item)) {
                return Err(Error::data(format!(
                    "row {}: duplicate rating for user {} and item {}",
                    row + 1,
                    users.originals[user],
                    items.originals[item]
                )));
            }
            ratings.push(Rating { user, item, value });
        }
        if ratings.is_empty() {
            return Err(Error::data("no ratings"));
        }

        let scale = match scale {
            Some(scale) => scale,
            None => observed_scale(&ratings)?,
        };
        if let Some(bad) = ratings.iter().find(|r| !scale.contains(r.value)) {
            return Err(Error::data(format!(
                "rating {} outside scale [{}, {}]",
                bad.value, scale.min, scale.max
            )));
        }

        Ok(RatingsDataset {
            n_users: users.len(),
            n_items: items.len(),
            ratings,
            scale,
            users: Arc::new(users),
            items: Arc::new(items),
        })
    }

    /// Builds a dataset directly from dense ratings over an `n_users` x
    /// `n_items` grid. Original ids are the decimal dense indices.
    pub fn from_dense(
        n_users: usize,
        n_items: usize,
        ratings: Vec<Rating>,
        scale: Scale,
    ) -> Result<Self> {
        if n_users == 0 || n_items == 0 {
            return Err(Error::usage("dataset needs at least one user and one item"));
        }
        if ratings.is_empty() {
            return Err(Error::data("no ratings"));
        }
        let mut seen = HashSet::new();
        for r in &ratings {
            if r.user >= n_users || r.item >= n_items {
                return Err(Error::data(format!(
                    "rating ({}, {}) outside {}x{} grid",
                    r.user, r.item, n_users, n_items
                )));
            }
            if !scale.contains(r.value) {
                return Err(Error::data(format!(
                    "rating {} outside scale [{}, {}]",
                    r.value, scale.min, scale.max
                )));
            }
            if !seen.insert((r.user, r.item)) {
                return Err(Error::data(format!(
                    "duplicate rating for user {} and item {}",
                    r.user, r.item
                )));
            }
        }
        let ids = |n: usize| {
            let mut map = IdMap::default();
            for i in 0..n {
                map.intern(&i.to_string());
            }
            Arc::new(map)
        };
        Ok(RatingsDataset {
            ratings,
            n_users,
            n_items,
            scale,
            users: ids(n_users),
            items: ids(n_items),
        })
    }

    pub fn ratings(&self) -> &[Rating] {
        &self.ratings
    }

    pub fn len(&self) -> usize {
        self.ratings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ratings.is_empty()
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn scale(&self) -> Scale {
        self.scale
    }

    pub fn user_ids(&self) -> &IdMap {
        &self.users
    }

    pub fn item_ids(&self) -> &IdMap {
        &self.items
    }

    /// Same shape, scale and id maps, different rating subset.
    fn with_ratings(&self, ratings: Vec<Rating>) -> Self {
        RatingsDataset {
            ratings,
            n_users: self.n_users,
            n_items: self.n_items,
            scale: self.scale,
            users: Arc::clone(&self.users),
            items: Arc::clone(&self.items),
        }
    }

    /// Items rated by each user, sorted ascending.
    pub fn items_by_user(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_users];
        for r in &self.ratings {
            out[r.user].push(r.item);
        }
        for items in &mut out {
            items.sort_unstable();
        }
        out
    }

    /// Mean of all rating values.
    pub fn mean(&self) -> f64 {
        self.ratings.iter().map(|r| r.value).sum::<f64>() / self.ratings.len() as f64
    }

    /// True when every rating and both scale bounds are whole numbers.
    pub fn is_integer_valued(&self) -> bool {
        self.scale.min.fract() == 0.0
            && self.scale.max.fract() == 0.0
            && self.ratings.iter().all(|r| r.value.fract() == 0.0)
    }
}

fn observed_scale(ratings: &[Rating]) -> Result<Scale> {
    let (lo, hi) = ratings.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
        (lo.min(r.value), hi.max(r.value))
    });
    if lo < hi {
        Scale::new(lo, hi)
    } else if lo > 0.0 {
        Scale::new(0.0, lo)
    } else {
        Err(Error::data(format!(
            "cannot infer a rating scale from the single value {lo}; pass an explicit scale"
        )))
    }
}

/// Input file layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    /// `UserID::MovieID::Rating::Timestamp`, one rating per line.
    MovielensDat,
    /// Comma-separated with a header row.
    Csv,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "movielens_dat" => Ok(Format::MovielensDat),
            "csv" => Ok(Format::Csv),
            other => Err(Error::usage(format!(
                "unknown format `{other}` (expected movielens_dat or csv)"
            ))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::MovielensDat => "movielens_dat",
            Format::Csv => "csv",
        })
    }
}

/// Header names of the user, item and rating columns in a CSV file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub user: String,
    pub item: String,
    pub rating: String,
}

impl Default for ColumnSpec {
    fn default() -> Self {
        ColumnSpec {
            user: "userId".into(),
            item: "itemId".into(),
            rating: "rating".into(),
        }
    }
}

/// Loads a rating file.
///
/// MovieLens files default to the 1-5 scale; CSV files default to the
/// observed range. `scale` overrides either.
pub fn load_ratings(
    path: impl AsRef<Path>,
    format: Format,
    columns: Option<&ColumnSpec>,
    scale: Option<Scale>,
) -> Result<RatingsDataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)
        .map_err(|e| Error::data(format!("cannot read {}: {e}", path.display())))?;
    match format {
        Format::MovielensDat => {
            let triples = parse_movielens(&text)?;
            RatingsDataset::from_triples(triples, Some(scale.unwrap_or(Scale::MOVIELENS)))
        }
        Format::Csv => {
            let default = ColumnSpec::default();
            let triples = parse_csv(&text, columns.unwrap_or(&default))?;
            RatingsDataset::from_triples(triples, scale)
        }
    }
}

fn parse_rating(field: &str, line: usize) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::data(format!("line {line}: non-numeric rating `{field}`")))
}

fn parse_movielens(text: &str) -> Result<Vec<(&str, &str, f64)>> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split("::").collect();
        if fields.len() != 4 {
            return Err(Error::data(format!(
                "line {line_no}: expected 4 `::`-separated fields, found {}",
                fields.len()
            )));
        }
        let value = parse_rating(fields[2], line_no)?;
        fields[3].trim().parse::<i64>().map_err(|_| {
            Error::data(format!("line {line_no}: malformed timestamp `{}`", fields[3]))
        })?;
        out.push((fields[0].trim(), fields[1].trim(), value));
    }
    Ok(out)
}

fn parse_csv(text: &str, columns: &ColumnSpec) -> Result<Vec<(String, String, f64)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::data(format!("csv header has no column `{name}`")))
    };
    let (u, i, r) = (column(&columns.user)?, column(&columns.item)?, column(&columns.rating)?);

    let mut out = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        // header is line 1
        let line_no = idx + 2;
        let record = record?;
        if record.len() != headers.len() {
            return Err(Error::data(format!(
                "line {line_no}: expected {} fields, found {}",
                headers.len(),
                record.len()
            )));
        }
        let value = parse_rating(&record[r], line_no)?;
        out.push((record[u].trim().to_owned(), record[i].trim().to_owned(), value));
    }
    Ok(out)
}

/// Parameters of a random train/test split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train_fraction: f64, seed: u64) -> Result<Self> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::usage(format!(
                "train fraction must lie in (0, 1), got {train_fraction}"
            )));
        }
        Ok(SplitSpec {
            train_fraction,
            seed,
        })
    }
}

/// Splits ratings uniformly at random into train and test halves.
///
/// The train half holds `round(train_fraction * len)` ratings. Each half
/// keeps the original row order.
pub fn split_train_test(
    ds: &RatingsDataset,
    spec: &SplitSpec,
) -> Result<(RatingsDataset, RatingsDataset)> {
    SplitSpec::new(spec.train_fraction, spec.seed)?;
    let n = ds.len();
    let n_train = (spec.train_fraction * n as f64).round() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::data(format!(
            "split of {n} ratings at fraction {} leaves an empty half",
            spec.train_fraction
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::seeded(spec.seed));
    let mut in_train = vec![false; n];
    for &idx in &order[..n_train] {
        in_train[idx] = true;
    }

    let (train, test): (Vec<_>, Vec<_>) = ds
        .ratings
        .iter()
        .zip(&in_train)
        .partition(|(_, &train)| train);
    let strip = |v: Vec<(&Rating, &bool)>| v.into_iter().map(|(r, _)| *r).collect();
    Ok((ds.with_ratings(strip(train)), ds.with_ratings(strip(test))))
}

/// Count of ratings per distinct rating value.
pub fn rating_histogram(ds: &RatingsDataset) -> BTreeMap<OrderedFloat<f64>, usize> {
    let mut hist = BTreeMap::new();
    for r in &ds.ratings {
        *hist.entry(OrderedFloat(r.value)).or_insert(0) += 1;
    }
    hist
}
