//! Latent factor matrices, initialization, prediction and projection.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::Scale;
use crate::error::{Error, Result};
use crate::predictor::Predictor;
use crate::rng;

/// Dense row-major matrix. Rows are factor vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl FactorMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        FactorMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::usage("ragged factor rows"));
        }
        Ok(FactorMatrix {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    /// Entries ~ Uniform[0, entry_cap]; the model is constrained.
    UniformCapped,
    /// Entries ~ Normal(0, 0.1); the model is unconstrained.
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InitSpec {
    pub seed: u64,
    pub mode: InitMode,
}

/// Standard deviation of gaussian initialization.
pub const GAUSSIAN_INIT_STD: f64 = 0.1;

/// User factors `U` (N x d) and item factors `V` (M x d).
///
/// Constrained models keep every entry in `[0, entry_cap]` with
/// `entry_cap = sqrt(r_max / d)`, which bounds every dot product by `r_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorModel {
    users: FactorMatrix,
    items: FactorMatrix,
    scale: Scale,
    entry_cap: Option<f64>,
}

/// Largest entry value of a constrained model with dimension `dim`.
pub fn entry_cap(scale: Scale, dim: usize) -> f64 {
    (scale.max / dim as f64).sqrt()
}

/// Creates a seeded factor model.
pub fn init_factors(
    n_users: usize,
    n_items: usize,
    dim: usize,
    scale: Scale,
    spec: &InitSpec,
) -> Result<FactorModel> {
    if n_users == 0 || n_items == 0 || dim == 0 {
        return Err(Error::usage(format!(
            "factor model needs n_users, n_items and dim >= 1 (got {n_users}, {n_items}, {dim})"
        )));
    }
    let scale = Scale::new(scale.min, scale.max)?;
    let mut rng = rng::seeded(spec.seed);
    let mut users = FactorMatrix::zeros(n_users, dim);
    let mut items = FactorMatrix::zeros(n_items, dim);

    let entry_cap = match spec.mode {
        InitMode::UniformCapped => {
            if scale.max <= 0.0 {
                return Err(Error::usage("constrained models need r_max > 0"));
            }
            let cap = entry_cap(scale, dim);
            for m in [&mut users, &mut items] {
                m.as_mut_slice()
                    .iter_mut()
                    .for_each(|x| *x = rng.random_range(0.0..=cap));
            }
            Some(cap)
        }
        InitMode::Gaussian => {
            let normal = Normal::new(0.0, GAUSSIAN_INIT_STD).expect("valid std");
            for m in [&mut users, &mut items] {
                m.as_mut_slice()
                    .iter_mut()
                    .for_each(|x| *x = normal.sample(&mut rng));
            }
            None
        }
    };

    Ok(FactorModel {
        users,
        items,
        scale,
        entry_cap,
    })
}

impl FactorModel {
    /// Assembles a model from explicit matrices. `entry_cap` is `Some` for
    /// constrained models; entries are not projected here.
    pub fn from_parts(
        users: FactorMatrix,
        items: FactorMatrix,
        scale: Scale,
        entry_cap: Option<f64>,
    ) -> Result<Self> {
        if users.cols() != items.cols() || users.cols() == 0 {
            return Err(Error::usage("user and item factors need the same non-zero width"));
        }
        if users.rows() == 0 || items.rows() == 0 {
            return Err(Error::usage("factor model needs at least one user and one item"));
        }
        if let Some(cap) = entry_cap {
            if !(cap.is_finite() && cap > 0.0) {
                return Err(Error::usage(format!("invalid entry cap {cap}")));
            }
        }
        Ok(FactorModel {
            users,
            items,
            scale,
            entry_cap,
        })
    }

    pub fn dim(&self) -> usize {
        self.users.cols()
    }

    pub fn scale(&self) -> Scale {
        self.scale
    }

    pub fn entry_cap(&self) -> Option<f64> {
        self.entry_cap
    }

    pub fn is_constrained(&self) -> bool {
        self.entry_cap.is_some()
    }

    pub fn users(&self) -> &FactorMatrix {
        &self.users
    }

    pub fn items(&self) -> &FactorMatrix {
        &self.items
    }

    pub fn user(&self, i: usize) -> &[f64] {
        self.users.row(i)
    }

    pub fn item(&self, j: usize) -> &[f64] {
        self.items.row(j)
    }

    pub fn user_mut(&mut self, i: usize) -> &mut [f64] {
        self.users.row_mut(i)
    }

    pub fn item_mut(&mut self, j: usize) -> &mut [f64] {
        self.items.row_mut(j)
    }

    /// Raw dot product `U_i . V_j`.
    pub fn dot(&self, user: usize, item: usize) -> f64 {
        dot(self.users.row(user), self.items.row(item))
    }

    /// Dot product clamped to the rating scale.
    pub fn predict_rating(&self, user: usize, item: usize) -> Result<f64> {
        if user >= self.users.rows() || item >= self.items.rows() {
            return Err(Error::usage(format!(
                "index ({user}, {item}) out of range for {}x{} model",
                self.users.rows(),
                self.items.rows()
            )));
        }
        Ok(self.scale.clamp(self.dot(user, item)))
    }

    /// Clamps every entry to `[0, entry_cap]`. No-op on unconstrained models.
    pub fn project(&mut self) {
        if let Some(cap) = self.entry_cap {
            clamp_entries(self.users.as_mut_slice(), cap);
            clamp_entries(self.items.as_mut_slice(), cap);
        }
    }

    pub fn projected(mut self) -> Self {
        self.project();
        self
    }

    pub(crate) fn project_user(&mut self, i: usize) {
        if let Some(cap) = self.entry_cap {
            clamp_entries(self.users.row_mut(i), cap);
        }
    }

    pub(crate) fn project_item(&mut self, j: usize) {
        if let Some(cap) = self.entry_cap {
            clamp_entries(self.items.row_mut(j), cap);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.users.as_slice().iter().chain(self.items.as_slice()).all(|x| x.is_finite())
    }

    /// Writes the model in the binary dump format described on [`read_from`].
    ///
    /// [`read_from`]: FactorModel::read_from
    pub fn write_to<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(DUMP_MAGIC)?;
        w.write_all(&DUMP_VERSION.to_le_bytes())?;
        for n in [self.users.rows(), self.items.rows(), self.dim()] {
            w.write_all(&(n as u64).to_le_bytes())?;
        }
        w.write_all(&self.scale.min.to_le_bytes())?;
        w.write_all(&self.scale.max.to_le_bytes())?;
        w.write_all(&[u8::from(self.entry_cap.is_some())])?;
        w.write_all(&self.entry_cap.unwrap_or(0.0).to_le_bytes())?;
        for x in self.users.as_slice().iter().chain(self.items.as_slice()) {
            w.write_all(&x.to_le_bytes())?;
        }
        Ok(())
    }

    /// Reads a model dump.
    ///
    /// Layout (little endian): magic `ZSFM`, `u32` version, `u64` N, M, d,
    /// `f64` r_min, r_max, `u8` constrained flag, `f64` entry cap, then the
    /// N*d user entries and M*d item entries row-major.
    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != DUMP_MAGIC {
            return Err(Error::data("not a factor model dump"));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        let version = u32::from_le_bytes(b4);
        if version != DUMP_VERSION {
            return Err(Error::data(format!("unsupported model dump version {version}")));
        }
        let read_u64 = |r: &mut R| -> Result<u64> {
            let mut b = [0u8; 8];
            r.read_exact(&mut b)?;
            Ok(u64::from_le_bytes(b))
        };
        let n_users = read_u64(&mut r)? as usize;
        let n_items = read_u64(&mut r)? as usize;
        let dim = read_u64(&mut r)? as usize;
        let read_f64 = |r: &mut R| -> Result<f64> {
            let mut b = [0u8; 8];
            r.read_exact(&mut b)?;
            Ok(f64::from_le_bytes(b))
        };
        let scale = Scale::new(read_f64(&mut r)?, read_f64(&mut r)?)
            .map_err(|e| Error::data(e.to_string()))?;
        let mut flag = [0u8; 1];
        r.read_exact(&mut flag)?;
        let cap = read_f64(&mut r)?;

        let mut users = FactorMatrix::zeros(n_users, dim);
        let mut items = FactorMatrix::zeros(n_items, dim);
        for x in users.as_mut_slice().iter_mut().chain(items.as_mut_slice()) {
            *x = read_f64(&mut r)?;
        }
        FactorModel::from_parts(users, items, scale, (flag[0] != 0).then_some(cap))
            .map_err(|e| Error::data(e.to_string()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path)
            .map_err(|e| Error::data(format!("cannot write {}: {e}", path.display())))?;
        let mut w = BufWriter::new(file);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path)
            .map_err(|e| Error::data(format!("cannot read {}: {e}", path.display())))?;
        FactorModel::read_from(BufReader::new(file))
    }
}

const DUMP_MAGIC: &[u8; 4] = b"ZSFM";
const DUMP_VERSION: u32 = 1;

fn clamp_entries(xs: &mut [f64], cap: f64) {
    for x in xs {
        *x = x.clamp(0.0, cap);
    }
}

impl Predictor for FactorModel {
    fn n_users(&self) -> usize {
        self.users.rows()
    }

    fn n_items(&self) -> usize {
        self.items.rows()
    }

    fn predict(&self, user: usize, item: usize) -> f64 {
        self.scale.clamp(self.dot(user, item))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const ML: Scale = Scale::MOVIELENS;

    fn capped(seed: u64) -> InitSpec {
        InitSpec {
            seed,
            mode: InitMode::UniformCapped,
        }
    }

    fn explicit(users: &[Vec<f64>], items: &[Vec<f64>], cap: Option<f64>) -> FactorModel {
        FactorModel::from_parts(
            FactorMatrix::from_rows(users).unwrap(),
            FactorMatrix::from_rows(items).unwrap(),
            ML,
            cap,
        )
        .unwrap()
    }

    #[test]
    fn cap_formula() {
        let m = init_factors(7, 9, 4, ML, &capped(1)).unwrap();
        let cap = m.entry_cap().unwrap();
        assert!((cap - 1.118_034).abs() < 1e-6);
        assert!(m.users().as_slice().iter().all(|&x| (0.0..=cap).contains(&x)));
        assert!(m.items().as_slice().iter().all(|&x| (0.0..=cap).contains(&x)));
    }

    #[test]
    fn dot_products_bounded_by_r_max() {
        let m = init_factors(20, 30, 4, ML, &capped(2)).unwrap();
        for u in 0..20 {
            for i in 0..30 {
                assert!(m.dot(u, i) <= ML.max + 1e-12);
            }
        }
    }

    #[test]
    fn init_is_deterministic() {
        for mode in [InitMode::UniformCapped, InitMode::Gaussian] {
            let spec = InitSpec { seed: 11, mode };
            assert_eq!(
                init_factors(5, 6, 3, ML, &spec).unwrap(),
                init_factors(5, 6, 3, ML, &spec).unwrap()
            );
        }
        let a = init_factors(5, 6, 3, ML, &capped(1)).unwrap();
        let b = init_factors(5, 6, 3, ML, &capped(2)).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn init_rejects_empty_dims() {
        assert!(matches!(init_factors(1, 1, 0, ML, &capped(0)), Err(Error::Usage(_))));
        assert!(matches!(init_factors(0, 1, 2, ML, &capped(0)), Err(Error::Usage(_))));
        assert!(init_factors(1, 1, 1, Scale { min: 5.0, max: 1.0 }, &capped(0)).is_err());
    }

    #[test]
    fn gaussian_is_unconstrained() {
        let m = init_factors(50, 50, 4, ML, &InitSpec { seed: 3, mode: InitMode::Gaussian }).unwrap();
        assert!(!m.is_constrained());
        assert!(m.users().as_slice().iter().any(|&x| x < 0.0));
    }

    #[test]
    fn prediction_clamps() {
        let m = explicit(&[vec![0.4, 0.0], vec![0.0, 0.0]], &[vec![1.0, 0.0]], None);
        assert_eq!(m.predict_rating(0, 0).unwrap(), 1.0);
        assert_eq!(m.predict_rating(1, 0).unwrap(), 1.0);
        let m = explicit(&[vec![3.2]], &[vec![1.0]], None);
        assert_eq!(m.predict_rating(0, 0).unwrap(), 3.2);
        assert!(matches!(m.predict_rating(1, 0), Err(Error::Usage(_))));
        assert!(matches!(m.predict_rating(0, 1), Err(Error::Usage(_))));
    }

    #[test]
    fn projection_examples() {
        let cap = 1.118_034;
        let m = explicit(&[vec![1.5, -0.2]], &[vec![0.5, 0.5]], Some(cap)).projected();
        assert_eq!(m.user(0), &[cap, 0.0]);
        assert_eq!(m.clone().projected(), m);
    }

    #[test]
    fn dump_round_trip() {
        for mode in [InitMode::UniformCapped, InitMode::Gaussian] {
            let m = init_factors(4, 3, 2, ML, &InitSpec { seed: 9, mode }).unwrap();
            let mut buf = Vec::new();
            m.write_to(&mut buf).unwrap();
            let back = FactorModel::read_from(buf.as_slice()).unwrap();
            assert_eq!(back, m);
            assert!(FactorModel::read_from(&buf[..buf.len() - 1]).is_err());
        }
        assert!(FactorModel::read_from(&b"nope"[..]).is_err());
    }

    proptest! {
        #[test]
        fn project_is_idempotent(entries in prop::collection::vec(-3.0f64..3.0, 6)) {
            let m = explicit(&[entries[..3].to_vec()], &[entries[3..].to_vec()], Some(1.0));
            let once = m.projected();
            prop_assert!(once.users().as_slice().iter().all(|&x| (0.0..=1.0).contains(&x)));
            prop_assert_eq!(once.clone().projected(), once);
        }

        #[test]
        fn prediction_is_monotone(a in -10.0f64..10.0, b in -10.0f64..10.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let m = explicit(&[vec![lo], vec![hi]], &[vec![1.0]], None);
            prop_assert!(m.predict(0, 0) <= m.predict(1, 0));
        }

        #[test]
        fn dump_is_bit_exact(seed: u64, dim in 1usize..5) {
            let m = init_factors(3, 2, dim, ML, &InitSpec { seed, mode: InitMode::Gaussian }).unwrap();
            let mut buf = Vec::new();
            m.write_to(&mut buf).unwrap();
            let back = FactorModel::read_from(buf.as_slice()).unwrap();
            for (x, y) in back.users().as_slice().iter().zip(m.users().as_slice()) {
                prop_assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }
}
