/// Anything that scores (user, item) pairs on the rating scale.
pub trait Predictor: Sync {
    fn n_users(&self) -> usize;
    fn n_items(&self) -> usize;
    /// Predicted rating in stars. Panics on out-of-range indices.
    fn predict(&self, user: usize, item: usize) -> f64;
}

impl<P: Predictor + ?Sized> Predictor for &P {
    fn n_users(&self) -> usize {
        (**self).n_users()
    }

    fn n_items(&self) -> usize {
        (**self).n_items()
    }

    fn predict(&self, user: usize, item: usize) -> f64 {
        (**self).predict(user, item)
    }
}
