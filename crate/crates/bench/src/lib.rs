//! Fixtures shared by the criterion benches.

use zsrank::dataset::{Rating, RatingsDataset, Scale};

/// Deterministic pseudo-random ratings on an `n_users` x `n_items` grid,
/// keeping roughly one cell in `stride`.
pub fn synthetic_ratings(n_users: usize, n_items: usize, stride: usize) -> RatingsDataset {
    let mut ratings = Vec::new();
    for user in 0..n_users {
        for item in 0..n_items {
            let h = (user as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ (item as u64).wrapping_mul(0xbf58_476d_1ce4_e5b9);
            let h = h ^ (h >> 29);
            if h.is_multiple_of(stride as u64) {
                let value = 1.0 + ((h >> 8) % 5) as f64;
                ratings.push(Rating { user, item, value });
            }
        }
    }
    RatingsDataset::from_dense(n_users, n_items, ratings, Scale::MOVIELENS).expect("valid fixture")
}
