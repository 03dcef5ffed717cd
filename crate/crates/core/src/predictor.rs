//! Rating prediction from a hybrid user-user weight: fuzzy community overlap
//! (local) plus Pearson correlation of ratings (global).

use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::data::RatingMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixConfig {
    /// Weight of the community term.
    pub alpha: f64,
    /// Weight of the correlation term.
    pub beta_mix: f64,
    /// A cluster counts toward the overlap only if both users' memberships exceed this.
    pub theta: f64,
    /// Minimum number of co-rated items for a nonzero correlation.
    pub min_overlap: usize,
}

impl Default for MixConfig {
    fn default() -> Self {
        MixConfig::from_gamma(0.4, 0.1)
    }
}

impl MixConfig {
    /// `alpha = gamma`, `beta_mix = 1`.
    pub fn from_gamma(gamma: f64, theta: f64) -> Self {
        MixConfig {
            alpha: gamma,
            beta_mix: 1.0,
            theta,
            min_overlap: 2,
        }
    }

    pub fn gamma(&self) -> f64 {
        self.alpha / self.beta_mix
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.beta_mix >= 0.0) || !(self.alpha + self.beta_mix > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "mix weights must be nonnegative and not both zero (alpha={}, beta={})",
                self.alpha, self.beta_mix
            )));
        }
        if !(0.0..1.0).contains(&self.theta) {
            return Err(Error::InvalidConfig(format!(
                "theta must lie in [0, 1), got {}",
                self.theta
            )));
        }
        Ok(())
    }
}

/// Pearson correlation over the items both users rated, centered on each
/// user's overall mean rating.
///
/// Returns 0 when fewer than `min_overlap` (at least 2) items are co-rated or
/// either centered vector is all zero.
pub fn pearson(ratings: &RatingMatrix, a: usize, b: usize, min_overlap: usize) -> f64 {
    let (items_a, vals_a) = ratings.user_ratings(a);
    let (items_b, vals_b) = ratings.user_ratings(b);
    let (mean_a, mean_b) = (ratings.user_mean(a), ratings.user_mean(b));
    let (mut p, mut q) = (0, 0);
    let (mut cross, mut norm_a, mut norm_b) = (0.0, 0.0, 0.0);
    let mut common = 0usize;
    while p < items_a.len() && q < items_b.len() {
        match items_a[p].cmp(&items_b[q]) {
            std::cmp::Ordering::Less => p += 1,
            std::cmp::Ordering::Greater => q += 1,
            std::cmp::Ordering::Equal => {
                let da = vals_a[p] - mean_a;
                let db = vals_b[q] - mean_b;
                cross += da * db;
                norm_a += da * da;
                norm_b += db * db;
                common += 1;
                p += 1;
                q += 1;
            }
        }
    }
    if common < min_overlap.max(2) || norm_a == 0.0 || norm_b == 0.0 {
        return 0.0;
    }
    (cross / (norm_a * norm_b).sqrt()).clamp(-1.0, 1.0)
}

/// Dense table of pairwise Pearson correlations.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationTable {
    m: usize,
    values: Vec<f64>,
}

impl CorrelationTable {
    pub fn compute(ratings: &RatingMatrix, min_overlap: usize) -> Self {
        let m = ratings.num_users();
        let mut values = vec![0.0; m * m];
        values
            .par_chunks_mut(m.max(1))
            .enumerate()
            .for_each(|(a, row)| {
                for (b, v) in row.iter_mut().enumerate() {
                    if a != b {
                        *v = pearson(ratings, a, b, min_overlap);
                    }
                }
            });
        CorrelationTable { m, values }
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.values[a * self.m + b]
    }
}

/// Sum of `w_il * w_kl` over the clusters where both memberships exceed `theta`.
pub fn community_similarity(memberships: &DMatrix<f64>, i: usize, k: usize, theta: f64) -> f64 {
    memberships
        .row(i)
        .iter()
        .zip(memberships.row(k).iter())
        .filter(|(&a, &b)| a > theta && b > theta)
        .map(|(a, b)| a * b)
        .sum()
}

pub fn hybrid_weight(cfg: &MixConfig, community: f64, correlation: f64) -> f64 {
    cfg.alpha * community + cfg.beta_mix * correlation
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Fallback {
    None,
    UserMean,
    GlobalMean,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictionResult {
    pub value: f64,
    /// Neighbors that contributed with positive weight.
    pub neighbor_count: usize,
    pub fallback: Fallback,
}

/// Weighted-mean rating predictor over all users who rated the target item.
///
/// Only neighbors with a strictly positive hybrid weight contribute.
#[derive(Debug, Clone)]
pub struct Predictor<'a> {
    ratings: &'a RatingMatrix,
    memberships: &'a DMatrix<f64>,
    correlations: Arc<CorrelationTable>,
    cfg: MixConfig,
}

impl<'a> Predictor<'a> {
    pub fn new(
        ratings: &'a RatingMatrix,
        memberships: &'a DMatrix<f64>,
        cfg: MixConfig,
    ) -> Result<Self> {
        let table = Arc::new(CorrelationTable::compute(ratings, cfg.min_overlap));
        Self::with_correlations(ratings, memberships, cfg, table)
    }

    /// Reuses a precomputed correlation table (it must match `cfg.min_overlap`).
    pub fn with_correlations(
        ratings: &'a RatingMatrix,
        memberships: &'a DMatrix<f64>,
        cfg: MixConfig,
        correlations: Arc<CorrelationTable>,
    ) -> Result<Self> {
        cfg.validate()?;
        if memberships.nrows() != ratings.num_users() {
            return Err(Error::DimensionMismatch {
                expected: ratings.num_users(),
                actual: memberships.nrows(),
            });
        }
        Ok(Predictor {
            ratings,
            memberships,
            correlations,
            cfg,
        })
    }

    pub fn config(&self) -> &MixConfig {
        &self.cfg
    }

    pub fn weight(&self, i: usize, k: usize) -> f64 {
        let community = if self.cfg.alpha == 0.0 {
            0.0
        } else {
            community_similarity(self.memberships, i, k, self.cfg.theta)
        };
        hybrid_weight(&self.cfg, community, self.correlations.get(i, k))
    }

    pub fn predict(&self, user: usize, item: usize) -> Result<PredictionResult> {
        let m = self.ratings.num_users();
        let n = self.ratings.num_items();
        if user >= m {
            return Err(Error::IndexOutOfRange {
                what: "user",
                index: user,
                len: m,
            });
        }
        if item >= n {
            return Err(Error::IndexOutOfRange {
                what: "item",
                index: item,
                len: n,
            });
        }
        let (raters, values) = self.ratings.item_ratings(item);
        let (mut num, mut den, mut count) = (0.0, 0.0, 0usize);
        for (&k, &r) in raters.iter().zip(values) {
            if k == user {
                continue;
            }
            let w = self.weight(user, k);
            if w > 0.0 {
                num += w * r;
                den += w;
                count += 1;
            }
        }
        let scale = self.ratings.scale();
        if count > 0 {
            return Ok(PredictionResult {
                value: scale.clamp(num / den),
                neighbor_count: count,
                fallback: Fallback::None,
            });
        }
        let (value, fallback) = if self.ratings.has_ratings(user) {
            (self.ratings.user_mean(user), Fallback::UserMean)
        } else {
            (self.ratings.global_mean(), Fallback::GlobalMean)
        };
        Ok(PredictionResult {
            value: scale.clamp(value),
            neighbor_count: 0,
            fallback,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{DatasetKind, RatingTriple, RatingsDataset};
    use proptest::prelude::*;

    fn matrix(cells: &[(usize, usize, f64)]) -> RatingMatrix {
        RatingsDataset::from_triples(
            cells.iter().map(|&(u, i, r)| RatingTriple {
                user: format!("u{u}"),
                item: format!("i{i}"),
                rating: r,
            }),
            DatasetKind::MovieLens.scale(),
        )
        .unwrap()
        .rating_matrix()
    }

    #[test]
    fn pearson_examples() {
        let r = matrix(&[
            (0, 0, 1.0),
            (0, 1, 3.0),
            (0, 2, 5.0),
            (1, 0, 1.0),
            (1, 1, 3.0),
            (1, 2, 5.0),
        ]);
        assert!((pearson(&r, 0, 1, 2) - 1.0).abs() < 1e-12);

        let r = matrix(&[
            (0, 0, 1.0),
            (0, 1, 3.0),
            (0, 2, 5.0),
            (1, 0, 5.0),
            (1, 1, 3.0),
            (1, 2, 1.0),
        ]);
        assert!((pearson(&r, 0, 1, 2) + 1.0).abs() < 1e-12);

        let r = matrix(&[
            (0, 0, 4.0),
            (0, 1, 4.0),
            (0, 2, 4.0),
            (1, 0, 5.0),
            (1, 1, 3.0),
            (1, 2, 1.0),
        ]);
        assert_eq!(pearson(&r, 0, 1, 2), 0.0);

        // One co-rated item is below the overlap floor.
        let r = matrix(&[(0, 0, 1.0), (0, 1, 5.0), (1, 0, 2.0), (1, 2, 4.0)]);
        assert_eq!(pearson(&r, 0, 1, 1), 0.0);
    }

    #[test]
    fn pearson_uses_overall_means() {
        // u0 mean = 3 over {1,3,5}; u1 mean = 4 over {3,5,4}. Co-rated: items 1 and 2.
        let r = matrix(&[
            (0, 0, 1.0),
            (0, 1, 3.0),
            (0, 2, 5.0),
            (1, 1, 3.0),
            (1, 2, 5.0),
            (1, 3, 4.0),
        ]);
        // centered u0: (0, 2), u1: (-1, 1) -> 2 / (2 * sqrt 2)
        assert!((pearson(&r, 0, 1, 2) - 1.0 / 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn community_examples() {
        let w = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 0.0]);
        assert_eq!(community_similarity(&w, 0, 1, 0.1), 1.0);
        let w = DMatrix::from_row_slice(2, 2, &[0.6, 0.4, 0.5, 0.5]);
        assert!((community_similarity(&w, 0, 1, 0.45) - 0.30).abs() < 1e-12);
        assert_eq!(community_similarity(&w, 0, 1, 0.7), 0.0);
    }

    #[test]
    fn hybrid_examples() {
        let pure_cf = MixConfig {
            alpha: 0.0,
            beta_mix: 1.0,
            ..MixConfig::default()
        };
        assert_eq!(hybrid_weight(&pure_cf, 0.9, -0.3), -0.3);
        let pure_comm = MixConfig {
            alpha: 1.0,
            beta_mix: 0.0,
            ..MixConfig::default()
        };
        assert_eq!(hybrid_weight(&pure_comm, 0.9, -0.3), 0.9);
        let mix = MixConfig::from_gamma(0.4, 0.1);
        assert!((hybrid_weight(&mix, 0.3, 0.5) - 0.62).abs() < 1e-12);
    }

    fn crisp(m: usize) -> DMatrix<f64> {
        DMatrix::from_fn(m, 2, |_, j| if j == 0 { 1.0 } else { 0.0 })
    }

    #[test]
    fn prediction_examples() {
        let community_only = MixConfig {
            alpha: 1.0,
            beta_mix: 0.0,
            ..MixConfig::default()
        };
        // Dense item indices follow first appearance: "i0" is index 1 here.
        let r = matrix(&[(0, 1, 3.0), (1, 0, 4.0)]);
        let w = crisp(2);
        let p = Predictor::new(&r, &w, community_only)
            .unwrap()
            .predict(0, 1)
            .unwrap();
        assert_eq!(
            (p.value, p.neighbor_count, p.fallback),
            (4.0, 1, Fallback::None)
        );

        // Two equally weighted neighbors rating 2 and 4.
        let r = matrix(&[(0, 1, 3.0), (1, 0, 2.0), (2, 0, 4.0)]);
        let w = crisp(3);
        let p = Predictor::new(&r, &w, community_only)
            .unwrap()
            .predict(0, 1)
            .unwrap();
        assert_eq!((p.value, p.neighbor_count), (3.0, 2));

        // No eligible neighbor: user mean.
        let r = matrix(&[(0, 1, 3.0), (0, 2, 3.4), (1, 0, 5.0)]);
        let w = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let p = Predictor::new(&r, &w, community_only)
            .unwrap()
            .predict(0, 2)
            .unwrap();
        assert!((p.value - 3.2).abs() < 1e-12);
        assert_eq!(p.fallback, Fallback::UserMean);

        let pred = Predictor::new(&r, &w, community_only).unwrap();
        assert!(pred.predict(2, 0).is_err());
        assert!(pred.predict(0, 3).is_err());
    }

    #[test]
    fn cold_user_falls_back_to_global_mean() {
        let ds = RatingsDataset::from_triples(
            [("a", "x", 2.0), ("a", "y", 4.0), ("b", "x", 3.0)].map(|(u, i, r)| RatingTriple {
                user: u.into(),
                item: i.into(),
                rating: r,
            }),
            DatasetKind::MovieLens.scale(),
        )
        .unwrap();
        // Find a split that leaves one of the two users without training ratings.
        let (r, cold) = (0..100)
            .find_map(|seed| {
                let (train, _) = crate::data::split_train_test(&ds, 0.67, seed).unwrap();
                let r = train.rating_matrix();
                (0..2).find(|&u| !r.has_ratings(u)).map(|u| (r, u))
            })
            .expect("some split leaves a user cold");
        let w = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let p = Predictor::new(&r, &w, MixConfig::default())
            .unwrap()
            .predict(cold, 1)
            .unwrap();
        assert_eq!(p.fallback, Fallback::GlobalMean);
        assert_eq!(p.value, r.global_mean());
    }

    #[test]
    fn negative_weights_are_ignored() {
        // u1 anti-correlated with u0; u2 correlated.
        let r = matrix(&[
            (0, 0, 1.0),
            (0, 1, 5.0),
            (0, 2, 3.0),
            (1, 0, 5.0),
            (1, 1, 1.0),
            (1, 3, 1.0),
            (2, 0, 1.0),
            (2, 1, 5.0),
            (2, 3, 4.0),
        ]);
        let w = crisp(3);
        let p = Predictor::new(&r, &w, MixConfig::from_gamma(0.0, 0.1))
            .unwrap()
            .predict(0, 3)
            .unwrap();
        assert_eq!((p.value, p.neighbor_count), (4.0, 1));
    }

    fn arb_cells() -> impl Strategy<Value = Vec<(usize, usize, f64)>> {
        prop::collection::btree_map((0usize..12, 0usize..15), 1u8..=5, 10..100)
            .prop_map(|m| m.into_iter().map(|((u, i), r)| (u, i, r as f64)).collect())
    }

    proptest! {
        #[test]
        fn pearson_symmetric_and_bounded(cells in arb_cells()) {
            let r = matrix(&cells);
            for a in 0..r.num_users() {
                for b in 0..r.num_users() {
                    let p = pearson(&r, a, b, 2);
                    prop_assert_eq!(p, pearson(&r, b, a, 2));
                    prop_assert!((-1.0..=1.0).contains(&p));
                }
            }
        }

        #[test]
        fn predictions_stay_in_scale(cells in arb_cells(), gamma in 0.0f64..3.0, seed in 0u64..1000) {
            let r = matrix(&cells);
            let m = r.num_users();
            let w = DMatrix::from_fn(m, 3, |i, j| ((i as u64 * 7 + j as u64 * 3 + seed) % 5) as f64 + 0.1);
            let w = DMatrix::from_fn(m, 3, |i, j| w[(i, j)] / w.row(i).sum());
            let pred = Predictor::new(&r, &w, MixConfig::from_gamma(gamma, 0.1)).unwrap();
            for u in 0..m {
                for i in 0..r.num_items() {
                    let p = pred.predict(u, i).unwrap();
                    prop_assert!((1.0..=5.0).contains(&p.value));
                }
            }
        }
    }
}
