//! Fuzzy c-means.
//!
//! Alternates the membership update
//! `w_ij = 1 / sum_k (|x_i - c_j| / |x_i - c_k|)^(2/(m-1))`
//! with the weighted-centroid update `c_j = sum_i w_ij^m x_i / sum_i w_ij^m`
//! until the objective `J = sum_ij w_ij^m |x_i - c_j|^2` stops moving.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FcmConfig {
    pub clusters: usize,
    /// Fuzziness exponent `m > 1`.
    pub fuzziness: f64,
    /// Stop when the objective changes by less than this.
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for FcmConfig {
    fn default() -> Self {
        FcmConfig {
            clusters: 15,
            fuzziness: 2.0,
            tol: 1e-6,
            max_iter: 300,
            seed: 1,
        }
    }
}

impl FcmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.clusters < 2 {
            return Err(Error::InvalidConfig(format!(
                "cluster count must be >= 2, got {}",
                self.clusters
            )));
        }
        if !(self.fuzziness > 1.0) || !self.fuzziness.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "fuzziness must be > 1, got {}",
                self.fuzziness
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "FCM tolerance must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("FCM max_iter must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FcmIteration {
    /// Objective after the centroid update of this iteration.
    pub objective: f64,
    /// Largest `|sum_j w_ij - 1|` over the membership rows of this iteration.
    pub max_row_sum_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FcmModel {
    /// c x k
    pub centroids: DMatrix<f64>,
    /// n x c, rows sum to 1
    pub memberships: DMatrix<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub history: Vec<FcmIteration>,
}

impl FcmModel {
    pub fn num_clusters(&self) -> usize {
        self.centroids.nrows()
    }

    /// Index of the largest membership of each point.
    pub fn dominant_clusters(&self) -> Vec<usize> {
        self.memberships
            .row_iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |best, (j, &w)| {
                        if w > best.1 {
                            (j, w)
                        } else {
                            best
                        }
                    })
                    .0
            })
            .collect()
    }
}

/// Membership of one point in every cluster.
///
/// If the point coincides with one or more centroids its membership is split
/// evenly across those and is zero elsewhere.
pub fn membership_of(centroids: &DMatrix<f64>, x: &[f64], fuzziness: f64) -> Vec<f64> {
    let c = centroids.nrows();
    let mut dist2 = vec![0.0; c];
    for (j, d) in dist2.iter_mut().enumerate() {
        *d = centroids
            .row(j)
            .iter()
            .zip(x)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
    }
    let mut out = vec![0.0; c];
    memberships_from_dist2(&dist2, fuzziness, &mut out);
    out
}

fn memberships_from_dist2(dist2: &[f64], fuzziness: f64, out: &mut [f64]) {
    let zeros = dist2.iter().filter(|&&d| d == 0.0).count();
    if zeros > 0 {
        let share = 1.0 / zeros as f64;
        for (w, &d) in out.iter_mut().zip(dist2) {
            *w = if d == 0.0 { share } else { 0.0 };
        }
        return;
    }
    // (d_min / d_j)^(2/(m-1)) on squared distances, normalized; avoids overflow.
    let exponent = 1.0 / (fuzziness - 1.0);
    let min = dist2.iter().copied().fold(f64::INFINITY, f64::min);
    let mut total = 0.0;
    for (w, &d) in out.iter_mut().zip(dist2) {
        *w = (min / d).powf(exponent);
        total += *w;
    }
    out.iter_mut().for_each(|w| *w /= total);
}

/// Row-major copy of the data for cache-friendly distance loops.
struct Points {
    data: Vec<f64>,
    dim: usize,
}

impl Points {
    fn new(x: &DMatrix<f64>) -> Self {
        let (n, dim) = x.shape();
        let mut data = Vec::with_capacity(n * dim);
        for i in 0..n {
            data.extend(x.row(i).iter());
        }
        Points { data, dim }
    }

    fn len(&self) -> usize {
        self.data.len() / self.dim.max(1)
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Returns the n x c membership table (row-major) and the worst row-sum error.
fn update_memberships(points: &Points, centroids: &[Vec<f64>], fuzziness: f64) -> (Vec<f64>, f64) {
    let c = centroids.len();
    let mut w = vec![0.0; points.len() * c];
    w.par_chunks_mut(c).enumerate().for_each_init(
        || vec![0.0; c],
        |d2, (i, out)| {
            let x = points.row(i);
            for (j, cj) in centroids.iter().enumerate() {
                d2[j] = dist2(x, cj);
            }
            memberships_from_dist2(d2, fuzziness, out);
        },
    );
    let err = w
        .chunks(c)
        .map(|row| (row.iter().sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max);
    (w, err)
}

fn update_centroids(points: &Points, w: &[f64], fuzziness: f64, centroids: &mut [Vec<f64>]) {
    let c = centroids.len();
    centroids.par_iter_mut().enumerate().for_each(|(j, cj)| {
        let mut acc = vec![0.0; points.dim];
        let mut total = 0.0;
        for i in 0..points.len() {
            let weight = w[i * c + j].powf(fuzziness);
            if weight == 0.0 {
                continue;
            }
            total += weight;
            for (a, x) in acc.iter_mut().zip(points.row(i)) {
                *a += weight * x;
            }
        }
        if total > 0.0 {
            acc.iter_mut().for_each(|a| *a /= total);
            *cj = acc;
        }
    });
}

fn objective(points: &Points, w: &[f64], centroids: &[Vec<f64>], fuzziness: f64) -> f64 {
    let c = centroids.len();
    (0..points.len())
        .map(|i| {
            let x = points.row(i);
            centroids
                .iter()
                .enumerate()
                .map(|(j, cj)| w[i * c + j].powf(fuzziness) * dist2(x, cj))
                .sum::<f64>()
        })
        .sum()
}

/// Value of the FCM objective for given memberships (n x c) and centroids (c x k).
pub fn fcm_objective(
    x: &DMatrix<f64>,
    memberships: &DMatrix<f64>,
    centroids: &DMatrix<f64>,
    fuzziness: f64,
) -> f64 {
    let points = Points::new(x);
    let c = centroids.nrows();
    let w: Vec<f64> = (0..x.nrows())
        .flat_map(|i| (0..c).map(move |j| memberships[(i, j)]))
        .collect();
    let cs: Vec<Vec<f64>> = centroids
        .row_iter()
        .map(|r| r.iter().copied().collect())
        .collect();
    objective(&points, &w, &cs, fuzziness)
}

fn check_input(x: &DMatrix<f64>, cfg: &FcmConfig) -> Result<()> {
    cfg.validate()?;
    if x.nrows() < cfg.clusters {
        return Err(Error::TooFewPoints {
            needed: cfg.clusters,
            got: x.nrows(),
        });
    }
    if x.ncols() == 0 {
        return Err(Error::Empty("FCM input has no columns"));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(())
}

/// Fits FCM, seeding centroids with `cfg.clusters` distinct data rows chosen by `cfg.seed`.
pub fn fcm_fit(x: &DMatrix<f64>, cfg: &FcmConfig) -> Result<FcmModel> {
    check_input(x, cfg)?;
    let points = Points::new(x);
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed));
    let mut init: Vec<Vec<f64>> = Vec::with_capacity(cfg.clusters);
    for &i in &order {
        if init.len() == cfg.clusters {
            break;
        }
        let row = points.row(i);
        if init.iter().all(|c| c.as_slice() != row) {
            init.push(row.to_vec());
        }
    }
    // Fewer distinct rows than clusters: fall back to repeated rows.
    for &i in order.iter().cycle().take(cfg.clusters - init.len()) {
        init.push(points.row(i).to_vec());
    }
    run(&points, cfg, init)
}

/// Fits FCM from explicit initial centroids (c x k).
pub fn fcm_fit_from(x: &DMatrix<f64>, cfg: &FcmConfig, initial: &DMatrix<f64>) -> Result<FcmModel> {
    check_input(x, cfg)?;
    if initial.nrows() != cfg.clusters {
        return Err(Error::InvalidConfig(format!(
            "expected {} initial centroids, got {}",
            cfg.clusters,
            initial.nrows()
        )));
    }
    if initial.ncols() != x.ncols() {
        return Err(Error::DimensionMismatch {
            expected: x.ncols(),
            actual: initial.ncols(),
        });
    }
    let init = initial
        .row_iter()
        .map(|r| r.iter().copied().collect())
        .collect();
    run(&Points::new(x), cfg, init)
}

fn run(points: &Points, cfg: &FcmConfig, mut centroids: Vec<Vec<f64>>) -> Result<FcmModel> {
    let m = cfg.fuzziness;
    let mut history = Vec::new();
    let mut previous = f64::INFINITY;
    let mut converged = false;

    for _ in 0..cfg.max_iter {
        let (w, row_err) = update_memberships(points, &centroids, m);
        update_centroids(points, &w, m, &mut centroids);
        let j = objective(points, &w, &centroids, m);
        history.push(FcmIteration {
            objective: j,
            max_row_sum_error: row_err,
        });
        if (previous - j).abs() < cfg.tol {
            converged = true;
            break;
        }
        previous = j;
    }

    // Leave W consistent with the returned centroids.
    let (w, _) = update_memberships(points, &centroids, m);
    let objective = objective(points, &w, &centroids, m);
    let c = centroids.len();
    Ok(FcmModel {
        centroids: DMatrix::from_fn(c, points.dim, |j, k| centroids[j][k]),
        memberships: DMatrix::from_row_slice(points.len(), c, &w),
        objective,
        iterations: history.len(),
        converged,
        history,
    })
}
