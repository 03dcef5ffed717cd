//! PCA of the PageRank feature matrix before clustering.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// How many principal components to keep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PcaTarget {
    Components(usize),
    /// Smallest number of components whose cumulative explained variance reaches this fraction.
    VarianceFraction(f64),
}

impl Default for PcaTarget {
    fn default() -> Self {
        PcaTarget::VarianceFraction(0.95)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub mean: DVector<f64>,
    /// k x d, orthonormal rows, ordered by decreasing explained variance.
    pub components: DMatrix<f64>,
    pub explained_variance: Vec<f64>,
    /// Trace of the sample covariance.
    pub total_variance: f64,
}

impl PcaModel {
    pub fn num_components(&self) -> usize {
        self.components.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.components.ncols()
    }

    pub fn explained_fraction(&self) -> f64 {
        self.explained_variance.iter().sum::<f64>() / self.total_variance
    }

    /// Maps projected rows back into input space.
    pub fn reconstruct(&self, projected: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if projected.ncols() != self.num_components() {
            return Err(Error::DimensionMismatch {
                expected: self.num_components(),
                actual: projected.ncols(),
            });
        }
        let mut out = projected * &self.components;
        for mut row in out.row_iter_mut() {
            row += self.mean.transpose();
        }
        Ok(out)
    }
}

pub fn pca_fit(x: &DMatrix<f64>, target: PcaTarget) -> Result<PcaModel> {
    let (n, d) = x.shape();
    if n < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: n });
    }
    if d == 0 {
        return Err(Error::Empty("PCA input has no columns"));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }

    let mean = x.row_mean().transpose();
    let centered = center(x, &mean);
    let covariance = (centered.transpose() * &centered) / (n - 1) as f64;
    let total_variance = covariance.trace();

    let eigen = covariance.symmetric_eigen();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eigen.eigenvalues[b].total_cmp(&eigen.eigenvalues[a]));
    let values: Vec<f64> = order
        .iter()
        .map(|&i| eigen.eigenvalues[i].max(0.0))
        .collect();

    let scale = total_variance.abs().max(f64::MIN_POSITIVE);
    if !(total_variance > 0.0) || values[0] <= 1e-12 * scale {
        return Err(Error::DegenerateFeatures);
    }

    let k = match target {
        PcaTarget::Components(k) => {
            if k == 0 || k > d {
                return Err(Error::InvalidConfig(format!(
                    "component count must be in 1..={d}, got {k}"
                )));
            }
            k
        }
        PcaTarget::VarianceFraction(v) => {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "variance fraction must lie in (0, 1], got {v}"
                )));
            }
            let goal = v * total_variance * (1.0 - 1e-12);
            let mut cumulative = 0.0;
            values
                .iter()
                .position(|&ev| {
                    cumulative += ev;
                    cumulative >= goal
                })
                .map_or(d, |p| p + 1)
        }
    };

    let mut components = DMatrix::zeros(k, d);
    for (row, &src) in order.iter().take(k).enumerate() {
        let v = eigen.eigenvectors.column(src);
        let pivot = v
            .iter()
            .copied()
            .max_by(|a, b| a.abs().total_cmp(&b.abs()))
            .unwrap_or(0.0);
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        for c in 0..d {
            components[(row, c)] = sign * v[c];
        }
    }

    Ok(PcaModel {
        mean,
        components,
        explained_variance: values[..k].to_vec(),
        total_variance,
    })
}

pub fn pca_transform(model: &PcaModel, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if x.ncols() != model.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.input_dim(),
            actual: x.ncols(),
        });
    }
    Ok(center(x, &model.mean) * model.components.transpose())
}

fn center(x: &DMatrix<f64>, mean: &DVector<f64>) -> DMatrix<f64> {
    let mut centered = x.clone();
    for mut row in centered.row_iter_mut() {
        row -= mean.transpose();
    }
    centered
}
