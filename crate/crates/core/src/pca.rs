//! PCA energy reduction for feature vectors.
//!
//! Components are ranked by explained variance and the reducer keeps the
//! smallest count whose cumulative explained-variance ratio reaches the
//! requested energy. The sign of each component is fixed so that its
//! largest-magnitude coefficient is positive, which makes fits
//! reproducible across runs and platforms.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{dot, sym_eigen, Mat};
use crate::types::FeatureStore;

/// A fitted PCA basis.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaReducer {
    mean: Vec<f64>,
    /// Orthonormal rows, one per kept component.
    basis: Mat,
    /// Cumulative explained-variance ratio of the kept components.
    energy_kept: f64,
    /// All eigenvalues of the sample covariance, descending, clamped at 0.
    eigenvalues: Vec<f64>,
    /// Set when the input had no variance at all (all rows identical).
    degenerate: bool,
}

impl PcaReducer {
    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn basis(&self) -> &Mat {
        &self.basis
    }

    pub fn num_components(&self) -> usize {
        self.basis.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn energy_kept(&self) -> f64 {
        self.energy_kept
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    /// Projects one vector onto the kept components.
    pub fn project(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mean.len(),
                got: v.len(),
                context: "pca projection",
            });
        }
        let centered: Vec<f64> = v.iter().zip(&self.mean).map(|(x, m)| x - m).collect();
        Ok((0..self.basis.rows()).map(|c| dot(self.basis.row(c), &centered)).collect())
    }

    /// Maps a reduced vector back to the original space.
    pub fn reconstruct(&self, reduced: &[f64]) -> Result<Vec<f64>> {
        if reduced.len() != self.basis.rows() {
            return Err(Error::DimensionMismatch {
                expected: self.basis.rows(),
                got: reduced.len(),
                context: "pca reconstruction",
            });
        }
        let mut out = self.mean.clone();
        for (c, &y) in reduced.iter().enumerate() {
            for (o, b) in out.iter_mut().zip(self.basis.row(c)) {
                *o += y * b;
            }
        }
        Ok(out)
    }
}

/// Fits a PCA reducer keeping the requested fraction of the variance.
///
/// When the item count is smaller than the feature dimension the
/// eigenproblem is solved in the dual (Gram) space, which bounds the work
/// by `min(items, dim)` regardless of how wide the raw features are.
pub fn fit_pca(features: &FeatureStore, energy: f64) -> Result<PcaReducer> {
    if !(energy > 0.0 && energy <= 1.0) {
        return Err(Error::InvalidHyperparam { name: "pca_energy", value: energy });
    }
    let n = features.num_items();
    let dim = features.dim();
    if n < 2 {
        return Err(Error::NotEnoughData { context: "pca fit", needed: 2, got: n });
    }

    let mut mean = vec![0.0; dim];
    for i in 0..n {
        for (m, x) in mean.iter_mut().zip(features.vector(i)) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }

    let mut centered = Mat::zeros(n, dim);
    for i in 0..n {
        let row = centered.row_mut(i);
        for (j, x) in features.vector(i).iter().enumerate() {
            row[j] = x - mean[j];
        }
    }

    let (eigenvalues, vectors) = if dim <= n {
        covariance_eigen(&centered)
    } else {
        gram_eigen(&centered)
    };
    let eigenvalues: Vec<f64> = eigenvalues.iter().map(|&l| l.max(0.0)).collect();
    let total: f64 = eigenvalues.iter().sum();

    if total == 0.0 {
        return Ok(PcaReducer {
            mean,
            basis: Mat::zeros(0, dim),
            energy_kept: 0.0,
            eigenvalues,
            degenerate: true,
        });
    }

    let mut kept = 0;
    let mut cumulative = 0.0;
    for &l in &eigenvalues {
        kept += 1;
        cumulative += l;
        // tolerate rounding when the ratio sits exactly on the threshold
        if cumulative / total >= energy - 1e-12 {
            break;
        }
    }

    let mut basis = Mat::zeros(kept, dim);
    for c in 0..kept {
        basis.row_mut(c).copy_from_slice(vectors.row(c));
    }
    fix_signs(&mut basis);

    Ok(PcaReducer { mean, basis, energy_kept: cumulative / total, eigenvalues, degenerate: false })
}

/// Flips each row so its largest-magnitude entry is positive.
pub(crate) fn fix_signs(basis: &mut Mat) {
    for c in 0..basis.rows() {
        let row = basis.row_mut(c);
        let mut best = 0;
        for (j, x) in row.iter().enumerate() {
            if x.abs() > row[best].abs() {
                best = j;
            }
        }
        if row[best] < 0.0 {
            for x in row.iter_mut() {
                *x = -*x;
            }
        }
    }
}

/// Eigendecomposition of the `dim x dim` sample covariance.
fn covariance_eigen(centered: &Mat) -> (Vec<f64>, Mat) {
    let n = centered.rows();
    let dim = centered.cols();
    let denom = (n - 1) as f64;
    let mut cov = Mat::zeros(dim, dim);
    for i in 0..n {
        let row = centered.row(i);
        for a in 0..dim {
            let ra = row[a];
            if ra == 0.0 {
                continue;
            }
            let cov_row = cov.row_mut(a);
            for (b, rb) in row.iter().enumerate() {
                cov_row[b] += ra * rb;
            }
        }
    }
    for x in cov.data_mut() {
        *x /= denom;
    }
    sym_eigen(&cov)
}

/// Dual route: eigendecompose the `n x n` Gram matrix and map the
/// eigenvectors back to feature space. Yields the same nonzero spectrum
/// as the covariance route.
fn gram_eigen(centered: &Mat) -> (Vec<f64>, Mat) {
    let n = centered.rows();
    let dim = centered.cols();
    let denom = (n - 1) as f64;
    let mut gram = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let g = dot(centered.row(i), centered.row(j)) / denom;
            gram.set(i, j, g);
            gram.set(j, i, g);
        }
    }
    let (vals, dual_vecs) = sym_eigen(&gram);

    let mut vectors = Mat::zeros(n, dim);
    for c in 0..n {
        let l = vals[c].max(0.0);
        if l <= 1e-12 {
            continue;
        }
        // w = Xᵀ u / sqrt((n-1) λ), unit norm in feature space
        let scale = 1.0 / libm::sqrt(denom * l);
        let u = dual_vecs.row(c);
        let row = vectors.row_mut(c);
        for i in 0..n {
            let coeff = u[i] * scale;
            for (w, x) in row.iter_mut().zip(centered.row(i)) {
                *w += coeff * x;
            }
        }
    }
    (vals, vectors)
}

/// Projects every row of `features` through the reducer.
pub fn apply_pca(reducer: &PcaReducer, features: &FeatureStore) -> Result<FeatureStore> {
    if features.dim() != reducer.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: reducer.input_dim(),
            got: features.dim(),
            context: "pca apply",
        });
    }
    let n = features.num_items();
    let k = reducer.num_components();
    let mut data = Vec::with_capacity(n * k);
    for i in 0..n {
        data.extend_from_slice(&reducer.project(features.vector(i))?);
    }
    FeatureStore::new(n, k, data)
}
