//! Domain types shared by every module: ratings, features, latent factors,
//! and hyperparameters.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};

/// Rating scale of a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RatingScale {
    /// Like / dislike ratings stored as +1 / -1.
    Binary,
    /// Star ratings from 0.5 to 5.0 in half-star increments.
    Stars,
}

impl RatingScale {
    /// Whether `value` lies exactly on this scale.
    pub fn contains(&self, value: f64) -> bool {
        match self {
            RatingScale::Binary => value == 1.0 || value == -1.0,
            RatingScale::Stars => {
                if !(0.5..=5.0).contains(&value) {
                    return false;
                }
                let doubled = value * 2.0;
                doubled == libm::round(doubled)
            }
        }
    }

    pub fn min(&self) -> f64 {
        match self {
            RatingScale::Binary => -1.0,
            RatingScale::Stars => 0.5,
        }
    }

    pub fn max(&self) -> f64 {
        match self {
            RatingScale::Binary => 1.0,
            RatingScale::Stars => 5.0,
        }
    }
}

/// One observed rating.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rating {
    pub rater: u32,
    pub item: u32,
    pub value: f64,
}

/// Sparse set of (rater, item, rating) triplets.
///
/// Each (rater, item) pair appears at most once, all values lie on the
/// declared scale, and all indices are in range. Construction enforces
/// these invariants so downstream code can rely on them.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingMatrix {
    num_raters: usize,
    num_items: usize,
    triplets: Vec<Rating>,
    scale: RatingScale,
}

impl RatingMatrix {
    pub fn new(
        num_raters: usize,
        num_items: usize,
        triplets: Vec<Rating>,
        scale: RatingScale,
    ) -> Result<Self> {
        for t in &triplets {
            if t.rater as usize >= num_raters {
                return Err(Error::IndexOutOfRange {
                    kind: "rater",
                    index: t.rater as usize,
                    bound: num_raters,
                });
            }
            if t.item as usize >= num_items {
                return Err(Error::IndexOutOfRange {
                    kind: "item",
                    index: t.item as usize,
                    bound: num_items,
                });
            }
            if !scale.contains(t.value) {
                return Err(Error::OffScaleRating { value: t.value });
            }
        }
        let mut pairs: Vec<(u32, u32)> = triplets.iter().map(|t| (t.rater, t.item)).collect();
        pairs.sort_unstable();
        for w in pairs.windows(2) {
            if w[0] == w[1] {
                return Err(Error::DuplicateRating {
                    rater: w[0].0 as usize,
                    item: w[0].1 as usize,
                });
            }
        }
        Ok(RatingMatrix { num_raters, num_items, triplets, scale })
    }

    pub fn num_raters(&self) -> usize {
        self.num_raters
    }

    pub fn num_items(&self) -> usize {
        self.num_items
    }

    pub fn scale(&self) -> RatingScale {
        self.scale
    }

    pub fn triplets(&self) -> &[Rating] {
        &self.triplets
    }

    pub fn len(&self) -> usize {
        self.triplets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triplets.is_empty()
    }

    /// Ratings received by each item, as (rater, value) lists indexed by item.
    pub fn received_by_item(&self) -> Vec<Vec<(u32, f64)>> {
        let mut by_item = alloc::vec![Vec::new(); self.num_items];
        for t in &self.triplets {
            by_item[t.item as usize].push((t.rater, t.value));
        }
        by_item
    }
}

/// Dense per-item feature vectors, one row per item.
///
/// Row norms are cached at construction; zero-norm rows are legal but
/// flagged, since cosine similarity is undefined for them.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStore {
    num_items: usize,
    dim: usize,
    vectors: Mat,
    norms: Vec<f64>,
}

impl FeatureStore {
    pub fn new(num_items: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != num_items * dim {
            return Err(Error::DimensionMismatch {
                expected: num_items * dim,
                got: data.len(),
                context: "feature store data",
            });
        }
        if !data.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite { context: "feature vectors" });
        }
        let vectors = Mat::from_vec(num_items, dim, data);
        let norms = (0..num_items).map(|i| linalg::norm(vectors.row(i))).collect();
        Ok(FeatureStore { num_items, dim, vectors, norms })
    }

    pub fn num_items(&self) -> usize {
        self.num_items
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vector(&self, item: usize) -> &[f64] {
        self.vectors.row(item)
    }

    pub fn norm(&self, item: usize) -> f64 {
        self.norms[item]
    }

    pub fn is_zero_norm(&self, item: usize) -> bool {
        self.norms[item] == 0.0
    }

    /// Items whose feature vector has zero norm.
    pub fn zero_norm_items(&self) -> Vec<usize> {
        (0..self.num_items).filter(|&i| self.is_zero_norm(i)).collect()
    }
}

/// Paired latent factor matrices: `P` holds one preference vector per
/// rater, `Q` one appearance vector per item, both of dimension `d`.
///
/// A rating is approximated by the dot product of the rater's and the
/// item's factor. Factors are stored row-per-entity for contiguous access.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentModel {
    d: usize,
    p: Mat,
    q: Mat,
}

/// Latent dimension used throughout when nothing else is requested.
pub const DEFAULT_LATENT_DIM: usize = 20;

impl LatentModel {
    pub fn new(d: usize, p: Mat, q: Mat) -> Result<Self> {
        if p.cols() != d || q.cols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: if p.cols() != d { p.cols() } else { q.cols() },
                context: "latent factor width",
            });
        }
        if !p.all_finite() || !q.all_finite() {
            return Err(Error::NonFinite { context: "latent factors" });
        }
        Ok(LatentModel { d, p, q })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn num_raters(&self) -> usize {
        self.p.rows()
    }

    pub fn num_items(&self) -> usize {
        self.q.rows()
    }

    pub fn p(&self) -> &Mat {
        &self.p
    }

    pub fn q(&self) -> &Mat {
        &self.q
    }

    pub(crate) fn p_mut(&mut self) -> &mut Mat {
        &mut self.p
    }

    pub(crate) fn q_mut(&mut self) -> &mut Mat {
        &mut self.q
    }

    /// Preference factor of one rater.
    pub fn p_factor(&self, rater: usize) -> &[f64] {
        self.p.row(rater)
    }

    /// Appearance factor of one item.
    pub fn q_factor(&self, item: usize) -> &[f64] {
        self.q.row(item)
    }

    /// Overwrites one item's appearance factor (cold-start substitution).
    pub fn set_q_factor(&mut self, item: usize, factor: &[f64]) -> Result<()> {
        if factor.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: factor.len(),
                context: "q factor",
            });
        }
        self.q.row_mut(item).copy_from_slice(factor);
        Ok(())
    }
}

/// Raw (unclamped, undecoded) predicted rating: `P_raterᵀ Q_item`.
pub fn predict_rating(model: &LatentModel, rater: usize, item: usize) -> Result<f64> {
    if rater >= model.num_raters() {
        return Err(Error::IndexOutOfRange { kind: "rater", index: rater, bound: model.num_raters() });
    }
    if item >= model.num_items() {
        return Err(Error::IndexOutOfRange { kind: "item", index: item, bound: model.num_items() });
    }
    Ok(linalg::dot(model.p_factor(rater), model.q_factor(item)))
}

/// Maps a raw prediction onto the rating scale.
///
/// Binary: sign of the raw value, with an exact zero decoded to the
/// training-set majority rating. Stars: clamped to [0.5, 5.0] without
/// rounding, so fractional errors stay visible to MAE.
pub fn decode_prediction(raw: f64, scale: RatingScale, majority: f64) -> f64 {
    match scale {
        RatingScale::Binary => {
            if raw > 0.0 {
                1.0
            } else if raw < 0.0 {
                -1.0
            } else {
                majority
            }
        }
        RatingScale::Stars => raw.clamp(0.5, 5.0),
    }
}

/// Training and regression hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparams {
    /// L2 weight on both factor matrices.
    pub alpha1: f64,
    /// Weight of the visual similarity regularizer.
    pub alpha2: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Half-width of the uniform factor initialization.
    pub init_scale: f64,
    /// Neighbors kept per item in the similarity graph; 0 keeps all pairs.
    pub neighbor_k: usize,
    /// Ridge regularization strength for anchored regression.
    pub ridge_lambda: f64,
    /// Mix between similarity-weighted and plain ridge penalty, in [0, 1].
    pub ridge_kappa: f64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            alpha1: 0.1,
            alpha2: 0.1,
            learning_rate: 0.01,
            epochs: 200,
            seed: 0,
            init_scale: 0.1,
            neighbor_k: 50,
            ridge_lambda: 0.1,
            ridge_kappa: 0.5,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha1 >= 0.0) {
            return Err(Error::InvalidHyperparam { name: "alpha1", value: self.alpha1 });
        }
        if !(self.alpha2 >= 0.0) {
            return Err(Error::InvalidHyperparam { name: "alpha2", value: self.alpha2 });
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidHyperparam {
                name: "learning_rate",
                value: self.learning_rate,
            });
        }
        if !(self.init_scale >= 0.0) {
            return Err(Error::InvalidHyperparam { name: "init_scale", value: self.init_scale });
        }
        if !(self.ridge_lambda >= 0.0) {
            return Err(Error::InvalidHyperparam { name: "ridge_lambda", value: self.ridge_lambda });
        }
        if !(0.0..=1.0).contains(&self.ridge_kappa) {
            return Err(Error::InvalidHyperparam { name: "ridge_kappa", value: self.ridge_kappa });
        }
        Ok(())
    }
}
