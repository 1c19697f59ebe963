//! Synthetic benchmark data: planted low-rank preferences with features
//! that are a noisy linear image of the true item factors.
//!
//! The generator plants a bilinear sign structure (so binary ratings are
//! exactly realizable at the configured rank), biases the positive rate
//! through the last latent coordinate, and derives item features by
//! applying a random linear map to the true factors plus Gaussian noise.
//! This is the data family used by the benchmark-style tests: it has the
//! property that item similarity in feature space mirrors similarity in
//! latent space, so visual regularization and cold-start regression have
//! signal to exploit.

use alloc::vec::Vec;

use crate::linalg::Mat;
use crate::rng;
use crate::types::{FeatureStore, Rating, RatingMatrix, RatingScale};

#[derive(Debug, Clone, Copy)]
pub struct SynthConfig {
    pub num_raters: usize,
    pub num_items: usize,
    /// Rank of the planted structure (last coordinate carries the bias).
    pub latent_dim: usize,
    pub feature_dim: usize,
    /// Standard deviation of the additive feature noise.
    pub feature_noise: f64,
    /// Probability that a (rater, item) pair is observed.
    pub rating_density: f64,
    /// Mean of the items' last latent coordinate; > 0 skews ratings positive.
    pub positive_shift: f64,
    /// How many leading latent coordinates the feature map exposes;
    /// 0 exposes all of them. Lower values make features weaker evidence.
    pub feature_rank: usize,
    /// Number of rater taste clusters; 0 draws raters i.i.d. instead.
    pub rater_clusters: usize,
    /// Jitter of a rater around its cluster center.
    pub cluster_spread: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct SynthData {
    pub ratings: RatingMatrix,
    pub features: FeatureStore,
    pub true_p: Mat,
    pub true_q: Mat,
}

/// Generates one dataset; deterministic per seed.
pub fn generate(cfg: &SynthConfig) -> SynthData {
    assert!(cfg.latent_dim >= 1);
    let d = cfg.latent_dim;

    let mut p_rng = rng::stream(cfg.seed, "synth-p");
    let centers: Vec<alloc::vec::Vec<f64>> = if cfg.rater_clusters > 0 {
        let mut c_rng = rng::stream(cfg.seed, "synth-clusters");
        (0..cfg.rater_clusters)
            .map(|_| {
                let mut c: alloc::vec::Vec<f64> =
                    (0..d - 1).map(|_| rng::next_in_range(&mut c_rng, -1.0, 1.0)).collect();
                c.push(rng::next_in_range(&mut c_rng, 0.0, 1.0));
                c
            })
            .collect()
    } else {
        alloc::vec::Vec::new()
    };
    let mut true_p = Mat::zeros(cfg.num_raters, d);
    for m in 0..cfg.num_raters {
        let row = true_p.row_mut(m);
        if cfg.rater_clusters > 0 {
            let center = &centers[m % cfg.rater_clusters];
            for k in 0..d - 1 {
                row[k] = center[k]
                    + rng::next_in_range(&mut p_rng, -cfg.cluster_spread, cfg.cluster_spread);
            }
            row[d - 1] = (center[d - 1]
                + rng::next_in_range(&mut p_rng, -cfg.cluster_spread, cfg.cluster_spread))
            .clamp(0.0, 1.0);
        } else {
            for k in 0..d - 1 {
                row[k] = rng::next_in_range(&mut p_rng, -1.0, 1.0);
            }
            // nonnegative loading on the bias coordinate
            row[d - 1] = rng::next_in_range(&mut p_rng, 0.0, 1.0);
        }
    }

    let mut q_rng = rng::stream(cfg.seed, "synth-q");
    let mut true_q = Mat::zeros(cfg.num_items, d);
    for f in 0..cfg.num_items {
        let row = true_q.row_mut(f);
        for k in 0..d - 1 {
            row[k] = rng::next_in_range(&mut q_rng, -1.0, 1.0);
        }
        row[d - 1] =
            rng::next_in_range(&mut q_rng, cfg.positive_shift - 0.5, cfg.positive_shift + 0.5);
    }

    let mut mask_rng = rng::stream(cfg.seed, "synth-mask");
    let mut triplets = Vec::new();
    let mut per_item_count = alloc::vec![0usize; cfg.num_items];
    for m in 0..cfg.num_raters {
        for f in 0..cfg.num_items {
            if rng::next_f64(&mut mask_rng) < cfg.rating_density {
                let raw = crate::linalg::dot(true_p.row(m), true_q.row(f));
                let value = if raw >= 0.0 { 1.0 } else { -1.0 };
                triplets.push(Rating { rater: m as u32, item: f as u32, value });
                per_item_count[f] += 1;
            }
        }
    }
    // top up items that ended with fewer than 4 ratings so every item can
    // be split into a held-out and a known half
    for f in 0..cfg.num_items {
        let mut m = 0;
        while per_item_count[f] < 4 && m < cfg.num_raters {
            let already = triplets
                .iter()
                .any(|t| t.rater as usize == m && t.item as usize == f);
            if !already {
                let raw = crate::linalg::dot(true_p.row(m), true_q.row(f));
                let value = if raw >= 0.0 { 1.0 } else { -1.0 };
                triplets.push(Rating { rater: m as u32, item: f as u32, value });
                per_item_count[f] += 1;
            }
            m += 1;
        }
    }

    let ratings =
        RatingMatrix::new(cfg.num_raters, cfg.num_items, triplets, RatingScale::Binary)
            .expect("generated triplets are valid by construction");

    let mut map_rng = rng::stream(cfg.seed, "synth-map");
    let visible = if cfg.feature_rank == 0 { d } else { cfg.feature_rank.min(d) };
    let mut map = Mat::zeros(cfg.feature_dim, d);
    for r in 0..cfg.feature_dim {
        for k in 0..visible {
            map.set(r, k, rng::next_in_range(&mut map_rng, -1.0, 1.0));
        }
    }

    let mut noise_rng = rng::stream(cfg.seed, "synth-noise");
    let mut fdata = Vec::with_capacity(cfg.num_items * cfg.feature_dim);
    for f in 0..cfg.num_items {
        let projected = map.matvec(true_q.row(f));
        for v in projected {
            fdata.push(v + cfg.feature_noise * rng::next_gaussian(&mut noise_rng));
        }
    }
    let features = FeatureStore::new(cfg.num_items, cfg.feature_dim, fdata)
        .expect("generated features are finite");

    SynthData { ratings, features, true_p, true_q }
}

/// Fraction of positive ratings in the generated data.
pub fn positive_rate(ratings: &RatingMatrix) -> f64 {
    let pos = ratings.triplets().iter().filter(|t| t.value > 0.0).count();
    pos as f64 / ratings.len() as f64
}
