//! Cold-start regression from feature space into the latent item space.
//!
//! Every training item acts as an anchor. For an anchor, the features of
//! all other items are stacked as columns of a design matrix and a
//! similarity-weighted ridge regression reconstructs the anchor's feature
//! vector from its neighbors. The same weights transfer to the neighbors'
//! latent factors, which collapses into a per-anchor projection matrix
//! mapping any feature vector to a latent factor. A query with no rating
//! history is answered by the projection of its most similar anchor.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{cholesky, cholesky_solve, dot, Mat};
use crate::types::{decode_prediction, FeatureStore, Hyperparams, LatentModel, RatingScale};

/// Per-anchor projection matrices from feature space to latent space.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorProjections {
    d: usize,
    feature_dim: usize,
    lambda: f64,
    kappa: f64,
    /// One `d x feature_dim` matrix per anchor, indexed like the feature
    /// store the projections were built from.
    projections: Vec<Mat>,
}

impl AnchorProjections {
    pub fn from_parts(
        d: usize,
        feature_dim: usize,
        lambda: f64,
        kappa: f64,
        projections: Vec<Mat>,
    ) -> Result<Self> {
        for m in &projections {
            if m.rows() != d || m.cols() != feature_dim {
                return Err(Error::DimensionMismatch {
                    expected: d * feature_dim,
                    got: m.rows() * m.cols(),
                    context: "anchor projection shape",
                });
            }
            if !m.all_finite() {
                return Err(Error::NonFinite { context: "anchor projection" });
            }
        }
        Ok(AnchorProjections { d, feature_dim, lambda, kappa, projections })
    }

    pub fn num_anchors(&self) -> usize {
        self.projections.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn projection(&self, anchor: usize) -> &Mat {
        &self.projections[anchor]
    }
}

/// Neighbor indices of an anchor: every other item, optionally capped to
/// the `cap` most similar ones. Returned in ascending index order either
/// way, so the design matrix assembly is deterministic.
fn neighborhood(anchor: usize, features: &FeatureStore, cap: usize) -> Result<Vec<usize>> {
    let n = features.num_items();
    for item in 0..n {
        if features.is_zero_norm(item) {
            return Err(Error::ZeroNormVector { item: Some(item) });
        }
    }
    let mut others: Vec<usize> = (0..n).filter(|&i| i != anchor).collect();
    if cap > 0 && cap < others.len() {
        let va = features.vector(anchor);
        let na = features.norm(anchor);
        let mut scored: Vec<(usize, f64)> = others
            .iter()
            .map(|&i| (i, dot(va, features.vector(i)) / (na * features.norm(i))))
            .collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        scored.truncate(cap);
        others = scored.into_iter().map(|(i, _)| i).collect();
        others.sort_unstable();
    }
    Ok(others)
}

/// All pairwise feature dot products, shared across anchors.
fn full_gram(features: &FeatureStore) -> Mat {
    let n = features.num_items();
    let mut gram = Mat::zeros(n, n);
    for i in 0..n {
        let vi = features.vector(i);
        for j in i..n {
            let g = dot(vi, features.vector(j));
            gram.set(i, j, g);
            gram.set(j, i, g);
        }
    }
    gram
}

/// Assembles and factorizes the regularized normal matrix
/// `NᵀN + λ(κ ΓᵀΓ + (1-κ) I)` for one anchor.
fn factorized_system(
    anchor: usize,
    neighbors: &[usize],
    features: &FeatureStore,
    gram: &Mat,
    hp: &Hyperparams,
) -> Result<Mat> {
    let n = neighbors.len();
    let na = features.norm(anchor);

    let mut a = Mat::zeros(n, n);
    for (i, &gi) in neighbors.iter().enumerate() {
        for (j, &gj) in neighbors.iter().enumerate().skip(i) {
            let g = gram.get(gi, gj);
            a.set(i, j, g);
            a.set(j, i, g);
        }
        // similarity-weighted ridge: dissimilar neighbors are damped harder
        let s = gram.get(anchor, gi) / (na * features.norm(gi));
        let gamma = 1.0 - s;
        let diag = a.get(i, i) + hp.ridge_lambda * (hp.ridge_kappa * gamma * gamma + (1.0 - hp.ridge_kappa));
        a.set(i, i, diag);
    }

    cholesky(&a).map_err(|_| Error::SingularSystem { anchor })
}

/// Ridge weights reconstructing anchor `g`'s feature vector from all
/// other items' features.
pub fn solve_anchor_weights(
    anchor: usize,
    features: &FeatureStore,
    hp: &Hyperparams,
) -> Result<Vec<f64>> {
    if features.num_items() < 2 {
        return Err(Error::NotEnoughData {
            context: "anchored regression",
            needed: 2,
            got: features.num_items(),
        });
    }
    if anchor >= features.num_items() {
        return Err(Error::IndexOutOfRange {
            kind: "anchor",
            index: anchor,
            bound: features.num_items(),
        });
    }
    let neighbors = neighborhood(anchor, features, 0)?;
    let gram = full_gram(features);
    let l = factorized_system(anchor, &neighbors, features, &gram, hp)?;
    let rhs: Vec<f64> = neighbors.iter().map(|&i| gram.get(i, anchor)).collect();
    Ok(cholesky_solve(&l, &rhs))
}

/// Builds the projection matrix of every item in `features`, using the
/// aligned latent factors as regression targets.
pub fn build_projections(
    model: &LatentModel,
    features: &FeatureStore,
    hp: &Hyperparams,
) -> Result<AnchorProjections> {
    if model.num_items() != features.num_items() {
        return Err(Error::DimensionMismatch {
            expected: features.num_items(),
            got: model.num_items(),
            context: "projection item count",
        });
    }
    build_projections_for_factors(model.q(), features, hp, 0)
}

/// Like [`build_projections`] but takes the item factors directly and an
/// optional neighborhood cap (0 = all other items).
pub fn build_projections_for_factors(
    q: &Mat,
    features: &FeatureStore,
    hp: &Hyperparams,
    neighbor_cap: usize,
) -> Result<AnchorProjections> {
    let n = features.num_items();
    if q.rows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: q.rows(),
            context: "projection item count",
        });
    }
    if n < 2 {
        return Err(Error::NotEnoughData { context: "anchored regression", needed: 2, got: n });
    }
    let d = q.cols();
    let dim = features.dim();
    let gram = full_gram(features);

    let mut projections = Vec::with_capacity(n);
    for anchor in 0..n {
        let neighbors = neighborhood(anchor, features, neighbor_cap)?;
        let l = factorized_system(anchor, &neighbors, features, &gram, hp)?;

        // X solves A X = Nᵀ, one column of the projection per feature dim
        let mut m_g = Mat::zeros(d, dim);
        let mut rhs = vec![0.0; neighbors.len()];
        for c in 0..dim {
            for (i, &gi) in neighbors.iter().enumerate() {
                rhs[i] = features.vector(gi)[c];
            }
            let x = cholesky_solve(&l, &rhs);
            // M[:, c] = N_Q x
            for (i, &gi) in neighbors.iter().enumerate() {
                let qi = q.row(gi);
                let w = x[i];
                for r in 0..d {
                    m_g.set(r, c, m_g.get(r, c) + w * qi[r]);
                }
            }
        }
        if !m_g.all_finite() {
            return Err(Error::NonFinite { context: "anchor projection" });
        }
        projections.push(m_g);
    }

    Ok(AnchorProjections { d, feature_dim: dim, lambda: hp.ridge_lambda, kappa: hp.ridge_kappa, projections })
}

/// Index of the anchor most similar to the query (cosine; ties toward the
/// lower index).
pub fn nearest_anchor(query: &[f64], features: &FeatureStore) -> Result<usize> {
    if query.len() != features.dim() {
        return Err(Error::DimensionMismatch {
            expected: features.dim(),
            got: query.len(),
            context: "query features",
        });
    }
    let qn = libm::sqrt(dot(query, query));
    if qn == 0.0 {
        return Err(Error::ZeroNormVector { item: None });
    }
    let mut best = None;
    for item in 0..features.num_items() {
        if features.is_zero_norm(item) {
            return Err(Error::ZeroNormVector { item: Some(item) });
        }
        let s = dot(query, features.vector(item)) / (qn * features.norm(item));
        match best {
            None => best = Some((item, s)),
            Some((_, bs)) if s > bs => best = Some((item, s)),
            _ => {}
        }
    }
    best.map(|(i, _)| i).ok_or(Error::NotEnoughData { context: "anchor scan", needed: 1, got: 0 })
}

/// Maps a raw feature vector to an estimated latent factor through the
/// projection of its most similar anchor.
pub fn regress_query(
    query: &[f64],
    projections: &AnchorProjections,
    features: &FeatureStore,
) -> Result<Vec<f64>> {
    if features.num_items() != projections.num_anchors() {
        return Err(Error::DimensionMismatch {
            expected: projections.num_anchors(),
            got: features.num_items(),
            context: "anchor count",
        });
    }
    if query.len() != projections.feature_dim() {
        return Err(Error::DimensionMismatch {
            expected: projections.feature_dim(),
            got: query.len(),
            context: "query features",
        });
    }
    let anchor = nearest_anchor(query, features)?;
    Ok(projections.projection(anchor).matvec(query))
}

/// Cold-start rating: regress the query into latent space, dot with the
/// rater's preference factor, decode onto the scale.
pub fn predict_cold(
    query: &[f64],
    projections: &AnchorProjections,
    features: &FeatureStore,
    model: &LatentModel,
    rater: usize,
    scale: RatingScale,
    majority: f64,
) -> Result<f64> {
    if rater >= model.num_raters() {
        return Err(Error::IndexOutOfRange { kind: "rater", index: rater, bound: model.num_raters() });
    }
    let q_hat = regress_query(query, projections, features)?;
    if q_hat.len() != model.d() {
        return Err(Error::DimensionMismatch {
            expected: model.d(),
            got: q_hat.len(),
            context: "regressed factor",
        });
    }
    Ok(decode_prediction(dot(model.p_factor(rater), &q_hat), scale, majority))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::similarity::cosine_similarity;

    fn store(rows: &[&[f64]]) -> FeatureStore {
        let n = rows.len();
        let dim = rows[0].len();
        let mut data = Vec::new();
        for r in rows {
            data.extend_from_slice(r);
        }
        FeatureStore::new(n, dim, data).unwrap()
    }

    fn random_store(rng: &mut rand_chacha::ChaCha8Rng, n: usize, dim: usize) -> FeatureStore {
        let data: Vec<f64> = (0..n * dim).map(|_| rng::next_in_range(rng, -1.0, 1.0)).collect();
        FeatureStore::new(n, dim, data).unwrap()
    }

    fn hp(lambda: f64, kappa: f64) -> Hyperparams {
        Hyperparams { ridge_lambda: lambda, ridge_kappa: kappa, ..Hyperparams::default() }
    }

    /// Gauss-Jordan inversion with partial pivoting; test-only oracle.
    fn invert(a: &Mat) -> Mat {
        let n = a.rows();
        let mut aug = Mat::zeros(n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug.set(i, j, a.get(i, j));
            }
            aug.set(i, n + i, 1.0);
        }
        for col in 0..n {
            let mut pivot = col;
            for r in col + 1..n {
                if aug.get(r, col).abs() > aug.get(pivot, col).abs() {
                    pivot = r;
                }
            }
            for j in 0..2 * n {
                let tmp = aug.get(col, j);
                aug.set(col, j, aug.get(pivot, j));
                aug.set(pivot, j, tmp);
            }
            let p = aug.get(col, col);
            assert!(p.abs() > 1e-14, "oracle inversion hit a zero pivot");
            for j in 0..2 * n {
                aug.set(col, j, aug.get(col, j) / p);
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let factor = aug.get(r, col);
                for j in 0..2 * n {
                    aug.set(r, j, aug.get(r, j) - factor * aug.get(col, j));
                }
            }
        }
        let mut inv = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                inv.set(i, j, aug.get(i, n + j));
            }
        }
        inv
    }

    /// Assembles the anchor system exactly as written, via the oracle
    /// inverse rather than a Cholesky solve.
    fn oracle_weights(anchor: usize, features: &FeatureStore, hp: &Hyperparams) -> Vec<f64> {
        let n = features.num_items();
        let neighbors: Vec<usize> = (0..n).filter(|&i| i != anchor).collect();
        let k = neighbors.len();
        let mut a = Mat::zeros(k, k);
        for i in 0..k {
            for j in 0..k {
                a.set(i, j, dot(features.vector(neighbors[i]), features.vector(neighbors[j])));
            }
        }
        for i in 0..k {
            let s =
                cosine_similarity(features.vector(anchor), features.vector(neighbors[i])).unwrap();
            let g = 1.0 - s;
            let v = a.get(i, i)
                + hp.ridge_lambda * (hp.ridge_kappa * g * g + (1.0 - hp.ridge_kappa));
            a.set(i, i, v);
        }
        let inv = invert(&a);
        let rhs: Vec<f64> =
            neighbors.iter().map(|&i| dot(features.vector(i), features.vector(anchor))).collect();
        inv.matvec(&rhs)
    }

    /// Gradient-descent minimization of the ridge objective; test oracle.
    fn minimize_objective(anchor: usize, features: &FeatureStore, hp: &Hyperparams) -> Vec<f64> {
        let n = features.num_items();
        let neighbors: Vec<usize> = (0..n).filter(|&i| i != anchor).collect();
        let k = neighbors.len();
        let va = features.vector(anchor);
        let gammas: Vec<f64> = neighbors
            .iter()
            .map(|&i| 1.0 - cosine_similarity(va, features.vector(i)).unwrap())
            .collect();

        let grad = |beta: &[f64]| -> Vec<f64> {
            // residual r = N beta - v
            let dim = features.dim();
            let mut resid = vec![0.0; dim];
            for c in 0..dim {
                let mut s = -va[c];
                for (i, &gi) in neighbors.iter().enumerate() {
                    s += features.vector(gi)[c] * beta[i];
                }
                resid[c] = s;
            }
            (0..k)
                .map(|i| {
                    let mut g = 0.0;
                    for c in 0..dim {
                        g += 2.0 * features.vector(neighbors[i])[c] * resid[c];
                    }
                    g += 2.0 * hp.ridge_lambda * hp.ridge_kappa * gammas[i] * gammas[i] * beta[i];
                    g += 2.0 * hp.ridge_lambda * (1.0 - hp.ridge_kappa) * beta[i];
                    g
                })
                .collect()
        };

        let mut beta = vec![0.0; k];
        // conservative step below the inverse Lipschitz constant
        let mut lip = 2.0 * hp.ridge_lambda;
        for &gi in &neighbors {
            lip += 2.0 * dot(features.vector(gi), features.vector(gi));
        }
        let step = 1.0 / lip;
        for _ in 0..2_000_000 {
            let g = grad(&beta);
            let gn = libm::sqrt(dot(&g, &g));
            if gn < 1e-12 {
                break;
            }
            for i in 0..k {
                beta[i] -= step * g[i];
            }
        }
        beta
    }

    #[test]
    fn perfect_neighbor_reconstructs() {
        let fs = store(&[&[1.0, 2.0], &[1.0, 2.0]]);
        let beta = solve_anchor_weights(0, &fs, &hp(1e-6, 0.0)).unwrap();
        assert_eq!(beta.len(), 1);
        assert!((beta[0] - 1.0).abs() < 1e-4, "beta = {}", beta[0]);
    }

    #[test]
    fn kappa_zero_equals_textbook_ridge() {
        let mut r = rng::stream(31, "ridge");
        let fs = random_store(&mut r, 6, 3);
        let hp0 = hp(0.25, 0.0);
        for anchor in 0..6 {
            let beta = solve_anchor_weights(anchor, &fs, &hp0).unwrap();
            // textbook ridge: (NᵀN + λI)⁻¹ Nᵀ v via the oracle inverse
            let oracle = oracle_weights(anchor, &fs, &hp0);
            for (b, o) in beta.iter().zip(&oracle) {
                assert!((b - o).abs() < 1e-8, "anchor {anchor}: {b} vs {o}");
            }
        }
    }

    #[test]
    fn weights_match_objective_minimization() {
        let mut r = rng::stream(8, "ridge-objective");
        let fs = random_store(&mut r, 5, 3);
        let hp1 = hp(0.1, 0.5);
        for anchor in 0..5 {
            let beta = solve_anchor_weights(anchor, &fs, &hp1).unwrap();
            let oracle = minimize_objective(anchor, &fs, &hp1);
            for (b, o) in beta.iter().zip(&oracle) {
                assert!((b - o).abs() < 1e-6, "anchor {anchor}: {b} vs {o}");
            }
        }
    }

    #[test]
    fn lambda_zero_on_rank_deficient_data_errors() {
        // two duplicate neighbors make NᵀN singular
        let fs = store(&[&[1.0, 0.0], &[0.0, 1.0], &[0.0, 1.0]]);
        match solve_anchor_weights(0, &fs, &hp(0.0, 0.0)) {
            Err(Error::SingularSystem { .. }) => {}
            other => panic!("expected singular system, got {other:?}"),
        }
    }

    #[test]
    fn in_span_anchor_has_vanishing_residual_as_lambda_goes_to_zero() {
        // anchor = combination of three independent neighbors
        let fs = store(&[
            &[1.0, 1.0, 1.0], // anchor: sum of the others
            &[1.0, 0.0, 0.0],
            &[0.0, 1.0, 0.0],
            &[0.0, 0.0, 1.0],
        ]);
        let beta = solve_anchor_weights(0, &fs, &hp(1e-10, 0.0)).unwrap();
        let mut resid = [1.0, 1.0, 1.0];
        for (i, b) in beta.iter().enumerate() {
            for c in 0..3 {
                resid[c] -= b * fs.vector(i + 1)[c];
            }
        }
        let rn = libm::sqrt(resid.iter().map(|x| x * x).sum::<f64>());
        assert!(rn < 1e-6, "residual {rn}");
    }

    #[test]
    fn higher_similarity_gets_larger_weight_at_kappa_one() {
        // unit neighbors at 20 and 50 degrees from the anchor
        let (a1, a2) = (20f64.to_radians(), 50f64.to_radians());
        let fs = store(&[
            &[1.0, 0.0],
            &[a1.cos(), a1.sin()],
            &[a2.cos(), -a2.sin()],
        ]);
        let beta = solve_anchor_weights(0, &fs, &hp(0.5, 1.0)).unwrap();
        assert!(
            beta[0].abs() > beta[1].abs(),
            "closer neighbor should dominate: {beta:?}"
        );
    }

    fn random_model(rng: &mut rand_chacha::ChaCha8Rng, items: usize, raters: usize, d: usize) -> LatentModel {
        let mut p = Mat::zeros(raters, d);
        let mut q = Mat::zeros(items, d);
        for x in p.data_mut() {
            *x = rng::next_in_range(rng, -1.0, 1.0);
        }
        for x in q.data_mut() {
            *x = rng::next_in_range(rng, -1.0, 1.0);
        }
        LatentModel::new(d, p, q).unwrap()
    }

    #[test]
    fn projection_identity_m_v_equals_nq_beta() {
        let mut r = rng::stream(12, "proj-identity");
        let fs = random_store(&mut r, 7, 4);
        let model = random_model(&mut r, 7, 3, 2);
        let hp1 = hp(0.2, 0.5);
        let proj = build_projections(&model, &fs, &hp1).unwrap();
        for anchor in 0..7 {
            let beta = solve_anchor_weights(anchor, &fs, &hp1).unwrap();
            let mv = proj.projection(anchor).matvec(fs.vector(anchor));
            // N_Q beta with the same ascending-index neighbor order
            let neighbors: Vec<usize> = (0..7).filter(|&i| i != anchor).collect();
            for k in 0..2 {
                let nq_beta: f64 = neighbors
                    .iter()
                    .zip(&beta)
                    .map(|(&g, b)| model.q_factor(g)[k] * b)
                    .sum();
                assert!((mv[k] - nq_beta).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn duplicate_corpus_reconstructs_shared_factor() {
        // all items share one feature/Q pair
        let fs = store(&[&[0.3, -0.8], &[0.3, -0.8], &[0.3, -0.8]]);
        let mut q = Mat::zeros(3, 2);
        for i in 0..3 {
            q.row_mut(i).copy_from_slice(&[1.5, -0.5]);
        }
        let p = Mat::zeros(1, 2);
        let model = LatentModel::new(2, p, q).unwrap();
        let proj = build_projections(&model, &fs, &hp(1e-6, 0.0)).unwrap();
        for anchor in 0..3 {
            let q_hat = proj.projection(anchor).matvec(fs.vector(anchor));
            assert!((q_hat[0] - 1.5).abs() < 1e-4);
            assert!((q_hat[1] + 0.5).abs() < 1e-4);
        }
    }

    #[test]
    fn projection_matches_reassembly_oracle() {
        let mut r = rng::stream(23, "proj-oracle");
        let fs = random_store(&mut r, 6, 3);
        let model = random_model(&mut r, 6, 2, 2);
        let hp1 = hp(0.3, 0.4);
        let proj = build_projections(&model, &fs, &hp1).unwrap();

        for anchor in 0..6 {
            // oracle: M = N_Q A⁻¹ Nᵀ assembled with explicit inversion
            let neighbors: Vec<usize> = (0..6).filter(|&i| i != anchor).collect();
            let k = neighbors.len();
            let mut a = Mat::zeros(k, k);
            for i in 0..k {
                for j in 0..k {
                    a.set(i, j, dot(fs.vector(neighbors[i]), fs.vector(neighbors[j])));
                }
            }
            for i in 0..k {
                let s = cosine_similarity(fs.vector(anchor), fs.vector(neighbors[i])).unwrap();
                let g = 1.0 - s;
                let v = a.get(i, i) + 0.3 * (0.4 * g * g + 0.6);
                a.set(i, i, v);
            }
            let inv = invert(&a);
            // n_t: k x dim, n_q: d x k
            let mut n_t = Mat::zeros(k, 3);
            for i in 0..k {
                n_t.row_mut(i).copy_from_slice(fs.vector(neighbors[i]));
            }
            let mut n_q = Mat::zeros(2, k);
            for (i, &g) in neighbors.iter().enumerate() {
                for rr in 0..2 {
                    n_q.set(rr, i, model.q_factor(g)[rr]);
                }
            }
            let oracle = n_q.matmul(&inv).matmul(&n_t);
            for rr in 0..2 {
                for c in 0..3 {
                    let got = proj.projection(anchor).get(rr, c);
                    assert!(
                        (got - oracle.get(rr, c)).abs() < 1e-8,
                        "anchor {anchor} entry ({rr},{c}): {got} vs {}",
                        oracle.get(rr, c)
                    );
                }
            }
        }
    }

    #[test]
    fn query_identical_to_anchor_matches_it() {
        let mut r = rng::stream(3, "anchor-match");
        let fs = random_store(&mut r, 10, 4);
        for g in 0..10 {
            assert_eq!(nearest_anchor(fs.vector(g), &fs).unwrap(), g);
        }
    }

    #[test]
    fn query_scaling_preserves_anchor_and_scales_factor() {
        let mut r = rng::stream(14, "query-scale");
        let fs = random_store(&mut r, 8, 3);
        let model = random_model(&mut r, 8, 2, 2);
        let proj = build_projections(&model, &fs, &hp(0.1, 0.5)).unwrap();
        let query: Vec<f64> = fs.vector(4).to_vec();
        let scaled: Vec<f64> = query.iter().map(|x| 3.0 * x).collect();
        let q1 = regress_query(&query, &proj, &fs).unwrap();
        let q2 = regress_query(&scaled, &proj, &fs).unwrap();
        for (a, b) in q1.iter().zip(&q2) {
            assert!((3.0 * a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn nearest_anchor_matches_exhaustive_scan() {
        let mut r = rng::stream(19, "scan-oracle");
        let fs = random_store(&mut r, 20, 5);
        for _ in 0..25 {
            let query: Vec<f64> = (0..5).map(|_| rng::next_in_range(&mut r, -1.0, 1.0)).collect();
            let got = nearest_anchor(&query, &fs).unwrap();
            let mut best = (0, f64::NEG_INFINITY);
            for g in 0..20 {
                let s = cosine_similarity(&query, fs.vector(g)).unwrap();
                if s > best.1 {
                    best = (g, s);
                }
            }
            assert_eq!(got, best.0);
        }
    }

    #[test]
    fn zero_norm_query_is_an_error() {
        let mut r = rng::stream(2, "zero-query");
        let fs = random_store(&mut r, 4, 3);
        let model = random_model(&mut r, 4, 2, 2);
        let proj = build_projections(&model, &fs, &hp(0.1, 0.5)).unwrap();
        assert!(matches!(
            regress_query(&[0.0, 0.0, 0.0], &proj, &fs),
            Err(Error::ZeroNormVector { .. })
        ));
    }

    #[test]
    fn zero_preference_decodes_to_majority() {
        let fs = store(&[&[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]]);
        let mut q = Mat::zeros(3, 2);
        for i in 0..3 {
            q.set(i, 0, 1.0);
        }
        let p = Mat::zeros(2, 2); // raters with zero preference factors
        let model = LatentModel::new(2, p, q).unwrap();
        let proj = build_projections(&model, &fs, &hp(0.1, 0.5)).unwrap();
        let pred =
            predict_cold(&[1.0, 0.5], &proj, &fs, &model, 0, RatingScale::Binary, -1.0).unwrap();
        assert_eq!(pred, -1.0);
    }

    #[test]
    fn reconstruction_identity_for_duplicated_training_item() {
        // when the anchor's own factor is exactly reconstructible from its
        // neighbors, a query equal to that feature reproduces the warm path
        let fs = store(&[&[0.5, 0.5], &[0.5, 0.5], &[0.5, 0.5]]);
        let mut q = Mat::zeros(3, 2);
        for i in 0..3 {
            q.row_mut(i).copy_from_slice(&[0.9, -0.2]);
        }
        let mut p = Mat::zeros(1, 2);
        p.row_mut(0).copy_from_slice(&[1.0, 1.0]);
        let model = LatentModel::new(2, p, q).unwrap();
        let proj = build_projections(&model, &fs, &hp(1e-6, 0.0)).unwrap();
        let cold =
            predict_cold(&[0.5, 0.5], &proj, &fs, &model, 0, RatingScale::Binary, 1.0).unwrap();
        let warm = crate::types::predict_rating(&model, 0, 0).unwrap();
        let warm_decoded = decode_prediction(warm, RatingScale::Binary, 1.0);
        assert_eq!(cold, warm_decoded);
    }
}
