//! Full-batch gradient-descent training of the latent factor model.
//!
//! The objective is squared error over observed ratings plus an L2 term on
//! both factor matrices, optionally extended with a visual term that pulls
//! the dot product of two items' appearance factors toward the cosine
//! similarity of their feature vectors. Training is deterministic for a
//! given seed: fixed initialization, fixed accumulation order, fixed
//! update schedule.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{dot, Mat};
use crate::rng;
use crate::similarity::SimilarityGraph;
use crate::types::{Hyperparams, LatentModel, RatingMatrix};

/// Early-stop threshold on the overall gradient norm.
pub const GRAD_NORM_FLOOR: f64 = 1e-8;

/// Loss value split into its additive parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossComponents {
    pub total: f64,
    pub data: f64,
    pub l2: f64,
    pub visual: f64,
}

/// Per-epoch record of a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epoch_loss: Vec<LossComponents>,
    pub epochs_run: usize,
    pub final_gradient_norm: f64,
}

/// Random uniform initialization in `[-init_scale, +init_scale]`,
/// deterministic per seed (stream `init`).
pub fn init_model(
    ratings: &RatingMatrix,
    d: usize,
    seed: u64,
    init_scale: f64,
) -> Result<LatentModel> {
    if d == 0 {
        return Err(Error::InvalidHyperparam { name: "latent_dim", value: 0.0 });
    }
    if !(init_scale >= 0.0) {
        return Err(Error::InvalidHyperparam { name: "init_scale", value: init_scale });
    }
    let mut r = rng::stream(seed, "init");
    let mut fill = |rows: usize| {
        let mut m = Mat::zeros(rows, d);
        for x in m.data_mut() {
            *x = (2.0 * rng::next_f64(&mut r) - 1.0) * init_scale;
        }
        m
    };
    let p = fill(ratings.num_raters());
    let q = fill(ratings.num_items());
    LatentModel::new(d, p, q)
}

fn check_shapes(
    model: &LatentModel,
    ratings: &RatingMatrix,
    graph: Option<&SimilarityGraph>,
) -> Result<()> {
    if model.num_raters() != ratings.num_raters() {
        return Err(Error::DimensionMismatch {
            expected: ratings.num_raters(),
            got: model.num_raters(),
            context: "rater count",
        });
    }
    if model.num_items() != ratings.num_items() {
        return Err(Error::DimensionMismatch {
            expected: ratings.num_items(),
            got: model.num_items(),
            context: "item count",
        });
    }
    if let Some(g) = graph {
        if g.num_items() != ratings.num_items() {
            return Err(Error::DimensionMismatch {
                expected: ratings.num_items(),
                got: g.num_items(),
                context: "graph item count",
            });
        }
    }
    Ok(())
}

/// Evaluates the training loss and its components.
///
/// With no graph and `alpha2 == 0` this is plain matrix factorization;
/// the visual term sums over the directed edges of the similarity graph.
pub fn loss(
    model: &LatentModel,
    ratings: &RatingMatrix,
    graph: Option<&SimilarityGraph>,
    hp: &Hyperparams,
) -> Result<LossComponents> {
    check_shapes(model, ratings, graph)?;

    let mut data = 0.0;
    for t in ratings.triplets() {
        let err = t.value - dot(model.p_factor(t.rater as usize), model.q_factor(t.item as usize));
        data += err * err;
    }
    data *= 0.5;

    let l2 = 0.5 * hp.alpha1 * (model.p().frobenius_sq() + model.q().frobenius_sq());

    let mut visual = 0.0;
    if hp.alpha2 > 0.0 {
        if let Some(g) = graph {
            for (f, gi, s) in g.edges() {
                let r = s - dot(model.q_factor(f), model.q_factor(gi));
                visual += r * r;
            }
            visual *= 0.5 * hp.alpha2;
        }
    }

    Ok(LossComponents { total: data + l2 + visual, data, l2, visual })
}

/// Analytic gradient of [`loss`] with respect to P and Q.
///
/// Returned matrices share the model's storage layout (one row per rater /
/// item). The visual term contributes to both endpoints of every directed
/// edge, which is exactly the derivative of the edge sum used by `loss`.
pub fn gradients(
    model: &LatentModel,
    ratings: &RatingMatrix,
    graph: Option<&SimilarityGraph>,
    hp: &Hyperparams,
) -> Result<(Mat, Mat)> {
    check_shapes(model, ratings, graph)?;

    let d = model.d();
    let mut dp = Mat::zeros(model.num_raters(), d);
    let mut dq = Mat::zeros(model.num_items(), d);

    for t in ratings.triplets() {
        let m = t.rater as usize;
        let f = t.item as usize;
        let pm = model.p_factor(m);
        let qf = model.q_factor(f);
        let err = dot(pm, qf) - t.value;
        let dpm = dp.row_mut(m);
        for k in 0..d {
            dpm[k] += err * qf[k];
        }
        let dqf = dq.row_mut(f);
        for k in 0..d {
            dqf[k] += err * pm[k];
        }
    }

    if hp.alpha1 > 0.0 {
        for (g, x) in dp.data_mut().iter_mut().zip(model.p().data()) {
            *g += hp.alpha1 * x;
        }
        for (g, x) in dq.data_mut().iter_mut().zip(model.q().data()) {
            *g += hp.alpha1 * x;
        }
    }

    if hp.alpha2 > 0.0 {
        if let Some(graph) = graph {
            for (f, g, s) in graph.edges() {
                let qf = model.q_factor(f);
                let qg = model.q_factor(g);
                let r = hp.alpha2 * (dot(qf, qg) - s);
                let row_f = dq.row_mut(f);
                for k in 0..d {
                    row_f[k] += r * qg[k];
                }
                let row_g = dq.row_mut(g);
                for k in 0..d {
                    row_g[k] += r * qf[k];
                }
            }
        }
    }

    Ok((dp, dq))
}

/// Full-batch gradient descent for `hp.epochs` steps.
///
/// Stops early when the gradient norm falls below [`GRAD_NORM_FLOOR`].
/// Aborts with an error naming the epoch if the loss stops being finite.
pub fn train(
    ratings: &RatingMatrix,
    graph: Option<&SimilarityGraph>,
    hp: &Hyperparams,
    d: usize,
) -> Result<(LatentModel, TrainReport)> {
    if ratings.is_empty() {
        return Err(Error::NotEnoughData { context: "training", needed: 1, got: 0 });
    }
    if !(hp.learning_rate >= 0.0) || !hp.learning_rate.is_finite() {
        return Err(Error::InvalidHyperparam { name: "learning_rate", value: hp.learning_rate });
    }
    if !(hp.alpha1 >= 0.0) {
        return Err(Error::InvalidHyperparam { name: "alpha1", value: hp.alpha1 });
    }
    if !(hp.alpha2 >= 0.0) {
        return Err(Error::InvalidHyperparam { name: "alpha2", value: hp.alpha2 });
    }

    let mut model = init_model(ratings, d, hp.seed, hp.init_scale)?;
    let mut epoch_loss = Vec::with_capacity(hp.epochs);
    let mut grad_norm = f64::INFINITY;

    for epoch in 0..hp.epochs {
        let (dp, dq) = gradients(&model, ratings, graph, hp)?;
        grad_norm = libm::sqrt(dp.frobenius_sq() + dq.frobenius_sq());

        let lr = hp.learning_rate;
        for (x, g) in model.p_mut().data_mut().iter_mut().zip(dp.data()) {
            *x -= lr * g;
        }
        for (x, g) in model.q_mut().data_mut().iter_mut().zip(dq.data()) {
            *x -= lr * g;
        }

        let components = loss(&model, ratings, graph, hp)?;
        if !components.total.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        epoch_loss.push(components);

        if grad_norm < GRAD_NORM_FLOOR {
            break;
        }
    }

    let epochs_run = epoch_loss.len();
    Ok((model, TrainReport { epoch_loss, epochs_run, final_gradient_norm: grad_norm }))
}
