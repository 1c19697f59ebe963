//! Train/test protocol, metrics, baselines, and the experiment driver.
//!
//! Items split 50/50 into train and test. For every test item, half of its
//! received ratings are held out for scoring and a budget controls how
//! many of the remaining ratings are revealed to the trainer: zero for the
//! purely visual setting, a fixed count, or the full non-held-out half.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::anchored;
use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::rng;
use crate::similarity::{build_similarity_graph, SimilarityGraph};
use crate::trainer;
use crate::types::{
    decode_prediction, FeatureStore, Hyperparams, Rating, RatingMatrix, RatingScale,
};

/// How many of a test item's ratings the trainer gets to see.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Budget {
    /// Zero known ratings: prediction relies on the item's features.
    Visual,
    /// A fixed number of known ratings.
    K(usize),
    /// Every rating that is not held out.
    FullHistory,
}

impl Budget {
    pub fn label(&self) -> String {
        match self {
            Budget::Visual => String::from("0"),
            Budget::K(k) => alloc::format!("{k}"),
            Budget::FullHistory => String::from("full"),
        }
    }
}

/// Split decisions for one test item.
#[derive(Debug, Clone, PartialEq)]
pub struct ItemPlan {
    pub item: usize,
    /// Ratings revealed to the trainer.
    pub known: Vec<(u32, f64)>,
    /// Ratings scored at evaluation time.
    pub held_out: Vec<(u32, f64)>,
    /// Set when the item had fewer spare ratings than the budget asked for.
    pub short_budget: bool,
}

/// Deterministic train/test split with per-item rating budgets.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalPlan {
    pub train_raters: Vec<usize>,
    pub train_items: Vec<usize>,
    pub test_items: Vec<ItemPlan>,
    /// Items excluded for having too few ratings, with their counts.
    pub excluded: Vec<(usize, usize)>,
    pub budget: Budget,
    pub seed: u64,
}

/// Builds the split: half the eligible items train, and each test item
/// holds out a uniformly random half of its received ratings. Items with
/// fewer than `min_received` ratings are excluded and reported.
pub fn make_plan(
    ratings: &RatingMatrix,
    budget: Budget,
    seed: u64,
    min_received: usize,
) -> Result<EvalPlan> {
    let by_item = ratings.received_by_item();
    let threshold = min_received.max(2);

    let mut eligible = Vec::new();
    let mut excluded = Vec::new();
    for (item, received) in by_item.iter().enumerate() {
        if received.len() >= threshold {
            eligible.push(item);
        } else {
            excluded.push((item, received.len()));
        }
    }
    if eligible.len() < 2 {
        return Err(Error::NotEnoughData {
            context: "evaluation split",
            needed: 2,
            got: eligible.len(),
        });
    }

    let mut split_rng = rng::stream(seed, "split");
    let mut order = eligible.clone();
    rng::shuffle(&mut split_rng, &mut order);
    let train_count = (order.len() + 1) / 2;
    let mut train_items: Vec<usize> = order[..train_count].to_vec();
    let mut test_idx: Vec<usize> = order[train_count..].to_vec();
    train_items.sort_unstable();
    test_idx.sort_unstable();

    let mut shuffle_rng = rng::stream(seed, "shuffle");
    let mut test_items = Vec::with_capacity(test_idx.len());
    for item in test_idx {
        let mut received = by_item[item].clone();
        rng::shuffle(&mut shuffle_rng, &mut received);
        let held = received.len() / 2;
        let held_out = received[..held].to_vec();
        let pool = &received[held..];
        let (known, short_budget) = match budget {
            Budget::Visual => (Vec::new(), false),
            Budget::K(k) => {
                let take = k.min(pool.len());
                (pool[..take].to_vec(), pool.len() < k)
            }
            Budget::FullHistory => (pool.to_vec(), false),
        };
        test_items.push(ItemPlan { item, known, held_out, short_budget });
    }

    Ok(EvalPlan {
        train_raters: (0..ratings.num_raters()).collect(),
        train_items,
        test_items,
        excluded,
        budget,
        seed,
    })
}

/// Exact-match percentage.
pub fn accuracy(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_paired(pred, truth)?;
    let hits = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(100.0 * hits as f64 / pred.len() as f64)
}

/// Mean absolute error.
pub fn mae(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_paired(pred, truth)?;
    Ok(pred.iter().zip(truth).map(|(p, t)| (p - t).abs()).sum::<f64>() / pred.len() as f64)
}

/// Sample Pearson correlation; errors on constant inputs.
pub fn pearson(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_paired(pred, truth)?;
    if pred.len() < 2 {
        return Err(Error::NotEnoughData { context: "pearson", needed: 2, got: pred.len() });
    }
    let n = pred.len() as f64;
    let mx = pred.iter().sum::<f64>() / n;
    let my = truth.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in pred.iter().zip(truth) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::DegenerateInput { context: "pearson of a constant list" });
    }
    Ok((sxy / libm::sqrt(sxx * syy)).clamp(-1.0, 1.0))
}

fn check_paired(pred: &[f64], truth: &[f64]) -> Result<()> {
    if pred.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            got: pred.len(),
            context: "metric lists",
        });
    }
    if pred.is_empty() {
        return Err(Error::NotEnoughData { context: "metric", needed: 1, got: 0 });
    }
    Ok(())
}

/// Most frequent rating value; ties go to the smaller value.
pub fn baseline_majority(ratings: &RatingMatrix) -> Result<f64> {
    if ratings.is_empty() {
        return Err(Error::NotEnoughData { context: "majority baseline", needed: 1, got: 0 });
    }
    // rating scales are half-step grids, so doubling gives exact integers
    let mut counts: alloc::collections::BTreeMap<i64, usize> = alloc::collections::BTreeMap::new();
    for t in ratings.triplets() {
        *counts.entry(libm::round(t.value * 2.0) as i64).or_insert(0) += 1;
    }
    let mut best_key = 0;
    let mut best_count = 0;
    for (&key, &count) in &counts {
        if count > best_count {
            best_key = key;
            best_count = count;
        }
    }
    Ok(best_key as f64 / 2.0)
}

/// Seeded random predictions: a fair coin on the binary scale, continuous
/// uniform over the star range otherwise. The continuous draw keeps the
/// expected MAE against an unbiased test set at (max-min)/3.
pub fn baseline_random(scale: RatingScale, seed: u64, n: usize) -> Vec<f64> {
    let mut r = rng::stream(seed, "baseline");
    (0..n)
        .map(|_| match scale {
            RatingScale::Binary => {
                if rng::next_f64(&mut r) < 0.5 {
                    -1.0
                } else {
                    1.0
                }
            }
            RatingScale::Stars => rng::next_in_range(&mut r, 0.5, 5.0),
        })
        .collect()
}

/// Training method selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Mf,
    MfVisReg,
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::Mf => "MF",
            Method::MfVisReg => "MF+VisReg",
        }
    }
}

/// Metrics of one experiment run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub method: Method,
    pub budget: Budget,
    pub seed: u64,
    pub accuracy: f64,
    pub mae: f64,
    /// Undefined when either list is constant.
    pub pearson: Option<f64>,
    pub num_evaluated: usize,
    pub num_train_triplets: usize,
    pub baseline_majority: f64,
    pub baseline_accuracy: f64,
}

/// Experiment configuration beyond the hyperparameters.
#[derive(Debug, Clone, Copy)]
pub struct ExperimentSpec {
    pub method: Method,
    pub budget: Budget,
    /// Replace every test item's latent factor with the anchored
    /// regression of its feature vector before scoring.
    pub coldstart: bool,
    pub latent_dim: usize,
    pub min_received: usize,
}

/// Runs one full train/evaluate cycle and reports held-out metrics.
///
/// Training sees every rating of the train items plus the revealed
/// ratings of the test items. Held-out ratings never enter training; this
/// is asserted structurally before scoring.
pub fn run_experiment(
    ratings: &RatingMatrix,
    features: Option<&FeatureStore>,
    hp: &Hyperparams,
    spec: ExperimentSpec,
) -> Result<ExperimentReport> {
    let plan = make_plan(ratings, spec.budget, hp.seed, spec.min_received)?;
    run_planned_experiment(ratings, features, hp, spec, &plan)
}

/// [`run_experiment`] with a caller-supplied plan (shared across methods).
pub fn run_planned_experiment(
    ratings: &RatingMatrix,
    features: Option<&FeatureStore>,
    hp: &Hyperparams,
    spec: ExperimentSpec,
    plan: &EvalPlan,
) -> Result<ExperimentReport> {
    let needs_features = spec.method == Method::MfVisReg || spec.coldstart;
    if needs_features && features.is_none() {
        return Err(Error::Invalid(String::from(
            "this experiment needs item features (visual regularization or cold start)",
        )));
    }
    if let Some(fs) = features {
        if fs.num_items() != ratings.num_items() {
            return Err(Error::DimensionMismatch {
                expected: ratings.num_items(),
                got: fs.num_items(),
                context: "feature item count",
            });
        }
    }

    // assemble training triplets: train items in full, test items per budget
    let mut in_train = vec![false; ratings.num_items()];
    for &item in &plan.train_items {
        in_train[item] = true;
    }
    let mut train_triplets: Vec<Rating> = ratings
        .triplets()
        .iter()
        .filter(|t| in_train[t.item as usize])
        .copied()
        .collect();
    for item_plan in &plan.test_items {
        for &(rater, value) in &item_plan.known {
            train_triplets.push(Rating { rater, item: item_plan.item as u32, value });
        }
    }
    let train_matrix = RatingMatrix::new(
        ratings.num_raters(),
        ratings.num_items(),
        train_triplets,
        ratings.scale(),
    )?;

    // leakage check: no held-out pair may appear among training triplets
    let mut train_pairs: Vec<(u32, u32)> =
        train_matrix.triplets().iter().map(|t| (t.rater, t.item)).collect();
    train_pairs.sort_unstable();
    for item_plan in &plan.test_items {
        for &(rater, _) in &item_plan.held_out {
            if train_pairs.binary_search(&(rater, item_plan.item as u32)).is_ok() {
                return Err(Error::Invalid(String::from(
                    "leakage: a held-out rating appeared in the training set",
                )));
            }
        }
    }

    let graph: Option<SimilarityGraph> = match spec.method {
        Method::MfVisReg => Some(build_similarity_graph(features.unwrap(), hp.neighbor_k)?),
        Method::Mf => None,
    };
    let effective_hp = match spec.method {
        Method::MfVisReg => hp.clone(),
        Method::Mf => Hyperparams { alpha2: 0.0, ..hp.clone() },
    };

    let (mut model, _report) =
        trainer::train(&train_matrix, graph.as_ref(), &effective_hp, spec.latent_dim)?;

    if spec.coldstart {
        let fs = features.unwrap();
        // anchors are the train items; regress every test item's feature
        let anchor_features = select_features(fs, &plan.train_items)?;
        let mut q_anchor = crate::linalg::Mat::zeros(plan.train_items.len(), model.d());
        for (row, &item) in plan.train_items.iter().enumerate() {
            q_anchor.row_mut(row).copy_from_slice(model.q_factor(item));
        }
        let projections =
            anchored::build_projections_for_factors(&q_anchor, &anchor_features, hp, 0)?;
        for item_plan in &plan.test_items {
            let q_hat = anchored::regress_query(
                fs.vector(item_plan.item),
                &projections,
                &anchor_features,
            )?;
            model.set_q_factor(item_plan.item, &q_hat)?;
        }
    }

    let majority = baseline_majority(&train_matrix)?;
    let mut pred = Vec::new();
    let mut truth = Vec::new();
    for item_plan in &plan.test_items {
        for &(rater, value) in &item_plan.held_out {
            let raw = dot(model.p_factor(rater as usize), model.q_factor(item_plan.item));
            pred.push(decode_prediction(raw, ratings.scale(), majority));
            truth.push(value);
        }
    }

    let baseline_pred = vec![majority; truth.len()];
    Ok(ExperimentReport {
        method: spec.method,
        budget: spec.budget,
        seed: hp.seed,
        accuracy: accuracy(&pred, &truth)?,
        mae: mae(&pred, &truth)?,
        pearson: pearson(&pred, &truth).ok(),
        num_evaluated: truth.len(),
        num_train_triplets: train_matrix.len(),
        baseline_majority: majority,
        baseline_accuracy: accuracy(&baseline_pred, &truth)?,
    })
}

/// Copies the selected rows into a new feature store.
pub fn select_features(features: &FeatureStore, items: &[usize]) -> Result<FeatureStore> {
    let mut data = Vec::with_capacity(items.len() * features.dim());
    for &item in items {
        if item >= features.num_items() {
            return Err(Error::IndexOutOfRange {
                kind: "item",
                index: item,
                bound: features.num_items(),
            });
        }
        data.extend_from_slice(features.vector(item));
    }
    FeatureStore::new(items.len(), features.dim(), data)
}
