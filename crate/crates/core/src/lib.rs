//! Core algorithms for preference prediction from sparse rating histories.
//!
//! The crate trains latent factor models over sparse (rater, item, rating)
//! triplets, optionally regularized by the visual similarity of the rated
//! items, and answers cold-start queries (items with no rating history at
//! all) by regressing a raw feature vector into the learned latent space
//! through per-anchor ridge projections.
//!
//! Everything in here is pure computation over in-memory data: no files,
//! no threads, no global state. The companion `visreg` crate adds dataset
//! loaders, persistence formats, and a command-line front end.

#![cfg_attr(not(test), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

pub mod analysis;
pub mod anchored;
pub mod error;
pub mod eval;
pub mod linalg;
pub mod pca;
pub mod rng;
pub mod similarity;
pub mod synth;
pub mod trainer;
pub mod types;

pub use error::Error;
pub use types::{
    decode_prediction, predict_rating, FeatureStore, Hyperparams, LatentModel, RatingMatrix,
    RatingScale,
};
