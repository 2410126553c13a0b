//! Building blocks for a fingerspelling translation pipeline: landmark and
//! silhouette recognizers, their weighted ensemble, recognized-text
//! correction, and sign video synthesis.
//!
//! Numerical code is generic over [`Real`] (`f32` or `f64`); the aliases at
//! the bottom of this file pick the precision used by the command line tool.

pub mod cnn;
pub mod correction;
pub mod datagen;
pub mod ensemble;
pub mod error;
pub mod features;
pub mod forest;
pub mod labels;
pub mod metrics;
pub mod rng;
pub mod scalar;
pub mod video;
pub mod vision;

pub use error::{Error, Result};
pub use labels::{Label, LabelSpace};
pub use scalar::Real;

pub type FeatureVector = features::FeatureVector<f64>;
pub type LandmarkFrame = features::LandmarkFrame<f64>;
pub type ScalerParams = features::ScalerParams<f64>;
pub type ForestModel = forest::ForestModel<f64>;
pub type CnnModel = cnn::CnnModel<f32>;
pub type ClassProbabilities = ensemble::ClassProbabilities<f64>;
pub type EnsembleWeights = ensemble::EnsembleWeights<f64>;
