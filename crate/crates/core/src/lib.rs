//! Regulation enforcement in a replenishing-resource gridworld.

pub mod detector;
pub mod experiments;
pub mod gametheory;
pub mod gridworld;
pub mod learner;
pub mod scalar;
pub mod shaping;

pub use scalar::{Real, Scalar};

pub type Game64 = gametheory::NormalFormGame<f64>;
pub type ExactGame = gametheory::NormalFormGame<num_rational::Rational64>;
pub type Matrix64 = gametheory::PayoffMatrix2x2<f64>;
pub type ExactMatrix = gametheory::PayoffMatrix2x2<num_rational::Rational64>;
pub type Classifier32 = detector::SequenceClassifier<f32>;
pub type Classifier64 = detector::SequenceClassifier<f64>;
pub type LinearQ32 = learner::LinearQ<f32>;
pub type LinearQ64 = learner::LinearQ<f64>;
