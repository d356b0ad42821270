//! Radical mechanism prediction: orbital-interaction enumeration, learned
//! rankers, and mechanistic pathway search.

pub mod chemgraph;
pub mod dataset;
pub mod featurize;
pub mod neural;
pub mod orbchain;
pub mod pathway;
pub mod predictor;
