pub mod analytics;
pub mod classifiers;
pub mod ensembles;
pub mod error;
pub mod featsel;
pub mod ingest;
pub mod matrix;
pub mod metrics;
pub mod neighbors;
pub mod preprocess;
pub mod resample;
pub mod rng;
pub mod runner;
pub mod table;

pub use error::{Error, Result};
