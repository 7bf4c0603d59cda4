//! GM(1,1) grey-system models and the GreyShot zero-shot recommender.
//!
//! The crate is split along the lines of the evaluation pipeline:
//!
//! * [`grey`]: accumulated generating operation, GM(1,1) fitting and forecasting.
//! * [`model`]: the grey transform, the power-law likelihood, its analytic
//!   gradients and the data-free SGD trainer.
//! * [`gradcheck`]: finite-difference verification of those gradients.
//! * [`baselines`]: random placement and classic matrix factorization.
//! * [`metrics`]: MAE and the degree of Matthew effect.
//! * [`data`]: rating file loaders and seeded splits.
//! * [`experiment`]: the multi-trial harness behind the `experiment` subcommand.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod data;
mod error;
pub mod experiment;
pub mod gradcheck;
pub mod grey;
pub mod metrics;
pub mod model;

pub use baselines::{MfConfig, MfScorer, RandomScorer, Scorer};
pub use data::{Rating, RatingsDataset, SplitSpec};
pub use error::{Error, Result};
pub use grey::Gm11Model;
pub use metrics::{PopularityProfile, RescalePolicy};
pub use model::{Direction, GreyShotParams, TrainConfig, TrainOutcome};
