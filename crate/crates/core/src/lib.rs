//! Quantifying the information lost to censoring in survival studies.
//!
//! The crate fits Cox proportional-hazards models by maximum partial
//! likelihood, builds the fitted discrete survival distribution of each
//! subject through the product integral of the Breslow baseline hazard,
//! completes censored datasets by conditional imputation, and estimates the
//! relative-information measures (likelihood-ratio based `RI1`, Wald based
//! `RI_W`, its observed-information variant, and a Kaplan–Meier variant) by
//! Monte Carlo.

// Negated comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baseline;
pub mod coxph;
pub mod dataset;
pub mod error;
pub mod imputer;
mod linalg;
pub mod measures;

pub use baseline::{breslow_cumhaz, survival_given_z, DiscreteSurvival, FittedModel, StepFunction};
pub use coxph::{fit, log_partial_likelihood, score_and_information, CoxFit, FitOptions, TieMethod};
pub use dataset::{fixture, parse_csv, Dataset, Observation, Summary, FIXTURE_NAMES};
pub use error::{Error, Result};
pub use imputer::{complete_dataset, conditional_sample, Completion, Draw, SeededRng, TailRule};
pub use measures::{MeasureConfig, MeasureKind, MeasureResult};
