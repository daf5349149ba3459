//! Adversarial-attack transferability lab for ML-based network intrusion
//! detection.
//!
//! The library trains a deep surrogate detector and five classical detectors
//! on disjoint halves of an NSL-KDD style dataset, crafts FGSM/PGD adversarial
//! traffic against the surrogate, replays those records against the other
//! detectors to measure black-box transferability, and evaluates two defenses:
//! a majority-vote ensemble and Detect & Reject (three-class retraining with
//! rejection).
//!
//! Modules:
//! - [`data`]: dataset ingestion, preprocessing, stratified splitting, and a
//!   synthetic fixture generator.
//! - [`nn`]: the from-scratch MLP surrogate with exact input gradients.
//! - [`classical`]: the five black-box victims (SVM, decision tree, logistic
//!   regression, random forest, LDA).
//! - [`attacks`]: FGSM and PGD crafting under an L-infinity budget.
//! - [`defense`]: majority-vote ensemble and Detect & Reject.
//! - [`harness`]: experiment orchestration, metrics, and report output.

pub mod attacks;
pub mod classical;
pub mod container;
pub mod data;
pub mod defense;
pub mod error;
pub mod harness;
pub mod model;
pub mod nn;
pub mod seeds;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
