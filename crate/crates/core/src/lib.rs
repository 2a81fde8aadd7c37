//! Measure stylistic and length coordination in two-party dialogues with
//! time-shifted mutual information, and test where it comes from.
//!
//! The pipeline: [`corpus`] parses dialogues and builds the aggregated
//! originator→respondent [`corpus::ExchangeTable`]; [`markers`] turns text
//! into word counts and marker bits; [`estimators`] holds the plug-in,
//! bootstrap and KSG estimators; [`coordination`] computes the coordination
//! quantities with their permutation bands; [`permtests`] runs the two
//! within-dialogue shuffling tests; [`synthgen`] samples synthetic corpora
//! with known ground truth.

pub mod coordination;
pub mod corpus;
pub mod error;
pub mod estimators;
pub mod markers;
pub mod permtests;
pub mod replicate;
pub mod synthgen;

pub use error::{Error, Result};
