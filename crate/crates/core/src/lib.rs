//! Intent verification over finite structural causal models.
//!
//! The crate is layered bottom-up:
//!
//! - [`model`]: variables, events, interventions and causal models;
//! - [`inference`]: exact enumeration of exogenous contexts, probabilities
//!   and the contrastive but-for test;
//! - [`intent`]: the intent predicates and moral responsibility, each
//!   returning a [`intent::Verdict`] with clause-level evidence;
//! - [`scenario`]: the `.intent` document format;
//! - [`corpus`]: bundled scenarios with golden verdicts.

pub mod corpus;
pub mod inference;
pub mod intent;
pub mod model;
pub mod number;
pub mod scenario;
