//! Defect analysis for Puppet infrastructure-as-code scripts.
//!
//! The crate covers the whole pipeline: lexing manifests and counting the
//! twelve source-code properties ([`properties`]), turning commit exports and
//! commit labels into defective/neutral script tables ([`mining`]),
//! non-parametric validation of properties ([`stats`]), feature construction
//! ([`features`]) and five defect-prediction learners evaluated with repeated
//! cross-validation ([`learners`]).

pub mod error;
pub mod features;
pub mod learners;
pub mod lexer;
pub mod mining;
pub mod properties;
pub mod stats;

pub use error::{Error, Result};
