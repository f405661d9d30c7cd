//! Exact simulation of two-party interactive protocols on classical inputs, together with
//! the information-cost measures used to analyse them.
//!
//! The quantum side runs protocols on the canonical purification of an input distribution
//! and evaluates conditional mutual informations on the resulting round states. The
//! classical side enumerates joint distributions exhaustively.

pub mod entropy;
pub mod error;
pub mod experiments;
pub mod limits;
pub mod linalg;
pub mod registers;
pub mod state;

pub use error::{QicError, Result};
pub mod classical;
pub mod costs;
pub mod flow;
pub mod library;
pub mod protocol;
pub mod random;
pub mod reversible;
pub mod transforms;
