//! Transformer lithology classification for well logs, with an attention
//! bias built from learned per-class correlation templates.
//!
//! The usual flow is: load or synthesize wells ([`welllog`]), hold out a
//! blind well and normalize ([`pipeline`]), learn the template bank
//! ([`csc`]), train ([`model`]) and score ([`metrics`]).

pub mod csc;
pub mod error;
pub mod geo_bias;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod seeding;
pub mod welllog;

pub use error::{GiatError, Result};
