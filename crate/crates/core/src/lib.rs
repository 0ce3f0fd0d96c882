//! Basic color term analytics over multilingual dictionary data.
//!
//! The crate turns round-trip dictionary translations of English color terms
//! into fourteen basicness features, aggregates them into a ranking and
//! measures Goodman–Kruskal gamma against the basic/secondary split and the
//! acquisition sequence.

pub mod error;
pub mod lexicon;
pub mod pipeline;
pub mod compounds;
pub mod features;
pub mod segmentation;
pub mod stats;
pub mod wcs;

pub use error::{Error, Result};
