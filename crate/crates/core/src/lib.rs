//! Collaborative filtering with fuzzy user communities.
//!
//! Pipeline: ratings → co-rating user network → personalized PageRank vector
//! per user → PCA → fuzzy c-means memberships → rating prediction weighted by
//! community overlap and Pearson correlation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod clustering;
pub mod data;
pub mod embedding;
mod error;
pub mod evaluation;
pub mod graph;
pub mod pagerank;
pub mod predictor;

pub use error::{DataError, Error, Result};
