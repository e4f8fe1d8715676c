//! Subjective-style analysis for abstractive summarization corpora.
//!
//! The pipeline turns dependency-parsed article/summary pairs into
//! label-merged Levi graphs ([`syngraph`]), trains a small three-layer GCN on a
//! triplet ranking task ([`gcnnet`], [`ltrs`]), clusters the resulting style
//! embeddings with kmeans++ ([`clusterer`]), and scores generated summaries
//! ([`evalmetrics`]). [`styleinfo`] provides per-cluster motif and alignment
//! statistics.
//!
//! Data-parallel loops go through [`par`], which uses rayon when the
//! `parallel` feature is enabled (the default) and plain iterators otherwise.
//! Reductions are always performed in input order, so results are identical
//! with and without the feature.

pub mod clusterer;
pub mod corpus;
pub mod error;
pub mod evalmetrics;
pub mod gcnnet;
pub mod ltrs;
pub mod par;
pub mod styleinfo;
pub mod syngraph;
pub mod text;
pub mod util;

pub use error::{Error, Result};
