//! Contextual information for web-page items, extracted from topic hierarchies.
//!
//! The pipeline runs in five stages, one module each:
//!
//! - [`corpus`]: text preprocessing and TF-IDF matrices for the technical
//!   (bag-of-words) view and the two privileged views (named entities and
//!   domain terms).
//! - [`ensemble`]: spherical k-means ensembles per view, co-association
//!   matrices and their weighted consensus.
//! - [`hierarchy`]: average-linkage dendrogram over the consensus matrix,
//!   granularity-bounded topic selection, nearest-neighbour insertion of
//!   documents without privileged features, and topic labels.
//! - [`recsys`]: item-based collaborative filtering plus four context-aware
//!   strategies that use the topic of an item as its context.
//! - [`eval`]: all-but-one protocol with k-fold cross validation, MAP@N and
//!   the paired t-test.
//!
//! [`pipeline`] wires the stages together behind a declarative [`config::RunConfig`]
//! and caches every stage on disk. [`synth`] generates planted-topic corpora
//! and access logs for experiments and tests.

pub mod config;
pub mod corpus;
pub mod ensemble;
pub mod error;
pub mod eval;
pub mod hierarchy;
pub mod pipeline;
pub mod recsys;
pub mod synth;
mod textfmt;

pub use error::{Error, Result};
