//! Inductive semi-supervised edge embeddings for churn prediction on a
//! dynamic attributed bipartite player-game graph.

pub mod bigraph;
pub mod checkpoint;
pub mod churnmodel;
pub mod config;
pub mod ctxwalk;
pub mod dataset;
pub mod edgefeat;
pub mod error;
pub mod evalkit;
pub mod netcore;
pub mod pipeline;
pub mod seeding;
pub mod synthgen;
pub mod trainer;

pub use bigraph::{Day, EdgeKey, Label, LabelOutcome, NodeId, NodeKind, PlayRecord, SnapshotSeries};
pub use error::{Error, Result};
