//! Expert recommendation for community question answering sites.
//!
//! Users are ranked for a new question by diffusing their recent, tag-level
//! answering activity through a weighted user-tag bipartite graph. The crate
//! covers the whole pipeline: streaming `Posts.xml` ingestion, chronological
//! splitting, windowed activity with hyperbolic discounting, two-step
//! resource diffusion, vote-score and matrix-factorization baselines, and
//! MRR / P@K evaluation.

pub mod activity;
pub mod baselines;
pub mod cli;
pub mod corpus;
pub mod diffusion;
pub mod eval;
pub mod ingest;
pub mod sparse;

pub use activity::{TemporalActivityMatrix, WindowedActivity};
pub use corpus::{DatasetSplit, SplitManifest, TrainingView};
pub use diffusion::{BipartiteGraph, DegreeMode, Ranking};
pub use eval::{EvalConfig, EvalReport, Method};
pub use ingest::PostCorpus;
pub use sparse::SparseUserTagMatrix;
