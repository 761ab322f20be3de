//! Publication venue recommendation from clustering-based venue subprofiles.
//!
//! Training articles are clustered globally with K-means; every
//! (venue, cluster) intersection becomes one macro-document holding content,
//! keyword and author fields. A target article queries the fielded index
//! (Jelinek-Mercer language model), subprofile scores are fused into venue
//! scores with CombLgDCS, and content and author rankings are blended after
//! max-normalization.
//!
//! Module map:
//!
//! * [`corpus`] — loading, venue filtering, temporal split
//! * [`textprep`] — analysis, vocabulary pruning, document vectors
//! * [`cluster`] — K heuristics and K-means
//! * [`profile`] — SP / DP / GP subprofiles
//! * [`index`] — fielded inverted index and LM-JM search
//! * [`fusion`] — CombLgDCS, max-normalization, CombLinear
//! * [`recommend`] — query → venue ranking
//! * [`eval`] — accuracy@X, MRR, holdout evaluation
//! * [`pipeline`] — in-memory train/evaluate
//! * [`synthgen`] — planted-structure synthetic corpora

pub mod cluster;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod fusion;
pub mod index;
pub mod pipeline;
pub mod profile;
pub mod recommend;
pub mod synthgen;
pub mod textprep;

pub use error::{Error, Result};
