//! Layer-wise analysis of how well each layer of a speech model separates
//! synthesis systems the way listeners do.
//!
//! For every layer, frame embeddings of each system and of a natural-speech
//! reference corpus are summarized as Gaussians ([`stats`]), each system's
//! 2-Wasserstein distance to the reference is computed ([`w2`]), and the
//! per-layer distances are rank-correlated with the systems' mean opinion
//! scores ([`rank`], [`sweep`]). Correlations are reported negated, so a
//! positive value means "closer to the reference goes with higher ratings".
//!
//! [`store`] holds the file formats, [`synth`] a planted-signal generator
//! with independent oracles, and [`report`] the command layer used by the
//! `layerprobe` binary.

pub mod error;
mod linalg;
pub mod rank;
pub mod report;
pub mod stats;
pub mod store;
pub mod sweep;
pub mod synth;
pub mod w2;

pub use error::{Error, Result};
pub use rank::CorrelationMethod;
pub use stats::{GaussianSummary, StatsAccumulator};
pub use sweep::{BestLayerReport, CorrelationCurve, DistanceTable, PoolingMode, RatingsTable};
