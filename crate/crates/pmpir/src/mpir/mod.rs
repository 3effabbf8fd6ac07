//! Private multi-record retrieval over the encoded store.
//!
//! A retrieval asks all `n` nodes for `d` masked inner products each and
//! reconstructs `p` desired records without any single node learning
//! which records were asked for. The moving parts:
//!
//! * [`RetrievalPattern`] — which (node, subquery) cell carries which
//!   desired symbol; one fixed pattern per scheme.
//! * [`gen_queries`] — a uniformly random mask `U` plus the pattern's
//!   binary offsets gives each node its query matrix.
//! * [`decode`] — eliminates the interference inner products through an
//!   invertible submatrix of the encoding matrix, exposes the labelled
//!   code symbols, and rebuilds the records.
//! * [`decodability_oracle`] — an independent brute-force check that the
//!   full linear system a curious decoder faces has a unique solution.
//! * [`privacy_bijection_check`] — verifies that the map from mask to
//!   query matrix is a bijection, making the per-node query marginal
//!   independent of the desired set.
//! * [`metrics`] / [`tradeoff_check`] — exact rational cost figures.

mod decode;
mod metrics;
mod oracle;
mod pattern;
mod privacy;
mod query;

pub use decode::{decode, extract_subquery, interference_values, ExtractedSymbol};
pub use metrics::{metrics, tradeoff_check, Metrics, TradeoffCheck};
pub use oracle::decodability_oracle;
pub use pattern::{RetrievalPattern, SchemeId};
pub use privacy::{privacy_bijection_check, PrivacyMode, DEFAULT_ENUMERATION_GUARD};
pub use query::{answer, collect_answers, gen_queries, AnswerSet, QueryPlan};
