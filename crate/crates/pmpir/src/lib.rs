//! Multi-message private information retrieval over product-matrix
//! MSR and MBR regenerating codes.
//!
//! The crate simulates the full life of an erasure-coded database that
//! supports private retrieval:
//!
//! * [`field`] — arithmetic in a prime field F_q.
//! * [`linalg`] — dense matrices over F_q: products, inverses, solving,
//!   rank, Vandermonde construction.
//! * [`pmcode`] — the product-matrix MSR/MBR codes: parameters, encoding
//!   matrices, message packing, encoding, recovery from any k nodes and
//!   exact repair from any r helpers.
//! * [`dbstore`] — the m-record encoded store: node state, failure
//!   injection, repair orchestration and a binary on-disk format.
//! * [`mpir`] — the retrieval schemes: query patterns, query generation,
//!   node answering, interference-eliminating decode, a brute-force
//!   decodability oracle, privacy checking and exact cost metrics.
//! * [`harness`] — end-to-end experiments with measured symbol counters
//!   and JSON reports.
//! * [`cli`] — the `pmpir` command-line front end.
//!
//! The accompanying guide under `book/` walks through the concepts; its
//! code snippets are compiled and run as doc-tests (see the `book`
//! module at the bottom of this file).

pub mod cli;
pub mod dbstore;
pub mod field;
pub mod harness;
pub mod linalg;
pub mod mpir;
pub mod pmcode;

pub use field::{FieldElement, PrimeField};
pub use linalg::Mat;
pub use pmcode::{CodeFamily, CodeParams, EncodingMatrix, MessageMatrix};

/// Unified error type for the whole crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{q} is not a prime greater than 2")]
    NotPrime { q: u64 },
    #[error("modulus {q} exceeds 2^31 - 1")]
    ModulusTooLarge { q: u64 },
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("matrix is singular")]
    SingularMatrix,
    #[error("linear system is inconsistent")]
    InconsistentSystem,
    #[error("linear system is rank-deficient (rank {rank} < {unknowns} unknowns)")]
    RankDeficientSystem { rank: usize, unknowns: usize },
    #[error("duplicate evaluation point {value}")]
    DuplicatePoints { value: u64 },
    #[error("infeasible code parameters: {0}")]
    InvalidParams(String),
    #[error("field with q = {q} is too small for n = {n} distinct evaluation points")]
    FieldTooSmall { q: u64, n: usize },
    #[error("encoding matrix violates construction condition: {0}")]
    EncodingCondition(String),
    #[error(
        "repair is disabled for this encoding matrix: the diagonal of \
         Lambda has repeated values, so the construction's distinctness \
         condition fails"
    )]
    RepairDisabled,
    #[error("node {node} is dead")]
    NodeDead { node: usize },
    #[error("node {node} is alive")]
    NodeAlive { node: usize },
    #[error("node index {node} out of range (n = {n})")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("bad helper set: {0}")]
    BadHelperSet(String),
    #[error("record has {got} symbols, expected {want}")]
    WrongRecordLength { got: usize, want: usize },
    #[error("scheme constraint violated: {0}")]
    SchemeConstraint(String),
    #[error(
        "the cyclic-shift scheme requires p <= 2k-2 (got p = {p}, max {max}): \
         with more records it still decodes but is no longer optimal, so it \
         is rejected"
    )]
    TooManyRecordsForCyclicScheme { p: usize, max: usize },
    #[error("invalid desired-record set: {0}")]
    BadDesiredSet(String),
    #[error("exhaustive enumeration would visit {space} query matrices (guard {guard})")]
    EnumerationTooLarge { space: u128, guard: u128 },
    #[error("decodability fails: the retrieval system has no unique solution")]
    NonUniqueSolution,
    #[error("parse error at byte offset {offset}: {msg}")]
    Parse { offset: usize, msg: String },
    #[error("unsupported storage format version: expected {expected:?}, found {found:?}")]
    VersionMismatch { expected: String, found: String },
    #[error("checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    ChecksumMismatch { stored: u32, computed: u32 },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("trial {trial} with seed {seed} failed: {reason}")]
    TrialFailed { trial: usize, seed: u64, reason: String },
    #[error("check `{0}` failed")]
    CheckFailed(String),
}

pub type Result<T> = std::result::Result<T, Error>;

// The guide's code snippets double as doc-tests: each chapter is included
// as a doc comment on an empty module, so `cargo test --doc` compiles and
// runs every ```rust block in the book.
#[cfg(doctest)]
mod book {
    macro_rules! chapter {
        ($name:ident, $path:literal) => {
            #[doc = include_str!($path)]
            mod $name {}
        };
    }

    chapter!(introduction, "../../../book/src/introduction.md");
    chapter!(fields, "../../../book/src/fields.md");
    chapter!(matrices, "../../../book/src/matrices.md");
    chapter!(codes, "../../../book/src/codes.md");
    chapter!(storage, "../../../book/src/storage.md");
    chapter!(retrieval, "../../../book/src/retrieval.md");
    chapter!(metrics, "../../../book/src/metrics.md");
    chapter!(cli_guide, "../../../book/src/cli.md");
}
