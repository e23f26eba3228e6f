//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    /// Reduced-graph machinery packs node sets into 64-bit masks.
    #[error("graph has {n} nodes; reduced-graph analysis supports at most {max}")]
    GraphTooLarge { n: usize, max: usize },

    /// The exact reduced-graph count exceeded the configured cap. The count
    /// is the product, over non-faulty nodes, of Σ_k C(deg, k) for k up to
    /// the per-node removal budget, summed over all faulty-set candidates.
    #[error(
        "reduced-graph enumeration would visit {count} graphs (cap {cap}); \
         raise the cap or use sampled checking, which can refute but not certify"
    )]
    EnumerationCap { count: String, cap: u128 },

    #[error("a reduced graph has {sources} source components (expected exactly one); faulty set {faulty:?}")]
    NonUniqueSource { faulty: Vec<usize>, sources: usize },

    #[error("invalid signal model: {0}")]
    InvalidModel(String),

    #[error("{what}: need at least {needed} values, got {got}")]
    DegenerateInput {
        what: &'static str,
        needed: usize,
        got: usize,
    },

    #[error("one_iter over {count} points exceeds the subset-loop guard ({limit}); raise the limit explicitly if intended")]
    TooManyPoints { count: usize, limit: usize },

    #[error("failure-free step at agent {agent}: no message from incoming neighbor {neighbor}")]
    MissingNeighbor { agent: usize, neighbor: usize },

    #[error("insufficient data: need {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("invalid scenario: {0}")]
    InvalidConfig(String),

    /// An assumption gate failed at scenario load. Runs proceed past this
    /// only with an explicit override.
    #[error("assumption check failed ({check}): {detail}")]
    AssumptionFailed { check: String, detail: String },

    #[error("round {round}, agent {agent}: {source}")]
    EngineStep {
        round: usize,
        agent: usize,
        #[source]
        source: Box<Error>,
    },

    /// No feasible Tverberg partition was found. Impossible for well-formed
    /// inputs, so this always indicates a solver defect.
    #[error("LP internal error: {0}")]
    LpInternal(String),

    #[error("malformed trace: {0}")]
    MalformedTrace(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
