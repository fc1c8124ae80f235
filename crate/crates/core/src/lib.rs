//! Decentralized transformation of connected interaction graphs into
//! random regular graphs.
//!
//! Nodes repeatedly run a local handshake: each one independently wakes,
//! points at a random neighbor, and mutually-pointing pairs apply one of a
//! small set of rewrite rules to the edges around them. Depending on the
//! rule set this either balances degrees in place (`PhiR`), additionally
//! shuffles neighborhoods (`PhiRR`), or also grows/shrinks the edge set
//! within a bounded ledger until the graph locks into a random `m`-regular
//! topology (`PhiStar`). All rules preserve connectivity.
//!
//! Crate layout mirrors that pipeline:
//!
//! * [`graph`]: flagged simple graphs and their serialization,
//! * [`grammar`]: the rewrite rules and rule-set variants,
//! * [`engine`]: the synchronous randomized round loop and traces,
//! * [`metrics`]: Laplacian spectra and degree statistics,
//! * [`topology`]: seeded starting-graph generators and fixtures,
//! * [`oracle`]: brute-force references and statistical test machinery.

pub mod engine;
pub mod grammar;
pub mod graph;
pub mod metrics;
pub mod oracle;
pub mod topology;

pub use engine::{
    feasible_m_set, run_round, Absorption, DrawSource, Engine, EngineError, ExperimentConfig,
    RoundLog, Trace,
};
pub use grammar::{Effect, GrammarError, GrammarVariant, RuleApplication, RuleKind};
pub use graph::{AverageDegree, Edge, EdgeListError, GraphError, LabeledGraph, NodeId};
pub use metrics::{
    algebraic_connectivity, expander_threshold, laplacian, LaplacianMatrix, MetricsError,
    MetricsSample, DEFAULT_TOL,
};
pub use oracle::{
    canonical_form, chi_square_quantile, chi_square_uniform, empirical_distribution,
    enumerate_labeled_regular, estimate_transition_symmetry, one_step_decomposition,
    script_single_instance, state_key, CanonicalForm, ChiSquareTest, Histogram, KeyKind,
    OracleError, ScriptedDraws, StateKey, SymmetryEstimate,
};
pub use topology::{fixture, generate, random_connected, GenKind, GenSpec, TopologyError};
