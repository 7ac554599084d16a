//! Reasoning over ontologies whose axioms hold in uncertain, time-evolving
//! contexts.
//!
//! A knowledge base pairs a context-labeled EL ontology with a dynamic
//! Bayesian network over the context variables. Queries are answered by
//! compiling a context formula once (labeled completion) and then running
//! exact inference over the network: at a time point, within a time bound,
//! under timed evidence, or in the limit via the induced Markov chain.
//!
//! Every probabilistic route has a brute-force twin (world or trajectory
//! enumeration) used by the test suites and by the CLI's `--oracle` flag.

pub mod bayes;
pub mod context;
pub mod dbn;
pub mod elcore;
mod error;
pub mod kbformat;
pub mod markov;
pub mod parallel;
pub mod reasoner;

pub use bayes::{BayesNet, Cpt, NetDiagnostic, TargetDistribution, WorldDistribution};
pub use context::{
    Context, ContextFormula, Literal, PropFormula, VAxiom, VOntology, VarSet, World,
};
pub use dbn::{Dbn, TransitionMatrix, TwoSliceNet};
pub use elcore::{classify, entails, normalize, Concept, Gci, NormalizedTBox};
pub use error::{Error, Limits, Result};
pub use markov::ChainAnalysis;
pub use parallel::Strategy;
pub use reasoner::{
    CompiledQuery, EventualKind, EventualResult, KnowledgeBase, Reasoner, TimedEvidence,
};

/// Absolute tolerance used for probability comparisons.
pub const TOLERANCE: f64 = 1e-9;
