//! Engine error type shared by all operations.
//!
//! Every variant carries a stable machine-readable code so front ends can
//! map failures without string matching.

use alloc::string::String;
use core::fmt;

use crate::dist::Assignment;
use crate::graph::NodeId;

/// Errors surfaced by engine operations.
///
/// Validation problems found while assembling a model are reported through
/// [`crate::model::ValidationReport`] instead; this enum covers failures of
/// operations on already-constructed models.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EngineError {
    /// A node id does not belong to the model or graph at hand.
    UnknownNode(NodeId),
    /// A node name could not be resolved.
    UnknownName(String),
    /// Operation requires an endogenous node.
    NotEndogenous(NodeId),
    /// Operation requires an exogenous node.
    NotExogenous(NodeId),
    /// A value token does not belong to the node's outcome space.
    ValueNotInSpace { node: NodeId, token: String },
    /// A value index is out of range for the node's outcome space.
    ValueOutOfRange { node: NodeId, index: usize },
    /// The exogenous assignment does not cover every exogenous node.
    IncompleteExogenous,
    /// Operation requires an acyclic graph.
    CyclicGraph,
    /// The intervention left at least one cycle intact.
    CyclicAfterIntervention,
    /// Node sets passed to a separation or independence query overlap.
    OverlappingSets,
    /// The structural system has several solutions for this exogenous assignment.
    NonUniqueSolution { exogenous: Assignment, count: usize },
    /// The structural system has no solution for this exogenous assignment.
    NoSolution { exogenous: Assignment },
    /// Conditioning event has probability zero.
    ConditionOnNull,
    /// Selection predicate keeps nothing.
    FilterToNull,
    /// An intervention lists the same target twice.
    DuplicateTarget(NodeId),
    /// Perfect interventions only apply to endogenous nodes.
    InterveneExogenous(NodeId),
    /// Mixture weights do not sum to one.
    MixtureNotNormalized,
    /// The module anchor is not flagged a priori.
    AnchorNotApriori(NodeId),
    /// The marginalization victim lies on a cycle through itself.
    VictimInCycle(NodeId),
    /// Edge reversal needs the target mechanism to determine the reversed
    /// parent uniquely; this output value admits several parent values.
    MechanismNotInvertible { target: NodeId, value: usize },
    /// The requested edge does not exist.
    UnknownEdge(NodeId, NodeId),
    /// Only interior or incoming edges of the a-priori module may be reversed.
    EdgeNotReversible(NodeId, NodeId),
    /// Remodeling produced a model that fails causal equivalence; carries the
    /// blocking exogenous assignment when criterion (iii) is the one violated.
    RemodelNotEquivalent { witness: Option<Assignment> },
    /// The two models do not share node sets, spaces, or exogenous measure.
    MismatchedModels(&'static str),
    /// An instrumented intervention may not leak into its own target.
    LeakIntoTarget(NodeId),
    /// A leak table does not match the leaked node's parents plus instrument.
    MalformedLeakTable { node: NodeId, reason: &'static str },
    /// The symmetric-detection context must fix every endogenous node except
    /// the probed pair.
    BadContext(&'static str),
}

impl EngineError {
    /// Stable machine-readable code for this error.
    pub fn code(&self) -> &'static str {
        match self {
            EngineError::UnknownNode(_) => "UNKNOWN_NODE",
            EngineError::UnknownName(_) => "UNKNOWN_NAME",
            EngineError::NotEndogenous(_) => "NOT_ENDOGENOUS",
            EngineError::NotExogenous(_) => "NOT_EXOGENOUS",
            EngineError::ValueNotInSpace { .. } => "VALUE_NOT_IN_SPACE",
            EngineError::ValueOutOfRange { .. } => "VALUE_OUT_OF_RANGE",
            EngineError::IncompleteExogenous => "INCOMPLETE_EXOGENOUS",
            EngineError::CyclicGraph => "CYCLIC_GRAPH",
            EngineError::CyclicAfterIntervention => "CYCLIC_AFTER_INTERVENTION",
            EngineError::OverlappingSets => "OVERLAPPING_SETS",
            EngineError::NonUniqueSolution { .. } => "NON_UNIQUE_SOLUTION",
            EngineError::NoSolution { .. } => "NO_SOLUTION",
            EngineError::ConditionOnNull => "CONDITION_ON_NULL",
            EngineError::FilterToNull => "FILTER_TO_NULL",
            EngineError::DuplicateTarget(_) => "DUPLICATE_TARGET",
            EngineError::InterveneExogenous(_) => "INTERVENE_EXOGENOUS",
            EngineError::MixtureNotNormalized => "MIXTURE_NOT_NORMALIZED",
            EngineError::AnchorNotApriori(_) => "ANCHOR_NOT_APRIORI",
            EngineError::VictimInCycle(_) => "VICTIM_IN_CYCLE",
            EngineError::MechanismNotInvertible { .. } => "MECHANISM_NOT_INVERTIBLE",
            EngineError::UnknownEdge(_, _) => "UNKNOWN_EDGE",
            EngineError::EdgeNotReversible(_, _) => "EDGE_NOT_REVERSIBLE",
            EngineError::RemodelNotEquivalent { .. } => "REMODEL_NOT_EQUIVALENT",
            EngineError::MismatchedModels(_) => "MISMATCHED_MODELS",
            EngineError::LeakIntoTarget(_) => "LEAK_INTO_TARGET",
            EngineError::MalformedLeakTable { .. } => "MALFORMED_LEAK_TABLE",
            EngineError::BadContext(_) => "BAD_CONTEXT",
        }
    }
}

impl fmt::Display for EngineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EngineError::UnknownNode(n) => write!(f, "unknown node {n:?}"),
            EngineError::UnknownName(s) => write!(f, "unknown node name `{s}`"),
            EngineError::NotEndogenous(n) => write!(f, "node {n:?} is not endogenous"),
            EngineError::NotExogenous(n) => write!(f, "node {n:?} is not exogenous"),
            EngineError::ValueNotInSpace { node, token } => {
                write!(f, "value `{token}` is not in the space of node {node:?}")
            }
            EngineError::ValueOutOfRange { node, index } => {
                write!(f, "value index {index} out of range for node {node:?}")
            }
            EngineError::IncompleteExogenous => {
                write!(f, "assignment must cover every exogenous node")
            }
            EngineError::CyclicGraph => write!(f, "operation requires an acyclic graph"),
            EngineError::CyclicAfterIntervention => {
                write!(f, "intervention does not break every cycle")
            }
            EngineError::OverlappingSets => write!(f, "node sets must be pairwise disjoint"),
            EngineError::NonUniqueSolution { count, .. } => {
                write!(f, "structural system has {count} solutions for an exogenous assignment of positive measure")
            }
            EngineError::NoSolution { .. } => {
                write!(f, "structural system has no solution for an exogenous assignment of positive measure")
            }
            EngineError::ConditionOnNull => write!(f, "conditioning event has probability zero"),
            EngineError::FilterToNull => write!(f, "selection predicate keeps nothing"),
            EngineError::DuplicateTarget(n) => write!(f, "node {n:?} targeted twice"),
            EngineError::InterveneExogenous(n) => {
                write!(f, "cannot intervene exogenous node {n:?}")
            }
            EngineError::MixtureNotNormalized => write!(f, "mixture weights must sum to 1"),
            EngineError::AnchorNotApriori(n) => {
                write!(f, "module anchor {n:?} is not flagged a priori")
            }
            EngineError::VictimInCycle(n) => {
                write!(f, "node {n:?} lies on a cycle through itself")
            }
            EngineError::MechanismNotInvertible { target, value } => write!(
                f,
                "mechanism of {target:?} does not determine the reversed parent for output value index {value}"
            ),
            EngineError::UnknownEdge(a, b) => write!(f, "no edge {a:?} -> {b:?}"),
            EngineError::EdgeNotReversible(a, b) => {
                write!(f, "edge {a:?} -> {b:?} is not interior or incoming to the module")
            }
            EngineError::RemodelNotEquivalent { .. } => {
                write!(f, "remodeled model is not causally equivalent to the input")
            }
            EngineError::MismatchedModels(m) => write!(f, "models differ: {m}"),
            EngineError::LeakIntoTarget(n) => {
                write!(f, "leak into intervened node {n:?} (target is constant)")
            }
            EngineError::MalformedLeakTable { node, reason } => {
                write!(f, "leak table for {node:?} is malformed: {reason}")
            }
            EngineError::BadContext(m) => write!(f, "bad detection context: {m}"),
        }
    }
}

/// Convenience alias used across the crate.
pub type Result<T> = core::result::Result<T, EngineError>;
