//! The model tuple: endogenous and exogenous nodes over finite outcome
//! spaces, a causal graph, one deterministic mechanism table per endogenous
//! node, and an independent exact-rational measure per exogenous node.
//!
//! Models are immutable after construction. [`Scm::from_parts`] validates
//! every structural invariant; [`validate`] re-checks them on any model,
//! including deliberately broken ones assembled through
//! [`Scm::from_parts_unchecked`].

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{EngineError, Result};
use crate::graph::{CausalGraph, NodeId, NodeKind};
use crate::space::{OutcomeSpace, SpaceValue};

/// A named node together with its outcome space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub name: String,
    pub space: OutcomeSpace,
}

/// Deterministic finite function from parent-value tuples to a value of the
/// target's space, stored densely in mixed-radix order over `parent_order`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MechanismTable {
    target: NodeId,
    parent_order: Vec<NodeId>,
    parent_card: Vec<usize>,
    rows: Vec<usize>,
    apriori: bool,
}

impl MechanismTable {
    /// Builds a table from an explicit dense row vector. `rows[k]` is the
    /// output value index for the parent combination whose mixed-radix rank
    /// is `k` (last parent varies fastest).
    pub fn from_rows(
        target: NodeId,
        parent_order: Vec<NodeId>,
        parent_card: Vec<usize>,
        rows: Vec<usize>,
        apriori: bool,
    ) -> core::result::Result<Self, String> {
        if parent_order.len() != parent_card.len() {
            return Err("parent order and cardinalities differ in length".to_string());
        }
        let expect: usize = parent_card.iter().product();
        if rows.len() != expect {
            return Err(alloc::format!(
                "table has {} rows, needs {expect}",
                rows.len()
            ));
        }
        let mut seen = BTreeSet::new();
        for p in &parent_order {
            if !seen.insert(*p) {
                return Err(alloc::format!("duplicate parent {p:?}"));
            }
        }
        Ok(MechanismTable {
            target,
            parent_order,
            parent_card,
            rows,
            apriori,
        })
    }

    /// Constant mechanism with no parents, as produced by a perfect
    /// intervention.
    pub fn constant(target: NodeId, value: usize) -> Self {
        MechanismTable {
            target,
            parent_order: Vec::new(),
            parent_card: Vec::new(),
            rows: alloc::vec![value],
            apriori: false,
        }
    }

    pub fn target(&self) -> NodeId {
        self.target
    }

    pub fn parent_order(&self) -> &[NodeId] {
        &self.parent_order
    }

    pub fn parent_card(&self) -> &[usize] {
        &self.parent_card
    }

    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn apriori(&self) -> bool {
        self.apriori
    }

    pub fn with_apriori(mut self, flag: bool) -> Self {
        self.apriori = flag;
        self
    }

    /// Output value index for the given parent value indices (one per entry
    /// of `parent_order`).
    pub fn lookup(&self, parent_values: &[usize]) -> usize {
        debug_assert_eq!(parent_values.len(), self.parent_order.len());
        let mut rank = 0usize;
        for (v, card) in parent_values.iter().zip(&self.parent_card) {
            debug_assert!(v < card);
            rank = rank * card + v;
        }
        self.rows[rank]
    }

    /// Iterates every parent combination together with its output.
    pub fn entries(&self) -> impl Iterator<Item = (Vec<usize>, usize)> + '_ {
        let cards = self.parent_card.clone();
        self.rows.iter().enumerate().map(move |(rank, out)| {
            let mut combo = alloc::vec![0usize; cards.len()];
            let mut r = rank;
            for i in (0..cards.len()).rev() {
                combo[i] = r % cards[i];
                r /= cards[i];
            }
            (combo, *out)
        })
    }
}

/// Probability table of one exogenous node plus its declared epistemic
/// status (whether the measure counts as known prior to experience).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasureEntry {
    pub probs: Vec<BigRational>,
    pub apriori_known: bool,
}

/// Independent product measure over the exogenous nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExogenousMeasure {
    entries: Vec<MeasureEntry>,
}

impl ExogenousMeasure {
    pub fn new(entries: Vec<MeasureEntry>) -> Self {
        ExogenousMeasure { entries }
    }

    pub fn entry(&self, exo_index: usize) -> &MeasureEntry {
        &self.entries[exo_index]
    }

    pub fn entries(&self) -> &[MeasureEntry] {
        &self.entries
    }

    pub fn prob(&self, exo_index: usize, value: usize) -> &BigRational {
        &self.entries[exo_index].probs[value]
    }

    /// Value indices of positive probability for one exogenous node.
    pub fn support(&self, exo_index: usize) -> Vec<usize> {
        self.entries[exo_index]
            .probs
            .iter()
            .enumerate()
            .filter(|(_, p)| !p.is_zero())
            .map(|(i, _)| i)
            .collect()
    }
}

/// One violated invariant found while checking a model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValidationIssue {
    DuplicateName(String),
    DanglingEdge(NodeId, NodeId),
    EdgeTargetsExogenous(NodeId, NodeId),
    ExogenousHasParents(NodeId),
    MechanismTargetMismatch(NodeId),
    ArityMismatch { node: NodeId, expected: BTreeSet<NodeId>, actual: Vec<NodeId> },
    TableNotTotal { node: NodeId, expected: usize, actual: usize },
    OutputNotInSpace { node: NodeId, row: usize },
    MeasureLengthMismatch(NodeId),
    NegativeProbability(NodeId),
    MeasureSum { node: NodeId, sum: BigRational },
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValidationIssue::DuplicateName(n) => write!(f, "duplicate node name `{n}`"),
            ValidationIssue::DanglingEdge(a, b) => write!(f, "edge {a:?} -> {b:?} has an unknown endpoint"),
            ValidationIssue::EdgeTargetsExogenous(a, b) => {
                write!(f, "edge {a:?} -> {b:?}: edge targets must be endogenous")
            }
            ValidationIssue::ExogenousHasParents(n) => {
                write!(f, "exogenous node {n:?} has parents")
            }
            ValidationIssue::MechanismTargetMismatch(n) => {
                write!(f, "mechanism stored for {n:?} names a different target")
            }
            ValidationIssue::ArityMismatch { node, expected, actual } => write!(
                f,
                "mechanism of {node:?} uses parents {actual:?} but the graph records {expected:?}"
            ),
            ValidationIssue::TableNotTotal { node, expected, actual } => write!(
                f,
                "mechanism of {node:?} has {actual} rows, needs {expected} to be total"
            ),
            ValidationIssue::OutputNotInSpace { node, row } => {
                write!(f, "mechanism of {node:?}: row {row} outputs a value outside the space")
            }
            ValidationIssue::MeasureLengthMismatch(n) => {
                write!(f, "measure of {n:?} does not list one probability per value")
            }
            ValidationIssue::NegativeProbability(n) => {
                write!(f, "measure of {n:?} has a negative probability")
            }
            ValidationIssue::MeasureSum { node, sum } => write!(
                f,
                "measure of {node:?} sums to {}/{} instead of 1",
                sum.numer(),
                sum.denom()
            ),
        }
    }
}

/// Outcome of checking every model invariant; empty iff the model is valid.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub issues: Vec<ValidationIssue>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.issues.is_empty()
    }
}

/// Raw model pieces before invariant checking.
#[derive(Debug, Clone)]
pub struct ScmParts {
    pub endogenous: Vec<Node>,
    pub exogenous: Vec<Node>,
    pub graph: CausalGraph,
    pub mechanisms: Vec<MechanismTable>,
    pub measure: ExogenousMeasure,
}

/// The full model: node vectors, graph, mechanisms, and exogenous measure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scm {
    endogenous: Vec<Node>,
    exogenous: Vec<Node>,
    graph: CausalGraph,
    mechanisms: Vec<MechanismTable>,
    measure: ExogenousMeasure,
}

impl Scm {
    /// Validates the parts and assembles a model; returns every violated
    /// invariant otherwise.
    pub fn from_parts(parts: ScmParts) -> core::result::Result<Self, ValidationReport> {
        let scm = Self::from_parts_unchecked(parts);
        let report = validate(&scm);
        if report.is_ok() {
            Ok(scm)
        } else {
            Err(report)
        }
    }

    /// Assembles a model without checking invariants. Useful for exercising
    /// [`validate`] on deliberately broken inputs; anything else should go
    /// through [`Scm::from_parts`] or [`ScmBuilder`].
    pub fn from_parts_unchecked(parts: ScmParts) -> Self {
        Scm {
            endogenous: parts.endogenous,
            exogenous: parts.exogenous,
            graph: parts.graph,
            mechanisms: parts.mechanisms,
            measure: parts.measure,
        }
    }

    pub fn endo_count(&self) -> usize {
        self.endogenous.len()
    }

    pub fn exo_count(&self) -> usize {
        self.exogenous.len()
    }

    pub fn graph(&self) -> &CausalGraph {
        &self.graph
    }

    pub fn measure(&self) -> &ExogenousMeasure {
        &self.measure
    }

    pub fn node(&self, id: NodeId) -> &Node {
        match id.kind {
            NodeKind::Endogenous => &self.endogenous[id.index],
            NodeKind::Exogenous => &self.exogenous[id.index],
        }
    }

    pub fn name(&self, id: NodeId) -> &str {
        &self.node(id).name
    }

    pub fn space(&self, id: NodeId) -> &OutcomeSpace {
        &self.node(id).space
    }

    pub fn card(&self, id: NodeId) -> usize {
        self.space(id).card()
    }

    pub fn mechanism(&self, endo_index: usize) -> &MechanismTable {
        &self.mechanisms[endo_index]
    }

    pub fn mechanisms(&self) -> &[MechanismTable] {
        &self.mechanisms
    }

    /// Resolves a node by name.
    pub fn node_by_name(&self, name: &str) -> Result<NodeId> {
        if let Some(i) = self.endogenous.iter().position(|n| n.name == name) {
            return Ok(NodeId::endo(i));
        }
        if let Some(i) = self.exogenous.iter().position(|n| n.name == name) {
            return Ok(NodeId::exo(i));
        }
        Err(EngineError::UnknownName(name.to_string()))
    }

    /// Resolves a value token within a node's space.
    pub fn value_index(&self, node: NodeId, token: &str) -> Result<usize> {
        self.space(node)
            .index_of(token)
            .ok_or_else(|| EngineError::ValueNotInSpace {
                node,
                token: token.to_string(),
            })
    }

    /// All node ids in canonical order: endogenous by index, then exogenous.
    pub fn all_nodes(&self) -> Vec<NodeId> {
        (0..self.endogenous.len())
            .map(NodeId::endo)
            .chain((0..self.exogenous.len()).map(NodeId::exo))
            .collect()
    }

    pub fn endo_nodes(&self) -> Vec<NodeId> {
        (0..self.endogenous.len()).map(NodeId::endo).collect()
    }

    pub fn exo_nodes(&self) -> Vec<NodeId> {
        (0..self.exogenous.len()).map(NodeId::exo).collect()
    }

    /// Clones the model with one mechanism replaced and the graph's incoming
    /// edges of that target rewired to the new parent list.
    pub(crate) fn with_mechanism(&self, table: MechanismTable) -> Result<Self> {
        let target = table.target();
        if !target.is_endogenous() || target.index >= self.endogenous.len() {
            return Err(EngineError::NotEndogenous(target));
        }
        let mut edges: Vec<(NodeId, NodeId)> = self
            .graph
            .edges()
            .iter()
            .copied()
            .filter(|(_, t)| *t != target)
            .collect();
        for p in table.parent_order() {
            edges.push((*p, target));
        }
        let graph = CausalGraph::new(self.graph.nodes().iter().copied(), edges)?;
        let mut mechanisms = self.mechanisms.clone();
        mechanisms[target.index] = table;
        Ok(Scm {
            endogenous: self.endogenous.clone(),
            exogenous: self.exogenous.clone(),
            graph,
            mechanisms,
            measure: self.measure.clone(),
        })
    }

    pub(crate) fn replace_graph_and_mechanisms(
        &self,
        graph: CausalGraph,
        mechanisms: Vec<MechanismTable>,
    ) -> Self {
        Scm {
            endogenous: self.endogenous.clone(),
            exogenous: self.exogenous.clone(),
            graph,
            mechanisms,
            measure: self.measure.clone(),
        }
    }

    pub(crate) fn parts(&self) -> ScmParts {
        ScmParts {
            endogenous: self.endogenous.clone(),
            exogenous: self.exogenous.clone(),
            graph: self.graph.clone(),
            mechanisms: self.mechanisms.clone(),
            measure: self.measure.clone(),
        }
    }
}

/// Checks every definitional invariant of a model and reports each
/// violation. Total: never fails, whatever the model's state. Cycles are
/// legal; acyclicity is a property, not an invariant.
pub fn validate(scm: &Scm) -> ValidationReport {
    let mut issues = Vec::new();

    let mut names = BTreeSet::new();
    for node in scm.endogenous.iter().chain(&scm.exogenous) {
        if !names.insert(node.name.clone()) {
            issues.push(ValidationIssue::DuplicateName(node.name.clone()));
        }
    }

    let known: BTreeSet<NodeId> = scm.all_nodes().into_iter().collect();
    for (s, t) in scm.graph.edges() {
        if !known.contains(s) || !known.contains(t) {
            issues.push(ValidationIssue::DanglingEdge(*s, *t));
            continue;
        }
        if !t.is_endogenous() {
            issues.push(ValidationIssue::EdgeTargetsExogenous(*s, *t));
        }
    }
    for g in scm.graph.nodes() {
        if !known.contains(g) {
            issues.push(ValidationIssue::DanglingEdge(*g, *g));
        }
    }
    for (i, _) in scm.exogenous.iter().enumerate() {
        let id = NodeId::exo(i);
        if scm.graph.nodes().contains(&id)
            && scm.graph.parents(id).map(|p| !p.is_empty()).unwrap_or(false)
        {
            issues.push(ValidationIssue::ExogenousHasParents(id));
        }
    }

    for (i, _) in scm.endogenous.iter().enumerate() {
        let id = NodeId::endo(i);
        let Some(table) = scm.mechanisms.get(i) else {
            issues.push(ValidationIssue::TableNotTotal { node: id, expected: 1, actual: 0 });
            continue;
        };
        if table.target() != id {
            issues.push(ValidationIssue::MechanismTargetMismatch(id));
        }
        let graph_parents = scm.graph.parents(id).unwrap_or_default();
        let table_parents: BTreeSet<NodeId> = table.parent_order().iter().copied().collect();
        if graph_parents != table_parents
            || table.parent_order().len() != table_parents.len()
        {
            issues.push(ValidationIssue::ArityMismatch {
                node: id,
                expected: graph_parents,
                actual: table.parent_order().to_vec(),
            });
            continue;
        }
        let expected: usize = table
            .parent_order()
            .iter()
            .map(|p| {
                if known.contains(p) {
                    scm.card(*p)
                } else {
                    0
                }
            })
            .product();
        let card_ok = table
            .parent_order()
            .iter()
            .zip(table.parent_card())
            .all(|(p, c)| known.contains(p) && scm.card(*p) == *c);
        if !card_ok || table.rows().len() != expected {
            issues.push(ValidationIssue::TableNotTotal {
                node: id,
                expected,
                actual: table.rows().len(),
            });
            continue;
        }
        for (row, out) in table.rows().iter().enumerate() {
            if *out >= scm.card(id) {
                issues.push(ValidationIssue::OutputNotInSpace { node: id, row });
                break;
            }
        }
    }

    for (i, node) in scm.exogenous.iter().enumerate() {
        let id = NodeId::exo(i);
        let Some(entry) = scm.measure.entries().get(i) else {
            issues.push(ValidationIssue::MeasureLengthMismatch(id));
            continue;
        };
        if entry.probs.len() != node.space.card() {
            issues.push(ValidationIssue::MeasureLengthMismatch(id));
            continue;
        }
        if entry.probs.iter().any(|p| p < &BigRational::zero()) {
            issues.push(ValidationIssue::NegativeProbability(id));
        }
        let sum: BigRational = entry.probs.iter().cloned().sum();
        if !sum.is_one() {
            issues.push(ValidationIssue::MeasureSum { node: id, sum });
        }
    }

    ValidationReport { issues }
}

/// Measure shorthand used by [`ScmBuilder::exogenous`].
pub enum Measure {
    /// Equal weight on every value.
    Uniform,
    /// All mass on one token.
    Point(&'static str),
    /// Explicit `(token, p/q)` pairs; unlisted tokens get probability zero.
    Weights(Vec<(String, String)>),
}

impl Measure {
    pub fn weights(pairs: &[(&str, &str)]) -> Self {
        Measure::Weights(
            pairs
                .iter()
                .map(|(t, p)| (t.to_string(), p.to_string()))
                .collect(),
        )
    }
}

/// Incremental model construction used by the scenario catalog, the file
/// format, and tests.
pub struct ScmBuilder {
    spaces: Vec<OutcomeSpace>,
    endogenous: Vec<(String, usize)>,
    exogenous: Vec<(String, usize)>,
    measures: Vec<MeasureEntry>,
    parents: Vec<Vec<String>>,
    fills: Vec<TableFill>,
    apriori: Vec<bool>,
}

enum TableFill {
    Rows(Vec<usize>),
    Tokens(Vec<String>),
}

impl Default for ScmBuilder {
    fn default() -> Self {
        Self::new()
    }
}

impl ScmBuilder {
    pub fn new() -> Self {
        ScmBuilder {
            spaces: Vec::new(),
            endogenous: Vec::new(),
            exogenous: Vec::new(),
            measures: Vec::new(),
            parents: Vec::new(),
            fills: Vec::new(),
            apriori: Vec::new(),
        }
    }

    /// Declares a named space; later nodes refer to it by name.
    pub fn space(&mut self, name: &str, tokens: &[&str]) -> &mut Self {
        let s = OutcomeSpace::new(name, tokens).expect("builder space");
        self.spaces.push(s);
        self
    }

    fn space_index(&self, name: &str) -> usize {
        self.spaces
            .iter()
            .position(|s| s.name() == name)
            .unwrap_or_else(|| panic!("builder: unknown space `{name}`"))
    }

    fn space_by_index(&self, i: usize) -> &OutcomeSpace {
        &self.spaces[i]
    }

    /// Declares an exogenous node with its measure.
    pub fn exogenous(&mut self, name: &str, space: &str, measure: Measure) -> &mut Self {
        self.exogenous_with(name, space, measure, false)
    }

    /// Declares an exogenous node whose measure counts as known prior to
    /// experience.
    pub fn exogenous_known(&mut self, name: &str, space: &str, measure: Measure) -> &mut Self {
        self.exogenous_with(name, space, measure, true)
    }

    fn exogenous_with(
        &mut self,
        name: &str,
        space: &str,
        measure: Measure,
        apriori_known: bool,
    ) -> &mut Self {
        let si = self.space_index(space);
        let card = self.spaces[si].card();
        let probs = match measure {
            Measure::Uniform => {
                let p = BigRational::new(BigInt::from(1), BigInt::from(card as i64));
                alloc::vec![p; card]
            }
            Measure::Point(token) => {
                let idx = self.spaces[si]
                    .index_of(token)
                    .unwrap_or_else(|| panic!("builder: token `{token}` not in `{space}`"));
                let mut v = alloc::vec![BigRational::zero(); card];
                v[idx] = BigRational::one();
                v
            }
            Measure::Weights(pairs) => {
                let mut v = alloc::vec![BigRational::zero(); card];
                for (token, p) in pairs {
                    let idx = self.spaces[si]
                        .index_of(&token)
                        .unwrap_or_else(|| panic!("builder: token `{token}` not in `{space}`"));
                    v[idx] = crate::space::parse_rational(&p)
                        .unwrap_or_else(|| panic!("builder: bad rational `{p}`"));
                }
                v
            }
        };
        self.exogenous.push((name.to_string(), si));
        self.measures.push(MeasureEntry { probs, apriori_known });
        self
    }

    /// Declares an endogenous node whose table is filled by evaluating a
    /// function of the parent values over their whole product space.
    pub fn endogenous(
        &mut self,
        name: &str,
        space: &str,
        parents: &[&str],
        f: impl Fn(&[&SpaceValue]) -> String,
    ) -> &mut Self {
        let si = self.space_index(space);
        self.endogenous.push((name.to_string(), si));
        self.parents
            .push(parents.iter().map(|p| p.to_string()).collect());
        // Parents may be declared later, so the table is materialized in
        // `build`; store the outputs produced against declared spaces then.
        self.fills.push(TableFill::Tokens(Vec::new()));
        let fill_index = self.fills.len() - 1;
        // Evaluate eagerly when every parent is already declared (the usual
        // case); otherwise leave a marker and fail in build.
        let mut tokens = Vec::new();
        let mut cards = Vec::new();
        let mut parent_spaces = Vec::new();
        for p in parents {
            match self.lookup_declared(p) {
                Some(si) => {
                    cards.push(self.spaces[si].card());
                    parent_spaces.push(si);
                }
                None => panic!("builder: node `{name}` lists undeclared parent `{p}`"),
            }
        }
        let total: usize = cards.iter().product();
        for rank in 0..total {
            let mut combo = alloc::vec![0usize; cards.len()];
            let mut r = rank;
            for i in (0..cards.len()).rev() {
                combo[i] = r % cards[i];
                r /= cards[i];
            }
            let vals: Vec<&SpaceValue> = combo
                .iter()
                .zip(&parent_spaces)
                .map(|(v, si)| self.space_by_index(*si).value(*v))
                .collect();
            tokens.push(f(&vals));
        }
        self.fills[fill_index] = TableFill::Tokens(tokens);
        self.apriori.push(false);
        self
    }

    /// Declares an endogenous node with explicit output tokens in row order.
    pub fn endogenous_rows(
        &mut self,
        name: &str,
        space: &str,
        parents: &[&str],
        outputs: &[&str],
    ) -> &mut Self {
        let si = self.space_index(space);
        self.endogenous.push((name.to_string(), si));
        self.parents
            .push(parents.iter().map(|p| p.to_string()).collect());
        self.fills
            .push(TableFill::Tokens(outputs.iter().map(|t| t.to_string()).collect()));
        self.apriori.push(false);
        self
    }

    fn lookup_declared(&self, name: &str) -> Option<usize> {
        self.endogenous
            .iter()
            .chain(self.exogenous.iter())
            .find(|(n, _)| n == name)
            .map(|(_, si)| *si)
    }

    /// Flags the last-resort epistemic status of an endogenous mechanism.
    pub fn apriori(&mut self, name: &str) -> &mut Self {
        let i = self
            .endogenous
            .iter()
            .position(|(n, _)| n == name)
            .unwrap_or_else(|| panic!("builder: unknown endogenous `{name}`"));
        self.apriori[i] = true;
        self
    }

    pub fn build(&self) -> core::result::Result<Scm, ValidationReport> {
        let endo: Vec<Node> = self
            .endogenous
            .iter()
            .map(|(n, si)| Node {
                name: n.clone(),
                space: self.spaces[*si].clone(),
            })
            .collect();
        let exo: Vec<Node> = self
            .exogenous
            .iter()
            .map(|(n, si)| Node {
                name: n.clone(),
                space: self.spaces[*si].clone(),
            })
            .collect();

        let resolve = |name: &str| -> NodeId {
            if let Some(i) = endo.iter().position(|n| n.name == name) {
                NodeId::endo(i)
            } else if let Some(i) = exo.iter().position(|n| n.name == name) {
                NodeId::exo(i)
            } else {
                panic!("builder: unknown node `{name}`")
            }
        };

        let mut edges = Vec::new();
        let mut mechanisms = Vec::new();
        for (i, (name, si)) in self.endogenous.iter().enumerate() {
            let target = NodeId::endo(i);
            let order: Vec<NodeId> = self.parents[i].iter().map(|p| resolve(p)).collect();
            for p in &order {
                edges.push((*p, target));
            }
            let cards: Vec<usize> = self.parents[i]
                .iter()
                .map(|p| self.spaces[self.lookup_declared(p).unwrap()].card())
                .collect();
            let out_space = &self.spaces[*si];
            let rows: Vec<usize> = match &self.fills[i] {
                TableFill::Rows(r) => r.clone(),
                TableFill::Tokens(tokens) => tokens
                    .iter()
                    .map(|t| {
                        out_space.index_of(t).unwrap_or_else(|| {
                            panic!("builder: `{name}` outputs `{t}` outside `{}`", out_space.name())
                        })
                    })
                    .collect(),
            };
            mechanisms.push(
                MechanismTable::from_rows(target, order, cards, rows, self.apriori[i])
                    .expect("builder table"),
            );
        }

        let nodes = (0..endo.len())
            .map(NodeId::endo)
            .chain((0..exo.len()).map(NodeId::exo));
        let graph = CausalGraph::new(nodes, edges).expect("builder graph");
        Scm::from_parts(ScmParts {
            endogenous: endo,
            exogenous: exo,
            graph,
            mechanisms,
            measure: ExogenousMeasure::new(self.measures.clone()),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Three dice readings driven by one fair die: the identity, the parity,
    /// and the low/high half.
    pub(crate) fn dice_xyz() -> Scm {
        let mut b = ScmBuilder::new();
        b.space("dice", &["1", "2", "3", "4", "5", "6"])
            .space("parity", &["odd", "even"])
            .space("half", &["≤3", ">3"])
            .exogenous("E", "dice", Measure::Uniform)
            .endogenous("X", "dice", &["E"], |v| v[0].token().to_string())
            .endogenous("Y", "parity", &["X"], |v| {
                let n = v[0].numeric().unwrap();
                if (n.numer() % BigInt::from(2)) == BigInt::from(0) {
                    "even".to_string()
                } else {
                    "odd".to_string()
                }
            })
            .endogenous("Z", "half", &["X"], |v| {
                if v[0].numeric().unwrap() <= &BigRational::from(BigInt::from(3)) {
                    "≤3".to_string()
                } else {
                    ">3".to_string()
                }
            });
        b.build().unwrap()
    }

    #[test]
    fn builder_produces_valid_model() {
        let scm = dice_xyz();
        assert_eq!(scm.endo_count(), 3);
        assert_eq!(scm.exo_count(), 1);
        assert!(validate(&scm).is_ok());
        let x = scm.node_by_name("X").unwrap();
        let y = scm.node_by_name("Y").unwrap();
        assert!(scm.graph().has_edge(x, y));
        assert_eq!(scm.mechanism(1).lookup(&[0]), 0); // X=1 -> odd
        assert_eq!(scm.mechanism(1).lookup(&[1]), 1); // X=2 -> even
    }

    #[test]
    fn validate_catches_arity_mismatch() {
        let scm = dice_xyz();
        let mut parts = scm.parts();
        // Drop X from Y's parent list while the edge X -> Y stays recorded.
        let y = NodeId::endo(1);
        parts.mechanisms[1] =
            MechanismTable::from_rows(y, alloc::vec![], alloc::vec![], alloc::vec![0], false)
                .unwrap();
        let broken = Scm::from_parts_unchecked(parts);
        let report = validate(&broken);
        assert!(report
            .issues
            .iter()
            .any(|i| matches!(i, ValidationIssue::ArityMismatch { node, .. } if *node == y)));
    }

    #[test]
    fn validate_catches_bad_measure() {
        let scm = dice_xyz();
        let mut parts = scm.parts();
        parts.measure = ExogenousMeasure::new(alloc::vec![MeasureEntry {
            probs: alloc::vec![
                BigRational::new(BigInt::from(1), BigInt::from(3));
                6
            ],
            apriori_known: false,
        }]);
        let report = validate(&Scm::from_parts_unchecked(parts));
        assert!(report
            .issues
            .iter()
            .any(|i| matches!(i, ValidationIssue::MeasureSum { sum, .. } if *sum == BigRational::new(BigInt::from(2), BigInt::from(1)))));
    }

    #[test]
    fn validate_catches_edge_into_exogenous() {
        let scm = dice_xyz();
        let mut parts = scm.parts();
        let nodes: Vec<NodeId> = parts.graph.nodes().iter().copied().collect();
        let mut edges: Vec<(NodeId, NodeId)> = parts.graph.edges().iter().copied().collect();
        edges.push((NodeId::endo(0), NodeId::exo(0)));
        parts.graph = CausalGraph::new(nodes, edges).unwrap();
        let report = validate(&Scm::from_parts_unchecked(parts));
        assert!(report
            .issues
            .iter()
            .any(|i| matches!(i, ValidationIssue::EdgeTargetsExogenous(_, _))));
        assert!(report
            .issues
            .iter()
            .any(|i| matches!(i, ValidationIssue::ExogenousHasParents(_))));
    }

    #[test]
    fn cyclic_models_validate_clean() {
        // A two-node cycle with total tables is a legal model.
        let mut b = ScmBuilder::new();
        b.space("bit", &["0", "1"])
            .exogenous("E", "bit", Measure::Uniform);
        b.endogenous("P", "bit", &["E"], |v| v[0].token().to_string());
        // Q depends on R and R on Q; declare via rows after both exist.
        let scm = {
            b.endogenous("Q", "bit", &["P"], |v| v[0].token().to_string());
            let mut parts = b.build().unwrap().parts();
            // Rewire Q <-> P into a cycle by hand:
            let p = NodeId::endo(0);
            let q = NodeId::endo(1);
            parts.mechanisms[0] = MechanismTable::from_rows(
                p,
                alloc::vec![q, NodeId::exo(0)],
                alloc::vec![2, 2],
                alloc::vec![0, 1, 1, 0],
                false,
            )
            .unwrap();
            let nodes: Vec<NodeId> = parts.graph.nodes().iter().copied().collect();
            parts.graph =
                CausalGraph::new(nodes, [(q, p), (NodeId::exo(0), p), (p, q)]).unwrap();
            Scm::from_parts(parts).unwrap()
        };
        assert!(!scm.graph().is_acyclic());
        assert!(validate(&scm).is_ok());
    }
}
