//! Perfect interventions and what can be inferred from them.
//!
//! A perfect intervention replaces each target's mechanism with a constant
//! and prunes its incoming edges. On top of that surgery this module
//! implements the two detection rules (cause via single-node intervention
//! pairs, direct cause via all-but-one contexts), pairwise graph discovery,
//! intervention/observation consistency, the symmetric-detection report,
//! mixed-value interventions, and instrumented interventions that leak the
//! instrument's influence into chosen mechanisms.
//!
//! Detection sweeps run over singleton events only: two measures on a
//! finite space that agree on every singleton agree everywhere.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::dist::{product, Distribution, Event};
use crate::error::{EngineError, Result};
use crate::graph::{CausalGraph, NodeId};
use crate::model::{MechanismTable, Node, Scm};
use crate::solve::joint_distribution;

/// Ordered list of (endogenous node, value) targets of one perfect
/// intervention.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct InterventionSpec {
    targets: Vec<(NodeId, usize)>,
}

impl InterventionSpec {
    /// Validates targets: endogenous, distinct, values inside their spaces.
    pub fn new(scm: &Scm, targets: &[(NodeId, usize)]) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for (node, value) in targets {
            if !node.is_endogenous() {
                return Err(EngineError::InterveneExogenous(*node));
            }
            if node.index >= scm.endo_count() {
                return Err(EngineError::UnknownNode(*node));
            }
            if !seen.insert(*node) {
                return Err(EngineError::DuplicateTarget(*node));
            }
            if *value >= scm.card(*node) {
                return Err(EngineError::ValueOutOfRange { node: *node, index: *value });
            }
        }
        Ok(InterventionSpec { targets: targets.to_vec() })
    }

    pub fn targets(&self) -> &[(NodeId, usize)] {
        &self.targets
    }

    pub fn contains(&self, node: NodeId) -> bool {
        self.targets.iter().any(|(n, _)| *n == node)
    }

    /// Extends the spec with one more target.
    pub fn with(&self, scm: &Scm, node: NodeId, value: usize) -> Result<Self> {
        let mut t = self.targets.clone();
        t.push((node, value));
        InterventionSpec::new(scm, &t)
    }

    /// Renders `N=v` pairs in the spec's order.
    pub fn display(&self, scm: &Scm) -> String {
        let parts: Vec<String> = self
            .targets
            .iter()
            .map(|(n, v)| alloc::format!("{}={}", scm.name(*n), scm.space(*n).token(*v)))
            .collect();
        parts.join(",")
    }
}

/// Applies the intervention: each target's mechanism becomes the constant
/// table for its value with an empty parent list, and the target's incoming
/// edges disappear. Everything else is untouched.
pub fn do_transform(scm: &Scm, spec: &InterventionSpec) -> Result<Scm> {
    let mut current = scm.clone();
    for (node, value) in spec.targets() {
        current = current.with_mechanism(MechanismTable::constant(*node, *value))?;
    }
    Ok(current)
}

/// Joint distribution of the intervened model.
pub fn do_distribution(scm: &Scm, spec: &InterventionSpec) -> Result<Distribution> {
    joint_distribution(&do_transform(scm, spec)?)
}

/// Rational mixture of single-node interventions: the target is enforced to
/// each value with the given weight. Weights must sum to one.
pub fn mixed_do(
    scm: &Scm,
    target: NodeId,
    weights: &[(usize, BigRational)],
) -> Result<Distribution> {
    let total: BigRational = weights.iter().map(|(_, w)| w.clone()).sum();
    if !total.is_one() {
        return Err(EngineError::MixtureNotNormalized);
    }
    let mut acc: Option<(Vec<NodeId>, alloc::collections::BTreeMap<Vec<usize>, BigRational>)> =
        None;
    for (value, w) in weights {
        if w.is_zero() {
            continue;
        }
        let spec = InterventionSpec::new(scm, &[(target, *value)])?;
        let d = do_distribution(scm, &spec)?;
        let (nodes, probs) = acc.get_or_insert_with(|| (d.nodes().to_vec(), Default::default()));
        debug_assert_eq!(nodes.as_slice(), d.nodes());
        for (a, p) in d.iter() {
            let combo: Vec<usize> = nodes.iter().map(|n| a.get(*n).unwrap()).collect();
            *probs.entry(combo).or_insert_with(BigRational::zero) += w * p;
        }
    }
    let (nodes, probs) = acc.ok_or(EngineError::MixtureNotNormalized)?;
    Ok(Distribution::new(nodes, probs))
}

/// Which detection rule produced a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectionRule {
    /// Single-node intervention pairs.
    First,
    /// All-but-one interventions with a context held fixed.
    Second,
}

/// The pair of interventions and the singleton event on which the two
/// post-intervention measures differ.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetectionWitness {
    pub spec_a: InterventionSpec,
    pub spec_b: InterventionSpec,
    pub event_node: NodeId,
    pub event_value: usize,
    pub prob_a: BigRational,
    pub prob_b: BigRational,
}

/// Verdict of a detection sweep.
///
/// `exhaustive` records whether the verdict is definitive: true when a
/// witness was found (the rules are existential) or when the full sweep
/// completed; false only when a context cap truncated a negative sweep.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetectionReport {
    pub verdict: bool,
    pub rule: DetectionRule,
    pub witness: Option<DetectionWitness>,
    pub exhaustive: bool,
}

/// Default bound on the number of rule-2 contexts swept before reporting a
/// partial verdict.
pub const DEFAULT_CONTEXT_CAP: usize = 10_000;

fn require_acyclic_after(scm: &Scm, spec: &InterventionSpec) -> Result<Scm> {
    let t = do_transform(scm, spec)?;
    if t.graph().is_acyclic() {
        Ok(t)
    } else {
        Err(EngineError::CyclicAfterIntervention)
    }
}

/// First rule: `source` is detected as a cause of `sink` iff two
/// interventions on `source` alone give different measures to some event on
/// `sink`. Works on cyclic models whenever the intervention itself breaks
/// every cycle.
pub fn detect_cause(scm: &Scm, source: NodeId, sink: NodeId) -> Result<DetectionReport> {
    if !sink.is_endogenous() || sink.index >= scm.endo_count() {
        return Err(EngineError::NotEndogenous(sink));
    }
    if source == sink {
        return Err(EngineError::BadContext("pair must be distinct"));
    }
    let mut marginals = Vec::with_capacity(scm.card(source));
    let mut specs = Vec::with_capacity(scm.card(source));
    for value in 0..scm.card(source) {
        let spec = InterventionSpec::new(scm, &[(source, value)])?;
        let d = joint_distribution(&require_acyclic_after(scm, &spec)?)?;
        marginals.push(d.marginal(&[sink])?);
        specs.push(spec);
    }
    for a in 0..marginals.len() {
        for b in (a + 1)..marginals.len() {
            if let Some(w) = first_differing_singleton(scm, sink, &marginals[a], &marginals[b]) {
                return Ok(DetectionReport {
                    verdict: true,
                    rule: DetectionRule::First,
                    witness: Some(DetectionWitness {
                        spec_a: specs[a].clone(),
                        spec_b: specs[b].clone(),
                        event_node: sink,
                        event_value: w.0,
                        prob_a: w.1,
                        prob_b: w.2,
                    }),
                    exhaustive: true,
                });
            }
        }
    }
    Ok(DetectionReport {
        verdict: false,
        rule: DetectionRule::First,
        witness: None,
        exhaustive: true,
    })
}

fn first_differing_singleton(
    scm: &Scm,
    node: NodeId,
    da: &Distribution,
    db: &Distribution,
) -> Option<(usize, BigRational, BigRational)> {
    for value in 0..scm.card(node) {
        let ev = Event::equals(node, value);
        let (pa, pb) = (da.probability(&ev), db.probability(&ev));
        if pa != pb {
            return Some((value, pa, pb));
        }
    }
    None
}

/// Second rule over the model's own endogenous nodes.
pub fn detect_direct_cause(
    scm: &Scm,
    source: NodeId,
    sink: NodeId,
    cap: usize,
) -> Result<DetectionReport> {
    let observed = scm.endo_nodes();
    detect_direct_cause_scoped(scm, &observed, source, sink, cap)
}

/// Second rule restricted to an observed node set: every observed node
/// except the sink is intervened, the context over the remaining observed
/// nodes is swept, and the source's value pair varies within each context.
/// Nodes outside `observed` stay governed by their mechanisms, which is how
/// an experimenter holding an incomplete model probes a richer system.
pub fn detect_direct_cause_scoped(
    scm: &Scm,
    observed: &[NodeId],
    source: NodeId,
    sink: NodeId,
    cap: usize,
) -> Result<DetectionReport> {
    if !observed.contains(&source) || source == sink {
        return Err(EngineError::BadContext(
            "source must be observed and distinct from sink",
        ));
    }
    if !observed.contains(&sink) {
        return Err(EngineError::BadContext("sink must be observed"));
    }
    let context_nodes: Vec<NodeId> = observed
        .iter()
        .copied()
        .filter(|n| *n != source && *n != sink)
        .collect();
    let cards: Vec<usize> = context_nodes.iter().map(|n| scm.card(*n)).collect();
    let total: usize = cards.iter().product();
    let truncated = total > cap;
    for combo in product(&cards).into_iter().take(cap) {
        let context: Vec<(NodeId, usize)> = context_nodes
            .iter()
            .copied()
            .zip(combo.iter().copied())
            .collect();
        let mut marginals = Vec::with_capacity(scm.card(source));
        let mut specs = Vec::with_capacity(scm.card(source));
        for value in 0..scm.card(source) {
            let mut targets = context.clone();
            targets.push((source, value));
            let spec = InterventionSpec::new(scm, &targets)?;
            let d = joint_distribution(&require_acyclic_after(scm, &spec)?)?;
            marginals.push(d.marginal(&[sink])?);
            specs.push(spec);
        }
        for a in 0..marginals.len() {
            for b in (a + 1)..marginals.len() {
                if let Some(w) =
                    first_differing_singleton(scm, sink, &marginals[a], &marginals[b])
                {
                    return Ok(DetectionReport {
                        verdict: true,
                        rule: DetectionRule::Second,
                        witness: Some(DetectionWitness {
                            spec_a: specs[a].clone(),
                            spec_b: specs[b].clone(),
                            event_node: sink,
                            event_value: w.0,
                            prob_a: w.1,
                            prob_b: w.2,
                        }),
                        exhaustive: true,
                    });
                }
            }
        }
    }
    Ok(DetectionReport {
        verdict: false,
        rule: DetectionRule::Second,
        witness: None,
        exhaustive: !truncated,
    })
}

/// Pairwise application of the second rule: the graph an experimenter
/// reconstructs. Nodes are the observed endogenous nodes; an edge appears
/// iff the direct-cause sweep detects it.
pub fn discover_graph(scm: &Scm, cap: usize) -> Result<CausalGraph> {
    discover_graph_scoped(scm, &scm.endo_nodes(), cap)
}

/// Pairwise discovery over an observed subset of the endogenous nodes.
pub fn discover_graph_scoped(
    scm: &Scm,
    observed: &[NodeId],
    cap: usize,
) -> Result<CausalGraph> {
    let mut edges = Vec::new();
    for i in observed {
        for j in observed {
            if i == j {
                continue;
            }
            if detect_direct_cause_scoped(scm, observed, *i, *j, cap)?.verdict {
                edges.push((*i, *j));
            }
        }
    }
    CausalGraph::new(observed.iter().copied(), edges)
}

/// Whether enforcing `source = value` and observing it agree about `sink`:
/// compares the post-intervention measure with the conditional measure on
/// every singleton event of the sink. Requires the natural joint to exist
/// and the conditioning event to have positive probability.
pub fn intervention_consistent(
    scm: &Scm,
    source: NodeId,
    value: usize,
    sink: NodeId,
) -> Result<bool> {
    let joint = joint_distribution(scm)?;
    let cond_event = Event::equals(source, value);
    if joint.probability(&cond_event).is_zero() {
        return Err(EngineError::ConditionOnNull);
    }
    let spec = InterventionSpec::new(scm, &[(source, value)])?;
    let done = do_distribution(scm, &spec)?.marginal(&[sink])?;
    for v in 0..scm.card(sink) {
        let ev = Event::equals(sink, v);
        let p_do = done.probability(&ev);
        let p_cond = joint.conditional(&ev, &cond_event)?;
        if p_do != p_cond {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Outcome of probing one ordered pair inside a fixed context: detection in
/// both directions, consistency of each side's interventions (`None` when
/// the natural joint of the context-intervened model is undefined), whether
/// detection came out symmetric, and whether the consistency-implies-
/// symmetry guarantee held.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymmetricDetectionReport {
    pub forward: DetectionReport,
    pub backward: DetectionReport,
    pub forward_consistent: Option<bool>,
    pub backward_consistent: Option<bool>,
    pub symmetric: bool,
    pub guarantee_held: bool,
}

/// Probes the pair `(i, j)` under a context that must fix every other
/// endogenous node, reporting rule-2 detection in both directions and the
/// consistency of each side's interventions in the context-intervened
/// model.
pub fn symmetric_detection_check(
    scm: &Scm,
    i: NodeId,
    j: NodeId,
    context: &InterventionSpec,
) -> Result<SymmetricDetectionReport> {
    if i == j {
        return Err(EngineError::BadContext("pair must be distinct"));
    }
    let expected: BTreeSet<NodeId> = scm
        .endo_nodes()
        .into_iter()
        .filter(|n| *n != i && *n != j)
        .collect();
    let got: BTreeSet<NodeId> = context.targets().iter().map(|(n, _)| *n).collect();
    if expected != got {
        return Err(EngineError::BadContext(
            "context must fix exactly the endogenous nodes other than the pair",
        ));
    }
    let m_c = do_transform(scm, context)?;
    let forward = detect_cause(&m_c, i, j)?;
    let backward = detect_cause(&m_c, j, i)?;
    let forward_consistent = pair_consistency(&m_c, i, j)?;
    let backward_consistent = pair_consistency(&m_c, j, i)?;
    let symmetric = forward.verdict == backward.verdict;
    let guarantee_held =
        !(forward_consistent == Some(true) && backward_consistent == Some(true)) || symmetric;
    Ok(SymmetricDetectionReport {
        forward,
        backward,
        forward_consistent,
        backward_consistent,
        symmetric,
        guarantee_held,
    })
}

/// Consistency of every positive-probability intervention value of `source`
/// with respect to `sink`; `None` when the natural joint is undefined.
fn pair_consistency(scm: &Scm, source: NodeId, sink: NodeId) -> Result<Option<bool>> {
    let joint = match joint_distribution(scm) {
        Ok(j) => j,
        Err(EngineError::NonUniqueSolution { .. }) | Err(EngineError::NoSolution { .. }) => {
            return Ok(None)
        }
        Err(e) => return Err(e),
    };
    for value in 0..scm.card(source) {
        if joint.probability(&Event::equals(source, value)).is_zero() {
            continue;
        }
        if !intervention_consistent(scm, source, value, sink)? {
            return Ok(Some(false));
        }
    }
    Ok(Some(true))
}

/// How an instrumented intervention spills into one mechanism: the node's
/// table is replaced by `rows`, a total table over the node's existing
/// parents followed by the instrument.
#[derive(Debug, Clone)]
pub struct Leak {
    pub node: NodeId,
    pub rows: Vec<usize>,
}

/// The physical realization of an intervention: an instrument node fixed at
/// a value, spliced into chosen mechanisms.
#[derive(Debug, Clone)]
pub struct InstrumentSpec {
    pub name: String,
    pub space: crate::space::OutcomeSpace,
    pub value: usize,
    pub leaks: Vec<Leak>,
}

/// Applies the intervention together with its side channel: adds an
/// instrument node holding the given constant value and replaces each
/// leaked node's mechanism with its leak table (old parents plus the
/// instrument). With no leaks this is exactly `do_transform`.
pub fn instrumented_do(
    scm: &Scm,
    spec: &InterventionSpec,
    instrument: &InstrumentSpec,
) -> Result<Scm> {
    if instrument.leaks.is_empty() {
        return do_transform(scm, spec);
    }
    for leak in &instrument.leaks {
        if spec.contains(leak.node) {
            return Err(EngineError::LeakIntoTarget(leak.node));
        }
        if !leak.node.is_endogenous() || leak.node.index >= scm.endo_count() {
            return Err(EngineError::MalformedLeakTable {
                node: leak.node,
                reason: "leaked node must be endogenous",
            });
        }
    }
    if instrument.value >= instrument.space.card() {
        return Err(EngineError::ValueOutOfRange {
            node: NodeId::endo(scm.endo_count()),
            index: instrument.value,
        });
    }

    let mut parts = do_transform(scm, spec)?.parts();
    let instrument_id = NodeId::endo(parts.endogenous.len());
    parts.endogenous.push(Node {
        name: instrument.name.clone(),
        space: instrument.space.clone(),
    });
    parts
        .mechanisms
        .push(MechanismTable::constant(instrument_id, instrument.value));

    let mut edges: Vec<(NodeId, NodeId)> = parts.graph.edges().iter().copied().collect();
    for leak in &instrument.leaks {
        let old = &parts.mechanisms[leak.node.index];
        let mut order = old.parent_order().to_vec();
        let mut cards = old.parent_card().to_vec();
        order.push(instrument_id);
        cards.push(instrument.space.card());
        let expected: usize = cards.iter().product();
        if leak.rows.len() != expected {
            return Err(EngineError::MalformedLeakTable {
                node: leak.node,
                reason: "row count must cover old parents times instrument",
            });
        }
        if leak.rows.iter().any(|v| *v >= scm.card(leak.node)) {
            return Err(EngineError::MalformedLeakTable {
                node: leak.node,
                reason: "output outside the node's space",
            });
        }
        parts.mechanisms[leak.node.index] = MechanismTable::from_rows(
            leak.node,
            order,
            cards,
            leak.rows.clone(),
            false,
        )
        .map_err(|_| EngineError::MalformedLeakTable {
            node: leak.node,
            reason: "table assembly failed",
        })?;
        edges.push((instrument_id, leak.node));
    }
    let nodes = parts
        .graph
        .nodes()
        .iter()
        .copied()
        .chain(core::iter::once(instrument_id));
    parts.graph = CausalGraph::new(nodes, edges)?;
    Scm::from_parts(parts).map_err(|_| EngineError::MalformedLeakTable {
        node: instrument_id,
        reason: "instrumented model failed validation",
    })
}

/// Builds a leak table for a node by evaluating a function of the node's
/// current parent values and the instrument value.
pub fn leak_table(
    scm: &Scm,
    node: NodeId,
    instrument_space: &crate::space::OutcomeSpace,
    f: impl Fn(&[usize], usize) -> usize,
) -> Result<Leak> {
    if !node.is_endogenous() || node.index >= scm.endo_count() {
        return Err(EngineError::NotEndogenous(node));
    }
    let old = scm.mechanism(node.index);
    let mut rows = Vec::new();
    let mut cards = old.parent_card().to_vec();
    cards.push(instrument_space.card());
    for combo in product(&cards) {
        let (parents, instr) = combo.split_at(combo.len() - 1);
        rows.push(f(parents, instr[0]));
    }
    Ok(Leak { node, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::dice_xyz;
    use crate::solve::tests::dice_yz_cyclic;
    use num_bigint::BigInt;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn id(scm: &Scm, name: &str) -> NodeId {
        scm.node_by_name(name).unwrap()
    }

    fn vidx(scm: &Scm, node: &str, token: &str) -> (NodeId, usize) {
        let n = id(scm, node);
        (n, scm.value_index(n, token).unwrap())
    }

    #[test]
    fn surgery_prunes_edges_and_fixes_value() {
        let scm = dice_xyz();
        let (y, odd) = vidx(&scm, "Y", "odd");
        let spec = InterventionSpec::new(&scm, &[(y, odd)]).unwrap();
        let done = do_transform(&scm, &spec).unwrap();
        let x = id(&scm, "X");
        assert!(!done.graph().has_edge(x, y));
        assert!(done.graph().has_edge(x, id(&scm, "Z")));
        let d = joint_distribution(&done).unwrap();
        assert_eq!(d.probability(&Event::equals(y, odd)), rat(1, 1));
        // Z still tracks X after the surgery.
        let z = id(&scm, "Z");
        assert_eq!(d.probability(&Event::equals(z, 0)), rat(1, 2));
    }

    #[test]
    fn surgery_is_idempotent_and_commutes() {
        let scm = dice_xyz();
        let (y, odd) = vidx(&scm, "Y", "odd");
        let (z, hi) = vidx(&scm, "Z", ">3");
        let sy = InterventionSpec::new(&scm, &[(y, odd)]).unwrap();
        let sz = InterventionSpec::new(&scm, &[(z, hi)]).unwrap();
        let syz = InterventionSpec::new(&scm, &[(y, odd), (z, hi)]).unwrap();
        let once = do_transform(&scm, &syz).unwrap();
        let twice = do_transform(&once, &syz).unwrap();
        assert_eq!(once, twice);
        let seq = do_transform(&do_transform(&scm, &sy).unwrap(), &sz).unwrap();
        let seq_rev = do_transform(&do_transform(&scm, &sz).unwrap(), &sy).unwrap();
        assert_eq!(once, seq);
        assert_eq!(seq, seq_rev);
    }

    #[test]
    fn cyclic_pair_yields_the_interventional_contrast() {
        let scm = dice_yz_cyclic();
        let (y, odd) = vidx(&scm, "Y", "odd");
        let (_, even) = vidx(&scm, "Y", "even");
        let z = id(&scm, "Z");
        let low = scm.value_index(z, "≤3").unwrap();
        let d_odd =
            do_distribution(&scm, &InterventionSpec::new(&scm, &[(y, odd)]).unwrap()).unwrap();
        let d_even =
            do_distribution(&scm, &InterventionSpec::new(&scm, &[(y, even)]).unwrap()).unwrap();
        assert_eq!(d_odd.probability(&Event::equals(z, low)), rat(2, 3));
        assert_eq!(d_even.probability(&Event::equals(z, low)), rat(1, 3));
    }

    #[test]
    fn first_rule_on_the_dice_family() {
        let scm = dice_xyz();
        let (x, z) = (id(&scm, "X"), id(&scm, "Z"));
        let report = detect_cause(&scm, x, z).unwrap();
        assert!(report.verdict && report.exhaustive);
        let w = report.witness.unwrap();
        // Canonical sweep: first differing pair is X=1 vs X=4.
        assert_eq!(w.spec_a.display(&scm), "X=1");
        assert_eq!(w.spec_b.display(&scm), "X=4");
        assert_eq!(w.prob_a, rat(1, 1));
        assert_eq!(w.prob_b, rat(0, 1));

        // Intervening the coarse reading never moves the parity reading.
        let y = id(&scm, "Y");
        let report = detect_cause(&scm, z, y).unwrap();
        assert!(!report.verdict && report.exhaustive);
    }

    #[test]
    fn first_rule_through_the_cycle() {
        let scm = dice_yz_cyclic();
        let (y, z) = (id(&scm, "Y"), id(&scm, "Z"));
        let report = detect_cause(&scm, y, z).unwrap();
        assert!(report.verdict);
        let w = report.witness.unwrap();
        assert_eq!(w.prob_a, rat(2, 3));
        assert_eq!(w.prob_b, rat(1, 3));
        // Both directions come out detectable here.
        assert!(detect_cause(&scm, z, y).unwrap().verdict);
    }

    #[test]
    fn second_rule_screens_derived_readings() {
        let scm = dice_xyz();
        let (x, y, z) = (id(&scm, "X"), id(&scm, "Y"), id(&scm, "Z"));
        assert!(detect_direct_cause(&scm, x, z, DEFAULT_CONTEXT_CAP).unwrap().verdict);
        // With the die value pinned, parity tells nothing new about the half.
        let r = detect_direct_cause(&scm, y, z, DEFAULT_CONTEXT_CAP).unwrap();
        assert!(!r.verdict && r.exhaustive);
    }

    #[test]
    fn discovery_reconstructs_the_dice_graph() {
        let scm = dice_xyz();
        let g = discover_graph(&scm, DEFAULT_CONTEXT_CAP).unwrap();
        let (x, y, z) = (id(&scm, "X"), id(&scm, "Y"), id(&scm, "Z"));
        let expected: alloc::collections::BTreeSet<(NodeId, NodeId)> =
            [(x, y), (x, z)].into_iter().collect();
        assert_eq!(g.edges(), &expected);
    }

    #[test]
    fn mixtures_average_the_enforcements() {
        let scm = dice_xyz();
        let x = id(&scm, "X");
        let z = id(&scm, "Z");
        let low = scm.value_index(z, "≤3").unwrap();
        let v = |t: &str| scm.value_index(x, t).unwrap();
        // Enforcing odd via {1,5} and even via {2,6} both land at 1/2.
        let odd_mix = mixed_do(&scm, x, &[(v("1"), rat(1, 2)), (v("5"), rat(1, 2))]).unwrap();
        let even_mix = mixed_do(&scm, x, &[(v("2"), rat(1, 2)), (v("6"), rat(1, 2))]).unwrap();
        assert_eq!(odd_mix.probability(&Event::equals(z, low)), rat(1, 2));
        assert_eq!(even_mix.probability(&Event::equals(z, low)), rat(1, 2));
        // A point-mass mixture is a plain intervention.
        let point = mixed_do(&scm, x, &[(v("3"), rat(1, 1))]).unwrap();
        let plain =
            do_distribution(&scm, &InterventionSpec::new(&scm, &[(x, v("3"))]).unwrap()).unwrap();
        assert_eq!(point, plain);
        // Uniform over all six values also lands at 1/2.
        let all: Vec<(usize, BigRational)> = (0..6).map(|i| (i, rat(1, 6))).collect();
        let u = mixed_do(&scm, x, &all).unwrap();
        assert_eq!(u.probability(&Event::equals(z, low)), rat(1, 2));
        // Weights must sum to one.
        assert_eq!(
            mixed_do(&scm, x, &[(v("1"), rat(1, 2))]),
            Err(EngineError::MixtureNotNormalized)
        );
    }

    #[test]
    fn consistency_on_roots_and_its_failure_downstream() {
        let scm = dice_xyz();
        let (x, y, z) = (id(&scm, "X"), id(&scm, "Y"), id(&scm, "Z"));
        // The die itself is a root: enforcing and observing agree.
        for v in 0..6 {
            assert!(intervention_consistent(&scm, x, v, z).unwrap());
            assert!(intervention_consistent(&scm, x, v, y).unwrap());
        }
        // Enforcing parity is not the same as observing it: 1/2 vs 2/3.
        let odd = scm.value_index(y, "odd").unwrap();
        assert!(!intervention_consistent(&scm, y, odd, z).unwrap());
        // On the cyclic pair the natural joint is undefined.
        let cyc = dice_yz_cyclic();
        let (cy, codd) = vidx(&cyc, "Y", "odd");
        let cz = id(&cyc, "Z");
        assert!(matches!(
            intervention_consistent(&cyc, cy, codd, cz),
            Err(EngineError::NonUniqueSolution { .. })
        ));
    }

    #[test]
    fn symmetric_check_on_the_fixed_die() {
        let scm = dice_xyz();
        let (x, one) = vidx(&scm, "X", "1");
        let (y, z) = (id(&scm, "Y"), id(&scm, "Z"));
        let context = InterventionSpec::new(&scm, &[(x, one)]).unwrap();
        let r = symmetric_detection_check(&scm, y, z, &context).unwrap();
        // Fixing the die makes both readings constant.
        assert!(!r.forward.verdict && !r.backward.verdict);
        assert!(r.symmetric && r.guarantee_held);
        assert_eq!(r.forward_consistent, Some(true));
        assert_eq!(r.backward_consistent, Some(true));
    }

    #[test]
    fn symmetric_check_flags_one_directional_detection() {
        let scm = dice_xyz();
        let (y, odd) = vidx(&scm, "Y", "odd");
        let (x, z) = (id(&scm, "X"), id(&scm, "Z"));
        let context = InterventionSpec::new(&scm, &[(y, odd)]).unwrap();
        let r = symmetric_detection_check(&scm, x, z, &context).unwrap();
        assert!(r.forward.verdict);
        assert!(!r.backward.verdict);
        assert!(!r.symmetric);
        // The asymmetry is licensed: observing the half reading biases the
        // die, so the backward interventions are inconsistent.
        assert_eq!(r.forward_consistent, Some(true));
        assert_eq!(r.backward_consistent, Some(false));
        assert!(r.guarantee_held);
    }

    #[test]
    fn instrument_with_no_leaks_is_plain_surgery() {
        let scm = dice_xyz();
        let (y, odd) = vidx(&scm, "Y", "odd");
        let spec = InterventionSpec::new(&scm, &[(y, odd)]).unwrap();
        let instr = InstrumentSpec {
            name: "I".into(),
            space: crate::space::OutcomeSpace::new("bit", &["0", "1"]).unwrap(),
            value: 1,
            leaks: alloc::vec![],
        };
        assert_eq!(
            instrumented_do(&scm, &spec, &instr).unwrap(),
            do_transform(&scm, &spec).unwrap()
        );
    }

    #[test]
    fn instrument_leak_changes_the_leaked_mechanism() {
        let scm = dice_xyz();
        let (y, odd) = vidx(&scm, "Y", "odd");
        let z = id(&scm, "Z");
        let space = crate::space::OutcomeSpace::new("bit", &["0", "1"]).unwrap();
        // The instrument flips the half reading when present.
        let leak = leak_table(&scm, z, &space, |parents, instr| {
            let natural = scm.mechanism(z.index).lookup(parents);
            if instr == 1 {
                1 - natural
            } else {
                natural
            }
        })
        .unwrap();
        let spec = InterventionSpec::new(&scm, &[(y, odd)]).unwrap();
        let instr = InstrumentSpec {
            name: "I".into(),
            space,
            value: 1,
            leaks: alloc::vec![leak.clone()],
        };
        let m = instrumented_do(&scm, &spec, &instr).unwrap();
        let d = joint_distribution(&m).unwrap();
        // Flipped: P(Z=≤3) counts die values above three now.
        assert_eq!(d.probability(&Event::equals(z, 0)), rat(1, 2));
        let x = id(&scm, "X");
        let one = scm.value_index(x, "1").unwrap();
        let d = d.selection_filter(&Event::equals(x, one)).unwrap();
        assert_eq!(d.probability(&Event::equals(z, 1)), rat(1, 1));

        // Leaking into an intervened target is rejected.
        let bad_spec = InterventionSpec::new(&scm, &[(z, 0)]).unwrap();
        let err = instrumented_do(&scm, &bad_spec, &instr);
        assert_eq!(err, Err(EngineError::LeakIntoTarget(z)));
    }

    #[test]
    fn spec_validation() {
        let scm = dice_xyz();
        let y = id(&scm, "Y");
        assert!(matches!(
            InterventionSpec::new(&scm, &[(NodeId::exo(0), 0)]),
            Err(EngineError::InterveneExogenous(_))
        ));
        assert!(matches!(
            InterventionSpec::new(&scm, &[(y, 0), (y, 1)]),
            Err(EngineError::DuplicateTarget(_))
        ));
        assert!(matches!(
            InterventionSpec::new(&scm, &[(y, 7)]),
            Err(EngineError::ValueOutOfRange { .. })
        ));
    }
}
