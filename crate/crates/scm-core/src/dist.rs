//! Assignments, events, and exact discrete distributions, together with the
//! measure operations used throughout: marginalization, conditioning,
//! dependence, conditional independence, and selection filtering.
//!
//! All probabilities are exact rationals; equality tests are exact.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{EngineError, Result};
use crate::graph::NodeId;
use crate::model::Scm;

/// A map from nodes to value indices of their outcome spaces.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct Assignment {
    values: BTreeMap<NodeId, usize>,
}

impl Assignment {
    pub fn new() -> Self {
        Assignment { values: BTreeMap::new() }
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (NodeId, usize)>) -> Self {
        Assignment { values: pairs.into_iter().collect() }
    }

    pub fn set(&mut self, node: NodeId, value: usize) {
        self.values.insert(node, value);
    }

    pub fn get(&self, node: NodeId) -> Option<usize> {
        self.values.get(&node).copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, usize)> + '_ {
        self.values.iter().map(|(n, v)| (*n, *v))
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.values.keys().copied()
    }

    /// Merges two assignments over disjoint node sets.
    pub fn union(&self, other: &Assignment) -> Assignment {
        let mut out = self.clone();
        for (n, v) in other.iter() {
            out.set(n, v);
        }
        out
    }

    /// Renders `N=v` pairs in canonical node order, resolving names and
    /// tokens against the model.
    pub fn display(&self, scm: &Scm) -> alloc::string::String {
        use alloc::string::ToString;
        let mut parts = Vec::new();
        for (n, v) in self.iter() {
            parts.push(alloc::format!(
                "{}={}",
                scm.name(n),
                scm.space(n).token(v)
            ));
        }
        parts.join(",").to_string()
    }
}

/// A finite event: a node list plus the set of accepted value combinations
/// over those nodes. Concrete rather than a predicate so that events are
/// comparable and serializable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    nodes: Vec<NodeId>,
    accepted: BTreeSet<Vec<usize>>,
}

impl Event {
    /// Event `node = value`.
    pub fn equals(node: NodeId, value: usize) -> Self {
        Event {
            nodes: alloc::vec![node],
            accepted: [alloc::vec![value]].into_iter().collect(),
        }
    }

    /// Event `node ∈ values`.
    pub fn within(node: NodeId, values: &[usize]) -> Self {
        Event {
            nodes: alloc::vec![node],
            accepted: values.iter().map(|v| alloc::vec![*v]).collect(),
        }
    }

    /// Builds an event over several nodes by enumerating their product space
    /// and keeping the combinations the predicate accepts.
    pub fn over(scm: &Scm, nodes: &[NodeId], accept: impl Fn(&[usize]) -> bool) -> Self {
        let cards: Vec<usize> = nodes.iter().map(|n| scm.card(*n)).collect();
        let mut accepted = BTreeSet::new();
        for combo in product(&cards) {
            if accept(&combo) {
                accepted.insert(combo);
            }
        }
        Event { nodes: nodes.to_vec(), accepted }
    }

    /// Conjunction of two events over disjoint node sets.
    pub fn and(&self, other: &Event) -> Result<Event> {
        if self.nodes.iter().any(|n| other.nodes.contains(n)) {
            return Err(EngineError::OverlappingSets);
        }
        let mut nodes = self.nodes.clone();
        nodes.extend_from_slice(&other.nodes);
        let mut accepted = BTreeSet::new();
        for a in &self.accepted {
            for b in &other.accepted {
                let mut c = a.clone();
                c.extend_from_slice(b);
                accepted.insert(c);
            }
        }
        Ok(Event { nodes, accepted })
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    /// Whether a full assignment satisfies the event. Nodes missing from the
    /// assignment make the event unsatisfied.
    pub fn matches(&self, a: &Assignment) -> bool {
        let combo: Option<Vec<usize>> = self.nodes.iter().map(|n| a.get(*n)).collect();
        match combo {
            Some(c) => self.accepted.contains(&c),
            None => false,
        }
    }
}

/// Exact probability mapping over joint assignments of a fixed node list.
///
/// Assignments are stored densely as value-index vectors in the node-list
/// order; iteration order is canonical.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Distribution {
    nodes: Vec<NodeId>,
    probs: BTreeMap<Vec<usize>, BigRational>,
}

impl Distribution {
    /// Builds a distribution, dropping zero-probability entries. Entries
    /// must be non-negative and sum to exactly one.
    pub fn new(nodes: Vec<NodeId>, probs: BTreeMap<Vec<usize>, BigRational>) -> Self {
        let kept: BTreeMap<Vec<usize>, BigRational> =
            probs.into_iter().filter(|(_, p)| !p.is_zero()).collect();
        let sum: BigRational = kept.values().cloned().sum();
        debug_assert!(kept.values().all(|p| p > &BigRational::zero()));
        debug_assert!(sum.is_one(), "distribution must sum to 1");
        Distribution { nodes, probs: kept }
    }

    /// Point mass on the empty assignment: the marginal over no nodes.
    pub fn unit() -> Self {
        let mut probs = BTreeMap::new();
        probs.insert(Vec::new(), BigRational::one());
        Distribution { nodes: Vec::new(), probs }
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn support_len(&self) -> usize {
        self.probs.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Assignment, &BigRational)> + '_ {
        self.probs.iter().map(|(combo, p)| {
            (
                Assignment::from_pairs(
                    self.nodes.iter().copied().zip(combo.iter().copied()),
                ),
                p,
            )
        })
    }

    /// Total mass satisfying the event.
    pub fn probability(&self, event: &Event) -> BigRational {
        let mut sum = BigRational::zero();
        for (a, p) in self.iter() {
            if event.matches(&a) {
                sum += p.clone();
            }
        }
        sum
    }

    /// Exact marginal over `keep` (a subset of this distribution's nodes),
    /// in canonical node order. The marginal over no nodes is the unit
    /// distribution.
    pub fn marginal(&self, keep: &[NodeId]) -> Result<Distribution> {
        for n in keep {
            if !self.nodes.contains(n) {
                return Err(EngineError::UnknownNode(*n));
            }
        }
        let mut kept: Vec<NodeId> = keep.to_vec();
        kept.sort();
        kept.dedup();
        let positions: Vec<usize> = kept
            .iter()
            .map(|n| self.nodes.iter().position(|m| m == n).unwrap())
            .collect();
        let mut probs: BTreeMap<Vec<usize>, BigRational> = BTreeMap::new();
        for (combo, p) in &self.probs {
            let proj: Vec<usize> = positions.iter().map(|i| combo[*i]).collect();
            *probs.entry(proj).or_insert_with(BigRational::zero) += p.clone();
        }
        Ok(Distribution { nodes: kept, probs })
    }

    /// Exact conditional probability `P(event | given)`.
    pub fn conditional(&self, event: &Event, given: &Event) -> Result<BigRational> {
        let denom = self.probability(given);
        if denom.is_zero() {
            return Err(EngineError::ConditionOnNull);
        }
        let mut joint = BigRational::zero();
        for (a, p) in self.iter() {
            if given.matches(&a) && event.matches(&a) {
                joint += p.clone();
            }
        }
        Ok(joint / denom)
    }

    /// Renormalized restriction to the assignments the predicate keeps: the
    /// observational measure induced by a selection mechanism.
    pub fn selection_filter(&self, keep: &Event) -> Result<Distribution> {
        let total = self.probability(keep);
        if total.is_zero() {
            return Err(EngineError::FilterToNull);
        }
        let mut probs = BTreeMap::new();
        for (combo, p) in &self.probs {
            let a = Assignment::from_pairs(
                self.nodes.iter().copied().zip(combo.iter().copied()),
            );
            if keep.matches(&a) {
                probs.insert(combo.clone(), p / total.clone());
            }
        }
        Ok(Distribution { nodes: self.nodes.clone(), probs })
    }

    /// Exact dependence test: true iff `P(A ∩ B) ≠ P(A) · P(B)`. The two
    /// events must range over disjoint node sets.
    pub fn dependent(&self, a: &Event, b: &Event) -> Result<bool> {
        let both = a.and(b)?;
        Ok(self.probability(&both) != self.probability(a) * self.probability(b))
    }

    /// Exact conditional independence of the node sets `a` and `b` given
    /// `c`: for every assignment of `c` with positive probability, the
    /// conditional joint over `a ∪ b` factorizes. Checked cross-multiplied,
    /// `P(abc)·P(c) = P(ac)·P(bc)`, so no division is involved.
    pub fn cond_independent(
        &self,
        a: &[NodeId],
        b: &[NodeId],
        c: &[NodeId],
    ) -> Result<bool> {
        let sa: BTreeSet<NodeId> = a.iter().copied().collect();
        let sb: BTreeSet<NodeId> = b.iter().copied().collect();
        let sc: BTreeSet<NodeId> = c.iter().copied().collect();
        if sa.intersection(&sb).next().is_some()
            || sa.intersection(&sc).next().is_some()
            || sb.intersection(&sc).next().is_some()
        {
            return Err(EngineError::OverlappingSets);
        }
        let mut abc: Vec<NodeId> = a.iter().chain(b).chain(c).copied().collect();
        abc.sort();
        let m_abc = self.marginal(&abc)?;
        let m_ac = self.marginal(&sa.iter().chain(&sc).copied().collect::<Vec<_>>())?;
        let m_bc = self.marginal(&sb.iter().chain(&sc).copied().collect::<Vec<_>>())?;
        let m_c = self.marginal(&sc.iter().copied().collect::<Vec<_>>())?;

        // Enumerate the full value product over a ∪ b ∪ c via the abc
        // marginal's node list.
        let all_cards: Vec<usize> = m_abc
            .nodes
            .iter()
            .map(|n| {
                // Cardinality is recoverable from observed combos only if the
                // support covers it; take the max index + 1 as a lower bound
                // and rely on zero-extension: missing combos have P = 0.
                self.card_hint(*n)
            })
            .collect();
        for combo in product(&all_cards) {
            let assign = Assignment::from_pairs(
                m_abc.nodes.iter().copied().zip(combo.iter().copied()),
            );
            let p_abc = m_abc.lookup(&assign);
            let p_ac = m_ac.lookup(&assign);
            let p_bc = m_bc.lookup(&assign);
            let p_c = m_c.lookup(&assign);
            if p_abc * p_c != p_ac * p_bc {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Probability of the sub-assignment covering exactly this
    /// distribution's nodes (zero when absent from the support).
    fn lookup(&self, a: &Assignment) -> BigRational {
        let combo: Vec<usize> = self
            .nodes
            .iter()
            .map(|n| a.get(*n).expect("assignment covers marginal nodes"))
            .collect();
        self.probs.get(&combo).cloned().unwrap_or_else(BigRational::zero)
    }

    /// Upper bound on value indices seen for a node across the support,
    /// plus one. Sufficient for factorization sweeps: combinations beyond
    /// the support carry zero mass on every side of the identity.
    fn card_hint(&self, node: NodeId) -> usize {
        let pos = self
            .nodes
            .iter()
            .position(|n| *n == node)
            .expect("node in distribution");
        self.probs
            .keys()
            .map(|combo| combo[pos] + 1)
            .max()
            .unwrap_or(1)
    }
}

/// Mixed-radix enumeration of all value-index combinations for the given
/// cardinalities, in canonical order (last position varies fastest).
pub fn product(cards: &[usize]) -> Vec<Vec<usize>> {
    let total: usize = cards.iter().product();
    let mut out = Vec::with_capacity(total);
    for rank in 0..total {
        let mut combo = alloc::vec![0usize; cards.len()];
        let mut r = rank;
        for i in (0..cards.len()).rev() {
            combo[i] = r % cards[i];
            r /= cards[i];
        }
        out.push(combo);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    /// Two independent fair coins.
    fn two_coins() -> Distribution {
        let nodes = alloc::vec![NodeId::endo(0), NodeId::endo(1)];
        let mut probs = BTreeMap::new();
        for a in 0..2 {
            for b in 0..2 {
                probs.insert(alloc::vec![a, b], rat(1, 4));
            }
        }
        Distribution::new(nodes, probs)
    }

    #[test]
    fn marginal_and_conditioning() {
        let d = two_coins();
        let m = d.marginal(&[NodeId::endo(1)]).unwrap();
        assert_eq!(m.support_len(), 2);
        let ev = Event::equals(NodeId::endo(1), 0);
        assert_eq!(m.probability(&ev), rat(1, 2));
        // P(A | A) = 1 for positive A.
        assert_eq!(d.conditional(&ev, &ev).unwrap(), rat(1, 1));
        // Marginal over nothing is the unit point mass.
        let unit = d.marginal(&[]).unwrap();
        assert_eq!(unit.support_len(), 1);
        assert_eq!(unit.probability(&Event { nodes: alloc::vec![], accepted: [alloc::vec![]].into_iter().collect() }), rat(1, 1));
    }

    #[test]
    fn independent_coins_are_not_dependent() {
        let d = two_coins();
        let a = Event::equals(NodeId::endo(0), 0);
        let b = Event::equals(NodeId::endo(1), 0);
        assert!(!d.dependent(&a, &b).unwrap());
        // Symmetry.
        assert!(!d.dependent(&b, &a).unwrap());
        // Overlapping events are rejected.
        assert_eq!(d.dependent(&a, &a), Err(EngineError::OverlappingSets));
    }

    #[test]
    fn filter_keeps_relative_odds() {
        let d = two_coins();
        // Keep everything except the (1,1) corner.
        let keep = Event::over_raw(
            alloc::vec![NodeId::endo(0), NodeId::endo(1)],
            [alloc::vec![0, 0], alloc::vec![0, 1], alloc::vec![1, 0]]
                .into_iter()
                .collect(),
        );
        let f = d.selection_filter(&keep).unwrap();
        let corner = Event::over_raw(
            alloc::vec![NodeId::endo(0), NodeId::endo(1)],
            [alloc::vec![0, 0]].into_iter().collect(),
        );
        assert_eq!(f.probability(&corner), rat(1, 3));
        // Filtering to nothing errors.
        let none = Event::over_raw(
            alloc::vec![NodeId::endo(0), NodeId::endo(1)],
            BTreeSet::new(),
        );
        assert_eq!(d.selection_filter(&none), Err(EngineError::FilterToNull));
        // Filtering by a sure event is the identity.
        let all = Event::over_raw(
            alloc::vec![NodeId::endo(0)],
            [alloc::vec![0], alloc::vec![1]].into_iter().collect(),
        );
        assert_eq!(d.selection_filter(&all).unwrap(), d);
    }

    #[test]
    fn conditioning_on_null_errors() {
        let d = two_coins();
        let imp = Event::over_raw(
            alloc::vec![NodeId::endo(0), NodeId::endo(1)],
            BTreeSet::new(),
        );
        let ev = Event::equals(NodeId::endo(0), 0);
        assert_eq!(d.conditional(&ev, &imp), Err(EngineError::ConditionOnNull));
    }

    impl Event {
        pub(crate) fn over_raw(nodes: Vec<NodeId>, accepted: BTreeSet<Vec<usize>>) -> Self {
            Event { nodes, accepted }
        }
    }
}
