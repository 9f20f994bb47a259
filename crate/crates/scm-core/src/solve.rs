//! Structural solving and exact joint distributions.
//!
//! Acyclic systems are evaluated forward in topological order; cyclic ones
//! are solved by enumerating the endogenous product space and keeping the
//! assignments that satisfy every equation simultaneously. Empty and
//! multiple solution sets are legal results of `solve`; the joint
//! distribution requires uniqueness on every exogenous assignment of
//! positive measure and reports the offending assignment otherwise.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use num_rational::BigRational;

use crate::dist::{product, Assignment, Distribution};
use crate::error::{EngineError, Result};
use crate::graph::NodeId;
use crate::model::Scm;

/// All endogenous assignments satisfying the structural equations for one
/// exogenous assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolutionSet {
    pub exogenous: Assignment,
    pub solutions: Vec<Assignment>,
}

/// Verdict of the simplicity sweep with the first failing sub-system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimplicityReport {
    pub simple: bool,
    pub witness: Option<SimplicityWitness>,
}

/// A sub-system with a non-unique solution: which endogenous nodes were
/// fixed, to which values, under which exogenous assignment, and how many
/// solutions appeared.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimplicityWitness {
    pub fixed: Vec<(NodeId, usize)>,
    pub exogenous: Assignment,
    pub solution_count: usize,
}

fn check_exogenous_total(scm: &Scm, e: &Assignment) -> Result<()> {
    for id in scm.exo_nodes() {
        match e.get(id) {
            Some(v) if v < scm.card(id) => {}
            Some(v) => return Err(EngineError::ValueOutOfRange { node: id, index: v }),
            None => return Err(EngineError::IncompleteExogenous),
        }
    }
    Ok(())
}

fn parent_values(
    scm: &Scm,
    endo_index: usize,
    endo_vals: &[usize],
    e: &Assignment,
) -> Vec<usize> {
    scm.mechanism(endo_index)
        .parent_order()
        .iter()
        .map(|p| {
            if p.is_endogenous() {
                endo_vals[p.index]
            } else {
                e.get(*p).expect("exogenous assignment is total")
            }
        })
        .collect()
}

/// Solves the structural system for one total exogenous assignment.
pub fn solve(scm: &Scm, e: &Assignment) -> Result<SolutionSet> {
    check_exogenous_total(scm, e)?;
    let solutions = if let Some(order) = scm.graph().topological_order() {
        // Unique by construction: evaluate along the order.
        let mut vals = alloc::vec![usize::MAX; scm.endo_count()];
        for id in order.into_iter().filter(|n| n.is_endogenous()) {
            let pv = parent_values(scm, id.index, &vals, e);
            vals[id.index] = scm.mechanism(id.index).lookup(&pv);
        }
        alloc::vec![Assignment::from_pairs(
            (0..scm.endo_count()).map(|i| (NodeId::endo(i), vals[i])),
        )]
    } else {
        // Exhaustive check of every endogenous assignment against every
        // equation.
        let cards: Vec<usize> = scm.endo_nodes().iter().map(|n| scm.card(*n)).collect();
        let mut found = Vec::new();
        for combo in product(&cards) {
            let consistent = (0..scm.endo_count()).all(|i| {
                let pv = parent_values(scm, i, &combo, e);
                scm.mechanism(i).lookup(&pv) == combo[i]
            });
            if consistent {
                found.push(Assignment::from_pairs(
                    (0..scm.endo_count()).map(|i| (NodeId::endo(i), combo[i])),
                ));
            }
        }
        found
    };
    Ok(SolutionSet { exogenous: e.clone(), solutions })
}

/// Enumerates every exogenous assignment of positive measure, in canonical
/// order, together with its probability.
pub fn positive_exogenous(scm: &Scm) -> Vec<(Assignment, BigRational)> {
    let supports: Vec<Vec<usize>> = (0..scm.exo_count())
        .map(|i| scm.measure().support(i))
        .collect();
    let cards: Vec<usize> = supports.iter().map(|s| s.len()).collect();
    let mut out = Vec::new();
    for combo in product(&cards) {
        let mut a = Assignment::new();
        let mut p = BigRational::from_integer(1.into());
        for (i, pos) in combo.iter().enumerate() {
            let v = supports[i][*pos];
            a.set(NodeId::exo(i), v);
            p *= scm.measure().prob(i, v).clone();
        }
        out.push((a, p));
    }
    out
}

/// Exact joint distribution over all nodes (endogenous then exogenous).
///
/// Requires a unique solution for every exogenous assignment of positive
/// measure; reports the offending assignment otherwise.
pub fn joint_distribution(scm: &Scm) -> Result<Distribution> {
    let nodes: Vec<NodeId> = scm.all_nodes();
    let mut probs: BTreeMap<Vec<usize>, BigRational> = BTreeMap::new();
    for (e, p) in positive_exogenous(scm) {
        let sols = solve(scm, &e)?;
        match sols.solutions.len() {
            0 => return Err(EngineError::NoSolution { exogenous: e }),
            1 => {}
            n => return Err(EngineError::NonUniqueSolution { exogenous: e, count: n }),
        }
        let full = sols.solutions[0].union(&e);
        let combo: Vec<usize> = nodes.iter().map(|n| full.get(*n).unwrap()).collect();
        *probs.entry(combo).or_insert_with(|| BigRational::from_integer(0.into())) += p;
    }
    Ok(Distribution::new(nodes, probs))
}

/// Sweeps every intervention that fixes at most `max_subset` endogenous
/// nodes, every value combination for it, and every exogenous assignment of
/// positive measure; the model is simple iff each such sub-system has
/// exactly one solution. The witness is the first failure in canonical
/// sweep order (subset size ascending).
pub fn is_simple(scm: &Scm, max_subset: usize) -> Result<SimplicityReport> {
    let endo = scm.endo_nodes();
    for size in 0..=max_subset.min(endo.len()) {
        for subset in subsets_of_size(&endo, size) {
            let cards: Vec<usize> = subset.iter().map(|n| scm.card(*n)).collect();
            for values in product(&cards) {
                let fixed: Vec<(NodeId, usize)> =
                    subset.iter().copied().zip(values.iter().copied()).collect();
                let spec = crate::intervene::InterventionSpec::new(scm, &fixed)?;
                let sub = crate::intervene::do_transform(scm, &spec)?;
                for (e, _) in positive_exogenous(&sub) {
                    let n = solve(&sub, &e)?.solutions.len();
                    if n != 1 {
                        return Ok(SimplicityReport {
                            simple: false,
                            witness: Some(SimplicityWitness {
                                fixed,
                                exogenous: e,
                                solution_count: n,
                            }),
                        });
                    }
                }
            }
        }
    }
    Ok(SimplicityReport { simple: true, witness: None })
}

/// All subsets of the given size, in canonical order.
fn subsets_of_size(items: &[NodeId], size: usize) -> Vec<Vec<NodeId>> {
    let mut out = Vec::new();
    let mut current = Vec::new();
    fn rec(
        items: &[NodeId],
        start: usize,
        size: usize,
        current: &mut Vec<NodeId>,
        out: &mut Vec<Vec<NodeId>>,
    ) {
        if current.len() == size {
            out.push(current.clone());
            return;
        }
        for i in start..items.len() {
            current.push(items[i]);
            rec(items, i + 1, size, current, out);
            current.pop();
        }
    }
    rec(items, 0, size, &mut current, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Measure, ScmBuilder};
    use alloc::string::ToString;
    use num_bigint::BigInt;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    /// The two-reading dice pair with a cycle between parity and half:
    /// each reading is an exclusive-or of the other with its own noise bit.
    pub(crate) fn dice_yz_cyclic() -> Scm {
        let mut b = ScmBuilder::new();
        b.space("parity", &["odd", "even"])
            .space("half", &["≤3", ">3"])
            .space("bit", &["0", "1"])
            .exogenous("E_1", "bit", Measure::weights(&[("0", "2/3"), ("1", "1/3")]))
            .exogenous("E_2", "bit", Measure::weights(&[("0", "2/3"), ("1", "1/3")]));
        b.endogenous_rows("Y", "parity", &["Z", "E_2"], &["odd", "odd", "even", "even"]);
        b.endogenous_rows("Z", "half", &["Y", "E_1"], &["≤3", ">3", ">3", "≤3"]);
        b.apriori("Y").apriori("Z");
        b.build().unwrap()
    }

    fn exo(scm: &Scm, pairs: &[(&str, &str)]) -> Assignment {
        let mut a = Assignment::new();
        for (n, t) in pairs {
            let id = scm.node_by_name(n).unwrap();
            a.set(id, scm.value_index(id, t).unwrap());
        }
        a
    }

    #[test]
    fn cyclic_solutions_match_exhaustive_oracle() {
        let scm = dice_yz_cyclic();
        // Independent oracle: test every (Y, Z) pair against the equations
        // written out directly.
        let oracle = |y_odd: bool, z_low: bool, e1: bool, e2: bool| -> bool {
            let z_eq = z_low == (y_odd != e1);
            let _ = e2; // parity reading ignores its noise bit by table
            let y_eq = y_odd == z_low;
            z_eq && y_eq
        };
        for (e1, e2) in [(false, false), (false, true), (true, false), (true, true)] {
            let e = exo(
                &scm,
                &[
                    ("E_1", if e1 { "1" } else { "0" }),
                    ("E_2", if e2 { "1" } else { "0" }),
                ],
            );
            let got = solve(&scm, &e).unwrap().solutions.len();
            let want = [true, false]
                .iter()
                .flat_map(|y| [true, false].iter().map(move |z| (*y, *z)))
                .filter(|(y, z)| oracle(*y, *z, e1, e2))
                .count();
            assert_eq!(got, want, "e1={e1} e2={e2}");
            assert_eq!(want, if e1 { 0 } else { 2 });
        }
    }

    #[test]
    fn acyclic_solving_is_forward_evaluation() {
        let scm = crate::model::tests::dice_xyz();
        let e = exo(&scm, &[("E", "3")]);
        let sols = solve(&scm, &e).unwrap();
        assert_eq!(sols.solutions.len(), 1);
        let s = &sols.solutions[0];
        let (x, y, z) = (
            scm.node_by_name("X").unwrap(),
            scm.node_by_name("Y").unwrap(),
            scm.node_by_name("Z").unwrap(),
        );
        assert_eq!(scm.space(x).token(s.get(x).unwrap()), "3");
        assert_eq!(scm.space(y).token(s.get(y).unwrap()), "odd");
        assert_eq!(scm.space(z).token(s.get(z).unwrap()), "≤3");
    }

    #[test]
    fn joint_of_dice_xyz() {
        let scm = crate::model::tests::dice_xyz();
        let joint = joint_distribution(&scm).unwrap();
        assert_eq!(joint.support_len(), 6);
        let x = scm.node_by_name("X").unwrap();
        let y = scm.node_by_name("Y").unwrap();
        let z = scm.node_by_name("Z").unwrap();
        use crate::dist::Event;
        assert_eq!(joint.probability(&Event::equals(x, 0)), rat(1, 6));
        assert_eq!(joint.probability(&Event::equals(y, 0)), rat(1, 2));
        assert_eq!(joint.probability(&Event::equals(z, 0)), rat(1, 2));
    }

    #[test]
    fn joint_of_cyclic_model_reports_first_offender() {
        let scm = dice_yz_cyclic();
        match joint_distribution(&scm) {
            Err(EngineError::NonUniqueSolution { exogenous, count }) => {
                assert_eq!(count, 2);
                // Canonical sweep starts at (E_1=0, E_2=0).
                let e1 = scm.node_by_name("E_1").unwrap();
                let e2 = scm.node_by_name("E_2").unwrap();
                assert_eq!(exogenous.get(e1), Some(0));
                assert_eq!(exogenous.get(e2), Some(0));
            }
            other => panic!("expected NonUniqueSolution, got {other:?}"),
        }
    }

    #[test]
    fn no_solution_surfaces() {
        let scm = dice_yz_cyclic();
        let e = exo(&scm, &[("E_1", "1"), ("E_2", "0")]);
        assert!(solve(&scm, &e).unwrap().solutions.is_empty());
    }

    #[test]
    fn simplicity_sweep() {
        let scm = dice_yz_cyclic();
        let report = is_simple(&scm, 0).unwrap();
        assert!(!report.simple);
        let w = report.witness.unwrap();
        assert!(w.fixed.is_empty());
        assert_eq!(w.solution_count, 2);
        let e1 = scm.node_by_name("E_1").unwrap();
        assert_eq!(w.exogenous.get(e1), Some(0));

        // Fixing either node breaks the cycle: every size-1 sub-system is
        // uniquely solvable, so the sweep only fails at the empty subset.
        let acyclic = crate::model::tests::dice_xyz();
        let report = is_simple(&acyclic, acyclic.endo_count()).unwrap();
        assert!(report.simple);
    }

    #[test]
    fn fixing_one_node_of_the_cycle_restores_uniqueness() {
        let scm = dice_yz_cyclic();
        let y = scm.node_by_name("Y").unwrap();
        for value in 0..scm.card(y) {
            let spec = crate::intervene::InterventionSpec::new(&scm, &[(y, value)]).unwrap();
            let sub = crate::intervene::do_transform(&scm, &spec).unwrap();
            for (e, _) in positive_exogenous(&sub) {
                assert_eq!(solve(&sub, &e).unwrap().solutions.len(), 1);
            }
        }
    }

    #[test]
    fn incomplete_exogenous_rejected() {
        let scm = dice_yz_cyclic();
        let e = exo(&scm, &[("E_1", "0")]);
        assert_eq!(solve(&scm, &e), Err(EngineError::IncompleteExogenous));
    }

    impl SolutionSet {
        /// Token rendering of each solution, for test assertions.
        pub(crate) fn tokens(&self, scm: &Scm) -> Vec<alloc::string::String> {
            self.solutions.iter().map(|s| s.display(scm)).collect()
        }
    }

    #[test]
    fn cyclic_solution_pair_is_the_expected_one() {
        let scm = dice_yz_cyclic();
        let e = exo(&scm, &[("E_1", "0"), ("E_2", "0")]);
        let sols = solve(&scm, &e).unwrap();
        let mut tokens = sols.tokens(&scm);
        tokens.sort();
        assert_eq!(
            tokens,
            alloc::vec!["Y=even,Z=>3".to_string(), "Y=odd,Z=≤3".to_string()]
        );
    }
}
