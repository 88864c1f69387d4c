//! Strategic relevance.
//!
//! A decision `d'` is s-reachable from `d` when, in the mechanised graph,
//! the mechanism node of `d'` is d-connected to the utilities of `d`'s owner
//! that lie downstream of `d`, given `d` and its parents. The s-relevance
//! graph collects these dependencies; acyclicity of that graph (sufficient
//! recall) guarantees a behavioural-policy equilibrium exists.
//!
//! Variables fixed by a pre-policy intervention are no longer decisions, but
//! their fixed tables can still matter to the remaining decisions; they show
//! up as dedicated source nodes so the rendered graph mirrors the intervened
//! game.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::error::ModelError;
use crate::graph::{VarKind, VariableId};
use crate::model::Scg;

/// Directed graph over the policy variables of a game's decisions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelevanceGraph {
    /// The game's decision variables, sorted.
    pub nodes: Vec<VariableId>,
    /// Pre-policy-fixed variables that remain relevant sources.
    pub intervened: Vec<VariableId>,
    /// Edge `(a, b)` means the policy of `b` is strategically relevant to
    /// `a`; edges out of intervened sources point at the decisions that
    /// respond to them.
    pub edges: BTreeSet<(VariableId, VariableId)>,
}

fn mechanism_relevant(
    scg: &Scg,
    source: &VariableId,
    target: &VariableId,
) -> Result<bool, ModelError> {
    let dag = scg.dag();
    let t_idx = dag.index_of(target)?;
    if dag.var(t_idx).kind != VarKind::Decision {
        return Err(ModelError::NotADecision(target.clone()));
    }
    let owner = scg.owner_of(target)?.clone();
    let descendants = dag.descendants(target)?;
    let targets: BTreeSet<VariableId> = dag
        .utility_indices_of(&owner)
        .into_iter()
        .map(|i| dag.var(i).id.clone())
        .filter(|id| descendants.contains(id))
        .collect();
    if targets.is_empty() {
        return Ok(false);
    }
    let mut sources: Vec<VariableId> = scg.decisions();
    sources.extend(scg.intervened().iter().cloned());
    let (mech, mechanism_of) = dag.mechanised_for(&sources);
    let mechanism = mechanism_of
        .get(source)
        .ok_or_else(|| ModelError::NotADecision(source.clone()))?;
    let xs: BTreeSet<VariableId> = [mechanism.clone()].into();
    let mut zs: BTreeSet<VariableId> = dag
        .parent_indices(t_idx)
        .iter()
        .map(|&p| dag.var(p).id.clone())
        .collect();
    zs.insert(target.clone());
    Ok(!mech.d_separated(&xs, &targets, &zs)?)
}

/// True iff the policy of `d_prime` is strategically relevant to `d`.
pub fn s_reachable(scg: &Scg, d: &VariableId, d_prime: &VariableId) -> Result<bool, ModelError> {
    let dag = scg.dag();
    for id in [d, d_prime] {
        if dag.var(dag.index_of(id)?).kind != VarKind::Decision {
            return Err(ModelError::NotADecision(id.clone()));
        }
    }
    mechanism_relevant(scg, d_prime, d)
}

/// Builds the s-relevance graph of a game.
///
/// Contains the edge `Π_d -> Π_d'` iff `d'` is s-reachable from `d`. For each
/// variable fixed by a pre-policy, an edge `π_pre -> Π_d` is added whenever
/// the fixed table is still relevant to the remaining decision `d`.
pub fn s_relevance_graph(scg: &Scg) -> Result<RelevanceGraph, ModelError> {
    let mut nodes = scg.decisions();
    nodes.sort();
    let intervened: Vec<VariableId> = scg.intervened().iter().cloned().collect();
    let mut edges = BTreeSet::new();
    for d in &nodes {
        for d_prime in &nodes {
            if d != d_prime && s_reachable(scg, d, d_prime)? {
                edges.insert((d.clone(), d_prime.clone()));
            }
        }
        for p in &intervened {
            if mechanism_relevant(scg, p, d)? {
                edges.insert((p.clone(), d.clone()));
            }
        }
    }
    Ok(RelevanceGraph {
        nodes,
        intervened,
        edges,
    })
}

/// Sufficient recall holds iff the relevance graph is acyclic.
pub fn has_sufficient_recall(graph: &RelevanceGraph) -> bool {
    find_cycle(graph).is_none()
}

/// A witness cycle of the relevance graph, if any; deterministic choice.
pub fn find_cycle(graph: &RelevanceGraph) -> Option<Vec<VariableId>> {
    let mut successors: BTreeMap<&VariableId, Vec<&VariableId>> = BTreeMap::new();
    for (a, b) in &graph.edges {
        successors.entry(a).or_default().push(b);
    }

    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    fn dfs<'a>(
        node: &'a VariableId,
        successors: &BTreeMap<&'a VariableId, Vec<&'a VariableId>>,
        marks: &mut BTreeMap<&'a VariableId, Mark>,
        stack: &mut Vec<&'a VariableId>,
    ) -> Option<Vec<VariableId>> {
        marks.insert(node, Mark::Active);
        stack.push(node);
        for &next in successors.get(node).into_iter().flatten() {
            match marks.get(next).copied().unwrap_or(Mark::New) {
                Mark::Active => {
                    let start = stack.iter().position(|&n| n == next).unwrap();
                    return Some(stack[start..].iter().map(|&n| n.clone()).collect());
                }
                Mark::New => {
                    if let Some(cycle) = dfs(next, successors, marks, stack) {
                        return Some(cycle);
                    }
                }
                Mark::Done => {}
            }
        }
        stack.pop();
        marks.insert(node, Mark::Done);
        None
    }

    let mut marks = BTreeMap::new();
    let mut stack = Vec::new();
    for node in graph.nodes.iter().chain(&graph.intervened) {
        if marks.get(&node).copied().unwrap_or(Mark::New) == Mark::New {
            if let Some(cycle) = dfs(node, &successors, &mut marks, &mut stack) {
                return Some(cycle);
            }
        }
    }
    None
}

/// Copy of the graph with all incoming edges of `targets` removed: the
/// relevance-graph effect of fixing those decisions with a pre-policy.
pub fn remove_incoming(graph: &RelevanceGraph, targets: &BTreeSet<VariableId>) -> RelevanceGraph {
    RelevanceGraph {
        nodes: graph.nodes.clone(),
        intervened: graph.intervened.clone(),
        edges: graph
            .edges
            .iter()
            .filter(|(a, _)| !targets.contains(a))
            .cloned()
            .collect(),
    }
}

/// GraphViz DOT rendering; intervened sources are drawn as dashed boxes.
pub fn to_dot(graph: &RelevanceGraph) -> String {
    let mut out = String::from("digraph relevance {\n");
    for node in &graph.nodes {
        out.push_str(&format!(
            "  \"{node}\" [label=\"Π_{node}\", shape=ellipse];\n"
        ));
    }
    for node in &graph.intervened {
        out.push_str(&format!(
            "  \"{node}\" [label=\"π_{node}^pre\", shape=box, style=dashed];\n"
        ));
    }
    for (a, b) in &graph.edges {
        out.push_str(&format!("  \"{a}\" -> \"{b}\";\n"));
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Dag, Domain, Variable};
    use crate::model::ConditionalTable;

    /// Two simultaneous decisions, both utilities downstream of both.
    fn simultaneous_game() -> Scg {
        let dag = Dag::new(
            vec![
                Variable::decision("d1", Domain::labels(["a", "b"]), "p1"),
                Variable::decision("d2", Domain::labels(["a", "b"]), "p2"),
                Variable::utility("u1", [0.0, 1.0], "p1"),
                Variable::utility("u2", [0.0, 1.0], "p2"),
            ],
            &[
                ("d1".into(), "u1".into()),
                ("d2".into(), "u1".into()),
                ("d1".into(), "u2".into()),
                ("d2".into(), "u2".into()),
            ],
        )
        .unwrap();
        let rows = vec![
            vec![0.0, 1.0],
            vec![1.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
        ];
        Scg::new(
            dag,
            vec!["p1".into(), "p2".into()],
            vec![
                ConditionalTable {
                    variable: "u1".into(),
                    rows: rows.clone(),
                },
                ConditionalTable {
                    variable: "u2".into(),
                    rows,
                },
            ],
            None,
        )
        .unwrap()
    }

    /// Single decision, single agent.
    fn solo_game() -> Scg {
        let dag = Dag::new(
            vec![
                Variable::decision("d", Domain::labels(["a", "b"]), "p"),
                Variable::utility("u", [0.0, 1.0], "p"),
            ],
            &[("d".into(), "u".into())],
        )
        .unwrap();
        Scg::new(
            dag,
            vec!["p".into()],
            vec![ConditionalTable {
                variable: "u".into(),
                rows: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            }],
            None,
        )
        .unwrap()
    }

    #[test]
    fn simultaneous_decisions_are_mutually_reachable() {
        let scg = simultaneous_game();
        assert!(s_reachable(&scg, &"d1".into(), &"d2".into()).unwrap());
        assert!(s_reachable(&scg, &"d2".into(), &"d1".into()).unwrap());
        let graph = s_relevance_graph(&scg).unwrap();
        assert_eq!(graph.edges.len(), 2);
        assert!(!has_sufficient_recall(&graph));
        let cycle = find_cycle(&graph).unwrap();
        assert_eq!(cycle.len(), 2);
    }

    #[test]
    fn decision_is_never_reachable_from_itself() {
        let scg = simultaneous_game();
        assert!(!s_reachable(&scg, &"d1".into(), &"d1".into()).unwrap());
    }

    #[test]
    fn solo_game_has_empty_acyclic_graph() {
        let scg = solo_game();
        let graph = s_relevance_graph(&scg).unwrap();
        assert!(graph.edges.is_empty());
        assert!(has_sufficient_recall(&graph));
        assert!(find_cycle(&graph).is_none());
    }

    #[test]
    fn no_path_to_opponent_utility_means_not_reachable() {
        // d2 has no influence on p1's utility.
        let dag = Dag::new(
            vec![
                Variable::decision("d1", Domain::labels(["a", "b"]), "p1"),
                Variable::decision("d2", Domain::labels(["a", "b"]), "p2"),
                Variable::utility("u1", [0.0, 1.0], "p1"),
                Variable::utility("u2", [0.0, 1.0], "p2"),
            ],
            &[("d1".into(), "u1".into()), ("d2".into(), "u2".into())],
        )
        .unwrap();
        let rows = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let scg = Scg::new(
            dag,
            vec!["p1".into(), "p2".into()],
            vec![
                ConditionalTable {
                    variable: "u1".into(),
                    rows: rows.clone(),
                },
                ConditionalTable {
                    variable: "u2".into(),
                    rows,
                },
            ],
            None,
        )
        .unwrap();
        assert!(!s_reachable(&scg, &"d1".into(), &"d2".into()).unwrap());
        assert!(!s_reachable(&scg, &"d2".into(), &"d1".into()).unwrap());
    }

    #[test]
    fn s_reachable_rejects_non_decisions() {
        let scg = solo_game();
        let err = s_reachable(&scg, &"d".into(), &"u".into()).unwrap_err();
        assert_eq!(err, ModelError::NotADecision("u".into()));
    }

    #[test]
    fn removing_incoming_edges_breaks_cycles() {
        let scg = simultaneous_game();
        let graph = s_relevance_graph(&scg).unwrap();
        let cut = remove_incoming(&graph, &["d1".into()].into());
        assert!(has_sufficient_recall(&cut));
    }

    #[test]
    fn dot_marks_intervened_sources() {
        let graph = RelevanceGraph {
            nodes: vec!["d".into()],
            intervened: vec!["p".into()],
            edges: [("p".into(), "d".into())].into(),
        };
        let dot = to_dot(&graph);
        assert!(dot.contains("label=\"Π_d\""));
        assert!(dot.contains("label=\"π_p^pre\""));
        assert!(dot.contains("style=dashed"));
    }
}
