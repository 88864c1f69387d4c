//! Property tests over randomly generated graphs, games, and policies.

use std::collections::BTreeSet;

use proptest::prelude::*;

use scg_core::equilibrium::{best_response, enumerate_pure_ne, simplex_grid};
use scg_core::gamefile::{DomainValue, GameFile};
use scg_core::graph::{Dag, Domain, Variable, VariableId};
use scg_core::model::{BehaviouralPolicy, PolicyProfile};
use scg_core::scenarios::{household, rps};
use scg_core::{OutcomeSpec, Scg};

/// Random DAG over n nodes: edge i -> j possible only for i < j.
fn arb_dag() -> impl Strategy<Value = Dag> {
    (3usize..=6)
        .prop_flat_map(|n| {
            let edges = proptest::collection::vec(proptest::bool::ANY, n * (n - 1) / 2);
            (Just(n), edges)
        })
        .prop_map(|(n, picks)| {
            let vars: Vec<Variable> = (0..n)
                .map(|i| Variable::chance(format!("v{i}"), Domain::labels(["0", "1"])))
                .collect();
            let mut edges = Vec::new();
            let mut k = 0;
            for i in 0..n {
                for j in (i + 1)..n {
                    if picks[k] {
                        edges.push((
                            VariableId::new(format!("v{i}")),
                            VariableId::new(format!("v{j}")),
                        ));
                    }
                    k += 1;
                }
            }
            Dag::new(vars, &edges).expect("forward edges cannot cycle")
        })
}

fn arb_node_sets() -> impl Strategy<Value = (Dag, BTreeSet<usize>, BTreeSet<usize>, BTreeSet<usize>)>
{
    arb_dag().prop_flat_map(|dag| {
        let n = dag.len();
        let picks = proptest::collection::vec(0u8..4, n);
        (Just(dag), picks).prop_map(|(dag, roles)| {
            let mut xs = BTreeSet::new();
            let mut ys = BTreeSet::new();
            let mut zs = BTreeSet::new();
            for (i, role) in roles.iter().enumerate() {
                match role {
                    1 => {
                        xs.insert(i);
                    }
                    2 => {
                        ys.insert(i);
                    }
                    3 => {
                        zs.insert(i);
                    }
                    _ => {}
                }
            }
            (dag, xs, ys, zs)
        })
    })
}

fn ids(dag: &Dag, set: &BTreeSet<usize>) -> BTreeSet<VariableId> {
    set.iter().map(|&i| dag.var(i).id.clone()).collect()
}

/// Random behavioural policy for one decision of a game.
fn arb_policy(scg: &Scg, decision: &VariableId) -> impl Strategy<Value = BehaviouralPolicy> {
    let idx = scg.dag().index_of(decision).unwrap();
    let contexts = scg.context_count(idx);
    let m = scg.dag().var(idx).domain.len();
    let decision = decision.clone();
    proptest::collection::vec(proptest::collection::vec(0.01f64..1.0, m), contexts).prop_map(
        move |raw| BehaviouralPolicy {
            decision: decision.clone(),
            rows: raw
                .into_iter()
                .map(|row| {
                    let sum: f64 = row.iter().sum();
                    row.into_iter().map(|p| p / sum).collect()
                })
                .collect(),
        },
    )
}

/// Multiplies every utility value owned by `agent` by `factor`.
fn scale_agent_utilities(scg: &Scg, agent: &str, factor: f64) -> Scg {
    let mut file = GameFile::from_scg(scg);
    for var in &mut file.variables {
        if var.owner.as_deref() == Some(agent) && matches!(var.kind, scg_core::VarKind::Utility) {
            for value in &mut var.domain {
                if let DomainValue::Real(r) = value {
                    *r *= factor;
                }
            }
        }
    }
    file.to_scg().expect("scaled game stays valid")
}

proptest! {
    #[test]
    fn d_separation_is_symmetric((dag, xs, ys, zs) in arb_node_sets()) {
        let xs = ids(&dag, &xs);
        let ys = ids(&dag, &ys);
        let zs = ids(&dag, &zs);
        let forward = dag.d_separated(&xs, &ys, &zs).unwrap();
        let backward = dag.d_separated(&ys, &xs, &zs).unwrap();
        prop_assert_eq!(forward, backward);
    }

    #[test]
    fn topological_order_is_a_forward_permutation(dag in arb_dag()) {
        let order = dag.topological_order().unwrap();
        prop_assert_eq!(order.len(), dag.len());
        let all: BTreeSet<&VariableId> = order.iter().collect();
        prop_assert_eq!(all.len(), dag.len());
        let position = |id: &VariableId| order.iter().position(|v| v == id).unwrap();
        for (from, to) in dag.edges() {
            prop_assert!(position(&from) < position(&to));
        }
    }

    #[test]
    fn descendants_are_transitively_closed(dag in arb_dag()) {
        for v in dag.variables() {
            let desc = dag.descendants(&v.id).unwrap();
            prop_assert!(!desc.contains(&v.id));
            let vi = dag.index_of(&v.id).unwrap();
            for &c in dag.child_indices(vi) {
                let child = dag.var(c).id.clone();
                prop_assert!(desc.contains(&child));
                let child_desc = dag.descendants(&child).unwrap();
                prop_assert!(child_desc.is_subset(&desc));
            }
        }
    }

    #[test]
    fn simplex_grid_rows_are_distributions(k in 1usize..8, m in 1usize..5) {
        for row in simplex_grid(k, m) {
            let sum: f64 = row.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-9);
            prop_assert!(row.iter().all(|&p| (0.0..=1.0).contains(&p)));
        }
    }

    #[test]
    fn household_joint_normalizes_under_any_profile(
        robot_raw in proptest::collection::vec(0.01f64..1.0, 2),
        human_raw in proptest::collection::vec(0.01f64..1.0, 3),
    ) {
        let scg = household();
        let normalize = |raw: Vec<f64>| {
            let sum: f64 = raw.iter().sum();
            raw.into_iter().map(|p| p / sum).collect::<Vec<f64>>()
        };
        let profile = PolicyProfile::new()
            .with(BehaviouralPolicy { decision: "robot_task".into(), rows: vec![normalize(robot_raw)] })
            .with(BehaviouralPolicy { decision: "human_task".into(), rows: vec![normalize(human_raw)] });
        let joint = scg.joint_distribution(&profile).unwrap();
        prop_assert!((joint.total() - 1.0).abs() < 1e-9);
    }
}

proptest! {
    /// Cutting the incoming edges of a feedback vertex set always leaves the
    /// relevance graph acyclic; the feedback set is grown greedily from
    /// witness cycles.
    #[test]
    fn feedback_vertex_cut_restores_acyclicity(
        n in 2usize..7,
        picks in proptest::collection::vec(proptest::bool::ANY, 36),
    ) {
        use scg_core::relevance::{find_cycle, has_sufficient_recall, remove_incoming, RelevanceGraph};
        let nodes: Vec<VariableId> = (0..n).map(|i| VariableId::new(format!("d{i}"))).collect();
        let mut edges = BTreeSet::new();
        let mut k = 0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    if picks[k % picks.len()] {
                        edges.insert((nodes[i].clone(), nodes[j].clone()));
                    }
                    k += 1;
                }
            }
        }
        let graph = RelevanceGraph { nodes, intervened: vec![], edges };
        let mut cut = graph.clone();
        let mut feedback = BTreeSet::new();
        while let Some(cycle) = find_cycle(&cut) {
            feedback.insert(cycle[0].clone());
            cut = remove_incoming(&graph, &feedback);
        }
        prop_assert!(has_sufficient_recall(&remove_incoming(&graph, &feedback)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Expected utility and outcome probability are linear in one decision's
    /// rows when everything else is held fixed.
    #[test]
    fn utility_and_outcome_are_multilinear(
        t in 0.0f64..=1.0,
        pi in arb_policy(&household(), &"human_task".into()),
        pi_prime in arb_policy(&household(), &"human_task".into()),
    ) {
        let scg = household();
        let robot = scg.pure_policy(&"robot_task".into(), "HelpTrash").unwrap();
        let mix_rows: Vec<Vec<f64>> = pi
            .rows
            .iter()
            .zip(&pi_prime.rows)
            .map(|(a, b)| {
                a.iter()
                    .zip(b)
                    .map(|(x, y)| (1.0 - t) * x + t * y)
                    .collect()
            })
            .collect();
        let mixed = BehaviouralPolicy { decision: "human_task".into(), rows: mix_rows };

        let profile_of = |p: BehaviouralPolicy| {
            PolicyProfile::new().with(robot.clone()).with(p)
        };
        let eu_a = scg.expected_utility(&profile_of(pi.clone()), &"human".into()).unwrap();
        let eu_b = scg.expected_utility(&profile_of(pi_prime.clone()), &"human".into()).unwrap();
        let eu_mix = scg.expected_utility(&profile_of(mixed.clone()), &"human".into()).unwrap();
        prop_assert!((eu_mix - ((1.0 - t) * eu_a + t * eu_b)).abs() < 1e-9);

        let y = OutcomeSpec::new("Y", "collaboration");
        let p_a = scg.outcome_probability(&profile_of(pi), &y).unwrap();
        let p_b = scg.outcome_probability(&profile_of(pi_prime), &y).unwrap();
        let p_mix = scg.outcome_probability(&profile_of(mixed), &y).unwrap();
        prop_assert!((p_mix - ((1.0 - t) * p_a + t * p_b)).abs() < 1e-9);
        prop_assert!((0.0..=1.0).contains(&p_mix));
    }

    /// Positive scaling of one agent's utilities changes no best response
    /// and no equilibrium.
    #[test]
    fn positive_scaling_preserves_best_responses_and_equilibria(
        factor in 0.1f64..10.0,
        robot_raw in proptest::collection::vec(0.01f64..1.0, 2),
    ) {
        for base in [household(), rps(false)] {
            let agent = base.agents()[0].to_string();
            let scaled = scale_agent_utilities(&base, &agent, factor);

            let sum: f64 = robot_raw.iter().sum();
            let first = base.decisions()[0].clone();
            let idx = base.dag().index_of(&first).unwrap();
            let m = base.dag().var(idx).domain.len();
            let row: Vec<f64> = (0..m)
                .map(|i| robot_raw.get(i % robot_raw.len()).unwrap() / sum)
                .collect();
            let row_sum: f64 = row.iter().sum();
            let row: Vec<f64> = row.into_iter().map(|p| p / row_sum).collect();
            let mut profile = PolicyProfile::new();
            for d in base.decisions() {
                profile.insert(base.uniform_policy(&d).unwrap());
            }
            profile.insert(BehaviouralPolicy { decision: first.clone(), rows: vec![row; base.context_count(idx)] });

            for d in base.decisions() {
                let brs_base = best_response(&base, &profile, &d).unwrap();
                let brs_scaled = best_response(&scaled, &profile, &d).unwrap();
                prop_assert_eq!(brs_base, brs_scaled);
            }
            let ne_base = enumerate_pure_ne(&base).unwrap();
            let ne_scaled = enumerate_pure_ne(&scaled).unwrap();
            prop_assert_eq!(ne_base.profiles, ne_scaled.profiles);
        }
    }
}
