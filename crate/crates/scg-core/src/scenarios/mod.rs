//! Built-in scenario games.
//!
//! - [`household`]: a robot and a human splitting chores, two equilibria of
//!   different quality;
//! - [`rps`]: rock-paper-scissors, cooperative (three pure equilibria) or
//!   competitive (none);
//! - [`cyclic_game`]: one agent with two decisions and an opponent, whose
//!   relevance graph is cyclic until a pre-policy fixes the two decisions;
//! - [`gridworld`](gridworld::gridworld_scg): a navigation game where barrier
//!   placement shifts the equilibrium route.

pub mod gridworld;

use crate::graph::{Dag, Domain, Variable};
use crate::intervention::PrePolicy;
use crate::model::{ConditionalTable, OutcomeSpec, Scg};

fn one_hot(size: usize, at: usize) -> Vec<f64> {
    let mut row = vec![0.0; size];
    row[at] = 1.0;
    row
}

/// The household chore game.
///
/// The robot cooks or helps with the trash; the human collaborates on the
/// trash, calls external help, or attempts it alone. Outcomes feed both
/// utilities. Two pure equilibria exist: the independence equilibrium
/// (Cook, ExternalHelp) paying (1, 1) and the collaborative equilibrium
/// (HelpTrash, Collaborate) paying (2, 2). The designated outcome is
/// `Y = collaboration`.
pub fn household() -> Scg {
    let outcomes = [
        "collaboration",
        "externalhelp",
        "externalhelp_robotattempt",
        "solofail",
        "cook_external",
        "cook_solo",
    ];
    let dag = Dag::new(
        vec![
            Variable::decision("robot_task", Domain::labels(["Cook", "HelpTrash"]), "robot"),
            Variable::decision(
                "human_task",
                Domain::labels(["Collaborate", "ExternalHelp", "SoloAttempt"]),
                "human",
            ),
            Variable::chance("Y", Domain::labels(outcomes)),
            Variable::utility("U_robot", [0.0, 1.0, 2.0], "robot"),
            Variable::utility("U_human", [0.0, 1.0, 2.0], "human"),
        ],
        &[
            ("robot_task".into(), "Y".into()),
            ("human_task".into(), "Y".into()),
            ("Y".into(), "U_robot".into()),
            ("Y".into(), "U_human".into()),
        ],
    )
    .expect("household graph is valid");

    let outcome_index = |name: &str| outcomes.iter().position(|o| *o == name).unwrap();
    // Contexts iterate (robot_task, human_task), human varying fastest.
    let y_rows: Vec<Vec<f64>> = [
        "cook_solo",                 // (Cook, Collaborate): human ends up alone
        "externalhelp",              // (Cook, ExternalHelp)
        "cook_solo",                 // (Cook, SoloAttempt)
        "collaboration",             // (HelpTrash, Collaborate)
        "externalhelp_robotattempt", // (HelpTrash, ExternalHelp)
        "solofail",                  // (HelpTrash, SoloAttempt)
    ]
    .iter()
    .map(|name| one_hot(outcomes.len(), outcome_index(name)))
    .collect();

    // Utility value per outcome, indices into [0.0, 1.0, 2.0].
    let robot_util = [2usize, 1, 0, 0, 1, 1];
    let human_util = [2usize, 1, 1, 0, 1, 0];
    let util_rows = |values: &[usize]| values.iter().map(|&v| one_hot(3, v)).collect();

    Scg::new(
        dag,
        vec!["robot".into(), "human".into()],
        vec![
            ConditionalTable {
                variable: "Y".into(),
                rows: y_rows,
            },
            ConditionalTable {
                variable: "U_robot".into(),
                rows: util_rows(&robot_util),
            },
            ConditionalTable {
                variable: "U_human".into(),
                rows: util_rows(&human_util),
            },
        ],
        Some(OutcomeSpec::new("Y", "collaboration")),
    )
    .expect("household game is valid")
}

/// Rock-paper-scissors with a judge-chosen rule set.
///
/// Cooperative: matching actions pay (3, 3), anything else (0, 0); three
/// pure equilibria. Competitive: the classic zero-sum rules with wins worth
/// 1 and no points for a tie; no pure equilibrium exists.
pub fn rps(cooperative: bool) -> Scg {
    let actions = ["rock", "paper", "scissors"];
    let dag = Dag::new(
        vec![
            Variable::decision("move1", Domain::labels(actions), "player1"),
            Variable::decision("move2", Domain::labels(actions), "player2"),
            Variable::utility(
                "u1",
                if cooperative {
                    vec![0.0, 3.0]
                } else {
                    vec![-1.0, 0.0, 1.0]
                },
                "player1",
            ),
            Variable::utility(
                "u2",
                if cooperative {
                    vec![0.0, 3.0]
                } else {
                    vec![-1.0, 0.0, 1.0]
                },
                "player2",
            ),
        ],
        &[
            ("move1".into(), "u1".into()),
            ("move2".into(), "u1".into()),
            ("move1".into(), "u2".into()),
            ("move2".into(), "u2".into()),
        ],
    )
    .expect("rps graph is valid");

    // +1 when `a` beats `b`, -1 when it loses, 0 on a tie.
    let duel = |a: usize, b: usize| -> i32 {
        if a == b {
            0
        } else if (a + 1) % 3 == b {
            -1 // next action beats this one
        } else {
            1
        }
    };
    let mut u1_rows = Vec::new();
    let mut u2_rows = Vec::new();
    for a in 0..3 {
        for b in 0..3 {
            if cooperative {
                let idx = usize::from(a == b);
                u1_rows.push(one_hot(2, idx));
                u2_rows.push(one_hot(2, idx));
            } else {
                u1_rows.push(one_hot(3, (duel(a, b) + 1) as usize));
                u2_rows.push(one_hot(3, (1 - duel(a, b)) as usize));
            }
        }
    }
    Scg::new(
        dag,
        vec!["player1".into(), "player2".into()],
        vec![
            ConditionalTable {
                variable: "u1".into(),
                rows: u1_rows,
            },
            ConditionalTable {
                variable: "u2".into(),
                rows: u2_rows,
            },
        ],
        None,
    )
    .expect("rps game is valid")
}

/// A game whose s-relevance graph is cyclic.
///
/// Agent 1 controls decisions A and B, agent 2 controls D; all three feed
/// both utilities. Payoffs are matching-pennies style on the parity of
/// (A, B): agent 2 is rewarded for matching it with D, agent 1 for the
/// mismatch. Every policy is strategically relevant to every other, so the
/// relevance graph is fully connected and cyclic until a pre-policy fixes
/// A and B.
pub fn cyclic_game() -> Scg {
    let coin = ["heads", "tails"];
    let dag = Dag::new(
        vec![
            Variable::decision("A", Domain::labels(coin), "agent1"),
            Variable::decision("B", Domain::labels(coin), "agent1"),
            Variable::decision("D", Domain::labels(coin), "agent2"),
            Variable::utility("U1", [-1.0, 1.0], "agent1"),
            Variable::utility("U2", [-1.0, 1.0], "agent2"),
        ],
        &[
            ("A".into(), "U1".into()),
            ("B".into(), "U1".into()),
            ("D".into(), "U1".into()),
            ("A".into(), "U2".into()),
            ("B".into(), "U2".into()),
            ("D".into(), "U2".into()),
        ],
    )
    .expect("cyclic graph is valid");

    let mut u1_rows = Vec::new();
    let mut u2_rows = Vec::new();
    for a in 0..2usize {
        for b in 0..2usize {
            for d in 0..2usize {
                let matched = d == (a ^ b);
                u2_rows.push(one_hot(2, usize::from(matched)));
                u1_rows.push(one_hot(2, usize::from(!matched)));
            }
        }
    }
    Scg::new_multi_decision(
        dag,
        vec!["agent1".into(), "agent2".into()],
        vec![
            ConditionalTable {
                variable: "U1".into(),
                rows: u1_rows,
            },
            ConditionalTable {
                variable: "U2".into(),
                rows: u2_rows,
            },
        ],
        None,
    )
    .expect("cyclic game is valid")
}

/// The pre-policy used to break the cyclic game's relevance cycle: fixes
/// both of agent 1's decisions to fair coin flips.
pub fn cyclic_pre_policy(scg: &Scg) -> PrePolicy {
    PrePolicy::empty()
        .with(scg.uniform_policy(&"A".into()).expect("A exists"))
        .with(scg.uniform_policy(&"B".into()).expect("B exists"))
}
