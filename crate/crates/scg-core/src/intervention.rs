//! Pre-policy interventions and their causal effect on an outcome.
//!
//! A pre-policy fixes selected decisions to given behavioural policies
//! before the remaining agents choose theirs: each fixed decision becomes a
//! chance variable carrying the fixed policy as its table and drops out of
//! equilibrium search. The causal effect of a pre-policy on an outcome
//! `Y = y` is the change it induces in the outcome probability averaged over
//! rational outcomes:
//!
//! `delta = Σ_{π ∈ R(M_I)} P(Y=y|π)·w_I(π) − Σ_{π ∈ R(M)} P(Y=y|π)·w(π)`
//!
//! where the interventional profiles are completed with the fixed entries so
//! both sides evaluate full profiles of the original game.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::equilibrium::{enumerate, EquilibriumConfig, RationalOutcomes};
use crate::error::{EquilibriumError, ModelError};
use crate::graph::VariableId;
use crate::model::{BehaviouralPolicy, OutcomeSpec, Scg};

/// A fixed policy assignment for a subset of decisions. May be empty.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PrePolicy {
    pub assignments: BTreeMap<VariableId, BehaviouralPolicy>,
}

impl PrePolicy {
    /// The empty intervention: nothing is fixed.
    pub fn empty() -> Self {
        Self::default()
    }

    /// Pre-policy fixing a single decision.
    pub fn fixing(policy: BehaviouralPolicy) -> Self {
        Self::empty().with(policy)
    }

    pub fn with(mut self, policy: BehaviouralPolicy) -> Self {
        self.assignments.insert(policy.decision.clone(), policy);
        self
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }
}

/// The causal effect of a pre-policy on a designated outcome, with both
/// outcome sets it was computed from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CausalEffectReport {
    pub delta: f64,
    pub p_interventional: f64,
    pub p_baseline: f64,
    pub baseline_outcomes: RationalOutcomes,
    pub interventional_outcomes: RationalOutcomes,
}

impl CausalEffectReport {
    /// JSON report with both outcome sets inlined; `explain` adds each
    /// profile's outcome probability.
    pub fn to_json(
        &self,
        scg: &Scg,
        outcome: &OutcomeSpec,
        explain: bool,
    ) -> Result<serde_json::Value, EquilibriumError> {
        let side = |outcomes: &RationalOutcomes| -> Result<serde_json::Value, EquilibriumError> {
            let mut report = outcomes.report(scg)?;
            if explain {
                let probs = outcomes
                    .profiles
                    .iter()
                    .map(|p| scg.outcome_probability(p, outcome))
                    .collect::<Result<Vec<_>, _>>()?;
                report["outcome_probabilities"] = json!(probs);
            }
            Ok(report)
        };
        Ok(json!({
            "outcome": { "variable": outcome.variable, "value": outcome.value },
            "delta": self.delta,
            "p_interventional": self.p_interventional,
            "p_baseline": self.p_baseline,
            "baseline_outcomes": side(&self.baseline_outcomes)?,
            "interventional_outcomes": side(&self.interventional_outcomes)?,
        }))
    }
}

/// Fixes each assigned decision to its pre-policy, converting it to a chance
/// variable. The empty pre-policy returns the game unchanged.
pub fn apply_pre_policy(scg: &Scg, pre: &PrePolicy) -> Result<Scg, ModelError> {
    let mut out = scg.clone();
    for policy in pre.assignments.values() {
        out = out.with_decision_fixed(policy)?;
    }
    Ok(out)
}

fn weighted_outcome_probability(
    scg: &Scg,
    outcomes: &RationalOutcomes,
    outcome: &OutcomeSpec,
) -> Result<f64, EquilibriumError> {
    let mut total = 0.0;
    for (profile, weight) in outcomes.iter_weighted() {
        total += weight * scg.outcome_probability(profile, outcome)?;
    }
    Ok(total)
}

/// Equilibria of the intervened game, each completed with the fixed
/// pre-policy entries so it is a full profile of the original game.
pub fn interventional_rational_outcomes(
    scg: &Scg,
    pre: &PrePolicy,
    config: &EquilibriumConfig,
) -> Result<RationalOutcomes, EquilibriumError> {
    let intervened = apply_pre_policy(scg, pre)?;
    let outcomes = enumerate(&intervened, config)?;
    if outcomes.is_empty() {
        return Err(EquilibriumError::NoRationalOutcome {
            context: format!("in the intervened game ({:?} mode)", config.mode),
        });
    }
    let profiles = outcomes
        .profiles
        .into_iter()
        .map(|mut profile| {
            for policy in pre.assignments.values() {
                profile.insert(policy.clone());
            }
            profile
        })
        .collect();
    Ok(RationalOutcomes {
        profiles,
        ..outcomes
    })
}

/// The interventional outcome probability: the weighted sum of
/// `P(outcome | π)` over completed interventional rational outcomes.
pub fn interventional_outcome_probability(
    scg: &Scg,
    pre: &PrePolicy,
    outcome: &OutcomeSpec,
    config: &EquilibriumConfig,
) -> Result<f64, EquilibriumError> {
    let outcomes = interventional_rational_outcomes(scg, pre, config)?;
    weighted_outcome_probability(scg, &outcomes, outcome)
}

/// Causal effect of `pre` on `outcome`: interventional minus baseline
/// outcome probability, both as finite weighted sums per `config`.
pub fn causal_effect(
    scg: &Scg,
    pre: &PrePolicy,
    outcome: &OutcomeSpec,
    config: &EquilibriumConfig,
) -> Result<CausalEffectReport, EquilibriumError> {
    let baseline = enumerate(scg, config)?;
    if baseline.is_empty() {
        return Err(EquilibriumError::NoRationalOutcome {
            context: format!("in the baseline game ({:?} mode)", config.mode),
        });
    }
    let p_baseline = weighted_outcome_probability(scg, &baseline, outcome)?;
    let interventional = interventional_rational_outcomes(scg, pre, config)?;
    let p_interventional = weighted_outcome_probability(scg, &interventional, outcome)?;
    Ok(CausalEffectReport {
        delta: p_interventional - p_baseline,
        p_interventional,
        p_baseline,
        baseline_outcomes: baseline,
        interventional_outcomes: interventional,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::enumerate_pure_ne;
    use crate::graph::{Dag, Domain, VarKind, Variable};
    use crate::model::ConditionalTable;

    /// Coordination game with an explicit outcome variable: Y copies the
    /// joint action, both agents get 1 on a match and 0 otherwise.
    fn coordination_with_outcome() -> Scg {
        let dag = Dag::new(
            vec![
                Variable::decision("d1", Domain::labels(["a", "b"]), "p1"),
                Variable::decision("d2", Domain::labels(["a", "b"]), "p2"),
                Variable::chance("Y", Domain::labels(["aa", "ab", "ba", "bb"])),
                Variable::utility("u1", [0.0, 1.0], "p1"),
                Variable::utility("u2", [0.0, 1.0], "p2"),
            ],
            &[
                ("d1".into(), "Y".into()),
                ("d2".into(), "Y".into()),
                ("Y".into(), "u1".into()),
                ("Y".into(), "u2".into()),
            ],
        )
        .unwrap();
        let one_hot = |i: usize| {
            let mut row = vec![0.0; 4];
            row[i] = 1.0;
            row
        };
        let match_util = vec![
            vec![0.0, 1.0], // aa
            vec![1.0, 0.0], // ab
            vec![1.0, 0.0], // ba
            vec![0.0, 1.0], // bb
        ];
        Scg::new(
            dag,
            vec!["p1".into(), "p2".into()],
            vec![
                ConditionalTable {
                    variable: "Y".into(),
                    rows: vec![one_hot(0), one_hot(1), one_hot(2), one_hot(3)],
                },
                ConditionalTable {
                    variable: "u1".into(),
                    rows: match_util.clone(),
                },
                ConditionalTable {
                    variable: "u2".into(),
                    rows: match_util,
                },
            ],
            Some(OutcomeSpec::new("Y", "aa")),
        )
        .unwrap()
    }

    fn outcome_aa() -> OutcomeSpec {
        OutcomeSpec::new("Y", "aa")
    }

    #[test]
    fn empty_pre_policy_changes_nothing() {
        let scg = coordination_with_outcome();
        let intervened = apply_pre_policy(&scg, &PrePolicy::empty()).unwrap();
        assert_eq!(intervened, scg);
        assert!(intervened.intervened().is_empty());
    }

    #[test]
    fn fixed_decision_becomes_chance() {
        let scg = coordination_with_outcome();
        let pre = PrePolicy::fixing(scg.pure_policy(&"d1".into(), "a").unwrap());
        let intervened = apply_pre_policy(&scg, &pre).unwrap();
        let idx = intervened.dag().index_of(&"d1".into()).unwrap();
        assert_eq!(intervened.dag().var(idx).kind, VarKind::Chance);
        assert_eq!(intervened.decisions(), vec![VariableId::from("d2")]);
        assert!(intervened.intervened().contains(&"d1".into()));
        assert!(intervened.validate().is_empty());
    }

    #[test]
    fn unknown_decision_is_rejected() {
        let scg = coordination_with_outcome();
        let pre = PrePolicy::fixing(BehaviouralPolicy {
            decision: "ghost".into(),
            rows: vec![vec![1.0, 0.0]],
        });
        assert!(apply_pre_policy(&scg, &pre).is_err());
    }

    #[test]
    fn interventional_outcomes_are_completed_profiles() {
        let scg = coordination_with_outcome();
        let pre = PrePolicy::fixing(scg.pure_policy(&"d1".into(), "a").unwrap());
        let outcomes =
            interventional_rational_outcomes(&scg, &pre, &EquilibriumConfig::pure()).unwrap();
        assert_eq!(outcomes.len(), 1);
        let profile = &outcomes.profiles[0];
        assert_eq!(
            profile.get(&"d1".into()).unwrap(),
            pre.assignments.get(&"d1".into()).unwrap()
        );
        assert_eq!(
            profile.get(&"d2".into()).unwrap().rows,
            vec![vec![1.0, 0.0]]
        );
    }

    #[test]
    fn pre_policy_on_all_decisions_yields_singleton() {
        let scg = coordination_with_outcome();
        let pre = PrePolicy::empty()
            .with(scg.pure_policy(&"d1".into(), "a").unwrap())
            .with(scg.pure_policy(&"d2".into(), "b").unwrap());
        let outcomes =
            interventional_rational_outcomes(&scg, &pre, &EquilibriumConfig::pure()).unwrap();
        assert_eq!(outcomes.len(), 1);
        assert_eq!(outcomes.weights, vec![1.0]);
        let p = scg
            .outcome_probability(&outcomes.profiles[0], &OutcomeSpec::new("Y", "ab"))
            .unwrap();
        assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn causal_effect_shifts_probability() {
        let scg = coordination_with_outcome();
        let config = EquilibriumConfig::pure();

        // Baseline: both matching equilibria, so P(Y=aa) averages to 0.5.
        let baseline = enumerate_pure_ne(&scg).unwrap();
        assert_eq!(baseline.len(), 2);

        let to_a = PrePolicy::fixing(scg.pure_policy(&"d1".into(), "a").unwrap());
        let report = causal_effect(&scg, &to_a, &outcome_aa(), &config).unwrap();
        assert!((report.p_baseline - 0.5).abs() < 1e-12);
        assert!((report.p_interventional - 1.0).abs() < 1e-12);
        assert!((report.delta - 0.5).abs() < 1e-12);
        assert!((report.delta - (report.p_interventional - report.p_baseline)).abs() < 1e-12);

        let to_b = PrePolicy::fixing(scg.pure_policy(&"d1".into(), "b").unwrap());
        let report = causal_effect(&scg, &to_b, &outcome_aa(), &config).unwrap();
        assert!((report.delta + 0.5).abs() < 1e-12);
    }

    #[test]
    fn empty_intervention_has_zero_effect_exactly() {
        let scg = coordination_with_outcome();
        let report = causal_effect(
            &scg,
            &PrePolicy::empty(),
            &outcome_aa(),
            &EquilibriumConfig::pure(),
        )
        .unwrap();
        assert_eq!(report.delta, 0.0);
    }

    #[test]
    fn disjoint_applications_commute() {
        let scg = coordination_with_outcome();
        let a = scg.pure_policy(&"d1".into(), "a").unwrap();
        let b = scg.pure_policy(&"d2".into(), "b").unwrap();
        let ab = apply_pre_policy(
            &apply_pre_policy(&scg, &PrePolicy::fixing(a.clone())).unwrap(),
            &PrePolicy::fixing(b.clone()),
        )
        .unwrap();
        let ba = apply_pre_policy(
            &apply_pre_policy(&scg, &PrePolicy::fixing(b)).unwrap(),
            &PrePolicy::fixing(a),
        )
        .unwrap();
        assert_eq!(ab, ba);
    }

    #[test]
    fn missing_baseline_is_identified() {
        // Matching pennies: no pure equilibrium at all.
        let dag = Dag::new(
            vec![
                Variable::decision("d1", Domain::labels(["h", "t"]), "p1"),
                Variable::decision("d2", Domain::labels(["h", "t"]), "p2"),
                Variable::chance("Y", Domain::labels(["same", "diff"])),
                Variable::utility("u1", [-1.0, 1.0], "p1"),
                Variable::utility("u2", [-1.0, 1.0], "p2"),
            ],
            &[
                ("d1".into(), "Y".into()),
                ("d2".into(), "Y".into()),
                ("Y".into(), "u1".into()),
                ("Y".into(), "u2".into()),
            ],
        )
        .unwrap();
        let scg = Scg::new(
            dag,
            vec!["p1".into(), "p2".into()],
            vec![
                ConditionalTable {
                    variable: "Y".into(),
                    rows: vec![
                        vec![1.0, 0.0],
                        vec![0.0, 1.0],
                        vec![0.0, 1.0],
                        vec![1.0, 0.0],
                    ],
                },
                ConditionalTable {
                    variable: "u1".into(),
                    rows: vec![vec![0.0, 1.0], vec![1.0, 0.0]],
                },
                ConditionalTable {
                    variable: "u2".into(),
                    rows: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
                },
            ],
            None,
        )
        .unwrap();
        let err = causal_effect(
            &scg,
            &PrePolicy::empty(),
            &OutcomeSpec::new("Y", "same"),
            &EquilibriumConfig::pure(),
        )
        .unwrap_err();
        match err {
            EquilibriumError::NoRationalOutcome { context } => {
                assert!(context.contains("baseline"));
            }
            other => panic!("expected NoRationalOutcome, got {other:?}"),
        }
    }
}
