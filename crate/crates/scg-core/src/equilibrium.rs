//! Best responses and Nash equilibrium enumeration.
//!
//! Expected utility is linear in each decision's policy rows (one factor of
//! the chain-rule product per decision), so checking pure deviations per
//! decision suffices against all behavioural deviations, and best responses
//! decompose per parent context. Enumeration is exhaustive: every pure
//! profile, or every profile whose rows are simplex grid points with
//! resolution `grid_k`, filtered by the ε-Nash test.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::EquilibriumError;
use crate::graph::VariableId;
use crate::model::{BehaviouralPolicy, PolicyProfile, Scg, PROB_TOL};

/// Cap on the number of profiles either enumerator will expand.
pub const PROFILE_CAP: u128 = 10_000_000;

/// Enumeration mode for rational outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EqMode {
    Pure,
    BehaviouralGrid,
}

/// How profile weights of the enumerated set are assigned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    Uniform,
    Explicit(Vec<f64>),
}

/// Configuration for equilibrium enumeration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumConfig {
    pub mode: EqMode,
    /// Simplex grid resolution; rows use probabilities that are multiples of
    /// `1/grid_k`. Only meaningful in behavioural mode.
    pub grid_k: usize,
    /// Deviation-gain tolerance of the ε-Nash test in behavioural mode.
    /// Pure mode always enumerates exact equilibria (ε = 0).
    pub epsilon: f64,
    pub weighting: Weighting,
}

impl Default for EquilibriumConfig {
    fn default() -> Self {
        EquilibriumConfig {
            mode: EqMode::Pure,
            grid_k: 10,
            epsilon: 1e-9,
            weighting: Weighting::Uniform,
        }
    }
}

impl EquilibriumConfig {
    pub fn pure() -> Self {
        Self::default()
    }

    pub fn behavioural(grid_k: usize, epsilon: f64) -> Self {
        EquilibriumConfig {
            mode: EqMode::BehaviouralGrid,
            grid_k,
            epsilon,
            weighting: Weighting::Uniform,
        }
    }
}

/// A weighted finite set of equilibrium profiles.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RationalOutcomes {
    pub profiles: Vec<PolicyProfile>,
    pub weights: Vec<f64>,
    pub mode: EqMode,
    pub epsilon: f64,
    pub grid_k: Option<usize>,
}

impl RationalOutcomes {
    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn iter_weighted(&self) -> impl Iterator<Item = (&PolicyProfile, f64)> {
        self.profiles.iter().zip(self.weights.iter().copied())
    }

    /// JSON report: mode, tolerance, and per-profile policies with each
    /// agent's expected utility.
    pub fn report(&self, scg: &Scg) -> Result<serde_json::Value, EquilibriumError> {
        let mut profiles = Vec::new();
        for (profile, weight) in self.iter_weighted() {
            let mut policies = BTreeMap::new();
            for (decision, policy) in &profile.policies {
                let idx = scg
                    .dag()
                    .index_of(decision)
                    .map_err(crate::ModelError::from)?;
                let rows: Vec<serde_json::Value> = policy
                    .rows
                    .iter()
                    .enumerate()
                    .map(|(ctx, row)| {
                        json!({
                            "context": scg.context_map(idx, ctx),
                            "probs": row,
                        })
                    })
                    .collect();
                policies.insert(decision.to_string(), rows);
            }
            let mut utilities = BTreeMap::new();
            for agent in scg.agents() {
                utilities.insert(agent.to_string(), scg.expected_utility(profile, agent)?);
            }
            profiles.push(json!({
                "weight": weight,
                "policies": policies,
                "expected_utilities": utilities,
            }));
        }
        Ok(json!({
            "mode": self.mode,
            "epsilon": self.epsilon,
            "grid_k": self.grid_k,
            "count": self.profiles.len(),
            "profiles": profiles,
        }))
    }
}

/// All distributions over `m` points whose entries are multiples of `1/k`,
/// ordered with the first coordinate descending.
///
/// `k = 1` yields exactly the vertices of the simplex.
pub fn simplex_grid(k: usize, m: usize) -> Vec<Vec<f64>> {
    fn rec(k_left: usize, m_left: usize, k: usize, prefix: &mut Vec<f64>, out: &mut Vec<Vec<f64>>) {
        if m_left == 1 {
            let mut row = prefix.clone();
            row.push(k_left as f64 / k as f64);
            out.push(row);
            return;
        }
        for take in (0..=k_left).rev() {
            prefix.push(take as f64 / k as f64);
            rec(k_left - take, m_left - 1, k, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if m == 0 {
        return out;
    }
    rec(k, m, k, &mut Vec::new(), &mut out);
    out
}

/// Number of simplex grid points: C(k + m - 1, m - 1).
pub fn simplex_grid_len(k: usize, m: usize) -> u128 {
    let mut c: u128 = 1;
    for i in 0..(m as u128 - 1) {
        c = c * (k as u128 + i + 1) / (i + 1);
    }
    c
}

/// All policies for one decision whose rows come from a fixed row set,
/// enumerated mixed-radix with the first context most significant.
fn policies_from_rows(
    scg: &Scg,
    decision: &VariableId,
    row_choices: &[Vec<f64>],
) -> Result<Vec<BehaviouralPolicy>, EquilibriumError> {
    let idx = scg
        .dag()
        .index_of(decision)
        .map_err(crate::ModelError::from)?;
    let contexts = scg.context_count(idx);
    let total = (row_choices.len() as u128).checked_pow(contexts as u32);
    match total {
        Some(t) if t <= PROFILE_CAP => {}
        _ => {
            return Err(EquilibriumError::ProfileSpaceTooLarge {
                count: total.unwrap_or(u128::MAX),
                cap: PROFILE_CAP,
            })
        }
    }
    let mut out = Vec::new();
    let mut picks = vec![0usize; contexts];
    loop {
        out.push(BehaviouralPolicy {
            decision: decision.clone(),
            rows: picks.iter().map(|&i| row_choices[i].clone()).collect(),
        });
        // increment mixed-radix counter, last context fastest
        let mut pos = contexts;
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            picks[pos] += 1;
            if picks[pos] < row_choices.len() {
                break;
            }
            picks[pos] = 0;
        }
    }
}

/// All pure (one-hot per context) policies of a decision.
pub fn pure_policies(
    scg: &Scg,
    decision: &VariableId,
) -> Result<Vec<BehaviouralPolicy>, EquilibriumError> {
    grid_policies(scg, decision, 1)
}

/// All policies of a decision whose rows are simplex grid points with
/// resolution `grid_k`.
pub fn grid_policies(
    scg: &Scg,
    decision: &VariableId,
    grid_k: usize,
) -> Result<Vec<BehaviouralPolicy>, EquilibriumError> {
    let idx = scg
        .dag()
        .index_of(decision)
        .map_err(crate::ModelError::from)?;
    let m = scg.dag().var(idx).domain.len();
    policies_from_rows(scg, decision, &simplex_grid(grid_k, m))
}

/// The set of pure best responses of `decision` against `profile`.
///
/// The owner's expected utility decomposes per parent context, so the result
/// is the product over contexts of the per-context argmax action sets. Ties
/// are kept; the result is ordered deterministically.
pub fn best_response(
    scg: &Scg,
    profile: &PolicyProfile,
    decision: &VariableId,
) -> Result<Vec<BehaviouralPolicy>, EquilibriumError> {
    let idx = scg
        .dag()
        .index_of(decision)
        .map_err(crate::ModelError::from)?;
    let weights = scg.policy_weights(profile, decision)?;
    let m = scg.dag().var(idx).domain.len();
    let argmax_per_ctx: Vec<Vec<usize>> = weights
        .iter()
        .map(|w| {
            let best = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (0..m).filter(|&a| w[a] == best).collect()
        })
        .collect();
    let mut out = Vec::new();
    let mut picks = vec![0usize; argmax_per_ctx.len()];
    loop {
        let rows: Vec<Vec<f64>> = picks
            .iter()
            .enumerate()
            .map(|(ctx, &i)| {
                let mut row = vec![0.0; m];
                row[argmax_per_ctx[ctx][i]] = 1.0;
                row
            })
            .collect();
        out.push(BehaviouralPolicy {
            decision: decision.clone(),
            rows,
        });
        let mut pos = picks.len();
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            picks[pos] += 1;
            if picks[pos] < argmax_per_ctx[pos].len() {
                break;
            }
            picks[pos] = 0;
        }
    }
}

/// True iff no decision has a pure deviation improving its owner's expected
/// utility by more than `epsilon`.
pub fn is_nash(scg: &Scg, profile: &PolicyProfile, epsilon: f64) -> Result<bool, EquilibriumError> {
    for decision in scg.decisions() {
        let weights = scg.policy_weights(profile, &decision)?;
        let policy = profile
            .get(&decision)
            .ok_or_else(|| crate::ModelError::IncompleteProfile(decision.clone()))?;
        let mut current = 0.0;
        let mut best = 0.0;
        for (ctx, w) in weights.iter().enumerate() {
            current += w
                .iter()
                .zip(&policy.rows[ctx])
                .map(|(wi, pi)| wi * pi)
                .sum::<f64>();
            best += w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        }
        if best - current > epsilon {
            return Ok(false);
        }
    }
    Ok(true)
}

fn enumerate_filtered(
    scg: &Scg,
    per_decision: Vec<Vec<BehaviouralPolicy>>,
    epsilon: f64,
) -> Result<Vec<PolicyProfile>, EquilibriumError> {
    let count: u128 = per_decision
        .iter()
        .map(|p| p.len() as u128)
        .try_fold(1u128, |acc, n| acc.checked_mul(n))
        .unwrap_or(u128::MAX);
    if count > PROFILE_CAP {
        return Err(EquilibriumError::ProfileSpaceTooLarge {
            count,
            cap: PROFILE_CAP,
        });
    }
    let mut found = Vec::new();
    let mut picks = vec![0usize; per_decision.len()];
    loop {
        let profile: PolicyProfile = picks
            .iter()
            .enumerate()
            .map(|(d, &i)| per_decision[d][i].clone())
            .collect();
        if is_nash(scg, &profile, epsilon)? {
            found.push(profile);
        }
        let mut pos = picks.len();
        loop {
            if pos == 0 {
                return Ok(found);
            }
            pos -= 1;
            picks[pos] += 1;
            if picks[pos] < per_decision[pos].len() {
                break;
            }
            picks[pos] = 0;
        }
    }
}

fn uniform_weights(n: usize) -> Vec<f64> {
    if n == 0 {
        Vec::new()
    } else {
        vec![1.0 / n as f64; n]
    }
}

/// Exhaustive enumeration of all pure Nash equilibria (ε = 0), uniformly
/// weighted, in deterministic order.
pub fn enumerate_pure_ne(scg: &Scg) -> Result<RationalOutcomes, EquilibriumError> {
    let mut decisions = scg.decisions();
    decisions.sort();
    let per_decision = decisions
        .iter()
        .map(|d| pure_policies(scg, d))
        .collect::<Result<Vec<_>, _>>()?;
    let profiles = enumerate_filtered(scg, per_decision, 0.0)?;
    for p in &profiles {
        debug_assert!(is_nash(scg, p, 0.0)?);
    }
    let weights = uniform_weights(profiles.len());
    Ok(RationalOutcomes {
        profiles,
        weights,
        mode: EqMode::Pure,
        epsilon: 0.0,
        grid_k: None,
    })
}

/// Exhaustive enumeration of ε-Nash equilibria among profiles whose every
/// row is a simplex grid point with resolution `grid_k`.
pub fn enumerate_behavioural_ne(
    scg: &Scg,
    grid_k: usize,
    epsilon: f64,
) -> Result<RationalOutcomes, EquilibriumError> {
    assert!(grid_k >= 1, "grid_k must be at least 1");
    let mut decisions = scg.decisions();
    decisions.sort();
    let per_decision = decisions
        .iter()
        .map(|d| {
            let idx = scg.dag().index_of(d).map_err(crate::ModelError::from)?;
            let m = scg.dag().var(idx).domain.len();
            policies_from_rows(scg, d, &simplex_grid(grid_k, m))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let profiles = enumerate_filtered(scg, per_decision, epsilon)?;
    for p in &profiles {
        debug_assert!(is_nash(scg, p, epsilon)?);
    }
    let weights = uniform_weights(profiles.len());
    Ok(RationalOutcomes {
        profiles,
        weights,
        mode: EqMode::BehaviouralGrid,
        epsilon,
        grid_k: Some(grid_k),
    })
}

/// Enumerates rational outcomes per `config` and applies its weighting.
pub fn enumerate(
    scg: &Scg,
    config: &EquilibriumConfig,
) -> Result<RationalOutcomes, EquilibriumError> {
    let mut outcomes = match config.mode {
        EqMode::Pure => enumerate_pure_ne(scg)?,
        EqMode::BehaviouralGrid => enumerate_behavioural_ne(scg, config.grid_k, config.epsilon)?,
    };
    if let Weighting::Explicit(weights) = &config.weighting {
        if weights.len() != outcomes.profiles.len() {
            return Err(EquilibriumError::InvalidWeights(format!(
                "{} weights for {} profiles",
                weights.len(),
                outcomes.profiles.len()
            )));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > PROB_TOL || weights.iter().any(|&w| w < 0.0) {
            return Err(EquilibriumError::InvalidWeights(format!(
                "weights sum to {sum}"
            )));
        }
        outcomes.weights = weights.clone();
    }
    Ok(outcomes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Dag, Domain, Variable};
    use crate::model::ConditionalTable;

    /// 2x2 matching pennies: row wants to match, column wants to mismatch.
    fn matching_pennies() -> Scg {
        let dag = Dag::new(
            vec![
                Variable::decision("d1", Domain::labels(["h", "t"]), "p1"),
                Variable::decision("d2", Domain::labels(["h", "t"]), "p2"),
                Variable::utility("u1", [-1.0, 1.0], "p1"),
                Variable::utility("u2", [-1.0, 1.0], "p2"),
            ],
            &[
                ("d1".into(), "u1".into()),
                ("d2".into(), "u1".into()),
                ("d1".into(), "u2".into()),
                ("d2".into(), "u2".into()),
            ],
        )
        .unwrap();
        let match_row = |same: bool| {
            if same {
                vec![0.0, 1.0]
            } else {
                vec![1.0, 0.0]
            }
        };
        Scg::new(
            dag,
            vec!["p1".into(), "p2".into()],
            vec![
                ConditionalTable {
                    variable: "u1".into(),
                    rows: vec![
                        match_row(true),
                        match_row(false),
                        match_row(false),
                        match_row(true),
                    ],
                },
                ConditionalTable {
                    variable: "u2".into(),
                    rows: vec![
                        match_row(false),
                        match_row(true),
                        match_row(true),
                        match_row(false),
                    ],
                },
            ],
            None,
        )
        .unwrap()
    }

    /// 2x2 coordination: both get 1 when matching, 0 otherwise.
    fn coordination() -> Scg {
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

    fn uniform_profile(scg: &Scg) -> PolicyProfile {
        scg.decisions()
            .iter()
            .map(|d| scg.uniform_policy(d).unwrap())
            .collect()
    }

    #[test]
    fn simplex_grid_k1_is_vertices() {
        assert_eq!(simplex_grid(1, 2), vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
    }

    #[test]
    fn simplex_grid_k2_m2_order() {
        assert_eq!(
            simplex_grid(2, 2),
            vec![vec![1.0, 0.0], vec![0.5, 0.5], vec![0.0, 1.0]]
        );
    }

    #[test]
    fn simplex_grid_count_matches_closed_form() {
        for (k, m) in [(1usize, 2usize), (2, 2), (3, 3), (10, 2), (4, 4)] {
            assert_eq!(simplex_grid(k, m).len() as u128, simplex_grid_len(k, m));
        }
        assert_eq!(simplex_grid_len(3, 3), 10);
    }

    #[test]
    fn matching_pennies_has_no_pure_ne() {
        let scg = matching_pennies();
        let outcomes = enumerate_pure_ne(&scg).unwrap();
        assert!(outcomes.is_empty());
    }

    #[test]
    fn matching_pennies_uniform_is_behavioural_ne() {
        let scg = matching_pennies();
        assert!(is_nash(&scg, &uniform_profile(&scg), 1e-9).unwrap());
        let outcomes = enumerate_behavioural_ne(&scg, 2, 1e-9).unwrap();
        assert!(outcomes.profiles.contains(&uniform_profile(&scg)));
    }

    #[test]
    fn coordination_has_two_pure_ne() {
        let scg = coordination();
        let outcomes = enumerate_pure_ne(&scg).unwrap();
        assert_eq!(outcomes.len(), 2);
        assert!((outcomes.weights.iter().sum::<f64>() - 1.0).abs() < PROB_TOL);
        for p in &outcomes.profiles {
            let a1 = p.get(&"d1".into()).unwrap().rows[0].clone();
            let a2 = p.get(&"d2".into()).unwrap().rows[0].clone();
            assert_eq!(a1, a2);
        }
    }

    #[test]
    fn pure_vertices_appear_in_behavioural_enumeration() {
        let scg = coordination();
        let pure = enumerate_pure_ne(&scg).unwrap();
        for k in [1usize, 2, 3] {
            let grid = enumerate_behavioural_ne(&scg, k, 1e-9).unwrap();
            for p in &pure.profiles {
                assert!(grid.profiles.contains(p), "missing pure NE at grid_k={k}");
            }
        }
    }

    #[test]
    fn epsilon_monotonicity() {
        let scg = matching_pennies();
        let tight = enumerate_behavioural_ne(&scg, 2, 1e-9).unwrap();
        let loose = enumerate_behavioural_ne(&scg, 2, 0.6).unwrap();
        for p in &tight.profiles {
            assert!(loose.profiles.contains(p));
        }
        assert!(loose.len() >= tight.len());
    }

    #[test]
    fn best_response_full_tie_when_objective_constant() {
        // p1's utility ignores d1 entirely.
        let dag = Dag::new(
            vec![
                Variable::decision("d1", Domain::labels(["a", "b"]), "p1"),
                Variable::decision("d2", Domain::labels(["a", "b"]), "p2"),
                Variable::utility("u1", [0.5], "p1"),
                Variable::utility("u2", [0.0, 1.0], "p2"),
            ],
            &[("d2".into(), "u2".into())],
        )
        .unwrap();
        let scg = Scg::new(
            dag,
            vec!["p1".into(), "p2".into()],
            vec![
                ConditionalTable {
                    variable: "u1".into(),
                    rows: vec![vec![1.0]],
                },
                ConditionalTable {
                    variable: "u2".into(),
                    rows: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
                },
            ],
            None,
        )
        .unwrap();
        let profile = uniform_profile(&scg);
        let brs = best_response(&scg, &profile, &"d1".into()).unwrap();
        assert_eq!(brs.len(), 2);
    }

    #[test]
    fn explicit_weights_validated() {
        let scg = coordination();
        let config = EquilibriumConfig {
            weighting: Weighting::Explicit(vec![0.9]),
            ..EquilibriumConfig::pure()
        };
        assert!(matches!(
            enumerate(&scg, &config),
            Err(EquilibriumError::InvalidWeights(_))
        ));
        let config = EquilibriumConfig {
            weighting: Weighting::Explicit(vec![0.25, 0.75]),
            ..EquilibriumConfig::pure()
        };
        let outcomes = enumerate(&scg, &config).unwrap();
        assert_eq!(outcomes.weights, vec![0.25, 0.75]);
    }
}
