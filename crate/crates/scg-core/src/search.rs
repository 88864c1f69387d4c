//! Searching out the pre-policy.
//!
//! The meta pre-policy is a categorical softmax over an explicit finite
//! candidate set (simplex-grid policies of one decision, plus the empty
//! intervention). Each loop iteration samples a candidate, evaluates the
//! interventional outcome probability it induces, and applies a
//! score-function gradient step:
//!
//! `logits += lr · (value − baseline) · (onehot(i) − softmax(logits))`
//!
//! Candidate evaluations are memoized by default since the game is
//! stationary, so the value of a candidate never changes. An exhaustive
//! evaluator over the same candidate set serves as the search's oracle.

use rand::{Rng, RngExt};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::equilibrium::{simplex_grid_len, EquilibriumConfig};
use crate::error::{EquilibriumError, SearchError};
use crate::graph::VariableId;
use crate::intervention::{interventional_outcome_probability, PrePolicy};
use crate::model::{OutcomeSpec, Scg};

/// Cap on the number of candidate pre-policies.
pub const CANDIDATE_CAP: u128 = 100_000;

/// Baseline subtracted from the sampled value in the gradient step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineMode {
    None,
    RunningMean,
}

/// Hyperparameters of the pre-policy search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub iterations: usize,
    pub learning_rate: f64,
    pub baseline: BaselineMode,
    pub seed: u64,
    pub equilibrium: EquilibriumConfig,
    /// Stop once one candidate's softmax mass reaches this value.
    pub convergence_mass: f64,
    /// Simplex grid resolution of the candidate set; 1 = pure policies.
    pub candidate_grid_k: usize,
    /// Also include the empty intervention as a candidate. Off by default:
    /// the searched set is the grid itself, while [`exhaustive_best`] always
    /// evaluates the empty intervention alongside it.
    pub include_empty: bool,
    /// Cache candidate values; the game is stationary so values are constant.
    pub memoize: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            iterations: 300,
            learning_rate: 0.1,
            baseline: BaselineMode::RunningMean,
            seed: 0,
            equilibrium: EquilibriumConfig::pure(),
            convergence_mass: 0.99,
            candidate_grid_k: 1,
            include_empty: false,
            memoize: true,
        }
    }
}

/// Softmax distribution over a finite candidate set of pre-policies.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetaPrePolicy {
    pub decision: VariableId,
    pub candidates: Vec<PrePolicy>,
    pub logits: Vec<f64>,
}

impl MetaPrePolicy {
    /// Uniform meta pre-policy (all logits zero).
    pub fn uniform(decision: VariableId, candidates: Vec<PrePolicy>) -> Self {
        let n = candidates.len();
        assert!(n > 0, "candidate set must be nonempty");
        MetaPrePolicy {
            decision,
            candidates,
            logits: vec![0.0; n],
        }
    }

    /// Stable softmax of the logits.
    pub fn probabilities(&self) -> Vec<f64> {
        let max = self
            .logits
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = self.logits.iter().map(|l| (l - max).exp()).collect();
        let sum: f64 = exps.iter().sum();
        exps.into_iter().map(|e| e / sum).collect()
    }

    /// Samples a candidate index from the softmax distribution.
    pub fn sample(&self, rng: &mut impl Rng) -> usize {
        let probs = self.probabilities();
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        probs.len() - 1
    }

    /// One score-function gradient update for the sampled candidate.
    pub fn step(&self, index: usize, value: f64, baseline_value: f64, lr: f64) -> MetaPrePolicy {
        let probs = self.probabilities();
        let advantage = value - baseline_value;
        let logits = self
            .logits
            .iter()
            .enumerate()
            .map(|(i, &l)| {
                let indicator = if i == index { 1.0 } else { 0.0 };
                l + lr * advantage * (indicator - probs[i])
            })
            .collect();
        MetaPrePolicy {
            decision: self.decision.clone(),
            candidates: self.candidates.clone(),
            logits,
        }
    }

    /// Index of the highest-probability candidate, ties to the lowest index.
    pub fn top_candidate(&self) -> usize {
        let probs = self.probabilities();
        let mut best = 0;
        for (i, &p) in probs.iter().enumerate() {
            if p > probs[best] {
                best = i;
            }
        }
        best
    }
}

/// One loop iteration of the search, recorded for reporting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryStep {
    pub iteration: usize,
    pub candidate: usize,
    pub value: f64,
    pub distribution: Vec<f64>,
}

/// Result of a pre-policy search run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchReport {
    pub best: PrePolicy,
    pub best_value: f64,
    pub trajectory: Vec<TrajectoryStep>,
    pub converged: bool,
    pub final_distribution: Vec<f64>,
    pub candidate_count: usize,
}

impl SearchReport {
    /// CSV rendering of the trajectory: iteration, sampled candidate, value,
    /// and the current top candidate's probability.
    pub fn trajectory_csv(&self) -> String {
        let mut out = String::from("iteration,candidate,value,top_probability\n");
        for step in &self.trajectory {
            let top = step
                .distribution
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max);
            out.push_str(&format!(
                "{},{},{},{}\n",
                step.iteration, step.candidate, step.value, top
            ));
        }
        out
    }
}

/// All pre-policies of one decision whose rows are simplex grid points with
/// resolution `grid_k`; `grid_k = 1` yields exactly the pure policies.
pub fn default_candidates(
    scg: &Scg,
    decision: &VariableId,
    grid_k: usize,
) -> Result<Vec<PrePolicy>, SearchError> {
    let idx = scg
        .dag()
        .index_of(decision)
        .map_err(crate::ModelError::from)?;
    let m = scg.dag().var(idx).domain.len();
    let contexts = scg.context_count(idx) as u32;
    let count = simplex_grid_len(grid_k, m).checked_pow(contexts);
    match count {
        Some(c) if c <= CANDIDATE_CAP => {}
        _ => {
            return Err(SearchError::CandidateSpaceTooLarge {
                count: count.unwrap_or(u128::MAX),
                cap: CANDIDATE_CAP,
            })
        }
    }
    let policies = crate::equilibrium::grid_policies(scg, decision, grid_k)
        .map_err(SearchError::Equilibrium)?;
    Ok(policies.into_iter().map(PrePolicy::fixing).collect())
}

fn candidate_set(
    scg: &Scg,
    decision: &VariableId,
    grid_k: usize,
    include_empty: bool,
) -> Result<Vec<PrePolicy>, SearchError> {
    let mut candidates = Vec::new();
    if include_empty {
        candidates.push(PrePolicy::empty());
    }
    candidates.extend(default_candidates(scg, decision, grid_k)?);
    Ok(candidates)
}

/// Value of one candidate: the interventional outcome probability it induces.
pub fn evaluate(
    scg: &Scg,
    pre: &PrePolicy,
    outcome: &OutcomeSpec,
    eq: &EquilibriumConfig,
) -> Result<f64, EquilibriumError> {
    interventional_outcome_probability(scg, pre, outcome, eq)
}

/// Evaluates every candidate and returns the maximizer, earliest candidate
/// winning ties.
///
/// The empty intervention is always part of the evaluated set (listed
/// first), so the returned value can never fall below the baseline outcome
/// probability.
pub fn exhaustive_best(
    scg: &Scg,
    decision: &VariableId,
    outcome: &OutcomeSpec,
    eq: &EquilibriumConfig,
    grid_k: usize,
) -> Result<(PrePolicy, f64), SearchError> {
    let candidates = candidate_set(scg, decision, grid_k, true)?;
    let mut best: Option<(usize, f64)> = None;
    for (i, pre) in candidates.iter().enumerate() {
        let value = evaluate(scg, pre, outcome, eq)
            .map_err(|source| SearchError::CandidateFailed { index: i, source })?;
        if best.is_none_or(|(_, v)| value > v) {
            best = Some((i, value));
        }
    }
    let (i, value) = best.expect("candidate set is nonempty");
    Ok((candidates[i].clone(), value))
}

/// Runs the sample-evaluate-update loop until the iteration budget is spent
/// or one candidate's mass reaches `convergence_mass`.
///
/// The trajectory is seed-deterministic; `best` is the top candidate of the
/// final meta pre-policy and `best_value` is its re-evaluated value.
pub fn search(
    scg: &Scg,
    decision: &VariableId,
    outcome: &OutcomeSpec,
    config: &SearchConfig,
) -> Result<SearchReport, SearchError> {
    let candidates = candidate_set(scg, decision, config.candidate_grid_k, config.include_empty)?;
    let mut meta = MetaPrePolicy::uniform(decision.clone(), candidates);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut memo: Vec<Option<f64>> = vec![None; meta.candidates.len()];
    let mut trajectory: Vec<TrajectoryStep> = Vec::new();
    let mut value_sum = 0.0;

    for iteration in 0..config.iterations {
        let index = meta.sample(&mut rng);
        let value = match (config.memoize, memo[index]) {
            (true, Some(v)) => v,
            _ => {
                let v = evaluate(scg, &meta.candidates[index], outcome, &config.equilibrium)
                    .map_err(|source| SearchError::CandidateFailed { index, source })?;
                memo[index] = Some(v);
                v
            }
        };
        let seen = trajectory.len();
        let baseline = match config.baseline {
            BaselineMode::None => 0.0,
            BaselineMode::RunningMean if seen > 0 => value_sum / seen as f64,
            BaselineMode::RunningMean => 0.0,
        };
        meta = meta.step(index, value, baseline, config.learning_rate);
        value_sum += value;
        let distribution = meta.probabilities();
        let top = distribution
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        trajectory.push(TrajectoryStep {
            iteration,
            candidate: index,
            value,
            distribution,
        });
        if top >= config.convergence_mass {
            break;
        }
    }

    let final_distribution = meta.probabilities();
    let converged = final_distribution
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
        >= config.convergence_mass;
    let best_index = meta.top_candidate();
    let best = meta.candidates[best_index].clone();
    let best_value = evaluate(scg, &best, outcome, &config.equilibrium).map_err(|source| {
        SearchError::CandidateFailed {
            index: best_index,
            source,
        }
    })?;
    Ok(SearchReport {
        best,
        best_value,
        trajectory,
        converged,
        final_distribution,
        candidate_count: meta.candidates.len(),
    })
}
