//! The game model: a validated DAG plus tabular parameters, agents,
//! behavioural policies, and exact inference.
//!
//! Inference is brute-force enumeration of joint assignments in chain-rule
//! order. Games in this crate are desk-scale, so clarity wins over
//! variable-elimination machinery. All probabilities are `f64` and the
//! repo-wide normalization tolerance is [`PROB_TOL`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::graph::{AgentId, Dag, VarKind, VariableId};

/// Tolerance used for every probability-normalization check in the crate.
pub const PROB_TOL: f64 = 1e-9;

/// Cap on the number of joint assignments brute-force inference will expand.
pub const JOINT_CAP: u128 = 10_000_000;

/// Conditional probability table of one non-decision variable.
///
/// Rows are dense: one row per parent context, contexts indexed in mixed
/// radix over the variable's parents (first parent most significant), and
/// each row lists probabilities in the variable's domain order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalTable {
    pub variable: VariableId,
    pub rows: Vec<Vec<f64>>,
}

/// The designated desirable outcome: a value of a chance variable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeSpec {
    pub variable: VariableId,
    pub value: String,
}

impl OutcomeSpec {
    pub fn new(variable: impl Into<VariableId>, value: impl Into<String>) -> Self {
        OutcomeSpec {
            variable: variable.into(),
            value: value.into(),
        }
    }
}

/// Behavioural policy of one decision: a distribution over actions for every
/// parent context, stored densely like a [`ConditionalTable`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviouralPolicy {
    pub decision: VariableId,
    pub rows: Vec<Vec<f64>>,
}

impl BehaviouralPolicy {
    /// True iff every row is one-hot.
    pub fn is_pure(&self) -> bool {
        self.rows
            .iter()
            .all(|row| row.iter().filter(|&&p| p != 0.0).count() == 1 && row.contains(&1.0))
    }
}

/// One behavioural policy per decision of a game.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PolicyProfile {
    pub policies: BTreeMap<VariableId, BehaviouralPolicy>,
}

impl PolicyProfile {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, policy: BehaviouralPolicy) -> Self {
        self.policies.insert(policy.decision.clone(), policy);
        self
    }

    pub fn insert(&mut self, policy: BehaviouralPolicy) {
        self.policies.insert(policy.decision.clone(), policy);
    }

    pub fn get(&self, decision: &VariableId) -> Option<&BehaviouralPolicy> {
        self.policies.get(decision)
    }
}

impl FromIterator<BehaviouralPolicy> for PolicyProfile {
    fn from_iter<T: IntoIterator<Item = BehaviouralPolicy>>(iter: T) -> Self {
        let mut profile = PolicyProfile::new();
        for p in iter {
            profile.insert(p);
        }
        profile
    }
}

/// A single invariant violation found by [`Scg::validate`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    MissingTable {
        variable: VariableId,
    },
    TableOnDecision {
        variable: VariableId,
    },
    TableShape {
        variable: VariableId,
        reason: String,
    },
    Normalization {
        variable: VariableId,
        context: String,
        sum: f64,
    },
    ProbabilityRange {
        variable: VariableId,
        context: String,
        value: f64,
    },
    Ownership {
        variable: VariableId,
        owner: AgentId,
    },
    DuplicateAgent {
        agent: AgentId,
    },
    AgentDecisionCount {
        agent: AgentId,
        count: usize,
    },
    OutcomeInvalid {
        reason: String,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MissingTable { variable } => {
                write!(f, "variable `{variable}` has no conditional table")
            }
            Violation::TableOnDecision { variable } => {
                write!(f, "decision `{variable}` must not carry a table")
            }
            Violation::TableShape { variable, reason } => {
                write!(f, "table of `{variable}` is malformed: {reason}")
            }
            Violation::Normalization {
                variable,
                context,
                sum,
            } => write!(
                f,
                "table row of `{variable}` at context {context} sums to {sum}"
            ),
            Violation::ProbabilityRange {
                variable,
                context,
                value,
            } => write!(
                f,
                "table of `{variable}` at context {context} holds out-of-range entry {value}"
            ),
            Violation::Ownership { variable, owner } => {
                write!(f, "`{variable}` is owned by unlisted agent `{owner}`")
            }
            Violation::DuplicateAgent { agent } => write!(f, "agent `{agent}` is listed twice"),
            Violation::AgentDecisionCount { agent, count } => {
                write!(
                    f,
                    "agent `{agent}` owns {count} decisions, expected exactly 1"
                )
            }
            Violation::OutcomeInvalid { reason } => write!(f, "outcome is invalid: {reason}"),
        }
    }
}

/// A structural causal game: graph, agents, and tabular parameters.
///
/// Decisions carry no tables; their distributions come from policies at
/// query time. Exogenous randomness is folded into the conditional tables.
#[derive(Debug, Clone, Serialize)]
pub struct Scg {
    dag: Dag,
    agents: Vec<AgentId>,
    /// One optional table per node index; `Some` exactly for non-decisions.
    tables: Vec<Option<ConditionalTable>>,
    outcome: Option<OutcomeSpec>,
    /// When true the one-decision-per-agent rule is not enforced.
    multi_decision: bool,
    /// Variables converted from decision to chance by a pre-policy.
    intervened: BTreeSet<VariableId>,
}

impl PartialEq for Scg {
    /// Equality over game content; construction-mode and intervention
    /// provenance metadata are not part of the game.
    fn eq(&self, other: &Self) -> bool {
        self.dag == other.dag
            && self.agents == other.agents
            && self.tables == other.tables
            && self.outcome == other.outcome
    }
}

impl Scg {
    /// Builds a game and checks every invariant, including the rule that
    /// each agent owns exactly one decision.
    pub fn new(
        dag: Dag,
        agents: Vec<AgentId>,
        tables: Vec<ConditionalTable>,
        outcome: Option<OutcomeSpec>,
    ) -> Result<Self, ModelError> {
        Self::build(dag, agents, tables, outcome, false)
    }

    /// Builds a game without the one-decision-per-agent rule.
    ///
    /// Needed for games where an agent controls several decisions and for
    /// intervened games where an agent's decision has been fixed away.
    pub fn new_multi_decision(
        dag: Dag,
        agents: Vec<AgentId>,
        tables: Vec<ConditionalTable>,
        outcome: Option<OutcomeSpec>,
    ) -> Result<Self, ModelError> {
        Self::build(dag, agents, tables, outcome, true)
    }

    fn build(
        dag: Dag,
        agents: Vec<AgentId>,
        tables: Vec<ConditionalTable>,
        outcome: Option<OutcomeSpec>,
        multi_decision: bool,
    ) -> Result<Self, ModelError> {
        let scg = Self::from_parts_unchecked(dag, agents, tables, outcome, multi_decision)?;
        let violations = scg.validate();
        if violations.is_empty() {
            Ok(scg)
        } else {
            Err(ModelError::InvalidModel(
                violations
                    .iter()
                    .map(Violation::to_string)
                    .collect::<Vec<_>>()
                    .join("; "),
            ))
        }
    }

    /// Slots tables into node positions without running invariant checks.
    ///
    /// Only table-to-unknown-variable and duplicate-table references fail
    /// here; everything else is left for [`validate`](Self::validate) so
    /// that broken games can be constructed and inspected in tests and by
    /// the file parser.
    pub(crate) fn from_parts_unchecked(
        dag: Dag,
        agents: Vec<AgentId>,
        tables: Vec<ConditionalTable>,
        outcome: Option<OutcomeSpec>,
        multi_decision: bool,
    ) -> Result<Self, ModelError> {
        let mut slots: Vec<Option<ConditionalTable>> = vec![None; dag.len()];
        for table in tables {
            let idx = dag.index_of(&table.variable)?;
            if slots[idx].is_some() {
                return Err(ModelError::InvalidModel(format!(
                    "variable `{}` carries two tables",
                    table.variable
                )));
            }
            slots[idx] = Some(table);
        }
        Ok(Scg {
            dag,
            agents,
            tables: slots,
            outcome,
            multi_decision,
            intervened: BTreeSet::new(),
        })
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn agents(&self) -> &[AgentId] {
        &self.agents
    }

    pub fn outcome(&self) -> Option<&OutcomeSpec> {
        self.outcome.as_ref()
    }

    pub fn set_outcome(&mut self, outcome: Option<OutcomeSpec>) {
        self.outcome = outcome;
    }

    pub fn table_of(&self, id: &VariableId) -> Result<Option<&ConditionalTable>, ModelError> {
        Ok(self.tables[self.dag.index_of(id)?].as_ref())
    }

    pub fn tables(&self) -> impl Iterator<Item = &ConditionalTable> {
        self.tables.iter().flatten()
    }

    /// Ids of all decision variables in declaration order.
    pub fn decisions(&self) -> Vec<VariableId> {
        self.dag
            .decision_indices()
            .into_iter()
            .map(|i| self.dag.var(i).id.clone())
            .collect()
    }

    /// Variables fixed to a pre-policy at some point in this game's history.
    pub fn intervened(&self) -> &BTreeSet<VariableId> {
        &self.intervened
    }

    pub fn owner_of(&self, decision: &VariableId) -> Result<&AgentId, ModelError> {
        let idx = self.dag.index_of(decision)?;
        let var = self.dag.var(idx);
        if var.kind != VarKind::Decision {
            return Err(ModelError::NotADecision(decision.clone()));
        }
        var.owner
            .as_ref()
            .ok_or_else(|| ModelError::InvalidModel(format!("decision `{decision}` has no owner")))
    }

    /// Number of parent contexts of the variable at `index`.
    pub fn context_count(&self, index: usize) -> usize {
        self.dag
            .parent_indices(index)
            .iter()
            .map(|&p| self.dag.var(p).domain.len())
            .product()
    }

    /// Parent value indices encoded by a dense context index.
    pub fn decode_context(&self, index: usize, ctx: usize) -> Vec<usize> {
        let parents = self.dag.parent_indices(index);
        let mut digits = vec![0usize; parents.len()];
        let mut rest = ctx;
        for pos in (0..parents.len()).rev() {
            let size = self.dag.var(parents[pos]).domain.len();
            digits[pos] = rest % size;
            rest /= size;
        }
        digits
    }

    /// Printable `parent=value` rendering of a context, for messages.
    pub fn context_label(&self, index: usize, ctx: usize) -> String {
        let parents = self.dag.parent_indices(index);
        if parents.is_empty() {
            return "{}".to_string();
        }
        let digits = self.decode_context(index, ctx);
        let parts: Vec<String> = parents
            .iter()
            .zip(&digits)
            .map(|(&p, &d)| {
                let var = self.dag.var(p);
                format!("{}={}", var.id, var.domain.label(d))
            })
            .collect();
        format!("{{{}}}", parts.join(", "))
    }

    /// Context rendered as a `parent -> value` map, for reports and export.
    pub fn context_map(&self, index: usize, ctx: usize) -> BTreeMap<String, String> {
        let parents = self.dag.parent_indices(index);
        let digits = self.decode_context(index, ctx);
        parents
            .iter()
            .zip(&digits)
            .map(|(&p, &d)| {
                let var = self.dag.var(p);
                (var.id.to_string(), var.domain.label(d))
            })
            .collect()
    }

    /// Context index of `index` under a full assignment of value indices.
    fn context_of_assignment(&self, index: usize, assignment: &[usize]) -> usize {
        let mut ctx = 0usize;
        for &p in self.dag.parent_indices(index) {
            ctx = ctx * self.dag.var(p).domain.len() + assignment[p];
        }
        ctx
    }

    /// Reports every invariant violation with its location. Empty = valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut seen_agents = BTreeSet::new();
        for agent in &self.agents {
            if !seen_agents.insert(agent.clone()) {
                out.push(Violation::DuplicateAgent {
                    agent: agent.clone(),
                });
            }
        }
        for (idx, var) in self.dag.variables().iter().enumerate() {
            match (&var.kind, &self.tables[idx]) {
                (VarKind::Decision, Some(_)) => out.push(Violation::TableOnDecision {
                    variable: var.id.clone(),
                }),
                (VarKind::Decision, None) => {}
                (_, None) => out.push(Violation::MissingTable {
                    variable: var.id.clone(),
                }),
                (_, Some(table)) => out.extend(self.check_rows(idx, &table.rows, &var.id)),
            }
            if let Some(owner) = &var.owner {
                if !self.agents.contains(owner) {
                    out.push(Violation::Ownership {
                        variable: var.id.clone(),
                        owner: owner.clone(),
                    });
                }
            }
        }
        if !self.multi_decision {
            let mut counts: BTreeMap<&AgentId, usize> =
                self.agents.iter().map(|a| (a, 0usize)).collect();
            for &d in &self.dag.decision_indices() {
                if let Some(owner) = &self.dag.var(d).owner {
                    if let Some(c) = counts.get_mut(owner) {
                        *c += 1;
                    }
                }
            }
            for (agent, count) in counts {
                if count != 1 {
                    out.push(Violation::AgentDecisionCount {
                        agent: agent.clone(),
                        count,
                    });
                }
            }
        }
        if let Some(outcome) = &self.outcome {
            match self.dag.index_of(&outcome.variable) {
                Err(_) => out.push(Violation::OutcomeInvalid {
                    reason: format!("unknown variable `{}`", outcome.variable),
                }),
                Ok(idx) => {
                    let var = self.dag.var(idx);
                    if var.kind != VarKind::Chance {
                        out.push(Violation::OutcomeInvalid {
                            reason: format!("`{}` is not a chance variable", outcome.variable),
                        });
                    } else if var.domain.index_of(&outcome.value).is_none() {
                        out.push(Violation::OutcomeInvalid {
                            reason: format!(
                                "value `{}` not in the domain of `{}`",
                                outcome.value, outcome.variable
                            ),
                        });
                    }
                }
            }
        }
        out
    }

    fn check_rows(&self, idx: usize, rows: &[Vec<f64>], id: &VariableId) -> Vec<Violation> {
        let mut out = Vec::new();
        let expected_rows = self.context_count(idx);
        if rows.len() != expected_rows {
            out.push(Violation::TableShape {
                variable: id.clone(),
                reason: format!("{} rows, expected {}", rows.len(), expected_rows),
            });
            return out;
        }
        let width = self.dag.var(idx).domain.len();
        for (ctx, row) in rows.iter().enumerate() {
            if row.len() != width {
                out.push(Violation::TableShape {
                    variable: id.clone(),
                    reason: format!(
                        "row at context {} has {} entries, expected {}",
                        self.context_label(idx, ctx),
                        row.len(),
                        width
                    ),
                });
                continue;
            }
            for &p in row {
                if !(0.0..=1.0).contains(&p) || p.is_nan() {
                    out.push(Violation::ProbabilityRange {
                        variable: id.clone(),
                        context: self.context_label(idx, ctx),
                        value: p,
                    });
                }
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > PROB_TOL {
                out.push(Violation::Normalization {
                    variable: id.clone(),
                    context: self.context_label(idx, ctx),
                    sum,
                });
            }
        }
        out
    }

    /// Checks that a policy fits a decision of this game: decision kind,
    /// dense shape, and row normalization.
    pub fn check_policy(&self, policy: &BehaviouralPolicy) -> Result<(), ModelError> {
        let idx = self.dag.index_of(&policy.decision)?;
        let var = self.dag.var(idx);
        if var.kind != VarKind::Decision {
            return Err(ModelError::NotADecision(policy.decision.clone()));
        }
        let expected_rows = self.context_count(idx);
        if policy.rows.len() != expected_rows {
            return Err(ModelError::InvalidPolicyShape {
                decision: policy.decision.clone(),
                reason: format!("{} rows, expected {}", policy.rows.len(), expected_rows),
            });
        }
        for (ctx, row) in policy.rows.iter().enumerate() {
            if row.len() != var.domain.len() {
                return Err(ModelError::InvalidPolicyShape {
                    decision: policy.decision.clone(),
                    reason: format!(
                        "row at context {} has {} entries, expected {}",
                        self.context_label(idx, ctx),
                        row.len(),
                        var.domain.len()
                    ),
                });
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > PROB_TOL || row.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                return Err(ModelError::InvalidPolicyShape {
                    decision: policy.decision.clone(),
                    reason: format!(
                        "row at context {} is not a distribution",
                        self.context_label(idx, ctx)
                    ),
                });
            }
        }
        Ok(())
    }

    /// The deterministic policy playing `action` in every context.
    pub fn pure_policy(
        &self,
        decision: &VariableId,
        action: &str,
    ) -> Result<BehaviouralPolicy, ModelError> {
        let idx = self.dag.index_of(decision)?;
        let var = self.dag.var(idx);
        if var.kind != VarKind::Decision {
            return Err(ModelError::NotADecision(decision.clone()));
        }
        let a = var
            .domain
            .index_of(action)
            .ok_or_else(|| ModelError::ValueNotInDomain {
                variable: decision.clone(),
                value: action.to_string(),
            })?;
        let mut row = vec![0.0; var.domain.len()];
        row[a] = 1.0;
        Ok(BehaviouralPolicy {
            decision: decision.clone(),
            rows: vec![row; self.context_count(idx)],
        })
    }

    /// The uniform policy over actions in every context.
    pub fn uniform_policy(&self, decision: &VariableId) -> Result<BehaviouralPolicy, ModelError> {
        let idx = self.dag.index_of(decision)?;
        let var = self.dag.var(idx);
        if var.kind != VarKind::Decision {
            return Err(ModelError::NotADecision(decision.clone()));
        }
        let n = var.domain.len();
        Ok(BehaviouralPolicy {
            decision: decision.clone(),
            rows: vec![vec![1.0 / n as f64; n]; self.context_count(idx)],
        })
    }

    /// Copy of the game in which one decision has been converted to a chance
    /// variable whose table is the given fixed policy.
    ///
    /// The result no longer enforces the one-decision-per-agent rule (the
    /// owner may have no decision left) and records the conversion in
    /// [`intervened`](Self::intervened).
    pub(crate) fn with_decision_fixed(
        &self,
        policy: &BehaviouralPolicy,
    ) -> Result<Scg, ModelError> {
        self.check_policy(policy)?;
        let idx = self.dag.index_of(&policy.decision)?;
        let mut vars = self.dag.variables().to_vec();
        vars[idx] =
            crate::graph::Variable::chance(policy.decision.clone(), vars[idx].domain.clone());
        let dag = Dag::new(vars, &self.dag.edge_list())
            .expect("fixing a decision preserves graph validity");
        let mut tables: Vec<ConditionalTable> = self.tables.iter().flatten().cloned().collect();
        tables.push(ConditionalTable {
            variable: policy.decision.clone(),
            rows: policy.rows.clone(),
        });
        let mut out = Scg::from_parts_unchecked(
            dag,
            self.agents.clone(),
            tables,
            self.outcome.clone(),
            true,
        )?;
        out.intervened = self.intervened.clone();
        out.intervened.insert(policy.decision.clone());
        debug_assert!(out.validate().is_empty() || !self.validate().is_empty());
        Ok(out)
    }

    /// Resolves a profile into per-node row tables, decisions taken from the
    /// profile and everything else from the game's tables.
    fn resolve<'a>(
        &'a self,
        profile: &'a PolicyProfile,
    ) -> Result<Vec<&'a [Vec<f64>]>, ModelError> {
        let mut rows: Vec<&[Vec<f64>]> = Vec::with_capacity(self.dag.len());
        for (idx, var) in self.dag.variables().iter().enumerate() {
            if var.kind == VarKind::Decision {
                let policy = profile
                    .get(&var.id)
                    .ok_or_else(|| ModelError::IncompleteProfile(var.id.clone()))?;
                self.check_policy(policy)?;
                rows.push(&policy.rows);
            } else {
                let table = self.tables[idx].as_ref().ok_or_else(|| {
                    ModelError::InvalidModel(format!("`{}` has no table", var.id))
                })?;
                rows.push(&table.rows);
            }
        }
        Ok(rows)
    }

    fn joint_size(&self) -> Result<usize, ModelError> {
        let mut total: u128 = 1;
        for var in self.dag.variables() {
            total = total.saturating_mul(var.domain.len() as u128);
            if total > JOINT_CAP {
                return Err(ModelError::InvalidModel(format!(
                    "joint assignment space exceeds the cap of {JOINT_CAP}"
                )));
            }
        }
        Ok(total as usize)
    }

    /// Exact joint distribution over all variables under a policy profile.
    pub fn joint_distribution(
        &self,
        profile: &PolicyProfile,
    ) -> Result<JointDistribution, ModelError> {
        let rows = self.resolve(profile)?;
        let total = self.joint_size()?;
        let n = self.dag.len();
        let sizes: Vec<usize> = self
            .dag
            .variables()
            .iter()
            .map(|v| v.domain.len())
            .collect();
        let mut probs = vec![0.0f64; total];
        let mut assignment = vec![0usize; n];
        for (flat, slot) in probs.iter_mut().enumerate() {
            decode_mixed_radix(flat, &sizes, &mut assignment);
            let mut p = 1.0;
            for idx in 0..n {
                let ctx = self.context_of_assignment(idx, &assignment);
                p *= rows[idx][ctx][assignment[idx]];
                if p == 0.0 {
                    break;
                }
            }
            *slot = p;
        }
        Ok(JointDistribution {
            ids: self.dag.variables().iter().map(|v| v.id.clone()).collect(),
            sizes,
            probs,
        })
    }

    /// Sum over the agent's utility variables of their expected value.
    pub fn expected_utility(
        &self,
        profile: &PolicyProfile,
        agent: &AgentId,
    ) -> Result<f64, ModelError> {
        if !self.agents.contains(agent) {
            return Err(ModelError::UnknownAgent(agent.to_string()));
        }
        let utilities = self.dag.utility_indices_of(agent);
        let joint = self.joint_distribution(profile)?;
        let mut total = 0.0;
        let mut assignment = vec![0usize; self.dag.len()];
        for (flat, &p) in joint.probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            decode_mixed_radix(flat, &joint.sizes, &mut assignment);
            for &u in &utilities {
                total += p * self.dag.var(u).domain.real(assignment[u]).unwrap_or(0.0);
            }
        }
        Ok(total)
    }

    /// Marginal probability that the outcome variable takes the outcome value.
    pub fn outcome_probability(
        &self,
        profile: &PolicyProfile,
        outcome: &OutcomeSpec,
    ) -> Result<f64, ModelError> {
        let idx = self.dag.index_of(&outcome.variable)?;
        let var = self.dag.var(idx);
        if var.kind != VarKind::Chance {
            return Err(ModelError::OutcomeOnDecision(outcome.variable.clone()));
        }
        let value =
            var.domain
                .index_of(&outcome.value)
                .ok_or_else(|| ModelError::ValueNotInDomain {
                    variable: outcome.variable.clone(),
                    value: outcome.value.clone(),
                })?;
        let joint = self.joint_distribution(profile)?;
        Ok(joint.marginal(idx, value))
    }

    /// Per-context linear coefficients of one decision's policy in its
    /// owner's expected utility.
    ///
    /// `w[ctx][a]` is the expected-utility contribution of playing action
    /// `a` in context `ctx`, holding every other factor of the game fixed;
    /// the owner's expected utility of any policy `π` for this decision is
    /// `Σ_ctx Σ_a π[ctx][a] · w[ctx][a]`. Best responses and deviation gains
    /// therefore decompose per context.
    pub fn policy_weights(
        &self,
        profile: &PolicyProfile,
        decision: &VariableId,
    ) -> Result<Vec<Vec<f64>>, ModelError> {
        let d_idx = self.dag.index_of(decision)?;
        if self.dag.var(d_idx).kind != VarKind::Decision {
            return Err(ModelError::NotADecision(decision.clone()));
        }
        let owner = self.owner_of(decision)?.clone();
        let utilities = self.dag.utility_indices_of(&owner);
        let rows = self.resolve(profile)?;
        let total = self.joint_size()?;
        let n = self.dag.len();
        let sizes: Vec<usize> = self
            .dag
            .variables()
            .iter()
            .map(|v| v.domain.len())
            .collect();
        let mut weights = vec![vec![0.0f64; sizes[d_idx]]; self.context_count(d_idx)];
        let mut assignment = vec![0usize; n];
        for flat in 0..total {
            decode_mixed_radix(flat, &sizes, &mut assignment);
            let mut p = 1.0;
            for idx in 0..n {
                if idx == d_idx {
                    continue;
                }
                let ctx = self.context_of_assignment(idx, &assignment);
                p *= rows[idx][ctx][assignment[idx]];
                if p == 0.0 {
                    break;
                }
            }
            if p == 0.0 {
                continue;
            }
            let mut u = 0.0;
            for &ui in &utilities {
                u += self.dag.var(ui).domain.real(assignment[ui]).unwrap_or(0.0);
            }
            if u != 0.0 {
                let ctx = self.context_of_assignment(d_idx, &assignment);
                weights[ctx][assignment[d_idx]] += p * u;
            }
        }
        Ok(weights)
    }
}

/// Dense exact joint distribution over all variables of a game.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    ids: Vec<VariableId>,
    sizes: Vec<usize>,
    probs: Vec<f64>,
}

impl JointDistribution {
    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Iterates `(assignment value indices, probability)` over all cells.
    pub fn iter(&self) -> impl Iterator<Item = (Vec<usize>, f64)> + '_ {
        self.probs.iter().enumerate().map(|(flat, &p)| {
            let mut assignment = vec![0usize; self.sizes.len()];
            decode_mixed_radix(flat, &self.sizes, &mut assignment);
            (assignment, p)
        })
    }

    pub fn ids(&self) -> &[VariableId] {
        &self.ids
    }

    /// Marginal probability of one variable (by node index) taking a value.
    pub fn marginal(&self, var: usize, value: usize) -> f64 {
        let mut assignment = vec![0usize; self.sizes.len()];
        let mut out = 0.0;
        for (flat, &p) in self.probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            decode_mixed_radix(flat, &self.sizes, &mut assignment);
            if assignment[var] == value {
                out += p;
            }
        }
        out
    }

    /// Probability mass of the cells matching a partial assignment given as
    /// `variable id -> value index`.
    pub fn mass_matching(&self, partial: &BTreeMap<VariableId, usize>) -> f64 {
        let picks: Vec<(usize, usize)> = partial
            .iter()
            .map(|(id, &v)| {
                let idx = self
                    .ids
                    .iter()
                    .position(|i| i == id)
                    .expect("id present in joint");
                (idx, v)
            })
            .collect();
        let mut assignment = vec![0usize; self.sizes.len()];
        let mut out = 0.0;
        for (flat, &p) in self.probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            decode_mixed_radix(flat, &self.sizes, &mut assignment);
            if picks.iter().all(|&(idx, v)| assignment[idx] == v) {
                out += p;
            }
        }
        out
    }
}

fn decode_mixed_radix(mut flat: usize, sizes: &[usize], out: &mut [usize]) {
    for pos in (0..sizes.len()).rev() {
        out[pos] = flat % sizes[pos];
        flat /= sizes[pos];
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Dag, Domain, Variable};

    fn coin_game() -> Scg {
        let dag = Dag::new(
            vec![Variable::chance("coin", Domain::labels(["heads", "tails"]))],
            &[],
        )
        .unwrap();
        Scg::new(
            dag,
            vec![],
            vec![ConditionalTable {
                variable: "coin".into(),
                rows: vec![vec![0.5, 0.5]],
            }],
            None,
        )
        .unwrap()
    }

    /// One decision in {stay, go}, utility 1.0 iff go.
    fn tiny_decision_game() -> Scg {
        let dag = Dag::new(
            vec![
                Variable::decision("d", Domain::labels(["stay", "go"]), "a"),
                Variable::utility("u", [0.0, 1.0], "a"),
            ],
            &[("d".into(), "u".into())],
        )
        .unwrap();
        Scg::new(
            dag,
            vec!["a".into()],
            vec![ConditionalTable {
                variable: "u".into(),
                rows: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            }],
            None,
        )
        .unwrap()
    }

    #[test]
    fn fair_coin_joint() {
        let scg = coin_game();
        let joint = scg.joint_distribution(&PolicyProfile::new()).unwrap();
        assert!((joint.total() - 1.0).abs() < PROB_TOL);
        assert!((joint.marginal(0, 0) - 0.5).abs() < PROB_TOL);
        assert!((joint.marginal(0, 1) - 0.5).abs() < PROB_TOL);
    }

    #[test]
    fn deterministic_game_is_point_mass() {
        let scg = tiny_decision_game();
        let profile = PolicyProfile::new().with(scg.pure_policy(&"d".into(), "go").unwrap());
        let joint = scg.joint_distribution(&profile).unwrap();
        let point: Vec<(Vec<usize>, f64)> = joint.iter().filter(|(_, p)| *p > 0.0).collect();
        assert_eq!(point.len(), 1);
        assert_eq!(point[0].0, vec![1, 1]);
        assert!((point[0].1 - 1.0).abs() < PROB_TOL);
    }

    #[test]
    fn expected_utility_of_pure_policies() {
        let scg = tiny_decision_game();
        let go = PolicyProfile::new().with(scg.pure_policy(&"d".into(), "go").unwrap());
        let stay = PolicyProfile::new().with(scg.pure_policy(&"d".into(), "stay").unwrap());
        assert!((scg.expected_utility(&go, &"a".into()).unwrap() - 1.0).abs() < PROB_TOL);
        assert!(scg.expected_utility(&stay, &"a".into()).unwrap().abs() < PROB_TOL);
    }

    #[test]
    fn expected_utility_unknown_agent() {
        let scg = tiny_decision_game();
        let go = PolicyProfile::new().with(scg.pure_policy(&"d".into(), "go").unwrap());
        assert_eq!(
            scg.expected_utility(&go, &"ghost".into()).unwrap_err(),
            ModelError::UnknownAgent("ghost".into())
        );
    }

    #[test]
    fn incomplete_profile_is_rejected() {
        let scg = tiny_decision_game();
        let err = scg.joint_distribution(&PolicyProfile::new()).unwrap_err();
        assert_eq!(err, ModelError::IncompleteProfile("d".into()));
    }

    #[test]
    fn outcome_probability_on_decision_is_rejected() {
        let scg = tiny_decision_game();
        let profile = PolicyProfile::new().with(scg.pure_policy(&"d".into(), "go").unwrap());
        let err = scg
            .outcome_probability(&profile, &OutcomeSpec::new("d", "go"))
            .unwrap_err();
        assert_eq!(err, ModelError::OutcomeOnDecision("d".into()));
    }

    #[test]
    fn validate_reports_bad_row_sum() {
        let dag = Dag::new(vec![Variable::chance("x", Domain::labels(["0", "1"]))], &[]).unwrap();
        let scg = Scg::from_parts_unchecked(
            dag,
            vec![],
            vec![ConditionalTable {
                variable: "x".into(),
                rows: vec![vec![0.5, 0.3]],
            }],
            None,
            false,
        )
        .unwrap();
        let violations = scg.validate();
        assert_eq!(violations.len(), 1);
        assert!(matches!(violations[0], Violation::Normalization { .. }));
    }

    #[test]
    fn validate_reports_unlisted_owner() {
        let dag = Dag::new(
            vec![
                Variable::decision("d", Domain::labels(["l", "r"]), "ghost"),
                Variable::utility("u", [0.0], "ghost"),
            ],
            &[("d".into(), "u".into())],
        )
        .unwrap();
        let scg = Scg::from_parts_unchecked(
            dag,
            vec![],
            vec![ConditionalTable {
                variable: "u".into(),
                rows: vec![vec![1.0], vec![1.0]],
            }],
            None,
            true,
        )
        .unwrap();
        let violations = scg.validate();
        assert_eq!(
            violations
                .iter()
                .filter(|v| matches!(v, Violation::Ownership { .. }))
                .count(),
            2
        );
    }

    #[test]
    fn strict_construction_enforces_one_decision_per_agent() {
        let dag = Dag::new(
            vec![
                Variable::decision("d1", Domain::labels(["l", "r"]), "a"),
                Variable::decision("d2", Domain::labels(["l", "r"]), "a"),
                Variable::utility("u", [0.0, 1.0], "a"),
            ],
            &[("d1".into(), "u".into()), ("d2".into(), "u".into())],
        )
        .unwrap();
        let tables = vec![ConditionalTable {
            variable: "u".into(),
            rows: vec![
                vec![1.0, 0.0],
                vec![0.0, 1.0],
                vec![0.0, 1.0],
                vec![1.0, 0.0],
            ],
        }];
        let err = Scg::new(dag.clone(), vec!["a".into()], tables.clone(), None).unwrap_err();
        assert!(matches!(err, ModelError::InvalidModel(_)));
        assert!(Scg::new_multi_decision(dag, vec!["a".into()], tables, None).is_ok());
    }

    #[test]
    fn policy_weights_match_expected_utility() {
        let scg = tiny_decision_game();
        let policy = BehaviouralPolicy {
            decision: "d".into(),
            rows: vec![vec![0.25, 0.75]],
        };
        let profile = PolicyProfile::new().with(policy.clone());
        let w = scg.policy_weights(&profile, &"d".into()).unwrap();
        let linear: f64 = w[0]
            .iter()
            .zip(&policy.rows[0])
            .map(|(wi, pi)| wi * pi)
            .sum();
        let eu = scg.expected_utility(&profile, &"a".into()).unwrap();
        assert!((linear - eu).abs() < PROB_TOL);
    }

    #[test]
    fn context_indexing_round_trip() {
        let dag = Dag::new(
            vec![
                Variable::chance("p", Domain::labels(["0", "1", "2"])),
                Variable::chance("q", Domain::labels(["a", "b"])),
                Variable::chance("r", Domain::labels(["x", "y"])),
            ],
            &[("p".into(), "r".into()), ("q".into(), "r".into())],
        )
        .unwrap();
        let scg = Scg::from_parts_unchecked(
            dag,
            vec![],
            vec![
                ConditionalTable {
                    variable: "p".into(),
                    rows: vec![vec![0.2, 0.3, 0.5]],
                },
                ConditionalTable {
                    variable: "q".into(),
                    rows: vec![vec![0.5, 0.5]],
                },
                ConditionalTable {
                    variable: "r".into(),
                    rows: vec![vec![0.5, 0.5]; 6],
                },
            ],
            None,
            false,
        )
        .unwrap();
        let r = 2;
        assert_eq!(scg.context_count(r), 6);
        let digits = scg.decode_context(r, 5);
        assert_eq!(digits, vec![2, 1]);
        assert_eq!(scg.context_label(r, 5), "{p=2, q=b}");
    }
}
