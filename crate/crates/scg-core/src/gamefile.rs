//! JSON game-description format.
//!
//! Top-level keys: `agents`, `variables`, `tables`, `outcome`. Table rows
//! name their parent context explicitly, so files stay readable and order
//! independent; unknown keys are rejected. Domain values are strings for
//! chance and decision variables and numbers for utility variables. Row
//! `probs` follow the declared domain order.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{AgentId, Dag, Domain, VarKind, Variable, VariableId};
use crate::intervention::PrePolicy;
use crate::model::{BehaviouralPolicy, ConditionalTable, OutcomeSpec, Scg, Violation};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GameFileError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        message: String,
        line: usize,
        column: usize,
    },
    #[error("invalid game description: {0}")]
    Invalid(String),
    #[error("validation failed: {}", messages.join("; "))]
    Validation { messages: Vec<String> },
}

impl From<serde_json::Error> for GameFileError {
    fn from(e: serde_json::Error) -> Self {
        GameFileError::Parse {
            message: e.to_string(),
            line: e.line(),
            column: e.column(),
        }
    }
}

/// A chance/decision label or a utility value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DomainValue {
    Label(String),
    Real(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariableSpec {
    pub name: String,
    pub kind: VarKind,
    pub domain: Vec<DomainValue>,
    #[serde(default)]
    pub parents: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub owner: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RowSpec {
    pub context: BTreeMap<String, String>,
    pub probs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableSpec {
    pub variable: String,
    pub rows: Vec<RowSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutcomeFileSpec {
    pub variable: String,
    pub value: String,
}

/// The on-disk shape of a game description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameFile {
    pub agents: Vec<String>,
    pub variables: Vec<VariableSpec>,
    pub tables: Vec<TableSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<OutcomeFileSpec>,
}

impl GameFile {
    pub fn from_json(text: &str) -> Result<Self, GameFileError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("game file serializes")
    }

    /// Builds and validates the game.
    ///
    /// The one-decision-per-agent rule is not applied to files: exported
    /// intervened games and multi-decision games are legal contents. Every
    /// other invariant is checked, with located messages.
    pub fn to_scg(&self) -> Result<Scg, GameFileError> {
        let scg = self.to_scg_unvalidated()?;
        let violations = scg.validate();
        if violations.is_empty() {
            Ok(scg)
        } else {
            Err(GameFileError::Validation {
                messages: violations.iter().map(Violation::to_string).collect(),
            })
        }
    }

    /// Builds the game without running the invariant checks, so callers can
    /// inspect [`Scg::validate`] output themselves.
    pub fn to_scg_unvalidated(&self) -> Result<Scg, GameFileError> {
        let mut vars = Vec::new();
        let mut edges = Vec::new();
        for spec in &self.variables {
            let domain = parse_domain(spec)?;
            let mut seen = std::collections::BTreeSet::new();
            for parent in &spec.parents {
                if !seen.insert(parent) {
                    return Err(GameFileError::Invalid(format!(
                        "variable `{}` lists parent `{}` twice",
                        spec.name, parent
                    )));
                }
                edges.push((VariableId::new(parent.clone()), VariableId::new(&spec.name)));
            }
            vars.push(Variable {
                id: VariableId::new(&spec.name),
                kind: spec.kind,
                domain,
                owner: spec.owner.clone().map(AgentId::new),
            });
        }
        let dag = Dag::new(vars, &edges).map_err(|e| GameFileError::Invalid(e.to_string()))?;

        let mut tables = Vec::new();
        for table in &self.tables {
            let id = VariableId::new(&table.variable);
            let idx = dag.index_of(&id).map_err(|_| {
                GameFileError::Invalid(format!("table refers to unknown variable `{id}`"))
            })?;
            let rows = rows_to_dense(&dag, idx, &table.rows)?;
            let table = ConditionalTable { variable: id, rows };
            tables.push(table);
        }
        let outcome = self
            .outcome
            .as_ref()
            .map(|o| OutcomeSpec::new(o.variable.as_str(), o.value.as_str()));
        let agents = self.agents.iter().map(AgentId::new).collect();
        Scg::from_parts_unchecked(dag, agents, tables, outcome, true)
            .map_err(|e| GameFileError::Invalid(e.to_string()))
    }

    /// File form of a game, with contexts labeled.
    pub fn from_scg(scg: &Scg) -> Self {
        let dag = scg.dag();
        let variables = dag
            .variables()
            .iter()
            .map(|v| VariableSpec {
                name: v.id.to_string(),
                kind: v.kind,
                domain: match &v.domain {
                    Domain::Labels(ls) => ls.iter().cloned().map(DomainValue::Label).collect(),
                    Domain::Reals(rs) => rs.iter().copied().map(DomainValue::Real).collect(),
                },
                parents: dag
                    .parent_indices(dag.index_of(&v.id).unwrap())
                    .iter()
                    .map(|&p| dag.var(p).id.to_string())
                    .collect(),
                owner: v.owner.as_ref().map(|a| a.to_string()),
            })
            .collect();
        let tables = dag
            .variables()
            .iter()
            .enumerate()
            .filter_map(|(idx, v)| {
                let table = scg.table_of(&v.id).ok().flatten()?;
                let rows = table
                    .rows
                    .iter()
                    .enumerate()
                    .map(|(ctx, probs)| RowSpec {
                        context: scg.context_map(idx, ctx),
                        probs: probs.clone(),
                    })
                    .collect();
                Some(TableSpec {
                    variable: v.id.to_string(),
                    rows,
                })
            })
            .collect();
        GameFile {
            agents: scg.agents().iter().map(|a| a.to_string()).collect(),
            variables,
            tables,
            outcome: scg.outcome().map(|o| OutcomeFileSpec {
                variable: o.variable.to_string(),
                value: o.value.clone(),
            }),
        }
    }
}

fn parse_domain(spec: &VariableSpec) -> Result<Domain, GameFileError> {
    let all_labels = spec
        .domain
        .iter()
        .all(|v| matches!(v, DomainValue::Label(_)));
    let all_reals = spec
        .domain
        .iter()
        .all(|v| matches!(v, DomainValue::Real(_)));
    match spec.kind {
        VarKind::Utility if all_reals => Ok(Domain::Reals(
            spec.domain
                .iter()
                .map(|v| match v {
                    DomainValue::Real(r) => *r,
                    DomainValue::Label(_) => unreachable!(),
                })
                .collect(),
        )),
        VarKind::Utility => Err(GameFileError::Invalid(format!(
            "utility variable `{}` needs a numeric domain",
            spec.name
        ))),
        _ if all_labels => Ok(Domain::Labels(
            spec.domain
                .iter()
                .map(|v| match v {
                    DomainValue::Label(l) => l.clone(),
                    DomainValue::Real(_) => unreachable!(),
                })
                .collect(),
        )),
        _ => Err(GameFileError::Invalid(format!(
            "variable `{}` needs a string-label domain",
            spec.name
        ))),
    }
}

/// Converts context-keyed rows to the dense layout, checking that every
/// parent context appears exactly once.
fn rows_to_dense(dag: &Dag, idx: usize, rows: &[RowSpec]) -> Result<Vec<Vec<f64>>, GameFileError> {
    let id = &dag.var(idx).id;
    let parents = dag.parent_indices(idx);
    let context_count: usize = parents.iter().map(|&p| dag.var(p).domain.len()).product();
    let mut dense: Vec<Option<Vec<f64>>> = vec![None; context_count];
    for row in rows {
        let mut ctx = 0usize;
        for &p in parents {
            let pvar = dag.var(p);
            let label =
                row.context
                    .get(pvar.id.as_str())
                    .ok_or_else(|| GameFileError::Validation {
                        messages: vec![format!(
                            "table of `{id}` has a row missing parent `{}` in its context",
                            pvar.id
                        )],
                    })?;
            let value = pvar
                .domain
                .index_of(label)
                .ok_or_else(|| GameFileError::Validation {
                    messages: vec![format!(
                        "table of `{id}`: `{label}` is not a value of parent `{}`",
                        pvar.id
                    )],
                })?;
            ctx = ctx * pvar.domain.len() + value;
        }
        if row.context.len() != parents.len() {
            return Err(GameFileError::Validation {
                messages: vec![format!(
                    "table of `{id}` has a row whose context names {} variables, expected {}",
                    row.context.len(),
                    parents.len()
                )],
            });
        }
        if dense[ctx].replace(row.probs.clone()).is_some() {
            return Err(GameFileError::Validation {
                messages: vec![format!(
                    "table of `{id}` repeats the context {}",
                    context_label(dag, idx, ctx)
                )],
            });
        }
    }
    dense
        .into_iter()
        .enumerate()
        .map(|(ctx, row)| {
            row.ok_or_else(|| GameFileError::Validation {
                messages: vec![format!(
                    "table of `{id}` is missing a row for context {}",
                    context_label(dag, idx, ctx)
                )],
            })
        })
        .collect()
}

fn context_label(dag: &Dag, idx: usize, ctx: usize) -> String {
    let parents = dag.parent_indices(idx);
    if parents.is_empty() {
        return "{}".to_string();
    }
    let mut rest = ctx;
    let mut digits = vec![0usize; parents.len()];
    for pos in (0..parents.len()).rev() {
        let size = dag.var(parents[pos]).domain.len();
        digits[pos] = rest % size;
        rest /= size;
    }
    let parts: Vec<String> = parents
        .iter()
        .zip(&digits)
        .map(|(&p, &d)| format!("{}={}", dag.var(p).id, dag.var(p).domain.label(d)))
        .collect();
    format!("{{{}}}", parts.join(", "))
}

/// On-disk shape of a pre-policy: fixed policies with labeled contexts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrePolicyFile {
    pub assignments: Vec<TableSpec>,
}

impl PrePolicyFile {
    pub fn from_json(text: &str) -> Result<Self, GameFileError> {
        Ok(serde_json::from_str(text)?)
    }

    /// Resolves the labeled rows against a game into a dense pre-policy.
    pub fn to_pre_policy(&self, scg: &Scg) -> Result<PrePolicy, GameFileError> {
        let mut pre = PrePolicy::empty();
        for spec in &self.assignments {
            let id = VariableId::new(&spec.variable);
            let idx = scg.dag().index_of(&id).map_err(|_| {
                GameFileError::Invalid(format!("pre-policy names unknown decision `{id}`"))
            })?;
            let rows = rows_to_dense(scg.dag(), idx, &spec.rows)?;
            pre = pre.with(BehaviouralPolicy { decision: id, rows });
        }
        Ok(pre)
    }
}
