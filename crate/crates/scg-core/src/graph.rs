//! Directed acyclic graph substrate for causal games.
//!
//! Variables are typed (chance, decision, utility) and carry finite ordered
//! domains. The graph offers the queries the rest of the crate is built on:
//! deterministic topological ordering, d-separation, descendant sets, and the
//! mechanised-graph construction that attaches one policy node per decision.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::GraphError;

/// Identifier of a variable, unique within one graph.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VariableId(pub String);

impl VariableId {
    pub fn new(name: impl Into<String>) -> Self {
        VariableId(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for VariableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for VariableId {
    fn from(s: &str) -> Self {
        VariableId(s.to_string())
    }
}

impl From<String> for VariableId {
    fn from(s: String) -> Self {
        VariableId(s)
    }
}

/// Identifier of an agent, unique within one game.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentId(pub String);

impl AgentId {
    pub fn new(name: impl Into<String>) -> Self {
        AgentId(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for AgentId {
    fn from(s: &str) -> Self {
        AgentId(s.to_string())
    }
}

impl From<String> for AgentId {
    fn from(s: String) -> Self {
        AgentId(s)
    }
}

/// Role of a variable in the game graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarKind {
    Chance,
    Decision,
    Utility,
}

impl fmt::Display for VarKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarKind::Chance => f.write_str("chance"),
            VarKind::Decision => f.write_str("decision"),
            VarKind::Utility => f.write_str("utility"),
        }
    }
}

/// Finite ordered domain of a variable.
///
/// Chance and decision variables carry arbitrary labels; utility variables
/// carry real values so expectations can be taken directly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Domain {
    Labels(Vec<String>),
    Reals(Vec<f64>),
}

impl Domain {
    pub fn labels<S: Into<String>>(values: impl IntoIterator<Item = S>) -> Self {
        Domain::Labels(values.into_iter().map(Into::into).collect())
    }

    pub fn reals(values: impl IntoIterator<Item = f64>) -> Self {
        Domain::Reals(values.into_iter().collect())
    }

    pub fn len(&self) -> usize {
        match self {
            Domain::Labels(v) => v.len(),
            Domain::Reals(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Printable label of the value at `index`.
    pub fn label(&self, index: usize) -> String {
        match self {
            Domain::Labels(v) => v[index].clone(),
            Domain::Reals(v) => format!("{}", v[index]),
        }
    }

    /// Index of a value given its printable label.
    pub fn index_of(&self, label: &str) -> Option<usize> {
        match self {
            Domain::Labels(v) => v.iter().position(|l| l == label),
            Domain::Reals(v) => v.iter().position(|r| format!("{r}") == label),
        }
    }

    /// Real value at `index`; only meaningful for utility domains.
    pub fn real(&self, index: usize) -> Option<f64> {
        match self {
            Domain::Labels(_) => None,
            Domain::Reals(v) => Some(v[index]),
        }
    }

    fn values_distinct(&self) -> bool {
        match self {
            Domain::Labels(v) => {
                let set: BTreeSet<&String> = v.iter().collect();
                set.len() == v.len()
            }
            Domain::Reals(v) => {
                let mut sorted = v.clone();
                sorted.sort_by(f64::total_cmp);
                sorted.windows(2).all(|w| w[0] != w[1])
            }
        }
    }
}

/// A typed node of the game graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub id: VariableId,
    pub kind: VarKind,
    pub domain: Domain,
    /// Owning agent; required for decision and utility variables.
    pub owner: Option<AgentId>,
}

impl Variable {
    pub fn chance(id: impl Into<VariableId>, domain: Domain) -> Self {
        Variable {
            id: id.into(),
            kind: VarKind::Chance,
            domain,
            owner: None,
        }
    }

    pub fn decision(id: impl Into<VariableId>, domain: Domain, owner: impl Into<AgentId>) -> Self {
        Variable {
            id: id.into(),
            kind: VarKind::Decision,
            domain,
            owner: Some(owner.into()),
        }
    }

    pub fn utility(
        id: impl Into<VariableId>,
        values: impl IntoIterator<Item = f64>,
        owner: impl Into<AgentId>,
    ) -> Self {
        Variable {
            id: id.into(),
            kind: VarKind::Utility,
            domain: Domain::reals(values),
            owner: Some(owner.into()),
        }
    }

    fn check(&self) -> Result<(), GraphError> {
        if self.id.as_str().is_empty() {
            return Err(GraphError::EmptyId(self.id.clone()));
        }
        if self.domain.is_empty() {
            return Err(GraphError::InvalidVariable {
                id: self.id.clone(),
                reason: "domain is empty".into(),
            });
        }
        if !self.domain.values_distinct() {
            return Err(GraphError::InvalidVariable {
                id: self.id.clone(),
                reason: "domain values are not distinct".into(),
            });
        }
        let needs_owner = matches!(self.kind, VarKind::Decision | VarKind::Utility);
        if needs_owner != self.owner.is_some() {
            return Err(GraphError::InvalidVariable {
                id: self.id.clone(),
                reason: if needs_owner {
                    "decision and utility variables require an owner".into()
                } else {
                    "chance variables must not have an owner".into()
                },
            });
        }
        if self.kind == VarKind::Utility {
            match &self.domain {
                Domain::Reals(v) if v.iter().all(|x| x.is_finite()) => {}
                Domain::Reals(_) => {
                    return Err(GraphError::InvalidVariable {
                        id: self.id.clone(),
                        reason: "utility values must be finite".into(),
                    })
                }
                Domain::Labels(_) => {
                    return Err(GraphError::InvalidVariable {
                        id: self.id.clone(),
                        reason: "utility domains must be real-valued".into(),
                    })
                }
            }
        } else if matches!(self.domain, Domain::Reals(_)) {
            return Err(GraphError::InvalidVariable {
                id: self.id.clone(),
                reason: "only utility domains may be real-valued".into(),
            });
        }
        Ok(())
    }
}

/// A validated directed acyclic graph over typed variables.
///
/// Construction checks id uniqueness, edge endpoints, acyclicity, and the
/// utility-sink rule. Instances are immutable afterwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dag {
    vars: Vec<Variable>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    by_id: BTreeMap<VariableId, usize>,
}

impl Dag {
    pub fn new(
        vars: Vec<Variable>,
        edges: &[(VariableId, VariableId)],
    ) -> Result<Self, GraphError> {
        let mut by_id = BTreeMap::new();
        for (i, v) in vars.iter().enumerate() {
            v.check()?;
            if by_id.insert(v.id.clone(), i).is_some() {
                return Err(GraphError::DuplicateVariable(v.id.clone()));
            }
        }
        let n = vars.len();
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        for (from, to) in edges {
            let f = *by_id
                .get(from)
                .ok_or_else(|| GraphError::MissingEndpoint(from.clone()))?;
            let t = *by_id
                .get(to)
                .ok_or_else(|| GraphError::MissingEndpoint(to.clone()))?;
            if !children[f].contains(&t) {
                children[f].push(t);
                parents[t].push(f);
            }
        }
        let dag = Dag {
            vars,
            parents,
            children,
            by_id,
        };
        for i in 0..n {
            if dag.vars[i].kind == VarKind::Utility && !dag.children[i].is_empty() {
                return Err(GraphError::UtilityNotSink(dag.vars[i].id.clone()));
            }
        }
        // topological_order reports the witness cycle if one exists
        dag.topological_order()?;
        Ok(dag)
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn variables(&self) -> &[Variable] {
        &self.vars
    }

    pub fn var(&self, index: usize) -> &Variable {
        &self.vars[index]
    }

    pub fn index_of(&self, id: &VariableId) -> Result<usize, GraphError> {
        self.by_id
            .get(id)
            .copied()
            .ok_or_else(|| GraphError::UnknownVariable(id.clone()))
    }

    pub fn contains(&self, id: &VariableId) -> bool {
        self.by_id.contains_key(id)
    }

    pub fn parent_indices(&self, index: usize) -> &[usize] {
        &self.parents[index]
    }

    pub fn child_indices(&self, index: usize) -> &[usize] {
        &self.children[index]
    }

    pub fn edges(&self) -> Vec<(VariableId, VariableId)> {
        let mut out = Vec::new();
        for (i, ch) in self.children.iter().enumerate() {
            for &c in ch {
                out.push((self.vars[i].id.clone(), self.vars[c].id.clone()));
            }
        }
        out.sort();
        out
    }

    /// Decision variable indices in declaration order.
    pub fn decision_indices(&self) -> Vec<usize> {
        (0..self.vars.len())
            .filter(|&i| self.vars[i].kind == VarKind::Decision)
            .collect()
    }

    /// Utility variable indices owned by `agent`.
    pub fn utility_indices_of(&self, agent: &AgentId) -> Vec<usize> {
        (0..self.vars.len())
            .filter(|&i| {
                self.vars[i].kind == VarKind::Utility && self.vars[i].owner.as_ref() == Some(agent)
            })
            .collect()
    }

    /// Topological order of all variables, parents before children.
    ///
    /// Ties are broken by lexicographic id so the order is deterministic.
    pub fn topological_order(&self) -> Result<Vec<VariableId>, GraphError> {
        let n = self.vars.len();
        let mut indegree: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut ready: BTreeSet<(&VariableId, usize)> = (0..n)
            .filter(|&i| indegree[i] == 0)
            .map(|i| (&self.vars[i].id, i))
            .collect();
        let mut order = Vec::with_capacity(n);
        while let Some(&(_, i)) = ready.iter().next() {
            ready.remove(&(&self.vars[i].id, i));
            order.push(i);
            for &c in &self.children[i] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.insert((&self.vars[c].id, c));
                }
            }
        }
        if order.len() != n {
            return Err(GraphError::CycleDetected {
                cycle: self.witness_cycle(&indegree),
            });
        }
        Ok(order.into_iter().map(|i| self.vars[i].id.clone()).collect())
    }

    /// Edge list preserving per-child parent order, for rebuilding graphs
    /// without disturbing context indexing.
    pub(crate) fn edge_list(&self) -> Vec<(VariableId, VariableId)> {
        let mut out = Vec::new();
        for (child, ps) in self.parents.iter().enumerate() {
            for &p in ps {
                out.push((self.vars[p].id.clone(), self.vars[child].id.clone()));
            }
        }
        out
    }

    fn witness_cycle(&self, indegree: &[usize]) -> Vec<String> {
        // Walk parent links inside the residual (still-cyclic) subgraph until
        // a node repeats.
        let start = (0..self.vars.len()).find(|&i| indegree[i] > 0);
        let Some(start) = start else {
            return Vec::new();
        };
        let mut seen = vec![usize::MAX; self.vars.len()];
        let mut path = Vec::new();
        let mut cur = start;
        loop {
            if seen[cur] != usize::MAX {
                let mut cycle: Vec<String> = path[seen[cur]..]
                    .iter()
                    .map(|&i: &usize| self.vars[i].id.0.clone())
                    .collect();
                cycle.push(self.vars[cur].id.0.clone());
                return cycle;
            }
            seen[cur] = path.len();
            path.push(cur);
            cur = *self.parents[cur]
                .iter()
                .find(|&&p| indegree[p] > 0)
                .expect("cyclic node keeps a cyclic parent");
        }
    }

    /// All variables reachable from `v` by directed paths, excluding `v`.
    pub fn descendants(&self, v: &VariableId) -> Result<BTreeSet<VariableId>, GraphError> {
        let start = self.index_of(v)?;
        let mut seen = vec![false; self.vars.len()];
        let mut stack: Vec<usize> = self.children[start].to_vec();
        let mut out = BTreeSet::new();
        while let Some(i) = stack.pop() {
            if std::mem::replace(&mut seen[i], true) {
                continue;
            }
            out.insert(self.vars[i].id.clone());
            stack.extend_from_slice(&self.children[i]);
        }
        Ok(out)
    }

    /// Standard d-separation: true iff every path between `xs` and `ys` is
    /// blocked by `zs`.
    ///
    /// Implemented as the reachability procedure over (node, travel direction)
    /// states: chains and forks are blocked by conditioning, colliders are
    /// opened when the collider or one of its descendants is conditioned on.
    pub fn d_separated(
        &self,
        xs: &BTreeSet<VariableId>,
        ys: &BTreeSet<VariableId>,
        zs: &BTreeSet<VariableId>,
    ) -> Result<bool, GraphError> {
        let resolve = |set: &BTreeSet<VariableId>| -> Result<BTreeSet<usize>, GraphError> {
            set.iter().map(|id| self.index_of(id)).collect()
        };
        let xs = resolve(xs)?;
        let ys = resolve(ys)?;
        let zs = resolve(zs)?;

        // Ancestors of the conditioning set, including the set itself.
        let mut in_z_anc = vec![false; self.vars.len()];
        let mut stack: Vec<usize> = zs.iter().copied().collect();
        while let Some(i) = stack.pop() {
            if std::mem::replace(&mut in_z_anc[i], true) {
                continue;
            }
            stack.extend_from_slice(&self.parents[i]);
        }
        let in_z = |i: usize| zs.contains(&i);

        // (node, arrived-from-child?) states; starting nodes behave as if
        // entered from below so both parents and children are explored.
        const UP: usize = 0;
        const DOWN: usize = 1;
        let mut visited = vec![[false; 2]; self.vars.len()];
        let mut queue: VecDeque<(usize, usize)> = xs.iter().map(|&x| (x, UP)).collect();
        while let Some((node, dir)) = queue.pop_front() {
            if visited[node][dir] {
                continue;
            }
            visited[node][dir] = true;
            if !in_z(node) && ys.contains(&node) {
                return Ok(false);
            }
            if dir == UP && !in_z(node) {
                for &p in &self.parents[node] {
                    queue.push_back((p, UP));
                }
                for &c in &self.children[node] {
                    queue.push_back((c, DOWN));
                }
            } else if dir == DOWN {
                if !in_z(node) {
                    for &c in &self.children[node] {
                        queue.push_back((c, DOWN));
                    }
                }
                if in_z_anc[node] {
                    for &p in &self.parents[node] {
                        queue.push_back((p, UP));
                    }
                }
            }
        }
        Ok(true)
    }

    /// The mechanised graph: one fresh chance node per decision with a single
    /// edge into its decision, no other changes.
    pub fn mechanised(&self) -> Dag {
        let decisions: Vec<VariableId> = self
            .decision_indices()
            .into_iter()
            .map(|i| self.vars[i].id.clone())
            .collect();
        self.mechanised_for(&decisions).0
    }

    /// Mechanised-graph construction for an explicit set of variables,
    /// returning the mapping from each variable to its mechanism node.
    ///
    /// Used by s-reachability (mechanism nodes for decisions) and by the
    /// relevance rendering of intervened decisions (mechanism nodes for the
    /// chance variables a pre-policy fixed).
    pub(crate) fn mechanised_for(
        &self,
        targets: &[VariableId],
    ) -> (Dag, BTreeMap<VariableId, VariableId>) {
        let mut vars = self.vars.clone();
        let mut edges = self.edge_list();
        let mut mapping = BTreeMap::new();
        for id in targets {
            let mut mech = VariableId::new(format!("Π_{id}"));
            while self.by_id.contains_key(&mech) || mapping.values().any(|m| m == &mech) {
                mech = VariableId::new(format!("{}_m", mech.as_str()));
            }
            vars.push(Variable::chance(mech.clone(), Domain::labels(["π"])));
            edges.push((mech.clone(), id.clone()));
            mapping.insert(id.clone(), mech);
        }
        let dag = Dag::new(vars, &edges).expect("mechanising a valid dag preserves validity");
        (dag, mapping)
    }

    /// GraphViz DOT rendering: decisions as rectangles, utilities as
    /// diamonds, chance as ellipses.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph scg {\n");
        for v in &self.vars {
            let shape = match v.kind {
                VarKind::Chance => "ellipse",
                VarKind::Decision => "rectangle",
                VarKind::Utility => "diamond",
            };
            out.push_str(&format!(
                "  \"{}\" [label=\"{} [{}]\", shape={}];\n",
                v.id, v.id, v.kind, shape
            ));
        }
        for (from, to) in self.edges() {
            out.push_str(&format!("  \"{from}\" -> \"{to}\";\n"));
        }
        out.push_str("}\n");
        out
    }
}

/// Convenience: build a set of ids from anything displayable.
pub fn id_set<I, S>(ids: I) -> BTreeSet<VariableId>
where
    I: IntoIterator<Item = S>,
    S: Into<VariableId>,
{
    ids.into_iter().map(Into::into).collect()
}
