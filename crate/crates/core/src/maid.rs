//! Multi-agent influence diagrams with complete information.
//!
//! A [`Maid`] is a DAG over chance, decision and utility variables. Decisions
//! and utilities belong to agents; every non-decision variable has a CPD and
//! decisions are parameterized by [`DecisionRule`]s. Utility variables must be
//! leaves, which lets expected utilities be computed by enumerating the
//! non-utility variables only.
//!
//! Parent lists are kept sorted by name, so a decision context is always the
//! odometer index over the parents in name order.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bn::{self, mixed_digits, mixed_index, Assignment, BayesNet, Cpd, NetError, ValidationErrors, Variable, DEFAULT_TOL};

/// Default cap on the number of pure policies a search may enumerate.
pub const DEFAULT_CAP: u128 = 10_000_000;

/// Decision rows keyed by variable index.
type RowsByVar = BTreeMap<usize, Vec<Vec<f64>>>;

/// Improvement needed before a later candidate displaces an earlier one.
pub(crate) const TIE_EPS: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Chance,
    Decision(String),
    Utility(String),
}

impl NodeKind {
    pub fn owner(&self) -> Option<&str> {
        match self {
            NodeKind::Chance => None,
            NodeKind::Decision(a) | NodeKind::Utility(a) => Some(a),
        }
    }

    pub fn is_decision(&self) -> bool {
        matches!(self, NodeKind::Decision(_))
    }

    pub fn is_utility(&self) -> bool {
        matches!(self, NodeKind::Utility(_))
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum MaidError {
    #[error("invalid network: {0}")]
    Net(#[from] ValidationErrors),
    #[error(transparent)]
    Inference(#[from] NetError),
    #[error("unknown agent `{0}`")]
    UnknownAgent(String),
    #[error("duplicate agent `{0}`")]
    DuplicateAgent(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("`{0}` is not a decision variable")]
    NotADecision(String),
    #[error("utility variable `{0}` has children")]
    UtilityHasChildren(String),
    #[error("decision `{0}` must not carry a CPD")]
    DecisionWithCpd(String),
    #[error("no decision rule for `{0}`")]
    MissingRule(String),
    #[error("invalid rule for `{decision}`: {reason}")]
    InvalidRule { decision: String, reason: String },
    #[error("search space of {size} pure policies exceeds cap {cap}")]
    SearchSpaceTooLarge { size: u128, cap: u128 },
    #[error("`{0}` must list its parents before it")]
    ParentNotDeclared(String),
}

/// One variable of a MAID before canonicalization.
#[derive(Clone, Debug, PartialEq)]
pub struct MaidNode {
    pub variable: Variable,
    pub kind: NodeKind,
    pub parents: Vec<String>,
    /// CPD rows in the order `parents` are listed; `None` for decisions.
    pub rows: Option<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Maid {
    agents: Vec<String>,
    variables: Vec<Variable>,
    kinds: Vec<NodeKind>,
    parents: Vec<Vec<usize>>,
    parent_cards: Vec<Vec<usize>>,
    /// CPD rows over sorted parents; empty for decisions.
    tables: Vec<Vec<Vec<f64>>>,
    index: BTreeMap<String, usize>,
    order: Vec<usize>,
    /// Non-utility variables in topological order.
    chain: Vec<usize>,
    /// Utility variables per agent (aligned with `agents`).
    agent_utilities: Vec<Vec<usize>>,
}

/// Reorders `rows` given over `given` parent order into `sorted` order.
fn reorder_rows(given: &[usize], sorted: &[usize], cards_of: &dyn Fn(usize) -> usize, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let sorted_cards: Vec<usize> = sorted.iter().map(|&p| cards_of(p)).collect();
    let given_cards: Vec<usize> = given.iter().map(|&p| cards_of(p)).collect();
    let n: usize = sorted_cards.iter().product();
    (0..n)
        .map(|ctx| {
            let digits = mixed_digits(ctx, &sorted_cards);
            let by_var: BTreeMap<usize, usize> = sorted.iter().copied().zip(digits).collect();
            let gd: Vec<usize> = given.iter().map(|p| by_var[p]).collect();
            rows[mixed_index(&gd, &given_cards)].clone()
        })
        .collect()
}

impl Maid {
    pub fn builder<S: Into<String>>(agents: impl IntoIterator<Item = S>) -> MaidBuilder {
        MaidBuilder {
            agents: agents.into_iter().map(Into::into).collect(),
            nodes: Vec::new(),
            errors: Vec::new(),
        }
    }

    /// Canonicalizes and validates a MAID.
    pub fn new(agents: Vec<String>, nodes: Vec<MaidNode>) -> Result<Self, MaidError> {
        let mut agent_set = BTreeSet::new();
        for a in &agents {
            if !agent_set.insert(a.clone()) {
                return Err(MaidError::DuplicateAgent(a.clone()));
            }
        }
        let agents: Vec<String> = agent_set.into_iter().collect();

        let mut errors = Vec::new();
        let mut index = BTreeMap::new();
        for (i, n) in nodes.iter().enumerate() {
            if index.insert(n.variable.name.clone(), i).is_some() {
                errors.push(NetError::DuplicateVariable(n.variable.name.clone()));
            }
            if let Some(owner) = n.kind.owner() {
                if !agents.iter().any(|a| a == owner) {
                    return Err(MaidError::UnknownAgent(owner.to_string()));
                }
            }
            let min = if n.kind.is_utility() { 1 } else { 2 };
            if n.variable.domain.len() < min {
                errors.push(NetError::DomainTooSmall(n.variable.name.clone(), min));
            }
            match (&n.kind, &n.variable.utilities) {
                (NodeKind::Utility(_), Some(u)) if u.len() == n.variable.domain.len() => {}
                (NodeKind::Utility(_), _) => errors.push(NetError::UtilityShape(n.variable.name.clone())),
                (_, Some(_)) => errors.push(NetError::UtilityShape(n.variable.name.clone())),
                _ => {}
            }
        }
        if !errors.is_empty() {
            return Err(ValidationErrors(errors).into());
        }

        let mut given_parents = Vec::with_capacity(nodes.len());
        for n in &nodes {
            let mut ps = Vec::new();
            for p in &n.parents {
                match index.get(p) {
                    Some(&pi) => ps.push(pi),
                    None => errors.push(NetError::DanglingParent { child: n.variable.name.clone(), parent: p.clone() }),
                }
            }
            given_parents.push(ps);
        }
        if !errors.is_empty() {
            return Err(ValidationErrors(errors).into());
        }

        for (i, n) in nodes.iter().enumerate() {
            if n.kind.is_utility() {
                if let Some(child) = given_parents.iter().position(|ps| ps.contains(&i)) {
                    let _ = child;
                    return Err(MaidError::UtilityHasChildren(n.variable.name.clone()));
                }
            }
        }

        let variables: Vec<Variable> = nodes.iter().map(|n| n.variable.clone()).collect();
        let kinds: Vec<NodeKind> = nodes.iter().map(|n| n.kind.clone()).collect();
        let cards = |v: usize| variables[v].cardinality();
        let mut parents = Vec::with_capacity(nodes.len());
        let mut tables = Vec::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            let mut sorted = given_parents[i].clone();
            sorted.sort_by(|a, b| variables[*a].name.cmp(&variables[*b].name));
            sorted.dedup();
            let pcards: Vec<usize> = given_parents[i].iter().map(|&p| cards(p)).collect();
            match (&n.kind, &n.rows) {
                (NodeKind::Decision(_), Some(_)) => return Err(MaidError::DecisionWithCpd(n.variable.name.clone())),
                (NodeKind::Decision(_), None) => tables.push(Vec::new()),
                (_, None) => errors.push(NetError::MissingCpd(n.variable.name.clone())),
                (_, Some(rows)) => {
                    let found = bn::check_table(&n.variable.name, n.variable.cardinality(), &pcards, rows, DEFAULT_TOL);
                    if found.is_empty() {
                        tables.push(reorder_rows(&given_parents[i], &sorted, &cards, rows));
                    } else {
                        errors.extend(found);
                        tables.push(Vec::new());
                    }
                }
            }
            parents.push(sorted);
        }
        let names: Vec<String> = variables.iter().map(|v| v.name.clone()).collect();
        let order = match bn::name_stable_topo(&names, &parents) {
            Ok(o) => o,
            Err(stuck) => {
                errors.push(NetError::CycleDetected(stuck));
                Vec::new()
            }
        };
        if !errors.is_empty() {
            return Err(ValidationErrors(errors).into());
        }

        let parent_cards = parents.iter().map(|ps| ps.iter().map(|&p| cards(p)).collect()).collect();
        let chain = order.iter().copied().filter(|&v| !kinds[v].is_utility()).collect();
        let agent_utilities = agents
            .iter()
            .map(|a| order.iter().copied().filter(|&v| kinds[v] == NodeKind::Utility(a.clone())).collect())
            .collect();
        Ok(Maid { agents, variables, kinds, parents, parent_cards, tables, index, order, chain, agent_utilities })
    }

    pub fn agents(&self) -> &[String] {
        &self.agents
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, name: &str) -> Option<&Variable> {
        self.index.get(name).map(|&i| &self.variables[i])
    }

    pub fn kind(&self, name: &str) -> Option<&NodeKind> {
        self.index.get(name).map(|&i| &self.kinds[i])
    }

    /// Parent names in sorted order.
    pub fn parents(&self, name: &str) -> Option<Vec<&str>> {
        self.index
            .get(name)
            .map(|&i| self.parents[i].iter().map(|&p| self.variables[p].name.as_str()).collect())
    }

    /// Canonical node list: variables in declaration order, parents sorted.
    pub fn nodes(&self) -> Vec<MaidNode> {
        self.variables
            .iter()
            .enumerate()
            .map(|(i, v)| MaidNode {
                variable: v.clone(),
                kind: self.kinds[i].clone(),
                parents: self.parents[i].iter().map(|&p| self.variables[p].name.clone()).collect(),
                rows: (!self.kinds[i].is_decision()).then(|| self.tables[i].clone()),
            })
            .collect()
    }

    /// CPD rows over sorted parents; `None` for decisions.
    pub fn table(&self, name: &str) -> Option<&[Vec<f64>]> {
        let &i = self.index.get(name)?;
        if self.kinds[i].is_decision() {
            None
        } else {
            Some(&self.tables[i])
        }
    }

    /// Every variable after its parents, ties broken by name.
    pub fn topological_order(&self) -> Vec<&str> {
        self.order.iter().map(|&i| self.variables[i].name.as_str()).collect()
    }

    /// Decision names sorted.
    pub fn decisions(&self) -> Vec<&str> {
        let mut out: Vec<&str> = self
            .kinds
            .iter()
            .enumerate()
            .filter(|(_, k)| k.is_decision())
            .map(|(i, _)| self.variables[i].name.as_str())
            .collect();
        out.sort();
        out
    }

    pub fn decisions_of(&self, agent: &str) -> Vec<&str> {
        self.decisions().into_iter().filter(|d| self.kind(d).and_then(NodeKind::owner) == Some(agent)).collect()
    }

    pub fn utilities_of(&self, agent: &str) -> Vec<&str> {
        self.agent_index(agent)
            .map(|a| self.agent_utilities[a].iter().map(|&u| self.variables[u].name.as_str()).collect())
            .unwrap_or_default()
    }

    pub fn owner(&self, name: &str) -> Option<&str> {
        self.kind(name).and_then(NodeKind::owner)
    }

    pub fn num_contexts(&self, name: &str) -> Option<usize> {
        self.index.get(name).map(|&i| self.parent_cards[i].iter().product())
    }

    /// Parent assignment for context `ctx` of variable `name`.
    pub fn context(&self, name: &str, ctx: usize) -> Assignment {
        let i = self.index[name];
        let digits = mixed_digits(ctx, &self.parent_cards[i]);
        self.parents[i]
            .iter()
            .zip(digits)
            .map(|(&p, k)| (self.variables[p].name.clone(), self.variables[p].domain[k].clone()))
            .collect()
    }

    /// Index of the context matching `a` on the parents of `name`.
    pub fn context_index(&self, name: &str, a: &Assignment) -> Option<usize> {
        let i = *self.index.get(name)?;
        let mut digits = Vec::with_capacity(self.parents[i].len());
        for &p in &self.parents[i] {
            let var = &self.variables[p];
            digits.push(var.position(a.get(&var.name)?)?);
        }
        Some(mixed_index(&digits, &self.parent_cards[i]))
    }

    pub(crate) fn kinds_at(&self, v: usize) -> &NodeKind {
        &self.kinds[v]
    }

    pub(crate) fn var_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub(crate) fn agent_index(&self, agent: &str) -> Option<usize> {
        self.agents.iter().position(|a| a == agent)
    }

    pub(crate) fn ctx_of(&self, var: usize, values: &[usize]) -> usize {
        let digits: Vec<usize> = self.parents[var].iter().map(|&p| values[p]).collect();
        mixed_index(&digits, &self.parent_cards[var])
    }

    /// Returns a copy with `f` applied to every utility value of `agent`.
    pub fn map_utilities(&self, agent: &str, f: impl Fn(f64) -> f64) -> Self {
        let mut out = self.clone();
        for (v, k) in out.variables.iter_mut().zip(&self.kinds) {
            if *k == NodeKind::Utility(agent.to_string()) {
                if let Some(u) = v.utilities.as_mut() {
                    u.iter_mut().for_each(|x| *x = f(*x));
                }
            }
        }
        out
    }

    /// Resolves a profile into per-variable rows, checking shapes.
    pub(crate) fn rule_table<'a>(&self, p: &'a PolicyProfile) -> Result<Vec<Option<&'a [Vec<f64>]>>, MaidError> {
        let mut table = vec![None; self.variables.len()];
        for d in self.decisions() {
            let i = self.index[d];
            let rule = p.get(d).ok_or_else(|| MaidError::MissingRule(d.to_string()))?;
            self.check_rule(rule)?;
            table[i] = Some(rule.rows.as_slice());
        }
        Ok(table)
    }

    pub(crate) fn check_rule(&self, rule: &DecisionRule) -> Result<(), MaidError> {
        let i = *self.index.get(&rule.decision).ok_or_else(|| MaidError::UnknownVariable(rule.decision.clone()))?;
        if !self.kinds[i].is_decision() {
            return Err(MaidError::NotADecision(rule.decision.clone()));
        }
        let found = bn::check_table(
            &rule.decision,
            self.variables[i].cardinality(),
            &self.parent_cards[i],
            &rule.rows,
            DEFAULT_TOL,
        );
        match found.first() {
            None => Ok(()),
            Some(e) => Err(MaidError::InvalidRule { decision: rule.decision.clone(), reason: e.to_string() }),
        }
    }

    /// Visits every nonzero-probability assignment of the non-utility
    /// variables. `rules[v]` must be set for every decision `v`.
    pub(crate) fn enumerate(&self, rules: &[Option<&[Vec<f64>]>], visit: &mut dyn FnMut(&[usize], f64)) {
        let mut values = vec![0; self.variables.len()];
        self.walk(0, 1.0, rules, &mut values, visit);
    }

    fn walk(
        &self,
        depth: usize,
        prob: f64,
        rules: &[Option<&[Vec<f64>]>],
        values: &mut Vec<usize>,
        visit: &mut dyn FnMut(&[usize], f64),
    ) {
        if depth == self.chain.len() {
            visit(values, prob);
            return;
        }
        let v = self.chain[depth];
        let ctx = self.ctx_of(v, values);
        let row: &[f64] = match rules[v] {
            Some(rows) => &rows[ctx],
            None => &self.tables[v][ctx],
        };
        for (k, &p) in row.iter().enumerate() {
            if p > 0.0 {
                values[v] = k;
                self.walk(depth + 1, prob * p, rules, values, visit);
            }
        }
    }

    /// Expected utility of agent `a` given that decision `d` observes context
    /// `ctx` and plays `action`.
    ///
    /// Zero entries of decision rows tremble with weight `ε/|dom|`; the result
    /// is the limit as `ε → 0`, so it equals ordinary conditioning whenever
    /// the context has positive probability. `None` if chance alone rules the
    /// context out.
    pub(crate) fn conditional_utility(
        &self,
        rules: &[Option<&[Vec<f64>]>],
        d: usize,
        ctx: usize,
        action: usize,
        a: usize,
    ) -> Option<f64> {
        struct Acc {
            order: usize,
            mass: f64,
            weighted: f64,
        }
        fn walk(
            m: &Maid,
            depth: usize,
            prob: f64,
            trembles: usize,
            rules: &[Option<&[Vec<f64>]>],
            target: (usize, usize, usize, usize),
            values: &mut Vec<usize>,
            acc: &mut Acc,
        ) {
            let (d, ctx, action, a) = target;
            if trembles > acc.order {
                return;
            }
            if depth == m.chain.len() {
                if trembles < acc.order {
                    *acc = Acc { order: trembles, mass: 0.0, weighted: 0.0 };
                }
                acc.mass += prob;
                acc.weighted += prob * m.utility_at(a, values);
                return;
            }
            let v = m.chain[depth];
            let here = m.ctx_of(v, values);
            if v == d {
                if here == ctx {
                    values[v] = action;
                    walk(m, depth + 1, prob, trembles, rules, target, values, acc);
                }
                return;
            }
            match rules[v] {
                Some(rows) => {
                    let row = &rows[here];
                    let card = row.len() as f64;
                    for (k, &p) in row.iter().enumerate() {
                        values[v] = k;
                        if p > 0.0 {
                            walk(m, depth + 1, prob * p, trembles, rules, target, values, acc);
                        } else {
                            walk(m, depth + 1, prob / card, trembles + 1, rules, target, values, acc);
                        }
                    }
                }
                None => {
                    for (k, &p) in m.tables[v][here].iter().enumerate() {
                        if p > 0.0 {
                            values[v] = k;
                            walk(m, depth + 1, prob * p, trembles, rules, target, values, acc);
                        }
                    }
                }
            }
        }
        let mut acc = Acc { order: usize::MAX, mass: 0.0, weighted: 0.0 };
        let mut values = vec![0; self.variables.len()];
        walk(self, 0, 1.0, 0, rules, (d, ctx, action, a), &mut values, &mut acc);
        (acc.mass > 0.0).then(|| acc.weighted / acc.mass)
    }

    /// Expected utility of agent index `a` given the non-utility values.
    pub(crate) fn utility_at(&self, a: usize, values: &[usize]) -> f64 {
        self.agent_utilities[a]
            .iter()
            .map(|&u| {
                let row = &self.tables[u][self.ctx_of(u, values)];
                row.iter().enumerate().map(|(k, p)| p * self.variables[u].value(k)).sum::<f64>()
            })
            .sum()
    }

    /// Expected utilities of every agent (aligned with [`Maid::agents`]).
    pub(crate) fn utilities_with(&self, rules: &[Option<&[Vec<f64>]>]) -> Vec<f64> {
        let mut totals = vec![0.0; self.agents.len()];
        self.enumerate(rules, &mut |values, p| {
            for (a, t) in totals.iter_mut().enumerate() {
                *t += p * self.utility_at(a, values);
            }
        });
        totals
    }

    /// Contexts of each decision with positive probability under `rules`.
    pub(crate) fn reachable_with(&self, rules: &[Option<&[Vec<f64>]>]) -> BTreeMap<usize, BTreeSet<usize>> {
        let decisions: Vec<usize> = self.decisions().iter().map(|d| self.index[*d]).collect();
        let mut out: BTreeMap<usize, BTreeSet<usize>> = decisions.iter().map(|&d| (d, BTreeSet::new())).collect();
        self.enumerate(rules, &mut |values, _| {
            for &d in &decisions {
                out.get_mut(&d).unwrap().insert(self.ctx_of(d, values));
            }
        });
        out
    }

    /// Uniform rows for decision `name`.
    pub(crate) fn uniform_rows(&self, var: usize) -> Vec<Vec<f64>> {
        let n: usize = self.parent_cards[var].iter().product();
        let k = self.variables[var].cardinality();
        vec![vec![1.0 / k as f64; k]; n]
    }

    /// Bayesian network with decision CPDs taken from `p`.
    pub fn induced_network(&self, p: &PolicyProfile) -> Result<BayesNet, MaidError> {
        let rules = self.rule_table(p)?;
        let mut cpds = Vec::with_capacity(self.variables.len());
        for (i, v) in self.variables.iter().enumerate() {
            let parents: Vec<String> = self.parents[i].iter().map(|&q| self.variables[q].name.clone()).collect();
            let rows = match rules[i] {
                Some(r) => r.to_vec(),
                None => self.tables[i].clone(),
            };
            cpds.push(Cpd::new(v.name.clone(), parents, rows));
        }
        Ok(BayesNet::new(self.variables.clone(), cpds)?)
    }

    /// Sum of the expected values of `agent`'s utility variables.
    pub fn expected_utility(&self, p: &PolicyProfile, agent: &str) -> Result<f64, MaidError> {
        let a = self.agent_index(agent).ok_or_else(|| MaidError::UnknownAgent(agent.to_string()))?;
        let rules = self.rule_table(p)?;
        let mut total = 0.0;
        self.enumerate(&rules, &mut |values, prob| total += prob * self.utility_at(a, values));
        Ok(total)
    }

    pub fn expected_utilities(&self, p: &PolicyProfile) -> Result<BTreeMap<String, f64>, MaidError> {
        let rules = self.rule_table(p)?;
        Ok(self.agents.iter().cloned().zip(self.utilities_with(&rules)).collect())
    }

    /// Decision/context slots of `decisions`, in enumeration order.
    fn slots(&self, decisions: &[&str]) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for d in decisions {
            let i = self.index[*d];
            let n: usize = self.parent_cards[i].iter().product();
            out.extend((0..n).map(|c| (i, c)));
        }
        out
    }

    /// Action indices of `var` sorted by label.
    pub(crate) fn sorted_actions(&self, var: usize) -> Vec<usize> {
        let dom = &self.variables[var].domain;
        let mut idx: Vec<usize> = (0..dom.len()).collect();
        idx.sort_by(|a, b| dom[*a].cmp(&dom[*b]));
        idx
    }

    fn count_pure(&self, slots: &[(usize, usize)]) -> u128 {
        slots
            .iter()
            .map(|&(v, _)| self.variables[v].cardinality() as u128)
            .try_fold(1u128, |acc, k| acc.checked_mul(k))
            .unwrap_or(u128::MAX)
    }

    /// Enumerates pure assignments over `slots` in lexicographic order,
    /// writing each into `rows` before calling `visit`.
    fn for_each_pure(
        &self,
        slots: &[(usize, usize)],
        rows: &mut RowsByVar,
        visit: &mut dyn FnMut(&RowsByVar),
    ) {
        let actions: Vec<Vec<usize>> = slots.iter().map(|&(v, _)| self.sorted_actions(v)).collect();
        let mut digits = vec![0usize; slots.len()];
        loop {
            for (s, &(v, c)) in slots.iter().enumerate() {
                let k = self.variables[v].cardinality();
                let mut row = vec![0.0; k];
                row[actions[s][digits[s]]] = 1.0;
                rows.get_mut(&v).expect("slot rows")[c] = row;
            }
            visit(rows);
            let mut pos = slots.len();
            loop {
                if pos == 0 {
                    return;
                }
                pos -= 1;
                digits[pos] += 1;
                if digits[pos] < actions[pos].len() {
                    break;
                }
                digits[pos] = 0;
            }
        }
    }

    /// Best pure response of `agent` to the other agents' rules in `others`.
    ///
    /// Enumerates every pure policy of `agent`; the first maximizer in
    /// (decision, context, action-label) order wins ties.
    pub fn best_response(&self, others: &PolicyProfile, agent: &str, cap: u128) -> Result<BestResponse, MaidError> {
        let a = self.agent_index(agent).ok_or_else(|| MaidError::UnknownAgent(agent.to_string()))?;
        let own = self.decisions_of(agent);
        let slots = self.slots(&own);
        let size = self.count_pure(&slots);
        if size > cap {
            return Err(MaidError::SearchSpaceTooLarge { size, cap });
        }
        let mut fixed: RowsByVar = BTreeMap::new();
        for d in self.decisions() {
            if own.contains(&d) {
                continue;
            }
            let rule = others.get(d).ok_or_else(|| MaidError::MissingRule(d.to_string()))?;
            self.check_rule(rule)?;
            fixed.insert(self.index[d], rule.rows.clone());
        }
        let mut rows: RowsByVar = own.iter().map(|d| (self.index[*d], self.uniform_rows(self.index[*d]))).collect();
        let mut best: Option<(f64, RowsByVar)> = None;
        self.for_each_pure(&slots, &mut rows, &mut |candidate| {
            let mut table: Vec<Option<&[Vec<f64>]>> = vec![None; self.variables.len()];
            for (v, r) in fixed.iter().chain(candidate.iter()) {
                table[*v] = Some(r.as_slice());
            }
            let mut value = 0.0;
            self.enumerate(&table, &mut |values, p| value += p * self.utility_at(a, values));
            if best.as_ref().is_none_or(|(b, _)| value > b + TIE_EPS) {
                best = Some((value, candidate.clone()));
            }
        });
        let (value, rows) = best.expect("at least one pure policy");
        let policy = rows
            .into_iter()
            .map(|(v, r)| DecisionRule::new(self.variables[v].name.clone(), r))
            .collect();
        Ok(BestResponse { policy, value })
    }

    /// Nash check with per-agent regret (best-response value minus achieved value).
    pub fn is_nash(&self, p: &PolicyProfile, tol: f64) -> Result<NashReport, MaidError> {
        self.is_nash_capped(p, tol, DEFAULT_CAP)
    }

    pub fn is_nash_capped(&self, p: &PolicyProfile, tol: f64, cap: u128) -> Result<NashReport, MaidError> {
        let values = self.expected_utilities(p)?;
        let mut regrets = BTreeMap::new();
        for agent in &self.agents {
            let br = self.best_response(p, agent, cap)?;
            regrets.insert(agent.clone(), br.value - values[agent]);
        }
        let is_nash = regrets.values().all(|r| *r <= tol);
        Ok(NashReport { is_nash, values, regrets })
    }

    /// Every pure Nash equilibrium, in lexicographic profile order.
    pub fn find_pure_nash(&self, cap: u128) -> Result<Vec<PolicyProfile>, MaidError> {
        let all = self.decisions();
        let slots = self.slots(&all);
        let size = self.count_pure(&slots);
        if size > cap {
            return Err(MaidError::SearchSpaceTooLarge { size, cap });
        }
        let mut rows: RowsByVar = all.iter().map(|d| (self.index[*d], self.uniform_rows(self.index[*d]))).collect();
        let mut found = Vec::new();
        let mut failure = None;
        self.for_each_pure(&slots, &mut rows, &mut |candidate| {
            if failure.is_some() {
                return;
            }
            let profile: PolicyProfile = candidate
                .iter()
                .map(|(v, r)| DecisionRule::new(self.variables[*v].name.clone(), r.clone()))
                .collect();
            match self.is_nash_capped(&profile, DEFAULT_TOL, cap) {
                Ok(report) if report.is_nash => found.push(profile),
                Ok(_) => {}
                Err(e) => failure = Some(e),
            }
        });
        match failure {
            Some(e) => Err(e),
            None => Ok(found),
        }
    }

    /// Every pure profile over `decisions` (all decisions when `None`), in
    /// lexicographic order.
    pub fn pure_profiles(&self, decisions: Option<&[&str]>, cap: u128) -> Result<Vec<PolicyProfile>, MaidError> {
        let all = self.decisions();
        let chosen: Vec<&str> = match decisions {
            Some(ds) => {
                for d in ds {
                    if !all.contains(d) {
                        return Err(MaidError::NotADecision(d.to_string()));
                    }
                }
                all.iter().copied().filter(|d| ds.contains(d)).collect()
            }
            None => all,
        };
        let slots = self.slots(&chosen);
        let size = self.count_pure(&slots);
        if size > cap {
            return Err(MaidError::SearchSpaceTooLarge { size, cap });
        }
        let mut rows: RowsByVar =
            chosen.iter().map(|d| (self.index[*d], self.uniform_rows(self.index[*d]))).collect();
        let mut out = Vec::new();
        self.for_each_pure(&slots, &mut rows, &mut |candidate| {
            out.push(
                candidate
                    .iter()
                    .map(|(v, r)| DecisionRule::new(self.variables[*v].name.clone(), r.clone()))
                    .collect(),
            );
        });
        Ok(out)
    }

    /// Perfect recall for `agent`, with a witness ordering when it holds.
    pub fn has_perfect_recall(&self, agent: &str) -> PerfectRecall {
        let mut ds: Vec<usize> = self.decisions_of(agent).iter().map(|d| self.index[*d]).collect();
        ds.sort_by_key(|&d| (self.parents[d].len(), self.variables[d].name.clone()));
        for (j, &dj) in ds.iter().enumerate() {
            for &dk in &ds[j + 1..] {
                let ok = self.parents[dk].contains(&dj) && self.parents[dj].iter().all(|p| self.parents[dk].contains(p));
                if !ok {
                    return PerfectRecall { holds: false, ordering: None };
                }
            }
        }
        PerfectRecall { holds: true, ordering: Some(ds.iter().map(|&d| self.variables[d].name.clone()).collect()) }
    }

    pub fn is_perfect_recall_game(&self) -> bool {
        self.agents.iter().all(|a| self.has_perfect_recall(a).holds)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PerfectRecall {
    pub holds: bool,
    pub ordering: Option<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BestResponse {
    pub policy: PolicyProfile,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NashReport {
    pub is_nash: bool,
    pub values: BTreeMap<String, f64>,
    pub regrets: BTreeMap<String, f64>,
}

/// CPD of one decision: one row per context (sorted-parent odometer order),
/// each row a distribution over the decision's domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionRule {
    pub decision: String,
    pub rows: Vec<Vec<f64>>,
}

impl DecisionRule {
    pub fn new(decision: impl Into<String>, rows: Vec<Vec<f64>>) -> Self {
        DecisionRule { decision: decision.into(), rows }
    }

    pub fn uniform(m: &Maid, decision: &str) -> Result<Self, MaidError> {
        let i = m.var_index(decision).ok_or_else(|| MaidError::UnknownVariable(decision.to_string()))?;
        if !m.kinds[i].is_decision() {
            return Err(MaidError::NotADecision(decision.to_string()));
        }
        Ok(DecisionRule::new(decision, m.uniform_rows(i)))
    }

    /// Deterministic rule choosing `choose(context)` in every context.
    pub fn pure(m: &Maid, decision: &str, choose: impl Fn(&Assignment) -> String) -> Result<Self, MaidError> {
        Self::mixed(m, decision, |ctx| {
            let pick = choose(ctx);
            let var = m.variable(decision).unwrap();
            var.domain.iter().map(|d| if *d == pick { 1.0 } else { 0.0 }).collect()
        })
    }

    /// Rule whose row at each context is `row(context)`.
    pub fn mixed(m: &Maid, decision: &str, row: impl Fn(&Assignment) -> Vec<f64>) -> Result<Self, MaidError> {
        let i = m.var_index(decision).ok_or_else(|| MaidError::UnknownVariable(decision.to_string()))?;
        if !m.kinds[i].is_decision() {
            return Err(MaidError::NotADecision(decision.to_string()));
        }
        let n = m.num_contexts(decision).unwrap();
        let rule = DecisionRule::new(decision, (0..n).map(|c| row(&m.context(decision, c))).collect());
        m.check_rule(&rule)?;
        Ok(rule)
    }

    /// The action label chosen with probability one at `ctx`, if any.
    pub fn pure_action<'m>(&self, m: &'m Maid, ctx: usize) -> Option<&'m str> {
        let var = m.variable(&self.decision)?;
        let row = self.rows.get(ctx)?;
        row.iter().position(|p| (*p - 1.0).abs() < DEFAULT_TOL).map(|k| var.domain[k].as_str())
    }
}

/// One rule per decision variable, keyed by decision name.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PolicyProfile(pub BTreeMap<String, DecisionRule>);

impl PolicyProfile {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, rule: DecisionRule) -> Self {
        self.insert(rule);
        self
    }

    pub fn insert(&mut self, rule: DecisionRule) {
        self.0.insert(rule.decision.clone(), rule);
    }

    pub fn get(&self, decision: &str) -> Option<&DecisionRule> {
        self.0.get(decision)
    }

    /// Rules of `agent` only (`π^i`).
    pub fn of_agent(&self, m: &Maid, agent: &str) -> PolicyProfile {
        self.0.values().filter(|r| m.owner(&r.decision) == Some(agent)).cloned().collect()
    }

    /// Rules of everyone except `agent` (`π^{-i}`).
    pub fn without_agent(&self, m: &Maid, agent: &str) -> PolicyProfile {
        self.0.values().filter(|r| m.owner(&r.decision) != Some(agent)).cloned().collect()
    }

    /// `self` with every rule of `other` added or replaced.
    pub fn merged(&self, other: &PolicyProfile) -> PolicyProfile {
        let mut out = self.clone();
        for r in other.0.values() {
            out.insert(r.clone());
        }
        out
    }
}

impl FromIterator<DecisionRule> for PolicyProfile {
    fn from_iter<T: IntoIterator<Item = DecisionRule>>(iter: T) -> Self {
        PolicyProfile(iter.into_iter().map(|r| (r.decision.clone(), r)).collect())
    }
}

/// Formats a utility value as an outcome label.
pub(crate) fn value_label(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else {
        format!("{v}")
    }
}

/// Builder accumulating nodes; CPD-by-closure helpers need their parents
/// declared first.
#[derive(Clone, Debug)]
pub struct MaidBuilder {
    agents: Vec<String>,
    nodes: Vec<MaidNode>,
    errors: Vec<MaidError>,
}

impl MaidBuilder {
    fn parent_contexts(&mut self, name: &str, parents: &[String]) -> Option<Vec<Assignment>> {
        let mut domains = Vec::new();
        for p in parents {
            match self.nodes.iter().find(|n| &n.variable.name == p) {
                Some(n) => domains.push((p.clone(), n.variable.domain.clone())),
                None => {
                    self.errors.push(MaidError::ParentNotDeclared(name.to_string()));
                    return None;
                }
            }
        }
        let cards: Vec<usize> = domains.iter().map(|(_, d)| d.len()).collect();
        let n: usize = cards.iter().product();
        Some(
            (0..n)
                .map(|i| {
                    mixed_digits(i, &cards)
                        .into_iter()
                        .zip(&domains)
                        .map(|(k, (p, d))| (p.clone(), d[k].clone()))
                        .collect()
                })
                .collect(),
        )
    }

    fn names<S: Into<String>>(xs: impl IntoIterator<Item = S>) -> Vec<String> {
        xs.into_iter().map(Into::into).collect()
    }

    pub fn node(mut self, node: MaidNode) -> Self {
        self.nodes.push(node);
        self
    }

    /// Chance variable with explicit rows (parents in the listed order).
    pub fn chance<S: Into<String>, P: Into<String>>(
        self,
        name: &str,
        domain: impl IntoIterator<Item = S>,
        parents: impl IntoIterator<Item = P>,
        rows: Vec<Vec<f64>>,
    ) -> Self {
        self.node(MaidNode {
            variable: Variable::new(name, domain),
            kind: NodeKind::Chance,
            parents: Self::names(parents),
            rows: Some(rows),
        })
    }

    pub fn chance_fn<S: Into<String>, P: Into<String>>(
        mut self,
        name: &str,
        domain: impl IntoIterator<Item = S>,
        parents: impl IntoIterator<Item = P>,
        row: impl Fn(&Assignment) -> Vec<f64>,
    ) -> Self {
        let parents = Self::names(parents);
        let rows = match self.parent_contexts(name, &parents) {
            Some(ctxs) => ctxs.iter().map(row).collect(),
            None => return self,
        };
        self.chance(name, domain, parents, rows)
    }

    pub fn decision<S: Into<String>, P: Into<String>>(
        self,
        name: &str,
        agent: &str,
        domain: impl IntoIterator<Item = S>,
        parents: impl IntoIterator<Item = P>,
    ) -> Self {
        self.node(MaidNode {
            variable: Variable::new(name, domain),
            kind: NodeKind::Decision(agent.to_string()),
            parents: Self::names(parents),
            rows: None,
        })
    }

    /// Utility variable with explicit `(label, value)` outcomes and rows.
    pub fn utility<S: Into<String>, P: Into<String>>(
        self,
        name: &str,
        agent: &str,
        outcomes: impl IntoIterator<Item = (S, f64)>,
        parents: impl IntoIterator<Item = P>,
        rows: Vec<Vec<f64>>,
    ) -> Self {
        self.node(MaidNode {
            variable: Variable::utility(name, outcomes),
            kind: NodeKind::Utility(agent.to_string()),
            parents: Self::names(parents),
            rows: Some(rows),
        })
    }

    /// Deterministic utility: outcomes are the distinct values of `value`
    /// in ascending order, rows are one-hot.
    pub fn utility_fn<P: Into<String>>(
        mut self,
        name: &str,
        agent: &str,
        parents: impl IntoIterator<Item = P>,
        value: impl Fn(&Assignment) -> f64,
    ) -> Self {
        let parents = Self::names(parents);
        let Some(ctxs) = self.parent_contexts(name, &parents) else {
            return self;
        };
        let vals: Vec<f64> = ctxs.iter().map(value).collect();
        let mut distinct = vals.clone();
        distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
        distinct.dedup();
        let rows = vals
            .iter()
            .map(|v| distinct.iter().map(|d| if d == v { 1.0 } else { 0.0 }).collect())
            .collect();
        let outcomes: Vec<(String, f64)> = distinct.iter().map(|&d| (value_label(d), d)).collect();
        self.utility(name, agent, outcomes, parents, rows)
    }

    pub fn build(self) -> Result<Maid, MaidError> {
        if let Some(e) = self.errors.into_iter().next() {
            return Err(e);
        }
        Maid::new(self.agents, self.nodes)
    }
}
