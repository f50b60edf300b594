//! Finite-depth belief stacks and the recursive best-response solution.
//!
//! A [`DepthStack`] is an acyclic set of subjective MAIDs. A depth-0 node
//! leaves at most one agent free; a depth-k node holds beliefs about nodes of
//! depth below k. Reducing the stack replaces, in every depth-1 node, each
//! believing agent's beliefs with that agent's best response to them; after k
//! reductions every decision of the objective node is assigned.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::bn::{Assignment, NetError};
use crate::ii_maid::{info_set_of, is_encounterable, IiError, IiMaid, IiPolicyProfile, InformationSet, SubjectiveMaid};
use crate::maid::{DecisionRule, Maid, MaidError, NodeKind, PolicyProfile, TIE_EPS};

/// Tremble weight used by the independent argmax audit.
const AUDIT_EPS: f64 = 1e-9;
const AUDIT_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum DepthError {
    #[error("belief references form a cycle through {0:?}")]
    CyclicBeliefs(Vec<String>),
    #[error("node `{node}`: {reason}")]
    DepthContractViolation { node: String, reason: String },
    #[error("node `{node}` has depth {depth}, not 1")]
    NotDepthOne { node: String, depth: usize },
    #[error("`{agent}` holds no beliefs in `{node}`")]
    NoBeliefs { node: String, agent: String },
    #[error("believed node `{node}` leaves agents other than `{agent}` free")]
    NotDepthZero { node: String, agent: String },
    #[error("stack is not open-minded: {} unmatched information set(s)", .0.len())]
    NotOpenMinded(Vec<OpenMindedViolation>),
    #[error("no final information set for `{agent}` (perfect recall required)")]
    NoFinalInformationSet { agent: String },
    #[error("node `{0}` lacks perfect recall")]
    PerfectRecallRequired(String),
    #[error(transparent)]
    Ii(#[from] IiError),
    #[error(transparent)]
    Maid(#[from] MaidError),
}

/// A MAID in which some decisions already follow fixed rules.
#[derive(Clone, Debug, PartialEq)]
pub struct PartialPostPolicyMaid {
    base: Maid,
    xi: PolicyProfile,
}

impl PartialPostPolicyMaid {
    pub fn new(base: Maid, xi: PolicyProfile) -> Result<Self, MaidError> {
        for rule in xi.0.values() {
            base.check_rule(rule)?;
        }
        Ok(PartialPostPolicyMaid { base, xi })
    }

    pub fn base(&self) -> &Maid {
        &self.base
    }

    pub fn xi(&self) -> &PolicyProfile {
        &self.xi
    }

    pub fn is_fixed(&self, decision: &str) -> bool {
        self.xi.get(decision).is_some()
    }

    /// Decisions of `agent` not yet assigned a rule.
    pub fn free_decisions_of(&self, agent: &str) -> Vec<&str> {
        self.base.decisions_of(agent).into_iter().filter(|d| !self.is_fixed(d)).collect()
    }

    /// Agents owning at least one unassigned decision.
    pub fn free_agents(&self) -> Vec<&str> {
        self.base
            .agents()
            .iter()
            .map(String::as_str)
            .filter(|a| !self.free_decisions_of(a).is_empty())
            .collect()
    }

    /// Copy with `rules` added to (or replacing entries of) the fixed rules.
    pub fn with_rules(&self, rules: &PolicyProfile) -> Result<Self, MaidError> {
        Self::new(self.base.clone(), self.xi.merged(rules))
    }

    /// The base MAID with every fixed decision turned into a chance node
    /// following its rule.
    pub fn collapsed(&self) -> Maid {
        if self.xi.0.is_empty() {
            return self.base.clone();
        }
        let nodes = self
            .base
            .nodes()
            .into_iter()
            .map(|mut n| {
                if let Some(rule) = self.xi.get(&n.variable.name) {
                    n.kind = NodeKind::Chance;
                    n.rows = Some(rule.rows.clone());
                }
                n
            })
            .collect();
        Maid::new(self.base.agents().to_vec(), nodes).expect("rules were validated against the base MAID")
    }

    /// The free decision of `set.agent` at which `set` is encounterable, and
    /// the context index it denotes.
    pub(crate) fn locate(&self, set: &InformationSet) -> Option<(&str, usize)> {
        let m = &self.base;
        self.free_decisions_of(&set.agent).into_iter().find_map(|d| {
            let parents = m.parents(d)?;
            if parents.len() != set.observation.len() || !parents.iter().zip(&set.observation).all(|(p, (n, _))| p == n) {
                return None;
            }
            if info_set_actions(m, d) != set.actions {
                return None;
            }
            let a: Assignment = set.observation.iter().cloned().collect();
            m.context_index(d, &a).map(|c| (d, c))
        })
    }
}

impl From<Maid> for PartialPostPolicyMaid {
    fn from(base: Maid) -> Self {
        PartialPostPolicyMaid { base, xi: PolicyProfile::new() }
    }
}

fn info_set_actions(m: &Maid, d: &str) -> Vec<String> {
    let mut a = m.variable(d).unwrap().domain.clone();
    a.sort();
    a
}

/// Contexts of every free decision with positive probability when every
/// decision is played uniformly.
pub(crate) fn possible_contexts(model: &PartialPostPolicyMaid) -> BTreeMap<String, BTreeSet<usize>> {
    let m = model.base();
    let rows: Vec<Vec<Vec<f64>>> =
        (0..m.variables().len()).map(|v| if m.kinds_at(v).is_decision() { m.uniform_rows(v) } else { vec![] }).collect();
    let table: Vec<Option<&[Vec<f64>]>> =
        (0..m.variables().len()).map(|v| m.kinds_at(v).is_decision().then(|| rows[v].as_slice())).collect();
    m.reachable_with(&table)
        .into_iter()
        .map(|(v, set)| (m.variables()[v].name.clone(), set))
        .filter(|(d, _)| !model.is_fixed(d))
        .collect()
}

/// How a rule entry came about.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    /// Maximizer of the belief-weighted conditional expected utility.
    Argmax,
    /// Least action at a context no believed model can produce.
    Default,
}

/// One assignment made while solving a stack.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceEntry {
    pub step: usize,
    pub node: String,
    pub agent: String,
    pub info_set: InformationSet,
    pub action: String,
    pub source: Source,
    /// Objective value of each action (sorted action order); empty for defaults.
    pub values: Vec<f64>,
    /// Whether an independent recomputation confirms the argmax.
    pub audited: bool,
}

/// A believed model with the responding agent's weight on it.
#[derive(Clone, Debug)]
pub(crate) struct Believed {
    pub id: String,
    pub weight: f64,
    pub model: PartialPostPolicyMaid,
}

/// Backward per-information-set best response of one agent against a set
/// of believed models in which every other agent's decisions are fixed.
pub(crate) struct Responder<'a> {
    agent: &'a str,
    believed: Vec<Believed>,
    possible: Vec<BTreeMap<String, BTreeSet<usize>>>,
    assigned: BTreeMap<InformationSet, usize>,
}

#[derive(Clone, Debug)]
pub(crate) struct Assignment1 {
    pub info_set: InformationSet,
    pub action: usize,
    pub values: Vec<f64>,
    pub audited: bool,
}

impl<'a> Responder<'a> {
    pub fn new(agent: &'a str, believed: Vec<Believed>) -> Result<Self, DepthError> {
        for b in &believed {
            if b.model.free_agents().iter().any(|a| *a != agent) {
                return Err(DepthError::NotDepthZero { node: b.id.clone(), agent: agent.to_string() });
            }
        }
        let possible = believed.iter().map(|b| possible_contexts(&b.model)).collect();
        Ok(Responder { agent, believed, possible, assigned: BTreeMap::new() })
    }

    /// Information sets the agent can meet in some believed model.
    pub fn candidates(&self) -> BTreeSet<InformationSet> {
        let mut out = BTreeSet::new();
        for (b, possible) in self.believed.iter().zip(&self.possible) {
            for (d, ctxs) in possible {
                if b.model.base().owner(d) == Some(self.agent) {
                    out.extend(ctxs.iter().map(|&c| info_set_of(b.model.base(), d, c)));
                }
            }
        }
        out
    }

    pub fn assigned(&self) -> &BTreeMap<InformationSet, usize> {
        &self.assigned
    }

    fn decision_open(&self, k: usize, d: &str) -> bool {
        let m = self.believed[k].model.base();
        self.possible[k]
            .get(d)
            .is_some_and(|ctxs| ctxs.iter().any(|&c| !self.assigned.contains_key(&info_set_of(m, d, c))))
    }

    /// Unassigned candidates after which the agent has no open decision in
    /// any believed model.
    pub fn final_sets(&self) -> BTreeSet<InformationSet> {
        self.candidates()
            .into_iter()
            .filter(|set| !self.assigned.contains_key(set))
            .filter(|set| {
                self.believed.iter().enumerate().all(|(k, b)| {
                    let Some((d, _)) = b.model.locate(set) else { return true };
                    if !self.decision_open(k, d) {
                        return true;
                    }
                    let m = b.model.base();
                    !b.model
                        .free_decisions_of(self.agent)
                        .into_iter()
                        .any(|later| later != d && self.decision_open(k, later) && m.parents(later).unwrap().contains(&d))
                })
            })
            .collect()
    }

    /// Decision rows for model `k`: fixed rules, the agent's assignments as
    /// point masses and uniform rows elsewhere.
    fn rows(&self, k: usize) -> Vec<Option<Vec<Vec<f64>>>> {
        let b = &self.believed[k];
        let m = b.model.base();
        m.variables()
            .iter()
            .enumerate()
            .map(|(v, var)| {
                if !m.kinds_at(v).is_decision() {
                    return None;
                }
                if let Some(rule) = b.model.xi().get(&var.name) {
                    return Some(rule.rows.clone());
                }
                let n = m.num_contexts(&var.name).unwrap();
                let card = var.cardinality();
                Some(
                    (0..n)
                        .map(|c| {
                            let set = info_set_of(m, &var.name, c);
                            match self.assigned.get(&set) {
                                Some(&a) => {
                                    let label = &set.actions[a];
                                    var.domain.iter().map(|x| if x == label { 1.0 } else { 0.0 }).collect()
                                }
                                None => vec![1.0 / card as f64; card],
                            }
                        })
                        .collect(),
                )
            })
            .collect()
    }

    /// Belief-weighted conditional value of each action at `set` and the
    /// same values recomputed by the audit path.
    fn evaluate(&self, set: &InformationSet, rows: &[Vec<Option<Vec<Vec<f64>>>>]) -> (Vec<f64>, Vec<f64>) {
        let mut values = vec![0.0; set.actions.len()];
        let mut audit = vec![0.0; set.actions.len()];
        for (k, b) in self.believed.iter().enumerate() {
            let Some((d, ctx)) = b.model.locate(set) else { continue };
            let m = b.model.base();
            let Some(a) = m.agent_index(self.agent) else { continue };
            let dv = m.var_index(d).unwrap();
            let table: Vec<Option<&[Vec<f64>]>> = rows[k].iter().map(|r| r.as_deref()).collect();
            for (i, label) in set.actions.iter().enumerate() {
                let action = m.variable(d).unwrap().position(label).unwrap();
                if let Some(v) = m.conditional_utility(&table, dv, ctx, action, a) {
                    values[i] += b.weight * v;
                }
                if let Some(v) = perturbed_conditional(m, &rows[k], d, ctx, label, self.agent, AUDIT_EPS) {
                    audit[i] += b.weight * v;
                }
            }
        }
        (values, audit)
    }

    /// One application of the final-decision assignment.
    pub fn pass(&mut self) -> Result<Vec<Assignment1>, DepthError> {
        let finals = self.final_sets();
        if finals.is_empty() {
            return Err(DepthError::NoFinalInformationSet { agent: self.agent.to_string() });
        }
        let rows: Vec<_> = (0..self.believed.len()).map(|k| self.rows(k)).collect();
        let mut out = Vec::new();
        for set in finals {
            let (values, audit) = self.evaluate(&set, &rows);
            let action = first_max(&values);
            let best_audit = audit.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let audited = audit[action] >= best_audit - AUDIT_TOL;
            out.push(Assignment1 { info_set: set, action, values, audited });
        }
        for a in &out {
            self.assigned.insert(a.info_set.clone(), a.action);
        }
        Ok(out)
    }

    /// Repeats [`Responder::pass`] until every candidate is assigned.
    pub fn run(&mut self) -> Result<Vec<Assignment1>, DepthError> {
        let mut out = Vec::new();
        while self.candidates().iter().any(|s| !self.assigned.contains_key(s)) {
            out.extend(self.pass()?);
        }
        Ok(out)
    }
}

fn first_max(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] + TIE_EPS {
            best = i;
        }
    }
    best
}

/// Conditional expected utility computed on the induced network after
/// mixing every decision row with `eps` of uniform mass.
fn perturbed_conditional(
    m: &Maid,
    rows: &[Option<Vec<Vec<f64>>>],
    d: &str,
    ctx: usize,
    action: &str,
    agent: &str,
    eps: f64,
) -> Option<f64> {
    let mut p = PolicyProfile::new();
    for (v, r) in rows.iter().enumerate() {
        let Some(r) = r else { continue };
        let var = &m.variables()[v];
        let mixed = if var.name == d {
            r.iter().map(|_| var.domain.iter().map(|x| if x == action { 1.0 } else { 0.0 }).collect()).collect()
        } else {
            let k = var.cardinality() as f64;
            r.iter().map(|row| row.iter().map(|x| (1.0 - eps) * x + eps / k).collect()).collect()
        };
        p.insert(DecisionRule::new(var.name.clone(), mixed));
    }
    let net = m.induced_network(&p).ok()?;
    let evidence = m.context(d, ctx).with(d, action);
    let mut total = 0.0;
    for u in m.utilities_of(agent) {
        let marginal = match net.marginal(&[u], &evidence) {
            Ok(x) => x,
            Err(NetError::ZeroProbabilityEvidence) => return None,
            Err(_) => return None,
        };
        let var = m.variable(u).unwrap();
        for (labels, prob) in &marginal.table {
            total += prob * var.value(var.position(&labels[0]).unwrap());
        }
    }
    Some(total)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OpenMindedViolation {
    pub node: String,
    pub agent: String,
    pub info_set: InformationSet,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DepthReport {
    pub depths: BTreeMap<String, usize>,
    pub k: usize,
}

/// Output of one depth-1 best response.
#[derive(Clone, Debug, PartialEq)]
pub struct Br1 {
    pub policy: BTreeMap<InformationSet, String>,
    pub passes: Vec<Vec<TraceEntry>>,
}

/// An acyclic finite-depth II-MAID.
#[derive(Clone, Debug, PartialEq)]
pub struct DepthStack {
    ii: IiMaid,
    depths: BTreeMap<String, usize>,
}

impl DepthStack {
    /// Validates the stack. `declared` optionally pins node depths.
    pub fn new<S: Into<String>>(
        agents: impl IntoIterator<Item = S>,
        objective: &str,
        nodes: Vec<SubjectiveMaid>,
        declared: &BTreeMap<String, usize>,
    ) -> Result<Self, DepthError> {
        let ii = IiMaid::new(agents, objective, nodes)?;
        for s in ii.models() {
            if !s.maid().is_perfect_recall_game() {
                return Err(DepthError::PerfectRecallRequired(s.id.clone()));
            }
            let free = s.model.free_agents();
            for agent in s.beliefs.keys() {
                if !free.contains(&agent.as_str()) {
                    return Err(DepthError::DepthContractViolation {
                        node: s.id.clone(),
                        reason: format!("`{agent}` has no free decision but holds beliefs"),
                    });
                }
            }
            let unbelieving = free.iter().filter(|a| !s.beliefs.contains_key(**a)).count();
            if unbelieving > 1 {
                return Err(DepthError::DepthContractViolation {
                    node: s.id.clone(),
                    reason: "more than one free agent without beliefs".into(),
                });
            }
        }
        let objective_model = ii.objective_model();
        for a in objective_model.model.free_agents() {
            if objective_model.belief(a).is_none() {
                return Err(DepthError::NoBeliefs { node: objective.to_string(), agent: a.to_string() });
            }
        }
        let depths = compute_depths(&ii)?;
        for (node, &want) in declared {
            match depths.get(node) {
                Some(&got) if got == want => {}
                Some(&got) => {
                    return Err(DepthError::DepthContractViolation {
                        node: node.clone(),
                        reason: format!("declared depth {want} but beliefs give {got}"),
                    })
                }
                None => return Err(IiError::UnknownModel(node.clone()).into()),
            }
        }
        Ok(DepthStack { ii, depths })
    }

    pub fn as_ii_maid(&self) -> &IiMaid {
        &self.ii
    }

    pub fn objective(&self) -> &str {
        self.ii.objective()
    }

    pub fn node(&self, id: &str) -> Option<&SubjectiveMaid> {
        self.ii.model(id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &SubjectiveMaid> {
        self.ii.models()
    }

    pub fn classify_depth(&self) -> DepthReport {
        DepthReport { depths: self.depths.clone(), k: self.depths[self.objective()] }
    }

    fn believed_by(&self, s: &SubjectiveMaid, agent: &str) -> Vec<&SubjectiveMaid> {
        s.belief(agent)
            .map(|b| b.iter().filter(|(_, w)| **w > 0.0).map(|(id, _)| self.ii.model(id).unwrap()).collect())
            .unwrap_or_default()
    }

    /// Every information set an agent with beliefs can meet in a node must
    /// be encounterable in some model it believes in.
    pub fn is_open_minded(&self) -> Vec<OpenMindedViolation> {
        let mut out = Vec::new();
        for s in self.ii.models() {
            let m = s.maid();
            for agent in s.beliefs.keys() {
                let believed = self.believed_by(s, agent);
                for d in s.model.free_decisions_of(agent) {
                    for ctx in 0..m.num_contexts(d).unwrap() {
                        let set = info_set_of(m, d, ctx);
                        if !believed.iter().any(|t| is_encounterable(&set, t)) {
                            out.push(OpenMindedViolation { node: s.id.clone(), agent: agent.clone(), info_set: set });
                        }
                    }
                }
            }
        }
        out
    }

    fn require_open_minded(&self) -> Result<(), DepthError> {
        let v = self.is_open_minded();
        if v.is_empty() {
            Ok(())
        } else {
            Err(DepthError::NotOpenMinded(v))
        }
    }

    fn responder<'a>(&self, node: &str, agent: &'a str) -> Result<Responder<'a>, DepthError> {
        let s = self.ii.model(node).ok_or_else(|| IiError::UnknownModel(node.to_string()))?;
        let depth = self.depths[node];
        if depth != 1 {
            return Err(DepthError::NotDepthOne { node: node.to_string(), depth });
        }
        let b = s.belief(agent).ok_or_else(|| DepthError::NoBeliefs { node: node.to_string(), agent: agent.to_string() })?;
        let believed = b
            .iter()
            .filter(|(_, w)| **w > 0.0)
            .map(|(id, w)| Believed { id: id.clone(), weight: *w, model: self.ii.model(id).unwrap().model.clone() })
            .collect();
        Responder::new(agent, believed)
    }

    /// Final information sets of `agent` at depth-1 node `node` before any
    /// assignment.
    pub fn final_information_sets(&self, node: &str, agent: &str) -> Result<BTreeSet<InformationSet>, DepthError> {
        Ok(self.responder(node, agent)?.final_sets())
    }

    /// One pass of the final-decision assignment. Returns the assignments
    /// and a stack whose believed depth-0 models have every decision rule
    /// written that the pass completed.
    pub fn final_decision_assignment(&self, node: &str, agent: &str) -> Result<(DepthStack, Vec<TraceEntry>), DepthError> {
        self.require_open_minded()?;
        let mut r = self.responder(node, agent)?;
        let entries = r.pass()?;
        let trace = to_trace(0, node, agent, &entries);
        let mut nodes: Vec<SubjectiveMaid> = self.ii.models().cloned().collect();
        for s in nodes.iter_mut() {
            if !r.believed.iter().any(|b| b.id == s.id) {
                continue;
            }
            let m = s.maid().clone();
            let mut written = PolicyProfile::new();
            for d in s.model.free_decisions_of(agent) {
                let possible = possible_contexts(&s.model);
                let ctxs = possible.get(d).cloned().unwrap_or_default();
                if ctxs.iter().all(|&c| r.assigned.contains_key(&info_set_of(&m, d, c))) {
                    written.insert(rule_from_assignments(&m, d, &r.assigned).0);
                }
            }
            s.model = s.model.with_rules(&written)?;
        }
        let stack = DepthStack::new(self.ii.agents().to_vec(), self.objective(), nodes, &BTreeMap::new())?;
        Ok((stack, trace))
    }

    /// Depth-1 best response of `agent` at `node`.
    pub fn br1(&self, node: &str, agent: &str) -> Result<Br1, DepthError> {
        self.require_open_minded()?;
        self.br1_unchecked(node, agent)
    }

    fn br1_unchecked(&self, node: &str, agent: &str) -> Result<Br1, DepthError> {
        let mut r = self.responder(node, agent)?;
        let mut passes = Vec::new();
        while r.candidates().iter().any(|s| !r.assigned.contains_key(s)) {
            let entries = r.pass()?;
            passes.push(to_trace(0, node, agent, &entries));
        }
        let policy = r.assigned.iter().map(|(s, &a)| (s.clone(), s.actions[a].clone())).collect();
        Ok(Br1 { policy, passes })
    }

    /// One reduction: every believing agent in every depth-1 node receives
    /// its depth-1 best response and drops its beliefs.
    pub fn reduce_stack(&self) -> Result<(DepthStack, Vec<TraceEntry>), DepthError> {
        self.require_open_minded()?;
        self.reduce_step(0)
    }

    fn reduce_step(&self, step: usize) -> Result<(DepthStack, Vec<TraceEntry>), DepthError> {
        let mut trace = Vec::new();
        let mut nodes: Vec<SubjectiveMaid> = self.ii.models().cloned().collect();
        for s in nodes.iter_mut() {
            if self.depths[&s.id] != 1 {
                continue;
            }
            let m = s.maid().clone();
            let mut written = PolicyProfile::new();
            for agent in s.beliefs.keys() {
                let br = self.br1_unchecked(&s.id, agent)?;
                for pass in br.passes {
                    trace.extend(pass.into_iter().map(|e| TraceEntry { step, ..e }));
                }
                let assigned: BTreeMap<InformationSet, usize> = br
                    .policy
                    .iter()
                    .map(|(set, a)| (set.clone(), set.actions.iter().position(|x| x == a).unwrap()))
                    .collect();
                for d in s.model.free_decisions_of(agent) {
                    let (rule, defaults) = rule_from_assignments(&m, d, &assigned);
                    for set in defaults {
                        let action = set.actions[0].clone();
                        trace.push(TraceEntry {
                            step,
                            node: s.id.clone(),
                            agent: agent.clone(),
                            info_set: set,
                            action,
                            source: Source::Default,
                            values: vec![],
                            audited: true,
                        });
                    }
                    written.insert(rule);
                }
            }
            s.model = s.model.with_rules(&written)?;
            s.beliefs.clear();
        }
        let stack = DepthStack::new(self.ii.agents().to_vec(), self.objective(), nodes, &BTreeMap::new())?;
        Ok((stack, trace))
    }

    /// Applies the reduction until the objective node has depth 0.
    pub fn recursive_best_response(&self) -> Result<RbrSolution, DepthError> {
        self.require_open_minded()?;
        let k = self.depths[self.objective()];
        let mut stack = self.clone();
        let mut trace = Vec::new();
        for step in 1..=k {
            let (next, entries) = stack.reduce_step(step)?;
            trace.extend(entries);
            stack = next;
        }
        let objective = stack.ii.objective_model();
        let rules = objective.model.xi().clone();
        let profile = project_profile(self, &stack, &trace);
        let utilities = objective.maid().expected_utilities(&rules)?;
        let audit_passed = trace.iter().all(|e| e.audited);
        Ok(RbrSolution { depth: k, rules, profile, objective_utilities: utilities, trace, audit_passed })
    }
}

/// Rows of `d` from assigned information sets; unassigned contexts take the
/// least action and are returned.
fn rule_from_assignments(
    m: &Maid,
    d: &str,
    assigned: &BTreeMap<InformationSet, usize>,
) -> (DecisionRule, Vec<InformationSet>) {
    let var = m.variable(d).unwrap();
    let mut defaults = Vec::new();
    let rows = (0..m.num_contexts(d).unwrap())
        .map(|c| {
            let set = info_set_of(m, d, c);
            let label = match assigned.get(&set) {
                Some(&a) => set.actions[a].clone(),
                None => {
                    let first = set.actions[0].clone();
                    defaults.push(set);
                    first
                }
            };
            var.domain.iter().map(|x| if *x == label { 1.0 } else { 0.0 }).collect()
        })
        .collect();
    (DecisionRule::new(d, rows), defaults)
}

fn to_trace(step: usize, node: &str, agent: &str, entries: &[Assignment1]) -> Vec<TraceEntry> {
    entries
        .iter()
        .map(|e| TraceEntry {
            step,
            node: node.to_string(),
            agent: agent.to_string(),
            info_set: e.info_set.clone(),
            action: e.info_set.actions[e.action].clone(),
            source: Source::Argmax,
            values: e.values.clone(),
            audited: e.audited,
        })
        .collect()
}

/// Information-set profile over every set the original stack can produce.
/// The objective node's rules come first, then rules written at other
/// nodes in reduction order; anything left takes its least action.
fn project_profile(original: &DepthStack, solved: &DepthStack, trace: &[TraceEntry]) -> IiPolicyProfile {
    let universe = original.ii.all_information_sets();
    let mut chosen: BTreeMap<InformationSet, String> = BTreeMap::new();
    let objective = solved.ii.objective_model();
    let m = objective.maid();
    for (d, rule) in &objective.model.xi().0 {
        for c in 0..rule.rows.len() {
            let set = info_set_of(m, d, c);
            if universe.contains(&set) {
                if let Some(a) = rule.pure_action(m, c) {
                    chosen.entry(set).or_insert_with(|| a.to_string());
                }
            }
        }
    }
    for e in trace {
        chosen.entry(e.info_set.clone()).or_insert_with(|| e.action.clone());
    }
    let mut p = IiPolicyProfile::new();
    for set in universe {
        let a = chosen.get(&set).cloned().unwrap_or_else(|| set.actions[0].clone());
        p.insert_pure(set, &a);
    }
    p
}

#[derive(Clone, Debug, PartialEq)]
pub struct RbrSolution {
    pub depth: usize,
    /// Rules of the objective node after all reductions.
    pub rules: PolicyProfile,
    pub profile: IiPolicyProfile,
    pub objective_utilities: BTreeMap<String, f64>,
    pub trace: Vec<TraceEntry>,
    pub audit_passed: bool,
}

fn compute_depths(ii: &IiMaid) -> Result<BTreeMap<String, usize>, DepthError> {
    fn visit(
        ii: &IiMaid,
        id: &str,
        memo: &mut BTreeMap<String, usize>,
        on_path: &mut Vec<String>,
    ) -> Result<usize, DepthError> {
        if let Some(&d) = memo.get(id) {
            return Ok(d);
        }
        if let Some(pos) = on_path.iter().position(|x| x == id) {
            return Err(DepthError::CyclicBeliefs(on_path[pos..].to_vec()));
        }
        on_path.push(id.to_string());
        let s = ii.model(id).unwrap();
        let mut depth = 0;
        for b in s.beliefs.values() {
            for (target, w) in b {
                if *w > 0.0 {
                    depth = depth.max(1 + visit(ii, target, memo, on_path)?);
                }
            }
        }
        on_path.pop();
        memo.insert(id.to_string(), depth);
        Ok(depth)
    }
    let mut memo = BTreeMap::new();
    for id in ii.model_ids() {
        visit(ii, id, &mut memo, &mut Vec::new())?;
    }
    Ok(memo)
}

/// Lossy conversion of a (possibly cyclic) II-MAID into a depth-k stack.
/// Node `id@l/i` copies model `id` with `i` free and without beliefs, while
/// every other believing agent `j` believes the nodes `t@(l-1)/j` for the
/// models `t` it believes in. At level 0 everyone but `i` is fixed uniform,
/// as is any agent without beliefs. The objective node `id@k` leaves no
/// agent unbelieving.
pub fn unroll(x: &IiMaid, k: usize) -> Result<DepthStack, DepthError> {
    fn node(
        x: &IiMaid,
        id: &str,
        level: usize,
        keep: Option<&str>,
        out: &mut BTreeMap<String, SubjectiveMaid>,
    ) -> Result<String, DepthError> {
        let name = match keep {
            Some(i) => format!("{id}@{level}/{i}"),
            None => format!("{id}@{level}"),
        };
        if out.contains_key(&name) {
            return Ok(name);
        }
        let s = x.model(id).unwrap();
        let mut n = SubjectiveMaid::new(name.clone(), s.model.clone());
        let mut fixed = PolicyProfile::new();
        for agent in s.model.free_agents() {
            if Some(agent) == keep {
                continue;
            }
            match s.belief(agent).filter(|_| level > 0) {
                Some(b) => {
                    let mut belief = BTreeMap::new();
                    for (target, &w) in b.iter().filter(|(_, w)| **w > 0.0) {
                        belief.insert(node(x, target, level - 1, Some(agent), out)?, w);
                    }
                    n.beliefs.insert(agent.to_string(), belief);
                }
                None => {
                    for d in s.model.free_decisions_of(agent) {
                        fixed.insert(DecisionRule::uniform(s.maid(), d)?);
                    }
                }
            }
        }
        n.model = n.model.with_rules(&fixed)?;
        out.insert(name.clone(), n);
        Ok(name)
    }
    let mut out = BTreeMap::new();
    let objective = node(x, x.objective(), k, None, &mut out)?;
    DepthStack::new(x.agents().to_vec(), &objective, out.into_values().collect(), &BTreeMap::new())
}
