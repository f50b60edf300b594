//! Incomplete-information MAIDs: a set of subjective MAIDs linked by
//! per-agent beliefs, with one designated objective model.
//!
//! Variable names are shared across models. An [`InformationSet`] is an
//! agent's observed parent assignment plus the available actions, so the
//! same set can arise in several models; an [`IiPolicyProfile`] assigns one
//! distribution per information set.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use serde::Serialize;
use thiserror::Error;

use crate::bn::{check_row, DEFAULT_TOL};
use crate::finite_depth::{Believed, PartialPostPolicyMaid, Responder};
use crate::maid::{DecisionRule, Maid, MaidError, NashReport, PolicyProfile, DEFAULT_CAP, TIE_EPS};

/// Threshold below which an LP value counts as zero.
const LP_TOL: f64 = 1e-7;

pub const DEFAULT_ITERATIONS: usize = 1000;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum IiError {
    #[error("an II-MAID needs at least one subjective MAID")]
    Empty,
    #[error("duplicate subjective MAID `{0}`")]
    DuplicateModel(String),
    #[error("unknown subjective MAID `{0}`")]
    UnknownModel(String),
    #[error("unknown agent `{0}`")]
    UnknownAgent(String),
    #[error("beliefs of `{agent}` in `{model}`: {reason}")]
    BadBeliefs { model: String, agent: String, reason: String },
    #[error("`{agent}` holds no beliefs in `{model}`")]
    MissingBeliefs { model: String, agent: String },
    #[error("no rule for information set {0}")]
    MissingInfoSetRule(InformationSet),
    #[error("rule for {0} is not an information set of this II-MAID")]
    UnexpectedInfoSet(InformationSet),
    #[error("rule for {set}: {reason}")]
    InvalidRow { set: InformationSet, reason: String },
    #[error("search space of {size} pure policies exceeds cap {cap}")]
    SearchSpaceTooLarge { size: u128, cap: u128 },
    #[error(transparent)]
    Maid(#[from] MaidError),
}

/// Distribution over model ids.
pub type Belief = BTreeMap<String, f64>;

/// A model together with the beliefs each agent holds in it.
#[derive(Clone, Debug, PartialEq)]
pub struct SubjectiveMaid {
    pub id: String,
    pub model: PartialPostPolicyMaid,
    pub beliefs: BTreeMap<String, Belief>,
}

impl SubjectiveMaid {
    pub fn new(id: impl Into<String>, model: impl Into<PartialPostPolicyMaid>) -> Self {
        SubjectiveMaid { id: id.into(), model: model.into(), beliefs: BTreeMap::new() }
    }

    pub fn believing<S: Into<String>>(mut self, agent: &str, belief: impl IntoIterator<Item = (S, f64)>) -> Self {
        self.beliefs.insert(agent.to_string(), belief.into_iter().map(|(k, v)| (k.into(), v)).collect());
        self
    }

    pub fn maid(&self) -> &Maid {
        self.model.base()
    }

    pub fn belief(&self, agent: &str) -> Option<&Belief> {
        self.beliefs.get(agent)
    }
}

pub(crate) fn beliefs_equal(a: Option<&Belief>, b: Option<&Belief>) -> bool {
    match (a, b) {
        (Some(a), Some(b)) => a
            .keys()
            .chain(b.keys())
            .all(|k| (a.get(k).copied().unwrap_or(0.0) - b.get(k).copied().unwrap_or(0.0)).abs() <= DEFAULT_TOL),
        _ => false,
    }
}

/// An agent's observation (sorted parent/outcome pairs) and action set.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct InformationSet {
    pub agent: String,
    pub observation: Vec<(String, String)>,
    pub actions: Vec<String>,
}

impl fmt::Display for InformationSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let obs: Vec<String> = self.observation.iter().map(|(k, v)| format!("{k}={v}")).collect();
        write!(f, "{}[{}]{{{}}}", self.agent, obs.join(","), self.actions.join(","))
    }
}

/// One distribution per information set, over the set's (sorted) actions.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct IiPolicyProfile(pub BTreeMap<InformationSet, Vec<f64>>);

impl IiPolicyProfile {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, set: &InformationSet) -> Option<&Vec<f64>> {
        self.0.get(set)
    }

    pub fn insert(&mut self, set: InformationSet, row: Vec<f64>) {
        self.0.insert(set, row);
    }

    /// Point mass on `action`, which must be one of the set's actions.
    pub fn insert_pure(&mut self, set: InformationSet, action: &str) {
        let row = set.actions.iter().map(|a| if a == action { 1.0 } else { 0.0 }).collect();
        self.0.insert(set, row);
    }

    pub fn of_agent(&self, agent: &str) -> IiPolicyProfile {
        IiPolicyProfile(self.0.iter().filter(|(k, _)| k.agent == agent).map(|(k, v)| (k.clone(), v.clone())).collect())
    }

    pub fn without_agent(&self, agent: &str) -> IiPolicyProfile {
        IiPolicyProfile(self.0.iter().filter(|(k, _)| k.agent != agent).map(|(k, v)| (k.clone(), v.clone())).collect())
    }

    pub fn merged(&self, other: &IiPolicyProfile) -> IiPolicyProfile {
        let mut out = self.clone();
        out.0.extend(other.0.iter().map(|(k, v)| (k.clone(), v.clone())));
        out
    }

    /// The action chosen with certainty at `set`, if any.
    pub fn pure_action<'a>(&'a self, set: &'a InformationSet) -> Option<&'a str> {
        let row = self.0.get(set)?;
        row.iter().position(|p| (*p - 1.0).abs() < DEFAULT_TOL).map(|k| set.actions[k].as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoherenceViolation {
    pub agent: String,
    pub model: String,
    /// Mass placed on models where the agent's beliefs are the same.
    pub mass: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConsistencyReport {
    pub eq1_feasible: bool,
    /// One solution; the one maximizing the least type mass when feasible.
    pub sample: Option<BTreeMap<String, f64>>,
    /// Smallest and largest prior mass of each model over all solutions.
    pub ranges: BTreeMap<String, (f64, f64)>,
    pub forced_zero: Vec<String>,
    pub unique: bool,
    pub min_type_mass: f64,
    pub strongly_consistent: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IiBestResponse {
    pub policy: IiPolicyProfile,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IiMaid {
    agents: Vec<String>,
    objective: String,
    models: BTreeMap<String, SubjectiveMaid>,
    /// Contexts of each free decision with positive probability when every
    /// decision is uniform.
    reachable: BTreeMap<String, BTreeMap<String, BTreeSet<usize>>>,
}

/// Sorted actions of a decision.
fn sorted_domain(m: &Maid, decision: &str) -> Vec<String> {
    let mut d = m.variable(decision).expect("decision exists").domain.clone();
    d.sort();
    d
}

/// Reorders a row over sorted actions into the decision's domain order.
fn to_domain_order(m: &Maid, decision: &str, set: &InformationSet, row: &[f64]) -> Vec<f64> {
    m.variable(decision)
        .unwrap()
        .domain
        .iter()
        .map(|label| row[set.actions.iter().position(|a| a == label).unwrap()])
        .collect()
}

/// The information set behind context `ctx` of `decision` in `m`.
pub(crate) fn info_set_of(m: &Maid, decision: &str, ctx: usize) -> InformationSet {
    InformationSet {
        agent: m.owner(decision).expect("decision has an owner").to_string(),
        observation: m.context(decision, ctx).0.into_iter().collect(),
        actions: sorted_domain(m, decision),
    }
}

pub fn is_encounterable(set: &InformationSet, s: &SubjectiveMaid) -> bool {
    let m = s.maid();
    s.model.free_decisions_of(&set.agent).into_iter().any(|d| {
        let parents = m.parents(d).unwrap();
        parents.len() == set.observation.len()
            && parents.iter().zip(&set.observation).all(|(p, (name, label))| {
                p == name && m.variable(p).unwrap().position(label).is_some()
            })
            && sorted_domain(m, d) == set.actions
    })
}

impl IiMaid {
    pub fn new<S: Into<String>>(
        agents: impl IntoIterator<Item = S>,
        objective: &str,
        models: Vec<SubjectiveMaid>,
    ) -> Result<Self, IiError> {
        let mut agents: Vec<String> = agents.into_iter().map(Into::into).collect();
        agents.sort();
        agents.dedup();
        if models.is_empty() {
            return Err(IiError::Empty);
        }
        let mut map = BTreeMap::new();
        for s in models {
            if map.contains_key(&s.id) {
                return Err(IiError::DuplicateModel(s.id));
            }
            map.insert(s.id.clone(), s);
        }
        if !map.contains_key(objective) {
            return Err(IiError::UnknownModel(objective.to_string()));
        }
        for s in map.values() {
            for a in s.maid().agents() {
                if !agents.contains(a) {
                    return Err(IiError::UnknownAgent(a.clone()));
                }
            }
            for (agent, belief) in &s.beliefs {
                if !agents.contains(agent) {
                    return Err(IiError::UnknownAgent(agent.clone()));
                }
                let bad = |reason: String| IiError::BadBeliefs { model: s.id.clone(), agent: agent.clone(), reason };
                for target in belief.keys() {
                    if !map.contains_key(target) {
                        return Err(bad(format!("unknown subjective MAID `{target}`")));
                    }
                }
                let row: Vec<f64> = belief.values().copied().collect();
                check_row(&s.id, 0, &row, DEFAULT_TOL).map_err(|e| bad(e.to_string()))?;
            }
        }
        let reachable = map
            .iter()
            .map(|(id, s)| {
                let m = s.maid();
                let uniform: Vec<Vec<Vec<f64>>> =
                    (0..m.variables().len()).map(|v| if m.kinds_at(v).is_decision() { m.uniform_rows(v) } else { vec![] }).collect();
                let table: Vec<Option<&[Vec<f64>]>> = (0..m.variables().len())
                    .map(|v| m.kinds_at(v).is_decision().then(|| uniform[v].as_slice()))
                    .collect();
                let reach = m
                    .reachable_with(&table)
                    .into_iter()
                    .map(|(v, set)| (m.variables()[v].name.clone(), set))
                    .filter(|(d, _)| !s.model.is_fixed(d))
                    .collect();
                (id.clone(), reach)
            })
            .collect();
        Ok(IiMaid { agents, objective: objective.to_string(), models: map, reachable })
    }

    /// A standard MAID as a single model every agent believes in with certainty.
    pub fn from_maid(m: Maid, id: &str) -> Self {
        let agents = m.agents().to_vec();
        let mut s = SubjectiveMaid::new(id, m);
        for a in &agents {
            s = s.believing(a, [(id, 1.0)]);
        }
        IiMaid::new(agents, id, vec![s]).expect("single-model embedding is valid")
    }

    pub fn agents(&self) -> &[String] {
        &self.agents
    }

    pub fn objective(&self) -> &str {
        &self.objective
    }

    pub fn objective_model(&self) -> &SubjectiveMaid {
        &self.models[&self.objective]
    }

    pub fn model(&self, id: &str) -> Option<&SubjectiveMaid> {
        self.models.get(id)
    }

    pub fn models(&self) -> impl Iterator<Item = &SubjectiveMaid> {
        self.models.values()
    }

    pub fn model_ids(&self) -> Vec<&str> {
        self.models.keys().map(String::as_str).collect()
    }

    fn model_or_err(&self, id: &str) -> Result<&SubjectiveMaid, IiError> {
        self.models.get(id).ok_or_else(|| IiError::UnknownModel(id.to_string()))
    }

    fn belief_or_err(&self, id: &str, agent: &str) -> Result<&Belief, IiError> {
        self.model_or_err(id)?
            .belief(agent)
            .ok_or_else(|| IiError::MissingBeliefs { model: id.to_string(), agent: agent.to_string() })
    }

    pub fn validate_coherence(&self) -> Vec<CoherenceViolation> {
        let mut out = Vec::new();
        for agent in &self.agents {
            for s in self.models.values() {
                let Some(b) = s.belief(agent) else { continue };
                let mass: f64 = b
                    .iter()
                    .filter(|(id, _)| beliefs_equal(self.models[*id].belief(agent), Some(b)))
                    .map(|(_, p)| p)
                    .sum();
                if mass < 1.0 - DEFAULT_TOL {
                    out.push(CoherenceViolation { agent: agent.clone(), model: s.id.clone(), mass });
                }
            }
        }
        out
    }

    /// Realized belief types: for every agent and model holding a belief,
    /// the set of models where that agent's belief is the same.
    pub fn belief_types(&self) -> Vec<(String, BTreeSet<String>)> {
        let mut out: Vec<(String, BTreeSet<String>)> = Vec::new();
        for agent in &self.agents {
            for s in self.models.values() {
                let Some(b) = s.belief(agent) else { continue };
                let members: BTreeSet<String> = self
                    .models
                    .values()
                    .filter(|t| beliefs_equal(t.belief(agent), Some(b)))
                    .map(|t| t.id.clone())
                    .collect();
                let entry = (agent.clone(), members);
                if !out.contains(&entry) {
                    out.push(entry);
                }
            }
        }
        out
    }

    /// Solves `p(S') = Σ_S P_i^S(S') p(S)` over the simplex for every agent
    /// holding beliefs in every model, and tests whether some solution gives
    /// every realized belief type positive mass.
    pub fn check_consistency(&self) -> ConsistencyReport {
        let ids: Vec<&String> = self.models.keys().collect();
        let full: Vec<&String> =
            self.agents.iter().filter(|a| self.models.values().all(|s| s.belief(a).is_some())).collect();
        let types = self.belief_types();

        // Solves the constrained LP with objective `obj` over (p, t); `t` is
        // bounded by every type's mass when `with_t`.
        let solve = |obj: &[f64], t_obj: f64, dir: OptimizationDirection, with_t: bool| -> Option<(Vec<f64>, f64)> {
            let mut lp = Problem::new(dir);
            let p: Vec<_> = obj.iter().map(|&c| lp.add_var(c, (0.0, 1.0))).collect();
            let t = lp.add_var(t_obj, (0.0, if with_t { 1.0 } else { 0.0 }));
            lp.add_constraint(p.iter().map(|&v| (v, 1.0)).collect::<Vec<_>>(), ComparisonOp::Eq, 1.0);
            for agent in &full {
                for (k, target) in ids.iter().enumerate() {
                    let mut coef = vec![0.0; ids.len()];
                    coef[k] = 1.0;
                    for (j, source) in ids.iter().enumerate() {
                        coef[j] -= self.models[*source].belief(agent).unwrap().get(*target).copied().unwrap_or(0.0);
                    }
                    let expr: Vec<_> = coef.iter().enumerate().filter(|(_, c)| **c != 0.0).map(|(j, c)| (p[j], *c)).collect();
                    lp.add_constraint(expr, ComparisonOp::Eq, 0.0);
                }
            }
            if with_t {
                for (_, members) in &types {
                    let mut expr: Vec<_> =
                        ids.iter().enumerate().filter(|(_, id)| members.contains(**id)).map(|(k, _)| (p[k], -1.0)).collect();
                    expr.push((t, 1.0));
                    lp.add_constraint(expr, ComparisonOp::Le, 0.0);
                }
            }
            let sol = lp.solve().ok()?;
            let values = p.iter().map(|&v| clean(*sol.var_value(v))).collect();
            Some((values, clean(*sol.var_value(t))))
        };

        let zero = vec![0.0; ids.len()];
        let best = solve(&zero, 1.0, OptimizationDirection::Maximize, true);
        let Some((sample, min_type_mass)) = best else {
            return ConsistencyReport {
                eq1_feasible: false,
                sample: None,
                ranges: BTreeMap::new(),
                forced_zero: Vec::new(),
                unique: false,
                min_type_mass: 0.0,
                strongly_consistent: false,
            };
        };
        let mut ranges = BTreeMap::new();
        for (k, id) in ids.iter().enumerate() {
            let mut unit = zero.clone();
            unit[k] = 1.0;
            let lo = solve(&unit, 0.0, OptimizationDirection::Minimize, false).map_or(0.0, |(v, _)| v[k]);
            let hi = solve(&unit, 0.0, OptimizationDirection::Maximize, false).map_or(0.0, |(v, _)| v[k]);
            ranges.insert((*id).clone(), (lo, hi));
        }
        let forced_zero = ranges.iter().filter(|(_, (_, hi))| *hi <= LP_TOL).map(|(k, _)| k.clone()).collect();
        let unique = ranges.values().all(|(lo, hi)| hi - lo <= LP_TOL);
        ConsistencyReport {
            eq1_feasible: true,
            sample: Some(ids.iter().map(|s| (*s).clone()).zip(sample).collect()),
            ranges,
            forced_zero,
            unique,
            min_type_mass,
            strongly_consistent: min_type_mass > LP_TOL,
        }
    }

    /// The information set behind context `ctx` of `decision` in model `id`.
    pub fn info_set_at(&self, id: &str, decision: &str, ctx: usize) -> InformationSet {
        info_set_of(self.models[id].maid(), decision, ctx)
    }

    /// Information sets of `agent` arising in model `id`.
    pub fn information_sets_in(&self, id: &str, agent: &str) -> BTreeSet<InformationSet> {
        let m = self.models[id].maid();
        self.reachable[id]
            .iter()
            .filter(|(d, _)| m.owner(d) == Some(agent))
            .flat_map(|(d, ctxs)| ctxs.iter().map(move |&c| self.info_set_at(id, d, c)))
            .collect()
    }

    pub fn information_sets(&self, agent: &str) -> BTreeSet<InformationSet> {
        self.models.keys().flat_map(|id| self.information_sets_in(id, agent)).collect()
    }

    pub fn all_information_sets(&self) -> BTreeSet<InformationSet> {
        self.agents.iter().flat_map(|a| self.information_sets(a)).collect()
    }

    /// Checks that `p` assigns valid rows to exactly the information sets of
    /// `agents`.
    pub fn check_profile(&self, p: &IiPolicyProfile, agents: &[&str]) -> Result<(), IiError> {
        let expected: BTreeSet<InformationSet> = agents.iter().flat_map(|a| self.information_sets(a)).collect();
        for (set, row) in &p.0 {
            if agents.contains(&set.agent.as_str()) && !expected.contains(set) {
                return Err(IiError::UnexpectedInfoSet(set.clone()));
            }
            if row.len() != set.actions.len() {
                return Err(IiError::InvalidRow { set: set.clone(), reason: "width".into() });
            }
            check_row(&set.to_string(), 0, row, DEFAULT_TOL)
                .map_err(|e| IiError::InvalidRow { set: set.clone(), reason: e.to_string() })?;
        }
        for set in expected {
            if !p.0.contains_key(&set) {
                return Err(IiError::MissingInfoSetRule(set));
            }
        }
        Ok(())
    }

    /// Decision rules of model `id` under `p`: fixed rules where assigned,
    /// otherwise rows copied from the matching information sets. Contexts
    /// that cannot occur are filled uniformly.
    pub fn rules_for_model(&self, id: &str, p: &IiPolicyProfile) -> Result<PolicyProfile, IiError> {
        let s = self.model_or_err(id)?;
        let m = s.maid();
        let mut out = s.model.xi().clone();
        for d in m.decisions() {
            if s.model.is_fixed(d) {
                continue;
            }
            let n = m.num_contexts(d).unwrap();
            let k = m.variable(d).unwrap().cardinality();
            let mut rows = Vec::with_capacity(n);
            for ctx in 0..n {
                let set = self.info_set_at(id, d, ctx);
                match p.get(&set) {
                    Some(row) => rows.push(to_domain_order(m, d, &set, row)),
                    None if self.reachable[id][d].contains(&ctx) => return Err(IiError::MissingInfoSetRule(set)),
                    None => rows.push(vec![1.0 / k as f64; k]),
                }
            }
            out.insert(DecisionRule::new(d, rows));
        }
        Ok(out)
    }

    /// `agent`'s expected utility in model `id` under `p`.
    pub fn model_utility(&self, id: &str, agent: &str, p: &IiPolicyProfile) -> Result<f64, IiError> {
        let m = self.model_or_err(id)?.maid();
        if !m.agents().iter().any(|a| a == agent) {
            return Ok(0.0);
        }
        Ok(m.expected_utility(&self.rules_for_model(id, p)?, agent)?)
    }

    /// Belief-weighted expected utility of `agent` under its beliefs at `at`.
    pub fn subjective_expected_utility(&self, agent: &str, at: &str, p: &IiPolicyProfile) -> Result<f64, IiError> {
        if !self.agents.iter().any(|a| a == agent) {
            return Err(IiError::UnknownAgent(agent.to_string()));
        }
        let b = self.belief_or_err(at, agent)?;
        let mut total = 0.0;
        for (id, w) in b {
            if *w > 0.0 {
                total += w * self.model_utility(id, agent, p)?;
            }
        }
        Ok(total)
    }

    /// Best pure policy of `agent` under its beliefs at the objective model.
    /// Sets not encounterable in any positively believed model get their
    /// least action.
    pub fn best_response_ii(&self, agent: &str, others: &IiPolicyProfile, cap: u128) -> Result<IiBestResponse, IiError> {
        let b = self.belief_or_err(&self.objective, agent)?.clone();
        let believed: Vec<&SubjectiveMaid> =
            b.iter().filter(|(_, w)| **w > 0.0).map(|(id, _)| &self.models[id]).collect();
        let own: Vec<InformationSet> = self.information_sets(agent).into_iter().collect();
        let (relevant, rest): (Vec<InformationSet>, Vec<InformationSet>) =
            own.into_iter().partition(|set| believed.iter().any(|s| is_encounterable(set, s)));
        let size = count_pure(&relevant);
        if size > cap {
            return Err(IiError::SearchSpaceTooLarge { size, cap });
        }
        let mut base = others.without_agent(agent);
        for set in rest {
            let first = set.actions[0].clone();
            base.insert_pure(set, &first);
        }
        let mut best: Option<(f64, IiPolicyProfile)> = None;
        let mut failure = None;
        for_each_pure(&relevant, &mut |candidate| {
            if failure.is_some() {
                return;
            }
            let full = base.merged(candidate);
            let mut value = 0.0;
            for s in &believed {
                match self.model_utility(&s.id, agent, &full) {
                    Ok(v) => value += b[&s.id] * v,
                    Err(e) => {
                        failure = Some(e);
                        return;
                    }
                }
            }
            if best.as_ref().is_none_or(|(v, _)| value > v + TIE_EPS) {
                best = Some((value, full.of_agent(agent)));
            }
        });
        if let Some(e) = failure {
            return Err(e);
        }
        let (value, policy) = best.expect("at least one pure policy");
        if let Some((v, refined)) = self.sequential_response(agent, &b, &base, &relevant)? {
            if v >= value - 1e-9 {
                return Ok(IiBestResponse { policy: refined, value: v });
            }
        }
        Ok(IiBestResponse { policy, value })
    }

    /// Backward per-set best response against the believed models with the
    /// other agents' rows fixed from `base`. `None` when the backward pass
    /// does not apply (no final set, or other free agents remain).
    fn sequential_response(
        &self,
        agent: &str,
        b: &Belief,
        base: &IiPolicyProfile,
        relevant: &[InformationSet],
    ) -> Result<Option<(f64, IiPolicyProfile)>, IiError> {
        let mut filled = base.clone();
        for set in relevant {
            filled.insert_pure(set.clone(), &set.actions[0]);
        }
        let mut believed = Vec::new();
        for (id, &w) in b {
            if w <= 0.0 {
                continue;
            }
            let s = &self.models[id];
            let m = s.maid();
            let rules: PolicyProfile = self
                .rules_for_model(id, &filled)?
                .0
                .into_values()
                .filter(|r| m.owner(&r.decision) != Some(agent))
                .collect();
            believed.push(Believed { id: id.clone(), weight: w, model: s.model.with_rules(&rules)? });
        }
        let Ok(mut responder) = Responder::new(agent, believed) else { return Ok(None) };
        if responder.run().is_err() {
            return Ok(None);
        }
        let mut candidate = base.clone();
        for set in relevant {
            let a = responder.assigned().get(set).copied().unwrap_or(0);
            candidate.insert_pure(set.clone(), &set.actions[a]);
        }
        let mut value = 0.0;
        for (id, &w) in b {
            if w > 0.0 {
                value += w * self.model_utility(id, agent, &candidate)?;
            }
        }
        Ok(Some((value, candidate.of_agent(agent))))
    }

    /// Every pure profile over all information sets, in odometer order.
    pub fn pure_profiles(&self, cap: u128) -> Result<Vec<IiPolicyProfile>, IiError> {
        let sets: Vec<InformationSet> = self.all_information_sets().into_iter().collect();
        let size = count_pure(&sets);
        if size > cap {
            return Err(IiError::SearchSpaceTooLarge { size, cap });
        }
        let mut out = Vec::new();
        for_each_pure(&sets, &mut |p| out.push(p.clone()));
        Ok(out)
    }

    pub fn is_nash_ii(&self, p: &IiPolicyProfile, tol: f64) -> Result<NashReport, IiError> {
        self.is_nash_ii_capped(p, tol, DEFAULT_CAP)
    }

    pub fn is_nash_ii_capped(&self, p: &IiPolicyProfile, tol: f64, cap: u128) -> Result<NashReport, IiError> {
        let agents: Vec<&str> = self.agents.iter().map(String::as_str).collect();
        self.check_profile(p, &agents)?;
        let mut values = BTreeMap::new();
        let mut regrets = BTreeMap::new();
        for agent in &self.agents {
            if self.information_sets(agent).is_empty() && self.objective_model().belief(agent).is_none() {
                values.insert(agent.clone(), 0.0);
                regrets.insert(agent.clone(), 0.0);
                continue;
            }
            let value = self.subjective_expected_utility(agent, &self.objective, p)?;
            let br = self.best_response_ii(agent, p, cap)?;
            values.insert(agent.clone(), value);
            regrets.insert(agent.clone(), br.value - value);
        }
        let is_nash = regrets.values().all(|r| *r <= tol);
        Ok(NashReport { is_nash, values, regrets })
    }

    /// Uniform rows at every information set.
    pub fn uniform_profile(&self) -> IiPolicyProfile {
        IiPolicyProfile(
            self.all_information_sets()
                .into_iter()
                .map(|s| {
                    let k = s.actions.len();
                    (s, vec![1.0 / k as f64; k])
                })
                .collect(),
        )
    }

    /// Exhaustive pure search, then iterated best response from the uniform
    /// profile. `None` when neither finds a profile passing at `1e-6`.
    pub fn find_nash_ii(&self, cap: u128, iterations: usize) -> Result<Option<IiPolicyProfile>, IiError> {
        const TOL: f64 = 1e-6;
        let sets: Vec<InformationSet> = self.all_information_sets().into_iter().collect();
        let size = count_pure(&sets);
        if size > cap {
            return Err(IiError::SearchSpaceTooLarge { size, cap });
        }
        let mut found = None;
        let mut failure = None;
        for_each_pure(&sets, &mut |candidate| {
            if found.is_some() || failure.is_some() {
                return;
            }
            match self.is_nash_ii_capped(candidate, TOL, cap) {
                Ok(r) if r.is_nash => found = Some(candidate.clone()),
                Ok(_) => {}
                Err(e) => failure = Some(e),
            }
        });
        if let Some(e) = failure {
            return Err(e);
        }
        if found.is_some() {
            return Ok(found);
        }
        let mut p = self.uniform_profile();
        for _ in 0..iterations {
            for agent in &self.agents {
                if self.information_sets(agent).is_empty() {
                    continue;
                }
                let br = self.best_response_ii(agent, &p, cap)?;
                p = p.without_agent(agent).merged(&br.policy);
            }
            if self.is_nash_ii_capped(&p, TOL, cap)?.is_nash {
                return Ok(Some(p));
            }
        }
        Ok(None)
    }

    pub fn has_perfect_recall_ii(&self) -> bool {
        self.models.values().all(|s| s.maid().is_perfect_recall_game())
    }
}

fn clean(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        0.0
    } else {
        x
    }
}

fn count_pure(sets: &[InformationSet]) -> u128 {
    sets.iter()
        .map(|s| s.actions.len() as u128)
        .try_fold(1u128, |acc, k| acc.checked_mul(k))
        .unwrap_or(u128::MAX)
}

/// Visits every pure assignment over `sets` in lexicographic order.
fn for_each_pure(sets: &[InformationSet], visit: &mut dyn FnMut(&IiPolicyProfile)) {
    let mut digits = vec![0usize; sets.len()];
    let mut p = IiPolicyProfile::new();
    loop {
        for (set, &k) in sets.iter().zip(&digits) {
            let mut row = vec![0.0; set.actions.len()];
            row[k] = 1.0;
            p.0.insert(set.clone(), row);
        }
        visit(&p);
        let mut pos = sets.len();
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < sets[pos].actions.len() {
                break;
            }
            digits[pos] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation_game as eg;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-9
    }

    #[test]
    fn running_example_is_coherent() {
        assert!(eg::ii_maid().validate_coherence().is_empty());
    }

    #[test]
    fn split_belief_violates_coherence() {
        let x = eg::ii_maid();
        let mut models: Vec<SubjectiveMaid> = x.models().cloned().collect();
        for s in &mut models {
            if s.id == eg::S_H {
                s.beliefs.insert(eg::A.into(), [(eg::S_H.to_string(), 0.5), (eg::S_A.to_string(), 0.5)].into());
            }
        }
        let y = IiMaid::new(x.agents().to_vec(), eg::S_H, models).unwrap();
        let v = y.validate_coherence();
        assert!(v.iter().any(|c| c.agent == eg::A && c.model == eg::S_H && close(c.mass, 0.5)));
    }

    #[test]
    fn embedding_is_coherent_and_consistent() {
        let x = IiMaid::from_maid(eg::honesty_maid(), "M");
        assert!(x.validate_coherence().is_empty());
        let r = x.check_consistency();
        assert!(r.eq1_feasible && r.strongly_consistent && r.unique);
        assert_eq!(r.sample.unwrap()["M"], 1.0);
    }

    #[test]
    fn running_example_consistency() {
        let r = eg::ii_maid().check_consistency();
        assert!(r.eq1_feasible);
        assert!(r.unique);
        assert_eq!(r.forced_zero, vec![eg::S_H.to_string()]);
        let sample = r.sample.unwrap();
        assert!(close(sample[eg::S_H], 0.0) && close(sample[eg::S_A], 1.0));
        assert!(!r.strongly_consistent);
    }

    #[test]
    fn information_set_counts() {
        let x = eg::ii_maid();
        let a = x.information_sets(eg::A);
        assert_eq!(a.len(), 2);
        assert!(a.iter().all(|s| s.observation.len() == 1 && s.observation[0].0 == eg::C));
        assert_eq!(x.information_sets(eg::H).len(), 6);
        assert!(x.information_sets("nobody").is_empty());
    }

    #[test]
    fn encounterability_follows_parent_sets() {
        let x = eg::ii_maid();
        let h_low = InformationSet {
            agent: eg::H.into(),
            observation: vec![(eg::D_A.into(), eg::LOW.into())],
            actions: vec![eg::DEPLOY.into(), eg::NOT_DEPLOY.into()],
        };
        assert!(is_encounterable(&h_low, x.model(eg::S_A).unwrap()));
        assert!(!is_encounterable(&h_low, x.model(eg::S_H).unwrap()));
        let a_high = InformationSet {
            agent: eg::A.into(),
            observation: vec![(eg::C.into(), eg::HIGH.into())],
            actions: vec![eg::HIGH.into(), eg::LOW.into()],
        };
        assert!(x.models().all(|s| is_encounterable(&a_high, s)));
        let empty = InformationSet { observation: vec![], ..a_high };
        assert!(!is_encounterable(&empty, x.model(eg::S_H).unwrap()));
    }

    #[test]
    fn subjective_values() {
        let x = eg::ii_maid();
        let p = eg::s6_profile(&x);
        assert!(close(x.subjective_expected_utility(eg::A, eg::S_A, &p).unwrap(), 0.0));
        assert!(close(x.subjective_expected_utility(eg::H, eg::S_H, &p).unwrap(), 0.9));
        let q = eg::rbr_profile(&x);
        assert!(close(x.subjective_expected_utility(eg::A, eg::S_A, &q).unwrap(), 1.0));
    }

    #[test]
    fn best_responses() {
        let x = eg::ii_maid();
        let p = eg::s6_profile(&x);
        let br = x.best_response_ii(eg::A, &p, DEFAULT_CAP).unwrap();
        assert!(close(br.value, 0.0));
        assert!(br.policy.0.keys().all(|s| br.policy.pure_action(s) == Some(eg::HIGH)));

        let q = eg::rbr_profile(&x);
        let br = x.best_response_ii(eg::A, &q, DEFAULT_CAP).unwrap();
        assert!(close(br.value, 1.0));
        assert!(br.policy.0.keys().all(|s| br.policy.pure_action(s) == Some(eg::LOW)));

        let br = x.best_response_ii(eg::H, &q, DEFAULT_CAP).unwrap();
        assert!(close(br.value, 0.9));
        for set in br.policy.0.keys() {
            let obs: BTreeMap<&str, &str> = set.observation.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
            if let Some(c) = obs.get(eg::C) {
                let want = if *c == obs[eg::D_A] { eg::DEPLOY } else { eg::NOT_DEPLOY };
                assert_eq!(br.policy.pure_action(set), Some(want));
            } else {
                assert_eq!(br.policy.pure_action(set), Some(eg::DEPLOY));
            }
        }
    }

    #[test]
    fn nash_checks() {
        let x = eg::ii_maid();
        assert!(x.is_nash_ii(&eg::s6_profile(&x), 1e-6).unwrap().is_nash);
        assert!(x.is_nash_ii(&eg::rbr_profile(&x), 1e-6).unwrap().is_nash);
        let r = x.is_nash_ii(&eg::mutated_profile(&x), 1e-6).unwrap();
        assert!(!r.is_nash);
        assert!((r.regrets[eg::A] - 0.2).abs() < 1e-6);
    }

    #[test]
    fn incomplete_profile_is_rejected() {
        let x = eg::ii_maid();
        let p = eg::s6_profile(&x).without_agent(eg::H);
        assert!(matches!(x.is_nash_ii(&p, 1e-6), Err(IiError::MissingInfoSetRule(_))));
    }

    #[test]
    fn solver_finds_checked_profile() {
        let x = eg::ii_maid();
        let p = x.find_nash_ii(DEFAULT_CAP, DEFAULT_ITERATIONS).unwrap().unwrap();
        assert!(x.is_nash_ii(&p, 1e-6).unwrap().is_nash);
    }

    #[test]
    fn embedding_solution_is_a_maid_equilibrium() {
        let m = eg::honesty_maid();
        let x = IiMaid::from_maid(m.clone(), "M");
        let p = x.find_nash_ii(DEFAULT_CAP, DEFAULT_ITERATIONS).unwrap().unwrap();
        let rules = x.rules_for_model("M", &p).unwrap();
        assert!(m.find_pure_nash(DEFAULT_CAP).unwrap().contains(&rules));
    }

    #[test]
    fn perfect_recall_of_running_example() {
        assert!(eg::ii_maid().has_perfect_recall_ii());
    }

    #[test]
    fn construction_errors() {
        assert_eq!(IiMaid::new(["A"], "x", vec![]).unwrap_err(), IiError::Empty);
        let s = SubjectiveMaid::new("x", eg::honesty_maid()).believing(eg::A, [("y", 1.0)]);
        assert!(matches!(IiMaid::new([eg::A, eg::H], "x", vec![s]), Err(IiError::BadBeliefs { .. })));
        let s = SubjectiveMaid::new("x", eg::honesty_maid()).believing(eg::A, [("x", 0.9)]);
        assert!(matches!(IiMaid::new([eg::A, eg::H], "x", vec![s]), Err(IiError::BadBeliefs { .. })));
    }
}
