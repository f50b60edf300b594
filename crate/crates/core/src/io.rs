//! JSON game documents and profile files.
//!
//! Probabilities and utility values are written as decimal strings. CPD and
//! fixed-rule rows are indexed by parent contexts with parents sorted by
//! name and the first parent varying slowest; entries follow the variable's
//! domain order. Serialization is canonical: parsing a serialized document
//! and serializing again yields identical text.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::bn::{Assignment, Variable, DEFAULT_TOL};
use crate::finite_depth::{DepthError, DepthStack, PartialPostPolicyMaid};
use crate::ii_maid::{IiMaid, IiPolicyProfile, InformationSet, SubjectiveMaid};
use crate::maid::{DecisionRule, Maid, MaidNode, NodeKind, PolicyProfile};

pub const FORMAT_VERSION: &str = "1";

#[derive(Clone, Debug, PartialEq, Error)]
pub enum IoError {
    #[error("{path}: {message}")]
    Read { path: String, message: String },
    #[error("schema violation at `{path}` (line {line}, column {column}): {message}")]
    Schema { path: String, line: usize, column: usize, message: String },
    #[error("invalid document at `{path}`: {message}")]
    Invalid { path: String, message: String },
}

fn invalid(path: impl Into<String>, message: impl fmt::Display) -> IoError {
    IoError::Invalid { path: path.into(), message: message.to_string() }
}

/// A real number carried as a decimal string.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Decimal(pub f64);

impl Serialize for Decimal {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{}", self.0))
    }
}

impl<'de> Deserialize<'de> for Decimal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Decimal;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a decimal string such as \"0.25\"")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Decimal, E> {
                match v.trim().parse::<f64>() {
                    Ok(x) if x.is_finite() => Ok(Decimal(x)),
                    _ => Err(E::custom(format!("`{v}` is not a finite decimal"))),
                }
            }
        }
        d.deserialize_str(V)
    }
}

fn decimals(row: &[f64]) -> Vec<Decimal> {
    row.iter().map(|&x| Decimal(x)).collect()
}

fn floats(row: &[Decimal]) -> Vec<f64> {
    row.iter().map(|x| x.0).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DocumentKind {
    #[serde(rename = "maid")]
    Maid,
    #[serde(rename = "ii-maid")]
    IiMaid,
    #[serde(rename = "depth-stack")]
    DepthStack,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VariableKind {
    Chance,
    Decision,
    Utility,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariableDoc {
    pub name: String,
    pub kind: VariableKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub owner: Option<String>,
    pub domain: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utility_values: Option<Vec<Decimal>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDoc {
    pub id: String,
    pub variables: Vec<VariableDoc>,
    /// `[parent, child]` pairs.
    pub edges: Vec<(String, String)>,
    pub cpds: BTreeMap<String, Vec<Vec<Decimal>>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub beliefs: BTreeMap<String, BTreeMap<String, Decimal>>,
    /// Decision rules already fixed in this model.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub fixed: BTreeMap<String, Vec<Vec<Decimal>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameDocument {
    pub format_version: String,
    pub kind: DocumentKind,
    pub agents: Vec<String>,
    pub objective: String,
    pub models: Vec<ModelDoc>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub declared_depths: BTreeMap<String, usize>,
}

/// A parsed and validated game.
#[derive(Clone, Debug, PartialEq)]
pub enum Game {
    Maid { id: String, maid: Maid },
    IiMaid(IiMaid),
    DepthStack(DepthStack),
}

impl Game {
    pub fn kind(&self) -> DocumentKind {
        match self {
            Game::Maid { .. } => DocumentKind::Maid,
            Game::IiMaid(_) => DocumentKind::IiMaid,
            Game::DepthStack(_) => DocumentKind::DepthStack,
        }
    }

    /// The game as an II-MAID (a MAID becomes a single common-knowledge model).
    pub fn to_ii_maid(&self) -> IiMaid {
        match self {
            Game::Maid { id, maid } => IiMaid::from_maid(maid.clone(), id),
            Game::IiMaid(x) => x.clone(),
            Game::DepthStack(s) => s.as_ii_maid().clone(),
        }
    }

    pub fn to_document(&self) -> GameDocument {
        let (agents, objective, models, declared_depths) = match self {
            Game::Maid { id, maid } => {
                (maid.agents().to_vec(), id.clone(), vec![model_doc(id, &maid.clone().into(), &BTreeMap::new())], BTreeMap::new())
            }
            Game::IiMaid(x) => (x.agents().to_vec(), x.objective().to_string(), subjective_docs(x), BTreeMap::new()),
            Game::DepthStack(s) => {
                let x = s.as_ii_maid();
                (x.agents().to_vec(), x.objective().to_string(), subjective_docs(x), s.classify_depth().depths)
            }
        };
        GameDocument { format_version: FORMAT_VERSION.into(), kind: self.kind(), agents, objective, models, declared_depths }
    }
}

fn subjective_docs(x: &IiMaid) -> Vec<ModelDoc> {
    x.models().map(|s| model_doc(&s.id, &s.model, &s.beliefs)).collect()
}

fn model_doc(id: &str, model: &PartialPostPolicyMaid, beliefs: &BTreeMap<String, BTreeMap<String, f64>>) -> ModelDoc {
    let m = model.base();
    let mut variables = Vec::new();
    let mut edges = Vec::new();
    let mut cpds = BTreeMap::new();
    for node in m.nodes() {
        let name = node.variable.name.clone();
        let (kind, owner) = match &node.kind {
            NodeKind::Chance => (VariableKind::Chance, None),
            NodeKind::Decision(a) => (VariableKind::Decision, Some(a.clone())),
            NodeKind::Utility(a) => (VariableKind::Utility, Some(a.clone())),
        };
        variables.push(VariableDoc {
            name: name.clone(),
            kind,
            owner,
            domain: node.variable.domain.clone(),
            utility_values: node.variable.utilities.as_deref().map(decimals),
        });
        edges.extend(node.parents.iter().map(|p| (p.clone(), name.clone())));
        if let Some(rows) = node.rows {
            cpds.insert(name, rows.iter().map(|r| decimals(r)).collect());
        }
    }
    let beliefs = beliefs
        .iter()
        .map(|(a, b)| (a.clone(), b.iter().map(|(k, p)| (k.clone(), Decimal(*p))).collect()))
        .collect();
    let fixed = model.xi().0.iter().map(|(d, r)| (d.clone(), r.rows.iter().map(|x| decimals(x)).collect())).collect();
    ModelDoc { id: id.to_string(), variables, edges, cpds, beliefs, fixed }
}

fn build_model(doc: &ModelDoc, agents: &[String], path: &str) -> Result<PartialPostPolicyMaid, IoError> {
    let names: BTreeSet<&str> = doc.variables.iter().map(|v| v.name.as_str()).collect();
    for (k, (from, to)) in doc.edges.iter().enumerate() {
        for end in [from, to] {
            if !names.contains(end.as_str()) {
                return Err(invalid(format!("{path}.edges[{k}]"), format!("unknown variable `{end}`")));
            }
        }
    }
    for name in doc.cpds.keys().chain(doc.fixed.keys()) {
        if !names.contains(name.as_str()) {
            return Err(invalid(format!("{path}.cpds"), format!("unknown variable `{name}`")));
        }
    }
    let mut nodes = Vec::new();
    for (k, v) in doc.variables.iter().enumerate() {
        let vpath = format!("{path}.variables[{k}]");
        let kind = match (v.kind, &v.owner) {
            (VariableKind::Chance, None) => NodeKind::Chance,
            (VariableKind::Chance, Some(_)) => return Err(invalid(vpath, "chance variables have no owner")),
            (VariableKind::Decision, Some(a)) => NodeKind::Decision(a.clone()),
            (VariableKind::Utility, Some(a)) => NodeKind::Utility(a.clone()),
            (_, None) => return Err(invalid(vpath, "owner is required")),
        };
        let variable = match (&kind, &v.utility_values) {
            (NodeKind::Utility(_), Some(values)) => {
                if values.len() != v.domain.len() {
                    return Err(invalid(vpath, "utility_values must match the domain"));
                }
                Variable::utility(v.name.clone(), v.domain.iter().cloned().zip(floats(values)))
            }
            (NodeKind::Utility(_), None) => return Err(invalid(vpath, "utility_values is required")),
            (_, Some(_)) => return Err(invalid(vpath, "only utility variables carry utility_values")),
            (_, None) => Variable::new(v.name.clone(), v.domain.clone()),
        };
        let parents: Vec<String> = doc.edges.iter().filter(|(_, to)| *to == v.name).map(|(from, _)| from.clone()).collect();
        let rows = doc.cpds.get(&v.name).map(|rows| rows.iter().map(|r| floats(r)).collect());
        nodes.push(MaidNode { variable, kind, parents, rows });
    }
    let m = Maid::new(agents.to_vec(), nodes).map_err(|e| invalid(path, e))?;
    let mut xi = PolicyProfile::new();
    for (d, rows) in &doc.fixed {
        let rule = DecisionRule::new(d.clone(), rows.iter().map(|r| floats(r)).collect());
        m.check_rule(&rule).map_err(|e| invalid(format!("{path}.fixed.{d}"), e))?;
        xi.insert(rule);
    }
    PartialPostPolicyMaid::new(m, xi).map_err(|e| invalid(path, e))
}

/// Parses and validates a game document.
pub fn parse(text: &str) -> Result<Game, IoError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: GameDocument = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        IoError::Schema { path, line: inner.line(), column: inner.column(), message: inner.to_string() }
    })?;
    from_document(&doc)
}

pub fn from_document(doc: &GameDocument) -> Result<Game, IoError> {
    if doc.format_version != FORMAT_VERSION {
        return Err(invalid("format_version", format!("unsupported version `{}`", doc.format_version)));
    }
    let mut ids = BTreeSet::new();
    for (k, m) in doc.models.iter().enumerate() {
        if !ids.insert(m.id.as_str()) {
            return Err(invalid(format!("models[{k}].id"), format!("duplicate id `{}`", m.id)));
        }
    }
    if !ids.contains(doc.objective.as_str()) {
        return Err(invalid("objective", format!("unknown model `{}`", doc.objective)));
    }
    let mut subjective = Vec::new();
    for (k, m) in doc.models.iter().enumerate() {
        let path = format!("models[{k}]");
        for (agent, row) in &m.beliefs {
            let bpath = format!("{path}.beliefs.{agent}");
            if let Some(bad) = row.keys().find(|t| !ids.contains(t.as_str())) {
                return Err(invalid(bpath, format!("unknown model `{bad}`")));
            }
            if let Some((t, p)) = row.iter().find(|(_, p)| p.0 < 0.0) {
                return Err(invalid(bpath, format!("negative probability {} on `{t}`", p.0)));
            }
            let sum: f64 = row.values().map(|p| p.0).sum();
            if (sum - 1.0).abs() > DEFAULT_TOL {
                return Err(invalid(bpath, format!("row sums to {sum}")));
            }
        }
        let model = build_model(m, &doc.agents, &path)?;
        let mut s = SubjectiveMaid::new(m.id.clone(), model);
        s.beliefs = m
            .beliefs
            .iter()
            .map(|(a, row)| (a.clone(), row.iter().map(|(t, p)| (t.clone(), p.0)).collect()))
            .collect();
        subjective.push(s);
    }
    match doc.kind {
        DocumentKind::Maid => {
            if subjective.len() != 1 {
                return Err(invalid("models", "a MAID document holds exactly one model"));
            }
            let s = subjective.pop().unwrap();
            if !s.beliefs.is_empty() || !s.model.xi().0.is_empty() {
                return Err(invalid("models[0]", "a MAID document carries no beliefs or fixed rules"));
            }
            Ok(Game::Maid { id: s.id, maid: s.model.base().clone() })
        }
        DocumentKind::IiMaid => IiMaid::new(doc.agents.clone(), &doc.objective, subjective)
            .map(Game::IiMaid)
            .map_err(|e| invalid("models", e)),
        DocumentKind::DepthStack => DepthStack::new(doc.agents.clone(), &doc.objective, subjective, &doc.declared_depths)
            .map(Game::DepthStack)
            .map_err(|e: DepthError| invalid("models", e)),
    }
}

/// Canonical pretty JSON with a trailing newline.
pub fn serialize(game: &Game) -> String {
    let mut s = serde_json::to_string_pretty(&game.to_document()).expect("documents serialize");
    s.push('\n');
    s
}

pub fn read_text(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path)
        .map_err(|e| IoError::Read { path: path.display().to_string(), message: e.to_string() })
}

pub fn load(path: &Path) -> Result<Game, IoError> {
    parse(&read_text(path)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProfileKind {
    #[serde(rename = "maid-profile")]
    Maid,
    #[serde(rename = "ii-profile")]
    Ii,
}

/// One row of a profile: the decision (MAID profiles) or agent (II
/// profiles), the observed parent outcomes and a distribution over actions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decision: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agent: Option<String>,
    pub observation: BTreeMap<String, String>,
    pub distribution: BTreeMap<String, Decimal>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileDocument {
    pub format_version: String,
    pub kind: ProfileKind,
    pub entries: Vec<ProfileEntry>,
}

pub fn parse_profile(text: &str) -> Result<ProfileDocument, IoError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: ProfileDocument = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        IoError::Schema { path, line: inner.line(), column: inner.column(), message: inner.to_string() }
    })?;
    if doc.format_version != FORMAT_VERSION {
        return Err(invalid("format_version", format!("unsupported version `{}`", doc.format_version)));
    }
    Ok(doc)
}

pub fn load_profile(path: &Path) -> Result<ProfileDocument, IoError> {
    parse_profile(&read_text(path)?)
}

pub fn serialize_profile(doc: &ProfileDocument) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("profiles serialize");
    s.push('\n');
    s
}

/// An II profile from a document of either kind. MAID-profile entries are
/// attributed to the owner of their decision in `x`'s objective model.
pub fn ii_profile(x: &IiMaid, doc: &ProfileDocument) -> Result<IiPolicyProfile, IoError> {
    let mut p = IiPolicyProfile::new();
    for (k, e) in doc.entries.iter().enumerate() {
        let path = format!("entries[{k}]");
        let agent = match (doc.kind, &e.agent, &e.decision) {
            (ProfileKind::Ii, Some(a), _) => a.clone(),
            (ProfileKind::Maid, _, Some(d)) => x
                .objective_model()
                .maid()
                .owner(d)
                .ok_or_else(|| invalid(format!("{path}.decision"), format!("`{d}` is not a decision")))?
                .to_string(),
            (ProfileKind::Ii, None, _) => return Err(invalid(path, "agent is required")),
            (ProfileKind::Maid, _, None) => return Err(invalid(path, "decision is required")),
        };
        let set = InformationSet {
            agent,
            observation: e.observation.iter().map(|(a, b)| (a.clone(), b.clone())).collect(),
            actions: e.distribution.keys().cloned().collect(),
        };
        if p.get(&set).is_some() {
            return Err(invalid(path, format!("duplicate entry for {set}")));
        }
        p.insert(set, e.distribution.values().map(|d| d.0).collect());
    }
    Ok(p)
}

/// A MAID policy profile; every decision needs an entry per context.
pub fn maid_profile(m: &Maid, doc: &ProfileDocument) -> Result<PolicyProfile, IoError> {
    if doc.kind != ProfileKind::Maid {
        return Err(invalid("kind", "expected a maid-profile"));
    }
    let mut rows: BTreeMap<&str, Vec<Option<Vec<f64>>>> = BTreeMap::new();
    for (k, e) in doc.entries.iter().enumerate() {
        let path = format!("entries[{k}]");
        let d = e.decision.as_deref().ok_or_else(|| invalid(&path, "decision is required"))?;
        let var = m
            .variable(d)
            .filter(|_| m.kind(d).is_some_and(|k| k.is_decision()))
            .ok_or_else(|| invalid(format!("{path}.decision"), format!("`{d}` is not a decision")))?;
        let a: Assignment = e.observation.iter().map(|(x, y)| (x.clone(), y.clone())).collect();
        let ctx = m
            .context_index(d, &a)
            .filter(|_| a.0.len() == m.parents(d).unwrap().len())
            .ok_or_else(|| invalid(format!("{path}.observation"), format!("not a context of `{d}`")))?;
        let keys: BTreeSet<&String> = e.distribution.keys().collect();
        if keys != var.domain.iter().collect() {
            return Err(invalid(format!("{path}.distribution"), format!("actions must be the domain of `{d}`")));
        }
        let row = var.domain.iter().map(|l| e.distribution[l].0).collect();
        let slot = rows.entry(d).or_insert_with(|| vec![None; m.num_contexts(d).unwrap()]);
        if slot[ctx].replace(row).is_some() {
            return Err(invalid(path, "duplicate context"));
        }
    }
    let mut p = PolicyProfile::new();
    for (d, slots) in rows {
        let full: Option<Vec<Vec<f64>>> = slots.into_iter().collect();
        let full = full.ok_or_else(|| invalid("entries", format!("`{d}` is missing contexts")))?;
        let rule = DecisionRule::new(d, full);
        m.check_rule(&rule).map_err(|e| invalid("entries", e))?;
        p.insert(rule);
    }
    Ok(p)
}

pub fn ii_profile_document(p: &IiPolicyProfile) -> ProfileDocument {
    let entries = p
        .0
        .iter()
        .map(|(set, row)| ProfileEntry {
            decision: None,
            agent: Some(set.agent.clone()),
            observation: set.observation.iter().cloned().collect(),
            distribution: set.actions.iter().cloned().zip(row.iter().map(|&x| Decimal(x))).collect(),
        })
        .collect();
    ProfileDocument { format_version: FORMAT_VERSION.into(), kind: ProfileKind::Ii, entries }
}

pub fn maid_profile_document(m: &Maid, p: &PolicyProfile) -> ProfileDocument {
    let mut entries = Vec::new();
    for (d, rule) in &p.0 {
        let var = m.variable(d).unwrap();
        for (ctx, row) in rule.rows.iter().enumerate() {
            entries.push(ProfileEntry {
                decision: Some(d.clone()),
                agent: None,
                observation: m.context(d, ctx).0,
                distribution: var.domain.iter().cloned().zip(row.iter().map(|&x| Decimal(x))).collect(),
            });
        }
    }
    ProfileDocument { format_version: FORMAT_VERSION.into(), kind: ProfileKind::Maid, entries }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation_game as eg;

    #[test]
    fn round_trip_is_stable() {
        let games = [
            Game::Maid { id: "M_H".into(), maid: eg::honesty_maid() },
            Game::IiMaid(eg::ii_maid()),
            Game::DepthStack(eg::depth3_stack()),
        ];
        for g in games {
            let text = serialize(&g);
            let back = parse(&text).unwrap();
            assert_eq!(back, g);
            assert_eq!(serialize(&back), text);
        }
    }

    #[test]
    fn probabilities_are_decimal_strings() {
        let text = serialize(&Game::IiMaid(eg::ii_maid()));
        assert!(text.contains("\"0.1\""));
        assert!(text.contains("\"0.9\""));
    }

    #[test]
    fn unknown_fields_are_rejected_with_a_path() {
        let text = serialize(&Game::IiMaid(eg::ii_maid())).replacen("\"id\"", "\"colour\": \"red\", \"id\"", 1);
        match parse(&text) {
            Err(IoError::Schema { path, .. }) => assert!(path.starts_with("models[0]"), "{path}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn short_belief_row_is_named() {
        let mut doc = Game::IiMaid(eg::ii_maid()).to_document();
        doc.models[1].beliefs.get_mut(eg::A).unwrap().insert(eg::S_A.into(), Decimal(0.9));
        match from_document(&doc) {
            Err(IoError::Invalid { path, message }) => {
                assert_eq!(path, "models[1].beliefs.A");
                assert!(message.contains("0.9"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn profiles_round_trip() {
        let x = eg::ii_maid();
        let p = eg::rbr_profile(&x);
        let doc = ii_profile_document(&p);
        let back = parse_profile(&serialize_profile(&doc)).unwrap();
        assert_eq!(ii_profile(&x, &back).unwrap(), p);

        let m = eg::honesty_maid();
        let q = eg::profile([eg::truthful(&m), eg::deploy_iff_match(&m)]);
        let doc = maid_profile_document(&m, &q);
        assert_eq!(maid_profile(&m, &doc).unwrap(), q);
    }

    #[test]
    fn incomplete_maid_profile_is_rejected() {
        let m = eg::honesty_maid();
        let mut doc = maid_profile_document(&m, &eg::profile([eg::truthful(&m)]));
        doc.entries.pop();
        assert!(maid_profile(&m, &doc).is_err());
    }
}
