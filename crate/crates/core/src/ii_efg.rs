//! Belief spaces over game trees, meta-information sets, interim
//! utilities and the conversion from II-MAIDs.
//!
//! A state of the world picks a game tree; each agent holds a belief over
//! states at every state. An agent's type at a state is its belief row.
//! Strategies are keyed by type, so two states an agent cannot tell apart
//! always receive the same behaviour.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::bn::{check_row, DEFAULT_TOL};
use crate::efg::{maid2efg, BehaviourProfile, Efg, EfgError, Observation};
use crate::ii_maid::{info_set_of, IiError, IiMaid, IiPolicyProfile, InformationSet};
use crate::maid::{NashReport, DEFAULT_CAP, TIE_EPS};

/// Resolution at which belief rows are compared when forming types.
const TYPE_SCALE: f64 = 1e9;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum IiEfgError {
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("unknown game `{0}`")]
    UnknownGame(String),
    #[error("unknown agent `{0}`")]
    UnknownAgent(String),
    #[error("belief of `{agent}` at `{state}`: {reason}")]
    BadBeliefs { agent: String, state: String, reason: String },
    #[error("belief of `{agent}` at `{state}` puts mass {mass} on states with a different belief")]
    Incoherent { agent: String, state: String, mass: f64 },
    #[error("no strategy row for {0}")]
    MissingRow(MetaInformationSet),
    #[error("strategy row for {set}: {reason}")]
    InvalidRow { set: MetaInformationSet, reason: String },
    #[error("no information set of the II-MAID corresponds to {0}")]
    Uncorresponded(MetaInformationSet),
    #[error("information set {0} maps to different tree classes")]
    AmbiguousCorrespondence(InformationSet),
    #[error("search space of {size} pure deviations exceeds cap {cap}")]
    SearchSpaceTooLarge { size: u128, cap: u128 },
    #[error(transparent)]
    Efg(#[from] EfgError),
    #[error(transparent)]
    Ii(#[from] IiError),
}

/// A belief row rounded for equality tests, listing states with positive
/// mass.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct TypeKey(pub Vec<(String, i64)>);

impl TypeKey {
    fn of(row: &BTreeMap<String, f64>) -> Self {
        TypeKey(
            row.iter()
                .map(|(s, p)| (s.clone(), (p * TYPE_SCALE).round() as i64))
                .filter(|(_, q)| *q != 0)
                .collect(),
        )
    }
}

impl fmt::Display for TypeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(s, q)| format!("{s}:{}", *q as f64 / TYPE_SCALE)).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

/// Equivalence class of tree information sets with the same owner, actions
/// and observation.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct ClassKey {
    pub agent: String,
    pub actions: Vec<String>,
    pub observation: Observation,
}

impl fmt::Display for ClassKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let obs: Vec<String> = self.observation.0.iter().map(|(k, v)| format!("{k}:{v}")).collect();
        write!(f, "{}[{}]{{{}}}", self.agent, obs.join(","), self.actions.join(","))
    }
}

/// A class of information sets crossed with one of the agent's types.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct MetaInformationSet {
    pub class: ClassKey,
    pub belief_type: TypeKey,
}

impl fmt::Display for MetaInformationSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.class, self.belief_type)
    }
}

/// One distribution per meta-information set, over the class's actions.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct IiStrategy(pub BTreeMap<MetaInformationSet, Vec<f64>>);

impl IiStrategy {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert_pure(&mut self, set: MetaInformationSet, action: &str) {
        let row = set.class.actions.iter().map(|a| if a == action { 1.0 } else { 0.0 }).collect();
        self.0.insert(set, row);
    }
}

/// States, the game played at each and per-agent beliefs over states.
#[derive(Clone, Debug, PartialEq)]
pub struct BeliefSpace {
    game_of: BTreeMap<String, String>,
    beliefs: BTreeMap<String, BTreeMap<String, BTreeMap<String, f64>>>,
}

impl BeliefSpace {
    /// `game_of` maps states to game ids; `beliefs[agent][state]` is a
    /// distribution over states. Rows must be normalized and coherent.
    pub fn new(
        game_of: BTreeMap<String, String>,
        beliefs: BTreeMap<String, BTreeMap<String, BTreeMap<String, f64>>>,
    ) -> Result<Self, IiEfgError> {
        for (agent, rows) in &beliefs {
            for state in game_of.keys() {
                let bad = |reason: String| IiEfgError::BadBeliefs { agent: agent.clone(), state: state.clone(), reason };
                let row = rows.get(state).ok_or_else(|| bad("missing".into()))?;
                if let Some(s) = row.keys().find(|s| !game_of.contains_key(*s)) {
                    return Err(IiEfgError::UnknownState(s.clone()));
                }
                let values: Vec<f64> = row.values().copied().collect();
                check_row(agent, 0, &values, DEFAULT_TOL).map_err(|e| bad(e.to_string()))?;
            }
            if let Some(s) = rows.keys().find(|s| !game_of.contains_key(*s)) {
                return Err(IiEfgError::UnknownState(s.clone()));
            }
        }
        let space = BeliefSpace { game_of, beliefs };
        for agent in space.beliefs.keys() {
            for state in space.game_of.keys() {
                let own = space.type_of(agent, state);
                let mass: f64 = space.beliefs[agent][state]
                    .iter()
                    .filter(|(s, _)| space.type_of(agent, s) != own)
                    .map(|(_, p)| p)
                    .sum();
                if mass > DEFAULT_TOL {
                    return Err(IiEfgError::Incoherent { agent: agent.clone(), state: state.clone(), mass });
                }
            }
        }
        Ok(space)
    }

    pub fn states(&self) -> impl Iterator<Item = &str> {
        self.game_of.keys().map(String::as_str)
    }

    pub fn game_of(&self, state: &str) -> Option<&str> {
        self.game_of.get(state).map(String::as_str)
    }

    pub fn belief(&self, agent: &str, state: &str) -> Option<&BTreeMap<String, f64>> {
        self.beliefs.get(agent)?.get(state)
    }

    pub fn type_of(&self, agent: &str, state: &str) -> TypeKey {
        TypeKey::of(&self.beliefs[agent][state])
    }

    /// Distinct types of `agent` across all states.
    pub fn types(&self, agent: &str) -> BTreeSet<TypeKey> {
        self.game_of.keys().map(|s| self.type_of(agent, s)).collect()
    }
}

/// Report of an interim equilibrium check at one state.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InterimReport {
    pub state: String,
    pub is_nash: bool,
    pub values: BTreeMap<String, f64>,
    pub regrets: BTreeMap<String, f64>,
}

impl From<InterimReport> for NashReport {
    fn from(r: InterimReport) -> Self {
        NashReport { is_nash: r.is_nash, values: r.values, regrets: r.regrets }
    }
}

/// Agents, a set of game trees, a belief space and the actual state.
#[derive(Clone, Debug, PartialEq)]
pub struct IiEfg {
    agents: Vec<String>,
    games: BTreeMap<String, Efg>,
    space: BeliefSpace,
    interim_state: String,
}

impl IiEfg {
    pub fn new(
        agents: Vec<String>,
        games: BTreeMap<String, Efg>,
        space: BeliefSpace,
        interim_state: &str,
    ) -> Result<Self, IiEfgError> {
        let mut agents = agents;
        agents.sort();
        agents.dedup();
        for g in space.game_of.values() {
            if !games.contains_key(g) {
                return Err(IiEfgError::UnknownGame(g.clone()));
            }
        }
        if !space.game_of.contains_key(interim_state) {
            return Err(IiEfgError::UnknownState(interim_state.to_string()));
        }
        for a in &agents {
            if !space.beliefs.contains_key(a) {
                return Err(IiEfgError::BadBeliefs { agent: a.clone(), state: interim_state.into(), reason: "missing".into() });
            }
        }
        for a in space.beliefs.keys() {
            if !agents.contains(a) {
                return Err(IiEfgError::UnknownAgent(a.clone()));
            }
        }
        Ok(IiEfg { agents, games, space, interim_state: interim_state.to_string() })
    }

    pub fn agents(&self) -> &[String] {
        &self.agents
    }

    pub fn space(&self) -> &BeliefSpace {
        &self.space
    }

    pub fn interim_state(&self) -> &str {
        &self.interim_state
    }

    pub fn games(&self) -> &BTreeMap<String, Efg> {
        &self.games
    }

    /// The tree played at `state`.
    pub fn game_at(&self, state: &str) -> Result<&Efg, IiEfgError> {
        let g = self.space.game_of(state).ok_or_else(|| IiEfgError::UnknownState(state.to_string()))?;
        Ok(&self.games[g])
    }

    fn class_of(efg: &Efg, k: usize) -> ClassKey {
        let set = &efg.info_sets()[k];
        ClassKey { agent: set.agent.clone(), actions: set.actions.clone(), observation: efg.observation_of(k) }
    }

    /// Classes of `agent`'s information sets across every game.
    pub fn classes(&self, agent: &str) -> BTreeSet<ClassKey> {
        self.games
            .values()
            .flat_map(|g| g.info_sets_of(agent).into_iter().map(move |k| Self::class_of(g, k)))
            .collect()
    }

    /// Every class of `agent` crossed with every type it holds.
    pub fn meta_information_sets(&self, agent: &str) -> BTreeSet<MetaInformationSet> {
        let classes = self.classes(agent);
        self.space
            .types(agent)
            .into_iter()
            .flat_map(|t| classes.iter().map(move |c| MetaInformationSet { class: c.clone(), belief_type: t.clone() }))
            .collect()
    }

    /// Meta-information sets of `agent`'s type at `state`.
    pub fn meta_information_sets_at(&self, agent: &str, state: &str) -> BTreeSet<MetaInformationSet> {
        let t = self.space.type_of(agent, state);
        self.classes(agent).into_iter().map(|class| MetaInformationSet { class, belief_type: t.clone() }).collect()
    }

    /// Meta-information sets of `agent`'s type at `state` that occur in a
    /// game the agent considers possible there.
    fn relevant_sets(&self, agent: &str, state: &str) -> Vec<MetaInformationSet> {
        let t = self.space.type_of(agent, state);
        let mut classes = BTreeSet::new();
        for (s, p) in &self.space.beliefs[agent][state] {
            if *p > 0.0 {
                let g = &self.games[&self.space.game_of[s]];
                classes.extend(g.info_sets_of(agent).into_iter().map(|k| Self::class_of(g, k)));
            }
        }
        classes.into_iter().map(|class| MetaInformationSet { class, belief_type: t.clone() }).collect()
    }

    /// Behaviour at `state`: each information set takes the row of its
    /// owner's type there.
    pub fn behaviour_at(&self, sigma: &IiStrategy, state: &str) -> Result<BehaviourProfile, IiEfgError> {
        let g = self.game_at(state)?;
        let mut rows = Vec::with_capacity(g.info_sets().len());
        for k in 0..g.info_sets().len() {
            let class = Self::class_of(g, k);
            let set = MetaInformationSet { belief_type: self.space.type_of(&class.agent, state), class };
            let row = sigma.0.get(&set).ok_or_else(|| IiEfgError::MissingRow(set.clone()))?;
            if row.len() != set.class.actions.len() {
                return Err(IiEfgError::InvalidRow { set, reason: "width".into() });
            }
            check_row("strategy", 0, row, DEFAULT_TOL)
                .map_err(|e| IiEfgError::InvalidRow { set: set.clone(), reason: e.to_string() })?;
            rows.push(row.clone());
        }
        Ok(BehaviourProfile(rows))
    }

    /// `agent`'s expected payoff in the game at `state`.
    pub fn game_utility(&self, sigma: &IiStrategy, agent: &str, state: &str) -> Result<f64, IiEfgError> {
        let g = self.game_at(state)?;
        if !g.agents().iter().any(|a| a == agent) {
            return Ok(0.0);
        }
        Ok(g.expected_utility(&self.behaviour_at(sigma, state)?, agent)?)
    }

    fn weighted(&self, sigma: &IiStrategy, agent: &str, state: &str, restrict: bool) -> Result<f64, IiEfgError> {
        if !self.agents.iter().any(|a| a == agent) {
            return Err(IiEfgError::UnknownAgent(agent.to_string()));
        }
        let row = self.space.belief(agent, state).ok_or_else(|| IiEfgError::UnknownState(state.to_string()))?;
        let own = self.space.type_of(agent, state);
        let mut total = 0.0;
        for (s, p) in row {
            if *p > 0.0 && (!restrict || self.space.type_of(agent, s) == own) {
                total += p * self.game_utility(sigma, agent, s)?;
            }
        }
        Ok(total)
    }

    /// Belief-weighted expected payoff of `agent` at `state`.
    pub fn interim_utility(&self, sigma: &IiStrategy, agent: &str, state: &str) -> Result<f64, IiEfgError> {
        self.weighted(sigma, agent, state, false)
    }

    /// The same sum over states where `agent` holds its type at `state`.
    pub fn interim_utility_restricted(&self, sigma: &IiStrategy, agent: &str, state: &str) -> Result<f64, IiEfgError> {
        self.weighted(sigma, agent, state, true)
    }

    /// Checks every agent for a pure deviation at its type at `state`.
    pub fn is_interim_nash(&self, sigma: &IiStrategy, state: &str, tol: f64) -> Result<InterimReport, IiEfgError> {
        self.is_interim_nash_capped(sigma, state, tol, DEFAULT_CAP)
    }

    pub fn is_interim_nash_capped(
        &self,
        sigma: &IiStrategy,
        state: &str,
        tol: f64,
        cap: u128,
    ) -> Result<InterimReport, IiEfgError> {
        let mut values = BTreeMap::new();
        let mut regrets = BTreeMap::new();
        for agent in &self.agents {
            let value = self.interim_utility(sigma, agent, state)?;
            let sets = self.relevant_sets(agent, state);
            let size = sets
                .iter()
                .map(|s| s.class.actions.len() as u128)
                .try_fold(1u128, |acc, k| acc.checked_mul(k))
                .unwrap_or(u128::MAX);
            if size > cap {
                return Err(IiEfgError::SearchSpaceTooLarge { size, cap });
            }
            let mut best = f64::NEG_INFINITY;
            let mut digits = vec![0usize; sets.len()];
            let mut candidate = sigma.clone();
            'outer: loop {
                for (set, &k) in sets.iter().zip(&digits) {
                    let action = set.class.actions[k].clone();
                    candidate.insert_pure(set.clone(), &action);
                }
                let v = self.interim_utility(&candidate, agent, state)?;
                if v > best + TIE_EPS {
                    best = v;
                }
                let mut pos = sets.len();
                loop {
                    if pos == 0 {
                        break 'outer;
                    }
                    pos -= 1;
                    digits[pos] += 1;
                    if digits[pos] < sets[pos].class.actions.len() {
                        break;
                    }
                    digits[pos] = 0;
                }
            }
            values.insert(agent.clone(), value);
            regrets.insert(agent.clone(), (best - value).max(0.0));
        }
        let is_nash = regrets.values().all(|r| *r <= tol);
        Ok(InterimReport { state: state.to_string(), is_nash, values, regrets })
    }

    /// Interim checks at every state; the profile is a Bayesian
    /// equilibrium when all pass.
    pub fn is_bayesian_equilibrium(&self, sigma: &IiStrategy, tol: f64) -> Result<(bool, Vec<InterimReport>), IiEfgError> {
        let reports = self
            .space
            .states()
            .map(|s| self.is_interim_nash(sigma, s, tol))
            .collect::<Result<Vec<_>, _>>()?;
        Ok((reports.iter().all(|r| r.is_nash), reports))
    }
}

/// An [`IiEfg`] built from an II-MAID with its information-set
/// correspondence.
#[derive(Clone, Debug, PartialEq)]
pub struct Conversion {
    pub game: IiEfg,
    /// II-MAID information set to tree class, for sets present in a tree.
    pub correspondence: BTreeMap<InformationSet, ClassKey>,
}

/// One state per subjective MAID, playing that model's tree with fixed
/// decisions as chance nodes. An agent without beliefs in a model is taken
/// to be certain of that model.
pub fn maid2efg_ii(x: &IiMaid) -> Result<Conversion, IiEfgError> {
    let mut games = BTreeMap::new();
    let mut game_of = BTreeMap::new();
    let mut beliefs: BTreeMap<String, BTreeMap<String, BTreeMap<String, f64>>> = BTreeMap::new();
    let mut correspondence = BTreeMap::new();
    for s in x.models() {
        let m = s.model.collapsed();
        let tree = maid2efg(&m, None)?;
        for (k, (d, ctx)) in tree.info_set_source.iter().enumerate() {
            let set = info_set_of(&m, d, *ctx);
            let class = IiEfg::class_of(&tree.efg, k);
            if let Some(prev) = correspondence.insert(set.clone(), class.clone()) {
                if prev != class {
                    return Err(IiEfgError::AmbiguousCorrespondence(set));
                }
            }
        }
        games.insert(s.id.clone(), tree.efg);
        game_of.insert(s.id.clone(), s.id.clone());
        for agent in x.agents() {
            let row = match s.belief(agent) {
                Some(b) => b.iter().filter(|(_, p)| **p > 0.0).map(|(k, p)| (k.clone(), *p)).collect(),
                None => BTreeMap::from([(s.id.clone(), 1.0)]),
            };
            beliefs.entry(agent.clone()).or_default().insert(s.id.clone(), row);
        }
    }
    let space = BeliefSpace::new(game_of, beliefs)?;
    let game = IiEfg::new(x.agents().to_vec(), games, space, x.objective())?;
    Ok(Conversion { game, correspondence })
}

impl Conversion {
    /// Copies each information set's row to every meta-information set of
    /// its class, reordered to the tree's action order.
    pub fn strategy(&self, p: &IiPolicyProfile) -> Result<IiStrategy, IiEfgError> {
        let by_class: BTreeMap<&ClassKey, &InformationSet> = self.correspondence.iter().map(|(s, c)| (c, s)).collect();
        let mut out = IiStrategy::new();
        for agent in self.game.agents() {
            for meta in self.game.meta_information_sets(agent) {
                let set = by_class.get(&meta.class).ok_or_else(|| IiEfgError::Uncorresponded(meta.clone()))?;
                let row = p.get(set).ok_or_else(|| IiEfgError::Ii(IiError::MissingInfoSetRule((*set).clone())))?;
                let reordered = meta
                    .class
                    .actions
                    .iter()
                    .map(|a| set.actions.iter().position(|b| b == a).map(|k| row[k]))
                    .collect::<Option<Vec<f64>>>()
                    .ok_or_else(|| IiEfgError::Uncorresponded(meta.clone()))?;
                out.0.insert(meta, reordered);
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub holds: bool,
    pub profiles: usize,
    pub max_deviation: f64,
}

/// Compares each agent's II-MAID expected utility with its interim utility
/// at the actual state under the mapped strategy.
pub fn verify_equivalence(
    x: &IiMaid,
    conv: &Conversion,
    profiles: &[IiPolicyProfile],
    tol: f64,
) -> Result<EquivalenceReport, IiEfgError> {
    let mut max_deviation: f64 = 0.0;
    for p in profiles {
        let sigma = conv.strategy(p)?;
        for agent in x.agents() {
            let lhs = match x.objective_model().belief(agent) {
                Some(_) => x.subjective_expected_utility(agent, x.objective(), p)?,
                None => x.model_utility(x.objective(), agent, p)?,
            };
            let rhs = conv.game.interim_utility(&sigma, agent, conv.game.interim_state())?;
            max_deviation = max_deviation.max((lhs - rhs).abs());
        }
    }
    Ok(EquivalenceReport { holds: max_deviation <= tol, profiles: profiles.len(), max_deviation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation_game as eg;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-9
    }

    #[test]
    fn running_example_states_and_beliefs() {
        let c = maid2efg_ii(&eg::ii_maid()).unwrap();
        let g = &c.game;
        assert_eq!(g.space().states().collect::<Vec<_>>(), vec![eg::S_A, eg::S_H]);
        assert_eq!(g.interim_state(), eg::S_H);
        assert_eq!(g.space().belief(eg::A, eg::S_H).unwrap()[eg::S_A], 1.0);
        assert_eq!(g.space().belief(eg::H, eg::S_H).unwrap()[eg::S_H], 1.0);
    }

    #[test]
    fn meta_set_counts() {
        let c = maid2efg_ii(&eg::ii_maid()).unwrap();
        assert_eq!(c.game.meta_information_sets_at(eg::H, eg::S_H).len(), 6);
        assert_eq!(c.game.meta_information_sets_at(eg::A, eg::S_H).len(), 2);
        // H holds two types, A one.
        assert_eq!(c.game.meta_information_sets(eg::H).len(), 12);
        assert_eq!(c.game.meta_information_sets(eg::A).len(), 2);
        let per_agent = |a: &str| c.correspondence.keys().filter(|s| s.agent == a).count();
        assert_eq!((per_agent(eg::A), per_agent(eg::H)), (2, 6));
        let classes: BTreeSet<&ClassKey> = c.correspondence.values().collect();
        assert_eq!(classes.len(), 8);
    }

    #[test]
    fn interim_values_of_reference_profile() {
        let x = eg::ii_maid();
        let c = maid2efg_ii(&x).unwrap();
        let sigma = c.strategy(&eg::s6_profile(&x)).unwrap();
        assert!(close(c.game.interim_utility(&sigma, eg::H, eg::S_H).unwrap(), 0.9));
        assert!(close(c.game.interim_utility(&sigma, eg::A, eg::S_H).unwrap(), 0.0));
        for agent in [eg::A, eg::H] {
            for state in [eg::S_A, eg::S_H] {
                let full = c.game.interim_utility(&sigma, agent, state).unwrap();
                let restricted = c.game.interim_utility_restricted(&sigma, agent, state).unwrap();
                assert!(close(full, restricted));
            }
        }
    }

    #[test]
    fn interim_equilibrium_checks() {
        let x = eg::ii_maid();
        let c = maid2efg_ii(&x).unwrap();
        let s6 = c.strategy(&eg::s6_profile(&x)).unwrap();
        assert!(c.game.is_interim_nash(&s6, eg::S_H, 1e-6).unwrap().is_nash);
        let mutated = c.strategy(&eg::mutated_profile(&x)).unwrap();
        let r = c.game.is_interim_nash(&mutated, eg::S_H, 1e-6).unwrap();
        assert!(!r.is_nash);
        assert!((r.regrets[eg::A] - 0.2).abs() < 1e-9);
    }

    #[test]
    fn interim_at_actual_state_is_not_bayesian() {
        // H randomizes where it sees only the report, which its own type
        // at the AI's state can improve on.
        let x = eg::ii_maid();
        let c = maid2efg_ii(&x).unwrap();
        let s6 = c.strategy(&eg::s6_profile(&x)).unwrap();
        let (holds, reports) = c.game.is_bayesian_equilibrium(&s6, 1e-6).unwrap();
        assert!(!holds);
        let at = |s: &str| reports.iter().find(|r| r.state == s).unwrap().is_nash;
        assert!(at(eg::S_H) && !at(eg::S_A));

        let rbr = c.strategy(&eg::rbr_profile(&x)).unwrap();
        let (holds, reports) = c.game.is_bayesian_equilibrium(&rbr, 1e-6).unwrap();
        let each: Vec<bool> = [eg::S_A, eg::S_H]
            .iter()
            .map(|s| c.game.is_interim_nash(&rbr, s, 1e-6).unwrap().is_nash)
            .collect();
        assert_eq!(holds, each.iter().all(|b| *b));
        assert_eq!(reports.len(), 2);
    }

    #[test]
    fn single_state_reduces_to_tree_nash() {
        let m = eg::honesty_maid();
        let x = IiMaid::from_maid(m.clone(), "M");
        let c = maid2efg_ii(&x).unwrap();
        assert_eq!(c.game.space().states().count(), 1);
        let mut p = IiPolicyProfile::new();
        let rules = eg::profile([eg::truthful(&m), eg::deploy_iff_match(&m)]);
        for set in x.all_information_sets() {
            let d = if set.agent == eg::A { eg::D_A } else { eg::D_H };
            let ctx = m.context_index(d, &set.observation.iter().cloned().collect()).unwrap();
            p.insert_pure(set.clone(), rules.get(d).unwrap().pure_action(&m, ctx).unwrap());
        }
        let sigma = c.strategy(&p).unwrap();
        let (holds, _) = c.game.is_bayesian_equilibrium(&sigma, 1e-9).unwrap();
        assert!(holds);
        assert!(m.is_nash(&rules, 1e-9).unwrap().is_nash);
    }

    #[test]
    fn equivalence_over_all_pure_profiles() {
        let x = eg::ii_maid();
        let c = maid2efg_ii(&x).unwrap();
        let profiles = x.pure_profiles(DEFAULT_CAP).unwrap();
        assert_eq!(profiles.len(), 256);
        let r = verify_equivalence(&x, &c, &profiles, 1e-9).unwrap();
        assert!(r.holds, "{r:?}");
        assert!(r.max_deviation < 1e-9);
    }

    #[test]
    fn corrupted_correspondence_breaks_equivalence() {
        let x = eg::ii_maid();
        let mut c = maid2efg_ii(&x).unwrap();
        let h: Vec<InformationSet> = c.correspondence.keys().filter(|s| s.agent == eg::H).cloned().collect();
        let (a, b) = (h[0].clone(), h[1].clone());
        let ca = c.correspondence[&a].clone();
        let cb = c.correspondence.insert(b, ca).unwrap();
        c.correspondence.insert(a, cb);
        let profiles = x.pure_profiles(DEFAULT_CAP).unwrap();
        let r = verify_equivalence(&x, &c, &profiles, 1e-9).unwrap();
        assert!(!r.holds);
        assert!(r.max_deviation >= 0.1);
    }

    #[test]
    fn incoherent_space_is_rejected() {
        let game_of = BTreeMap::from([("u".to_string(), "g".to_string()), ("v".to_string(), "g".to_string())]);
        let row = |u: f64| BTreeMap::from([("u".to_string(), u), ("v".to_string(), 1.0 - u)]);
        let beliefs = BTreeMap::from([(
            "i".to_string(),
            BTreeMap::from([("u".to_string(), row(0.5)), ("v".to_string(), row(1.0))]),
        )]);
        assert!(matches!(BeliefSpace::new(game_of, beliefs), Err(IiEfgError::Incoherent { .. })));
    }
}
