//! Extensive-form games and the conversion from MAIDs to game trees.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::bn::{check_row, Assignment, DEFAULT_TOL};
use crate::maid::{Maid, MaidError, NodeKind, PolicyProfile};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum EfgError {
    #[error("node {0} is not reachable from the root by a unique path")]
    NotATree(usize),
    #[error("node {node}: {reason}")]
    BadNode { node: usize, reason: String },
    #[error("information set {0} mixes nodes with different actions or owners")]
    MixedActions(usize),
    #[error("`{0}` does not respect the MAID's edges")]
    NonTopologicalOrder(String),
    #[error("no strategy row for information set {0}")]
    MissingInfoSetRule(usize),
    #[error("strategy row for information set {index}: {reason}")]
    InvalidRow { index: usize, reason: String },
    #[error("tree does not match the MAID at information set {0}")]
    ContextMismatch(usize),
    #[error("unknown agent `{0}`")]
    UnknownAgent(String),
    #[error(transparent)]
    Maid(#[from] MaidError),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "lowercase", tag = "type")]
pub enum EfgNodeKind {
    Chance { probabilities: Vec<f64> },
    Decision { agent: String, info_set: usize },
    /// Payoffs aligned with the game's sorted agents.
    Leaf { payoffs: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EfgNode {
    pub kind: EfgNodeKind,
    pub children: Vec<usize>,
    /// Edge labels, one per child.
    pub labels: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InfoSet {
    pub agent: String,
    pub nodes: Vec<usize>,
    pub actions: Vec<String>,
}

/// A game tree rooted at node 0.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Efg {
    agents: Vec<String>,
    nodes: Vec<EfgNode>,
    info_sets: Vec<InfoSet>,
    #[serde(skip)]
    parent: Vec<Option<usize>>,
}

/// Positions (0-based depth along the path) where every history of an
/// information set carries the same symbol.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Observation(pub Vec<(usize, String)>);

/// One distribution per information set, over that set's actions.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BehaviourProfile(pub Vec<Vec<f64>>);

impl Efg {
    pub fn new(mut agents: Vec<String>, nodes: Vec<EfgNode>, info_sets: Vec<InfoSet>) -> Result<Self, EfgError> {
        agents.sort();
        agents.dedup();
        let mut parent = vec![None; nodes.len()];
        for (i, n) in nodes.iter().enumerate() {
            if n.labels.len() != n.children.len() {
                return Err(EfgError::BadNode { node: i, reason: "one label per child required".into() });
            }
            let mut seen = n.labels.clone();
            seen.sort();
            seen.dedup();
            if seen.len() != n.labels.len() {
                return Err(EfgError::BadNode { node: i, reason: "duplicate edge label".into() });
            }
            for &c in &n.children {
                if c == 0 || c >= nodes.len() || parent[c].is_some() {
                    return Err(EfgError::NotATree(c));
                }
                parent[c] = Some(i);
            }
            match &n.kind {
                EfgNodeKind::Chance { probabilities } => {
                    if probabilities.len() != n.children.len() || n.children.is_empty() {
                        return Err(EfgError::BadNode { node: i, reason: "chance distribution shape".into() });
                    }
                    check_row(&format!("node {i}"), 0, probabilities, DEFAULT_TOL)
                        .map_err(|e| EfgError::BadNode { node: i, reason: e.to_string() })?;
                }
                EfgNodeKind::Decision { agent, info_set } => {
                    if !agents.contains(agent) {
                        return Err(EfgError::UnknownAgent(agent.clone()));
                    }
                    let set = info_sets.get(*info_set).ok_or(EfgError::MixedActions(*info_set))?;
                    if &set.agent != agent || set.actions != n.labels || !set.nodes.contains(&i) {
                        return Err(EfgError::MixedActions(*info_set));
                    }
                }
                EfgNodeKind::Leaf { payoffs } => {
                    if !n.children.is_empty() || payoffs.len() != agents.len() {
                        return Err(EfgError::BadNode { node: i, reason: "leaf shape".into() });
                    }
                }
            }
        }
        for (i, p) in parent.iter().enumerate().skip(1) {
            if p.is_none() {
                return Err(EfgError::NotATree(i));
            }
        }
        for (k, set) in info_sets.iter().enumerate() {
            if set.nodes.is_empty() {
                return Err(EfgError::MixedActions(k));
            }
            for &n in &set.nodes {
                match nodes.get(n).map(|x| &x.kind) {
                    Some(EfgNodeKind::Decision { info_set, .. }) if *info_set == k => {}
                    _ => return Err(EfgError::MixedActions(k)),
                }
            }
        }
        Ok(Efg { agents, nodes, info_sets, parent })
    }

    pub fn agents(&self) -> &[String] {
        &self.agents
    }

    pub fn nodes(&self) -> &[EfgNode] {
        &self.nodes
    }

    pub fn info_sets(&self) -> &[InfoSet] {
        &self.info_sets
    }

    pub fn info_sets_of(&self, agent: &str) -> Vec<usize> {
        (0..self.info_sets.len()).filter(|&k| self.info_sets[k].agent == agent).collect()
    }

    pub fn leaves(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&i| matches!(self.nodes[i].kind, EfgNodeKind::Leaf { .. })).collect()
    }

    pub fn parent(&self, node: usize) -> Option<usize> {
        self.parent[node]
    }

    /// Root-to-node path as (node, child position) steps.
    fn path(&self, node: usize) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut cur = node;
        while let Some(p) = self.parent[cur] {
            let pos = self.nodes[p].children.iter().position(|&c| c == cur).expect("child listed");
            out.push((p, pos));
            cur = p;
        }
        out.reverse();
        out
    }

    /// Edge labels from the root to `node`.
    pub fn history(&self, node: usize) -> Vec<String> {
        self.path(node).into_iter().map(|(p, k)| self.nodes[p].labels[k].clone()).collect()
    }

    /// The agent's own (information set, action) sequence on the way to `node`.
    pub fn own_history(&self, node: usize, agent: &str) -> Vec<(usize, String)> {
        self.path(node)
            .into_iter()
            .filter_map(|(p, k)| match &self.nodes[p].kind {
                EfgNodeKind::Decision { agent: a, info_set } if a == agent => Some((*info_set, self.nodes[p].labels[k].clone())),
                _ => None,
            })
            .collect()
    }

    pub fn observation_of(&self, info_set: usize) -> Observation {
        let histories: Vec<Vec<String>> = self.info_sets[info_set].nodes.iter().map(|&n| self.history(n)).collect();
        let len = histories.iter().map(Vec::len).min().unwrap_or(0);
        Observation(
            (0..len)
                .filter(|&k| histories.iter().all(|h| h[k] == histories[0][k]))
                .map(|k| (k, histories[0][k].clone()))
                .collect(),
        )
    }

    pub fn has_perfect_recall(&self, agent: &str) -> bool {
        self.info_sets_of(agent).into_iter().all(|k| {
            let nodes = &self.info_sets[k].nodes;
            let first = self.own_history(nodes[0], agent);
            nodes[1..].iter().all(|&n| self.own_history(n, agent) == first)
        })
    }

    fn check_profile(&self, s: &BehaviourProfile) -> Result<(), EfgError> {
        for (k, set) in self.info_sets.iter().enumerate() {
            let row = s.0.get(k).ok_or(EfgError::MissingInfoSetRule(k))?;
            if row.len() != set.actions.len() {
                return Err(EfgError::InvalidRow { index: k, reason: "width".into() });
            }
            check_row(&format!("info set {k}"), k, row, DEFAULT_TOL)
                .map_err(|e| EfgError::InvalidRow { index: k, reason: e.to_string() })?;
        }
        Ok(())
    }

    /// Probability of reaching each leaf under `s`.
    pub fn leaf_distribution(&self, s: &BehaviourProfile) -> Result<Vec<(usize, f64)>, EfgError> {
        self.check_profile(s)?;
        let mut out = Vec::new();
        let mut stack = vec![(0usize, 1.0f64)];
        while let Some((n, p)) = stack.pop() {
            let node = &self.nodes[n];
            let probs: &[f64] = match &node.kind {
                EfgNodeKind::Leaf { .. } => {
                    out.push((n, p));
                    continue;
                }
                EfgNodeKind::Chance { probabilities } => probabilities,
                EfgNodeKind::Decision { info_set, .. } => &s.0[*info_set],
            };
            for (&c, &q) in node.children.iter().zip(probs).rev() {
                stack.push((c, p * q));
            }
        }
        out.sort_by_key(|(n, _)| *n);
        Ok(out)
    }

    /// Expected payoffs of every agent (aligned with [`Efg::agents`]).
    pub fn expected_utilities(&self, s: &BehaviourProfile) -> Result<Vec<f64>, EfgError> {
        let mut totals = vec![0.0; self.agents.len()];
        for (leaf, p) in self.leaf_distribution(s)? {
            if let EfgNodeKind::Leaf { payoffs } = &self.nodes[leaf].kind {
                for (t, u) in totals.iter_mut().zip(payoffs) {
                    *t += p * u;
                }
            }
        }
        Ok(totals)
    }

    pub fn expected_utility(&self, s: &BehaviourProfile, agent: &str) -> Result<f64, EfgError> {
        let a = self.agents.iter().position(|x| x == agent).ok_or_else(|| EfgError::UnknownAgent(agent.to_string()))?;
        Ok(self.expected_utilities(s)?[a])
    }
}

/// Result of converting a MAID into a tree.
#[derive(Clone, Debug, PartialEq)]
pub struct MaidTree {
    pub efg: Efg,
    /// Non-utility variables in expansion order.
    pub order: Vec<String>,
    /// Path instantiation of every node.
    pub mu: Vec<Assignment>,
    /// MAID decision and context index behind each information set.
    pub info_set_source: Vec<(String, usize)>,
}

/// Expands the MAID's non-utility variables in `order` (the name-stable
/// topological order by default). Chance edges with zero probability are
/// dropped; utilities become leaf payoffs.
pub fn maid2efg(m: &Maid, order: Option<&[String]>) -> Result<MaidTree, EfgError> {
    let order: Vec<String> = match order {
        None => m.topological_order().into_iter().filter(|v| !m.kind(v).unwrap().is_utility()).map(String::from).collect(),
        Some(given) => {
            let mut placed = Vec::<&str>::new();
            for v in given {
                let parents = m.parents(v).ok_or_else(|| EfgError::Maid(MaidError::UnknownVariable(v.clone())))?;
                if placed.contains(&v.as_str()) || !parents.iter().all(|p| placed.contains(p)) {
                    return Err(EfgError::NonTopologicalOrder(v.clone()));
                }
                placed.push(v);
            }
            for v in m.topological_order() {
                if !m.kind(v).unwrap().is_utility() && !placed.contains(&v) {
                    return Err(EfgError::NonTopologicalOrder(v.to_string()));
                }
            }
            given.iter().filter(|v| !m.kind(v).unwrap().is_utility()).cloned().collect()
        }
    };
    let vars: Vec<usize> = order.iter().map(|v| m.var_index(v).unwrap()).collect();

    struct Build<'a> {
        m: &'a Maid,
        vars: &'a [usize],
        nodes: Vec<EfgNode>,
        mu: Vec<Assignment>,
        sets: Vec<InfoSet>,
        source: Vec<(String, usize)>,
        lookup: BTreeMap<(usize, usize), usize>,
    }

    impl Build<'_> {
        fn expand(&mut self, depth: usize, values: &mut Vec<usize>) -> usize {
            let id = self.nodes.len();
            let m = self.m;
            let mu: Assignment = self.vars[..depth]
                .iter()
                .map(|&v| (m.variables()[v].name.clone(), m.variables()[v].domain[values[v]].clone()))
                .collect();
            self.mu.push(mu);
            if depth == self.vars.len() {
                let payoffs = (0..m.agents().len()).map(|a| m.utility_at(a, values)).collect();
                self.nodes.push(EfgNode { kind: EfgNodeKind::Leaf { payoffs }, children: vec![], labels: vec![] });
                return id;
            }
            let v = self.vars[depth];
            let var = &m.variables()[v];
            let ctx = m.ctx_of(v, values);
            let (kind, outcomes): (EfgNodeKind, Vec<(usize, f64)>) = match m.kind(&var.name).unwrap() {
                NodeKind::Decision(agent) => {
                    let next = self.sets.len();
                    let k = *self.lookup.entry((v, ctx)).or_insert(next);
                    if k == next {
                        self.sets.push(InfoSet { agent: agent.clone(), nodes: vec![], actions: var.domain.clone() });
                        self.source.push((var.name.clone(), ctx));
                    }
                    self.sets[k].nodes.push(id);
                    (EfgNodeKind::Decision { agent: agent.clone(), info_set: k }, (0..var.cardinality()).map(|k| (k, 1.0)).collect())
                }
                _ => {
                    let row = &m.table(&var.name).unwrap()[ctx];
                    let kept: Vec<(usize, f64)> = row.iter().copied().enumerate().filter(|(_, p)| *p > 0.0).collect();
                    (EfgNodeKind::Chance { probabilities: kept.iter().map(|(_, p)| *p).collect() }, kept)
                }
            };
            self.nodes.push(EfgNode { kind, children: vec![], labels: vec![] });
            for (k, _) in outcomes {
                values[v] = k;
                let child = self.expand(depth + 1, values);
                self.nodes[id].children.push(child);
                self.nodes[id].labels.push(var.domain[k].clone());
            }
            id
        }
    }

    let mut b = Build {
        m,
        vars: &vars,
        nodes: Vec::new(),
        mu: Vec::new(),
        sets: Vec::new(),
        source: Vec::new(),
        lookup: BTreeMap::new(),
    };
    let mut values = vec![0; m.variables().len()];
    b.expand(0, &mut values);
    let efg = Efg::new(m.agents().to_vec(), b.nodes, b.sets)?;
    Ok(MaidTree { efg, order, mu: b.mu, info_set_source: b.source })
}

/// Copies each decision rule's row at the information set's context.
pub fn strategy_from_policy(m: &Maid, tree: &MaidTree, p: &PolicyProfile) -> Result<BehaviourProfile, EfgError> {
    let mut rows = Vec::with_capacity(tree.info_set_source.len());
    for (k, (d, ctx)) in tree.info_set_source.iter().enumerate() {
        let rule = p.get(d).ok_or_else(|| MaidError::MissingRule(d.clone()))?;
        m.check_rule(rule)?;
        let row = rule.rows.get(*ctx).ok_or(EfgError::ContextMismatch(k))?;
        if row.len() != tree.efg.info_sets()[k].actions.len() {
            return Err(EfgError::ContextMismatch(k));
        }
        rows.push(row.clone());
    }
    Ok(BehaviourProfile(rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation_game as eg;
    use crate::maid::{DecisionRule, DEFAULT_CAP};

    fn decision_nodes(g: &Efg, agent: &str) -> Vec<usize> {
        (0..g.nodes().len())
            .filter(|&n| matches!(&g.nodes()[n].kind, EfgNodeKind::Decision { agent: a, .. } if a == agent))
            .collect()
    }

    #[test]
    fn honesty_tree_shape() {
        let t = maid2efg(&eg::honesty_maid(), None).unwrap();
        assert_eq!(t.efg.leaves().len(), 8);
        assert_eq!(t.efg.info_sets_of(eg::A).len(), 2);
        let h = t.efg.info_sets_of(eg::H);
        assert_eq!(h.len(), 4);
        assert!(h.iter().all(|&k| t.efg.info_sets()[k].nodes.len() == 1));
    }

    #[test]
    fn capability_tree_groups_by_report() {
        let t = maid2efg(&eg::capability_maid(), None).unwrap();
        let v = decision_nodes(&t.efg, eg::H);
        assert_eq!(v.len(), 4);
        let sets: Vec<Vec<usize>> = t.efg.info_sets_of(eg::H).iter().map(|&k| t.efg.info_sets()[k].nodes.clone()).collect();
        // Preorder visits (high,high), (high,low), (low,high), (low,low).
        assert_eq!(sets, vec![vec![v[0], v[2]], vec![v[1], v[3]]]);
        assert_eq!(t.efg.history(v[2]), vec![eg::LOW.to_string(), eg::HIGH.to_string()]);
        let obs = t.efg.observation_of(t.efg.info_sets_of(eg::H)[0]);
        assert_eq!(obs, Observation(vec![(1, eg::HIGH.to_string())]));
        assert!(t.efg.has_perfect_recall(eg::H));
    }

    #[test]
    fn singleton_observation_is_full_history() {
        let t = maid2efg(&eg::honesty_maid(), None).unwrap();
        let first = t.efg.info_sets_of(eg::H)[0];
        assert_eq!(t.efg.observation_of(first), Observation(vec![(0, "high".into()), (1, "high".into())]));
    }

    #[test]
    fn zero_prior_outcome_is_pruned() {
        let m = Maid::builder(["a"])
            .chance("X", ["x", "y"], Vec::<String>::new(), vec![vec![1.0, 0.0]])
            .decision("D", "a", ["0", "1"], ["X"])
            .utility_fn("U", "a", ["D"], |_| 0.0)
            .build()
            .unwrap();
        let t = maid2efg(&m, None).unwrap();
        assert_eq!(t.efg.leaves().len(), 2);
    }

    #[test]
    fn non_topological_order_is_rejected() {
        let m = eg::honesty_maid();
        let order: Vec<String> = [eg::D_A, eg::C, eg::D_H].iter().map(|s| s.to_string()).collect();
        assert_eq!(maid2efg(&m, Some(&order)).unwrap_err(), EfgError::NonTopologicalOrder(eg::D_A.into()));
    }

    #[test]
    fn match_rule_maps_to_fig_order() {
        let m = eg::honesty_maid();
        let t = maid2efg(&m, None).unwrap();
        let p = eg::profile([eg::truthful(&m), eg::deploy_iff_match(&m)]);
        let s = strategy_from_policy(&m, &t, &p).unwrap();
        let h: Vec<Vec<f64>> = t.efg.info_sets_of(eg::H).iter().map(|&k| s.0[k].clone()).collect();
        assert_eq!(h, vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 1.0], vec![1.0, 0.0]]);
        let a: Vec<Vec<f64>> = t.efg.info_sets_of(eg::A).iter().map(|&k| s.0[k].clone()).collect();
        assert_eq!(a, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
    }

    #[test]
    fn uniform_policy_gives_uniform_strategy() {
        let m = eg::honesty_maid();
        let t = maid2efg(&m, None).unwrap();
        let p: PolicyProfile = m.decisions().iter().map(|d| DecisionRule::uniform(&m, d).unwrap()).collect();
        let s = strategy_from_policy(&m, &t, &p).unwrap();
        assert!(s.0.iter().all(|r| r == &vec![0.5, 0.5]));
    }

    #[test]
    fn efg_values_on_fixtures() {
        let m = eg::honesty_maid();
        let t = maid2efg(&m, None).unwrap();
        let s = strategy_from_policy(&m, &t, &eg::profile([eg::truthful(&m), eg::deploy_iff_match(&m)])).unwrap();
        assert_eq!(t.efg.expected_utilities(&s).unwrap(), vec![1.0, 1.0]);
        let s = strategy_from_policy(&m, &t, &eg::profile([eg::always_low(&m), eg::deploy_iff_match(&m)])).unwrap();
        assert!((t.efg.expected_utility(&s, eg::A).unwrap() - 0.8).abs() < 1e-12);
    }

    #[test]
    fn utility_preserved_for_every_pure_profile() {
        for m in [eg::honesty_maid(), eg::capability_maid()] {
            let t = maid2efg(&m, None).unwrap();
            for p in m.pure_profiles(None, DEFAULT_CAP).unwrap() {
                let s = strategy_from_policy(&m, &t, &p).unwrap();
                let tree = t.efg.expected_utilities(&s).unwrap();
                let direct: Vec<f64> = m.expected_utilities(&p).unwrap().into_values().collect();
                for (x, y) in tree.iter().zip(&direct) {
                    assert!((x - y).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn all_zero_payoffs_give_zero() {
        let m = Maid::builder(["a"])
            .decision("D", "a", ["0", "1"], Vec::<String>::new())
            .utility_fn("U", "a", ["D"], |_| 0.0)
            .build()
            .unwrap();
        let t = maid2efg(&m, None).unwrap();
        let s = BehaviourProfile(vec![vec![0.3, 0.7]]);
        assert_eq!(t.efg.expected_utility(&s, "a").unwrap(), 0.0);
    }

    fn absent_minded() -> Efg {
        let node = |kind, children: Vec<usize>, labels: &[&str]| EfgNode {
            kind,
            children,
            labels: labels.iter().map(|s| s.to_string()).collect(),
        };
        let dec = EfgNodeKind::Decision { agent: "d".into(), info_set: 0 };
        let leaf = |u: f64| EfgNodeKind::Leaf { payoffs: vec![u] };
        Efg::new(
            vec!["d".into()],
            vec![
                node(dec.clone(), vec![1, 2], &["continue", "exit"]),
                node(dec, vec![3, 4], &["continue", "exit"]),
                node(leaf(0.0), vec![], &[]),
                node(leaf(1.0), vec![], &[]),
                node(leaf(4.0), vec![], &[]),
            ],
            vec![InfoSet { agent: "d".into(), nodes: vec![0, 1], actions: vec!["continue".into(), "exit".into()] }],
        )
        .unwrap()
    }

    #[test]
    fn absent_minded_driver_lacks_recall() {
        let g = absent_minded();
        assert!(!g.has_perfect_recall("d"));
        let honest = maid2efg(&eg::honesty_maid(), None).unwrap();
        assert!(honest.efg.has_perfect_recall(eg::A) && honest.efg.has_perfect_recall(eg::H));
    }

    #[test]
    fn mismatched_actions_in_info_set_are_rejected() {
        let mut g = absent_minded();
        g.nodes[1].labels = vec!["exit".into(), "continue".into()];
        let err = Efg::new(g.agents.clone(), g.nodes.clone(), g.info_sets.clone()).unwrap_err();
        assert_eq!(err, EfgError::MixedActions(0));
    }

    #[test]
    fn leaf_probabilities_sum_to_one() {
        let m = eg::capability_maid();
        let t = maid2efg(&m, None).unwrap();
        let s = BehaviourProfile(t.efg.info_sets().iter().map(|_| vec![0.25, 0.75]).collect());
        let total: f64 = t.efg.leaf_distribution(&s).unwrap().iter().map(|(_, p)| p).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}
