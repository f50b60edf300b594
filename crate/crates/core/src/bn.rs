//! Discrete Bayesian networks.
//!
//! Variables carry an ordered finite domain; utility variables additionally
//! carry one real value per outcome. Conditional probability tables store one
//! row per parent assignment, enumerated odometer-style over the parents in the
//! order they are listed (last parent varies fastest).
//!
//! Inference is exact enumeration. The networks this crate deals with are
//! desk-sized (a couple of dozen binary variables at most), so nothing cleverer
//! is needed.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Global comparison tolerance for probabilities.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub domain: Vec<String>,
    /// Real value of each outcome, present only for utility variables.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utilities: Option<Vec<f64>>,
}

impl Variable {
    pub fn new<S: Into<String>>(name: impl Into<String>, domain: impl IntoIterator<Item = S>) -> Self {
        Variable {
            name: name.into(),
            domain: domain.into_iter().map(Into::into).collect(),
            utilities: None,
        }
    }

    /// A utility variable with one `(label, value)` pair per outcome.
    pub fn utility<S: Into<String>>(
        name: impl Into<String>,
        outcomes: impl IntoIterator<Item = (S, f64)>,
    ) -> Self {
        let (domain, values): (Vec<String>, Vec<f64>) =
            outcomes.into_iter().map(|(l, v)| (l.into(), v)).unzip();
        Variable {
            name: name.into(),
            domain,
            utilities: Some(values),
        }
    }

    pub fn cardinality(&self) -> usize {
        self.domain.len()
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.domain.iter().position(|d| d == label)
    }

    pub fn is_utility(&self) -> bool {
        self.utilities.is_some()
    }

    /// Value of outcome `k`; zero for non-utility variables.
    pub fn value(&self, k: usize) -> f64 {
        self.utilities.as_ref().map_or(0.0, |u| u[k])
    }
}

/// Conditional probability table `P(child | parents)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cpd {
    child: String,
    parents: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl Cpd {
    /// `rows` enumerate parent assignments odometer-style in the order the
    /// parents are listed. Shape is checked when the network is validated.
    pub fn new<S: Into<String>>(
        child: impl Into<String>,
        parents: impl IntoIterator<Item = S>,
        rows: Vec<Vec<f64>>,
    ) -> Self {
        Cpd {
            child: child.into(),
            parents: parents.into_iter().map(Into::into).collect(),
            rows,
        }
    }

    pub fn child(&self) -> &str {
        &self.child
    }

    pub fn parents(&self) -> &[String] {
        &self.parents
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, index: usize) -> &[f64] {
        &self.rows[index]
    }
}

/// A (possibly partial) instantiation of variables by outcome label.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Assignment(pub BTreeMap<String, String>);

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, var: impl Into<String>, value: impl Into<String>) -> Self {
        self.0.insert(var.into(), value.into());
        self
    }

    pub fn insert(&mut self, var: impl Into<String>, value: impl Into<String>) {
        self.0.insert(var.into(), value.into());
    }

    pub fn get(&self, var: &str) -> Option<&str> {
        self.0.get(var).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }
}

impl<K: Into<String>, V: Into<String>> FromIterator<(K, V)> for Assignment {
    fn from_iter<T: IntoIterator<Item = (K, V)>>(iter: T) -> Self {
        Assignment(iter.into_iter().map(|(k, v)| (k.into(), v.into())).collect())
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.iter().map(|(k, v)| format!("{k}={v}")).collect();
        write!(f, "({})", parts.join(", "))
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum NetError {
    #[error("row {row} of `{variable}` is not normalized (sums to {sum})")]
    RowNotNormalized { variable: String, row: usize, sum: f64 },
    #[error("row {row} of `{variable}` has an entry outside [0, 1]")]
    EntryOutOfRange { variable: String, row: usize },
    #[error("`{variable}` has {found} rows, expected {expected}")]
    RowCount { variable: String, expected: usize, found: usize },
    #[error("row {row} of `{variable}` has width {found}, expected {expected}")]
    RowWidth { variable: String, row: usize, expected: usize, found: usize },
    #[error("cycle detected among {0:?}")]
    CycleDetected(Vec<String>),
    #[error("no CPD for `{0}`")]
    MissingCpd(String),
    #[error("more than one CPD for `{0}`")]
    DuplicateCpd(String),
    #[error("CPD for unknown variable `{0}`")]
    UnknownCpd(String),
    #[error("`{child}` lists unknown parent `{parent}`")]
    DanglingParent { child: String, parent: String },
    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),
    #[error("`{0}` needs at least {1} outcomes")]
    DomainTooSmall(String, usize),
    #[error("utility values of `{0}` do not match its domain")]
    UtilityShape(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("`{outcome}` is not in the domain of `{variable}`")]
    UnknownOutcome { variable: String, outcome: String },
    #[error("assignment leaves `{0}` unassigned")]
    PartialAssignment(String),
    #[error("evidence has probability zero")]
    ZeroProbabilityEvidence,
}

/// Every violated invariant found by [`validate_net`].
#[derive(Clone, Debug, PartialEq, Error)]
pub struct ValidationErrors(pub Vec<NetError>);

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(ToString::to_string).collect();
        write!(f, "{}", parts.join("; "))
    }
}

/// Checks a single distribution row against the global tolerance.
pub(crate) fn check_row(variable: &str, row_index: usize, row: &[f64], tol: f64) -> Result<(), NetError> {
    if row.iter().any(|p| !p.is_finite() || *p < -tol || *p > 1.0 + tol) {
        return Err(NetError::EntryOutOfRange { variable: variable.to_string(), row: row_index });
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > tol {
        return Err(NetError::RowNotNormalized { variable: variable.to_string(), row: row_index, sum });
    }
    Ok(())
}

/// Mixed-radix index of `values` (first position most significant).
pub(crate) fn mixed_index(values: &[usize], cards: &[usize]) -> usize {
    values.iter().zip(cards).fold(0, |acc, (v, c)| acc * c + v)
}

/// Inverse of [`mixed_index`].
pub(crate) fn mixed_digits(mut index: usize, cards: &[usize]) -> Vec<usize> {
    let mut out = vec![0; cards.len()];
    for (slot, c) in out.iter_mut().zip(cards).rev() {
        *slot = index % c;
        index /= c;
    }
    out
}

/// Kahn's algorithm with the ready set ordered by name.
///
/// On failure returns the names of the variables left on or behind a cycle.
pub(crate) fn name_stable_topo(names: &[String], parents: &[Vec<usize>]) -> Result<Vec<usize>, Vec<String>> {
    let n = names.len();
    let mut indegree: Vec<usize> = parents.iter().map(Vec::len).collect();
    let mut children = vec![Vec::new(); n];
    for (child, ps) in parents.iter().enumerate() {
        for &p in ps {
            children[p].push(child);
        }
    }
    let mut ready: std::collections::BTreeSet<(&str, usize)> = (0..n)
        .filter(|&v| indegree[v] == 0)
        .map(|v| (names[v].as_str(), v))
        .collect();
    let mut order = Vec::with_capacity(n);
    while let Some(first) = ready.pop_first() {
        let v = first.1;
        order.push(v);
        for &c in &children[v] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.insert((names[c].as_str(), c));
            }
        }
    }
    if order.len() == n {
        Ok(order)
    } else {
        let mut stuck: Vec<String> = (0..n).filter(|v| indegree[*v] > 0).map(|v| names[v].clone()).collect();
        stuck.sort();
        Err(stuck)
    }
}

/// Checks every network invariant and reports all violations at once.
pub fn validate_net(variables: &[Variable], cpds: &[Cpd]) -> Result<(), ValidationErrors> {
    validate_with_tol(variables, cpds, DEFAULT_TOL)
}

pub fn validate_with_tol(variables: &[Variable], cpds: &[Cpd], tol: f64) -> Result<(), ValidationErrors> {
    let mut errors = Vec::new();
    let mut index = BTreeMap::new();
    for (i, v) in variables.iter().enumerate() {
        if index.insert(v.name.as_str(), i).is_some() {
            errors.push(NetError::DuplicateVariable(v.name.clone()));
        }
        let min = if v.is_utility() { 1 } else { 2 };
        if v.domain.len() < min {
            errors.push(NetError::DomainTooSmall(v.name.clone(), min));
        }
        if let Some(u) = &v.utilities {
            if u.len() != v.domain.len() {
                errors.push(NetError::UtilityShape(v.name.clone()));
            }
        }
    }

    let mut by_child: BTreeMap<&str, &Cpd> = BTreeMap::new();
    for cpd in cpds {
        if !index.contains_key(cpd.child.as_str()) {
            errors.push(NetError::UnknownCpd(cpd.child.clone()));
        } else if by_child.insert(cpd.child.as_str(), cpd).is_some() {
            errors.push(NetError::DuplicateCpd(cpd.child.clone()));
        }
    }

    let mut parents = vec![Vec::new(); variables.len()];
    for (i, v) in variables.iter().enumerate() {
        let Some(cpd) = by_child.get(v.name.as_str()) else {
            errors.push(NetError::MissingCpd(v.name.clone()));
            continue;
        };
        let mut cards = Vec::new();
        let mut dangling = false;
        for p in &cpd.parents {
            match index.get(p.as_str()) {
                Some(&pi) => {
                    parents[i].push(pi);
                    cards.push(variables[pi].cardinality());
                }
                None => {
                    dangling = true;
                    errors.push(NetError::DanglingParent { child: v.name.clone(), parent: p.clone() });
                }
            }
        }
        if dangling {
            continue;
        }
        errors.extend(check_table(&v.name, v.cardinality(), &cards, &cpd.rows, tol));
    }

    let names: Vec<String> = variables.iter().map(|v| v.name.clone()).collect();
    if let Err(stuck) = name_stable_topo(&names, &parents) {
        errors.push(NetError::CycleDetected(stuck));
    }

    if errors.is_empty() {
        Ok(())
    } else {
        Err(ValidationErrors(errors))
    }
}

/// Shape and normalization checks for one table.
pub(crate) fn check_table(name: &str, width: usize, parent_cards: &[usize], rows: &[Vec<f64>], tol: f64) -> Vec<NetError> {
    let mut errors = Vec::new();
    let expected: usize = parent_cards.iter().product();
    if rows.len() != expected {
        errors.push(NetError::RowCount { variable: name.to_string(), expected, found: rows.len() });
        return errors;
    }
    for (r, row) in rows.iter().enumerate() {
        if row.len() != width {
            errors.push(NetError::RowWidth { variable: name.to_string(), row: r, expected: width, found: row.len() });
        } else if let Err(e) = check_row(name, r, row, tol) {
            errors.push(e);
        }
    }
    errors
}

/// Marginal distribution over a tuple of variables.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Marginal {
    pub variables: Vec<String>,
    /// Outcome tuple (aligned with `variables`) to probability.
    pub table: BTreeMap<Vec<String>, f64>,
}

impl Marginal {
    pub fn get(&self, outcomes: &[&str]) -> f64 {
        let key: Vec<String> = outcomes.iter().map(|s| s.to_string()).collect();
        self.table.get(&key).copied().unwrap_or(0.0)
    }
}

/// A validated discrete Bayesian network.
#[derive(Clone, Debug, PartialEq)]
pub struct BayesNet {
    variables: Vec<Variable>,
    /// Aligned with `variables`.
    cpds: Vec<Cpd>,
    index: BTreeMap<String, usize>,
    parent_index: Vec<Vec<usize>>,
    parent_cards: Vec<Vec<usize>>,
    order: Vec<usize>,
}

impl BayesNet {
    pub fn new(variables: Vec<Variable>, cpds: Vec<Cpd>) -> Result<Self, ValidationErrors> {
        validate_net(&variables, &cpds)?;
        let index: BTreeMap<String, usize> =
            variables.iter().enumerate().map(|(i, v)| (v.name.clone(), i)).collect();
        let mut aligned: Vec<Option<Cpd>> = vec![None; variables.len()];
        for cpd in cpds {
            let slot = index[&cpd.child];
            aligned[slot] = Some(cpd);
        }
        let cpds: Vec<Cpd> = aligned.into_iter().map(|c| c.expect("validated")).collect();
        let parent_index: Vec<Vec<usize>> =
            cpds.iter().map(|c| c.parents.iter().map(|p| index[p]).collect()).collect();
        let parent_cards = parent_index
            .iter()
            .map(|ps| ps.iter().map(|&p| variables[p].cardinality()).collect())
            .collect();
        let names: Vec<String> = variables.iter().map(|v| v.name.clone()).collect();
        let order = name_stable_topo(&names, &parent_index).expect("validated");
        Ok(BayesNet { variables, cpds, index, parent_index, parent_cards, order })
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, name: &str) -> Option<&Variable> {
        self.index.get(name).map(|&i| &self.variables[i])
    }

    pub fn cpd(&self, name: &str) -> Option<&Cpd> {
        self.index.get(name).map(|&i| &self.cpds[i])
    }

    /// Every variable after all of its parents; ties broken by name.
    pub fn topological_order(&self) -> Vec<&str> {
        self.order.iter().map(|&i| self.variables[i].name.as_str()).collect()
    }

    fn entry(&self, var: usize, values: &[usize]) -> f64 {
        let ctx: Vec<usize> = self.parent_index[var].iter().map(|&p| values[p]).collect();
        self.cpds[var].rows[mixed_index(&ctx, &self.parent_cards[var])][values[var]]
    }

    fn encode(&self, a: &Assignment, require_full: bool) -> Result<Vec<Option<usize>>, NetError> {
        let mut values = vec![None; self.variables.len()];
        for (name, label) in a.iter() {
            let &i = self.index.get(name).ok_or_else(|| NetError::UnknownVariable(name.to_string()))?;
            let k = self.variables[i].position(label).ok_or_else(|| NetError::UnknownOutcome {
                variable: name.to_string(),
                outcome: label.to_string(),
            })?;
            values[i] = Some(k);
        }
        if require_full {
            if let Some(i) = values.iter().position(Option::is_none) {
                return Err(NetError::PartialAssignment(self.variables[i].name.clone()));
            }
        }
        Ok(values)
    }

    /// Chain-rule product of CPD entries for a full assignment.
    pub fn joint_probability(&self, a: &Assignment) -> Result<f64, NetError> {
        let values: Vec<usize> = self.encode(a, true)?.into_iter().map(|v| v.unwrap()).collect();
        Ok(self.order.iter().map(|&v| self.entry(v, &values)).product())
    }

    /// Calls `visit` with every full assignment of nonzero probability that
    /// agrees with `fixed`.
    fn enumerate(&self, fixed: &[Option<usize>], visit: &mut dyn FnMut(&[usize], f64)) {
        let mut values = vec![0; self.variables.len()];
        self.enumerate_from(0, 1.0, fixed, &mut values, visit);
    }

    fn enumerate_from(
        &self,
        depth: usize,
        prob: f64,
        fixed: &[Option<usize>],
        values: &mut Vec<usize>,
        visit: &mut dyn FnMut(&[usize], f64),
    ) {
        if depth == self.order.len() {
            visit(values, prob);
            return;
        }
        let v = self.order[depth];
        let outcomes: Vec<usize> = match fixed[v] {
            Some(k) => vec![k],
            None => (0..self.variables[v].cardinality()).collect(),
        };
        for k in outcomes {
            values[v] = k;
            let p = self.entry(v, values);
            if p > 0.0 {
                self.enumerate_from(depth + 1, prob * p, fixed, values, visit);
            }
        }
    }

    /// Exact marginal of `target` given `evidence`, by enumeration.
    pub fn marginal(&self, target: &[&str], evidence: &Assignment) -> Result<Marginal, NetError> {
        let fixed = self.encode(evidence, false)?;
        let targets: Vec<usize> = target
            .iter()
            .map(|n| self.index.get(*n).copied().ok_or_else(|| NetError::UnknownVariable(n.to_string())))
            .collect::<Result<_, _>>()?;
        let mut table: BTreeMap<Vec<String>, f64> = BTreeMap::new();
        let mut total = 0.0;
        self.enumerate(&fixed, &mut |values, p| {
            total += p;
            let key: Vec<String> =
                targets.iter().map(|&t| self.variables[t].domain[values[t]].clone()).collect();
            *table.entry(key).or_insert(0.0) += p;
        });
        if total <= 0.0 {
            return Err(NetError::ZeroProbabilityEvidence);
        }
        for p in table.values_mut() {
            *p /= total;
        }
        Ok(Marginal { variables: target.iter().map(|s| s.to_string()).collect(), table })
    }

    /// Sum of `joint_probability` over every full assignment.
    pub fn total_mass(&self) -> f64 {
        let mut total = 0.0;
        let fixed = vec![None; self.variables.len()];
        self.enumerate(&fixed, &mut |_, p| total += p);
        total
    }

    /// Ancestral sample as outcome indices aligned with [`BayesNet::variables`].
    pub fn sample_indices<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        let mut values = vec![0; self.variables.len()];
        for &v in &self.order {
            let ctx: Vec<usize> = self.parent_index[v].iter().map(|&p| values[p]).collect();
            let row = &self.cpds[v].rows[mixed_index(&ctx, &self.parent_cards[v])];
            values[v] = draw(row, rng);
        }
        values
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R) -> Assignment {
        let values = self.sample_indices(rng);
        self.variables
            .iter()
            .zip(values)
            .map(|(v, k)| (v.name.clone(), v.domain[k].clone()))
            .collect()
    }

    /// One ancestral sample; deterministic for a fixed seed.
    pub fn sample(&self, seed: u64) -> Assignment {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(&mut rng)
    }
}

/// Inverse-CDF draw from a normalized row. Zero-probability outcomes are never drawn.
pub(crate) fn draw<R: Rng + ?Sized>(row: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = 0;
    for (k, &p) in row.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = k;
        if u < acc {
            return k;
        }
    }
    last
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prior() -> BayesNet {
        BayesNet::new(
            vec![Variable::new("C", ["high", "low"])],
            vec![Cpd::new("C", Vec::<String>::new(), vec![vec![0.1, 0.9]])],
        )
        .unwrap()
    }

    #[test]
    fn prior_row_validates() {
        assert!(prior().variable("C").is_some());
    }

    #[test]
    fn degenerate_single_outcome_utility_validates() {
        let net = BayesNet::new(
            vec![Variable::utility("U", [("one", 1.0)])],
            vec![Cpd::new("U", Vec::<String>::new(), vec![vec![1.0]])],
        );
        assert!(net.is_ok());
    }

    #[test]
    fn unnormalized_row_is_reported() {
        let err = validate_net(
            &[Variable::new("C", ["high", "low"])],
            &[Cpd::new("C", Vec::<String>::new(), vec![vec![0.5, 0.6]])],
        )
        .unwrap_err();
        assert!(matches!(err.0[..], [NetError::RowNotNormalized { row: 0, .. }]));
    }

    #[test]
    fn all_violations_are_listed() {
        let err = validate_net(
            &[Variable::new("A", ["x", "y"]), Variable::new("B", ["x", "y"]), Variable::new("C", ["x", "y"])],
            &[
                Cpd::new("A", ["B"], vec![vec![1.0, 0.0], vec![0.0, 1.0]]),
                Cpd::new("B", ["A", "Z"], vec![]),
            ],
        )
        .unwrap_err();
        assert!(err.0.contains(&NetError::MissingCpd("C".into())));
        assert!(err.0.contains(&NetError::DanglingParent { child: "B".into(), parent: "Z".into() }));
    }

    #[test]
    fn two_cycle_is_detected() {
        let err = validate_net(
            &[Variable::new("A", ["x", "y"]), Variable::new("B", ["x", "y"])],
            &[
                Cpd::new("A", ["B"], vec![vec![1.0, 0.0], vec![0.0, 1.0]]),
                Cpd::new("B", ["A"], vec![vec![1.0, 0.0], vec![0.0, 1.0]]),
            ],
        )
        .unwrap_err();
        assert_eq!(err.0, vec![NetError::CycleDetected(vec!["A".into(), "B".into()])]);
    }

    #[test]
    fn chance_variable_needs_two_outcomes() {
        let err = validate_net(
            &[Variable::new("C", ["only"])],
            &[Cpd::new("C", Vec::<String>::new(), vec![vec![1.0]])],
        )
        .unwrap_err();
        assert_eq!(err.0, vec![NetError::DomainTooSmall("C".into(), 2)]);
    }

    #[test]
    fn single_variable_order_is_itself() {
        assert_eq!(prior().topological_order(), vec!["C"]);
    }

    #[test]
    fn marginal_of_prior() {
        let m = prior().marginal(&["C"], &Assignment::new()).unwrap();
        assert!((m.get(&["high"]) - 0.1).abs() < 1e-12);
        assert!((m.get(&["low"]) - 0.9).abs() < 1e-12);
    }

    #[test]
    fn marginal_given_full_evidence_is_point_mass() {
        let m = prior().marginal(&["C"], &Assignment::new().with("C", "high")).unwrap();
        assert_eq!(m.get(&["high"]), 1.0);
        assert_eq!(m.get(&["low"]), 0.0);
    }

    #[test]
    fn empty_target_marginal_is_one() {
        let m = prior().marginal(&[], &Assignment::new().with("C", "low")).unwrap();
        assert!((m.get(&[]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_probability_evidence_errors() {
        let net = BayesNet::new(
            vec![Variable::new("C", ["high", "low"])],
            vec![Cpd::new("C", Vec::<String>::new(), vec![vec![0.0, 1.0]])],
        )
        .unwrap();
        let err = net.marginal(&["C"], &Assignment::new().with("C", "high")).unwrap_err();
        assert_eq!(err, NetError::ZeroProbabilityEvidence);
    }

    #[test]
    fn partial_assignment_is_rejected() {
        let net = BayesNet::new(
            vec![Variable::new("A", ["x", "y"]), Variable::new("B", ["x", "y"])],
            vec![
                Cpd::new("A", Vec::<String>::new(), vec![vec![0.5, 0.5]]),
                Cpd::new("B", Vec::<String>::new(), vec![vec![0.5, 0.5]]),
            ],
        )
        .unwrap();
        let err = net.joint_probability(&Assignment::new().with("A", "x")).unwrap_err();
        assert_eq!(err, NetError::PartialAssignment("B".into()));
    }

    #[test]
    fn deterministic_net_samples_the_unique_assignment() {
        let net = BayesNet::new(
            vec![Variable::new("A", ["x", "y"]), Variable::new("B", ["p", "q"])],
            vec![
                Cpd::new("A", Vec::<String>::new(), vec![vec![0.0, 1.0]]),
                Cpd::new("B", ["A"], vec![vec![0.5, 0.5], vec![1.0, 0.0]]),
            ],
        )
        .unwrap();
        for seed in 0..20 {
            assert_eq!(net.sample(seed), Assignment::new().with("A", "y").with("B", "p"));
        }
    }

    #[test]
    fn same_seed_same_sample() {
        let net = prior();
        assert_eq!(net.sample(42), net.sample(42));
    }

    #[test]
    fn mixed_radix_round_trip() {
        let cards = [2, 3, 2];
        for i in 0..12 {
            assert_eq!(mixed_index(&mixed_digits(i, &cards), &cards), i);
        }
        assert_eq!(mixed_digits(5, &cards), vec![0, 2, 1]);
    }
}
