//! Seeded random games for property tests and the acceptance suite.

use std::collections::BTreeMap;

use rand::Rng;

use crate::finite_depth::{unroll, DepthError, DepthStack};
use crate::ii_maid::{IiMaid, IiPolicyProfile, SubjectiveMaid};
use crate::maid::{Maid, MaidBuilder};

pub const AGENTS: [&str; 2] = ["A", "H"];

/// Observation structure shared by all models drawn from one skeleton.
#[derive(Clone, Debug)]
pub struct Skeleton {
    pub chance: Vec<(String, Vec<String>, Vec<String>)>,
    pub decisions: Vec<(String, String, Vec<String>)>,
    pub utility_parents: Vec<(String, String, Vec<String>)>,
}

fn labels(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|k| format!("{prefix}{k}")).collect()
}

fn subset<R: Rng + ?Sized>(rng: &mut R, pool: &[String], p: f64) -> Vec<String> {
    pool.iter().filter(|_| rng.gen_bool(p)).cloned().collect()
}

/// A two-agent skeleton: 1–`max_chance` chance variables, one binary
/// decision per agent (`H`'s may observe `A`'s) and one utility per agent.
pub fn random_skeleton<R: Rng + ?Sized>(rng: &mut R, max_chance: usize) -> Skeleton {
    let c = rng.gen_range(1..=max_chance.max(1));
    let mut chance = Vec::new();
    let mut names: Vec<String> = Vec::new();
    for k in 0..c {
        let name = format!("X{k}");
        let parents = subset(rng, &names, 0.4);
        let card = rng.gen_range(2..=3);
        chance.push((name.clone(), parents, labels(&format!("x{k}_"), card)));
        names.push(name);
    }
    let da_parents = subset(rng, &names, 0.5);
    let mut pool = names.clone();
    pool.push("D_A".into());
    let dh_parents = subset(rng, &pool, 0.5);
    let decisions = vec![("D_A".into(), "A".into(), da_parents), ("D_H".into(), "H".into(), dh_parents)];
    let utility_parents = AGENTS
        .iter()
        .map(|a| {
            let mut parents = subset(rng, &names, 0.5);
            parents.extend(["D_A".to_string(), "D_H".to_string()].into_iter().filter(|_| rng.gen_bool(0.8)));
            if parents.is_empty() {
                parents.push(if *a == "A" { "D_H".into() } else { "D_A".into() });
            }
            (format!("U_{a}"), a.to_string(), parents)
        })
        .collect();
    Skeleton { chance, decisions, utility_parents }
}

fn random_row<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|x| x / total).collect()
}

fn contexts(domains: &[Vec<String>]) -> Vec<Vec<String>> {
    let mut out = vec![vec![]];
    for d in domains {
        out = out.iter().flat_map(|prefix| d.iter().map(move |x| [prefix.clone(), vec![x.clone()]].concat())).collect();
    }
    out
}

/// A MAID on `skel` with fresh CPDs and integer utilities in `-3..=3`.
pub fn random_maid<R: Rng + ?Sized>(rng: &mut R, skel: &Skeleton) -> Maid {
    let mut domains: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut b: MaidBuilder = Maid::builder(AGENTS);
    for (name, parents, domain) in &skel.chance {
        let pd: Vec<Vec<String>> = {
            let mut sorted = parents.clone();
            sorted.sort();
            sorted.iter().map(|p| domains[p].clone()).collect()
        };
        let rows = contexts(&pd).iter().map(|_| random_row(rng, domain.len())).collect();
        let mut sorted = parents.clone();
        sorted.sort();
        b = b.chance(name, domain.clone(), sorted, rows);
        domains.insert(name.clone(), domain.clone());
    }
    for (name, agent, parents) in &skel.decisions {
        let domain = labels(&format!("{}_", name.to_lowercase()), 2);
        b = b.decision(name, agent, domain.clone(), parents.clone());
        domains.insert(name.clone(), domain);
    }
    for (name, agent, parents) in &skel.utility_parents {
        let pd: Vec<Vec<String>> = parents.iter().map(|p| domains[p].clone()).collect();
        let table: BTreeMap<Vec<String>, f64> =
            contexts(&pd).into_iter().map(|ctx| (ctx, rng.gen_range(-3..=3) as f64)).collect();
        let ps = parents.clone();
        b = b.utility_fn(name, agent, parents.clone(), move |a| {
            let key: Vec<String> = ps.iter().map(|p| a.get(p).unwrap().to_string()).collect();
            table[&key]
        });
    }
    b.build().expect("random MAIDs are valid")
}

/// `n` models on one skeleton with beliefs induced by a positive common
/// prior and a random partition of the models for each agent.
pub fn random_common_prior_ii_maid<R: Rng + ?Sized>(rng: &mut R, n: usize) -> IiMaid {
    let skel = random_skeleton(rng, 2);
    let ids: Vec<String> = (0..n).map(|k| format!("S{k}")).collect();
    let prior = random_row(rng, n);
    let mut models: Vec<SubjectiveMaid> = ids.iter().map(|id| SubjectiveMaid::new(id.clone(), random_maid(rng, &skel))).collect();
    for agent in AGENTS {
        let cells: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
        for (k, s) in models.iter_mut().enumerate() {
            let mass: f64 = (0..n).filter(|&j| cells[j] == cells[k]).map(|j| prior[j]).sum();
            let belief = (0..n).filter(|&j| cells[j] == cells[k]).map(|j| (ids[j].clone(), prior[j] / mass)).collect();
            s.beliefs.insert(agent.to_string(), belief);
        }
    }
    let objective = ids[rng.gen_range(0..n)].clone();
    IiMaid::new(AGENTS, &objective, models).expect("generated II-MAIDs are valid")
}

/// An II-MAID of `worlds` models on one skeleton with arbitrary positive
/// beliefs.
pub fn random_ii_maid<R: Rng + ?Sized>(rng: &mut R, worlds: usize, max_chance: usize) -> IiMaid {
    let skel = random_skeleton(rng, max_chance);
    let ids: Vec<String> = (0..worlds).map(|k| format!("W{k}")).collect();
    let models = ids
        .iter()
        .map(|id| {
            let mut s = SubjectiveMaid::new(id.clone(), random_maid(rng, &skel));
            for agent in AGENTS {
                s.beliefs.insert(agent.to_string(), ids.iter().cloned().zip(random_row(rng, worlds)).collect());
            }
            s
        })
        .collect();
    IiMaid::new(AGENTS, &ids[0], models).expect("generated II-MAIDs are valid")
}

/// A two-agent depth-2 stack with binary decisions and at most three
/// chance variables.
pub fn random_depth2_stack<R: Rng + ?Sized>(rng: &mut R) -> Result<DepthStack, DepthError> {
    let worlds = rng.gen_range(1..=2);
    unroll(&random_ii_maid(rng, worlds, 3), 2)
}

/// A random fully mixed profile over every information set of `x`.
pub fn random_mixed_profile<R: Rng + ?Sized>(rng: &mut R, x: &IiMaid) -> IiPolicyProfile {
    let mut p = IiPolicyProfile::new();
    for set in x.all_information_sets() {
        let row = random_row(rng, set.actions.len());
        p.insert(set, row);
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn common_prior_models_are_strongly_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let n = rng.gen_range(3..=5);
            let x = random_common_prior_ii_maid(&mut rng, n);
            assert!(x.validate_coherence().is_empty());
            assert!(x.check_consistency().strongly_consistent);
        }
    }

    #[test]
    fn stacks_have_depth_two() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            let s = random_depth2_stack(&mut rng).unwrap();
            assert_eq!(s.classify_depth().k, 2);
            assert!(s.is_open_minded().is_empty());
            assert!(s.recursive_best_response().is_ok());
        }
    }
}
