//! Seeded Monte-Carlo rollouts of a MAID under a policy profile.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::maid::{Maid, MaidError, PolicyProfile};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimulationReport {
    pub rollouts: usize,
    pub seed: u64,
    pub means: BTreeMap<String, f64>,
    pub std_errors: BTreeMap<String, f64>,
}

/// Draws `n` ancestral samples of the induced network and averages each
/// agent's total utility.
pub fn simulate(m: &Maid, p: &PolicyProfile, n: usize, seed: u64) -> Result<SimulationReport, MaidError> {
    let net = m.induced_network(p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let owned: Vec<(usize, Vec<usize>)> = m
        .agents()
        .iter()
        .enumerate()
        .map(|(a, name)| {
            let vars = m.utilities_of(name).iter().map(|u| m.var_index(u).unwrap()).collect();
            (a, vars)
        })
        .collect();
    let mut sum = vec![0.0; owned.len()];
    let mut sum_sq = vec![0.0; owned.len()];
    for _ in 0..n {
        let values = net.sample_indices(&mut rng);
        for (a, vars) in &owned {
            let u: f64 = vars.iter().map(|&v| m.variables()[v].value(values[v])).sum();
            sum[*a] += u;
            sum_sq[*a] += u * u;
        }
    }
    let mut means = BTreeMap::new();
    let mut std_errors = BTreeMap::new();
    for (a, name) in m.agents().iter().enumerate() {
        let nf = n as f64;
        let mean = if n > 0 { sum[a] / nf } else { 0.0 };
        let var = if n > 1 { ((sum_sq[a] - nf * mean * mean) / (nf - 1.0)).max(0.0) } else { 0.0 };
        means.insert(name.clone(), mean);
        std_errors.insert(name.clone(), if n > 0 { (var / nf).sqrt() } else { 0.0 });
    }
    Ok(SimulationReport { rollouts: n, seed, means, std_errors })
}
