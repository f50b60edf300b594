use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use iimaid::efg::{maid2efg, strategy_from_policy};
use iimaid::finite_depth::Source;
use iimaid::generate::{
    random_common_prior_ii_maid, random_depth2_stack, random_ii_maid, random_maid, random_mixed_profile,
    random_skeleton, AGENTS,
};
use iimaid::ii_efg::{maid2efg_ii, verify_equivalence};
use iimaid::io::{self, Game};
use iimaid::maid::{DecisionRule, Maid, PolicyProfile, DEFAULT_CAP};
use iimaid::simulate::simulate;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

fn mixed(rng: &mut ChaCha8Rng, m: &Maid) -> PolicyProfile {
    let mut p = PolicyProfile::new();
    for d in m.decisions() {
        let card = m.variable(d).unwrap().cardinality();
        let rows = (0..m.num_contexts(d).unwrap())
            .map(|_| {
                let raw: Vec<f64> = (0..card).map(|_| rng.gen_range(0.0..1.0) + 1e-3).collect();
                let total: f64 = raw.iter().sum();
                raw.iter().map(|x| x / total).collect()
            })
            .collect();
        let rule = DecisionRule::new(d, rows);
        p.insert(rule);
    }
    p
}

fn maid_from(seed: u64, max_chance: usize) -> (ChaCha8Rng, Maid) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let skel = random_skeleton(&mut rng, max_chance);
    let m = random_maid(&mut rng, &skel);
    (rng, m)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn induced_networks_are_normalized(seed in any::<u64>()) {
        let (mut rng, m) = maid_from(seed, 3);
        let p = mixed(&mut rng, &m);
        let net = m.induced_network(&p).unwrap();
        prop_assert!(close(net.total_mass(), 1.0));
        for v in net.variables() {
            let marginal = net.marginal(&[v.name.as_str()], &Default::default()).unwrap();
            prop_assert!(close(marginal.table.values().sum::<f64>(), 1.0));
        }
    }

    #[test]
    fn best_response_dominates_random_policies(seed in any::<u64>()) {
        let (mut rng, m) = maid_from(seed, 1);
        let p = mixed(&mut rng, &m);
        for agent in AGENTS {
            let br = m.best_response(&p.without_agent(&m, agent), agent, DEFAULT_CAP).unwrap();
            let achieved = m.expected_utility(&br.policy.merged(&p.without_agent(&m, agent)), agent).unwrap();
            prop_assert!(close(achieved, br.value));
            for _ in 0..5 {
                let q = mixed(&mut rng, &m).of_agent(&m, agent).merged(&p.without_agent(&m, agent));
                prop_assert!(m.expected_utility(&q, agent).unwrap() <= br.value + 1e-9);
            }
        }
    }

    #[test]
    fn game_tree_preserves_expected_utility(seed in any::<u64>()) {
        let (mut rng, m) = maid_from(seed, 3);
        let p = mixed(&mut rng, &m);
        let tree = maid2efg(&m, None).unwrap();
        let s = strategy_from_policy(&m, &tree, &p).unwrap();
        for agent in AGENTS {
            prop_assert!(close(tree.efg.expected_utility(&s, agent).unwrap(), m.expected_utility(&p, agent).unwrap()));
        }
    }

    #[test]
    fn simulation_is_seed_deterministic(seed in any::<u64>()) {
        let (mut rng, m) = maid_from(seed, 3);
        let p = mixed(&mut rng, &m);
        let a = simulate(&m, &p, 500, seed).unwrap();
        let b = simulate(&m, &p, 500, seed).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn maid_documents_round_trip(seed in any::<u64>()) {
        let (_, m) = maid_from(seed, 3);
        let text = io::serialize(&Game::Maid { id: "M".into(), maid: m });
        prop_assert_eq!(io::serialize(&io::parse(&text).unwrap()), text);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn common_prior_games_are_strongly_consistent(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(2..=5);
        let x = random_common_prior_ii_maid(&mut rng, n);
        prop_assert!(x.validate_coherence().is_empty());
        prop_assert!(x.check_consistency().strongly_consistent);
    }

    #[test]
    fn ii_game_trees_match_ii_maids(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=3);
        let x = random_common_prior_ii_maid(&mut rng, n);
        let conv = maid2efg_ii(&x).unwrap();
        let profiles: Vec<_> = (0..4).map(|_| random_mixed_profile(&mut rng, &x)).collect();
        let report = verify_equivalence(&x, &conv, &profiles, 1e-9).unwrap();
        prop_assert!(report.holds, "deviation {}", report.max_deviation);
        for p in &profiles {
            let sigma = conv.strategy(p).unwrap();
            for state in x.model_ids() {
                for agent in AGENTS {
                    let full = conv.game.interim_utility(&sigma, agent, state).unwrap();
                    let restricted = conv.game.interim_utility_restricted(&sigma, agent, state).unwrap();
                    prop_assert!(close(full, restricted));
                }
            }
        }
    }

    #[test]
    fn ii_maid_documents_round_trip(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_ii_maid(&mut rng, 2, 2);
        let text = io::serialize(&Game::IiMaid(x));
        prop_assert_eq!(io::serialize(&io::parse(&text).unwrap()), text);
    }

    #[test]
    fn recursive_best_response_is_complete_and_argmax(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let stack = random_depth2_stack(&mut rng).unwrap();
        let sol = stack.recursive_best_response().unwrap();
        prop_assert!(sol.audit_passed);
        let objective = stack.node(stack.objective()).unwrap().model.base();
        for d in objective.decisions() {
            let rule = sol.rules.get(d).unwrap();
            prop_assert_eq!(rule.rows.len(), objective.num_contexts(d).unwrap());
            for row in &rule.rows {
                prop_assert!(close(row.iter().sum::<f64>(), 1.0));
            }
        }
        for e in &sol.trace {
            if e.source == Source::Argmax {
                let k = e.info_set.actions.iter().position(|a| *a == e.action).unwrap();
                let best = e.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(e.values[k] >= best - 1e-12);
            }
        }
        let text = io::serialize(&Game::DepthStack(stack));
        prop_assert_eq!(io::serialize(&io::parse(&text).unwrap()), text);
    }
}
