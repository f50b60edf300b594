//! The two-agent evaluation game used throughout tests, fixtures and docs.
//!
//! An AI system `A` reports its capability (`D_A`) to a human evaluator `H`,
//! who decides whether to deploy it (`D_H`). The true capability `C` is high
//! with probability 0.1. `A` wants to be deployed. In `H`'s model a deployment
//! pays off when the report was truthful; in `A`'s model `H` ignores `C` and
//! cares only whether the true capability is low.

use std::collections::BTreeMap;

use crate::finite_depth::{DepthStack, PartialPostPolicyMaid};
use crate::ii_maid::{IiMaid, IiPolicyProfile, InformationSet, SubjectiveMaid};
use crate::maid::{DecisionRule, Maid, PolicyProfile};

pub const A: &str = "A";
pub const H: &str = "H";
pub const C: &str = "C";
pub const D_A: &str = "D_A";
pub const D_H: &str = "D_H";
pub const U_A: &str = "U_A";
pub const U_H: &str = "U_H";
pub const HIGH: &str = "high";
pub const LOW: &str = "low";
pub const DEPLOY: &str = "deploy";
pub const NOT_DEPLOY: &str = "not_deploy";
pub const P_HIGH: f64 = 0.1;

/// The human's subjective model and the AI's, in the two-model II-MAID.
pub const S_H: &str = "S_H";
pub const S_A: &str = "S_A";
/// Extra nodes of the depth-3 stack.
pub const H0: &str = "H0";
pub const S_STAR: &str = "S_star";

fn base(h_sees_c: bool) -> crate::maid::MaidBuilder {
    let h_parents: Vec<&str> = if h_sees_c { vec![C, D_A] } else { vec![D_A] };
    Maid::builder([A, H])
        .chance(C, [HIGH, LOW], Vec::<String>::new(), vec![vec![P_HIGH, 1.0 - P_HIGH]])
        .decision(D_A, A, [HIGH, LOW], [C])
        .decision(D_H, H, [DEPLOY, NOT_DEPLOY], h_parents)
        .utility_fn(U_A, A, [D_H], |c| if c.get(D_H) == Some(DEPLOY) { 1.0 } else { -1.0 })
}

/// The human's model: `H` observes `C` and `D_A` and values honest deployments.
pub fn honesty_maid() -> Maid {
    base(true)
        .utility_fn(U_H, H, [C, D_A, D_H], |c| {
            match (c.get(D_H) == Some(DEPLOY), c.get(C) == c.get(D_A)) {
                (false, _) => 0.0,
                (true, true) => 1.0,
                (true, false) => -5.0,
            }
        })
        .build()
        .expect("honesty model is valid")
}

/// The AI's model: `H` observes only the report and values low capability.
pub fn capability_maid() -> Maid {
    base(false)
        .utility_fn(U_H, H, [C, D_H], |c| match (c.get(D_H) == Some(DEPLOY), c.get(C) == Some(LOW)) {
            (false, _) => 0.0,
            (true, true) => 1.0,
            (true, false) => -5.0,
        })
        .build()
        .expect("capability model is valid")
}

pub fn truthful(m: &Maid) -> DecisionRule {
    DecisionRule::pure(m, D_A, |ctx| ctx.get(C).unwrap().to_string()).expect("D_A exists")
}

pub fn always_low(m: &Maid) -> DecisionRule {
    DecisionRule::pure(m, D_A, |_| LOW.to_string()).expect("D_A exists")
}

/// Deploy iff the report matches the true capability (needs `C` observed).
pub fn deploy_iff_match(m: &Maid) -> DecisionRule {
    DecisionRule::pure(m, D_H, |ctx| if ctx.get(C) == ctx.get(D_A) { DEPLOY } else { NOT_DEPLOY }.to_string())
        .expect("D_H observes C and D_A")
}

pub fn deploy_iff_low(m: &Maid) -> DecisionRule {
    DecisionRule::pure(m, D_H, |ctx| if ctx.get(D_A) == Some(LOW) { DEPLOY } else { NOT_DEPLOY }.to_string())
        .expect("D_H observes D_A")
}

pub fn profile(rules: impl IntoIterator<Item = DecisionRule>) -> PolicyProfile {
    rules.into_iter().collect()
}

/// Two subjective models: `H` believes its own honesty model and thinks `A`
/// believes the capability model; `A` believes the capability model and
/// thinks `H` does too. The objective model is the human's.
pub fn ii_maid() -> IiMaid {
    let sh = SubjectiveMaid::new(S_H, honesty_maid()).believing(H, [(S_H, 1.0)]).believing(A, [(S_A, 1.0)]);
    let sa = SubjectiveMaid::new(S_A, capability_maid()).believing(A, [(S_A, 1.0)]).believing(H, [(S_A, 1.0)]);
    IiMaid::new([A, H], S_H, vec![sh, sa]).expect("running example is valid")
}

fn obs<'a>(set: &'a InformationSet, var: &str) -> Option<&'a str> {
    set.observation.iter().find(|(k, _)| k == var).map(|(_, v)| v.as_str())
}

fn build_profile(x: &IiMaid, mut pick: impl FnMut(&InformationSet) -> Option<&'static str>) -> IiPolicyProfile {
    let mut p = IiPolicyProfile::new();
    for set in x.all_information_sets() {
        match pick(&set) {
            Some(a) => p.insert_pure(set, a),
            None => {
                let n = set.actions.len();
                p.insert(set, vec![1.0 / n as f64; n]);
            }
        }
    }
    p
}

fn h_match(set: &InformationSet) -> &'static str {
    if obs(set, C) == obs(set, D_A) {
        DEPLOY
    } else {
        NOT_DEPLOY
    }
}

fn h_low(set: &InformationSet) -> &'static str {
    if obs(set, D_A) == Some(LOW) {
        DEPLOY
    } else {
        NOT_DEPLOY
    }
}

/// `A` always reports low; `H` deploys iff the report matches where it sees
/// `C`, and randomizes where it sees only the report.
pub fn s6_profile(x: &IiMaid) -> IiPolicyProfile {
    build_profile(x, |set| match (set.agent.as_str(), obs(set, C)) {
        (A, _) => Some(LOW),
        (_, Some(_)) => Some(h_match(set)),
        _ => None,
    })
}

/// The recursive best-response profile of the depth-3 stack.
pub fn rbr_profile(x: &IiMaid) -> IiPolicyProfile {
    build_profile(x, |set| match (set.agent.as_str(), obs(set, C)) {
        (A, _) => Some(LOW),
        (_, Some(_)) => Some(h_match(set)),
        _ => Some(h_low(set)),
    })
}

/// [`rbr_profile`] with `A` switched to truthful reporting.
pub fn mutated_profile(x: &IiMaid) -> IiPolicyProfile {
    build_profile(x, |set| match (set.agent.as_str(), obs(set, C)) {
        (A, Some(c)) => Some(if c == HIGH { HIGH } else { LOW }),
        (_, Some(_)) => Some(h_match(set)),
        _ => Some(h_low(set)),
    })
}

/// Depth-3 stack: `H0` is the capability model with a truthful `A`;
/// `S_A` is the capability model where `H` believes `H0`; `S_H` is the
/// honesty model where `A` believes `S_A`; the objective `S_star` is the
/// honesty model where `A` believes `S_A` and `H` believes `S_H`.
pub fn depth3_stack() -> DepthStack {
    let ma = capability_maid();
    let h0 = PartialPostPolicyMaid::new(ma.clone(), profile([truthful(&ma)])).expect("valid rule");
    let nodes = vec![
        SubjectiveMaid::new(H0, h0),
        SubjectiveMaid::new(S_A, ma).believing(H, [(H0, 1.0)]),
        SubjectiveMaid::new(S_H, honesty_maid()).believing(A, [(S_A, 1.0)]),
        SubjectiveMaid::new(S_STAR, honesty_maid()).believing(A, [(S_A, 1.0)]).believing(H, [(S_H, 1.0)]),
    ];
    DepthStack::new([A, H], S_STAR, nodes, &BTreeMap::new()).expect("depth-3 stack is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bn::Assignment;
    use crate::maid::DEFAULT_CAP;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn honest_equilibrium_values() {
        let m = honesty_maid();
        let p = profile([truthful(&m), deploy_iff_match(&m)]);
        let eu = m.expected_utilities(&p).unwrap();
        assert!(close(eu[A], 1.0) && close(eu[H], 1.0));
        let r = m.is_nash(&p, 1e-9).unwrap();
        assert!(r.is_nash);
    }

    #[test]
    fn induced_joint_entry() {
        let m = honesty_maid();
        let p = profile([truthful(&m), deploy_iff_match(&m)]);
        let net = m.induced_network(&p).unwrap();
        let a = Assignment::new().with(C, HIGH).with(D_A, HIGH).with(D_H, DEPLOY).with(U_A, "1").with(U_H, "1");
        assert!(close(net.joint_probability(&a).unwrap(), 0.1));
    }

    #[test]
    fn always_low_against_match_has_regret() {
        let m = honesty_maid();
        let p = profile([always_low(&m), deploy_iff_match(&m)]);
        let eu = m.expected_utilities(&p).unwrap();
        assert!(close(eu[A], 0.8) && close(eu[H], 0.9));
        let r = m.is_nash(&p, 1e-9).unwrap();
        assert!(!r.is_nash);
        assert!((r.regrets[A] - 0.2).abs() < 1e-9);
        assert!(r.regrets[H].abs() < 1e-9);
    }

    #[test]
    fn truthful_is_best_response_to_match() {
        let m = honesty_maid();
        let others = profile([deploy_iff_match(&m)]);
        let br = m.best_response(&others, A, DEFAULT_CAP).unwrap();
        assert_eq!(br.policy.get(D_A), Some(&truthful(&m)));
        assert!(close(br.value, 1.0));
    }

    #[test]
    fn capability_model_equilibrium() {
        let m = capability_maid();
        let p = profile([always_low(&m), deploy_iff_low(&m)]);
        let r = m.is_nash(&p, 1e-9).unwrap();
        assert!(r.is_nash);
        assert!(close(r.values[A], 1.0) && close(r.values[H], 0.4));
    }

    #[test]
    fn best_response_to_always_low_deploys_at_low() {
        let m = capability_maid();
        // The high-report context is never reached, so both actions tie there
        // and the label-first action wins.
        let br = m.best_response(&profile([always_low(&m)]), H, DEFAULT_CAP).unwrap();
        let rule = br.policy.get(D_H).unwrap();
        let low = m.context_index(D_H, &Assignment::new().with(D_A, LOW)).unwrap();
        let high = m.context_index(D_H, &Assignment::new().with(D_A, HIGH)).unwrap();
        assert_eq!(rule.pure_action(&m, low), Some(DEPLOY));
        assert_eq!(rule.pure_action(&m, high), Some(DEPLOY));
        assert!(close(br.value, 0.4));

        // Against a truthful A both contexts are live: deploy only at low.
        let br = m.best_response(&profile([truthful(&m)]), H, DEFAULT_CAP).unwrap();
        assert_eq!(br.policy.get(D_H), Some(&deploy_iff_low(&m)));
        assert!(close(br.value, 0.9));
    }

    #[test]
    fn honest_profile_is_among_pure_equilibria() {
        let m = honesty_maid();
        let all = m.find_pure_nash(DEFAULT_CAP).unwrap();
        assert!(all.contains(&profile([truthful(&m), deploy_iff_match(&m)])));
        for p in &all {
            assert!(m.is_nash(p, 1e-9).unwrap().is_nash);
        }
    }
}
