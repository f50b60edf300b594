//! The bundled fixture files are the canonical serialization of the
//! evaluation game. Set `REGENERATE_FIXTURES=1` to rewrite them.

use std::path::PathBuf;

use iimaid::evaluation_game as eg;
use iimaid::io::{self, Decimal, Game};

fn dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn expected() -> Vec<(&'static str, String)> {
    let mh = eg::honesty_maid();
    let ma = eg::capability_maid();
    let x = eg::ii_maid();
    let ii = Game::IiMaid(x.clone());
    let mut malformed = ii.to_document();
    malformed.models[1].beliefs.get_mut(eg::A).unwrap().insert(eg::S_A.into(), Decimal(0.9));
    let maid_profile = |m, rules| io::serialize_profile(&io::maid_profile_document(m, &eg::profile(rules)));
    vec![
        ("honesty.maid.json", io::serialize(&Game::Maid { id: "M_H".into(), maid: mh.clone() })),
        ("capability.maid.json", io::serialize(&Game::Maid { id: "M_A".into(), maid: ma.clone() })),
        ("evaluation_game.iimaid.json", io::serialize(&ii)),
        ("evaluation_game_depth3.stack.json", io::serialize(&Game::DepthStack(eg::depth3_stack()))),
        ("malformed_belief.iimaid.json", serde_json::to_string_pretty(&malformed).unwrap() + "\n"),
        ("honest.profile.json", maid_profile(&mh, [eg::truthful(&mh), eg::deploy_iff_match(&mh)])),
        ("always_low_match.profile.json", maid_profile(&mh, [eg::always_low(&mh), eg::deploy_iff_match(&mh)])),
        ("always_low_deploy_low.profile.json", maid_profile(&ma, [eg::always_low(&ma), eg::deploy_iff_low(&ma)])),
        ("s6_ne.profile.json", io::serialize_profile(&io::ii_profile_document(&eg::s6_profile(&x)))),
        ("rbr.profile.json", io::serialize_profile(&io::ii_profile_document(&eg::rbr_profile(&x)))),
        ("mutated.profile.json", io::serialize_profile(&io::ii_profile_document(&eg::mutated_profile(&x)))),
    ]
}

#[test]
fn fixtures_match_serializer() {
    let regenerate = std::env::var_os("REGENERATE_FIXTURES").is_some();
    for (name, text) in expected() {
        let path = dir().join(name);
        if regenerate {
            std::fs::write(&path, &text).unwrap();
        }
        let on_disk = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(on_disk, text, "{name} is stale");
    }
}

#[test]
fn bundled_ii_maid_parses_with_prior() {
    let g = io::load(&dir().join("evaluation_game.iimaid.json")).unwrap();
    let x = g.to_ii_maid();
    let m = x.model(eg::S_H).unwrap().maid();
    assert_eq!(m.table(eg::C).unwrap()[0], vec![0.1, 0.9]);
    assert_eq!(x, eg::ii_maid());
}

#[test]
fn malformed_belief_names_the_row() {
    match io::load(&dir().join("malformed_belief.iimaid.json")) {
        Err(io::IoError::Invalid { path, .. }) => assert_eq!(path, "models[1].beliefs.A"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn every_fixture_round_trips() {
    for (name, text) in expected() {
        if name.contains("malformed") {
            continue;
        }
        if name.ends_with(".profile.json") {
            let doc = io::parse_profile(&text).unwrap();
            assert_eq!(io::serialize_profile(&doc), text);
        } else {
            assert_eq!(io::serialize(&io::parse(&text).unwrap()), text);
        }
    }
}
