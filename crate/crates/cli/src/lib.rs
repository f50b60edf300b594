//! Command-line front end: parses arguments, runs one command and renders
//! a report. Exit codes: 0 success or a passing check, 1 a failing check,
//! 2 an error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use iimaid::dot::{belief_tree_dot, efg_dot, maid_dot};
use iimaid::efg::maid2efg;
use iimaid::finite_depth::{unroll, DepthStack};
use iimaid::generate::random_mixed_profile;
use iimaid::ii_efg::{maid2efg_ii, verify_equivalence};
use iimaid::ii_maid::{IiMaid, IiPolicyProfile, DEFAULT_ITERATIONS};
use iimaid::io::{self, Game, ProfileKind};
use iimaid::maid::{Maid, PolicyProfile, DEFAULT_CAP};
use iimaid::simulate::simulate;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FALSE: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Text,
}

#[derive(Debug, Parser)]
#[command(name = "iimaid", version, about = "Solve and check (II-)MAIDs and finite-depth belief stacks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Tolerance for equilibrium and equivalence checks.
    #[arg(long, global = true, default_value_t = 1e-6)]
    pub tol: f64,
    /// Seed for sampling commands.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Largest number of pure policies an enumeration may visit.
    #[arg(long, global = true, default_value_t = DEFAULT_CAP)]
    pub cap: u128,
    /// Depth for belief-tree unrolling.
    #[arg(long, global = true)]
    pub depth: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Text)]
    pub output: OutputFormat,
    /// Include wall-clock timings in the report.
    #[arg(long, global = true)]
    pub timings: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and validate a game document.
    Validate { document: PathBuf },
    /// List information sets per agent.
    InfoSets {
        document: PathBuf,
        #[arg(long)]
        agent: Option<String>,
    },
    /// Expected utilities under a profile.
    Eu {
        document: PathBuf,
        #[arg(long)]
        profile: PathBuf,
    },
    /// Check whether a profile is a Nash equilibrium.
    CheckNash {
        document: PathBuf,
        #[arg(long)]
        profile: PathBuf,
    },
    /// Search for a Nash equilibrium.
    SolveNash {
        document: PathBuf,
        #[arg(long, default_value_t = DEFAULT_ITERATIONS)]
        iterations: usize,
    },
    /// Coherence and common-prior consistency of an II-MAID.
    CheckConsistency { document: PathBuf },
    /// Recursive best response of a depth stack (or of an II-MAID unrolled to `--depth`).
    SolveRbr { document: PathBuf },
    /// Convert to game trees.
    ConvertEfg { document: PathBuf },
    /// Compare II-MAID utilities with interim utilities of the converted game.
    VerifyEquivalence {
        document: PathBuf,
        /// Random mixed profiles checked in addition to all pure ones.
        #[arg(long, default_value_t = 100)]
        samples: usize,
    },
    /// Monte-Carlo rollouts of the objective model.
    Simulate {
        document: PathBuf,
        #[arg(long)]
        profile: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        rollouts: usize,
    },
    /// Graphviz export: the MAID, the belief tree to `--depth`, or (`--efg`) the game tree.
    ExportDot {
        document: PathBuf,
        #[arg(long)]
        efg: bool,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Validate { .. } => "validate",
            Command::InfoSets { .. } => "info-sets",
            Command::Eu { .. } => "eu",
            Command::CheckNash { .. } => "check-nash",
            Command::SolveNash { .. } => "solve-nash",
            Command::CheckConsistency { .. } => "check-consistency",
            Command::SolveRbr { .. } => "solve-rbr",
            Command::ConvertEfg { .. } => "convert-efg",
            Command::VerifyEquivalence { .. } => "verify-equivalence",
            Command::Simulate { .. } => "simulate",
            Command::ExportDot { .. } => "export-dot",
        }
    }

    fn document(&self) -> &Path {
        match self {
            Command::Validate { document }
            | Command::InfoSets { document, .. }
            | Command::Eu { document, .. }
            | Command::CheckNash { document, .. }
            | Command::SolveNash { document, .. }
            | Command::CheckConsistency { document }
            | Command::SolveRbr { document }
            | Command::ConvertEfg { document }
            | Command::VerifyEquivalence { document, .. }
            | Command::Simulate { document, .. }
            | Command::ExportDot { document, .. } => document,
        }
    }
}

/// A command's payload and whether its check passed.
pub struct Outcome {
    pub passed: bool,
    pub result: Value,
    /// Raw text printed instead of the report in text mode.
    pub raw: Option<String>,
}

fn ok(result: Value) -> Outcome {
    Outcome { passed: true, result, raw: None }
}

fn check(passed: bool, result: Value) -> Outcome {
    Outcome { passed, result, raw: None }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn load_profile(game: &Game, path: &Path) -> Result<Profile, String> {
    let doc = io::load_profile(path).map_err(err)?;
    match game {
        Game::Maid { id, maid } => {
            let rules = match doc.kind {
                ProfileKind::Maid => io::maid_profile(maid, &doc).map_err(err)?,
                ProfileKind::Ii => {
                    let x = IiMaid::from_maid(maid.clone(), id);
                    x.rules_for_model(id, &io::ii_profile(&x, &doc).map_err(err)?).map_err(err)?
                }
            };
            Ok(Profile::Maid(rules))
        }
        _ => Ok(Profile::Ii(io::ii_profile(&game.to_ii_maid(), &doc).map_err(err)?)),
    }
}

enum Profile {
    Maid(PolicyProfile),
    Ii(IiPolicyProfile),
}

fn sets_json(x: &IiMaid, agent: Option<&str>) -> Value {
    let mut out = Map::new();
    for a in x.agents() {
        if agent.is_some_and(|want| want != a) {
            continue;
        }
        let sets: Vec<String> = x.information_sets(a).iter().map(|s| s.to_string()).collect();
        out.insert(a.clone(), json!({ "count": sets.len(), "sets": sets }));
    }
    Value::Object(out)
}

fn stack_for(game: &Game, depth: Option<usize>) -> Result<DepthStack, String> {
    match (game, depth) {
        (Game::DepthStack(s), None) => Ok(s.clone()),
        (_, Some(k)) => unroll(&game.to_ii_maid(), k).map_err(err),
        (_, None) => Err("solve-rbr needs a depth-stack document or --depth".into()),
    }
}

fn objective_rules(x: &IiMaid, p: &IiPolicyProfile) -> Result<(Maid, PolicyProfile), String> {
    let s = x.objective_model();
    let rules = x.rules_for_model(x.objective(), p).map_err(err)?;
    let m = s.model.base().clone();
    Ok((m, rules))
}

fn execute(cli: &Cli) -> Result<Outcome, String> {
    let game = io::load(cli.command.document()).map_err(err)?;
    match &cli.command {
        Command::Validate { .. } => {
            let x = game.to_ii_maid();
            let kind = serde_json::to_value(game.kind()).unwrap();
            Ok(ok(json!({ "kind": kind, "agents": x.agents(), "models": x.model_ids(), "valid": true })))
        }
        Command::InfoSets { agent, .. } => Ok(ok(sets_json(&game.to_ii_maid(), agent.as_deref()))),
        Command::Eu { profile, .. } => match (load_profile(&game, profile)?, &game) {
            (Profile::Maid(p), Game::Maid { maid, .. }) => {
                Ok(ok(json!({ "expected_utilities": maid.expected_utilities(&p).map_err(err)? })))
            }
            (Profile::Ii(p), _) => {
                let x = game.to_ii_maid();
                x.check_profile(&p, &x.agents().iter().map(String::as_str).collect::<Vec<_>>()).map_err(err)?;
                let mut subjective = Map::new();
                let mut objective = Map::new();
                for a in x.agents() {
                    if x.objective_model().belief(a).is_some() {
                        subjective.insert(a.clone(), json!(x.subjective_expected_utility(a, x.objective(), &p).map_err(err)?));
                    }
                    objective.insert(a.clone(), json!(x.model_utility(x.objective(), a, &p).map_err(err)?));
                }
                Ok(ok(json!({ "subjective": subjective, "objective_model": objective })))
            }
            _ => unreachable!("MAID documents always yield MAID profiles"),
        },
        Command::CheckNash { profile, .. } => {
            let report = match (load_profile(&game, profile)?, &game) {
                (Profile::Maid(p), Game::Maid { maid, .. }) => maid.is_nash_capped(&p, cli.tol, cli.cap).map_err(err)?,
                (Profile::Ii(p), _) => game.to_ii_maid().is_nash_ii_capped(&p, cli.tol, cli.cap).map_err(err)?,
                _ => unreachable!("MAID documents always yield MAID profiles"),
            };
            Ok(check(report.is_nash, serde_json::to_value(&report).unwrap()))
        }
        Command::SolveNash { iterations, .. } => match &game {
            Game::Maid { maid, .. } => {
                let found = maid.find_pure_nash(cli.cap).map_err(err)?;
                match found.first() {
                    Some(p) => {
                        let report = maid.is_nash_capped(p, cli.tol, cli.cap).map_err(err)?;
                        let doc = io::maid_profile_document(maid, p);
                        Ok(check(report.is_nash, json!({ "found": true, "profile": doc, "check": report })))
                    }
                    None => Ok(check(false, json!({ "found": false }))),
                }
            }
            _ => {
                let x = game.to_ii_maid();
                match x.find_nash_ii(cli.cap, *iterations).map_err(err)? {
                    Some(p) => {
                        let report = x.is_nash_ii_capped(&p, cli.tol, cli.cap).map_err(err)?;
                        let doc = io::ii_profile_document(&p);
                        Ok(check(report.is_nash, json!({ "found": true, "profile": doc, "check": report })))
                    }
                    None => Ok(check(false, json!({ "found": false }))),
                }
            }
        },
        Command::CheckConsistency { .. } => {
            let x = game.to_ii_maid();
            let coherence = x.validate_coherence();
            let report = x.check_consistency();
            let passed = coherence.is_empty() && report.strongly_consistent;
            Ok(check(passed, json!({ "coherence_violations": coherence, "consistency": report })))
        }
        Command::SolveRbr { .. } => {
            let stack = stack_for(&game, cli.depth)?;
            let sol = stack.recursive_best_response().map_err(err)?;
            let result = json!({
                "depth": sol.depth,
                "profile": io::ii_profile_document(&sol.profile),
                "objective_utilities": sol.objective_utilities,
                "audit_passed": sol.audit_passed,
                "trace": sol.trace,
            });
            Ok(check(sol.audit_passed, result))
        }
        Command::ConvertEfg { .. } => match &game {
            Game::Maid { maid, .. } => {
                let tree = maid2efg(maid, None).map_err(err)?;
                Ok(ok(json!({ "order": tree.order, "efg": tree.efg })))
            }
            _ => {
                let conv = maid2efg_ii(&game.to_ii_maid()).map_err(err)?;
                let g = &conv.game;
                let mut states = Map::new();
                for s in g.space().states() {
                    let mut beliefs = Map::new();
                    for a in g.agents() {
                        beliefs.insert(a.clone(), json!(g.space().belief(a, s)));
                    }
                    states.insert(s.to_string(), json!({ "game": g.space().game_of(s), "beliefs": beliefs }));
                }
                let correspondence: Vec<Value> = conv
                    .correspondence
                    .iter()
                    .map(|(set, class)| json!({ "information_set": set.to_string(), "class": class.to_string() }))
                    .collect();
                Ok(ok(json!({
                    "interim_state": g.interim_state(),
                    "states": states,
                    "games": g.games(),
                    "correspondence": correspondence,
                })))
            }
        },
        Command::VerifyEquivalence { samples, .. } => {
            let x = game.to_ii_maid();
            let conv = maid2efg_ii(&x).map_err(err)?;
            let mut profiles = x.pure_profiles(cli.cap).map_err(err)?;
            let pure = profiles.len();
            let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
            profiles.extend((0..*samples).map(|_| random_mixed_profile(&mut rng, &x)));
            let report = verify_equivalence(&x, &conv, &profiles, cli.tol.min(1e-9)).map_err(err)?;
            Ok(check(report.holds, json!({ "pure_profiles": pure, "mixed_profiles": samples, "report": report })))
        }
        Command::Simulate { profile, rollouts, .. } => {
            let (m, rules) = match (load_profile(&game, profile)?, &game) {
                (Profile::Maid(p), Game::Maid { maid, .. }) => (maid.clone(), p),
                (Profile::Ii(p), _) => objective_rules(&game.to_ii_maid(), &p)?,
                _ => unreachable!("MAID documents always yield MAID profiles"),
            };
            let exact = m.expected_utilities(&rules).map_err(err)?;
            let report = simulate(&m, &rules, *rollouts, cli.seed).map_err(err)?;
            let within = exact
                .iter()
                .all(|(a, e)| (report.means[a] - e).abs() <= 4.0 * report.std_errors[a] + 1e-12);
            Ok(check(within, json!({ "simulation": report, "exact": exact, "within_4_se": within })))
        }
        Command::ExportDot { efg, .. } => {
            let x = game.to_ii_maid();
            let dot = if *efg {
                let s = x.objective_model();
                efg_dot(&maid2efg(&s.model.collapsed(), None).map_err(err)?.efg, &s.id)
            } else {
                match (&game, cli.depth) {
                    (Game::Maid { id, maid }, _) => maid_dot(maid, id),
                    (_, depth) => belief_tree_dot(&x, depth.unwrap_or(2)),
                }
            };
            Ok(Outcome { passed: true, result: json!({ "dot": dot }), raw: Some(dot) })
        }
    }
}

fn render_text(command: &str, status: &str, result: &Value) -> String {
    let mut out = format!("{command}: {status}\n");
    if let Value::Object(map) = result {
        for (k, v) in map {
            out.push_str(&format!("  {k}: {}\n", serde_json::to_string(v).unwrap()));
        }
    }
    out
}

/// Runs one command line and returns its exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, errout: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = if code == EXIT_OK { write!(out, "{}", e.render()) } else { write!(errout, "{}", e.render()) };
            return code;
        }
    };
    let start = Instant::now();
    let outcome = execute(&cli);
    let elapsed = start.elapsed().as_secs_f64() * 1e3;
    let command = cli.command.name();
    let mut report = Map::new();
    report.insert("command".into(), json!(command));
    report.insert("document".into(), json!(cli.command.document().display().to_string()));
    report.insert("seed".into(), json!(cli.seed));
    let code = match &outcome {
        Ok(o) => {
            report.insert("passed".into(), json!(o.passed));
            report.insert("result".into(), o.result.clone());
            if o.passed {
                EXIT_OK
            } else {
                EXIT_FALSE
            }
        }
        Err(message) => {
            report.insert("error".into(), json!(message));
            EXIT_ERROR
        }
    };
    if cli.timings {
        report.insert("timings_ms".into(), json!({ "total": elapsed }));
    }
    let written = match (cli.output, &outcome) {
        (OutputFormat::Json, _) => writeln!(out, "{}", serde_json::to_string_pretty(&Value::Object(report)).unwrap()),
        (OutputFormat::Text, Ok(Outcome { raw: Some(raw), .. })) => write!(out, "{raw}"),
        (OutputFormat::Text, Ok(o)) => {
            let status = if o.passed { "ok" } else { "check failed" };
            write!(out, "{}", render_text(command, status, &o.result))
        }
        (OutputFormat::Text, Err(message)) => writeln!(errout, "error: {message}"),
    };
    if cli.timings && cli.output == OutputFormat::Text {
        let _ = writeln!(out, "  time: {elapsed:.3} ms");
    }
    match written {
        Ok(()) => code,
        Err(_) => EXIT_ERROR,
    }
}
