//! Batch front end: parse and print terms, translate pi into CCS,
//! explore transition systems, check equivalences, replay fixtures.
//! Exit codes: 0 pass, 1 failed check, 2 usage or input error.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::process::{self, ExitCode};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use picalc::fixtures;
use picalc_core::ccs_sos::{step_ccs_pool, step_gamma_visible};
use picalc_core::encode::{translate_E, translate_T};
use picalc_core::equiv::{
    bts_ccs_classic, bts_gamma, bts_pi, check_barbed_bisim, check_reduction_bisim,
    check_strong_bisim, explore_lts, lts_classic, lts_dot, lts_gamma, lts_pi,
    lts_pi_symbolic, GameResult, Lts, DEFAULT_MAX_DEPTH, DEFAULT_MAX_STATES,
};
use picalc_core::names::{fresh_like, Name};
use picalc_core::parse::{parse_ccs, parse_name, parse_pi};
use picalc_core::pi_sos::{
    default_pool, step_early, step_early_symbolic, step_late, step_late_symbolic,
};
use picalc_core::syntax::{
    alpha_canonical, alpha_canonical_ccs, free_names_ccs, CcsTerm, DefEnv, PiMode, PiTerm,
};

#[derive(Parser)]
#[command(name = "picalc", version, about = "Process-calculus workbench")]
struct Cli {
    /// Cosmetic unicode rendering of printed terms
    #[arg(long, global = true)]
    unicode: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    /// pi terms with the match operator
    Strict,
    /// pi terms with matches on prefixes only
    Im,
    /// CCS terms
    Ccs,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EncoderArg {
    /// The compositional translation into CCS with name-matching synchronisation
    #[value(name = "T")]
    T,
    /// The pair-action encoding into classic CCS
    #[value(name = "E")]
    E,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SemanticsArg {
    Late,
    Early,
    LateSym,
    EarlySym,
    Ccs,
    CcsGamma,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EquivArg {
    Barbed,
    Reduction,
    Strong,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse a term file and print it back in canonical form
    Parse {
        file: PathBuf,
        /// Grammar to use
        #[arg(long, value_enum, default_value = "im")]
        mode: ModeArg,
        /// Definition file, one `A(x,y) := P` or `A := E` per line
        #[arg(long)]
        defs: Option<PathBuf>,
    },
    /// Translate a pi term into CCS and print it with generated definitions
    Translate {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "im")]
        mode: ModeArg,
        #[arg(long)]
        defs: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "T")]
        encoder: EncoderArg,
    },
    /// Explore a transition system and print its states and transitions
    Lts {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "early")]
        semantics: SemanticsArg,
        /// pi grammar used when the semantics is a pi one
        #[arg(long, value_enum, default_value = "im")]
        mode: ModeArg,
        #[arg(long)]
        defs: Option<PathBuf>,
        /// Comma-separated input pool; defaults to the term's names plus fresh ones
        #[arg(long, value_delimiter = ',')]
        pool: Vec<String>,
        /// Depth bound on the exploration
        #[arg(long)]
        depth: Option<usize>,
        /// State bound; the PICALC_MAX_STATES variable overrides the default
        #[arg(long)]
        states: Option<usize>,
        /// Write a GraphViz rendering to this path
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Check an equivalence against a translation or a second file
    Check {
        file: PathBuf,
        /// translation-T, translation-E, or a path to a second file
        #[arg(long)]
        against: String,
        #[arg(long, value_enum, default_value = "barbed")]
        equiv: EquivArg,
        #[arg(long, value_enum, default_value = "im")]
        mode: ModeArg,
        #[arg(long)]
        defs: Option<PathBuf>,
        /// Pool for the strong check; defaults to the terms' names plus fresh ones
        #[arg(long, value_delimiter = ',')]
        pool: Vec<String>,
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long)]
        states: Option<usize>,
        /// Write a JSON report to this path; `-` writes it to stdout
        #[arg(long)]
        json: Option<PathBuf>,
        /// Invert the exit code: this check is supposed to fail
        #[arg(long)]
        expect_fail: bool,
    },
    /// Replay named fixtures
    Replay {
        /// Fixture to replay; may be repeated
        #[arg(long)]
        fixture: Vec<String>,
        /// Replay every fixture
        #[arg(long)]
        all: bool,
        /// Probe depth for ccs-barbs
        #[arg(long, default_value_t = 10)]
        k: usize,
        /// Worker threads for the replay
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let printer = Printer { unicode: cli.unicode };
    match dispatch(cli.cmd, &printer) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cmd: Cmd, pr: &Printer) -> Result<ExitCode, String> {
    match cmd {
        Cmd::Parse { file, mode, defs } => cmd_parse(&file, mode, &defs, pr),
        Cmd::Translate { file, mode, defs, encoder } => {
            cmd_translate(&file, mode, &defs, encoder, pr)
        }
        Cmd::Lts { file, semantics, mode, defs, pool, depth, states, dot } => {
            cmd_lts(&file, semantics, mode, &defs, &pool, depth, states, &dot, pr)
        }
        Cmd::Check {
            file,
            against,
            equiv,
            mode,
            defs,
            pool,
            depth,
            states,
            json,
            expect_fail,
        } => cmd_check(
            &file,
            &against,
            equiv,
            mode,
            &defs,
            &pool,
            depth,
            states,
            &json,
            expect_fail,
            pr,
        ),
        Cmd::Replay { fixture, all, k, jobs } => cmd_replay(fixture, all, k, jobs),
    }
}

/// Write one line to stdout, leaving quietly if the reader has closed
/// the pipe.
fn emit(s: &str) {
    use std::io::Write;
    let mut out = io::stdout().lock();
    if writeln!(out, "{s}").is_err() {
        // 128 + SIGPIPE, as if the default signal disposition had killed us.
        // Exiting 0 here would mask a failing verdict from pipefail scripts.
        process::exit(141);
    }
}

struct Printer {
    unicode: bool,
}

impl Printer {
    fn line(&self, s: &str) {
        if self.unicode {
            emit(&unicodify(s));
        } else {
            emit(s);
        }
    }
}

/// Cosmetic rendering: tau and nu as greek letters, outputs with an
/// overlined subject. The canonical forms stay ASCII.
fn unicodify(s: &str) -> String {
    let b = s.as_bytes();
    let is_word = |c: u8| c.is_ascii_alphanumeric() || c == b'_';
    let boundary = |i: usize, len: usize| {
        (i == 0 || !is_word(b[i - 1])) && (i + len >= b.len() || !is_word(b[i + len]))
    };
    let mut out = String::new();
    let mut i = 0;
    while i < b.len() {
        if b[i..].starts_with(b"tau") && boundary(i, 3) {
            out.push('\u{03c4}');
            i += 3;
        } else if b[i..].starts_with(b"nu") && boundary(i, 2) {
            out.push('\u{03bd}');
            i += 2;
        } else if b[i] == b'!' {
            out.push('\u{0304}');
            i += 1;
        } else {
            out.push(b[i] as char);
            i += 1;
        }
    }
    out
}

fn read(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn read_defs(defs: &Option<PathBuf>) -> Result<String, String> {
    match defs {
        Some(p) => read(p),
        None => Ok(String::new()),
    }
}

fn pi_mode(mode: ModeArg) -> Result<PiMode, String> {
    match mode {
        ModeArg::Strict => Ok(PiMode::Strict),
        ModeArg::Im => Ok(PiMode::Im),
        ModeArg::Ccs => Err("this operation needs a pi mode, strict or im".into()),
    }
}

fn state_bound(flag: Option<usize>) -> Result<usize, String> {
    if let Some(n) = flag {
        return Ok(n);
    }
    match std::env::var("PICALC_MAX_STATES") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| format!("PICALC_MAX_STATES is not a number: {v}")),
        Err(_) => Ok(DEFAULT_MAX_STATES),
    }
}

fn parse_pool(items: &[String]) -> Result<Option<BTreeSet<Name>>, String> {
    if items.is_empty() {
        return Ok(None);
    }
    let mut set = BTreeSet::new();
    for raw in items {
        let t = raw.trim();
        if t.is_empty() {
            continue;
        }
        set.insert(parse_name(t).map_err(|e| format!("pool name {raw}: {e}"))?);
    }
    Ok(Some(set))
}

fn default_pool_ccs(e: &CcsTerm, env: &DefEnv) -> BTreeSet<Name> {
    let mut pool = free_names_ccs(e, env);
    let z1 = fresh_like(&Name::public("z"), &pool);
    pool.insert(z1);
    let z2 = fresh_like(&Name::public("z"), &pool);
    pool.insert(z2);
    pool
}

fn cmd_parse(
    file: &Path,
    mode: ModeArg,
    defs: &Option<PathBuf>,
    pr: &Printer,
) -> Result<ExitCode, String> {
    let text = read(file)?;
    let dtext = read_defs(defs)?;
    let printed = match mode {
        ModeArg::Ccs => parse_ccs(&text, &dtext).map(|(e, _)| e.to_string()),
        m => parse_pi(&text, pi_mode(m)?, &dtext).map(|(p, _)| p.to_string()),
    };
    match printed {
        Ok(s) => {
            pr.line(&s);
            Ok(ExitCode::SUCCESS)
        }
        Err(e) => {
            // malformed input is this command's ordinary failure mode
            eprintln!("{}:{e}", file.display());
            Ok(ExitCode::from(1))
        }
    }
}

fn cmd_translate(
    file: &Path,
    mode: ModeArg,
    defs: &Option<PathBuf>,
    encoder: EncoderArg,
    pr: &Printer,
) -> Result<ExitCode, String> {
    let text = read(file)?;
    let dtext = read_defs(defs)?;
    let pm = pi_mode(mode)?;
    let (p, env) =
        parse_pi(&text, pm, &dtext).map_err(|e| format!("{}:{e}", file.display()))?;
    let (term, generated) = match encoder {
        EncoderArg::T => {
            let (t, tenv) = translate_T(&p, &env, pm).map_err(|e| e.to_string())?;
            (t, tenv.ccs_defs)
        }
        EncoderArg::E => (translate_E(&p).map_err(|e| e.to_string())?, BTreeMap::new()),
    };
    pr.line(&term.to_string());
    if !generated.is_empty() {
        emit("");
        for (name, body) in &generated {
            pr.line(&format!("{name} := {body}"));
        }
    }
    Ok(ExitCode::SUCCESS)
}

#[allow(clippy::too_many_arguments)]
fn cmd_lts(
    file: &Path,
    semantics: SemanticsArg,
    mode: ModeArg,
    defs: &Option<PathBuf>,
    pool_flag: &[String],
    depth: Option<usize>,
    states: Option<usize>,
    dot: &Option<PathBuf>,
    pr: &Printer,
) -> Result<ExitCode, String> {
    let text = read(file)?;
    let dtext = read_defs(defs)?;
    let max_states = state_bound(states)?;
    let max_depth = depth.unwrap_or(DEFAULT_MAX_DEPTH);
    let named_pool = parse_pool(pool_flag)?;

    let lts: Lts = match semantics {
        SemanticsArg::Late
        | SemanticsArg::Early
        | SemanticsArg::LateSym
        | SemanticsArg::EarlySym => {
            let pm = pi_mode(mode)?;
            let (p, env) =
                parse_pi(&text, pm, &dtext).map_err(|e| format!("{}:{e}", file.display()))?;
            let pool = named_pool.unwrap_or_else(|| default_pool(&p));
            explore_lts(
                p,
                |q: &PiTerm| alpha_canonical(q).to_string(),
                |q| {
                    match semantics {
                        SemanticsArg::Late => step_late(q, &env),
                        SemanticsArg::Early => step_early(q, &env, &pool),
                        SemanticsArg::LateSym => step_late_symbolic(q, &env),
                        _ => step_early_symbolic(q, &env, &pool),
                    }
                    .map(|v| v.into_iter().map(|t| (t.action, t.target)).collect())
                    .map_err(|e| e.to_string())
                },
                &pool,
                max_states,
                max_depth,
            )
            .map_err(|e| e.to_string())?
        }
        SemanticsArg::Ccs | SemanticsArg::CcsGamma => {
            let (e, env) =
                parse_ccs(&text, &dtext).map_err(|e| format!("{}:{e}", file.display()))?;
            let pool = named_pool.unwrap_or_else(|| default_pool_ccs(&e, &env));
            let classic = semantics == SemanticsArg::Ccs;
            explore_lts(
                e,
                |t: &CcsTerm| alpha_canonical_ccs(t).to_string(),
                |t| {
                    if classic {
                        step_ccs_pool(t, &env, &pool)
                    } else {
                        step_gamma_visible(t, &env, &pool)
                    }
                    .map_err(|e| e.to_string())
                },
                &pool,
                max_states,
                max_depth,
            )
            .map_err(|e| e.to_string())?
        }
    };

    let names: Vec<String> = lts.pool.iter().map(|n| n.to_string()).collect();
    emit(&format!("pool: {}", names.join(", ")));
    let total: usize = lts.transitions.iter().map(|v| v.len()).sum();
    emit(&format!(
        "states: {}  transitions: {}  complete: {}",
        lts.states.len(),
        total,
        if lts.complete { "yes" } else { "no" }
    ));
    for (i, s) in lts.states.iter().enumerate() {
        let mark = if lts.frontier.contains(&i) { "  (frontier)" } else { "" };
        pr.line(&format!("s{i}: {s}{mark}"));
        for (a, j) in &lts.transitions[i] {
            pr.line(&format!("  {a} -> s{j}"));
        }
    }
    if let Some(path) = dot {
        fs::write(path, lts_dot(&lts, "lts"))
            .map_err(|e| format!("{}: {e}", path.display()))?;
    }
    Ok(ExitCode::SUCCESS)
}

enum Against {
    TranslationT,
    TranslationE,
    File(PathBuf),
}

struct CheckOutcome {
    result: GameResult,
    states: (usize, usize),
    exact: bool,
}

#[allow(clippy::too_many_arguments)]
fn cmd_check(
    file: &Path,
    against: &str,
    equiv: EquivArg,
    mode: ModeArg,
    defs: &Option<PathBuf>,
    pool_flag: &[String],
    depth: Option<usize>,
    states: Option<usize>,
    json_out: &Option<PathBuf>,
    expect_fail: bool,
    pr: &Printer,
) -> Result<ExitCode, String> {
    let text = read(file)?;
    let dtext = read_defs(defs)?;
    let max_states = state_bound(states)?;
    let max_depth = depth.unwrap_or(DEFAULT_MAX_DEPTH);
    let named_pool = parse_pool(pool_flag)?;
    let against = match against {
        "translation-T" => Against::TranslationT,
        "translation-E" => Against::TranslationE,
        other => Against::File(PathBuf::from(other)),
    };

    let out = match against {
        Against::TranslationT => {
            let pm = pi_mode(mode)?;
            let (p, env) =
                parse_pi(&text, pm, &dtext).map_err(|e| format!("{}:{e}", file.display()))?;
            let (t, tenv) = translate_T(&p, &env, pm).map_err(|e| e.to_string())?;
            match equiv {
                EquivArg::Barbed | EquivArg::Reduction => {
                    let b1 = bts_pi(&p, &env, max_states, max_depth)
                        .map_err(|e| e.to_string())?;
                    let b2 = bts_gamma(&t, &tenv, max_states, max_depth)
                        .map_err(|e| e.to_string())?;
                    let result = if equiv == EquivArg::Barbed {
                        check_barbed_bisim(&b1, &b2)
                    } else {
                        check_reduction_bisim(&b1, &b2)
                    };
                    CheckOutcome {
                        result,
                        states: (b1.states.len(), b2.states.len()),
                        exact: b1.complete && b2.complete,
                    }
                }
                EquivArg::Strong => {
                    // the translation mirrors the symbolic early system,
                    // matching guards on the labels included
                    let pool = named_pool.unwrap_or_else(|| default_pool(&p));
                    let l1 = lts_pi_symbolic(&p, &env, &pool, max_states, max_depth)
                        .map_err(|e| e.to_string())?;
                    let l2 = lts_gamma(&t, &tenv, &pool, max_states, max_depth)
                        .map_err(|e| e.to_string())?;
                    let result = check_strong_bisim(&l1, &l2).map_err(|e| e.to_string())?;
                    CheckOutcome {
                        result,
                        states: (l1.states.len(), l2.states.len()),
                        exact: l1.complete && l2.complete,
                    }
                }
            }
        }
        Against::TranslationE => {
            let pm = pi_mode(mode)?;
            let (p, env) =
                parse_pi(&text, pm, &dtext).map_err(|e| format!("{}:{e}", file.display()))?;
            let e = translate_E(&p).map_err(|e| e.to_string())?;
            let eenv = DefEnv::new();
            match equiv {
                EquivArg::Barbed | EquivArg::Reduction => {
                    let b1 = bts_pi(&p, &env, max_states, max_depth)
                        .map_err(|e| e.to_string())?;
                    let b2 = bts_ccs_classic(&e, &eenv, max_states, max_depth)
                        .map_err(|e| e.to_string())?;
                    let result = if equiv == EquivArg::Barbed {
                        check_barbed_bisim(&b1, &b2)
                    } else {
                        check_reduction_bisim(&b1, &b2)
                    };
                    CheckOutcome {
                        result,
                        states: (b1.states.len(), b2.states.len()),
                        exact: b1.complete && b2.complete,
                    }
                }
                EquivArg::Strong => {
                    let pool = named_pool.unwrap_or_else(|| default_pool(&p));
                    let l1 = lts_pi(&p, &env, &pool, max_states, max_depth)
                        .map_err(|e| e.to_string())?;
                    let l2 = lts_classic(&e, &eenv, &pool, max_states, max_depth)
                        .map_err(|e| e.to_string())?;
                    let result = check_strong_bisim(&l1, &l2).map_err(|e| e.to_string())?;
                    CheckOutcome {
                        result,
                        states: (l1.states.len(), l2.states.len()),
                        exact: l1.complete && l2.complete,
                    }
                }
            }
        }
        Against::File(path2) => {
            let text2 = read(&path2)?;
            if mode == ModeArg::Ccs {
                let (e1, env1) =
                    parse_ccs(&text, &dtext).map_err(|e| format!("{}:{e}", file.display()))?;
                let (e2, env2) = parse_ccs(&text2, &dtext)
                    .map_err(|e| format!("{}:{e}", path2.display()))?;
                match equiv {
                    EquivArg::Barbed | EquivArg::Reduction => {
                        let b1 = bts_gamma(&e1, &env1, max_states, max_depth)
                            .map_err(|e| e.to_string())?;
                        let b2 = bts_gamma(&e2, &env2, max_states, max_depth)
                            .map_err(|e| e.to_string())?;
                        let result = if equiv == EquivArg::Barbed {
                            check_barbed_bisim(&b1, &b2)
                        } else {
                            check_reduction_bisim(&b1, &b2)
                        };
                        CheckOutcome {
                            result,
                            states: (b1.states.len(), b2.states.len()),
                            exact: b1.complete && b2.complete,
                        }
                    }
                    EquivArg::Strong => {
                        let pool = named_pool.unwrap_or_else(|| {
                            let mut s = default_pool_ccs(&e1, &env1);
                            s.extend(default_pool_ccs(&e2, &env2));
                            s
                        });
                        let l1 = lts_gamma(&e1, &env1, &pool, max_states, max_depth)
                            .map_err(|e| e.to_string())?;
                        let l2 = lts_gamma(&e2, &env2, &pool, max_states, max_depth)
                            .map_err(|e| e.to_string())?;
                        let result =
                            check_strong_bisim(&l1, &l2).map_err(|e| e.to_string())?;
                        CheckOutcome {
                            result,
                            states: (l1.states.len(), l2.states.len()),
                            exact: l1.complete && l2.complete,
                        }
                    }
                }
            } else {
                let pm = pi_mode(mode)?;
                let (p1, env1) =
                    parse_pi(&text, pm, &dtext).map_err(|e| format!("{}:{e}", file.display()))?;
                let (p2, env2) = parse_pi(&text2, pm, &dtext)
                    .map_err(|e| format!("{}:{e}", path2.display()))?;
                match equiv {
                    EquivArg::Barbed | EquivArg::Reduction => {
                        let b1 = bts_pi(&p1, &env1, max_states, max_depth)
                            .map_err(|e| e.to_string())?;
                        let b2 = bts_pi(&p2, &env2, max_states, max_depth)
                            .map_err(|e| e.to_string())?;
                        let result = if equiv == EquivArg::Barbed {
                            check_barbed_bisim(&b1, &b2)
                        } else {
                            check_reduction_bisim(&b1, &b2)
                        };
                        CheckOutcome {
                            result,
                            states: (b1.states.len(), b2.states.len()),
                            exact: b1.complete && b2.complete,
                        }
                    }
                    EquivArg::Strong => {
                        let pool = named_pool.unwrap_or_else(|| {
                            let mut s = default_pool(&p1);
                            s.extend(default_pool(&p2));
                            s
                        });
                        let l1 = lts_pi(&p1, &env1, &pool, max_states, max_depth)
                            .map_err(|e| e.to_string())?;
                        let l2 = lts_pi(&p2, &env2, &pool, max_states, max_depth)
                            .map_err(|e| e.to_string())?;
                        let result =
                            check_strong_bisim(&l1, &l2).map_err(|e| e.to_string())?;
                        CheckOutcome {
                            result,
                            states: (l1.states.len(), l2.states.len()),
                            exact: l1.complete && l2.complete,
                        }
                    }
                }
            }
        }
    };

    report_check(&out, json_out, pr)?;
    let pass = !matches!(out.result, GameResult::NotBisimilar(_));
    let ok = if expect_fail { !pass } else { pass };
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn report_check(
    out: &CheckOutcome,
    json_out: &Option<PathBuf>,
    pr: &Printer,
) -> Result<(), String> {
    // With `--json -` the report is the JSON document and nothing else, so
    // that stdout stays machine-parseable.
    let json_stdout = matches!(json_out, Some(p) if p == Path::new("-"));
    if !json_stdout {
        let verdict_line = match (&out.result, out.exact) {
            (GameResult::Bisimilar, true) => "bisimilar (exact)".to_string(),
            (GameResult::Bisimilar, false) => {
                "bisimilar (within the explored bounds)".to_string()
            }
            (GameResult::BisimilarToDepth(d), _) => {
                format!("bisimilar to depth {d} (bounded exploration, not exact)")
            }
            (GameResult::NotBisimilar(w), _) => format!("not bisimilar: {}", w.reason),
        };
        emit(&format!("verdict: {verdict_line}"));
        emit(&format!("states: {} / {}", out.states.0, out.states.1));
    }
    if let (false, GameResult::NotBisimilar(w)) = (json_stdout, &out.result) {
        emit("witness:");
        for (i, s) in w.steps.iter().enumerate() {
            let label = s.label.as_deref().unwrap_or("tau");
            pr.line(&format!(
                "  {}. side {}  {}  --{label}-->  {}",
                i + 1,
                s.side,
                s.from,
                s.to
            ));
        }
    }

    if let Some(path) = json_out {
        let (verdict, depth) = match &out.result {
            GameResult::Bisimilar => ("bisimilar", Value::Null),
            GameResult::BisimilarToDepth(d) => ("bisimilar-to-depth", json!(d)),
            GameResult::NotBisimilar(_) => ("not-bisimilar", Value::Null),
        };
        let witness = match &out.result {
            GameResult::NotBisimilar(w) => json!({
                "reason": w.reason,
                "steps": w.steps.iter().map(|s| json!({
                    "side": s.side,
                    "from": s.from,
                    "to": s.to,
                    "label": s.label,
                })).collect::<Vec<_>>(),
            }),
            _ => Value::Null,
        };
        let report = json!({
            "verdict": verdict,
            "depth": depth,
            "states": [out.states.0, out.states.1],
            "witness": witness,
        });
        let body = serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?;
        if path == Path::new("-") {
            emit(&body);
        } else {
            fs::write(path, body + "\n").map_err(|e| format!("{}: {e}", path.display()))?;
        }
    }
    Ok(())
}

fn cmd_replay(
    fixture: Vec<String>,
    all: bool,
    k: usize,
    jobs: usize,
) -> Result<ExitCode, String> {
    let names: Vec<String> = if all {
        fixtures::ALL.iter().map(|s| s.to_string()).collect()
    } else if !fixture.is_empty() {
        for f in &fixture {
            if !fixtures::ALL.contains(&f.as_str()) {
                return Err(format!(
                    "unknown fixture {f}; known: {}",
                    fixtures::ALL.join(", ")
                ));
            }
        }
        fixture
    } else {
        return Err(format!(
            "pass --fixture NAME or --all; known fixtures: {}",
            fixtures::ALL.join(", ")
        ));
    };

    let results = run_fixtures(&names, k, jobs);
    let mut failed = false;
    for (name, res) in names.iter().zip(results) {
        match res {
            Ok(msg) => emit(&format!("PASS {name:9} {msg}")),
            Err(msg) => {
                failed = true;
                emit(&format!("FAIL {name:9} {msg}"));
            }
        }
    }
    Ok(if failed { ExitCode::from(1) } else { ExitCode::SUCCESS })
}

fn run_fixtures(names: &[String], k: usize, jobs: usize) -> Vec<Result<String, String>> {
    let workers = jobs.clamp(1, names.len().max(1));
    if workers <= 1 {
        return names.iter().map(|n| fixtures::run(n, k)).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<String, String>>>> =
        names.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= names.len() {
                    break;
                }
                let r = fixtures::run(&names[i], k);
                *slots[i].lock().unwrap() = Some(r);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().unwrap().expect("fixture slot filled"))
        .collect()
}
