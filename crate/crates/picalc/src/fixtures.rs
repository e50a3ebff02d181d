//! Named fixtures for the replay command. Each one checks a worked
//! example end to end and returns a one-line summary on success.

use std::collections::BTreeSet;

use picalc_core::encode::{translate_E, translate_T, translate_T_plain};
use picalc_core::equiv::{
    bts_ccs_classic, bts_gamma, bts_pi, check_barbed_bisim, check_reduction_bisim,
    check_strong_bisim, longest_tau_chain, lts_gamma, lts_pi_symbolic, replay_witness_bts,
    weak_barb_probe, Bts, GameResult, DEFAULT_MAX_DEPTH, DEFAULT_MAX_STATES,
};
use picalc_core::names::{fresh_like, Name};
use picalc_core::parse::{parse_ccs, parse_pi};
use picalc_core::syntax::{
    bound_names, free_names, Action, Barb, CcsTerm, DefEnv, PiMode, PiTerm,
};

pub const ALL: [&str; 10] = [
    "ex1", "ex2", "ex3", "ex4", "ex5", "ex6", "ex7", "bb98", "ccs-barbs", "pi-pa",
];

/// Run one fixture; `k` is the probe depth used by `ccs-barbs`.
pub fn run(name: &str, k: usize) -> Result<String, String> {
    match name {
        "ex1" => ex1(),
        "ex2" => ex2(),
        "ex3" => ex3(),
        "ex4" => chain_fixture("(nu y. x!y.y!w.0) | x(u).u(v).0", 2),
        "ex5" => chain_fixture("(nu y. x!y.(nu y. y!w.0)) | x(u).u(v).0", 1),
        "ex6" => chain_fixture("x(y).x(w).w!u.0 | x!v.x!y.y(v).0", 3),
        "ex7" => ex7(),
        "bb98" => bb98(),
        "ccs-barbs" => ccs_barbs(k),
        "pi-pa" => pi_pa(),
        other => Err(format!("unknown fixture {other}")),
    }
}

fn pi(text: &str) -> Result<(PiTerm, DefEnv), String> {
    parse_pi(text, PiMode::Im, "").map_err(|e| e.to_string())
}

fn image(p: &PiTerm, env: &DefEnv) -> Result<(CcsTerm, DefEnv), String> {
    translate_T(p, env, PiMode::Im).map_err(|e| e.to_string())
}

fn graph_pi(p: &PiTerm, env: &DefEnv) -> Result<Bts, String> {
    bts_pi(p, env, DEFAULT_MAX_STATES, DEFAULT_MAX_DEPTH).map_err(|e| e.to_string())
}

fn graph_gamma(t: &CcsTerm, env: &DefEnv) -> Result<Bts, String> {
    bts_gamma(t, env, DEFAULT_MAX_STATES, DEFAULT_MAX_DEPTH).map_err(|e| e.to_string())
}

fn expect_chain(b: &Bts, want: usize, what: &str) -> Result<(), String> {
    match longest_tau_chain(b) {
        Some(got) if got == want => Ok(()),
        Some(got) => Err(format!("{what}: longest tau chain is {got}, expected {want}")),
        None => Err(format!("{what}: tau chains are unbounded")),
    }
}

fn expect_exact_barbed(b1: &Bts, b2: &Bts) -> Result<(), String> {
    if !b1.complete || !b2.complete {
        return Err("exploration hit a bound; the barbed check would not be exact".into());
    }
    match check_barbed_bisim(b1, b2) {
        GameResult::Bisimilar => Ok(()),
        r => Err(format!("barbed check returned: {r}")),
    }
}

fn ex1() -> Result<String, String> {
    let (p, env) = pi("x(y).y!w.0")?;
    let (t, tenv) = image(&p, &env)?;
    let (expect, _) = parse_ccs("sum y. x?y.y!w.0", "").map_err(|e| e.to_string())?;
    if t != expect {
        return Err(format!("translation is {t}, expected {expect}"));
    }
    let pool: BTreeSet<Name> =
        [Name::public("u"), Name::public("w"), Name::public("x")].into();
    let l = lts_gamma(&t, &tenv, &pool, 100, 10).map_err(|e| e.to_string())?;
    let root = &l.transitions[0];
    let all_inputs = root.iter().all(|(a, _)| {
        matches!(a, Action::FreeIn(m, x, _) if m.is_empty() && *x == Name::public("x"))
    });
    if root.len() != pool.len() || !all_inputs {
        return Err("the sum should offer exactly one input instance per pool name".into());
    }
    let (_, j) = root
        .iter()
        .find(|(a, _)| a.object() == Some(&Name::public("u")))
        .ok_or("missing the instance x?u")?;
    let next = &l.transitions[*j];
    if next.len() != 1 || next[0].0.to_string() != "u!w" {
        return Err("after x?u the continuation should output on u".into());
    }
    Ok(format!("translation is {t}; each instance substitutes the received name"))
}

fn ex2() -> Result<String, String> {
    let (p, env) = pi("x(y).y!w.0 | x!u.u(v).0")?;
    let (t, tenv) = image(&p, &env)?;
    let b1 = graph_pi(&p, &env)?;
    let b2 = graph_gamma(&t, &tenv)?;
    expect_exact_barbed(&b1, &b2)?;
    let mut pool = free_names(&p);
    pool.extend(bound_names(&p));
    let fresh = fresh_like(&Name::public("z"), &pool);
    pool.insert(fresh);
    let l1 = lts_pi_symbolic(&p, &env, &pool, DEFAULT_MAX_STATES, DEFAULT_MAX_DEPTH)
        .map_err(|e| e.to_string())?;
    let l2 = lts_gamma(&t, &tenv, &pool, DEFAULT_MAX_STATES, DEFAULT_MAX_DEPTH)
        .map_err(|e| e.to_string())?;
    match check_strong_bisim(&l1, &l2).map_err(|e| e.to_string())? {
        GameResult::Bisimilar => {}
        r => return Err(format!("strong check returned: {r}")),
    }
    Ok(format!(
        "barbed bisimilar exactly; one labelled system up to strong bisimilarity \
         over {} pool names",
        pool.len()
    ))
}

fn ex3() -> Result<String, String> {
    let (p, env) = pi("(nu x. x(y).0) | (nu x. x!u.0)")?;
    let (t, tenv) = image(&p, &env)?;
    let b1 = graph_pi(&p, &env)?;
    let b2 = graph_gamma(&t, &tenv)?;
    expect_chain(&b1, 0, "source")?;
    expect_chain(&b2, 0, "translation")?;
    if !b1.barbs[0].is_empty() || !b2.barbs[0].is_empty() {
        return Err("both sides should have no barbs at all".into());
    }
    expect_exact_barbed(&b1, &b2)?;
    Ok("no reductions and no barbs on either side".into())
}

fn chain_fixture(text: &str, want: usize) -> Result<String, String> {
    let (p, env) = pi(text)?;
    let (t, tenv) = image(&p, &env)?;
    let b1 = graph_pi(&p, &env)?;
    let b2 = graph_gamma(&t, &tenv)?;
    expect_chain(&b1, want, "source")?;
    expect_chain(&b2, want, "translation")?;
    expect_exact_barbed(&b1, &b2)?;
    Ok(format!("longest reduction chain is {want} on both sides; barbed bisimilar exactly"))
}

fn ex7() -> Result<String, String> {
    let (p, env) = pi("x(y).x(w).w!u.0 | x!v.x!y.y(v).0")?;
    let (t, tenv) =
        translate_T_plain(&p, &env, PiMode::Im).map_err(|e| e.to_string())?;
    let b1 = graph_pi(&p, &env)?;
    let b2 = graph_gamma(&t, &tenv)?;
    expect_chain(&b1, 3, "source")?;
    expect_chain(&b2, 1, "finite-map mutant")?;
    match check_barbed_bisim(&b1, &b2) {
        GameResult::NotBisimilar(w) => {
            if !replay_witness_bts(&b1, &b2, &w, true) {
                return Err("mutant witness does not replay".into());
            }
        }
        r => return Err(format!("the finite-map mutant slipped through: {r}")),
    }
    Ok("instantiating by a finite map instead of the spare-shifting substitution is caught".into())
}

fn bb98() -> Result<String, String> {
    let (p, env) = pi("x!v.0 | x(y).(y!u.0 | v(w).0)")?;
    let b1 = graph_pi(&p, &env)?;
    expect_chain(&b1, 2, "source")?;

    let (t, tenv) = image(&p, &env)?;
    let bt = graph_gamma(&t, &tenv)?;
    expect_chain(&bt, 2, "translation")?;
    expect_exact_barbed(&b1, &bt)?;

    let e = translate_E(&p).map_err(|e| e.to_string())?;
    let eenv = DefEnv::new();
    let be = bts_ccs_classic(&e, &eenv, DEFAULT_MAX_STATES, DEFAULT_MAX_DEPTH)
        .map_err(|e| e.to_string())?;
    expect_chain(&be, 1, "pair encoding")?;
    match check_reduction_bisim(&b1, &be) {
        GameResult::NotBisimilar(w) => {
            if w.steps.len() != 2 {
                return Err(format!("witness has {} steps, expected 2", w.steps.len()));
            }
            if !replay_witness_bts(&b1, &be, &w, false) {
                return Err("pair-encoding witness does not replay".into());
            }
        }
        r => return Err(format!("reduction check returned: {r}")),
    }
    Ok("translation keeps the two-step chain; the pair encoding stops after one".into())
}

fn ccs_barbs(k: usize) -> Result<String, String> {
    let (a, env) =
        parse_ccs("A", "A := x0!y.0 + tau.(A[shift x])").map_err(|e| e.to_string())?;
    let probe = weak_barb_probe(&a, &env, k).map_err(|e| e.to_string())?;
    let want: BTreeSet<Barb> =
        (0..=k).map(|i| Barb::output(Name::public(&format!("x{i}")))).collect();
    if !want.is_subset(&probe) {
        return Err(format!("missing weak barbs at probe depth {k}"));
    }
    if probe.len() != k + 1 {
        return Err(format!("expected {} weak barbs, found {}", k + 1, probe.len()));
    }
    Ok(format!("{} distinct weak output barbs at probe depth {k}", probe.len()))
}

fn pi_pa() -> Result<String, String> {
    let probes = [
        ("x!v.0 | x(y).(y!z.0 | v(w).0 | 0 | 0)", 2),
        ("x!v.0 | x(y).(0 | v(w).0 | 0 | 0)", 1),
        ("x!v.0 | x(y).(y!z.0 | 0 | 0 | 0)", 1),
        ("x!v.0 | x(y).(tau.0 | 0 | 0)", 2),
    ];
    for (text, want) in probes {
        let (p, env) = pi(text)?;
        let (t, tenv) = image(&p, &env)?;
        let b1 = graph_pi(&p, &env)?;
        let b2 = graph_gamma(&t, &tenv)?;
        expect_chain(&b1, want, text)?;
        expect_chain(&b2, want, text)?;
        expect_exact_barbed(&b1, &b2)?;
    }
    let (main, _) = pi(probes[0].0)?;
    let e = translate_E(&main).map_err(|e| e.to_string())?;
    let be = bts_ccs_classic(&e, &DefEnv::new(), DEFAULT_MAX_STATES, DEFAULT_MAX_DEPTH)
        .map_err(|e| e.to_string())?;
    expect_chain(&be, 1, "pair encoding of the main probe")?;
    Ok("probes run 2/1/1/2 reductions and the translations track every one of them".into())
}
