//! Transition engines for classic CCS and for CCS_gamma with the
//! trigger operator. Infinite input sums are never expanded: visible
//! enumeration draws objects from a caller-supplied pool, while
//! synchronisation resolves the partner's inputs on demand by pushing
//! the required object backwards through relabelling stacks via
//! preimages.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::names::Name;
use crate::syntax::{
    alpha_canonical_ccs, dom_admits, instance_relabelling, prepend_match, Action, Barb, CcsTerm,
    DefEnv, MatchSeq,
};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CcsStepError {
    UnboundIdent { name: String },
    UnguardedRecursion { name: String },
}

impl fmt::Display for CcsStepError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CcsStepError::UnboundIdent { name } => {
                write!(f, "identifier {name} is not defined")
            }
            CcsStepError::UnguardedRecursion { name } => {
                write!(f, "unguarded recursion through {name} has no finite transition set")
            }
        }
    }
}

const UNFOLD_LIMIT: usize = 64;

/// The communication function: an output and an input with the same
/// object synchronise, producing the silent action that records the
/// subject equation ahead of both matching sequences.
pub fn gamma(a: &Action, b: &Action) -> Option<Action> {
    match (a, b) {
        (Action::FreeOut(m, x, y), Action::FreeIn(n, v, z)) if y == z => {
            Some(Action::Silent(prepend_match(&m.concat(n), x, v)))
        }
        (Action::FreeIn(..), Action::FreeOut(..)) => gamma(b, a),
        _ => None,
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum CcsFlavor {
    Classic,
    Gamma,
}

struct CcsStepper<'a> {
    env: &'a DefEnv,
    flavor: CcsFlavor,
    pool: Vec<Name>,
}

type CcsSteps = Vec<(Action, CcsTerm)>;
type Stack = Vec<String>;

fn instantiate(
    body: &CcsTerm,
    style: crate::syntax::InstStyle,
    bind: &Name,
    z: &Name,
) -> CcsTerm {
    CcsTerm::Relabel(alloc::boxed::Box::new(body.clone()), instance_relabelling(style, bind, z))
}

impl<'a> CcsStepper<'a> {
    fn unfold(&self, name: &str, stack: &mut Stack) -> Result<CcsTerm, CcsStepError> {
        if stack.iter().any(|n| n == name) || stack.len() >= UNFOLD_LIMIT {
            return Err(CcsStepError::UnguardedRecursion { name: name.to_string() });
        }
        self.env
            .lookup_ccs(name)
            .cloned()
            .ok_or_else(|| CcsStepError::UnboundIdent { name: name.to_string() })
    }

    fn steps(&self, e: &CcsTerm, stack: &mut Stack) -> Result<CcsSteps, CcsStepError> {
        let mut out: CcsSteps = Vec::new();
        match e {
            CcsTerm::Nil => {}
            CcsTerm::Prefix(a, b) => out.push((a.clone(), (**b).clone())),
            CcsTerm::SumList(es) => {
                for item in es {
                    out.extend(self.steps(item, stack)?);
                }
            }
            CcsTerm::InputSum { m, subj, bind, body, style, dom } => {
                for z in &self.pool {
                    if dom_admits(*dom, z) {
                        out.push((
                            Action::FreeIn(m.clone(), subj.clone(), z.clone()),
                            instantiate(body, *style, bind, z),
                        ));
                    }
                }
            }
            CcsTerm::Par(l, r) => {
                let ls = self.steps(l, stack)?;
                let rs = self.steps(r, stack)?;
                for (a, t) in &ls {
                    out.push((a.clone(), CcsTerm::par(t.clone(), (**r).clone())));
                }
                for (a, t) in &rs {
                    out.push((a.clone(), CcsTerm::par((**l).clone(), t.clone())));
                }
                self.sync_against(&ls, r, false, stack, &mut out)?;
                self.sync_against(&rs, l, true, stack, &mut out)?;
            }
            CcsTerm::Restrict(b, l) => {
                for (a, t) in self.steps(b, stack)? {
                    let blocked = a.subject().map(|s| l.contains(s)).unwrap_or(false);
                    if !blocked {
                        out.push((a, CcsTerm::Restrict(alloc::boxed::Box::new(t), l.clone())));
                    }
                }
            }
            CcsTerm::Relabel(b, f) => {
                for (a, t) in self.steps(b, stack)? {
                    out.push((a.relabel(f), CcsTerm::relabel(t, f.clone())));
                }
            }
            CcsTerm::Trigger(x, y, b) => {
                for (a, t) in self.steps(b, stack)? {
                    out.push((a.guarded(x, y), t));
                }
            }
            CcsTerm::Ide(name) => {
                let body = self.unfold(name, stack)?;
                stack.push(name.clone());
                let res = self.steps(&body, stack);
                stack.pop();
                out.extend(res?);
            }
        }
        Ok(out)
    }

    fn sync_against(
        &self,
        outs: &CcsSteps,
        partner: &CcsTerm,
        flipped: bool,
        stack: &mut Stack,
        out: &mut CcsSteps,
    ) -> Result<(), CcsStepError> {
        for (a, at) in outs {
            let Action::FreeOut(m, x, w) = a else { continue };
            for (n, v, pt) in self.inputs_at(partner, w, stack)? {
                // classic synchronisation is the exact handshake: relabelling
                // happens after the inner derivation and cannot create it
                if self.flavor == CcsFlavor::Classic
                    && (!m.is_empty() || !n.is_empty() || v != *x)
                {
                    continue;
                }
                let label = Action::Silent(prepend_match(&m.concat(&n), x, &v));
                let target = if flipped {
                    CcsTerm::par(pt, at.clone())
                } else {
                    CcsTerm::par(at.clone(), pt)
                };
                out.push((label, target));
            }
        }
        Ok(())
    }

    /// All ways for `e` to input exactly the object `w`, resolved
    /// through relabelling stacks by preimage: entries (N, v, target)
    /// for transitions labelled `N v?w`.
    fn inputs_at(
        &self,
        e: &CcsTerm,
        w: &Name,
        stack: &mut Stack,
    ) -> Result<Vec<(MatchSeq, Name, CcsTerm)>, CcsStepError> {
        let mut out = Vec::new();
        match e {
            CcsTerm::Nil => {}
            CcsTerm::Prefix(Action::FreeIn(n, v, y), b) => {
                if y == w {
                    out.push((n.clone(), v.clone(), (**b).clone()));
                }
            }
            CcsTerm::Prefix(..) => {}
            CcsTerm::SumList(es) => {
                for item in es {
                    out.extend(self.inputs_at(item, w, stack)?);
                }
            }
            CcsTerm::InputSum { m, subj, bind, body, style, dom } => {
                if dom_admits(*dom, w) {
                    out.push((m.clone(), subj.clone(), instantiate(body, *style, bind, w)));
                }
            }
            CcsTerm::Par(l, r) => {
                for (n, v, t) in self.inputs_at(l, w, stack)? {
                    out.push((n, v, CcsTerm::par(t, (**r).clone())));
                }
                for (n, v, t) in self.inputs_at(r, w, stack)? {
                    out.push((n, v, CcsTerm::par((**l).clone(), t)));
                }
            }
            CcsTerm::Restrict(b, l) => {
                for (n, v, t) in self.inputs_at(b, w, stack)? {
                    if !l.contains(&v) {
                        out.push((n, v, CcsTerm::Restrict(alloc::boxed::Box::new(t), l.clone())));
                    }
                }
            }
            CcsTerm::Relabel(b, f) => {
                for u in f.preimage(w) {
                    for (n, v, t) in self.inputs_at(b, &u, stack)? {
                        out.push((n.relabel(f), f.apply(&v), CcsTerm::relabel(t, f.clone())));
                    }
                }
            }
            CcsTerm::Trigger(x, y, b) => {
                for (n, v, t) in self.inputs_at(b, w, stack)? {
                    out.push((prepend_match(&n, x, y), v, t));
                }
            }
            CcsTerm::Ide(name) => {
                let body = self.unfold(name, stack)?;
                stack.push(name.clone());
                let res = self.inputs_at(&body, w, stack);
                stack.pop();
                out.extend(res?);
            }
        }
        Ok(out)
    }
}

fn run_ccs(
    e: &CcsTerm,
    env: &DefEnv,
    flavor: CcsFlavor,
    pool: Vec<Name>,
) -> Result<CcsSteps, CcsStepError> {
    let stepper = CcsStepper { env, flavor, pool };
    let mut stack = Stack::new();
    let steps = stepper.steps(e, &mut stack)?;
    let mut seen = BTreeSet::new();
    let mut out: CcsSteps = Vec::new();
    for (a, t) in steps {
        if seen.insert((a.clone(), alpha_canonical_ccs(&t))) {
            out.push((a, t));
        }
    }
    out.sort();
    Ok(out)
}

/// Classic CCS: interleaving plus handshake of exact complements,
/// including handshakes resolved on demand through input sums. With
/// no pool, input sums contribute no visible transitions here.
pub fn step_ccs(e: &CcsTerm, env: &DefEnv) -> Result<Vec<(Action, CcsTerm)>, CcsStepError> {
    run_ccs(e, env, CcsFlavor::Classic, Vec::new())
}

/// Classic CCS with visible input-sum instances drawn from `pool`.
/// Handshakes stay exact and are complete regardless of the pool.
pub fn step_ccs_pool(
    e: &CcsTerm,
    env: &DefEnv,
    pool: &BTreeSet<Name>,
) -> Result<Vec<(Action, CcsTerm)>, CcsStepError> {
    run_ccs(e, env, CcsFlavor::Classic, pool.iter().cloned().collect())
}

/// Every transition of the gamma calculus whose input-sum
/// instantiations draw from `pool`; outputs, silent actions and
/// synchronisations are complete regardless of the pool.
pub fn step_gamma_visible(
    e: &CcsTerm,
    env: &DefEnv,
    pool: &BTreeSet<Name>,
) -> Result<Vec<(Action, CcsTerm)>, CcsStepError> {
    run_ccs(e, env, CcsFlavor::Gamma, pool.iter().cloned().collect())
}

/// The complete set of silent transitions (both proper taus and
/// match-carrying synchronisations), pool-free.
pub fn step_gamma_silent(
    e: &CcsTerm,
    env: &DefEnv,
) -> Result<Vec<(Action, CcsTerm)>, CcsStepError> {
    let mut ts = run_ccs(e, env, CcsFlavor::Gamma, Vec::new())?;
    ts.retain(|(a, _)| matches!(a, Action::Silent(_)));
    Ok(ts)
}

/// The complete, finite set of tau-successors, deduplicated up to the
/// canonical form.
pub fn step_gamma_tau(e: &CcsTerm, env: &DefEnv) -> Result<Vec<CcsTerm>, CcsStepError> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (a, t) in step_gamma_silent(e, env)? {
        if a.is_tau() && seen.insert(alpha_canonical_ccs(&t)) {
            out.push(t);
        }
    }
    Ok(out)
}

fn heads(
    e: &CcsTerm,
    env: &DefEnv,
    visited: &mut BTreeSet<String>,
) -> Result<Vec<Action>, CcsStepError> {
    let mut out = Vec::new();
    match e {
        CcsTerm::Nil => {}
        CcsTerm::Prefix(a, _) => out.push(a.clone()),
        CcsTerm::SumList(es) => {
            for item in es {
                out.extend(heads(item, env, visited)?);
            }
        }
        CcsTerm::InputSum { m, subj, bind, .. } => {
            // the object is irrelevant for barbs; any instance works
            out.push(Action::FreeIn(m.clone(), subj.clone(), bind.clone()));
        }
        CcsTerm::Par(l, r) => {
            out.extend(heads(l, env, visited)?);
            out.extend(heads(r, env, visited)?);
        }
        CcsTerm::Restrict(b, l) => {
            for a in heads(b, env, visited)? {
                let blocked = a.subject().map(|s| l.contains(s)).unwrap_or(false);
                if !blocked {
                    out.push(a);
                }
            }
        }
        CcsTerm::Relabel(b, f) => {
            for a in heads(b, env, visited)? {
                out.push(a.relabel(f));
            }
        }
        CcsTerm::Trigger(x, y, b) => {
            for a in heads(b, env, visited)? {
                out.push(a.guarded(x, y));
            }
        }
        CcsTerm::Ide(name) => {
            if visited.insert(name.clone()) {
                let body = env
                    .lookup_ccs(name)
                    .ok_or_else(|| CcsStepError::UnboundIdent { name: name.clone() })?;
                out.extend(heads(body, env, visited)?);
            }
        }
    }
    Ok(out)
}

/// Barbs: subjects of available prefixes and input sums, pushed
/// forward through relabelling stacks and restriction; only match-free
/// actions with public subjects are observable.
pub fn barbs_ccs(e: &CcsTerm, env: &DefEnv) -> Result<BTreeSet<Barb>, CcsStepError> {
    let mut out = BTreeSet::new();
    for a in heads(e, env, &mut BTreeSet::new())? {
        if let Some(b) = a.barb() {
            out.insert(b);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::names::Relabelling;
    use crate::parse::parse_ccs;
    use crate::syntax::{InstDom, InstStyle};
    use alloc::vec;

    fn n(s: &str) -> Name {
        Name::public(s)
    }

    fn ccs(text: &str) -> (CcsTerm, DefEnv) {
        parse_ccs(text, "").unwrap()
    }

    fn ccs_with(text: &str, defs: &str) -> (CcsTerm, DefEnv) {
        parse_ccs(text, defs).unwrap()
    }

    fn out_act(x: &str, y: &str) -> Action {
        Action::FreeOut(MatchSeq::empty(), n(x), n(y))
    }

    fn in_act(x: &str, y: &str) -> Action {
        Action::FreeIn(MatchSeq::empty(), n(x), n(y))
    }

    #[test]
    fn gamma_table() {
        assert_eq!(gamma(&out_act("x", "y"), &in_act("x", "y")), Some(Action::tau()));
        let g = gamma(&out_act("x", "y"), &in_act("v", "y")).unwrap();
        assert_eq!(g.to_string(), "[x=v]tau");
        assert!(g.is_synchronisation());
        assert_eq!(gamma(&out_act("x", "y"), &in_act("v", "z")), None);
        assert_eq!(gamma(&out_act("x", "y"), &out_act("x", "y")), None);
        assert_eq!(gamma(&Action::tau(), &in_act("x", "y")), None);
    }

    #[test]
    fn gamma_commutes() {
        let acts = [
            out_act("x", "y"),
            in_act("x", "y"),
            in_act("v", "y"),
            out_act("v", "z"),
            Action::FreeIn(prepend_match(&MatchSeq::empty(), &n("a"), &n("b")), n("x"), n("y")),
        ];
        for a in &acts {
            for b in &acts {
                assert_eq!(gamma(a, b), gamma(b, a), "gamma not symmetric on {a}, {b}");
            }
        }
    }

    #[test]
    fn classic_handshake_and_restriction() {
        let (e, env) = ccs("x!y.0 || x?y.0");
        let ts = step_ccs(&e, &env).unwrap();
        assert!(ts.iter().any(|(a, t)| a.is_tau()
            && *t == CcsTerm::par(CcsTerm::Nil, CcsTerm::Nil)));
        assert_eq!(ts.len(), 3);

        let (e, env) = ccs("(x!y.0) \\ {x}");
        assert!(step_ccs(&e, &env).unwrap().is_empty());

        // mismatched objects do not handshake in the classic calculus
        let (e, env) = ccs("x!y.0 || x?z.0");
        assert!(!step_ccs(&e, &env).unwrap().iter().any(|(a, _)| a.is_tau()));
    }

    #[test]
    fn classic_handshake_resolves_input_sums() {
        let (e, env) = ccs("x!v.0 || sum y in pub. x?y.(y!u.0)");
        let ts = step_ccs(&e, &env).unwrap();
        let taus: Vec<_> = ts.iter().filter(|(a, _)| a.is_tau()).collect();
        assert_eq!(taus.len(), 1);

        // subjects must agree at derivation time; a relabelling applied
        // around the parallel composition cannot align them afterwards
        let (e, env) = ccs("(y!u.0 || sum w in pub. v?w.0)[map: y->v]");
        assert!(!step_ccs(&e, &env).unwrap().iter().any(|(a, _)| a.is_tau()));
        let pool = BTreeSet::from([n("u")]);
        let vis = step_ccs_pool(&e, &env, &pool).unwrap();
        let labels: Vec<String> = vis.iter().map(|(a, _)| a.to_string()).collect();
        assert_eq!(labels, vec!["v!u", "v?u"]);
    }

    #[test]
    fn classic_relabelled_recursion() {
        let defs = "A := x0!y.0 + tau.(A[shift x])";
        let (e, env) = ccs_with("A", defs);
        let ts = step_ccs(&e, &env).unwrap();
        let mut labels: Vec<String> = ts.iter().map(|(a, _)| a.to_string()).collect();
        labels.sort();
        assert_eq!(labels, vec!["tau", "x0!y"]);
        let (_, after) = ts.iter().find(|(a, _)| a.is_tau()).unwrap().clone();
        let ts2 = step_ccs(&after, &env).unwrap();
        let mut labels2: Vec<String> = ts2.iter().map(|(a, _)| a.to_string()).collect();
        labels2.sort();
        assert_eq!(labels2, vec!["tau", "x1!y"]);
    }

    #[test]
    fn input_sum_answers_demand() {
        let (e, env) = ccs("x!w.0 || sum y. x?y.(y!a.0)");
        let taus = step_gamma_tau(&e, &env).unwrap();
        assert_eq!(taus.len(), 1);
        let (want, _) = ccs("0 || (y!a.0)[w/y]");
        assert_eq!(alpha_canonical_ccs(&taus[0]), alpha_canonical_ccs(&want));
        // the instantiated branch speaks on w
        assert_eq!(
            barbs_ccs(&taus[0], &env).unwrap(),
            BTreeSet::from([Barb::output(n("w"))])
        );
    }

    #[test]
    fn demand_resolves_through_relabel_stacks() {
        // the input sits under [w/u]; requesting object w reaches it
        // through both preimages of w, giving one branch per preimage
        let (e, env) = ccs("x!w.0 || (sum y. x?y.0)[w/u]");
        let taus = step_gamma_tau(&e, &env).unwrap();
        assert_eq!(taus.len(), 2);

        // a shift stack: requesting a1 resolves to a0 below the shift
        let (e, env) = ccs("x!a1.0 || (sum y. x?y.(y!ok.0))[shift a]");
        let taus = step_gamma_tau(&e, &env).unwrap();
        assert_eq!(taus.len(), 1);
        assert!(barbs_ccs(&taus[0], &env).unwrap().contains(&Barb::output(n("a1"))));
    }

    #[test]
    fn synchronisation_matches_collapse_under_relabelling() {
        // inner sync carries [y=v]; the outer substitution collapses it
        let (e, env) = ccs("(y!u.0 || v?u.0)[v/y]");
        let silent = step_gamma_silent(&e, &env).unwrap();
        assert_eq!(silent.len(), 1);
        assert!(silent[0].0.is_tau());
        assert_eq!(step_gamma_tau(&e, &env).unwrap().len(), 1);

        // without the relabelling the sync is visible, not a tau
        let (e, env) = ccs("y!u.0 || v?u.0");
        let silent = step_gamma_silent(&e, &env).unwrap();
        assert_eq!(silent.len(), 1);
        assert_eq!(silent[0].0.to_string(), "[y=v]tau");
        assert!(step_gamma_tau(&e, &env).unwrap().is_empty());
    }

    #[test]
    fn trigger_guards_first_action_only() {
        let (e, env) = ccs("[x=y] => a!b.tau.0");
        let ts = step_gamma_visible(&e, &env, &BTreeSet::new()).unwrap();
        assert_eq!(ts.len(), 1);
        assert_eq!(ts[0].0.to_string(), "[x=y]a!b");
        // consumed: the continuation acts freely
        let ts2 = step_gamma_visible(&ts[0].1, &env, &BTreeSet::new()).unwrap();
        assert_eq!(ts2.len(), 1);
        assert!(ts2[0].0.is_tau());

        // trivial trigger is transition-equivalent to its body
        let (t, env2) = ccs("[x=x] => a!b.0");
        let (plain, _) = ccs("a!b.0");
        assert_eq!(
            step_gamma_visible(&t, &env2, &BTreeSet::new()).unwrap(),
            step_gamma_visible(&plain, &env2, &BTreeSet::new()).unwrap()
        );
    }

    #[test]
    fn restriction_passes_silent_blocks_subjects() {
        let (e, env) = ccs("(x!y.0 || x?y.0) \\ {x}");
        let ts = step_gamma_visible(&e, &env, &BTreeSet::new()).unwrap();
        assert_eq!(ts.len(), 1);
        assert!(ts[0].0.is_tau());

        // synchronisations with matches also pass restriction
        let (e, env) = ccs("(x!y.0 || v?y.0) \\ {x, v}");
        let silent = step_gamma_silent(&e, &env).unwrap();
        assert_eq!(silent.len(), 1);
        assert_eq!(silent[0].0.to_string(), "[x=v]tau");
    }

    #[test]
    fn pool_enumeration_and_domains() {
        let pool = BTreeSet::from([n("a"), Name::private("", 0)]);
        let (e, env) = ccs("sum y. x?y.0");
        let ts = step_gamma_visible(&e, &env, &pool).unwrap();
        assert_eq!(ts.len(), 2);

        let (e, env) = ccs("sum y in pub. x?y.0");
        let ts = step_gamma_visible(&e, &env, &pool).unwrap();
        let labels: Vec<String> = ts.iter().map(|(a, _)| a.to_string()).collect();
        assert_eq!(labels, vec!["x?a"]);

        // outputs ignore the pool entirely
        let (e, env) = ccs("x!y.0");
        let ts = step_gamma_visible(&e, &env, &BTreeSet::new()).unwrap();
        assert_eq!(ts.len(), 1);
        assert_eq!(ts[0].0, out_act("x", "y"));
    }

    #[test]
    fn public_only_input_ignores_private_demand() {
        // an output of a private name finds no public-only receiver
        let priv_out = CcsTerm::prefix(
            Action::FreeOut(MatchSeq::empty(), n("x"), Name::private("", 0)),
            CcsTerm::Nil,
        );
        let recv = CcsTerm::InputSum {
            m: MatchSeq::empty(),
            subj: n("x"),
            bind: n("y"),
            body: alloc::boxed::Box::new(CcsTerm::Nil),
            style: InstStyle::Plain,
            dom: InstDom::PublicOnly,
        };
        let env = DefEnv::new();
        let e = CcsTerm::par(priv_out.clone(), recv);
        assert!(step_gamma_tau(&e, &env).unwrap().is_empty());

        let recv_all = CcsTerm::InputSum {
            m: MatchSeq::empty(),
            subj: n("x"),
            bind: n("y"),
            body: alloc::boxed::Box::new(CcsTerm::Nil),
            style: InstStyle::Plain,
            dom: InstDom::AllNames,
        };
        let e = CcsTerm::par(priv_out, recv_all);
        assert_eq!(step_gamma_tau(&e, &env).unwrap().len(), 1);
    }

    #[test]
    fn tau_matches_visible_subset_on_pools() {
        let samples = [
            "x!w.0 || sum y. x?y.(y!a.0)",
            "(y!u.0 || v?u.0)[v/y]",
            "x!a1.0 || (sum y. x?y.0)[shift a]",
            "(x!y.0 || x?y.0) \\ {x}",
            "x!w.0 || (sum y. x?y.0)[l] || w?q.0",
        ];
        for s in samples {
            let (e, env) = ccs(s);
            // pool covering every name in sight
            let mut pool = crate::syntax::free_names_ccs(&e, &env);
            pool.insert(n("w"));
            pool.insert(n("a1"));
            let vis = step_gamma_visible(&e, &env, &pool).unwrap();
            let vis_taus: BTreeSet<CcsTerm> = vis
                .iter()
                .filter(|(a, _)| a.is_tau())
                .map(|(_, t)| alpha_canonical_ccs(t))
                .collect();
            let taus: BTreeSet<CcsTerm> = step_gamma_tau(&e, &env)
                .unwrap()
                .iter()
                .map(alpha_canonical_ccs)
                .collect();
            assert_eq!(taus, vis_taus, "tau sets disagree on {s}");
        }
    }

    #[test]
    fn barbs_through_stacks() {
        let (e, env) = ccs("x!y.0");
        assert_eq!(barbs_ccs(&e, &env).unwrap(), BTreeSet::from([Barb::output(n("x"))]));

        let (e, env) = ccs("(x!y.0 || v?w.0[l]) \\ {x}");
        assert_eq!(barbs_ccs(&e, &env).unwrap(), BTreeSet::from([Barb::input(n("v"))]));

        // private subjects generate no barbs
        let (e, env) = ccs("{l}p!y.0 || sum z. {}p?z.0");
        assert!(barbs_ccs(&e, &env).unwrap().is_empty());

        // a match-guarded head is unobservable until the trigger fires
        let (e, env) = ccs("[x=y] => a!b.0");
        assert!(barbs_ccs(&e, &env).unwrap().is_empty());

        // relabelling can restore observability by collapsing the match
        let (e, env) = ccs("([x=y] => a!b.0)[x/y]");
        assert_eq!(barbs_ccs(&e, &env).unwrap(), BTreeSet::from([Barb::output(n("a"))]));
    }

    #[test]
    fn barbs_agree_with_transitions() {
        let samples = [
            "x!y.0 || v?w.0",
            "(sum y. x?y.0)[l]",
            "([a=b]x!y.0 + tau.0) \\ {v}",
            "{el}p!q.0",
            "(x!y.0 || x?y.0) \\ {x}",
        ];
        for s in samples {
            let (e, env) = ccs(s);
            let mut pool = crate::syntax::free_names_ccs(&e, &env);
            pool.insert(n("zz"));
            let via_trans: BTreeSet<Barb> = step_gamma_visible(&e, &env, &pool)
                .unwrap()
                .iter()
                .filter_map(|(a, _)| a.barb())
                .collect();
            assert_eq!(barbs_ccs(&e, &env).unwrap(), via_trans, "barbs disagree on {s}");
        }
    }

    #[test]
    fn unbound_and_unguarded_identifiers_error() {
        let env = DefEnv::new();
        let e = CcsTerm::Ide("Missing".to_string());
        assert!(matches!(
            step_gamma_tau(&e, &env),
            Err(CcsStepError::UnboundIdent { .. })
        ));

        let (e, env) = ccs_with("Loop", "Loop := Loop || x!y.0");
        assert!(matches!(
            step_gamma_tau(&e, &env),
            Err(CcsStepError::UnguardedRecursion { .. })
        ));
        // guarded recursion is fine
        let (e, env) = ccs_with("Tick", "Tick := tau.Tick");
        assert_eq!(step_gamma_tau(&e, &env).unwrap(), vec![CcsTerm::Ide("Tick".to_string())]);
    }

    #[test]
    fn stacked_relabellings_are_not_flattened() {
        // [p_y] twice: y goes to {}p, then {}p goes to {e}p
        let (e, env) = ccs("(y!a.0)[p_y][p_y]");
        let ts = step_gamma_visible(&e, &env, &BTreeSet::new()).unwrap();
        assert_eq!(ts.len(), 1);
        assert_eq!(
            ts[0].0,
            Action::FreeOut(MatchSeq::empty(), Name::private("e", 0), n("a"))
        );
        let canon = alpha_canonical_ccs(&ts[0].1);
        match canon {
            CcsTerm::Relabel(inner, Relabelling::PNu(_)) => {
                assert!(matches!(*inner, CcsTerm::Relabel(_, Relabelling::PNu(_))));
            }
            other => panic!("stack collapsed: {other:?}"),
        }
    }
}
