//! The four pi-calculus transition engines (late, early, late
//! symbolic, early symbolic) plus barbs and clash-freedom diagnostics.
//!
//! There is no nondeterministic alpha rule: res, open and close pick
//! canonical fresh names, and transition sets are deduplicated up to
//! alpha-conversion of targets and bound action objects. Early input
//! is split into a pool-parameterized visible enumeration and an exact
//! tau engine whose inputs are resolved on demand against the
//! communicating output's object.

use alloc::collections::BTreeMap;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::names::{fresh_like, Name};
use crate::syntax::{
    alpha_canonical, free_names, prepend_match, subst1, substitute, Action, Barb, DefEnv,
    MatchSeq, PiTerm,
};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct PiTransition {
    pub source: PiTerm,
    pub action: Action,
    pub target: PiTerm,
}

impl fmt::Display for PiTransition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} --{}--> {}", self.source, self.action, self.target)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StepError {
    UnboundIdent { name: String, arity: usize },
    UnguardedRecursion { name: String },
}

impl fmt::Display for StepError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepError::UnboundIdent { name, arity } => {
                write!(f, "identifier {name} with {arity} argument(s) is not defined")
            }
            StepError::UnguardedRecursion { name } => {
                write!(f, "unguarded recursion through {name} has no finite transition set")
            }
        }
    }
}

const UNFOLD_LIMIT: usize = 64;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Flavor {
    Late,
    Early,
    LateSym,
    EarlySym,
}

impl Flavor {
    fn symbolic(self) -> bool {
        matches!(self, Flavor::LateSym | Flavor::EarlySym)
    }

    fn early(self) -> bool {
        matches!(self, Flavor::Early | Flavor::EarlySym)
    }
}

struct Stepper<'a> {
    env: &'a DefEnv,
    flavor: Flavor,
    pool: Vec<Name>,
}

type Steps = Vec<(Action, PiTerm)>;
type Stack = Vec<(String, Vec<Name>)>;

/// Replace only the object slot of an action.
fn with_object(action: &Action, w: &Name) -> Action {
    match action {
        Action::Silent(m) => Action::Silent(m.clone()),
        Action::FreeOut(m, x, _) => Action::FreeOut(m.clone(), x.clone(), w.clone()),
        Action::BoundOut(m, x, _) => Action::BoundOut(m.clone(), x.clone(), w.clone()),
        Action::FreeIn(m, x, _) => Action::FreeIn(m.clone(), x.clone(), w.clone()),
        Action::BoundIn(m, x, _) => Action::BoundIn(m.clone(), x.clone(), w.clone()),
    }
}

/// Rename a bound action object away from `avoid`, adjusting the
/// target, which holds the object free.
fn rename_bound(action: Action, target: PiTerm, avoid: &BTreeSet<Name>) -> (Action, PiTerm) {
    let Some(z) = action.bn().cloned() else {
        return (action, target);
    };
    if !avoid.contains(&z) {
        return (action, target);
    }
    let mut taken = avoid.clone();
    taken.extend(free_names(&target));
    taken.extend(action.free_names());
    taken.insert(z.clone());
    let w = fresh_like(&z, &taken);
    let renamed = subst1(&target, &z, &w);
    (with_object(&action, &w), renamed)
}

impl<'a> Stepper<'a> {
    fn unfold(
        &self,
        name: &str,
        args: &[Name],
        stack: &mut Stack,
    ) -> Result<(PiTerm, (String, Vec<Name>)), StepError> {
        let key = (name.to_string(), args.to_vec());
        if stack.contains(&key) || stack.len() >= UNFOLD_LIMIT {
            return Err(StepError::UnguardedRecursion { name: name.to_string() });
        }
        let (params, body) = self
            .env
            .lookup_pi(name, args.len())
            .ok_or_else(|| StepError::UnboundIdent {
                name: name.to_string(),
                arity: args.len(),
            })?;
        let sigma: BTreeMap<Name, Name> =
            params.iter().cloned().zip(args.iter().cloned()).collect();
        Ok((substitute(body, &sigma), key))
    }

    fn step(&self, p: &PiTerm, stack: &mut Stack) -> Result<Steps, StepError> {
        let mut out: Steps = Vec::new();
        match p {
            PiTerm::Nil => {}
            PiTerm::TauPre(m, b) => {
                if m.is_empty() || self.flavor.symbolic() {
                    out.push((Action::Silent(m.clone()), (**b).clone()));
                }
            }
            PiTerm::OutPre(m, x, y, b) => {
                if m.is_empty() || self.flavor.symbolic() {
                    out.push((Action::FreeOut(m.clone(), x.clone(), y.clone()), (**b).clone()));
                }
            }
            PiTerm::InPre(m, x, z, b) => {
                if m.is_empty() || self.flavor.symbolic() {
                    if self.flavor.early() {
                        for v in &self.pool {
                            out.push((
                                Action::FreeIn(m.clone(), x.clone(), v.clone()),
                                subst1(b, z, v),
                            ));
                        }
                    } else {
                        out.push((
                            Action::BoundIn(m.clone(), x.clone(), z.clone()),
                            (**b).clone(),
                        ));
                    }
                }
            }
            PiTerm::Match(x, y, b) => {
                if self.flavor.symbolic() {
                    for (a, t) in self.step(b, stack)? {
                        out.push((a.guarded(x, y), t));
                    }
                } else if x == y {
                    out.extend(self.step(b, stack)?);
                }
            }
            PiTerm::Sum(l, r) => {
                out.extend(self.step(l, stack)?);
                out.extend(self.step(r, stack)?);
            }
            PiTerm::Par(l, r) => {
                let ls = self.step(l, stack)?;
                let rs = self.step(r, stack)?;
                self.par_steps(&ls, l, &rs, r, stack, &mut out)?;
            }
            PiTerm::Nu(n, b) => {
                let (n, body) = if self.flavor.early() && self.pool.contains(n) {
                    // the restricted name collides with pool entries;
                    // rename before stepping so pool inputs stay free
                    let mut taken: BTreeSet<Name> = self.pool.iter().cloned().collect();
                    taken.extend(free_names(b));
                    taken.insert(n.clone());
                    let fresh = fresh_like(n, &taken);
                    (fresh.clone(), subst1(b, n, &fresh))
                } else {
                    (n.clone(), (**b).clone())
                };
                for (a, t) in self.step(&body, stack)? {
                    if a.m().names().contains(&n) {
                        continue;
                    }
                    if a.subject() == Some(&n) {
                        continue;
                    }
                    match &a {
                        Action::FreeOut(m, x, y) if *y == n => {
                            // open: the restricted name escapes as a
                            // bound output
                            out.push((
                                Action::BoundOut(m.clone(), x.clone(), n.clone()),
                                t,
                            ));
                        }
                        Action::FreeIn(_, _, y) if *y == n => {}
                        _ => {
                            if a.bn() == Some(&n) {
                                let avoid = BTreeSet::from([n.clone()]);
                                let (a2, t2) = rename_bound(a, t, &avoid);
                                out.push((a2, PiTerm::nu(n.clone(), t2)));
                            } else {
                                out.push((a, PiTerm::nu(n.clone(), t)));
                            }
                        }
                    }
                }
            }
            PiTerm::Ide(name, args) => {
                let (body, key) = self.unfold(name, args, stack)?;
                stack.push(key);
                let res = self.step(&body, stack);
                stack.pop();
                out.extend(res?);
            }
        }
        Ok(out)
    }

    fn par_steps(
        &self,
        ls: &Steps,
        l: &PiTerm,
        rs: &Steps,
        r: &PiTerm,
        stack: &mut Stack,
        out: &mut Steps,
    ) -> Result<(), StepError> {
        let fnl = free_names(l);
        let fnr = free_names(r);
        for (a, t) in ls {
            let (a, t) = rename_bound(a.clone(), t.clone(), &fnr);
            out.push((a, PiTerm::par(t, r.clone())));
        }
        for (a, t) in rs {
            let (a, t) = rename_bound(a.clone(), t.clone(), &fnl);
            out.push((a, PiTerm::par(l.clone(), t)));
        }
        if self.flavor.early() {
            self.early_sync(ls, l, rs, r, false, stack, out)?;
            self.early_sync(rs, r, ls, l, true, stack, out)?;
        } else {
            self.late_sync(ls, rs, false, out);
            self.late_sync(rs, ls, true, out);
        }
        Ok(())
    }

    /// Late com and close pair the finitely many bound inputs against
    /// outputs directly.
    fn late_sync(&self, outs: &Steps, ins: &Steps, flipped: bool, out: &mut Steps) {
        for (ao, po) in outs {
            for (ai, pi) in ins {
                let Action::BoundIn(n_m, v, z) = ai else { continue };
                match ao {
                    Action::FreeOut(m, x, y) => {
                        if !self.flavor.symbolic() && x != v {
                            continue;
                        }
                        let label = Action::Silent(prepend_match(&m.concat(n_m), x, v));
                        let inst = subst1(pi, z, y);
                        let target = if flipped {
                            PiTerm::par(inst, po.clone())
                        } else {
                            PiTerm::par(po.clone(), inst)
                        };
                        out.push((label, target));
                    }
                    Action::BoundOut(m, x, w) => {
                        if !self.flavor.symbolic() && x != v {
                            continue;
                        }
                        let label = Action::Silent(prepend_match(&m.concat(n_m), x, v));
                        let mut taken = free_names(po);
                        taken.remove(w);
                        let mut fnr = free_names(pi);
                        fnr.remove(z);
                        taken.extend(fnr);
                        let u = if taken.contains(w) { fresh_like(w, &taken) } else { w.clone() };
                        let left = subst1(po, w, &u);
                        let right = subst1(pi, z, &u);
                        let target = if flipped {
                            PiTerm::par(right, left)
                        } else {
                            PiTerm::par(left, right)
                        };
                        out.push((label, PiTerm::nu(u, target)));
                    }
                    _ => {}
                }
            }
        }
    }

    /// Early com and close resolve the partner's inputs on demand at
    /// the output object (or at the canonical fresh name, for close),
    /// which keeps the tau set exact without any pool.
    fn early_sync(
        &self,
        outs: &Steps,
        _from: &PiTerm,
        _ins: &Steps,
        partner: &PiTerm,
        flipped: bool,
        stack: &mut Stack,
        out: &mut Steps,
    ) -> Result<(), StepError> {
        for (ao, po) in outs {
            match ao {
                Action::FreeOut(m, x, y) => {
                    for (n_m, v, qi) in self.inputs_at(partner, y, stack)? {
                        if !self.flavor.symbolic() && *x != v {
                            continue;
                        }
                        let label = Action::Silent(prepend_match(&m.concat(&n_m), x, &v));
                        let target = if flipped {
                            PiTerm::par(qi, po.clone())
                        } else {
                            PiTerm::par(po.clone(), qi)
                        };
                        out.push((label, target));
                    }
                }
                Action::BoundOut(m, x, w) => {
                    let mut taken = free_names(partner);
                    let u = if taken.contains(w) {
                        taken.extend(free_names(po));
                        taken.insert(x.clone());
                        fresh_like(w, &taken)
                    } else {
                        w.clone()
                    };
                    let left = subst1(po, w, &u);
                    for (n_m, v, qi) in self.inputs_at(partner, &u, stack)? {
                        if !self.flavor.symbolic() && *x != v {
                            continue;
                        }
                        let label = Action::Silent(prepend_match(&m.concat(&n_m), x, &v));
                        let pair = if flipped {
                            PiTerm::par(qi, left.clone())
                        } else {
                            PiTerm::par(left.clone(), qi)
                        };
                        out.push((label, PiTerm::nu(u.clone(), pair)));
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// All ways for `q` to input exactly the name `y`: entries
    /// (N, v, target) for transitions labelled `N v?y`. Under the
    /// concrete flavors N is always empty.
    fn inputs_at(
        &self,
        q: &PiTerm,
        y: &Name,
        stack: &mut Stack,
    ) -> Result<Vec<(MatchSeq, Name, PiTerm)>, StepError> {
        let mut out = Vec::new();
        match q {
            PiTerm::InPre(m, x, z, b) => {
                if m.is_empty() || self.flavor.symbolic() {
                    out.push((m.clone(), x.clone(), subst1(b, z, y)));
                }
            }
            PiTerm::Match(x, v, b) => {
                if self.flavor.symbolic() {
                    for (n_m, subj, t) in self.inputs_at(b, y, stack)? {
                        out.push((prepend_match(&n_m, x, v), subj, t));
                    }
                } else if x == v {
                    out.extend(self.inputs_at(b, y, stack)?);
                }
            }
            PiTerm::Sum(l, r) => {
                out.extend(self.inputs_at(l, y, stack)?);
                out.extend(self.inputs_at(r, y, stack)?);
            }
            PiTerm::Par(l, r) => {
                for (n_m, v, t) in self.inputs_at(l, y, stack)? {
                    out.push((n_m, v, PiTerm::par(t, (**r).clone())));
                }
                for (n_m, v, t) in self.inputs_at(r, y, stack)? {
                    out.push((n_m, v, PiTerm::par((**l).clone(), t)));
                }
            }
            PiTerm::Nu(n, b) => {
                let (n, body) = if n == y {
                    let mut taken = free_names(b);
                    taken.insert(y.clone());
                    let fresh = fresh_like(n, &taken);
                    (fresh.clone(), subst1(b, n, &fresh))
                } else {
                    (n.clone(), (**b).clone())
                };
                for (n_m, v, t) in self.inputs_at(&body, y, stack)? {
                    if v == n || n_m.names().contains(&n) {
                        continue;
                    }
                    out.push((n_m, v, PiTerm::nu(n.clone(), t)));
                }
            }
            PiTerm::Ide(name, args) => {
                let (body, key) = self.unfold(name, args, stack)?;
                stack.push(key);
                let res = self.inputs_at(&body, y, stack);
                stack.pop();
                out.extend(res?);
            }
            _ => {}
        }
        Ok(out)
    }
}

/// Canonical form of a transition for identification up to
/// alpha-conversion: bound action objects are renamed to a scheme name
/// and the target is alpha-canonicalized.
fn transition_key(action: &Action, target: &PiTerm) -> (Action, PiTerm) {
    if let Some(z) = action.bn().cloned() {
        let mut avoid = free_names(target);
        avoid.remove(&z);
        avoid.extend(action.free_names());
        let mut k = 0u32;
        let w = loop {
            let cand = Name::public(&format!("_b{k}"));
            if !avoid.contains(&cand) {
                break cand;
            }
            k += 1;
        };
        let act = with_object(action, &w);
        let tgt = subst1(target, &z, &w);
        (act, alpha_canonical(&tgt))
    } else {
        (action.clone(), alpha_canonical(target))
    }
}

fn run(p: &PiTerm, env: &DefEnv, flavor: Flavor, pool: Vec<Name>) -> Result<Vec<PiTransition>, StepError> {
    let stepper = Stepper { env, flavor, pool };
    let mut stack = Stack::new();
    let steps = stepper.step(p, &mut stack)?;
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (action, target) in steps {
        if seen.insert(transition_key(&action, &target)) {
            out.push(PiTransition { source: p.clone(), action, target });
        }
    }
    out.sort();
    Ok(out)
}

/// Late semantics: inputs are bound, one canonical representative per
/// prefix (the binder itself).
pub fn step_late(p: &PiTerm, env: &DefEnv) -> Result<Vec<PiTransition>, StepError> {
    run(p, env, Flavor::Late, Vec::new())
}

/// Early semantics with free-input objects drawn from `pool`. Taus are
/// exact regardless of the pool; visible input enumeration is faithful
/// when pool covers fn(p).
pub fn step_early(
    p: &PiTerm,
    env: &DefEnv,
    pool: &BTreeSet<Name>,
) -> Result<Vec<PiTransition>, StepError> {
    run(p, env, Flavor::Early, pool.iter().cloned().collect())
}

/// Exactly the tau transitions of the early semantics, pool-free.
pub fn step_early_tau(p: &PiTerm, env: &DefEnv) -> Result<Vec<PiTransition>, StepError> {
    let mut ts = run(p, env, Flavor::Early, Vec::new())?;
    ts.retain(|t| t.action.is_tau());
    Ok(ts)
}

/// Late symbolic semantics: labels carry matching sequences.
pub fn step_late_symbolic(p: &PiTerm, env: &DefEnv) -> Result<Vec<PiTransition>, StepError> {
    run(p, env, Flavor::LateSym, Vec::new())
}

/// Early symbolic semantics, visible inputs drawn from `pool`.
pub fn step_early_symbolic(
    p: &PiTerm,
    env: &DefEnv,
    pool: &BTreeSet<Name>,
) -> Result<Vec<PiTransition>, StepError> {
    run(p, env, Flavor::EarlySym, pool.iter().cloned().collect())
}

/// All Silent(M) transitions of the early symbolic semantics,
/// pool-free and complete. The proper reductions among them are the
/// ones with is_tau().
pub fn step_early_symbolic_tau(p: &PiTerm, env: &DefEnv) -> Result<Vec<PiTransition>, StepError> {
    let mut ts = run(p, env, Flavor::EarlySym, Vec::new())?;
    ts.retain(|t| matches!(t.action, Action::Silent(_)));
    Ok(ts)
}

/// Default input pool: every name of the term plus two fresh public
/// names standing in for "any other name".
pub fn default_pool(p: &PiTerm) -> BTreeSet<Name> {
    let mut pool = free_names(p);
    pool.extend(crate::syntax::bound_names(p));
    let z1 = fresh_like(&Name::public("z"), &pool);
    pool.insert(z1);
    let z2 = fresh_like(&Name::public("z"), &pool);
    pool.insert(z2);
    pool
}

/// Rename the bound object of a transition, keeping it fresh for the
/// target; alpha-variant of the same derivation.
pub fn rename_bound_object(t: &PiTransition, w: &Name) -> Option<PiTransition> {
    let z = t.action.bn()?;
    if w == z {
        return Some(t.clone());
    }
    let mut forbidden = free_names(&t.target);
    forbidden.remove(z);
    forbidden.extend(t.action.free_names());
    if forbidden.contains(w) {
        return None;
    }
    Some(PiTransition {
        source: t.source.clone(),
        action: with_object(&t.action, w),
        target: subst1(&t.target, z, w),
    })
}

fn barbs_walk(
    p: &PiTerm,
    env: &DefEnv,
    visited: &mut BTreeSet<(String, Vec<Name>)>,
) -> Result<BTreeSet<Barb>, StepError> {
    let mut out = BTreeSet::new();
    match p {
        PiTerm::Nil | PiTerm::TauPre(..) => {}
        PiTerm::OutPre(m, x, _, _) => {
            if m.is_empty() && x.observable() {
                out.insert(Barb::output(x.clone()));
            }
        }
        PiTerm::InPre(m, x, _, _) => {
            if m.is_empty() && x.observable() {
                out.insert(Barb::input(x.clone()));
            }
        }
        PiTerm::Match(x, y, b) => {
            if x == y {
                out.extend(barbs_walk(b, env, visited)?);
            }
        }
        PiTerm::Sum(l, r) | PiTerm::Par(l, r) => {
            out.extend(barbs_walk(l, env, visited)?);
            out.extend(barbs_walk(r, env, visited)?);
        }
        PiTerm::Nu(n, b) => {
            for barb in barbs_walk(b, env, visited)? {
                if barb.name != *n {
                    out.insert(barb);
                }
            }
        }
        PiTerm::Ide(name, args) => {
            let key = (name.clone(), args.clone());
            if visited.insert(key) {
                let (params, body) =
                    env.lookup_pi(name, args.len()).ok_or_else(|| StepError::UnboundIdent {
                        name: name.clone(),
                        arity: args.len(),
                    })?;
                let sigma: BTreeMap<Name, Name> =
                    params.iter().cloned().zip(args.iter().cloned()).collect();
                out.extend(barbs_walk(&substitute(body, &sigma), env, visited)?);
            }
        }
    }
    Ok(out)
}

/// The observability map: barbs are the public subjects of unguarded,
/// match-free prefixes outside the scope of a matching restriction.
/// Recursive identifiers contribute their least fixpoint.
pub fn barbs_pi(p: &PiTerm, env: &DefEnv) -> Result<BTreeSet<Barb>, StepError> {
    barbs_walk(p, env, &mut BTreeSet::new())
}

fn subterms_into(p: &PiTerm, acc: &mut BTreeSet<PiTerm>) {
    if !acc.insert(p.clone()) {
        return;
    }
    match p {
        PiTerm::Nil | PiTerm::Ide(..) => {}
        PiTerm::TauPre(_, b) | PiTerm::OutPre(_, _, _, b) | PiTerm::InPre(_, _, _, b) => {
            subterms_into(b, acc)
        }
        PiTerm::Match(_, _, b) | PiTerm::Nu(_, b) => subterms_into(b, acc),
        PiTerm::Par(l, r) | PiTerm::Sum(l, r) => {
            subterms_into(l, acc);
            subterms_into(r, acc);
        }
    }
}

/// Hereditary subprocesses: subterms plus the raw bodies of every
/// definition reachable through identifier uses. Unresolvable
/// identifiers contribute nothing.
pub fn h_closure(p: &PiTerm, env: &DefEnv) -> BTreeSet<PiTerm> {
    let mut acc = BTreeSet::new();
    subterms_into(p, &mut acc);
    loop {
        let mut fresh: Vec<PiTerm> = Vec::new();
        for q in &acc {
            if let PiTerm::Ide(name, args) = q {
                if let Some((_, body)) = env.lookup_pi(name, args.len()) {
                    if !acc.contains(body) {
                        fresh.push(body.clone());
                    }
                }
            }
        }
        if fresh.is_empty() {
            return acc;
        }
        for q in fresh {
            subterms_into(&q, &mut acc);
        }
    }
}

/// Restriction-bound names: every y with (nu y)Q among the hereditary
/// subprocesses.
pub fn rn(p: &PiTerm, env: &DefEnv) -> BTreeSet<Name> {
    h_closure(p, env)
        .iter()
        .filter_map(|q| match q {
            PiTerm::Nu(y, _) => Some(y.clone()),
            _ => None,
        })
        .collect()
}

/// Clash-freedom diagnostics. A term is clash-free when no restriction
/// binder is reused inside its own scope, parallel components draw
/// their restriction binders from disjoint stocks, no free name of the
/// root is also restriction-bound, and input binders are public.
pub fn is_clash_free(p: &PiTerm, env: &DefEnv) -> (bool, Vec<String>) {
    let mut violations = Vec::new();
    let closure = h_closure(p, env);
    for q in &closure {
        match q {
            PiTerm::InPre(_, _, z, _) => {
                if !matches!(z, Name::Public(_)) {
                    violations.push(format!("input binder {z} is not a public name in {q}"));
                }
            }
            PiTerm::Nu(y, body) => {
                if rn(body, env).contains(y) {
                    violations.push(format!("restriction binder {y} is reused inside {q}"));
                }
            }
            PiTerm::Par(l, r) => {
                let shared: Vec<Name> = rn(l, env).intersection(&rn(r, env)).cloned().collect();
                if !shared.is_empty() {
                    let names: Vec<String> =
                        shared.iter().map(|n| n.to_string()).collect();
                    violations.push(format!(
                        "parallel components of {q} share restriction binder(s) {}",
                        names.join(", ")
                    ));
                }
            }
            _ => {}
        }
    }
    let bound = rn(p, env);
    for x in free_names(p).intersection(&bound) {
        violations.push(format!("name {x} occurs both free and restriction-bound"));
    }
    (violations.is_empty(), violations)
}
