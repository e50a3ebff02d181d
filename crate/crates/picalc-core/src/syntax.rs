//! Term syntax for both calculi: matching sequences, actions, pi terms,
//! CCS terms, definition environments, free names, capture-avoiding
//! substitution, alpha canonicalization and the text printers.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::names::{fresh_like, Name, Relabelling};

/// An ordered sequence of name matches `[x=y]...`. Trivial entries
/// `[x=x]` are dropped on construction, so an empty sequence means the
/// guard holds unconditionally.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MatchSeq(Vec<(Name, Name)>);

impl MatchSeq {
    pub fn empty() -> MatchSeq {
        MatchSeq(Vec::new())
    }

    pub fn from_pairs(pairs: Vec<(Name, Name)>) -> MatchSeq {
        MatchSeq(pairs.into_iter().filter(|(x, y)| x != y).collect())
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> &[(Name, Name)] {
        &self.0
    }

    pub fn concat(&self, other: &MatchSeq) -> MatchSeq {
        let mut v = self.0.clone();
        v.extend(other.0.iter().cloned());
        MatchSeq(v)
    }

    /// Map every entry through `f`, dropping entries that collapse.
    pub fn rename(&self, f: &mut dyn FnMut(&Name) -> Name) -> MatchSeq {
        MatchSeq::from_pairs(self.0.iter().map(|(x, y)| (f(x), f(y))).collect())
    }

    pub fn relabel(&self, rel: &Relabelling) -> MatchSeq {
        self.rename(&mut |n| rel.apply(n))
    }

    pub fn names(&self) -> BTreeSet<Name> {
        let mut s = BTreeSet::new();
        for (x, y) in &self.0 {
            s.insert(x.clone());
            s.insert(y.clone());
        }
        s
    }
}

pub fn prepend_match(m: &MatchSeq, x: &Name, y: &Name) -> MatchSeq {
    if x == y {
        return m.clone();
    }
    let mut v = Vec::with_capacity(m.0.len() + 1);
    v.push((x.clone(), y.clone()));
    v.extend(m.0.iter().cloned());
    MatchSeq(v)
}

impl fmt::Display for MatchSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (x, y) in &self.0 {
            write!(f, "[{x}={y}]")?;
        }
        Ok(())
    }
}

/// An observable commitment: a public name with a polarity.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Barb {
    pub name: Name,
    pub output: bool,
}

impl Barb {
    pub fn input(name: Name) -> Barb {
        Barb { name, output: false }
    }

    pub fn output(name: Name) -> Barb {
        Barb { name, output: true }
    }
}

impl fmt::Display for Barb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.output {
            write!(f, "{}!", self.name)
        } else {
            write!(f, "{}", self.name)
        }
    }
}

/// Transition labels shared by all engines. The matching sequence is
/// empty except under the symbolic semantics and in CCS
/// synchronisations.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Action {
    Silent(MatchSeq),
    FreeOut(MatchSeq, Name, Name),
    BoundOut(MatchSeq, Name, Name),
    FreeIn(MatchSeq, Name, Name),
    BoundIn(MatchSeq, Name, Name),
}

impl Action {
    pub fn tau() -> Action {
        Action::Silent(MatchSeq::empty())
    }

    pub fn m(&self) -> &MatchSeq {
        match self {
            Action::Silent(m)
            | Action::FreeOut(m, _, _)
            | Action::BoundOut(m, _, _)
            | Action::FreeIn(m, _, _)
            | Action::BoundIn(m, _, _) => m,
        }
    }

    pub fn subject(&self) -> Option<&Name> {
        match self {
            Action::Silent(_) => None,
            Action::FreeOut(_, x, _)
            | Action::BoundOut(_, x, _)
            | Action::FreeIn(_, x, _)
            | Action::BoundIn(_, x, _) => Some(x),
        }
    }

    pub fn object(&self) -> Option<&Name> {
        match self {
            Action::Silent(_) => None,
            Action::FreeOut(_, _, y)
            | Action::BoundOut(_, _, y)
            | Action::FreeIn(_, _, y)
            | Action::BoundIn(_, _, y) => Some(y),
        }
    }

    /// The bound name of the action, if any.
    pub fn bn(&self) -> Option<&Name> {
        match self {
            Action::BoundOut(_, _, y) | Action::BoundIn(_, _, y) => Some(y),
            _ => None,
        }
    }

    pub fn free_names(&self) -> BTreeSet<Name> {
        let mut s = self.m().names();
        match self {
            Action::Silent(_) => {}
            Action::FreeOut(_, x, y) | Action::FreeIn(_, x, y) => {
                s.insert(x.clone());
                s.insert(y.clone());
            }
            Action::BoundOut(_, x, _) | Action::BoundIn(_, x, _) => {
                s.insert(x.clone());
            }
        }
        s
    }

    pub fn names(&self) -> BTreeSet<Name> {
        let mut s = self.free_names();
        if let Some(y) = self.bn() {
            s.insert(y.clone());
        }
        s
    }

    /// A proper silent step with no residual matches.
    pub fn is_tau(&self) -> bool {
        matches!(self, Action::Silent(m) if m.is_empty())
    }

    /// A synchronisation that still carries matches; visible, not a
    /// reduction.
    pub fn is_synchronisation(&self) -> bool {
        matches!(self, Action::Silent(m) if !m.is_empty())
    }

    /// The observability map O: defined only for match-free actions
    /// with a public subject.
    pub fn barb(&self) -> Option<Barb> {
        if !self.m().is_empty() {
            return None;
        }
        let subject = self.subject()?;
        if !subject.observable() {
            return None;
        }
        let output = matches!(self, Action::FreeOut(..) | Action::BoundOut(..));
        Some(Barb { name: subject.clone(), output })
    }

    /// Homomorphic extension of a relabelling to actions; collapsing
    /// matches are dropped by the MatchSeq constructor.
    pub fn relabel(&self, rel: &Relabelling) -> Action {
        self.rename(&mut |n| rel.apply(n))
    }

    pub fn rename(&self, f: &mut dyn FnMut(&Name) -> Name) -> Action {
        match self {
            Action::Silent(m) => Action::Silent(m.rename(f)),
            Action::FreeOut(m, x, y) => Action::FreeOut(m.rename(f), f(x), f(y)),
            Action::BoundOut(m, x, y) => Action::BoundOut(m.rename(f), f(x), f(y)),
            Action::FreeIn(m, x, y) => Action::FreeIn(m.rename(f), f(x), f(y)),
            Action::BoundIn(m, x, y) => Action::BoundIn(m.rename(f), f(x), f(y)),
        }
    }

    /// Prepend a guard `[x=y]` to the action's matching sequence.
    pub fn guarded(&self, x: &Name, y: &Name) -> Action {
        if x == y {
            return self.clone();
        }
        let with = |m: &MatchSeq| prepend_match(m, x, y);
        match self {
            Action::Silent(m) => Action::Silent(with(m)),
            Action::FreeOut(m, a, b) => Action::FreeOut(with(m), a.clone(), b.clone()),
            Action::BoundOut(m, a, b) => Action::BoundOut(with(m), a.clone(), b.clone()),
            Action::FreeIn(m, a, b) => Action::FreeIn(with(m), a.clone(), b.clone()),
            Action::BoundIn(m, a, b) => Action::BoundIn(with(m), a.clone(), b.clone()),
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Silent(m) => write!(f, "{m}tau"),
            Action::FreeOut(m, x, y) => write!(f, "{m}{x}!{y}"),
            Action::BoundOut(m, x, y) => write!(f, "{m}{x}!({y})"),
            Action::FreeIn(m, x, y) => write!(f, "{m}{x}?{y}"),
            Action::BoundIn(m, x, y) => write!(f, "{m}{x}?({y})"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PiMode {
    /// Matching is an operator; prefixes carry no matching sequence.
    Strict,
    /// Implicit matching: prefixes carry matching sequences, the
    /// matching operator is absent.
    Im,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PiTerm {
    Nil,
    TauPre(MatchSeq, Box<PiTerm>),
    OutPre(MatchSeq, Name, Name, Box<PiTerm>),
    /// Input prefix; the object is the binder and must be public.
    InPre(MatchSeq, Name, Name, Box<PiTerm>),
    Nu(Name, Box<PiTerm>),
    Match(Name, Name, Box<PiTerm>),
    Par(Box<PiTerm>, Box<PiTerm>),
    Sum(Box<PiTerm>, Box<PiTerm>),
    Ide(String, Vec<Name>),
}

impl PiTerm {
    pub fn tau(p: PiTerm) -> PiTerm {
        PiTerm::TauPre(MatchSeq::empty(), Box::new(p))
    }

    pub fn out(x: Name, y: Name, p: PiTerm) -> PiTerm {
        PiTerm::OutPre(MatchSeq::empty(), x, y, Box::new(p))
    }

    pub fn inp(x: Name, y: Name, p: PiTerm) -> PiTerm {
        PiTerm::InPre(MatchSeq::empty(), x, y, Box::new(p))
    }

    pub fn nu(y: Name, p: PiTerm) -> PiTerm {
        PiTerm::Nu(y, Box::new(p))
    }

    pub fn par(p: PiTerm, q: PiTerm) -> PiTerm {
        PiTerm::Par(Box::new(p), Box::new(q))
    }

    pub fn sum(p: PiTerm, q: PiTerm) -> PiTerm {
        PiTerm::Sum(Box::new(p), Box::new(q))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ModeViolation {
    MatchInIm,
    MatchedPrefixInStrict,
}

impl fmt::Display for ModeViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModeViolation::MatchInIm => {
                f.write_str("matching operator is not available with implicit matching")
            }
            ModeViolation::MatchedPrefixInStrict => {
                f.write_str("prefixes cannot carry matches outside implicit-matching mode")
            }
        }
    }
}

/// Check the mode invariants: strict terms use Match nodes and bare
/// prefixes, implicit-matching terms carry matches on prefixes only.
pub fn check_mode(p: &PiTerm, mode: PiMode) -> Result<(), ModeViolation> {
    match p {
        PiTerm::Nil | PiTerm::Ide(_, _) => Ok(()),
        PiTerm::TauPre(m, q) | PiTerm::OutPre(m, _, _, q) | PiTerm::InPre(m, _, _, q) => {
            if mode == PiMode::Strict && !m.is_empty() {
                return Err(ModeViolation::MatchedPrefixInStrict);
            }
            check_mode(q, mode)
        }
        PiTerm::Match(_, _, q) => {
            if mode == PiMode::Im {
                return Err(ModeViolation::MatchInIm);
            }
            check_mode(q, mode)
        }
        PiTerm::Nu(_, q) => check_mode(q, mode),
        PiTerm::Par(q, r) | PiTerm::Sum(q, r) => {
            check_mode(q, mode)?;
            check_mode(r, mode)
        }
    }
}

pub fn free_names(p: &PiTerm) -> BTreeSet<Name> {
    let mut s = BTreeSet::new();
    collect_free(p, &mut s);
    s
}

fn collect_free(p: &PiTerm, out: &mut BTreeSet<Name>) {
    match p {
        PiTerm::Nil => {}
        PiTerm::TauPre(m, q) => {
            out.extend(m.names());
            collect_free(q, out);
        }
        PiTerm::OutPre(m, x, y, q) => {
            out.extend(m.names());
            out.insert(x.clone());
            out.insert(y.clone());
            collect_free(q, out);
        }
        PiTerm::InPre(m, x, y, q) => {
            out.extend(m.names());
            out.insert(x.clone());
            let mut inner = BTreeSet::new();
            collect_free(q, &mut inner);
            inner.remove(y);
            out.extend(inner);
        }
        PiTerm::Nu(y, q) => {
            let mut inner = BTreeSet::new();
            collect_free(q, &mut inner);
            inner.remove(y);
            out.extend(inner);
        }
        PiTerm::Match(x, y, q) => {
            out.insert(x.clone());
            out.insert(y.clone());
            collect_free(q, out);
        }
        PiTerm::Par(q, r) | PiTerm::Sum(q, r) => {
            collect_free(q, out);
            collect_free(r, out);
        }
        PiTerm::Ide(_, args) => out.extend(args.iter().cloned()),
    }
}

pub fn bound_names(p: &PiTerm) -> BTreeSet<Name> {
    let mut s = BTreeSet::new();
    collect_bound(p, &mut s);
    s
}

fn collect_bound(p: &PiTerm, out: &mut BTreeSet<Name>) {
    match p {
        PiTerm::Nil | PiTerm::Ide(_, _) => {}
        PiTerm::TauPre(_, q) | PiTerm::Match(_, _, q) => collect_bound(q, out),
        PiTerm::OutPre(_, _, _, q) => collect_bound(q, out),
        PiTerm::InPre(_, _, y, q) | PiTerm::Nu(y, q) => {
            out.insert(y.clone());
            collect_bound(q, out);
        }
        PiTerm::Par(q, r) | PiTerm::Sum(q, r) => {
            collect_bound(q, out);
            collect_bound(r, out);
        }
    }
}

/// Simultaneous capture-avoiding substitution. A bound name is kept
/// whenever it is untouched by sigma; otherwise it is renamed to the
/// least fresh name of the same sort outside the free names, the
/// domain and the range.
pub fn substitute(p: &PiTerm, sigma: &BTreeMap<Name, Name>) -> PiTerm {
    let lookup = |x: &Name| sigma.get(x).cloned().unwrap_or_else(|| x.clone());
    let subst_m = |m: &MatchSeq| m.rename(&mut |n| lookup(n));
    match p {
        PiTerm::Nil => PiTerm::Nil,
        PiTerm::TauPre(m, q) => PiTerm::TauPre(subst_m(m), Box::new(substitute(q, sigma))),
        PiTerm::OutPre(m, x, y, q) => PiTerm::OutPre(
            subst_m(m),
            lookup(x),
            lookup(y),
            Box::new(substitute(q, sigma)),
        ),
        PiTerm::InPre(m, x, y, q) => {
            let (z, body) = subst_binder(y, q, sigma);
            PiTerm::InPre(subst_m(m), lookup(x), z, Box::new(body))
        }
        PiTerm::Nu(y, q) => {
            let (z, body) = subst_binder(y, q, sigma);
            PiTerm::Nu(z, Box::new(body))
        }
        PiTerm::Match(x, y, q) => {
            PiTerm::Match(lookup(x), lookup(y), Box::new(substitute(q, sigma)))
        }
        PiTerm::Par(q, r) => PiTerm::par(substitute(q, sigma), substitute(r, sigma)),
        PiTerm::Sum(q, r) => PiTerm::sum(substitute(q, sigma), substitute(r, sigma)),
        PiTerm::Ide(a, args) => PiTerm::Ide(a.clone(), args.iter().map(lookup).collect()),
    }
}

fn subst_binder(y: &Name, body: &PiTerm, sigma: &BTreeMap<Name, Name>) -> (Name, PiTerm) {
    let mut touched = BTreeSet::new();
    for (k, v) in sigma {
        if k != v {
            touched.insert(k.clone());
            touched.insert(v.clone());
        }
    }
    if !touched.contains(y) {
        return (y.clone(), substitute(body, sigma));
    }
    let mut avoid = free_names(body);
    avoid.remove(y);
    avoid.extend(touched);
    avoid.insert(y.clone());
    let z = fresh_like(y, &avoid);
    let mut ren = BTreeMap::new();
    ren.insert(y.clone(), z.clone());
    let renamed = substitute(body, &ren);
    (z, substitute(&renamed, sigma))
}

pub fn subst1(p: &PiTerm, from: &Name, to: &Name) -> PiTerm {
    let mut sigma = BTreeMap::new();
    sigma.insert(from.clone(), to.clone());
    substitute(p, &sigma)
}

/// Canonical binder scheme `_0, _1, ...` in traversal order, skipping
/// indices that collide with free names of the whole term.
struct BinderSupply {
    next: u32,
    avoid: BTreeSet<Name>,
}

impl BinderSupply {
    fn new(avoid: BTreeSet<Name>) -> BinderSupply {
        BinderSupply { next: 0, avoid }
    }

    fn fresh(&mut self) -> Name {
        loop {
            let cand = Name::Public(format!("_{}", self.next));
            self.next += 1;
            if !self.avoid.contains(&cand) {
                return cand;
            }
        }
    }
}

pub fn alpha_canonical(p: &PiTerm) -> PiTerm {
    let mut supply = BinderSupply::new(free_names(p));
    canon_pi(p, &BTreeMap::new(), &mut supply)
}

fn canon_pi(p: &PiTerm, env: &BTreeMap<Name, Name>, supply: &mut BinderSupply) -> PiTerm {
    let lk = |x: &Name| env.get(x).cloned().unwrap_or_else(|| x.clone());
    let cm = |m: &MatchSeq| m.rename(&mut |n| lk(n));
    match p {
        PiTerm::Nil => PiTerm::Nil,
        PiTerm::TauPre(m, q) => PiTerm::TauPre(cm(m), Box::new(canon_pi(q, env, supply))),
        PiTerm::OutPre(m, x, y, q) => {
            PiTerm::OutPre(cm(m), lk(x), lk(y), Box::new(canon_pi(q, env, supply)))
        }
        PiTerm::InPre(m, x, y, q) => {
            let m = cm(m);
            let x = lk(x);
            let z = supply.fresh();
            let mut env2 = env.clone();
            env2.insert(y.clone(), z.clone());
            PiTerm::InPre(m, x, z, Box::new(canon_pi(q, &env2, supply)))
        }
        PiTerm::Nu(y, q) => {
            let z = supply.fresh();
            let mut env2 = env.clone();
            env2.insert(y.clone(), z.clone());
            PiTerm::Nu(z, Box::new(canon_pi(q, &env2, supply)))
        }
        PiTerm::Match(x, y, q) => {
            PiTerm::Match(lk(x), lk(y), Box::new(canon_pi(q, env, supply)))
        }
        PiTerm::Par(q, r) => {
            let a = canon_pi(q, env, supply);
            let b = canon_pi(r, env, supply);
            PiTerm::par(a, b)
        }
        PiTerm::Sum(q, r) => {
            let a = canon_pi(q, env, supply);
            let b = canon_pi(r, env, supply);
            PiTerm::sum(a, b)
        }
        PiTerm::Ide(a, args) => PiTerm::Ide(a.clone(), args.iter().map(lk).collect()),
    }
}

pub fn alpha_eq(p: &PiTerm, q: &PiTerm) -> bool {
    alpha_canonical(p) == alpha_canonical(q)
}

const LVL_SUM: u8 = 0;
const LVL_PAR: u8 = 1;
const LVL_PRE: u8 = 2;
const LVL_POST: u8 = 3;

struct PiFmt<'a>(&'a PiTerm, u8);

impl fmt::Display for PiFmt<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let PiFmt(p, ambient) = *self;
        let level = match p {
            PiTerm::Sum(_, _) => LVL_SUM,
            PiTerm::Par(_, _) => LVL_PAR,
            PiTerm::Nil | PiTerm::Ide(_, _) => LVL_POST,
            _ => LVL_PRE,
        };
        let parens = ambient > level;
        if parens {
            f.write_str("(")?;
        }
        match p {
            PiTerm::Nil => f.write_str("0")?,
            PiTerm::TauPre(m, q) => write!(f, "{m}tau.{}", PiFmt(q, LVL_PRE))?,
            PiTerm::OutPre(m, x, y, q) => write!(f, "{m}{x}!{y}.{}", PiFmt(q, LVL_PRE))?,
            PiTerm::InPre(m, x, y, q) => write!(f, "{m}{x}({y}).{}", PiFmt(q, LVL_PRE))?,
            PiTerm::Nu(y, q) => write!(f, "nu {y}. {}", PiFmt(q, LVL_PRE))?,
            PiTerm::Match(x, y, q) => write!(f, "[{x}={y}]{}", PiFmt(q, LVL_PRE))?,
            PiTerm::Par(q, r) => {
                write!(f, "{} | {}", PiFmt(q, LVL_PAR), PiFmt(r, LVL_PRE))?
            }
            PiTerm::Sum(q, r) => {
                write!(f, "{} + {}", PiFmt(q, LVL_SUM), PiFmt(r, LVL_PAR))?
            }
            PiTerm::Ide(a, args) => {
                write!(f, "{a}(")?;
                for (i, n) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{n}")?;
                }
                f.write_str(")")?
            }
        }
        if parens {
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Display for PiTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", PiFmt(self, LVL_SUM))
    }
}

/// How an input sum instantiates its binder when a branch fires.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum InstStyle {
    /// Spare-shifting substitution `[z/y]` extended over the spare
    /// names; the binder name stays semantically significant.
    Spare,
    /// Plain finite map `{y -> z}`.
    Plain,
}

/// Which names an input sum's choice ranges over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum InstDom {
    AllNames,
    PublicOnly,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CcsTerm {
    Nil,
    Prefix(Action, Box<CcsTerm>),
    SumList(Vec<CcsTerm>),
    /// The input-choice binder: one branch `M subj z . body[z/bind]`
    /// per name z in the domain, never materialized eagerly.
    InputSum {
        m: MatchSeq,
        subj: Name,
        bind: Name,
        body: Box<CcsTerm>,
        style: InstStyle,
        dom: InstDom,
    },
    Par(Box<CcsTerm>, Box<CcsTerm>),
    Restrict(Box<CcsTerm>, BTreeSet<Name>),
    Relabel(Box<CcsTerm>, Relabelling),
    Trigger(Name, Name, Box<CcsTerm>),
    Ide(String),
}

impl CcsTerm {
    pub fn prefix(a: Action, e: CcsTerm) -> CcsTerm {
        CcsTerm::Prefix(a, Box::new(e))
    }

    pub fn par(e: CcsTerm, f: CcsTerm) -> CcsTerm {
        CcsTerm::Par(Box::new(e), Box::new(f))
    }

    pub fn relabel(e: CcsTerm, rel: Relabelling) -> CcsTerm {
        CcsTerm::Relabel(Box::new(e), rel)
    }

    pub fn input_sum(m: MatchSeq, subj: Name, bind: Name, body: CcsTerm) -> CcsTerm {
        CcsTerm::InputSum {
            m,
            subj,
            bind,
            body: Box::new(body),
            style: InstStyle::Spare,
            dom: InstDom::AllNames,
        }
    }
}

/// The relabelling an input sum wraps around its body when the branch
/// for object `z` fires.
pub fn instance_relabelling(style: InstStyle, bind: &Name, z: &Name) -> Relabelling {
    match style {
        InstStyle::Spare => {
            Relabelling::subs(alloc::vec![z.clone()], alloc::vec![bind.clone()])
        }
        InstStyle::Plain => Relabelling::map(alloc::vec![(bind.clone(), z.clone())]),
    }
}

/// Whether `z` lies in the input sum's choice domain.
pub fn dom_admits(dom: InstDom, z: &Name) -> bool {
    match dom {
        InstDom::AllNames => true,
        InstDom::PublicOnly => matches!(z, Name::Public(_)),
    }
}

/// Free names without definition unfolding (identifiers contribute
/// nothing). For a spare-style input sum the binder participates in
/// the instantiating substitution, so free spares of the body shift
/// and s1 exposes the binder itself.
pub fn free_names_ccs_syn(e: &CcsTerm) -> BTreeSet<Name> {
    match e {
        CcsTerm::Nil | CcsTerm::Ide(_) => BTreeSet::new(),
        CcsTerm::Prefix(a, f) => {
            let mut s = a.free_names();
            s.extend(free_names_ccs_syn(f));
            s
        }
        CcsTerm::SumList(es) => {
            let mut s = BTreeSet::new();
            for f in es {
                s.extend(free_names_ccs_syn(f));
            }
            s
        }
        CcsTerm::InputSum { m, subj, bind, body, style, .. } => {
            input_sum_free(m, subj, bind, *style, free_names_ccs_syn(body))
        }
        CcsTerm::Par(f, g) => {
            let mut s = free_names_ccs_syn(f);
            s.extend(free_names_ccs_syn(g));
            s
        }
        CcsTerm::Restrict(f, l) => {
            free_names_ccs_syn(f).into_iter().filter(|n| !l.contains(n)).collect()
        }
        CcsTerm::Relabel(f, rel) => {
            free_names_ccs_syn(f).iter().map(|n| rel.apply(n)).collect()
        }
        CcsTerm::Trigger(x, y, f) => {
            let mut s = free_names_ccs_syn(f);
            s.insert(x.clone());
            s.insert(y.clone());
            s
        }
    }
}

fn input_sum_free(
    m: &MatchSeq,
    subj: &Name,
    bind: &Name,
    style: InstStyle,
    inner: BTreeSet<Name>,
) -> BTreeSet<Name> {
    let mut s = m.names();
    s.insert(subj.clone());
    match style {
        InstStyle::Plain => {
            s.extend(inner.into_iter().filter(|n| n != bind));
        }
        InstStyle::Spare => {
            for n in inner {
                if n == *bind {
                    continue;
                }
                match n {
                    Name::Spare(1) => {
                        s.insert(bind.clone());
                    }
                    Name::Spare(k) => {
                        s.insert(Name::Spare(k - 1));
                    }
                    other => {
                        s.insert(other);
                    }
                }
            }
        }
    }
    s
}

/// Canonical form for state identity: plain input-sum binders renamed
/// to the reserved scheme, identity relabellings collapsed, sums
/// flattened and sorted. Spare-style binders are kept verbatim since
/// the instantiating substitution gives the binder name meaning beyond
/// its bound occurrences. Relabelling stacks are preserved.
pub fn alpha_canonical_ccs(e: &CcsTerm) -> CcsTerm {
    let mut supply = BinderSupply::new(free_names_ccs_syn(e));
    canon_ccs(e, &BTreeMap::new(), &mut supply)
}

fn canon_ccs(e: &CcsTerm, env: &BTreeMap<Name, Name>, supply: &mut BinderSupply) -> CcsTerm {
    let lk = |x: &Name| env.get(x).cloned().unwrap_or_else(|| x.clone());
    match e {
        CcsTerm::Nil => CcsTerm::Nil,
        CcsTerm::Prefix(a, f) => {
            CcsTerm::Prefix(a.rename(&mut |n| lk(n)), Box::new(canon_ccs(f, env, supply)))
        }
        CcsTerm::SumList(es) => {
            let mut flat = Vec::new();
            for f in es {
                match canon_ccs(f, env, supply) {
                    CcsTerm::SumList(inner) => flat.extend(inner),
                    other => flat.push(other),
                }
            }
            match flat.len() {
                0 => CcsTerm::Nil,
                1 => flat.pop().unwrap(),
                _ => {
                    flat.sort();
                    CcsTerm::SumList(flat)
                }
            }
        }
        CcsTerm::InputSum { m, subj, bind, body, style, dom } => {
            let m = m.rename(&mut |n| lk(n));
            let subj = lk(subj);
            match style {
                InstStyle::Plain => {
                    let z = supply.fresh();
                    let mut env2 = env.clone();
                    env2.insert(bind.clone(), z.clone());
                    CcsTerm::InputSum {
                        m,
                        subj,
                        bind: z,
                        body: Box::new(canon_ccs(body, &env2, supply)),
                        style: *style,
                        dom: *dom,
                    }
                }
                InstStyle::Spare => {
                    let mut env2 = env.clone();
                    env2.remove(bind);
                    CcsTerm::InputSum {
                        m,
                        subj,
                        bind: bind.clone(),
                        body: Box::new(canon_ccs(body, &env2, supply)),
                        style: *style,
                        dom: *dom,
                    }
                }
            }
        }
        CcsTerm::Par(f, g) => {
            let a = canon_ccs(f, env, supply);
            let b = canon_ccs(g, env, supply);
            CcsTerm::par(a, b)
        }
        CcsTerm::Restrict(f, l) => {
            let set = l.iter().map(lk).collect();
            CcsTerm::Restrict(Box::new(canon_ccs(f, env, supply)), set)
        }
        CcsTerm::Relabel(f, rel) => {
            // env renamings commute with the stack only if applied
            // inside; the stack itself is opaque, so renamed binders
            // must not leak through it. Plain binders are chosen fresh
            // for the whole term, so simple application is safe here.
            let inner = canon_ccs(f, env, supply);
            if rel.is_identity() {
                inner
            } else {
                CcsTerm::Relabel(Box::new(inner), rel.clone())
            }
        }
        CcsTerm::Trigger(x, y, f) => {
            CcsTerm::Trigger(lk(x), lk(y), Box::new(canon_ccs(f, env, supply)))
        }
        CcsTerm::Ide(a) => CcsTerm::Ide(a.clone()),
    }
}

pub fn alpha_eq_ccs(e: &CcsTerm, f: &CcsTerm) -> bool {
    alpha_canonical_ccs(e) == alpha_canonical_ccs(f)
}

struct CcsFmt<'a>(&'a CcsTerm, u8);

impl fmt::Display for CcsFmt<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let CcsFmt(e, ambient) = *self;
        let level = match e {
            CcsTerm::SumList(es) if es.len() >= 2 => LVL_SUM,
            CcsTerm::Par(_, _) => LVL_PAR,
            CcsTerm::Prefix(..) | CcsTerm::InputSum { .. } | CcsTerm::Trigger(..) => LVL_PRE,
            CcsTerm::Restrict(..) | CcsTerm::Relabel(..) => LVL_POST,
            _ => LVL_POST + 1,
        };
        let parens = ambient > level;
        if parens {
            f.write_str("(")?;
        }
        match e {
            CcsTerm::Nil => f.write_str("0")?,
            CcsTerm::Prefix(a, g) => write!(f, "{a}.{}", CcsFmt(g, LVL_PRE))?,
            CcsTerm::SumList(es) => {
                if es.len() >= 2 {
                    for (i, g) in es.iter().enumerate() {
                        if i > 0 {
                            f.write_str(" + ")?;
                        }
                        write!(f, "{}", CcsFmt(g, LVL_PAR))?;
                    }
                } else {
                    f.write_str("sum {")?;
                    for (i, g) in es.iter().enumerate() {
                        if i > 0 {
                            f.write_str(", ")?;
                        }
                        write!(f, " {}", CcsFmt(g, LVL_SUM))?;
                    }
                    f.write_str(" }")?;
                }
            }
            CcsTerm::InputSum { m, subj, bind, body, style, dom } => {
                let tag = match (style, dom) {
                    (InstStyle::Spare, InstDom::AllNames) => "",
                    (InstStyle::Plain, InstDom::PublicOnly) => " in pub",
                    (InstStyle::Plain, InstDom::AllNames) => " in all",
                    (InstStyle::Spare, InstDom::PublicOnly) => " in spub",
                };
                write!(f, "sum {bind}{tag}. {m}{subj}?{bind}.{}", CcsFmt(body, LVL_PRE))?;
            }
            CcsTerm::Par(g, h) => {
                write!(f, "{} || {}", CcsFmt(g, LVL_PAR), CcsFmt(h, LVL_PRE))?
            }
            CcsTerm::Restrict(g, l) => {
                write!(f, "{} \\ {{", CcsFmt(g, LVL_POST))?;
                for (i, n) in l.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{n}")?;
                }
                f.write_str("}")?;
            }
            CcsTerm::Relabel(g, rel) => write!(f, "{}[{rel}]", CcsFmt(g, LVL_POST))?,
            CcsTerm::Trigger(x, y, g) => {
                write!(f, "[{x}={y}] => {}", CcsFmt(g, LVL_PRE))?
            }
            CcsTerm::Ide(a) => f.write_str(a)?,
        }
        if parens {
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Display for CcsTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", CcsFmt(self, LVL_SUM))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DefError {
    Redefined(String),
    DuplicateParam(String, Name),
    NonPublicParam(String, Name),
    FreeNameEscape(String, Name),
}

impl fmt::Display for DefError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DefError::Redefined(a) => write!(f, "identifier {a} defined twice"),
            DefError::DuplicateParam(a, n) => {
                write!(f, "definition {a}: parameter {n} repeated")
            }
            DefError::NonPublicParam(a, n) => {
                write!(f, "definition {a}: parameter {n} is not a public name")
            }
            DefError::FreeNameEscape(a, n) => {
                write!(f, "definition {a}: body uses {n} outside the parameters")
            }
        }
    }
}

/// Definition environment for both calculi. Pi definitions are keyed
/// by name and arity; CCS definitions are plain constants.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DefEnv {
    pub pi_defs: BTreeMap<(String, usize), (Vec<Name>, PiTerm)>,
    pub ccs_defs: BTreeMap<String, CcsTerm>,
}

impl DefEnv {
    pub fn new() -> DefEnv {
        DefEnv::default()
    }

    pub fn add_pi(&mut self, name: &str, params: Vec<Name>, body: PiTerm) -> Result<(), DefError> {
        let key = (String::from(name), params.len());
        if self.pi_defs.contains_key(&key) {
            return Err(DefError::Redefined(String::from(name)));
        }
        let mut seen = BTreeSet::new();
        for p in &params {
            if !matches!(p, Name::Public(_)) {
                return Err(DefError::NonPublicParam(String::from(name), p.clone()));
            }
            if !seen.insert(p.clone()) {
                return Err(DefError::DuplicateParam(String::from(name), p.clone()));
            }
        }
        if let Some(loose) = free_names(&body).into_iter().find(|n| !params.contains(n)) {
            return Err(DefError::FreeNameEscape(String::from(name), loose));
        }
        self.pi_defs.insert(key, (params, body));
        Ok(())
    }

    pub fn add_ccs(&mut self, name: &str, body: CcsTerm) -> Result<(), DefError> {
        if self.ccs_defs.contains_key(name) {
            return Err(DefError::Redefined(String::from(name)));
        }
        self.ccs_defs.insert(String::from(name), body);
        Ok(())
    }

    pub fn lookup_pi(&self, name: &str, arity: usize) -> Option<&(Vec<Name>, PiTerm)> {
        self.pi_defs.get(&(String::from(name), arity))
    }

    pub fn lookup_ccs(&self, name: &str) -> Option<&CcsTerm> {
        self.ccs_defs.get(name)
    }
}

/// Free names of a CCS term with definition unfolding; each constant
/// is expanded once, which reaches the fixpoint for free names.
pub fn free_names_ccs(e: &CcsTerm, env: &DefEnv) -> BTreeSet<Name> {
    let mut visited = BTreeSet::new();
    free_ccs_env(e, env, &mut visited)
}

fn free_ccs_env(e: &CcsTerm, env: &DefEnv, visited: &mut BTreeSet<String>) -> BTreeSet<Name> {
    match e {
        CcsTerm::Ide(a) => {
            if visited.insert(a.clone()) {
                match env.lookup_ccs(a) {
                    Some(body) => free_ccs_env(&body.clone(), env, visited),
                    None => BTreeSet::new(),
                }
            } else {
                BTreeSet::new()
            }
        }
        CcsTerm::Prefix(a, f) => {
            let mut s = a.free_names();
            s.extend(free_ccs_env(f, env, visited));
            s
        }
        CcsTerm::SumList(es) => {
            let mut s = BTreeSet::new();
            for f in es {
                s.extend(free_ccs_env(f, env, visited));
            }
            s
        }
        CcsTerm::InputSum { m, subj, bind, body, style, .. } => {
            input_sum_free(m, subj, bind, *style, free_ccs_env(body, env, visited))
        }
        CcsTerm::Par(f, g) => {
            let mut s = free_ccs_env(f, env, visited);
            s.extend(free_ccs_env(g, env, visited));
            s
        }
        CcsTerm::Restrict(f, l) => free_ccs_env(f, env, visited)
            .into_iter()
            .filter(|n| !l.contains(n))
            .collect(),
        CcsTerm::Relabel(f, rel) => free_ccs_env(f, env, visited)
            .iter()
            .map(|n| rel.apply(n))
            .collect(),
        CcsTerm::Trigger(x, y, f) => {
            let mut s = free_ccs_env(f, env, visited);
            s.insert(x.clone());
            s.insert(y.clone());
            s
        }
        CcsTerm::Nil => BTreeSet::new(),
    }
}
