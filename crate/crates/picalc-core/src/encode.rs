//! The compositional translation from the pi-calculus into the gamma
//! calculus, and the earlier pair-action encoding it improves on. Both
//! are structural: every clause is a fixed context applied to the
//! translations of the immediate subterms.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use core::fmt;

use crate::names::Relabelling;
use crate::syntax::{
    check_mode, Action, CcsTerm, DefEnv, InstDom, InstStyle, MatchSeq, ModeViolation, PiMode,
    PiTerm,
};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TranslateError {
    Mode(ModeViolation),
    UnboundIdent { name: String, arity: usize },
    OutsideFragment { at: String },
}

impl fmt::Display for TranslateError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TranslateError::Mode(v) => v.fmt(f),
            TranslateError::UnboundIdent { name, arity } => {
                write!(f, "identifier {name}/{arity} is not defined")
            }
            TranslateError::OutsideFragment { at } => {
                write!(f, "{at} lies outside the encodable fragment")
            }
        }
    }
}

/// Pick a CCS constant name for every pi definition. Names of single
/// arity keep a plain `T_` prefix; further suffixes keep the result
/// clear of the arity variants and of any constants already present.
fn assign_names(env: &DefEnv) -> BTreeMap<(String, usize), String> {
    let mut taken: BTreeSet<String> = env.ccs_defs.keys().cloned().collect();
    let mut out = BTreeMap::new();
    for (name, arity) in env.pi_defs.keys() {
        let variants = env.pi_defs.keys().filter(|(n, _)| n == name).count();
        let mut cand = if variants == 1 {
            format!("T_{name}")
        } else {
            format!("T_{name}_{arity}")
        };
        while !taken.insert(cand.clone()) {
            cand.push('_');
        }
        out.insert((name.clone(), *arity), cand);
    }
    out
}

struct Tx<'a> {
    env: &'a DefEnv,
    style: InstStyle,
    names: BTreeMap<(String, usize), String>,
}

impl<'a> Tx<'a> {
    fn new(env: &'a DefEnv, style: InstStyle) -> Tx<'a> {
        Tx { env, style, names: assign_names(env) }
    }

    fn term(&self, p: &PiTerm) -> Result<CcsTerm, TranslateError> {
        Ok(match p {
            PiTerm::Nil => CcsTerm::Nil,
            PiTerm::TauPre(m, b) => {
                CcsTerm::prefix(Action::Silent(m.clone()), self.term(b)?)
            }
            PiTerm::OutPre(m, x, y, b) => CcsTerm::prefix(
                Action::FreeOut(m.clone(), x.clone(), y.clone()),
                self.term(b)?,
            ),
            PiTerm::InPre(m, x, y, b) => CcsTerm::InputSum {
                m: m.clone(),
                subj: x.clone(),
                bind: y.clone(),
                body: Box::new(self.term(b)?),
                style: self.style,
                dom: InstDom::AllNames,
            },
            PiTerm::Match(x, y, b) => {
                CcsTerm::Trigger(x.clone(), y.clone(), Box::new(self.term(b)?))
            }
            PiTerm::Nu(y, b) => {
                CcsTerm::relabel(self.term(b)?, Relabelling::PNu(y.clone()))
            }
            PiTerm::Par(l, r) => CcsTerm::par(
                CcsTerm::relabel(self.term(l)?, Relabelling::TagL),
                CcsTerm::relabel(self.term(r)?, Relabelling::TagR),
            ),
            PiTerm::Sum(l, r) => {
                CcsTerm::SumList(alloc::vec![self.term(l)?, self.term(r)?])
            }
            PiTerm::Ide(name, args) => {
                let (params, _) = self
                    .env
                    .lookup_pi(name, args.len())
                    .ok_or_else(|| TranslateError::UnboundIdent {
                        name: name.clone(),
                        arity: args.len(),
                    })?;
                CcsTerm::relabel(
                    CcsTerm::Ide(self.names[&(name.clone(), args.len())].clone()),
                    Relabelling::subs(args.clone(), params.clone()),
                )
            }
        })
    }
}

fn translate_styled(
    p: &PiTerm,
    env: &DefEnv,
    mode: PiMode,
    style: InstStyle,
) -> Result<(CcsTerm, DefEnv), TranslateError> {
    check_mode(p, mode).map_err(TranslateError::Mode)?;
    for (_, body) in env.pi_defs.values() {
        check_mode(body, mode).map_err(TranslateError::Mode)?;
    }
    let tx = Tx::new(env, style);
    let main = tx.term(p)?;
    let mut out = env.clone();
    for (key, (_, body)) in &env.pi_defs {
        let t = tx.term(body)?;
        out.add_ccs(&tx.names[key], t).expect("constant name chosen fresh");
    }
    Ok((main, out))
}

/// The translation proper. Input prefixes become input sums whose
/// instances substitute the received name for the binder through a
/// surjective relabelling that revives the binder from a spare name;
/// restriction becomes the private-name relabelling; the two sides of
/// a parallel composition are tagged apart; matches become triggers.
/// Every pi definition is translated once into a CCS constant, and
/// calls relabel that constant by argument-for-parameter substitution.
#[allow(non_snake_case)]
pub fn translate_T(
    p: &PiTerm,
    env: &DefEnv,
    mode: PiMode,
) -> Result<(CcsTerm, DefEnv), TranslateError> {
    translate_styled(p, env, mode, InstStyle::Spare)
}

/// Deliberately broken variant kept as a regression guard: input-sum
/// instances use a plain finite map instead of the spare-reviving
/// substitution, so a name sent after serving as a binder cannot be
/// received again and chains of communications cut off early.
#[allow(non_snake_case)]
pub fn translate_T_plain(
    p: &PiTerm,
    env: &DefEnv,
    mode: PiMode,
) -> Result<(CcsTerm, DefEnv), TranslateError> {
    translate_styled(p, env, mode, InstStyle::Plain)
}

/// The earlier encoding into classic CCS over pair actions. Only the
/// match-free fragment without restriction or constants is covered.
/// Input sums instantiate plain public names, and parallel components
/// are composed without tags, which is precisely what keeps this
/// encoding from simulating consecutive communications.
#[allow(non_snake_case)]
pub fn translate_E(p: &PiTerm) -> Result<CcsTerm, TranslateError> {
    Ok(match p {
        PiTerm::Nil => CcsTerm::Nil,
        PiTerm::TauPre(m, b) if m.is_empty() => {
            CcsTerm::prefix(Action::tau(), translate_E(b)?)
        }
        PiTerm::OutPre(m, x, y, b) if m.is_empty() => CcsTerm::prefix(
            Action::FreeOut(MatchSeq::empty(), x.clone(), y.clone()),
            translate_E(b)?,
        ),
        PiTerm::InPre(m, x, y, b) if m.is_empty() => CcsTerm::InputSum {
            m: MatchSeq::empty(),
            subj: x.clone(),
            bind: y.clone(),
            body: Box::new(translate_E(b)?),
            style: InstStyle::Plain,
            dom: InstDom::PublicOnly,
        },
        PiTerm::Par(l, r) => CcsTerm::par(translate_E(l)?, translate_E(r)?),
        PiTerm::Sum(l, r) => {
            CcsTerm::SumList(alloc::vec![translate_E(l)?, translate_E(r)?])
        }
        other => {
            return Err(TranslateError::OutsideFragment { at: other.to_string() })
        }
    })
}

/// Reapply every clause's context to separately translated subterms
/// and compare against translating the whole term in one go. True by
/// construction today; trips if a clause ever stops being a context.
pub fn check_compositionality(p: &PiTerm, env: &DefEnv) -> bool {
    let tx = Tx::new(env, InstStyle::Spare);
    walk(&tx, p).is_some()
}

fn walk(tx: &Tx<'_>, p: &PiTerm) -> Option<CcsTerm> {
    let built = match p {
        PiTerm::Nil => CcsTerm::Nil,
        PiTerm::TauPre(m, b) => CcsTerm::prefix(Action::Silent(m.clone()), walk(tx, b)?),
        PiTerm::OutPre(m, x, y, b) => CcsTerm::prefix(
            Action::FreeOut(m.clone(), x.clone(), y.clone()),
            walk(tx, b)?,
        ),
        PiTerm::InPre(m, x, y, b) => CcsTerm::InputSum {
            m: m.clone(),
            subj: x.clone(),
            bind: y.clone(),
            body: Box::new(walk(tx, b)?),
            style: tx.style,
            dom: InstDom::AllNames,
        },
        PiTerm::Match(x, y, b) => {
            CcsTerm::Trigger(x.clone(), y.clone(), Box::new(walk(tx, b)?))
        }
        PiTerm::Nu(y, b) => {
            CcsTerm::relabel(walk(tx, b)?, Relabelling::PNu(y.clone()))
        }
        PiTerm::Par(l, r) => CcsTerm::par(
            CcsTerm::relabel(walk(tx, l)?, Relabelling::TagL),
            CcsTerm::relabel(walk(tx, r)?, Relabelling::TagR),
        ),
        PiTerm::Sum(l, r) => CcsTerm::SumList(alloc::vec![walk(tx, l)?, walk(tx, r)?]),
        PiTerm::Ide(..) => tx.term(p).ok()?,
    };
    if built == tx.term(p).ok()? {
        Some(built)
    } else {
        None
    }
}
