//! The three-sorted name universe and the relabelling algebra shared by
//! both calculi.
//!
//! Names come in three sorts: public identifiers, spare names `s1,s2,...`
//! and private names `{tags}p` carrying a tag string over `e`/`l`/`r`
//! plus a number of primes. Public and spare names generate barbs;
//! private names never do. Relabellings form a small closed algebra
//! (tag prepending, the restriction relabelling, spare-shifting
//! substitutions, an index shift and finite maps) that supports both
//! forward application and finite preimage queries; the latter is what
//! lets synchronisation run demand-driven through relabelling stacks.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Name {
    Public(String),
    Spare(u32),
    Private { tags: String, primes: u32 },
}

impl Name {
    pub fn public(id: &str) -> Name {
        debug_assert!(!is_reserved_ident(id), "ident {id:?} lexes as a spare name");
        Name::Public(String::from(id))
    }

    pub fn spare(index: u32) -> Name {
        debug_assert!(index >= 1);
        Name::Spare(index)
    }

    pub fn private(tags: &str, primes: u32) -> Name {
        debug_assert!(tags.chars().all(|c| matches!(c, 'e' | 'l' | 'r')));
        Name::Private { tags: String::from(tags), primes }
    }

    /// The distinguished private name `p` (no tags, no primes).
    pub fn p0() -> Name {
        Name::Private { tags: String::new(), primes: 0 }
    }

    /// `p'`, the other name given special treatment by the restriction
    /// relabelling.
    pub fn p1() -> Name {
        Name::Private { tags: String::new(), primes: 1 }
    }

    /// Public and spare names can be observed as barbs; private names
    /// cannot.
    pub fn observable(&self) -> bool {
        !matches!(self, Name::Private { .. })
    }
}

/// True when `id` would lex as a spare name (`s` followed by digits), so
/// it must not be used as a public identifier.
pub fn is_reserved_ident(id: &str) -> bool {
    let mut chars = id.chars();
    chars.next() == Some('s') && {
        let rest = chars.as_str();
        !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit())
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Name::Public(id) => f.write_str(id),
            Name::Spare(i) => write!(f, "s{i}"),
            Name::Private { tags, primes } => {
                write!(f, "{{{tags}}}p")?;
                for _ in 0..*primes {
                    f.write_str("'")?;
                }
                Ok(())
            }
        }
    }
}

/// A name substitution / relabelling from the closed algebra. All kinds
/// act as the identity outside their domain.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Relabelling {
    /// Prepend `l` to untagged... to prime-free private names; drop one
    /// prime from primed private names whose tags do not start with `l`.
    TagL,
    TagR,
    TagE,
    /// The restriction relabelling for a bound name `y`: sends `y` to
    /// `{}p`, `{}p'` back to `y`, and every other private name through
    /// `TagE`.
    PNu(Name),
    /// The spare-shifting substitution `<targets/sources>`: `sources[i]`
    /// goes to `targets[i]`, `s_i` to `sources[i]` for `i <= n`, and
    /// `s_i` to `s_(i-n)` beyond that. Surjective by construction.
    SubS { targets: Vec<Name>, sources: Vec<Name> },
    /// Send `base<k>` to `base<k+step>`; injective but not surjective
    /// (nothing maps to `base0`).
    Shift { base: String, step: u32 },
    /// Finite lookup table, identity elsewhere. Normalized: no `x -> x`
    /// entries, pairwise-distinct domain.
    Map(Vec<(Name, Name)>),
}

impl Relabelling {
    pub fn subs(targets: Vec<Name>, sources: Vec<Name>) -> Relabelling {
        assert_eq!(targets.len(), sources.len(), "substitution arity mismatch");
        debug_assert!(
            sources.iter().collect::<BTreeSet<_>>().len() == sources.len(),
            "substitution sources must be distinct"
        );
        Relabelling::SubS { targets, sources }
    }

    pub fn map(pairs: Vec<(Name, Name)>) -> Relabelling {
        let mut seen = BTreeSet::new();
        let mut kept = Vec::new();
        for (x, y) in pairs {
            assert!(seen.insert(x.clone()), "duplicate map entry for {x}");
            if x != y {
                kept.push((x, y));
            }
        }
        Relabelling::Map(kept)
    }

    pub fn is_identity(&self) -> bool {
        match self {
            Relabelling::SubS { sources, .. } => sources.is_empty(),
            Relabelling::Map(pairs) => pairs.is_empty(),
            _ => false,
        }
    }

    pub fn apply(&self, x: &Name) -> Name {
        match self {
            Relabelling::TagL => tag_apply('l', x),
            Relabelling::TagR => tag_apply('r', x),
            Relabelling::TagE => tag_apply('e', x),
            Relabelling::PNu(y) => {
                if x == y {
                    Name::p0()
                } else if *x == Name::p1() {
                    y.clone()
                } else if let Name::Private { .. } = x {
                    tag_apply('e', x)
                } else {
                    x.clone()
                }
            }
            Relabelling::SubS { targets, sources } => {
                if let Some(i) = sources.iter().position(|s| s == x) {
                    return targets[i].clone();
                }
                if let Name::Spare(k) = x {
                    let n = sources.len() as u32;
                    if *k <= n {
                        return sources[(*k - 1) as usize].clone();
                    }
                    return Name::Spare(*k - n);
                }
                x.clone()
            }
            Relabelling::Shift { base, step } => match shift_index(base, x) {
                Some(k) => indexed(base, k + step),
                None => x.clone(),
            },
            Relabelling::Map(pairs) => pairs
                .iter()
                .find(|(d, _)| d == x)
                .map(|(_, i)| i.clone())
                .unwrap_or_else(|| x.clone()),
        }
    }

    /// All names mapping to `w` under `apply`. Finite for every kind in
    /// the algebra; a singleton for the injective kinds.
    pub fn preimage(&self, w: &Name) -> Vec<Name> {
        let mut candidates: Vec<Name> = Vec::new();
        match self {
            Relabelling::TagL => tag_preimage_candidates('l', w, &mut candidates),
            Relabelling::TagR => tag_preimage_candidates('r', w, &mut candidates),
            Relabelling::TagE => tag_preimage_candidates('e', w, &mut candidates),
            Relabelling::PNu(y) => {
                if *w == Name::p0() {
                    candidates.push(y.clone());
                }
                if w == y {
                    candidates.push(Name::p1());
                }
                tag_preimage_candidates('e', w, &mut candidates);
            }
            Relabelling::SubS { targets, sources } => {
                for (i, t) in targets.iter().enumerate() {
                    if t == w {
                        candidates.push(sources[i].clone());
                    }
                }
                for (i, s) in sources.iter().enumerate() {
                    if s == w {
                        candidates.push(Name::Spare(i as u32 + 1));
                    }
                }
                if let Name::Spare(k) = w {
                    candidates.push(Name::Spare(k + sources.len() as u32));
                }
            }
            Relabelling::Shift { base, step } => {
                if let Some(k) = shift_index(base, w) {
                    if k >= *step {
                        candidates.push(indexed(base, k - step));
                    }
                }
            }
            Relabelling::Map(pairs) => {
                for (d, i) in pairs {
                    if i == w {
                        candidates.push(d.clone());
                    }
                }
            }
        }
        candidates.push(w.clone());
        candidates.sort();
        candidates.dedup();
        candidates.retain(|c| self.apply(c) == *w);
        candidates
    }

    /// Whether `apply` is injective as a total function on the name
    /// universe. The tag relabellings, the restriction relabelling and
    /// the shift are; spare-shifting substitutions with a non-empty
    /// domain never are (some target also sits outside the domain and
    /// is fixed by it), and finite maps depend on their entries.
    pub fn is_injective(&self) -> bool {
        match self {
            Relabelling::TagL | Relabelling::TagR | Relabelling::TagE => true,
            Relabelling::PNu(_) | Relabelling::Shift { .. } => true,
            Relabelling::SubS { sources, .. } => sources.is_empty(),
            Relabelling::Map(pairs) => {
                let images: BTreeSet<&Name> = pairs.iter().map(|(_, i)| i).collect();
                if images.len() != pairs.len() {
                    return false;
                }
                // x -> y with y outside the domain collides with y -> y.
                pairs
                    .iter()
                    .all(|(_, i)| pairs.iter().any(|(d, _)| d == i))
            }
        }
    }
}

impl fmt::Display for Relabelling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Relabelling::TagL => f.write_str("l"),
            Relabelling::TagR => f.write_str("r"),
            Relabelling::TagE => f.write_str("e"),
            Relabelling::PNu(y) => write!(f, "p_{y}"),
            Relabelling::SubS { targets, sources } => {
                let mut first = true;
                for t in targets {
                    if !first {
                        f.write_str(",")?;
                    }
                    write!(f, "{t}")?;
                    first = false;
                }
                f.write_str("/")?;
                first = true;
                for s in sources {
                    if !first {
                        f.write_str(",")?;
                    }
                    write!(f, "{s}")?;
                    first = false;
                }
                Ok(())
            }
            Relabelling::Shift { base, step } => {
                if *step == 1 {
                    write!(f, "shift {base}")
                } else {
                    write!(f, "shift {base} {step}")
                }
            }
            Relabelling::Map(pairs) => {
                f.write_str("map:")?;
                for (k, (d, i)) in pairs.iter().enumerate() {
                    if k > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, " {d}->{i}")?;
                }
                Ok(())
            }
        }
    }
}

fn tag_apply(tag: char, x: &Name) -> Name {
    match x {
        Name::Private { tags, primes: 0 } => {
            let mut t = String::with_capacity(tags.len() + 1);
            t.push(tag);
            t.push_str(tags);
            Name::Private { tags: t, primes: 0 }
        }
        Name::Private { tags, primes } if !tags.starts_with(tag) => {
            Name::Private { tags: tags.clone(), primes: primes - 1 }
        }
        _ => x.clone(),
    }
}

fn tag_preimage_candidates(tag: char, w: &Name, out: &mut Vec<Name>) {
    if let Name::Private { tags, primes } = w {
        if *primes == 0 {
            if let Some(rest) = tags.strip_prefix(tag) {
                out.push(Name::Private { tags: String::from(rest), primes: 0 });
            }
        }
        if !tags.starts_with(tag) {
            out.push(Name::Private { tags: tags.clone(), primes: primes + 1 });
        }
    }
}

/// Parse `x` as `base` followed by a canonical decimal index.
fn shift_index(base: &str, x: &Name) -> Option<u32> {
    let Name::Public(id) = x else { return None };
    let digits = id.strip_prefix(base)?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    if digits.len() > 1 && digits.starts_with('0') {
        return None; // non-canonical index, treat as unrelated
    }
    digits.parse().ok()
}

fn indexed(base: &str, k: u32) -> Name {
    let mut id = String::from(base);
    let mut digits = alloc::string::ToString::to_string(&k);
    id.push_str(digits.as_mut_str());
    Name::Public(id)
}

/// Smallest name of the same sort as `base` that avoids `avoid`,
/// trying `base` itself first. Deterministic so traces reproduce.
pub fn fresh_like(base: &Name, avoid: &BTreeSet<Name>) -> Name {
    if !avoid.contains(base) {
        return base.clone();
    }
    match base {
        Name::Public(id) => {
            let stem: String = id.trim_end_matches(|c: char| c.is_ascii_digit()).into();
            // bare "s" plus digits would lex as a spare name
            let stem = match stem.as_str() {
                "" => String::from("x"),
                "s" => String::from("ss"),
                _ => stem,
            };
            for k in 1u32.. {
                let cand = indexed(&stem, k);
                if !avoid.contains(&cand) {
                    return cand;
                }
            }
            unreachable!()
        }
        Name::Spare(i) => {
            let mut k = *i;
            loop {
                k += 1;
                if !avoid.contains(&Name::Spare(k)) {
                    return Name::Spare(k);
                }
            }
        }
        Name::Private { tags, primes } => {
            let mut k = *primes;
            loop {
                k += 1;
                let cand = Name::Private { tags: tags.clone(), primes: k };
                if !avoid.contains(&cand) {
                    return cand;
                }
            }
        }
    }
}
