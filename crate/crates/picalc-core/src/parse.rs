//! Lexer and recursive-descent parsers for pi and CCS terms plus
//! definition files. Whitespace-insensitive except that definition
//! files are one definition per line; `#` starts a comment.

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::names::Name;
use crate::names::Relabelling;
use crate::syntax::{
    CcsTerm, DefEnv, InstDom, InstStyle, MatchSeq, PiMode, PiTerm, Action,
};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub line: u32,
    pub col: u32,
    pub msg: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.msg)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    SpareTok(u32),
    PrivateTok(String, u32),
    Int(u32),
    Dot,
    Bang,
    Question,
    LParen,
    RParen,
    LBrack,
    RBrack,
    LBrace,
    RBrace,
    Lt,
    Gt,
    Plus,
    Bar,
    BarBar,
    Eq,
    DefEq,
    Colon,
    Comma,
    Slash,
    Backslash,
    Quote,
    Arrow,
    FatArrow,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "{s}"),
            Tok::SpareTok(i) => write!(f, "s{i}"),
            Tok::PrivateTok(tags, primes) => {
                write!(f, "{{{tags}}}p{}", "'".repeat(*primes as usize))
            }
            Tok::Int(k) => write!(f, "{k}"),
            Tok::Dot => f.write_str("."),
            Tok::Bang => f.write_str("!"),
            Tok::Question => f.write_str("?"),
            Tok::LParen => f.write_str("("),
            Tok::RParen => f.write_str(")"),
            Tok::LBrack => f.write_str("["),
            Tok::RBrack => f.write_str("]"),
            Tok::LBrace => f.write_str("{"),
            Tok::RBrace => f.write_str("}"),
            Tok::Lt => f.write_str("<"),
            Tok::Gt => f.write_str(">"),
            Tok::Plus => f.write_str("+"),
            Tok::Bar => f.write_str("|"),
            Tok::BarBar => f.write_str("||"),
            Tok::Eq => f.write_str("="),
            Tok::DefEq => f.write_str(":="),
            Tok::Colon => f.write_str(":"),
            Tok::Comma => f.write_str(","),
            Tok::Slash => f.write_str("/"),
            Tok::Backslash => f.write_str("\\"),
            Tok::Quote => f.write_str("'"),
            Tok::Arrow => f.write_str("->"),
            Tok::FatArrow => f.write_str("=>"),
        }
    }
}

const KEYWORDS: [&str; 6] = ["tau", "nu", "sum", "in", "map", "shift"];

struct Lexed {
    toks: Vec<(Tok, u32, u32)>,
    end: (u32, u32),
}

fn lex(text: &str, first_line: u32) -> Result<Lexed, ParseError> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0usize;
    let mut line = first_line;
    let mut col = 1u32;
    let err = |line: u32, col: u32, msg: String| ParseError { line, col, msg };
    while i < bytes.len() {
        let c = bytes[i] as char;
        let (tl, tc) = (line, col);
        let mut push = |t: Tok| toks.push((t, tl, tc));
        match c {
            ' ' | '\t' | '\r' => {
                i += 1;
                col += 1;
            }
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            '#' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                let word = &text[start..i];
                col += (i - start) as u32;
                let rest = &word[1..];
                if word.starts_with('s') && !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit())
                {
                    let idx: u32 = rest
                        .parse()
                        .map_err(|_| err(tl, tc, "spare index too large".to_string()))?;
                    if idx == 0 {
                        return Err(err(tl, tc, "spare names start at s1".to_string()));
                    }
                    push(Tok::SpareTok(idx));
                } else {
                    push(Tok::Ident(word.to_string()));
                }
            }
            '0'..='9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let k: u32 = text[start..i]
                    .parse()
                    .map_err(|_| err(tl, tc, "number too large".to_string()))?;
                col += (i - start) as u32;
                push(Tok::Int(k));
            }
            '{' => {
                // try the private-name form {tags}p'* before treating
                // this as a plain brace
                let mut j = i + 1;
                while j < bytes.len() && matches!(bytes[j], b'e' | b'l' | b'r') {
                    j += 1;
                }
                if j + 1 < bytes.len() && bytes[j] == b'}' && bytes[j + 1] == b'p' {
                    let tags = text[i + 1..j].to_string();
                    let mut k = j + 2;
                    let mut primes = 0u32;
                    while k < bytes.len() && bytes[k] == b'\'' {
                        primes += 1;
                        k += 1;
                    }
                    if k < bytes.len()
                        && (bytes[k].is_ascii_alphanumeric() || bytes[k] == b'_')
                    {
                        return Err(err(tl, tc, "malformed private name".to_string()));
                    }
                    col += (k - i) as u32;
                    i = k;
                    push(Tok::PrivateTok(tags, primes));
                } else {
                    i += 1;
                    col += 1;
                    push(Tok::LBrace);
                }
            }
            '|' => {
                if i + 1 < bytes.len() && bytes[i + 1] == b'|' {
                    i += 2;
                    col += 2;
                    push(Tok::BarBar);
                } else {
                    i += 1;
                    col += 1;
                    push(Tok::Bar);
                }
            }
            '=' => {
                if i + 1 < bytes.len() && bytes[i + 1] == b'>' {
                    i += 2;
                    col += 2;
                    push(Tok::FatArrow);
                } else {
                    i += 1;
                    col += 1;
                    push(Tok::Eq);
                }
            }
            ':' => {
                if i + 1 < bytes.len() && bytes[i + 1] == b'=' {
                    i += 2;
                    col += 2;
                    push(Tok::DefEq);
                } else {
                    i += 1;
                    col += 1;
                    push(Tok::Colon);
                }
            }
            '-' => {
                if i + 1 < bytes.len() && bytes[i + 1] == b'>' {
                    i += 2;
                    col += 2;
                    push(Tok::Arrow);
                } else {
                    return Err(err(tl, tc, "unexpected '-'".to_string()));
                }
            }
            '.' => {
                i += 1;
                col += 1;
                push(Tok::Dot);
            }
            '!' => {
                i += 1;
                col += 1;
                push(Tok::Bang);
            }
            '?' => {
                i += 1;
                col += 1;
                push(Tok::Question);
            }
            '(' => {
                i += 1;
                col += 1;
                push(Tok::LParen);
            }
            ')' => {
                i += 1;
                col += 1;
                push(Tok::RParen);
            }
            '[' => {
                i += 1;
                col += 1;
                push(Tok::LBrack);
            }
            ']' => {
                i += 1;
                col += 1;
                push(Tok::RBrack);
            }
            '}' => {
                i += 1;
                col += 1;
                push(Tok::RBrace);
            }
            '<' => {
                i += 1;
                col += 1;
                push(Tok::Lt);
            }
            '>' => {
                i += 1;
                col += 1;
                push(Tok::Gt);
            }
            '+' => {
                i += 1;
                col += 1;
                push(Tok::Plus);
            }
            ',' => {
                i += 1;
                col += 1;
                push(Tok::Comma);
            }
            '/' => {
                i += 1;
                col += 1;
                push(Tok::Slash);
            }
            '\\' => {
                i += 1;
                col += 1;
                push(Tok::Backslash);
            }
            '\'' => {
                i += 1;
                col += 1;
                push(Tok::Quote);
            }
            other => {
                return Err(err(tl, tc, format!("unexpected character {other:?}")));
            }
        }
    }
    Ok(Lexed { toks, end: (line, col) })
}

/// Call sites recorded for post-parse resolution against the
/// definition environment.
#[derive(Default)]
struct CallSites {
    pi: Vec<(String, usize, u32, u32)>,
    ccs: Vec<(String, u32, u32)>,
}

struct Parser {
    toks: Vec<(Tok, u32, u32)>,
    end: (u32, u32),
    pos: usize,
    calls: CallSites,
}

impl Parser {
    fn new(lexed: Lexed) -> Parser {
        Parser { toks: lexed.toks, end: lexed.end, pos: 0, calls: CallSites::default() }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _, _)| t)
    }

    fn peek2(&self) -> Option<&Tok> {
        self.toks.get(self.pos + 1).map(|(t, _, _)| t)
    }

    fn here(&self) -> (u32, u32) {
        self.toks.get(self.pos).map(|&(_, l, c)| (l, c)).unwrap_or(self.end)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _, _)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        let (line, col) = self.here();
        Err(ParseError { line, col, msg: msg.into() })
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        match self.peek() {
            Some(t) if *t == want => {
                self.pos += 1;
                Ok(())
            }
            Some(t) => {
                let t = t.clone();
                self.err(format!("expected {want}, found {t}"))
            }
            None => self.err(format!("expected {want}, found end of input")),
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    /// A name in any of the three sorts. Keywords are not names.
    fn name(&mut self) -> Result<Name, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Ident(id)) => {
                if KEYWORDS.contains(&id.as_str()) {
                    return self.err(format!("{id} is a keyword, not a name"));
                }
                self.pos += 1;
                Ok(Name::Public(id))
            }
            Some(Tok::SpareTok(i)) => {
                self.pos += 1;
                Ok(Name::Spare(i))
            }
            Some(Tok::PrivateTok(tags, primes)) => {
                self.pos += 1;
                Ok(Name::Private { tags, primes })
            }
            Some(t) => self.err(format!("expected a name, found {t}")),
            None => self.err("expected a name, found end of input"),
        }
    }

    fn public_name(&mut self, role: &str) -> Result<Name, ParseError> {
        let at = self.here();
        let n = self.name()?;
        if matches!(n, Name::Public(_)) {
            Ok(n)
        } else {
            Err(ParseError {
                line: at.0,
                col: at.1,
                msg: format!("{role} must be a public name, found {n}"),
            })
        }
    }

    /// Zero or more `[x=y]` groups; returns the pairs in order.
    fn match_groups(&mut self) -> Result<Vec<(Name, Name)>, ParseError> {
        let mut pairs = Vec::new();
        while self.peek() == Some(&Tok::LBrack) {
            self.pos += 1;
            let x = self.name()?;
            self.expect(Tok::Eq)?;
            let y = self.name()?;
            self.expect(Tok::RBrack)?;
            pairs.push((x, y));
        }
        Ok(pairs)
    }

    // ---- pi terms ----

    fn pi_sum(&mut self, mode: PiMode) -> Result<PiTerm, ParseError> {
        let mut acc = self.pi_par(mode)?;
        while self.peek() == Some(&Tok::Plus) {
            self.pos += 1;
            let rhs = self.pi_par(mode)?;
            acc = PiTerm::sum(acc, rhs);
        }
        Ok(acc)
    }

    fn pi_par(&mut self, mode: PiMode) -> Result<PiTerm, ParseError> {
        let mut acc = self.pi_pre(mode)?;
        while self.peek() == Some(&Tok::Bar) {
            self.pos += 1;
            let rhs = self.pi_pre(mode)?;
            acc = PiTerm::par(acc, rhs);
        }
        Ok(acc)
    }

    fn pi_pre(&mut self, mode: PiMode) -> Result<PiTerm, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Int(0)) => {
                self.pos += 1;
                Ok(PiTerm::Nil)
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let t = self.pi_sum(mode)?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            Some(Tok::LBrack) => {
                let pairs = self.match_groups()?;
                match mode {
                    PiMode::Strict => {
                        let body = self.pi_pre(mode)?;
                        Ok(pairs.into_iter().rev().fold(body, |acc, (x, y)| {
                            PiTerm::Match(x, y, Box::new(acc))
                        }))
                    }
                    PiMode::Im => {
                        let m = MatchSeq::from_pairs(pairs);
                        self.pi_prefix_only(mode, m)
                    }
                }
            }
            Some(Tok::Ident(id)) if id == "nu" => {
                self.pos += 1;
                let y = self.name()?;
                self.expect(Tok::Dot)?;
                let body = self.pi_pre(mode)?;
                Ok(PiTerm::nu(y, body))
            }
            _ => self.pi_prefix_only(mode, MatchSeq::empty()),
        }
    }

    /// A prefixed term (or call/atom when `m` is empty); used directly
    /// after a matching sequence, where only a prefix may follow.
    fn pi_prefix_only(&mut self, mode: PiMode, m: MatchSeq) -> Result<PiTerm, ParseError> {
        let guarded = !m.is_empty();
        match self.peek().cloned() {
            Some(Tok::Ident(id)) if id == "tau" => {
                self.pos += 1;
                self.expect(Tok::Dot)?;
                let body = self.pi_pre(mode)?;
                Ok(PiTerm::TauPre(m, Box::new(body)))
            }
            Some(Tok::Quote) => {
                self.pos += 1;
                let x = self.name()?;
                self.expect(Tok::Lt)?;
                let y = self.name()?;
                self.expect(Tok::Gt)?;
                self.expect(Tok::Dot)?;
                let body = self.pi_pre(mode)?;
                Ok(PiTerm::OutPre(m, x, y, Box::new(body)))
            }
            Some(Tok::Ident(id))
                if !KEYWORDS.contains(&id.as_str()) && self.peek2() == Some(&Tok::LParen) =>
            {
                // input prefix or identifier call, decided by the dot
                let (line, col) = self.here();
                self.pos += 2;
                let mut args = Vec::new();
                if self.peek() != Some(&Tok::RParen) {
                    loop {
                        args.push(self.name()?);
                        if self.peek() == Some(&Tok::Comma) {
                            self.pos += 1;
                        } else {
                            break;
                        }
                    }
                }
                self.expect(Tok::RParen)?;
                if args.len() == 1 && self.peek() == Some(&Tok::Dot) {
                    self.pos += 1;
                    let y = args.pop().unwrap();
                    if !matches!(y, Name::Public(_)) {
                        return Err(ParseError {
                            line,
                            col,
                            msg: format!("input binder must be a public name, found {y}"),
                        });
                    }
                    let body = self.pi_pre(mode)?;
                    Ok(PiTerm::InPre(m, Name::Public(id), y, Box::new(body)))
                } else {
                    if guarded {
                        return Err(ParseError {
                            line,
                            col,
                            msg: "a matching sequence must guard a prefix".to_string(),
                        });
                    }
                    self.calls.pi.push((id.clone(), args.len(), line, col));
                    Ok(PiTerm::Ide(id, args))
                }
            }
            Some(t) if matches!(t, Tok::Ident(_) | Tok::SpareTok(_) | Tok::PrivateTok(..)) => {
                let x = self.name()?;
                self.expect(Tok::Bang)?;
                let y = self.name()?;
                self.expect(Tok::Dot)?;
                let body = self.pi_pre(mode)?;
                Ok(PiTerm::OutPre(m, x, y, Box::new(body)))
            }
            _ => {
                if guarded {
                    self.err("a matching sequence must guard a prefix")
                } else {
                    self.err("expected a process term")
                }
            }
        }
    }

    // ---- CCS terms ----

    fn ccs_sum(&mut self) -> Result<CcsTerm, ParseError> {
        let first = self.ccs_par()?;
        if self.peek() != Some(&Tok::Plus) {
            return Ok(first);
        }
        let mut items = alloc::vec![first];
        while self.peek() == Some(&Tok::Plus) {
            self.pos += 1;
            items.push(self.ccs_par()?);
        }
        Ok(CcsTerm::SumList(items))
    }

    fn ccs_par(&mut self) -> Result<CcsTerm, ParseError> {
        let mut acc = self.ccs_pre()?;
        while self.peek() == Some(&Tok::BarBar) {
            self.pos += 1;
            let rhs = self.ccs_pre()?;
            acc = CcsTerm::par(acc, rhs);
        }
        Ok(acc)
    }

    fn ccs_pre(&mut self) -> Result<CcsTerm, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Ident(id)) if id == "tau" => {
                self.pos += 1;
                self.expect(Tok::Dot)?;
                let body = self.ccs_pre()?;
                Ok(CcsTerm::prefix(Action::tau(), body))
            }
            Some(Tok::Ident(id)) if id == "sum" => {
                self.pos += 1;
                if self.peek() == Some(&Tok::LBrace) {
                    self.pos += 1;
                    let mut items = Vec::new();
                    if self.peek() != Some(&Tok::RBrace) {
                        loop {
                            items.push(self.ccs_sum()?);
                            if self.peek() == Some(&Tok::Comma) {
                                self.pos += 1;
                            } else {
                                break;
                            }
                        }
                    }
                    self.expect(Tok::RBrace)?;
                    Ok(CcsTerm::SumList(items))
                } else {
                    self.ccs_input_sum()
                }
            }
            Some(Tok::LBrack) => {
                let pairs = self.match_groups()?;
                if pairs.is_empty() {
                    return self.err("expected a match group");
                }
                if self.peek() == Some(&Tok::FatArrow) {
                    self.pos += 1;
                    let body = self.ccs_pre()?;
                    Ok(pairs.into_iter().rev().fold(body, |acc, (x, y)| {
                        CcsTerm::Trigger(x, y, Box::new(acc))
                    }))
                } else {
                    self.ccs_action_prefix(MatchSeq::from_pairs(pairs))
                }
            }
            Some(Tok::Quote) => self.ccs_action_prefix(MatchSeq::empty()),
            Some(Tok::Ident(id))
                if !KEYWORDS.contains(&id.as_str())
                    && matches!(self.peek2(), Some(Tok::Bang) | Some(Tok::Question)) =>
            {
                self.ccs_action_prefix(MatchSeq::empty())
            }
            Some(Tok::SpareTok(_)) | Some(Tok::PrivateTok(..)) => {
                self.ccs_action_prefix(MatchSeq::empty())
            }
            _ => self.ccs_post(),
        }
    }

    /// `M x!y . E`, `M x?y . E` or the quoted output form.
    fn ccs_action_prefix(&mut self, m: MatchSeq) -> Result<CcsTerm, ParseError> {
        if self.peek() == Some(&Tok::Quote) {
            self.pos += 1;
            let x = self.name()?;
            self.expect(Tok::Lt)?;
            let y = self.name()?;
            self.expect(Tok::Gt)?;
            self.expect(Tok::Dot)?;
            let body = self.ccs_pre()?;
            return Ok(CcsTerm::prefix(Action::FreeOut(m, x, y), body));
        }
        let x = self.name()?;
        let out = match self.next() {
            Some(Tok::Bang) => true,
            Some(Tok::Question) => false,
            Some(t) => return self.err(format!("expected ! or ?, found {t}")),
            None => return self.err("expected ! or ?, found end of input"),
        };
        let y = self.name()?;
        self.expect(Tok::Dot)?;
        let body = self.ccs_pre()?;
        let act = if out { Action::FreeOut(m, x, y) } else { Action::FreeIn(m, x, y) };
        Ok(CcsTerm::prefix(act, body))
    }

    /// `sum z. M x?z.E` with an optional domain clause `in pub`,
    /// `in all` or `in spub`.
    fn ccs_input_sum(&mut self) -> Result<CcsTerm, ParseError> {
        let bind = self.public_name("input-sum binder")?;
        let (style, dom) = if self.peek() == Some(&Tok::Ident("in".to_string())) {
            self.pos += 1;
            match self.next() {
                Some(Tok::Ident(w)) if w == "pub" => (InstStyle::Plain, InstDom::PublicOnly),
                Some(Tok::Ident(w)) if w == "all" => (InstStyle::Plain, InstDom::AllNames),
                Some(Tok::Ident(w)) if w == "spub" => (InstStyle::Spare, InstDom::PublicOnly),
                _ => return self.err("expected pub, all or spub after in"),
            }
        } else {
            (InstStyle::Spare, InstDom::AllNames)
        };
        self.expect(Tok::Dot)?;
        let pairs = self.match_groups()?;
        let m = MatchSeq::from_pairs(pairs);
        let subj = self.name()?;
        self.expect(Tok::Question)?;
        let at = self.here();
        let obj = self.name()?;
        if obj != bind {
            return Err(ParseError {
                line: at.0,
                col: at.1,
                msg: format!("input-sum object must be the binder {bind}, found {obj}"),
            });
        }
        self.expect(Tok::Dot)?;
        let body = self.ccs_pre()?;
        Ok(CcsTerm::InputSum { m, subj, bind, body: Box::new(body), style, dom })
    }

    fn ccs_post(&mut self) -> Result<CcsTerm, ParseError> {
        let mut acc = self.ccs_atom()?;
        loop {
            match self.peek() {
                Some(Tok::LBrack) => {
                    self.pos += 1;
                    let rel = self.relabelling()?;
                    self.expect(Tok::RBrack)?;
                    acc = CcsTerm::Relabel(Box::new(acc), rel);
                }
                Some(Tok::Backslash) => {
                    self.pos += 1;
                    self.expect(Tok::LBrace)?;
                    let mut set = BTreeSet::new();
                    if self.peek() != Some(&Tok::RBrace) {
                        loop {
                            set.insert(self.name()?);
                            if self.peek() == Some(&Tok::Comma) {
                                self.pos += 1;
                            } else {
                                break;
                            }
                        }
                    }
                    self.expect(Tok::RBrace)?;
                    acc = CcsTerm::Restrict(Box::new(acc), set);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn ccs_atom(&mut self) -> Result<CcsTerm, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Int(0)) => {
                self.pos += 1;
                Ok(CcsTerm::Nil)
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let t = self.ccs_sum()?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            Some(Tok::Ident(id)) if !KEYWORDS.contains(&id.as_str()) => {
                let (line, col) = self.here();
                self.pos += 1;
                self.calls.ccs.push((id.clone(), line, col));
                Ok(CcsTerm::Ide(id))
            }
            Some(t) => self.err(format!("expected a CCS term, found {t}")),
            None => self.err("expected a CCS term, found end of input"),
        }
    }

    /// The bracketed relabelling forms: `l`, `r`, `e`, `p_y`,
    /// `targets/sources`, `map: a->b, ...`, `shift base [step]`.
    fn relabelling(&mut self) -> Result<Relabelling, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Ident(id)) if id == "l" && self.peek2() == Some(&Tok::RBrack) => {
                self.pos += 1;
                Ok(Relabelling::TagL)
            }
            Some(Tok::Ident(id)) if id == "r" && self.peek2() == Some(&Tok::RBrack) => {
                self.pos += 1;
                Ok(Relabelling::TagR)
            }
            Some(Tok::Ident(id)) if id == "e" && self.peek2() == Some(&Tok::RBrack) => {
                self.pos += 1;
                Ok(Relabelling::TagE)
            }
            Some(Tok::Ident(id))
                if id.starts_with("p_") && self.peek2() == Some(&Tok::RBrack) =>
            {
                self.pos += 1;
                let rest = &id[2..];
                if rest.is_empty() {
                    // the name continues as a separate token, e.g. p_{el}p
                    let y = self.name()?;
                    return Ok(Relabelling::PNu(y));
                }
                let tail = &rest[1..];
                let y = if rest.starts_with('s')
                    && !tail.is_empty()
                    && tail.bytes().all(|b| b.is_ascii_digit())
                {
                    Name::Spare(tail.parse().unwrap_or(1))
                } else {
                    Name::Public(rest.to_string())
                };
                Ok(Relabelling::PNu(y))
            }
            Some(Tok::Ident(id)) if id == "p_" => {
                self.pos += 1;
                let y = self.name()?;
                Ok(Relabelling::PNu(y))
            }
            Some(Tok::Ident(id)) if id == "map" => {
                self.pos += 1;
                self.expect(Tok::Colon)?;
                let mut pairs = Vec::new();
                if self.peek() != Some(&Tok::RBrack) {
                    loop {
                        let a = self.name()?;
                        self.expect(Tok::Arrow)?;
                        let b = self.name()?;
                        pairs.push((a, b));
                        if self.peek() == Some(&Tok::Comma) {
                            self.pos += 1;
                        } else {
                            break;
                        }
                    }
                }
                let mut seen = BTreeSet::new();
                for (a, _) in &pairs {
                    if !seen.insert(a.clone()) {
                        return self.err(format!("map lists {a} twice"));
                    }
                }
                Ok(Relabelling::map(pairs))
            }
            Some(Tok::Ident(id)) if id == "shift" => {
                self.pos += 1;
                let base = match self.next() {
                    Some(Tok::Ident(b)) if !KEYWORDS.contains(&b.as_str()) => b,
                    _ => return self.err("expected a base identifier after shift"),
                };
                let step = if let Some(Tok::Int(k)) = self.peek() {
                    let k = *k;
                    self.pos += 1;
                    k
                } else {
                    1
                };
                if step == 0 {
                    return self.err("shift step must be positive");
                }
                Ok(Relabelling::Shift { base, step })
            }
            _ => {
                // targets / sources
                let mut targets = Vec::new();
                if self.peek() != Some(&Tok::Slash) {
                    loop {
                        targets.push(self.name()?);
                        if self.peek() == Some(&Tok::Comma) {
                            self.pos += 1;
                        } else {
                            break;
                        }
                    }
                }
                self.expect(Tok::Slash)?;
                let mut sources = Vec::new();
                if self.peek() != Some(&Tok::RBrack) {
                    loop {
                        sources.push(self.public_name("substitution source")?);
                        if self.peek() == Some(&Tok::Comma) {
                            self.pos += 1;
                        } else {
                            break;
                        }
                    }
                }
                if targets.len() != sources.len() {
                    return self.err(format!(
                        "substitution needs equally many targets and sources, got {}/{}",
                        targets.len(),
                        sources.len()
                    ));
                }
                let mut seen = BTreeSet::new();
                for s in &sources {
                    if !seen.insert(s.clone()) {
                        return self.err(format!("substitution source {s} repeated"));
                    }
                }
                Ok(Relabelling::SubS { targets, sources })
            }
        }
    }
}

fn finish<T>(parser: Parser, value: T) -> Result<(T, CallSites), ParseError> {
    if !parser.at_end() {
        let (t, l, c) = parser.toks[parser.pos].clone();
        return Err(ParseError { line: l, col: c, msg: format!("unexpected {t} after term") });
    }
    Ok((value, parser.calls))
}

fn parse_pi_text(
    text: &str,
    mode: PiMode,
    first_line: u32,
) -> Result<(PiTerm, CallSites), ParseError> {
    let mut parser = Parser::new(lex(text, first_line)?);
    let term = parser.pi_sum(mode)?;
    finish(parser, term)
}

fn parse_ccs_text(text: &str, first_line: u32) -> Result<(CcsTerm, CallSites), ParseError> {
    let mut parser = Parser::new(lex(text, first_line)?);
    let term = parser.ccs_sum()?;
    finish(parser, term)
}

enum DefHeader {
    Pi(String, Vec<Name>),
    Ccs(String),
}

fn parse_def_line(
    line_text: &str,
    line_no: u32,
    pi_mode: Option<PiMode>,
) -> Result<Option<(DefHeader, &str, u32)>, ParseError> {
    let stripped = match line_text.find('#') {
        Some(i) => &line_text[..i],
        None => line_text,
    };
    if stripped.trim().is_empty() {
        return Ok(None);
    }
    let mut parser = Parser::new(lex(stripped, line_no)?);
    let name = match parser.next() {
        Some(Tok::Ident(id)) if !KEYWORDS.contains(&id.as_str()) => id,
        _ => {
            return Err(ParseError {
                line: line_no,
                col: 1,
                msg: "expected a definition name".to_string(),
            })
        }
    };
    let header = if pi_mode.is_some() {
        let mut params = Vec::new();
        if parser.peek() == Some(&Tok::LParen) {
            parser.pos += 1;
            if parser.peek() != Some(&Tok::RParen) {
                loop {
                    params.push(parser.name()?);
                    if parser.peek() == Some(&Tok::Comma) {
                        parser.pos += 1;
                    } else {
                        break;
                    }
                }
            }
            parser.expect(Tok::RParen)?;
        }
        DefHeader::Pi(name, params)
    } else {
        DefHeader::Ccs(name)
    };
    parser.expect(Tok::DefEq)?;
    // hand the remainder of the line back for body parsing; find the
    // source offset of the := and slice after it
    let idx = stripped.find(":=").expect("definition separator vanished");
    Ok(Some((header, &stripped[idx + 2..], line_no)))
}

fn resolve_calls(env: &DefEnv, calls: &CallSites) -> Result<(), ParseError> {
    for (name, arity, line, col) in &calls.pi {
        if env.lookup_pi(name, *arity).is_none() {
            return Err(ParseError {
                line: *line,
                col: *col,
                msg: format!("identifier {name} with {arity} argument(s) is not defined"),
            });
        }
    }
    for (name, line, col) in &calls.ccs {
        if env.lookup_ccs(name).is_none() {
            return Err(ParseError {
                line: *line,
                col: *col,
                msg: format!("identifier {name} is not defined"),
            });
        }
    }
    Ok(())
}

/// Parse a pi term together with a definition file (may be empty).
/// Every identifier use must resolve against the definitions.
pub fn parse_pi(
    text: &str,
    mode: PiMode,
    defs_text: &str,
) -> Result<(PiTerm, DefEnv), ParseError> {
    let mut env = DefEnv::new();
    let mut pending = CallSites::default();
    for (i, line) in defs_text.lines().enumerate() {
        let line_no = i as u32 + 1;
        if let Some((header, body_text, bline)) = parse_def_line(line, line_no, Some(mode))? {
            let (body, calls) = parse_pi_text(body_text, mode, bline)?;
            pending.pi.extend(calls.pi);
            let DefHeader::Pi(name, params) = header else { unreachable!() };
            env.add_pi(&name, params, body).map_err(|e| ParseError {
                line: bline,
                col: 1,
                msg: e.to_string(),
            })?;
        }
    }
    let (term, calls) = parse_pi_text(text, mode, 1)?;
    pending.pi.extend(calls.pi);
    resolve_calls(&env, &pending)?;
    Ok((term, env))
}

/// Parse a single name of any sort, with nothing trailing.
pub fn parse_name(text: &str) -> Result<Name, ParseError> {
    let mut p = Parser::new(lex(text, 1)?);
    let n = p.name()?;
    if !p.at_end() {
        return p.err("trailing input after name");
    }
    Ok(n)
}

/// Parse a CCS term together with a definition file (may be empty).
pub fn parse_ccs(text: &str, defs_text: &str) -> Result<(CcsTerm, DefEnv), ParseError> {
    let mut env = DefEnv::new();
    let mut pending = CallSites::default();
    for (i, line) in defs_text.lines().enumerate() {
        let line_no = i as u32 + 1;
        if let Some((header, body_text, bline)) = parse_def_line(line, line_no, None)? {
            let (body, calls) = parse_ccs_text(body_text, bline)?;
            pending.ccs.extend(calls.ccs);
            let DefHeader::Ccs(name) = header else { unreachable!() };
            env.add_ccs(&name, body).map_err(|e| ParseError {
                line: bline,
                col: 1,
                msg: e.to_string(),
            })?;
        }
    }
    let (term, calls) = parse_ccs_text(text, 1)?;
    pending.ccs.extend(calls.ccs);
    resolve_calls(&env, &pending)?;
    Ok((term, env))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{alpha_canonical_ccs, free_names};
    use alloc::vec;

    fn n(s: &str) -> Name {
        Name::public(s)
    }

    fn pi(text: &str) -> PiTerm {
        parse_pi(text, PiMode::Strict, "").unwrap().0
    }

    fn pi_im(text: &str) -> PiTerm {
        parse_pi(text, PiMode::Im, "").unwrap().0
    }

    fn ccs(text: &str) -> CcsTerm {
        parse_ccs(text, "").unwrap().0
    }

    #[test]
    fn single_names() {
        assert_eq!(parse_name("x").unwrap(), n("x"));
        assert_eq!(parse_name("s3").unwrap(), Name::Spare(3));
        assert_eq!(
            parse_name("{el}p'").unwrap(),
            Name::private("el", 1)
        );
        assert!(parse_name("x y").is_err());
        assert!(parse_name("tau").is_err());
    }

    #[test]
    fn basic_pi_forms() {
        assert_eq!(pi("0"), PiTerm::Nil);
        assert_eq!(
            pi("x(y).'y<w>.0"),
            PiTerm::inp(n("x"), n("y"), PiTerm::out(n("y"), n("w"), PiTerm::Nil))
        );
        assert_eq!(
            pi("x(y).y!w.0"),
            PiTerm::inp(n("x"), n("y"), PiTerm::out(n("y"), n("w"), PiTerm::Nil))
        );
        assert_eq!(
            pi("[x=y]tau.0"),
            PiTerm::Match(n("x"), n("y"), Box::new(PiTerm::tau(PiTerm::Nil)))
        );
    }

    #[test]
    fn im_mode_prefixes_carry_matches() {
        let t = pi_im("[x=y][u=v]x!y.0");
        match t {
            PiTerm::OutPre(m, x, y, _) => {
                assert_eq!(m.entries().len(), 2);
                assert_eq!(x, n("x"));
                assert_eq!(y, n("y"));
            }
            other => panic!("unexpected {other:?}"),
        }
        // trivial matches vanish at construction
        assert_eq!(pi_im("[x=x]tau.0"), PiTerm::tau(PiTerm::Nil));
        // the matching operator shape (match before a non-prefix) is rejected
        assert!(parse_pi("[x=y](tau.0 | 0)", PiMode::Im, "").is_err());
        assert!(parse_pi("[x=y]A(x)", PiMode::Im, "A(x) := x!x.0").is_err());
    }

    #[test]
    fn pi_precedence_and_round_trip() {
        let t = pi("tau.0 | 0 + x!y.0");
        assert_eq!(
            t,
            PiTerm::sum(
                PiTerm::par(PiTerm::tau(PiTerm::Nil), PiTerm::Nil),
                PiTerm::out(n("x"), n("y"), PiTerm::Nil)
            )
        );
        let samples = [
            "0",
            "tau.0",
            "x!y.0",
            "x(y).y!w.0",
            "nu y. (x!y.0 | x(z).z!w.0)",
            "[x=y]tau.0 + tau.0 | 0",
            "nu y. tau.0 | tau.0",
            "(0 + tau.0) | 0",
            "s1!s2.0",
            "{el}p!{}p''.0",
            "A(x,y) | B()",
        ];
        let defs = "A(a,b) := a!b.0\nB() := 0";
        for s in samples {
            let (t, _) = parse_pi(s, PiMode::Strict, defs).unwrap();
            let printed = alloc::string::ToString::to_string(&t);
            let (back, _) = parse_pi(&printed, PiMode::Strict, defs).unwrap();
            assert_eq!(back, t, "round trip failed for {s} -> {printed}");
        }
    }

    #[test]
    fn pi_definitions_resolve() {
        let defs = "A(x) := x!x.A(x)\n# comment line\nB(y,z) := y(w).B(w,z)";
        let (t, env) = parse_pi("A(v) | B(a,b)", PiMode::Strict, defs).unwrap();
        assert_eq!(free_names(&t), BTreeSet::from([n("v"), n("a"), n("b")]));
        assert!(env.lookup_pi("A", 1).is_some());
        assert!(env.lookup_pi("B", 2).is_some());

        let missing = parse_pi("C(v)", PiMode::Strict, defs);
        assert!(missing.is_err());
        // arity mismatch is an unresolved identifier
        let arity = parse_pi("A(v,w)", PiMode::Strict, defs);
        assert!(arity.is_err());
    }

    #[test]
    fn parse_error_positions() {
        let err = parse_pi("x!y.\n  !", PiMode::Strict, "").unwrap_err();
        assert_eq!(err.line, 2);
        assert!(err.col >= 3);

        let err2 = parse_pi("x(s1).0", PiMode::Strict, "").unwrap_err();
        assert!(err2.msg.contains("public"));
    }

    #[test]
    fn basic_ccs_forms() {
        assert_eq!(
            ccs("tau.0 + tau.0"),
            CcsTerm::SumList(vec![
                CcsTerm::prefix(Action::tau(), CcsTerm::Nil),
                CcsTerm::prefix(Action::tau(), CcsTerm::Nil),
            ])
        );
        let t = ccs("sum z. x?z.(('y<w>.0)[z/y])");
        match &t {
            CcsTerm::InputSum { m, subj, bind, body, style, dom } => {
                assert!(m.is_empty());
                assert_eq!(*subj, n("x"));
                assert_eq!(*bind, n("z"));
                assert_eq!(*style, InstStyle::Spare);
                assert_eq!(*dom, InstDom::AllNames);
                assert_eq!(
                    **body,
                    CcsTerm::Relabel(
                        Box::new(CcsTerm::prefix(
                            Action::FreeOut(MatchSeq::empty(), n("y"), n("w")),
                            CcsTerm::Nil
                        )),
                        Relabelling::subs(vec![n("z")], vec![n("y")])
                    )
                );
            }
            other => panic!("unexpected {other:?}"),
        }
        let (p, _) = parse_ccs("(E)[l] || (F)[r]", "E := 0\nF := 0").unwrap();
        assert_eq!(
            p,
            CcsTerm::par(
                CcsTerm::relabel(CcsTerm::Ide("E".to_string()), Relabelling::TagL),
                CcsTerm::relabel(CcsTerm::Ide("F".to_string()), Relabelling::TagR),
            )
        );
    }

    #[test]
    fn ccs_relabelling_forms() {
        let forms = [
            ("0[l]", Relabelling::TagL),
            ("0[r]", Relabelling::TagR),
            ("0[e]", Relabelling::TagE),
            ("0[p_y]", Relabelling::PNu(n("y"))),
            ("0[p_{el}p]", Relabelling::PNu(Name::private("el", 0))),
            ("0[z/y]", Relabelling::subs(vec![n("z")], vec![n("y")])),
            (
                "0[a,s1/x,y]",
                Relabelling::subs(vec![n("a"), Name::Spare(1)], vec![n("x"), n("y")]),
            ),
            ("0[map: a->b, c->d]", Relabelling::map(vec![(n("a"), n("b")), (n("c"), n("d"))])),
            ("0[shift x]", Relabelling::Shift { base: "x".to_string(), step: 1 }),
            ("0[shift x 3]", Relabelling::Shift { base: "x".to_string(), step: 3 }),
        ];
        for (text, want) in forms {
            match ccs(text) {
                CcsTerm::Relabel(_, rel) => assert_eq!(rel, want, "for {text}"),
                other => panic!("unexpected {other:?} for {text}"),
            }
        }
    }

    #[test]
    fn ccs_trigger_restrict_and_domains() {
        let t = ccs("[x=y] => tau.0");
        assert_eq!(
            t,
            CcsTerm::Trigger(n("x"), n("y"), Box::new(CcsTerm::prefix(Action::tau(), CcsTerm::Nil)))
        );
        let r = ccs("(x!y.0) \\ {x, v}");
        match r {
            CcsTerm::Restrict(_, set) => {
                assert_eq!(set, BTreeSet::from([n("x"), n("v")]));
            }
            other => panic!("unexpected {other:?}"),
        }
        match ccs("sum z in pub. x?z.0") {
            CcsTerm::InputSum { style, dom, .. } => {
                assert_eq!(style, InstStyle::Plain);
                assert_eq!(dom, InstDom::PublicOnly);
            }
            other => panic!("unexpected {other:?}"),
        }
        match ccs("sum z in all. x?z.0") {
            CcsTerm::InputSum { style, dom, .. } => {
                assert_eq!(style, InstStyle::Plain);
                assert_eq!(dom, InstDom::AllNames);
            }
            other => panic!("unexpected {other:?}"),
        }
        // object must repeat the binder
        assert!(parse_ccs("sum z. x?w.0", "").is_err());
    }

    #[test]
    fn ccs_round_trip() {
        let samples = [
            "0",
            "tau.0",
            "x!y.0 + x?y.0",
            "sum z. x?z.(('y<w>.0)[z/y])",
            "sum z in pub. x?z.(0[map: y->z])",
            "(0[l] || 0[r]) \\ {a}",
            "[x=y] => tau.0 + tau.0",
            "(x!y.0) \\ {x} [l]",
            "sum { tau.0, x!y.0, 0 }",
            "sum {}",
            "{el}p!s1.0",
            "[a=b]x!y.0",
            "0[/]",
        ];
        for s in samples {
            let t = ccs(s);
            let printed = alloc::string::ToString::to_string(&t);
            let back = ccs(&printed);
            assert_eq!(back, t, "round trip failed for {s} -> {printed}");
            // canonical forms survive printing too
            let canon = alpha_canonical_ccs(&t);
            let printed2 = alloc::string::ToString::to_string(&canon);
            assert_eq!(ccs(&printed2), canon, "canonical round trip for {s}");
        }
    }

    #[test]
    fn ccs_definitions() {
        let defs = "E := tau.E\nF := x!y.0";
        let (t, env) = parse_ccs("E || F", defs).unwrap();
        assert_eq!(t, CcsTerm::par(CcsTerm::Ide("E".to_string()), CcsTerm::Ide("F".to_string())));
        assert!(env.lookup_ccs("E").is_some());
        assert!(parse_ccs("G", defs).is_err());
        assert!(parse_ccs("E", "E := 0\nE := tau.0").is_err());
    }

    #[test]
    fn lexer_private_names_and_braces() {
        // private token only when the closing brace is followed by p
        assert!(parse_ccs("sum { tau.0 }", "").is_ok());
        let e = ccs("{elr}p''!x.0");
        match e {
            CcsTerm::Prefix(Action::FreeOut(_, subj, _), _) => {
                assert_eq!(subj, Name::private("elr", 2));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_ccs("{el}pfoo!x.0", "").is_err());
    }
}
