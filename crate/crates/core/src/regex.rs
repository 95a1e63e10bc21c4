//! Variable-free regular expressions and a Thompson-NFA matcher.
//!
//! Syntax: juxtaposition concatenates, `|` is union, postfix `*`, `+` and `?`
//! repeat, parentheses group, `_` is ε, `%` is ∅ and `S` is any single letter.
//! A backslash takes the next character literally. Whitespace is ignored.

use std::fmt;

use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Regex {
    Empty,
    Epsilon,
    Letter(u8),
    Any,
    Concat(Vec<Regex>),
    Union(Vec<Regex>),
    Star(Box<Regex>),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("regex syntax error at offset {pos}: {msg}")]
pub struct RegexSyntaxError {
    pub pos: usize,
    pub msg: String,
}

pub(crate) const RESERVED: &[u8] = b"|*+?()_%S\\/{};[],";

impl Regex {
    pub fn literal(bytes: &[u8]) -> Regex {
        match bytes.len() {
            0 => Regex::Epsilon,
            1 => Regex::Letter(bytes[0]),
            _ => Regex::Concat(bytes.iter().map(|&b| Regex::Letter(b)).collect()),
        }
    }

    /// `Σ*`.
    pub fn universal() -> Regex {
        Regex::Star(Box::new(Regex::Any))
    }

    pub fn parse(text: &str) -> Result<Regex, RegexSyntaxError> {
        let mut p = Parser { src: text.as_bytes(), pos: 0 };
        let r = p.union()?;
        p.skip_ws();
        if p.pos < p.src.len() {
            return Err(p.error("unexpected character"));
        }
        Ok(r)
    }

    /// Whether ε belongs to the language.
    pub fn nullable(&self) -> bool {
        match self {
            Regex::Empty | Regex::Letter(_) | Regex::Any => false,
            Regex::Epsilon | Regex::Star(_) => true,
            Regex::Concat(v) => v.iter().all(Regex::nullable),
            Regex::Union(v) => v.iter().any(Regex::nullable),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Regex::Union(v) if v.len() > 1 => 0,
            Regex::Concat(v) if v.len() > 1 => 1,
            _ => 2,
        }
    }
}

pub(crate) fn write_letter(f: &mut impl fmt::Write, c: u8) -> fmt::Result {
    if RESERVED.contains(&c) || c.is_ascii_whitespace() {
        f.write_char('\\')?;
    }
    f.write_char(c as char)
}

impl fmt::Display for Regex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let child = |f: &mut fmt::Formatter<'_>, r: &Regex, min: u8| {
            if r.precedence() < min {
                write!(f, "({r})")
            } else {
                write!(f, "{r}")
            }
        };
        match self {
            Regex::Empty => f.write_str("%"),
            Regex::Epsilon => f.write_str("_"),
            Regex::Letter(c) => write_letter(f, *c),
            Regex::Any => f.write_str("S"),
            Regex::Concat(v) if v.is_empty() => f.write_str("_"),
            Regex::Concat(v) => v.iter().try_for_each(|r| child(f, r, 2)),
            Regex::Union(v) if v.is_empty() => f.write_str("%"),
            Regex::Union(v) => {
                for (k, r) in v.iter().enumerate() {
                    if k > 0 {
                        f.write_str("|")?;
                    }
                    child(f, r, 1)?;
                }
                Ok(())
            }
            Regex::Star(r) => {
                child(f, r, 2)?;
                f.write_str("*")
            }
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> RegexSyntaxError {
        RegexSyntaxError { pos: self.pos, msg: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn union(&mut self) -> Result<Regex, RegexSyntaxError> {
        let mut alts = vec![self.concat()?];
        while self.peek() == Some(b'|') {
            self.pos += 1;
            alts.push(self.concat()?);
        }
        Ok(if alts.len() == 1 { alts.pop().unwrap() } else { Regex::Union(alts) })
    }

    fn concat(&mut self) -> Result<Regex, RegexSyntaxError> {
        let mut items = Vec::new();
        while let Some(c) = self.peek() {
            if c == b'|' || c == b')' {
                break;
            }
            items.push(self.postfix()?);
        }
        Ok(match items.len() {
            0 => Regex::Epsilon,
            1 => items.pop().unwrap(),
            _ => Regex::Concat(items),
        })
    }

    fn postfix(&mut self) -> Result<Regex, RegexSyntaxError> {
        let mut r = self.atom()?;
        loop {
            match self.peek() {
                Some(b'*') => r = Regex::Star(Box::new(r)),
                Some(b'+') => r = Regex::Concat(vec![r.clone(), Regex::Star(Box::new(r))]),
                Some(b'?') => r = Regex::Union(vec![Regex::Epsilon, r]),
                _ => return Ok(r),
            }
            self.pos += 1;
        }
    }

    fn atom(&mut self) -> Result<Regex, RegexSyntaxError> {
        let c = self.peek().ok_or_else(|| self.error("unexpected end of regex"))?;
        self.pos += 1;
        match c {
            b'(' => {
                let r = self.union()?;
                if self.peek() != Some(b')') {
                    return Err(self.error("expected ')'"));
                }
                self.pos += 1;
                Ok(r)
            }
            b'_' => Ok(Regex::Epsilon),
            b'%' => Ok(Regex::Empty),
            b'S' => Ok(Regex::Any),
            b'\\' => {
                let c = *self.src.get(self.pos).ok_or_else(|| self.error("dangling escape"))?;
                self.pos += 1;
                Ok(Regex::Letter(c))
            }
            c if RESERVED.contains(&c) => {
                self.pos -= 1;
                Err(self.error("unexpected operator"))
            }
            c => Ok(Regex::Letter(c)),
        }
    }
}

#[derive(Clone, Debug)]
enum Edge {
    Byte(u8, usize),
    Any(usize),
}

/// Thompson automaton compiled once per expression.
#[derive(Clone, Debug)]
pub struct Nfa {
    eps: Vec<Vec<usize>>,
    edges: Vec<Vec<Edge>>,
    start: usize,
    accept: usize,
}

impl Nfa {
    pub fn compile(r: &Regex) -> Nfa {
        let mut nfa = Nfa { eps: Vec::new(), edges: Vec::new(), start: 0, accept: 0 };
        let (s, t) = nfa.build(r);
        nfa.start = s;
        nfa.accept = t;
        nfa
    }

    fn state(&mut self) -> usize {
        self.eps.push(Vec::new());
        self.edges.push(Vec::new());
        self.eps.len() - 1
    }

    fn build(&mut self, r: &Regex) -> (usize, usize) {
        let s = self.state();
        let t = self.state();
        match r {
            Regex::Empty => {}
            Regex::Epsilon => self.eps[s].push(t),
            Regex::Letter(c) => self.edges[s].push(Edge::Byte(*c, t)),
            Regex::Any => self.edges[s].push(Edge::Any(t)),
            Regex::Concat(v) => {
                let mut cur = s;
                for r in v {
                    let (a, b) = self.build(r);
                    self.eps[cur].push(a);
                    cur = b;
                }
                self.eps[cur].push(t);
            }
            Regex::Union(v) => {
                for r in v {
                    let (a, b) = self.build(r);
                    self.eps[s].push(a);
                    self.eps[b].push(t);
                }
            }
            Regex::Star(r) => {
                let (a, b) = self.build(r);
                self.eps[s].extend([a, t]);
                self.eps[b].extend([a, t]);
            }
        }
        (s, t)
    }

    fn close(&self, set: &mut Vec<usize>, mark: &mut [bool]) {
        let mut k = 0;
        while k < set.len() {
            let q = set[k];
            for &p in &self.eps[q] {
                if !mark[p] {
                    mark[p] = true;
                    set.push(p);
                }
            }
            k += 1;
        }
    }

    fn step(&self, set: &[usize], c: u8, mark: &mut [bool]) -> Vec<usize> {
        mark.iter_mut().for_each(|m| *m = false);
        let mut next = Vec::new();
        for &q in set {
            for e in &self.edges[q] {
                let p = match *e {
                    Edge::Byte(b, p) if b == c => p,
                    Edge::Any(p) => p,
                    _ => continue,
                };
                if !mark[p] {
                    mark[p] = true;
                    next.push(p);
                }
            }
        }
        self.close(&mut next, mark);
        next
    }

    fn initial(&self, mark: &mut [bool]) -> Vec<usize> {
        mark.iter_mut().for_each(|m| *m = false);
        mark[self.start] = true;
        let mut set = vec![self.start];
        self.close(&mut set, mark);
        set
    }

    pub fn matches(&self, input: &[u8]) -> bool {
        let mut mark = vec![false; self.eps.len()];
        let mut set = self.initial(&mut mark);
        for &c in input {
            if set.is_empty() {
                return false;
            }
            set = self.step(&set, c, &mut mark);
        }
        set.contains(&self.accept)
    }

    /// For a run started at `input[0]`, entry `k` tells whether `input[..k]`
    /// is accepted.
    pub fn accepting_prefixes(&self, input: &[u8]) -> Vec<bool> {
        let mut out = vec![false; input.len() + 1];
        let mut mark = vec![false; self.eps.len()];
        let mut set = self.initial(&mut mark);
        out[0] = set.contains(&self.accept);
        for (k, &c) in input.iter().enumerate() {
            if set.is_empty() {
                break;
            }
            set = self.step(&set, c, &mut mark);
            out[k + 1] = set.contains(&self.accept);
        }
        out
    }
}
