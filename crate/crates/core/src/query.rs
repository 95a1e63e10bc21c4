//! Syntax and reference semantics of FC[REG]-CQs.
//!
//! Grammar:
//!
//! ```text
//! query := "Ans(" varlist? ")" ":-" atom ("," atom)*
//! atom  := var "=" term ("." term)* | var "in" "/" regex "/"
//! term  := var | "quoted terminals"
//! ```
//!
//! `U` is the universe variable. Identifiers match `[a-zA-Z][a-zA-Z0-9_]*`;
//! names starting with `$` are reserved for generated variables and are
//! accepted so that printed queries parse back.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use thiserror::Error;

use crate::regex::{Nfa, Regex};
use crate::strings::Span;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Variable {
    Universe,
    Named(String),
}

impl Variable {
    pub fn named(name: impl Into<String>) -> Variable {
        Variable::Named(name.into())
    }

    pub fn is_universe(&self) -> bool {
        matches!(self, Variable::Universe)
    }

    pub fn name(&self) -> &str {
        match self {
            Variable::Universe => "U",
            Variable::Named(n) => n,
        }
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Symbol {
    Letter(u8),
    Var(Variable),
}

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pattern(pub Vec<Symbol>);

impl Pattern {
    pub fn from_vars<I: IntoIterator<Item = Variable>>(vars: I) -> Pattern {
        Pattern(vars.into_iter().map(Symbol::Var).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn vars(&self) -> impl Iterator<Item = &Variable> {
        self.0.iter().filter_map(|s| match s {
            Symbol::Var(v) => Some(v),
            Symbol::Letter(_) => None,
        })
    }

    pub fn contains_var(&self, v: &Variable) -> bool {
        self.vars().any(|x| x == v)
    }

    pub fn is_terminal_free(&self) -> bool {
        self.0.iter().all(|s| matches!(s, Symbol::Var(_)))
    }

    /// The variables of a terminal-free pattern, in order.
    pub fn as_vars(&self) -> Option<Vec<Variable>> {
        self.0
            .iter()
            .map(|s| match s {
                Symbol::Var(v) => Some(v.clone()),
                Symbol::Letter(_) => None,
            })
            .collect()
    }
}

fn write_quoted(f: &mut fmt::Formatter<'_>, bytes: &[u8]) -> fmt::Result {
    f.write_str("\"")?;
    for &c in bytes {
        if c == b'"' || c == b'\\' {
            f.write_str("\\")?;
        }
        write!(f, "{}", c as char)?;
    }
    f.write_str("\"")
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        let mut k = 0;
        while k < self.0.len() {
            if !first {
                f.write_str(".")?;
            }
            first = false;
            match &self.0[k] {
                Symbol::Var(v) => {
                    write!(f, "{v}")?;
                    k += 1;
                }
                Symbol::Letter(_) => {
                    let mut block = Vec::new();
                    while let Some(Symbol::Letter(c)) = self.0.get(k) {
                        block.push(*c);
                        k += 1;
                    }
                    write_quoted(f, &block)?;
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WordEquation {
    pub lhs: Variable,
    pub rhs: Pattern,
}

impl WordEquation {
    pub fn new(lhs: Variable, rhs: Pattern) -> Self {
        WordEquation { lhs, rhs }
    }

    /// Variables of the equation, the universe excluded.
    pub fn variables(&self) -> BTreeSet<Variable> {
        std::iter::once(&self.lhs)
            .chain(self.rhs.vars())
            .filter(|v| !v.is_universe())
            .cloned()
            .collect()
    }

    /// `|lhs| + |rhs|`.
    pub fn size(&self) -> usize {
        1 + self.rhs.len()
    }
}

impl fmt::Display for WordEquation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", self.lhs, self.rhs)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RegexConstraint {
    pub var: Variable,
    pub regex: Regex,
}

impl RegexConstraint {
    pub fn new(var: Variable, regex: Regex) -> Self {
        RegexConstraint { var, regex }
    }

    pub fn epsilon(var: Variable) -> Self {
        RegexConstraint { var, regex: Regex::Epsilon }
    }
}

impl fmt::Display for RegexConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} in /{}/", self.var, self.regex)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FcCq {
    pub head: Vec<Variable>,
    pub equations: Vec<WordEquation>,
    pub constraints: Vec<RegexConstraint>,
}

impl FcCq {
    pub fn parse(text: &str) -> Result<FcCq, ParseError> {
        parse_query(text)
    }

    /// Variables occurring in the body, the universe excluded.
    pub fn variables(&self) -> BTreeSet<Variable> {
        let mut out: BTreeSet<Variable> = self.equations.iter().flat_map(|e| e.variables()).collect();
        out.extend(self.constraints.iter().map(|c| c.var.clone()).filter(|v| !v.is_universe()));
        out
    }

    pub fn is_boolean(&self) -> bool {
        self.head.is_empty()
    }

    /// Total number of symbols, used for sizing budgets.
    pub fn size(&self) -> usize {
        self.equations.iter().map(|e| e.size()).sum::<usize>() + self.constraints.len()
    }

    pub fn check_well_formed(&self) -> Result<(), ParseError> {
        let vars = self.variables();
        for h in &self.head {
            if h.is_universe() {
                return Err(ParseError::new(0, "the universe variable cannot be a head variable"));
            }
            if !vars.contains(h) {
                return Err(ParseError::new(0, format!("head variable {h} does not occur in the body")));
            }
        }
        if self.equations.iter().any(|e| e.rhs.is_empty()) {
            return Err(ParseError::new(0, "equation with empty right-hand side"));
        }
        Ok(())
    }
}

impl fmt::Display for FcCq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Ans(")?;
        for (k, h) in self.head.iter().enumerate() {
            if k > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{h}")?;
        }
        f.write_str(") :- ")?;
        let mut first = true;
        for e in &self.equations {
            if !first {
                f.write_str(", ")?;
            }
            first = false;
            write!(f, "{e}")?;
        }
        for c in &self.constraints {
            if !first {
                f.write_str(", ")?;
            }
            first = false;
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("syntax error at offset {pos}: {msg}")]
pub struct ParseError {
    pub pos: usize,
    pub msg: String,
}

impl ParseError {
    pub fn new(pos: usize, msg: impl Into<String>) -> Self {
        ParseError { pos, msg: msg.into() }
    }
}

pub fn parse_query(text: &str) -> Result<FcCq, ParseError> {
    let mut p = QueryParser { src: text.as_bytes(), pos: 0 };
    let q = p.query()?;
    q.check_well_formed()?;
    Ok(q)
}

struct QueryParser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl QueryParser<'_> {
    fn err(&self, msg: impl Into<String>) -> ParseError {
        ParseError::new(self.pos, msg)
    }

    fn ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, tok: &str) -> bool {
        self.ws();
        if self.src[self.pos..].starts_with(tok.as_bytes()) {
            self.pos += tok.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &str) -> Result<(), ParseError> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(self.err(format!("expected '{tok}'")))
        }
    }

    fn ident(&mut self) -> Result<Variable, ParseError> {
        self.ws();
        let start = self.pos;
        let first = self.src.get(self.pos).copied().ok_or_else(|| self.err("expected variable"))?;
        if !(first.is_ascii_alphabetic() || first == b'$') {
            return Err(self.err("expected variable"));
        }
        self.pos += 1;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        if name == "$" {
            return Err(self.err("empty reserved name"));
        }
        Ok(if name == "U" { Variable::Universe } else { Variable::named(name) })
    }

    fn query(&mut self) -> Result<FcCq, ParseError> {
        self.expect("Ans(")?;
        let mut head = Vec::new();
        if self.peek() != Some(b')') {
            head.push(self.ident()?);
            while self.eat(",") {
                head.push(self.ident()?);
            }
        }
        self.expect(")")?;
        self.expect(":-")?;
        let mut q = FcCq { head, ..FcCq::default() };
        loop {
            self.atom(&mut q)?;
            if !self.eat(",") {
                break;
            }
        }
        self.ws();
        if self.pos != self.src.len() {
            return Err(self.err("trailing input"));
        }
        Ok(q)
    }

    fn atom(&mut self, q: &mut FcCq) -> Result<(), ParseError> {
        let lhs = self.ident()?;
        if self.eat("=") {
            let mut rhs = Vec::new();
            loop {
                self.term(&mut rhs)?;
                if !self.eat(".") {
                    break;
                }
            }
            q.equations.push(WordEquation::new(lhs, Pattern(rhs)));
            return Ok(());
        }
        self.ws();
        if self.src[self.pos..].starts_with(b"in") {
            self.pos += 2;
            self.expect("/")?;
            let start = self.pos;
            while self.pos < self.src.len() && self.src[self.pos] != b'/' {
                if self.src[self.pos] == b'\\' {
                    self.pos += 1;
                }
                self.pos += 1;
            }
            if self.pos >= self.src.len() {
                return Err(self.err("unterminated regex"));
            }
            let body = std::str::from_utf8(&self.src[start..self.pos]).map_err(|_| self.err("regex is not UTF-8"))?;
            let regex = Regex::parse(body).map_err(|e| ParseError::new(start + e.pos, e.msg))?;
            self.pos += 1;
            q.constraints.push(RegexConstraint::new(lhs, regex));
            return Ok(());
        }
        Err(self.err("expected '=' or 'in'"))
    }

    fn term(&mut self, out: &mut Vec<Symbol>) -> Result<(), ParseError> {
        if self.peek() == Some(b'"') {
            self.pos += 1;
            let start = out.len();
            loop {
                match self.src.get(self.pos).copied() {
                    None => return Err(self.err("unterminated string")),
                    Some(b'"') => break,
                    Some(b'\\') => {
                        let c = *self.src.get(self.pos + 1).ok_or_else(|| self.err("dangling escape"))?;
                        out.push(Symbol::Letter(c));
                        self.pos += 2;
                    }
                    Some(c) => {
                        out.push(Symbol::Letter(c));
                        self.pos += 1;
                    }
                }
            }
            self.pos += 1;
            if out.len() == start {
                return Err(self.err("empty terminal string; use a regex constraint for ε"));
            }
            return Ok(());
        }
        out.push(Symbol::Var(self.ident()?));
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("variable {0} is not assigned")]
    Unbound(Variable),
    #[error("span {0} does not denote a factor of the word")]
    Range(Span),
    #[error("search space of 2^{needed:.1} exceeds the budget of 2^{budget:.1}")]
    Budget { needed: f64, budget: f64 },
    #[error("materializing {needed} more tuples exceeds the remaining budget of {left}")]
    TupleBudget { needed: usize, left: usize },
}

/// A value tuple of factors, one per head variable.
pub type Answer = Vec<Vec<u8>>;
pub type AnswerSet = BTreeSet<Answer>;

/// Pattern substitution restricted to a word: variables map to spans of `word`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Substitution {
    pub word: Vec<u8>,
    pub assignment: BTreeMap<Variable, Span>,
}

impl Substitution {
    pub fn new(word: &[u8]) -> Self {
        let mut assignment = BTreeMap::new();
        assignment.insert(Variable::Universe, Span::new(1, word.len() + 1));
        Substitution { word: word.to_vec(), assignment }
    }

    pub fn with(mut self, v: Variable, s: Span) -> Self {
        self.assignment.insert(v, s);
        self
    }

    pub fn value(&self, v: &Variable) -> Result<&[u8], EvalError> {
        let s = *self.assignment.get(v).ok_or_else(|| EvalError::Unbound(v.clone()))?;
        if s.start < 1 || s.start > s.end || s.end > self.word.len() + 1 {
            return Err(EvalError::Range(s));
        }
        Ok(&self.word[s.start - 1..s.end - 1])
    }

    pub fn apply(&self, p: &Pattern) -> Result<Vec<u8>, EvalError> {
        let mut out = Vec::new();
        for s in &p.0 {
            match s {
                Symbol::Letter(c) => out.push(*c),
                Symbol::Var(v) => out.extend_from_slice(self.value(v)?),
            }
        }
        Ok(out)
    }
}

/// Whether `sigma` satisfies every atom of the body of `q`.
pub fn satisfies(sigma: &Substitution, q: &FcCq) -> Result<bool, EvalError> {
    if sigma.assignment.get(&Variable::Universe) != Some(&Span::new(1, sigma.word.len() + 1)) {
        return Err(EvalError::Range(*sigma.assignment.get(&Variable::Universe).unwrap_or(&Span::new(1, 1))));
    }
    for e in &q.equations {
        if sigma.value(&e.lhs)? != sigma.apply(&e.rhs)?.as_slice() {
            return Ok(false);
        }
    }
    for c in &q.constraints {
        if !Nfa::compile(&c.regex).matches(sigma.value(&c.var)?) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Default oracle budget, in bits of the naive search space.
pub const DEFAULT_ORACLE_BUDGET: f64 = 128.0;

/// Reference evaluation by exhaustive search over factor assignments.
///
/// The search assigns every variable a factor of `w`, pruning as soon as an
/// atom is decided and deriving forced values from equations. Rejects inputs
/// whose naive search space `|vars| · log2 |factors|` exceeds `budget`.
pub fn oracle_eval(q: &FcCq, w: &[u8], budget: f64) -> Result<AnswerSet, EvalError> {
    let vars: Vec<Variable> = q.variables().into_iter().collect();
    let mut factors: BTreeSet<Vec<u8>> = BTreeSet::new();
    for i in 0..=w.len() {
        for j in i..=w.len() {
            factors.insert(w[i..j].to_vec());
        }
    }
    let needed = vars.len() as f64 * (factors.len() as f64).log2();
    if needed > budget {
        return Err(EvalError::Budget { needed, budget });
    }
    let id = |v: &Variable| -> Option<usize> { vars.iter().position(|x| x == v) };
    let sym = |s: &Symbol| match s {
        Symbol::Letter(c) => OSym::Letter(*c),
        Symbol::Var(Variable::Universe) => OSym::Word,
        Symbol::Var(v) => OSym::Var(id(v).unwrap()),
    };
    let eqs: Vec<(OSym, Vec<OSym>)> = q
        .equations
        .iter()
        .map(|e| (sym(&Symbol::Var(e.lhs.clone())), e.rhs.0.iter().map(sym).collect()))
        .collect();
    let cons: Vec<(OSym, Nfa)> = q
        .constraints
        .iter()
        .map(|c| (sym(&Symbol::Var(c.var.clone())), Nfa::compile(&c.regex)))
        .collect();
    // Variables that are never a left-hand side are branched on first.
    let mut order: Vec<usize> = (0..vars.len()).collect();
    order.sort_by_key(|&v| eqs.iter().any(|(l, _)| *l == OSym::Var(v)));
    let head: Vec<usize> = q.head.iter().map(|h| id(h).unwrap()).collect();
    let search = Oracle {
        w,
        factors: factors.iter().cloned().collect(),
        factor_set: factors.into_iter().collect(),
        eqs,
        cons,
        order,
        head,
    };
    let mut out = AnswerSet::new();
    search.run(vec![None; vars.len()], &mut out);
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum OSym {
    Letter(u8),
    Word,
    Var(usize),
}

struct Oracle<'a> {
    w: &'a [u8],
    factors: Vec<Vec<u8>>,
    factor_set: HashSet<Vec<u8>>,
    eqs: Vec<(OSym, Vec<OSym>)>,
    cons: Vec<(OSym, Nfa)>,
    order: Vec<usize>,
    head: Vec<usize>,
}

type Assign = Vec<Option<Vec<u8>>>;

impl Oracle<'_> {
    fn value<'b>(&'b self, a: &'b Assign, s: OSym) -> Option<&'b [u8]> {
        match s {
            OSym::Letter(_) => None,
            OSym::Word => Some(self.w),
            OSym::Var(v) => a[v].as_deref(),
        }
    }

    fn sym_len(&self, a: &Assign, s: OSym) -> Option<usize> {
        match s {
            OSym::Letter(_) => Some(1),
            _ => self.value(a, s).map(<[u8]>::len),
        }
    }

    fn set(&self, a: &mut Assign, v: usize, val: Vec<u8>) -> bool {
        if !self.factor_set.contains(&val) {
            return false;
        }
        a[v] = Some(val);
        true
    }

    /// Derives forced values and checks decided atoms. Returns false on conflict.
    fn propagate(&self, a: &mut Assign) -> bool {
        loop {
            let mut changed = false;
            for (lhs, rhs) in &self.eqs {
                let unknown: Vec<usize> = rhs
                    .iter()
                    .filter_map(|s| match s {
                        OSym::Var(v) if a[*v].is_none() => Some(*v),
                        _ => None,
                    })
                    .collect();
                let lval = self.value(a, *lhs).map(<[u8]>::to_vec);
                match (lval, unknown.first()) {
                    (Some(l), None) => {
                        let mut r = Vec::new();
                        for s in rhs {
                            match s {
                                OSym::Letter(c) => r.push(*c),
                                _ => r.extend_from_slice(self.value(a, *s).unwrap()),
                            }
                        }
                        if l != r {
                            return false;
                        }
                    }
                    (None, None) => {
                        let mut r = Vec::new();
                        for s in rhs {
                            match s {
                                OSym::Letter(c) => r.push(*c),
                                _ => r.extend_from_slice(self.value(a, *s).unwrap()),
                            }
                        }
                        let OSym::Var(x) = *lhs else { unreachable!() };
                        if !self.set(a, x, r) {
                            return false;
                        }
                        changed = true;
                    }
                    (Some(l), Some(&u)) if unknown.iter().all(|&x| x == u) => {
                        let known: usize = rhs.iter().filter_map(|s| self.sym_len(a, *s)).sum();
                        let k = unknown.len();
                        if known > l.len() || (l.len() - known) % k != 0 {
                            return false;
                        }
                        let len = (l.len() - known) / k;
                        let off: usize = rhs
                            .iter()
                            .take_while(|s| **s != OSym::Var(u))
                            .map(|s| self.sym_len(a, *s).unwrap())
                            .sum();
                        if !self.set(a, u, l[off..off + len].to_vec()) {
                            return false;
                        }
                        changed = true;
                    }
                    _ => {}
                }
            }
            if !changed {
                break;
            }
        }
        self.cons.iter().all(|(s, nfa)| self.value(a, *s).map_or(true, |v| nfa.matches(v)))
    }

    fn run(&self, mut a: Assign, out: &mut AnswerSet) {
        if !self.propagate(&mut a) {
            return;
        }
        match self.order.iter().find(|&&v| a[v].is_none()) {
            None => {
                out.insert(self.head.iter().map(|&h| a[h].clone().unwrap()).collect());
            }
            Some(&v) => {
                for f in &self.factors {
                    let mut b = a.clone();
                    b[v] = Some(f.clone());
                    self.run(b, out);
                }
            }
        }
    }
}
