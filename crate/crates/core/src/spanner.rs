//! Regex formulas with capture variables, SERCQs (joins of regex formulas
//! under string equality and projection), a reference evaluator, and the
//! compilation of synchronized SERCQs into FC[REG]-CQs that realize them.
//!
//! A query realizes a spanner when its answers on `w` are exactly the
//! encodings of the spanner's tuples, where a span `[i,j)` of `x` is encoded
//! by the prefix `x_P = w[1,i)` and the content `x_C = w[i,j)`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::cqdecomp::{hypergraph, weak_join_tree, JoinTree, QueryDecomposition};
use crate::hypergraph::is_join_tree;
use crate::normalize::{FreshNames, NormalizedFcCq};
use crate::pattern::Decomposition;
use crate::query::{FcCq, Pattern, RegexConstraint, Substitution, Symbol, Variable, WordEquation};
use crate::regex::{write_letter, Regex, RESERVED};
use crate::strings::Span;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RegexFormula {
    Empty,
    Epsilon,
    Letter(u8),
    Any,
    Concat(Vec<RegexFormula>),
    Union(Vec<RegexFormula>),
    Star(Box<RegexFormula>),
    Bind(String, Box<RegexFormula>),
}

/// Assignment of spans to the variables of a spanner.
pub type SpanTuple = BTreeMap<String, Span>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SpannerError {
    #[error("syntax error at offset {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("formula is not functional: {0}")]
    NotFunctional(String),
    #[error("formula is not synchronized: {0}")]
    NotSynchronized(String),
    #[error("variable {0} does not occur in any formula")]
    UnknownVariable(String),
    #[error("formula {0} is not of the form β · x{{β}} · β")]
    NotPseudoAcyclic(usize),
    #[error("more than {0} intermediate tuples")]
    Budget(usize),
}

impl RegexFormula {
    pub fn parse(text: &str) -> Result<RegexFormula, SpannerError> {
        let mut p = FormulaParser { src: text.as_bytes(), pos: 0 };
        let f = p.union()?;
        if p.peek().is_some() {
            return Err(p.error("unexpected character"));
        }
        Ok(f)
    }

    /// Variables bound anywhere in the formula.
    pub fn svars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            RegexFormula::Concat(v) | RegexFormula::Union(v) => v.iter().for_each(|f| f.collect_vars(out)),
            RegexFormula::Star(f) => f.collect_vars(out),
            RegexFormula::Bind(x, f) => {
                out.insert(x.clone());
                f.collect_vars(out);
            }
            _ => {}
        }
    }

    pub fn has_vars(&self) -> bool {
        match self {
            RegexFormula::Concat(v) | RegexFormula::Union(v) => v.iter().any(RegexFormula::has_vars),
            RegexFormula::Star(f) => f.has_vars(),
            RegexFormula::Bind(..) => true,
            _ => false,
        }
    }

    /// The reason the formula is not functional, if any: a binding under a
    /// star, a variable bound twice on one path, or a union whose branches
    /// bind different variables.
    pub fn functionality_violation(&self) -> Option<String> {
        match self {
            RegexFormula::Concat(v) => {
                let mut seen = BTreeSet::new();
                for f in v {
                    if let Some(e) = f.functionality_violation() {
                        return Some(e);
                    }
                    for x in f.svars() {
                        if !seen.insert(x.clone()) {
                            return Some(format!("{x} is bound twice"));
                        }
                    }
                }
                None
            }
            RegexFormula::Union(v) => {
                if let Some(e) = v.iter().find_map(RegexFormula::functionality_violation) {
                    return Some(e);
                }
                let first = v.first().map(RegexFormula::svars).unwrap_or_default();
                v.iter()
                    .any(|f| f.svars() != first)
                    .then(|| format!("branches of {self} bind different variables"))
            }
            RegexFormula::Star(f) => match f.svars().into_iter().next() {
                Some(x) => Some(format!("{x} is bound under a star")),
                None => None,
            },
            RegexFormula::Bind(x, f) => {
                if f.svars().contains(x) {
                    return Some(format!("{x} is bound twice"));
                }
                f.functionality_violation()
            }
            _ => None,
        }
    }

    pub fn is_functional(&self) -> bool {
        self.functionality_violation().is_none()
    }

    /// No union has a binding in any of its branches.
    pub fn is_synchronized(&self) -> bool {
        match self {
            RegexFormula::Union(v) => !v.iter().any(RegexFormula::has_vars),
            RegexFormula::Concat(v) => v.iter().all(RegexFormula::is_synchronized),
            RegexFormula::Star(f) | RegexFormula::Bind(_, f) => f.is_synchronized(),
            _ => true,
        }
    }

    /// The plain regular expression of a variable-free formula.
    pub fn to_regex(&self) -> Option<Regex> {
        Some(match self {
            RegexFormula::Empty => Regex::Empty,
            RegexFormula::Epsilon => Regex::Epsilon,
            RegexFormula::Letter(c) => Regex::Letter(*c),
            RegexFormula::Any => Regex::Any,
            RegexFormula::Concat(v) => Regex::Concat(v.iter().map(RegexFormula::to_regex).collect::<Option<_>>()?),
            RegexFormula::Union(v) => Regex::Union(v.iter().map(RegexFormula::to_regex).collect::<Option<_>>()?),
            RegexFormula::Star(f) => Regex::Star(Box::new(f.to_regex()?)),
            RegexFormula::Bind(..) => return None,
        })
    }

    fn precedence(&self) -> u8 {
        match self {
            RegexFormula::Union(v) if v.len() > 1 => 0,
            RegexFormula::Concat(v) if v.len() > 1 => 1,
            _ => 2,
        }
    }

    /// Number of nodes of the expression tree.
    pub fn size(&self) -> usize {
        1 + match self {
            RegexFormula::Concat(v) | RegexFormula::Union(v) => v.iter().map(RegexFormula::size).sum(),
            RegexFormula::Star(f) | RegexFormula::Bind(_, f) => f.size(),
            _ => 0,
        }
    }
}

impl fmt::Display for RegexFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let child = |f: &mut fmt::Formatter<'_>, r: &RegexFormula, min: u8| {
            if r.precedence() < min {
                write!(f, "({r})")
            } else {
                write!(f, "{r}")
            }
        };
        match self {
            RegexFormula::Empty => f.write_str("%"),
            RegexFormula::Epsilon => f.write_str("_"),
            RegexFormula::Letter(c) => write_letter(f, *c),
            RegexFormula::Any => f.write_str("S"),
            RegexFormula::Concat(v) if v.is_empty() => f.write_str("_"),
            RegexFormula::Concat(v) => {
                for (k, r) in v.iter().enumerate() {
                    // A letter right before a binding would merge into its name.
                    if k > 0 && matches!(r, RegexFormula::Bind(..)) {
                        f.write_str(" ")?;
                    }
                    child(f, r, 2)?;
                }
                Ok(())
            }
            RegexFormula::Union(v) if v.is_empty() => f.write_str("%"),
            RegexFormula::Union(v) => {
                for (k, r) in v.iter().enumerate() {
                    if k > 0 {
                        f.write_str("|")?;
                    }
                    child(f, r, 1)?;
                }
                Ok(())
            }
            RegexFormula::Star(r) => {
                child(f, r, 2)?;
                f.write_str("*")
            }
            RegexFormula::Bind(x, r) => write!(f, "{x}{{{r}}}"),
        }
    }
}

pub fn parse_regex_formula(text: &str) -> Result<RegexFormula, SpannerError> {
    RegexFormula::parse(text)
}

struct FormulaParser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl FormulaParser<'_> {
    fn error(&self, msg: &str) -> SpannerError {
        SpannerError::Syntax { pos: self.pos, msg: msg.to_string() }
    }

    fn peek(&mut self) -> Option<u8> {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        self.src.get(self.pos).copied()
    }

    fn union(&mut self) -> Result<RegexFormula, SpannerError> {
        let mut alts = vec![self.concat()?];
        while self.peek() == Some(b'|') {
            self.pos += 1;
            alts.push(self.concat()?);
        }
        Ok(if alts.len() == 1 { alts.pop().unwrap() } else { RegexFormula::Union(alts) })
    }

    fn concat(&mut self) -> Result<RegexFormula, SpannerError> {
        let mut items = Vec::new();
        while let Some(c) = self.peek() {
            if matches!(c, b'|' | b')' | b'}' | b';') {
                break;
            }
            items.push(self.postfix()?);
        }
        Ok(match items.len() {
            0 => RegexFormula::Epsilon,
            1 => items.pop().unwrap(),
            _ => RegexFormula::Concat(items),
        })
    }

    fn postfix(&mut self) -> Result<RegexFormula, SpannerError> {
        let mut r = self.atom()?;
        loop {
            match self.peek() {
                Some(b'*') => r = RegexFormula::Star(Box::new(r)),
                Some(b'+') => r = RegexFormula::Concat(vec![r.clone(), RegexFormula::Star(Box::new(r))]),
                Some(b'?') => r = RegexFormula::Union(vec![RegexFormula::Epsilon, r]),
                _ => return Ok(r),
            }
            self.pos += 1;
        }
    }

    /// An identifier immediately followed by `{`, or `None`.
    fn binding_name(&self) -> Option<(String, usize)> {
        let rest = &self.src[self.pos..];
        if !rest.first()?.is_ascii_alphabetic() {
            return None;
        }
        let len = rest.iter().take_while(|c| c.is_ascii_alphanumeric()).count();
        (rest.get(len) == Some(&b'{')).then(|| (String::from_utf8(rest[..len].to_vec()).unwrap(), len + 1))
    }

    fn atom(&mut self) -> Result<RegexFormula, SpannerError> {
        let c = self.peek().ok_or_else(|| self.error("unexpected end of formula"))?;
        if let Some((name, skip)) = self.binding_name() {
            self.pos += skip;
            let inner = self.union()?;
            if self.peek() != Some(b'}') {
                return Err(self.error("expected '}'"));
            }
            self.pos += 1;
            return Ok(RegexFormula::Bind(name, Box::new(inner)));
        }
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
            b'_' => Ok(RegexFormula::Epsilon),
            b'%' => Ok(RegexFormula::Empty),
            b'S' => Ok(RegexFormula::Any),
            b'\\' => {
                let c = *self.src.get(self.pos).ok_or_else(|| self.error("dangling escape"))?;
                self.pos += 1;
                Ok(RegexFormula::Letter(c))
            }
            c if RESERVED.contains(&c) || c == b'}' => {
                self.pos -= 1;
                Err(self.error("unexpected operator"))
            }
            c => Ok(RegexFormula::Letter(c)),
        }
    }
}

/// `π_Y ζ⁼… (γ₁ ⋈ … ⋈ γ_k)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sercq {
    pub projection: Vec<String>,
    pub equalities: Vec<(String, String)>,
    pub formulas: Vec<RegexFormula>,
}

impl Sercq {
    /// Parses `proj[x,y] eq[x,z] … join( F1 ; F2 ; … )`. Without `proj` every
    /// variable is kept, in sorted order.
    pub fn parse(text: &str) -> Result<Sercq, SpannerError> {
        let src = text.as_bytes();
        let mut pos = 0;
        let ws = |pos: &mut usize| {
            while *pos < src.len() && src[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
        };
        let err = |pos: usize, msg: &str| SpannerError::Syntax { pos, msg: msg.to_string() };
        let keyword = |pos: &mut usize, kw: &str| {
            ws(pos);
            if src[*pos..].starts_with(kw.as_bytes()) {
                *pos += kw.len();
                true
            } else {
                false
            }
        };
        let list = |pos: &mut usize| -> Result<Vec<String>, SpannerError> {
            let close = src[*pos..].iter().position(|&c| c == b']').ok_or_else(|| err(*pos, "expected ']'"))?;
            let body = std::str::from_utf8(&src[*pos..*pos + close]).unwrap();
            let names: Vec<String> = body.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
            if let Some(bad) = names.iter().find(|s| !is_name(s)) {
                return Err(err(*pos, &format!("invalid variable name '{bad}'")));
            }
            *pos += close + 1;
            Ok(names)
        };

        let mut projection = None;
        let mut equalities = Vec::new();
        loop {
            if keyword(&mut pos, "proj[") {
                if projection.is_some() {
                    return Err(err(pos, "duplicate projection"));
                }
                projection = Some(list(&mut pos)?);
            } else if keyword(&mut pos, "eq[") {
                let at = pos;
                match list(&mut pos)?.as_slice() {
                    [a, b] => equalities.push((a.clone(), b.clone())),
                    _ => return Err(err(at, "an equality takes two variables")),
                }
            } else {
                break;
            }
        }
        if !keyword(&mut pos, "join") {
            return Err(err(pos, "expected 'join('"));
        }
        ws(&mut pos);
        if src.get(pos) != Some(&b'(') {
            return Err(err(pos, "expected '('"));
        }
        pos += 1;
        let mut formulas = Vec::new();
        loop {
            let mut p = FormulaParser { src, pos };
            formulas.push(p.union()?);
            match p.peek() {
                Some(b';') => pos = p.pos + 1,
                Some(b')') => {
                    pos = p.pos + 1;
                    break;
                }
                _ => return Err(err(p.pos, "expected ';' or ')'")),
            }
        }
        ws(&mut pos);
        if pos < src.len() {
            return Err(err(pos, "trailing input"));
        }
        let mut q = Sercq { projection: Vec::new(), equalities, formulas };
        q.projection = projection.unwrap_or_else(|| q.svars().into_iter().collect());
        q.check_variables()?;
        Ok(q)
    }

    pub fn svars(&self) -> BTreeSet<String> {
        self.formulas.iter().flat_map(RegexFormula::svars).collect()
    }

    fn check_variables(&self) -> Result<(), SpannerError> {
        let vars = self.svars();
        let used = self.projection.iter().chain(self.equalities.iter().flat_map(|(a, b)| [a, b]));
        match used.into_iter().find(|x| !vars.contains(*x)) {
            Some(x) => Err(SpannerError::UnknownVariable(x.clone())),
            None => Ok(()),
        }
    }

    /// Rejects non-functional and non-synchronized formulas.
    pub fn check_synchronized(&self) -> Result<(), SpannerError> {
        for f in &self.formulas {
            if let Some(why) = f.functionality_violation() {
                return Err(SpannerError::NotFunctional(why));
            }
            if !f.is_synchronized() {
                return Err(SpannerError::NotSynchronized(f.to_string()));
            }
        }
        Ok(())
    }
}

fn is_name(s: &str) -> bool {
    let b = s.as_bytes();
    !b.is_empty() && b[0].is_ascii_alphabetic() && b.iter().all(|c| c.is_ascii_alphanumeric())
}

impl fmt::Display for Sercq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "proj[{}] ", self.projection.join(","))?;
        for (a, b) in &self.equalities {
            write!(f, "eq[{a},{b}] ")?;
        }
        f.write_str("join( ")?;
        for (k, g) in self.formulas.iter().enumerate() {
            if k > 0 {
                f.write_str(" ; ")?;
            }
            write!(f, "{g}")?;
        }
        f.write_str(" )")
    }
}

/// Default bound on the number of tuples materialized by the oracle.
pub const DEFAULT_SPANNER_BUDGET: usize = 1_000_000;

/// All matches of a functional formula on the whole of `w`.
pub fn formula_matches(g: &RegexFormula, w: &[u8], budget: usize) -> Result<BTreeSet<SpanTuple>, SpannerError> {
    if let Some(why) = g.functionality_violation() {
        return Err(SpannerError::NotFunctional(why));
    }
    let mut m = Matcher { w, memo: HashMap::new(), budget };
    let all = m.run(g, 0)?;
    Ok(all.iter().filter(|(j, _)| *j == w.len()).map(|(_, mu)| mu.clone()).collect())
}

type Partial = Vec<(usize, SpanTuple)>;

struct Matcher<'a> {
    w: &'a [u8],
    memo: HashMap<(*const RegexFormula, usize), Partial>,
    budget: usize,
}

impl Matcher<'_> {
    /// Every `(j, μ)` such that the formula matches `w[i..j)` under `μ`.
    fn run(&mut self, g: &RegexFormula, i: usize) -> Result<Partial, SpannerError> {
        let key = (g as *const RegexFormula, i);
        if let Some(r) = self.memo.get(&key) {
            return Ok(r.clone());
        }
        let w = self.w;
        let out: Partial = match g {
            RegexFormula::Empty => Vec::new(),
            RegexFormula::Epsilon => vec![(i, SpanTuple::new())],
            RegexFormula::Letter(c) => match w.get(i) {
                Some(d) if d == c => vec![(i + 1, SpanTuple::new())],
                _ => Vec::new(),
            },
            RegexFormula::Any => match i < w.len() {
                true => vec![(i + 1, SpanTuple::new())],
                false => Vec::new(),
            },
            RegexFormula::Concat(v) => {
                let mut cur = vec![(i, SpanTuple::new())];
                for f in v {
                    let mut next = BTreeSet::new();
                    for (k, mu) in &cur {
                        for (j, nu) in self.run(f, *k)? {
                            let mut m = mu.clone();
                            m.extend(nu);
                            next.insert((j, m));
                        }
                    }
                    self.spend(next.len())?;
                    cur = next.into_iter().collect();
                }
                cur
            }
            RegexFormula::Union(v) => {
                let mut all = BTreeSet::new();
                for f in v {
                    all.extend(self.run(f, i)?);
                }
                all.into_iter().collect()
            }
            RegexFormula::Star(f) => {
                // Functional, so the body binds nothing.
                let mut reach = BTreeSet::from([i]);
                let mut stack = vec![i];
                while let Some(k) = stack.pop() {
                    for (j, _) in self.run(f, k)? {
                        if reach.insert(j) {
                            stack.push(j);
                        }
                    }
                }
                reach.into_iter().map(|j| (j, SpanTuple::new())).collect()
            }
            RegexFormula::Bind(x, f) => self
                .run(f, i)?
                .into_iter()
                .map(|(j, mut mu)| {
                    mu.insert(x.clone(), Span::new(i + 1, j + 1));
                    (j, mu)
                })
                .collect(),
        };
        self.spend(out.len())?;
        self.memo.insert(key, out.clone());
        Ok(out)
    }

    fn spend(&mut self, n: usize) -> Result<(), SpannerError> {
        self.budget = self.budget.checked_sub(n).ok_or(SpannerError::Budget(n))?;
        Ok(())
    }
}

/// Reference semantics: matches of every formula, natural join, string
/// equality selection, projection.
pub fn spanner_eval_oracle(p: &Sercq, w: &[u8], budget: usize) -> Result<BTreeSet<SpanTuple>, SpannerError> {
    p.check_variables()?;
    let mut left = budget;
    let mut acc: Vec<SpanTuple> = vec![SpanTuple::new()];
    for g in &p.formulas {
        let ms = formula_matches(g, w, left)?;
        let mut next = Vec::new();
        for mu in &acc {
            for nu in &ms {
                if nu.iter().all(|(x, s)| mu.get(x).is_none_or(|t| t == s)) {
                    let mut m = mu.clone();
                    m.extend(nu.iter().map(|(x, s)| (x.clone(), *s)));
                    next.push(m);
                }
            }
        }
        left = left.checked_sub(next.len()).ok_or(SpannerError::Budget(budget))?;
        acc = next;
    }
    let content = |s: &Span| &w[s.start - 1..s.end - 1];
    Ok(acc
        .into_iter()
        .filter(|mu| p.equalities.iter().all(|(a, b)| content(&mu[a]) == content(&mu[b])))
        .map(|mu| p.projection.iter().map(|x| (x.clone(), mu[x])).collect())
        .collect())
}

pub fn prefix_var(x: &str) -> Variable {
    Variable::named(format!("{x}_P"))
}

pub fn content_var(x: &str) -> Variable {
    Variable::named(format!("{x}_C"))
}

pub fn suffix_var(x: &str) -> Variable {
    Variable::named(format!("{x}_S"))
}

/// The head of a realizing query: `x_P, x_C` for every projected `x`.
pub fn realizing_head(projection: &[String]) -> Vec<Variable> {
    projection.iter().flat_map(|x| [prefix_var(x), content_var(x)]).collect()
}

/// The substitution expressing `mu`: `x_P ↦ w[1,i)` and `x_C ↦ w[i,j)` for
/// `mu(x) = [i,j)`.
pub fn express(mu: &SpanTuple, w: &[u8]) -> Substitution {
    let mut s = Substitution::new(w);
    for (x, span) in mu {
        s = s.with(prefix_var(x), Span::new(1, span.start)).with(content_var(x), *span);
    }
    s
}

/// Reads spans back from prefix and content lengths. `None` if some value
/// is missing or the result falls outside `w`.
pub fn decode(sigma: &Substitution, vars: &BTreeSet<String>) -> Option<SpanTuple> {
    let mut mu = SpanTuple::new();
    for x in vars {
        let i = sigma.value(&prefix_var(x)).ok()?.len() + 1;
        let j = i + sigma.value(&content_var(x)).ok()?.len();
        if j > sigma.word.len() + 1 {
            return None;
        }
        mu.insert(x.clone(), Span::new(i, j));
    }
    Some(mu)
}

/// The answer tuple of a realizing query that corresponds to `mu`.
pub fn expressed_answer(mu: &SpanTuple, projection: &[String], w: &[u8]) -> Vec<Vec<u8>> {
    projection
        .iter()
        .flat_map(|x| {
            let s = mu[x];
            [w[..s.start - 1].to_vec(), w[s.start - 1..s.end - 1].to_vec()]
        })
        .collect()
}

/// Compiles a synchronized SERCQ into an FC[REG]-CQ realizing it.
///
/// Each formula is turned into a parse tree whose nodes get variables: the
/// root is `U`, a binding of `x` is `x_C`, anything else a fresh `$s…`.
/// Concatenations containing bindings are split (maximal variable-free runs
/// stay together, the rest is bracketed to the right) and emit
/// `v = v_l · v_r`; bindings emit `x_C = v_child`; variable-free subtrees
/// become regular constraints. Each binding also defines `x_P` as the
/// concatenation of the left siblings on its path to the root.
pub fn sercq_to_fccq(p: &Sercq) -> Result<FcCq, SpannerError> {
    p.check_variables()?;
    p.check_synchronized()?;
    let mut b = Builder { fresh: FreshNames::new("$s", &BTreeSet::new()), equations: Vec::new(), constraints: Vec::new() };
    for g in &p.formulas {
        match g {
            RegexFormula::Bind(x, _) => {
                b.equations.push(WordEquation::new(Variable::Universe, Pattern(vec![Symbol::Var(content_var(x))])));
                b.node(g, content_var(x), &[]);
            }
            _ => b.node(g, Variable::Universe, &[]),
        }
    }
    for (x, y) in &p.equalities {
        if x != y {
            b.equations.push(WordEquation::new(content_var(x), Pattern(vec![Symbol::Var(content_var(y))])));
        }
    }
    Ok(FcCq { head: realizing_head(&p.projection), equations: b.equations, constraints: b.constraints })
}

struct Builder {
    fresh: FreshNames,
    equations: Vec<WordEquation>,
    constraints: Vec<RegexConstraint>,
}

enum Part<'a> {
    Pure(Vec<&'a RegexFormula>),
    Node(&'a RegexFormula),
}

impl Builder {
    fn var_for(&mut self, part: &Part<'_>) -> Variable {
        match part {
            Part::Node(RegexFormula::Bind(x, _)) => content_var(x),
            _ => self.fresh.fresh(),
        }
    }

    /// Emits the atoms of the subtree `g` whose variable is `v`; `prefix`
    /// lists the variables whose concatenation precedes it.
    fn node(&mut self, g: &RegexFormula, v: Variable, prefix: &[Variable]) {
        if !g.has_vars() {
            self.constraints.push(RegexConstraint::new(v, g.to_regex().unwrap()));
            return;
        }
        match g {
            RegexFormula::Bind(x, c) => {
                if prefix.is_empty() {
                    self.constraints.push(RegexConstraint::epsilon(prefix_var(x)));
                } else {
                    self.equations.push(WordEquation::new(prefix_var(x), Pattern::from_vars(prefix.iter().cloned())));
                }
                let part = Part::Node(c);
                let vc = self.var_for(&part);
                self.equations.push(WordEquation::new(v, Pattern(vec![Symbol::Var(vc.clone())])));
                self.node(c, vc, prefix);
            }
            RegexFormula::Concat(items) => {
                let mut parts: Vec<Part<'_>> = Vec::new();
                for f in flatten(items) {
                    if f.has_vars() {
                        parts.push(Part::Node(f));
                    } else if let Some(Part::Pure(run)) = parts.last_mut() {
                        run.push(f);
                    } else {
                        parts.push(Part::Pure(vec![f]));
                    }
                }
                self.concat(&parts, v, prefix);
            }
            _ => unreachable!("bindings only occur under concatenations and bindings"),
        }
    }

    fn concat(&mut self, parts: &[Part<'_>], v: Variable, prefix: &[Variable]) {
        match parts {
            [] => unreachable!(),
            [Part::Node(g)] => self.node(g, v, prefix),
            [Part::Pure(run)] => {
                let r = Regex::Concat(run.iter().map(|f| f.to_regex().unwrap()).collect());
                self.constraints.push(RegexConstraint::new(v, r));
            }
            [first, rest @ ..] => {
                let vl = self.var_for(first);
                let vr = match rest {
                    [one] => self.var_for(one),
                    _ => self.fresh.fresh(),
                };
                self.equations.push(WordEquation::new(v, Pattern::from_vars([vl.clone(), vr.clone()])));
                self.concat(std::slice::from_ref(first), vl.clone(), prefix);
                let mut p = prefix.to_vec();
                p.push(vl);
                self.concat(rest, vr, &p);
            }
        }
    }
}

fn flatten(items: &[RegexFormula]) -> Vec<&RegexFormula> {
    items
        .iter()
        .flat_map(|f| match f {
            RegexFormula::Concat(v) => flatten(v),
            _ => vec![f],
        })
        .collect()
}

/// `(β₁, x, β₂, β₃)` if the formula is `β₁ · x{β₂} · β₃` with variable-free
/// `βᵢ`.
pub fn pseudo_acyclic_shape(g: &RegexFormula) -> Option<(Regex, String, Regex, Regex)> {
    let items = match g {
        RegexFormula::Concat(v) => flatten(v),
        _ => vec![g],
    };
    let k = items.iter().position(|f| f.has_vars())?;
    let RegexFormula::Bind(x, inner) = items[k] else { return None };
    if items[k + 1..].iter().any(|f| f.has_vars()) {
        return None;
    }
    let regex = |fs: &[&RegexFormula]| Regex::Concat(fs.iter().map(|f| f.to_regex().unwrap()).collect());
    Some((regex(&items[..k]), x.clone(), inner.to_regex()?, regex(&items[k + 1..])))
}

pub fn is_pseudo_acyclic(p: &Sercq) -> bool {
    p.formulas.iter().all(|g| pseudo_acyclic_shape(g).is_some())
}

/// Directly builds an acyclic realizing query for a pseudo-acyclic SERCQ:
/// `U = x_P · z` and `z = x_C · x_S` per variable, three constraints per
/// formula, and `x_C = y_C` along a spanning forest of the equality graph.
/// The join tree is assembled from these pieces without search.
pub fn pseudo_acyclic_to_fccq(p: &Sercq) -> Result<QueryDecomposition, SpannerError> {
    p.check_variables()?;
    let mut shapes = Vec::with_capacity(p.formulas.len());
    for (i, g) in p.formulas.iter().enumerate() {
        shapes.push(pseudo_acyclic_shape(g).ok_or(SpannerError::NotPseudoAcyclic(i))?);
    }
    let vars: Vec<String> = {
        let mut seen = BTreeSet::new();
        shapes.iter().filter(|s| seen.insert(s.1.clone())).map(|s| s.1.clone()).collect()
    };
    let mut fresh = FreshNames::new("$s", &BTreeSet::new());
    let mut equations = Vec::new();
    let mut nodes_of: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for x in &vars {
        let z = fresh.fresh();
        nodes_of.insert(x, (equations.len(), equations.len() + 1));
        equations.push(WordEquation::new(Variable::Universe, Pattern::from_vars([prefix_var(x), z.clone()])));
        equations.push(WordEquation::new(z, Pattern::from_vars([content_var(x), suffix_var(x)])));
    }
    let mut constraints = Vec::new();
    for (b1, x, b2, b3) in &shapes {
        for c in [
            RegexConstraint::new(prefix_var(x), b1.clone()),
            RegexConstraint::new(content_var(x), b2.clone()),
            RegexConstraint::new(suffix_var(x), b3.clone()),
        ] {
            if !constraints.contains(&c) {
                constraints.push(c);
            }
        }
    }

    // Spanning forest of the equality graph, oriented away from each root so
    // that every copy equation has its own right-hand side.
    let mut adj: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (a, b) in &p.equalities {
        if a != b {
            adj.entry(a).or_default().push(b);
            adj.entry(b).or_default().push(a);
        }
    }
    let mut tree_edges: Vec<(usize, usize)> = Vec::new();
    let mut components: Vec<usize> = Vec::new();
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    for x in &vars {
        if !seen.insert(x) {
            continue;
        }
        components.push(nodes_of[x.as_str()].0);
        let mut queue = std::collections::VecDeque::from([x.as_str()]);
        while let Some(u) = queue.pop_front() {
            for &c in adj.get(u).into_iter().flatten() {
                if seen.insert(c) {
                    let k = equations.len();
                    equations.push(WordEquation::new(content_var(u), Pattern(vec![Symbol::Var(content_var(c))])));
                    tree_edges.push((k, nodes_of[u].1));
                    tree_edges.push((k, nodes_of[c].1));
                    queue.push_back(c);
                }
            }
        }
    }
    tree_edges.extend(nodes_of.values().copied());
    for pair in components.windows(2) {
        tree_edges.push((pair[0], pair[1]));
    }

    let query = FcCq { head: realizing_head(&p.projection), equations: equations.clone(), constraints };
    let tree = JoinTree { nodes: equations.clone(), edges: tree_edges, block: (0..equations.len()).collect() };
    debug_assert!(is_join_tree(&hypergraph(&tree.nodes), &tree.edges));
    let weak = weak_join_tree(&query).expect("the assembled query is acyclic");
    let blocks = equations
        .iter()
        .map(|e| Decomposition { atoms: vec![e.clone()], root: e.lhs.clone(), introduced: BTreeSet::new() })
        .collect();
    Ok(QueryDecomposition {
        normalized: NormalizedFcCq { query: query.clone(), provenance: BTreeMap::new() },
        query2: query,
        tree,
        weak,
        blocks,
    })
}
