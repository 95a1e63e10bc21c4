//! Bracketings of terminal-free patterns, their binary decompositions,
//! concatenation trees, and the polynomial acyclicity decision with witness
//! construction (plain and under co-occurrence constraints).

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::hypergraph::gyo;
use crate::normalize::FreshNames;
use crate::query::{Pattern, Variable, WordEquation};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecompError {
    #[error("empty pattern")]
    EmptyPattern,
    #[error("equation is not normalized: {0}")]
    NotNormalized(String),
    #[error("constraint pair must consist of two distinct variables")]
    DegeneratePair,
}

/// A full binary parenthesization of a pattern.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Bracketing {
    Leaf(Variable),
    Concat(Box<Bracketing>, Box<Bracketing>),
}

impl Bracketing {
    pub fn leaf(name: &str) -> Bracketing {
        Bracketing::Leaf(Variable::named(name))
    }

    pub fn concat(l: Bracketing, r: Bracketing) -> Bracketing {
        Bracketing::Concat(Box::new(l), Box::new(r))
    }

    /// Parses `x`, `(b . b)`; whitespace is ignored.
    pub fn parse(text: &str) -> Option<Bracketing> {
        fn go(s: &[u8], pos: &mut usize) -> Option<Bracketing> {
            while s.get(*pos)?.is_ascii_whitespace() {
                *pos += 1;
            }
            if s[*pos] == b'(' {
                *pos += 1;
                let l = go(s, pos)?;
                while s.get(*pos)?.is_ascii_whitespace() {
                    *pos += 1;
                }
                if s[*pos] != b'.' {
                    return None;
                }
                *pos += 1;
                let r = go(s, pos)?;
                while s.get(*pos)?.is_ascii_whitespace() {
                    *pos += 1;
                }
                if s[*pos] != b')' {
                    return None;
                }
                *pos += 1;
                return Some(Bracketing::concat(l, r));
            }
            let start = *pos;
            while *pos < s.len() && (s[*pos].is_ascii_alphanumeric() || s[*pos] == b'_' || s[*pos] == b'$') {
                *pos += 1;
            }
            let name = std::str::from_utf8(&s[start..*pos]).ok()?;
            match name {
                "" => None,
                "U" => Some(Bracketing::Leaf(Variable::Universe)),
                _ => Some(Bracketing::leaf(name)),
            }
        }
        let mut pos = 0;
        let b = go(text.as_bytes(), &mut pos)?;
        text[pos..].trim().is_empty().then_some(b)
    }

    /// The pattern obtained by removing all brackets.
    pub fn leaves(&self) -> Vec<Variable> {
        let mut out = Vec::new();
        self.collect(&mut out);
        out
    }

    fn collect(&self, out: &mut Vec<Variable>) {
        match self {
            Bracketing::Leaf(v) => out.push(v.clone()),
            Bracketing::Concat(l, r) => {
                l.collect(out);
                r.collect(out);
            }
        }
    }

    /// Whether `(x·y)` or `(y·x)` is a sub-bracketing.
    pub fn contains_pair(&self, x: &Variable, y: &Variable) -> bool {
        match self {
            Bracketing::Leaf(_) => false,
            Bracketing::Concat(l, r) => {
                if let (Bracketing::Leaf(a), Bracketing::Leaf(b)) = (l.as_ref(), r.as_ref()) {
                    if (a == x && b == y) || (a == y && b == x) {
                        return true;
                    }
                }
                l.contains_pair(x, y) || r.contains_pair(x, y)
            }
        }
    }

    /// Every bracketing of a non-empty pattern.
    pub fn all(pattern: &[Variable]) -> Vec<Bracketing> {
        match pattern.len() {
            0 => Vec::new(),
            1 => vec![Bracketing::Leaf(pattern[0].clone())],
            n => (1..n)
                .flat_map(|s| {
                    let rights = Bracketing::all(&pattern[s..]);
                    Bracketing::all(&pattern[..s])
                        .into_iter()
                        .flat_map(move |l| rights.clone().into_iter().map(move |r| Bracketing::concat(l.clone(), r)))
                })
                .collect(),
        }
    }
}

impl fmt::Display for Bracketing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bracketing::Leaf(v) => write!(f, "{v}"),
            Bracketing::Concat(l, r) => write!(f, "({l}.{r})"),
        }
    }
}

/// Binary decomposition of `root = pattern`: one atom per distinct
/// sub-bracketing, with shared sub-bracketings sharing their variable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decomposition {
    pub atoms: Vec<WordEquation>,
    pub root: Variable,
    pub introduced: BTreeSet<Variable>,
}

impl Decomposition {
    /// Hyperedges of the atoms with the universe treated as a constant.
    pub fn hyperedges(&self) -> Vec<BTreeSet<Variable>> {
        self.atoms.iter().map(|a| a.variables()).collect()
    }

    pub fn is_acyclic(&self) -> bool {
        gyo(&self.hyperedges()).is_some()
    }

    /// Whether some atom contains both variables.
    pub fn has_pair(&self, x: &Variable, y: &Variable) -> bool {
        self.atoms.iter().any(|a| {
            let all: BTreeSet<&Variable> = std::iter::once(&a.lhs).chain(a.rhs.vars()).collect();
            all.contains(x) && all.contains(y)
        })
    }

    /// Rebuilds the bracketing represented by the decomposition.
    pub fn bracketing(&self) -> Bracketing {
        let defs: HashMap<&Variable, &WordEquation> = self.atoms.iter().map(|a| (&a.lhs, a)).collect();
        fn expand(v: &Variable, defs: &HashMap<&Variable, &WordEquation>, top: bool) -> Bracketing {
            match defs.get(v) {
                Some(a) if top || !a.lhs.is_universe() => {
                    let vars: Vec<&Variable> = a.rhs.vars().collect();
                    match vars.as_slice() {
                        [x] => expand(x, defs, false),
                        [x, y] => Bracketing::concat(expand(x, defs, false), expand(y, defs, false)),
                        _ => unreachable!("decomposition atoms are binary"),
                    }
                }
                _ => Bracketing::Leaf(v.clone()),
            }
        }
        expand(&self.root, &defs, true)
    }
}

impl fmt::Display for Decomposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, a) in self.atoms.iter().enumerate() {
            if k > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

/// Decomposes `b` with `root` as the variable of the whole bracketing.
pub fn decompose_bracketing(b: &Bracketing, root: Variable, fresh: &mut FreshNames) -> Decomposition {
    let mut names: HashMap<&Bracketing, Variable> = HashMap::new();
    let mut atoms = Vec::new();
    let mut introduced = BTreeSet::new();
    fn go<'a>(
        b: &'a Bracketing,
        root: Option<&Variable>,
        names: &mut HashMap<&'a Bracketing, Variable>,
        atoms: &mut Vec<WordEquation>,
        introduced: &mut BTreeSet<Variable>,
        fresh: &mut FreshNames,
    ) -> Variable {
        match b {
            Bracketing::Leaf(v) => v.clone(),
            Bracketing::Concat(l, r) => {
                if let Some(v) = names.get(b) {
                    return v.clone();
                }
                let lv = go(l, None, names, atoms, introduced, fresh);
                let rv = go(r, None, names, atoms, introduced, fresh);
                let v = match root {
                    Some(r) => r.clone(),
                    None => {
                        let z = fresh.fresh();
                        introduced.insert(z.clone());
                        z
                    }
                };
                atoms.push(WordEquation::new(v.clone(), Pattern::from_vars([lv, rv])));
                names.insert(b, v.clone());
                v
            }
        }
    }
    if let Bracketing::Leaf(x) = b {
        atoms.push(WordEquation::new(root.clone(), Pattern::from_vars([x.clone()])));
    } else {
        go(b, Some(&root), &mut names, &mut atoms, &mut introduced, fresh);
    }
    Decomposition { atoms, root, introduced }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConcatNode {
    pub label: Variable,
    pub children: Vec<usize>,
    pub parent: Option<usize>,
}

/// Pruned concatenation tree of a decomposition. Nodes are numbered in
/// breadth-first order from the root (node 0), left before right.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConcatTree {
    pub nodes: Vec<ConcatNode>,
    pub decomposition: Decomposition,
}

impl ConcatTree {
    pub fn new(d: &Decomposition) -> ConcatTree {
        let defs: HashMap<&Variable, Vec<Variable>> =
            d.atoms.iter().map(|a| (&a.lhs, a.rhs.vars().cloned().collect())).collect();
        // The deepest, then leftmost, occurrence of each label keeps its children.
        // It always sits below the kept occurrence of its parent label, so a
        // longest-path pass over the definition DAG finds it.
        let mut best: BTreeMap<&Variable, (usize, Vec<u8>)> = BTreeMap::new();
        best.insert(&d.root, (0, Vec::new()));
        let order = topological(&d.root, &defs);
        for v in &order {
            let Some((depth, path)) = best.get(v).cloned() else { continue };
            if let Some(children) = defs.get(v) {
                for (c, child) in children.iter().enumerate() {
                    let mut p = path.clone();
                    p.push(c as u8);
                    let cand = (depth + 1, p);
                    let better = match best.get(child) {
                        None => true,
                        Some((d0, p0)) => cand.0 > *d0 || (cand.0 == *d0 && cand.1 < *p0),
                    };
                    if better {
                        best.insert(child, cand);
                    }
                }
            }
        }
        let mut nodes = vec![ConcatNode { label: d.root.clone(), children: Vec::new(), parent: None }];
        let mut paths = vec![Vec::<u8>::new()];
        let mut k = 0;
        while k < nodes.len() {
            let label = nodes[k].label.clone();
            if let Some(children) = defs.get(&label) {
                if best.get(&label).map(|b| &b.1) == Some(&paths[k]) {
                    for (c, child) in children.iter().enumerate() {
                        let mut p = paths[k].clone();
                        p.push(c as u8);
                        nodes.push(ConcatNode { label: child.clone(), children: Vec::new(), parent: Some(k) });
                        paths.push(p);
                        let id = nodes.len() - 1;
                        nodes[k].children.push(id);
                    }
                }
            }
            k += 1;
        }
        ConcatTree { nodes, decomposition: d.clone() }
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn depth(&self, mut v: usize) -> usize {
        let mut d = 0;
        while let Some(p) = self.nodes[v].parent {
            v = p;
            d += 1;
        }
        d
    }

    /// Nodes with a child labeled `x`.
    pub fn x_parents(&self, x: &Variable) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&v| self.nodes[v].children.iter().any(|&c| self.nodes[c].label == *x))
            .collect()
    }

    /// Whether the `x`-parents form a connected subtree.
    pub fn is_x_localized(&self, x: &Variable) -> bool {
        let ps = self.x_parents(x);
        if ps.len() <= 1 {
            return true;
        }
        let set: BTreeSet<usize> = ps.iter().copied().collect();
        let inner = ps.iter().filter(|&&v| self.nodes[v].parent.is_some_and(|p| set.contains(&p))).count();
        inner + 1 == ps.len()
    }

    /// Labels of all nodes, the universe excluded.
    pub fn variables(&self) -> BTreeSet<Variable> {
        self.nodes.iter().map(|n| n.label.clone()).filter(|v| !v.is_universe()).collect()
    }

    pub fn is_localized(&self) -> bool {
        self.variables().iter().all(|x| self.is_x_localized(x))
    }

    /// The join tree read off the concatenation tree: non-leaf nodes become
    /// their atoms, leaves are dropped. Returns (atoms, edges).
    pub fn join_tree(&self) -> (Vec<WordEquation>, Vec<(usize, usize)>) {
        let inner: Vec<usize> = (0..self.nodes.len()).filter(|&v| !self.nodes[v].children.is_empty()).collect();
        let pos: HashMap<usize, usize> = inner.iter().enumerate().map(|(k, &v)| (v, k)).collect();
        let atoms = inner
            .iter()
            .map(|&v| {
                let n = &self.nodes[v];
                WordEquation::new(
                    n.label.clone(),
                    Pattern::from_vars(n.children.iter().map(|&c| self.nodes[c].label.clone())),
                )
            })
            .collect();
        let edges = inner
            .iter()
            .filter_map(|&v| self.nodes[v].parent.map(|p| (pos[&v], pos[&p])))
            .collect();
        (atoms, edges)
    }

    pub fn to_dot(&self, name: &str) -> String {
        let mut s = format!("digraph {name} {{\n  node [shape=plaintext];\n");
        self.write_dot_body(&mut s, "", "  ");
        s.push_str("}\n");
        s
    }

    pub(crate) fn write_dot_body(&self, s: &mut String, prefix: &str, indent: &str) {
        for (k, n) in self.nodes.iter().enumerate() {
            s.push_str(&format!("{indent}{prefix}n{k} [label=\"v_{} ({})\"];\n", k + 1, n.label));
        }
        for (k, n) in self.nodes.iter().enumerate() {
            for &c in &n.children {
                s.push_str(&format!("{indent}{prefix}n{k} -> {prefix}n{c};\n"));
            }
        }
    }
}

fn topological<'a>(root: &'a Variable, defs: &'a HashMap<&'a Variable, Vec<Variable>>) -> Vec<&'a Variable> {
    fn visit<'a>(
        v: &'a Variable,
        defs: &'a HashMap<&'a Variable, Vec<Variable>>,
        seen: &mut BTreeSet<&'a Variable>,
        out: &mut Vec<&'a Variable>,
    ) {
        if !seen.insert(v) {
            return;
        }
        if let Some(cs) = defs.get(v) {
            for c in cs {
                visit(c, defs, seen, out);
            }
        }
        out.push(v);
    }
    let mut out = Vec::new();
    visit(root, defs, &mut BTreeSet::new(), &mut out);
    out.reverse();
    out
}

/// Whether the decomposition of `b` (rooted at the universe) is acyclic,
/// decided by x-locality on its concatenation tree.
pub fn is_acyclic_bracketing(b: &Bracketing) -> bool {
    let taken: BTreeSet<Variable> = b.leaves().into_iter().collect();
    let mut fresh = FreshNames::new("$b", &taken);
    let d = decompose_bracketing(b, Variable::Universe, &mut fresh);
    ConcatTree::new(&d).is_localized()
}

/// Unordered pairs of distinct variables that must co-occur in some atom.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConstraintSet {
    pairs: BTreeSet<(Variable, Variable)>,
}

impl ConstraintSet {
    pub fn new() -> Self {
        ConstraintSet::default()
    }

    pub fn from_pairs<I: IntoIterator<Item = (Variable, Variable)>>(pairs: I) -> Result<Self, DecompError> {
        let mut c = ConstraintSet::new();
        for (x, y) in pairs {
            c.insert(x, y)?;
        }
        Ok(c)
    }

    pub fn insert(&mut self, x: Variable, y: Variable) -> Result<(), DecompError> {
        if x == y {
            return Err(DecompError::DegeneratePair);
        }
        self.pairs.insert(if x < y { (x, y) } else { (y, x) });
        Ok(())
    }

    pub fn pairs(&self) -> impl Iterator<Item = &(Variable, Variable)> {
        self.pairs.iter()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn is_disjoint(&self) -> bool {
        let mut seen = BTreeSet::new();
        self.pairs.iter().all(|(x, y)| seen.insert(x) && seen.insert(y))
    }
}

/// Interval tables of the bottom-up acyclicity algorithm over a pattern.
struct Table {
    n: usize,
    /// Content class of `α[i..=k]`: equal classes iff equal factors.
    class: Vec<u32>,
    /// Variable-set bitmasks of `α[i..=k]`, `words` u64 per interval.
    masks: Vec<u64>,
    words: usize,
    in_v: Vec<bool>,
    /// `edge[(i*n+k)*n + j]`: split of `[i,k]` after position `j`.
    edge: Vec<bool>,
    /// For each position, the bitmask of its constraint pair, if any.
    pair_of: Vec<Option<Vec<u64>>>,
}

impl Table {
    fn at(&self, i: usize, k: usize) -> usize {
        i * self.n + k
    }

    fn same(&self, a: usize, b: usize, c: usize, d: usize) -> bool {
        self.class[self.at(a, b)] == self.class[self.at(c, d)]
    }

    fn mask(&self, i: usize, k: usize) -> &[u64] {
        let o = self.at(i, k) * self.words;
        &self.masks[o..o + self.words]
    }

    fn disjoint(&self, i: usize, j: usize, k: usize) -> bool {
        self.mask(i, j).iter().zip(self.mask(j + 1, k)).all(|(a, b)| a & b == 0)
    }

    fn has_edge(&self, i: usize, j: usize, k: usize) -> bool {
        self.edge[self.at(i, k) * self.n + j]
    }

    /// Left child `[i,j]` can be split at `x` with one part equal to `[j+1,k]`.
    fn left_matches(&self, i: usize, j: usize, k: usize) -> Vec<usize> {
        let len = k - j;
        let mut cands = Vec::with_capacity(2);
        if i + len - 1 < j {
            cands.push(i + len - 1);
        }
        if j >= i + len {
            cands.push(j - len);
        }
        cands.sort_unstable();
        cands.retain(|&x| {
            self.has_edge(i, x, j) && (self.same(i, x, j + 1, k) || self.same(x + 1, j, j + 1, k))
        });
        cands
    }

    /// Right child `[j+1,k]` can be split at `x` with one part equal to `[i,j]`.
    fn right_matches(&self, i: usize, j: usize, k: usize) -> Vec<usize> {
        let len = j - i + 1;
        let mut cands = Vec::with_capacity(2);
        if j + len < k {
            cands.push(j + len);
        }
        if k >= j + 1 + len {
            cands.push(k - len);
        }
        cands.sort_unstable();
        cands.retain(|&x| {
            self.has_edge(j + 1, x, k) && (self.same(j + 1, x, i, j) || self.same(x + 1, k, i, j))
        });
        cands
    }

    fn is_acyclic(&self, i: usize, j: usize, k: usize) -> bool {
        self.same(i, j, j + 1, k)
            || self.disjoint(i, j, k)
            || !self.left_matches(i, j, k).is_empty()
            || !self.right_matches(i, j, k).is_empty()
    }

    fn extra_check(&self, i: usize, j: usize, k: usize) -> bool {
        if i == j {
            if let Some(p) = &self.pair_of[i] {
                return self.mask(j + 1, k) == p.as_slice();
            }
        } else if j + 1 == k {
            if let Some(p) = &self.pair_of[k] {
                return self.mask(i, j) == p.as_slice();
            }
        }
        true
    }

    fn build(alpha: &[usize], nvars: usize, pair_of: Vec<Option<usize>>, pair_masks: Vec<Vec<u64>>) -> Table {
        let n = alpha.len();
        let words = nvars.div_ceil(64).max(1);
        let mut class = vec![u32::MAX; n * n];
        let mut masks = vec![0u64; n * n * words];
        let mut ids: HashMap<&[usize], u32> = HashMap::new();
        for i in 0..n {
            let mut m = vec![0u64; words];
            for k in i..n {
                m[alpha[k] / 64] |= 1 << (alpha[k] % 64);
                let next = ids.len() as u32;
                class[i * n + k] = *ids.entry(&alpha[i..=k]).or_insert(next);
                masks[(i * n + k) * words..(i * n + k + 1) * words].copy_from_slice(&m);
            }
        }
        let pair_of: Vec<Option<Vec<u64>>> = pair_of.into_iter().map(|p| p.map(|p| pair_masks[p].clone())).collect();
        let mut t = Table {
            n,
            class,
            masks,
            words,
            in_v: vec![false; n * n],
            edge: vec![false; n * n * n],
            pair_of,
        };
        for i in 0..n {
            let at = t.at(i, i);
            t.in_v[at] = true;
        }
        for i in 0..n.saturating_sub(1) {
            let allowed = match (&t.pair_of[i], &t.pair_of[i + 1]) {
                (None, None) => true,
                (Some(_), Some(_)) => alpha[i] != alpha[i + 1] && t.mask(i, i + 1) == t.pair_of[i].as_ref().unwrap().as_slice(),
                _ => false,
            };
            if allowed {
                let at = t.at(i, i + 1);
                t.in_v[at] = true;
                t.edge[at * n + i] = true;
            }
        }
        // Every test reads strictly shorter intervals, so one pass in order
        // of increasing length reaches the fixpoint.
        for len in 3..=n {
            for i in 0..=n - len {
                let k = i + len - 1;
                for j in i..k {
                    if t.in_v[t.at(i, j)]
                        && t.in_v[t.at(j + 1, k)]
                        && t.is_acyclic(i, j, k)
                        && t.extra_check(i, j, k)
                    {
                        let at = t.at(i, k);
                        t.edge[at * n + j] = true;
                        t.in_v[at] = true;
                    }
                }
            }
        }
        t
    }

    fn accepts(&self) -> bool {
        self.n > 0 && self.in_v[self.at(0, self.n - 1)]
    }
}

/// Derives a witness bracketing from the edge relation. Every factor content
/// gets a single split, so equal factors are bracketed alike; a parent whose
/// edge relies on a child split fixes that split, and conflicting demands
/// are resolved by backtracking.
struct Deriver<'a> {
    t: &'a Table,
    vars: &'a [Variable],
    alpha: &'a [usize],
    choice: HashMap<u32, usize>,
    log: Vec<u32>,
}

impl Deriver<'_> {
    fn undo(&mut self, mark: usize) {
        for c in self.log.drain(mark..) {
            self.choice.remove(&c);
        }
    }

    /// Depth-first search over pending goals `(i, k, required split)`.
    /// Forced goals are handled first since they do not branch.
    fn settle(&mut self, mut goals: Vec<(usize, usize, Option<usize>)>) -> bool {
        let t = self.t;
        let pick = goals
            .iter()
            .position(|&(i, k, r)| i == k || r.is_some() || self.choice.contains_key(&t.class[t.at(i, k)]))
            .unwrap_or(0);
        if goals.is_empty() {
            return true;
        }
        let (i, k, req) = goals.swap_remove(pick);
        if i == k {
            return self.settle(goals);
        }
        let c = t.class[t.at(i, k)];
        if let Some(&off) = self.choice.get(&c) {
            return req.is_none_or(|r| r - i == off) && self.settle(goals);
        }
        let splits: Vec<usize> = match req {
            Some(r) => vec![r],
            None => (i..k).collect(),
        };
        for j in splits.into_iter().filter(|&j| t.has_edge(i, j, k)) {
            let mut options = Vec::new();
            if k == i + 1 || t.same(i, j, j + 1, k) || t.disjoint(i, j, k) {
                options.push((None, None));
            }
            options.extend(t.left_matches(i, j, k).into_iter().map(|x| (Some(x), None)));
            options.extend(t.right_matches(i, j, k).into_iter().map(|x| (None, Some(x))));
            for (l, r) in options {
                let mark = self.log.len();
                self.choice.insert(c, j - i);
                self.log.push(c);
                let mut next = goals.clone();
                next.push((i, j, l));
                next.push((j + 1, k, r));
                if self.settle(next) {
                    return true;
                }
                self.undo(mark);
            }
        }
        false
    }

    fn build(&self, i: usize, k: usize) -> Bracketing {
        if i == k {
            return Bracketing::Leaf(self.vars[self.alpha[i]].clone());
        }
        let j = i + self.choice[&self.t.class[self.t.at(i, k)]];
        Bracketing::concat(self.build(i, j), self.build(j + 1, k))
    }
}

fn index_pattern(alpha: &[Variable]) -> (Vec<Variable>, Vec<usize>) {
    let mut vars: Vec<Variable> = Vec::new();
    let ids = alpha
        .iter()
        .map(|v| match vars.iter().position(|x| x == v) {
            Some(p) => p,
            None => {
                vars.push(v.clone());
                vars.len() - 1
            }
        })
        .collect();
    (vars, ids)
}

fn solve(alpha: &[Variable], c: &ConstraintSet) -> Option<Bracketing> {
    let (vars, ids) = index_pattern(alpha);
    let words = vars.len().div_ceil(64).max(1);
    let mut pair_masks = Vec::new();
    let mut pair_of = vec![None; alpha.len()];
    for (x, y) in c.pairs() {
        let (px, py) = (vars.iter().position(|v| v == x)?, vars.iter().position(|v| v == y)?);
        let mut m = vec![0u64; words];
        m[px / 64] |= 1 << (px % 64);
        m[py / 64] |= 1 << (py % 64);
        for (pos, &id) in ids.iter().enumerate() {
            if id == px || id == py {
                pair_of[pos] = Some(pair_masks.len());
            }
        }
        pair_masks.push(m);
    }
    let t = Table::build(&ids, vars.len(), pair_of, pair_masks);
    if !t.accepts() {
        return None;
    }
    let mut d = Deriver { t: &t, vars: &vars, alpha: &ids, choice: HashMap::new(), log: Vec::new() };
    let n = alpha.len();
    assert!(d.settle(vec![(0, n - 1, None)]), "accepted pattern without a consistent derivation: {alpha:?}");
    Some(d.build(0, n - 1))
}

/// Decides acyclicity of a terminal-free pattern and returns a witness
/// bracketing whose decomposition is acyclic.
pub fn pattern_acyclic_bracketing(alpha: &[Variable]) -> Result<Option<Bracketing>, DecompError> {
    if alpha.is_empty() {
        return Err(DecompError::EmptyPattern);
    }
    Ok(solve(alpha, &ConstraintSet::new()))
}

/// Decides acyclicity of a terminal-free pattern; the witness is returned as
/// the concatenation tree of its decomposition rooted at the universe.
pub fn pattern_acyclic(alpha: &[Variable]) -> Result<Option<ConcatTree>, DecompError> {
    Ok(pattern_acyclic_bracketing(alpha)?.map(|b| {
        let taken = alpha.iter().cloned().collect();
        let d = decompose_bracketing(&b, Variable::Universe, &mut FreshNames::new("$z", &taken));
        ConcatTree::new(&d)
    }))
}

/// Acyclic bracketing in which every pair of `c` occurs as `(x·y)` or `(y·x)`.
pub fn constrained_bracketing(alpha: &[Variable], c: &ConstraintSet) -> Result<Option<Bracketing>, DecompError> {
    if alpha.is_empty() {
        return Err(DecompError::EmptyPattern);
    }
    if !c.is_disjoint() {
        return Ok(None);
    }
    Ok(solve(alpha, c))
}

/// [`constrained_bracketing`] returned as a concatenation tree rooted at the universe.
pub fn constrained_pattern_acyclic(alpha: &[Variable], c: &ConstraintSet) -> Result<Option<ConcatTree>, DecompError> {
    Ok(constrained_bracketing(alpha, c)?.map(|b| {
        let taken = alpha.iter().cloned().collect();
        let d = decompose_bracketing(&b, Variable::Universe, &mut FreshNames::new("$z", &taken));
        ConcatTree::new(&d)
    }))
}

/// Decomposes a normalized equation `z = α` into an acyclic decomposition in
/// which every pair of `c` shares an atom.
pub fn atom_decompose(
    eq: &WordEquation,
    c: &ConstraintSet,
    fresh: &mut FreshNames,
) -> Result<Option<Decomposition>, DecompError> {
    let alpha = eq
        .rhs
        .as_vars()
        .filter(|a| !a.is_empty())
        .ok_or_else(|| DecompError::NotNormalized(eq.to_string()))?;
    if alpha.contains(&eq.lhs) || alpha.contains(&Variable::Universe) {
        return Err(DecompError::NotNormalized(eq.to_string()));
    }
    let z = &eq.lhs;
    if alpha.len() <= 2 {
        // The equation is its own and only decomposition.
        let all = std::iter::once(z).chain(&alpha).collect::<BTreeSet<_>>();
        let ok = c.pairs().all(|(x, y)| all.contains(x) && all.contains(y));
        return Ok(ok.then(|| Decomposition { atoms: vec![eq.clone()], root: z.clone(), introduced: BTreeSet::new() }));
    }
    let mut anchors = Vec::new();
    let mut rest = Vec::new();
    for (x, y) in c.pairs() {
        if x == z {
            anchors.push(y.clone());
        } else if y == z {
            anchors.push(x.clone());
        } else {
            rest.push((x.clone(), y.clone()));
        }
    }
    let bracketing = match anchors.as_slice() {
        [] => {
            let rest = ConstraintSet::from_pairs(rest)?;
            match constrained_bracketing(&alpha, &rest)? {
                Some(b) => b,
                None => return Ok(None),
            }
        }
        [y] => {
            let i = alpha.iter().take_while(|v| *v == y).count();
            if i == alpha.len() {
                if !rest.is_empty() {
                    return Ok(None);
                }
                let mut b = Bracketing::Leaf(y.clone());
                for _ in 1..alpha.len() {
                    b = Bracketing::concat(b, Bracketing::Leaf(y.clone()));
                }
                b
            } else {
                let j = alpha.iter().rev().take_while(|v| *v == y).count();
                let beta = &alpha[i..alpha.len() - j];
                if i + j == 0 || beta.contains(y) {
                    return Ok(None);
                }
                // A pair {y, x} can only be met by the innermost peeling atom,
                // which requires the core to be exactly x.
                let (with_y, others): (Vec<_>, Vec<_>) = rest.into_iter().partition(|(a, b)| a == y || b == y);
                match with_y.as_slice() {
                    [] => {}
                    [(a, b)] => {
                        let x = if a == y { b } else { a };
                        if beta != [x.clone()] {
                            return Ok(None);
                        }
                    }
                    _ => return Ok(None),
                }
                let Some(mut b) = constrained_bracketing(beta, &ConstraintSet::from_pairs(others)?)? else {
                    return Ok(None);
                };
                for _ in 0..i {
                    b = Bracketing::concat(Bracketing::Leaf(y.clone()), b);
                }
                for _ in 0..j {
                    b = Bracketing::concat(b, Bracketing::Leaf(y.clone()));
                }
                b
            }
        }
        _ => return Ok(None),
    };
    Ok(Some(decompose_bracketing(&bracketing, z.clone(), fresh)))
}

/// Convenience: variables named by the given identifiers.
pub fn vars(names: &[&str]) -> Vec<Variable> {
    names.iter().map(|n| if *n == "U" { Variable::Universe } else { Variable::named(*n) }).collect()
}
