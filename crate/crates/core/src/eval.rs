//! Evaluation of decomposed queries: atom relations over factor ids, full
//! semi-join reduction along the join tree, model checking, and answer
//! enumeration in lexicographic order.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use crate::cqdecomp::QueryDecomposition;
use crate::query::{Answer, AnswerSet, EvalError, FcCq, RegexConstraint, Symbol, Variable, WordEquation};
use crate::regex::Nfa;
use crate::strings::{FactorId, Span, WordIndex};

/// Default cap on the number of materialized tuples.
pub const DEFAULT_TUPLE_BUDGET: usize = 20_000_000;

/// Factor id of every span, stored by start and length.
pub struct SpanIds {
    offsets: Vec<usize>,
    ids: Vec<FactorId>,
}

impl SpanIds {
    pub fn new(idx: &WordIndex) -> Self {
        let n = idx.len();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut ids = Vec::with_capacity((n + 1) * (n + 2) / 2);
        for i in 0..=n {
            offsets.push(ids.len());
            for l in 0..=n - i {
                ids.push(if l == 0 { 0 } else { idx.factor_id_unchecked(Span::new(i + 1, i + 1 + l)) });
            }
        }
        SpanIds { offsets, ids }
    }

    /// Id of the factor starting at 0-based `i` with length `l`.
    pub fn get(&self, i: usize, l: usize) -> FactorId {
        self.ids[self.offsets[i] + l]
    }
}

/// Ids of the factors in the language of `c`, as a membership table.
pub fn constraint_domain(c: &RegexConstraint, idx: &WordIndex, ids: &SpanIds) -> Vec<bool> {
    let nfa = Nfa::compile(&c.regex);
    let w = idx.word();
    let mut ok = vec![false; idx.factor_count()];
    for i in 0..=w.len() {
        for (l, acc) in nfa.accepting_prefixes(&w[i..]).into_iter().enumerate() {
            if acc {
                ok[ids.get(i, l) as usize] = true;
            }
        }
    }
    ok
}

/// A materialized relation over factor ids. Columns are the distinct
/// non-universe variables of the atom in order of appearance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Relation {
    pub vars: Vec<Variable>,
    data: Vec<FactorId>,
}

impl Relation {
    fn new(vars: Vec<Variable>) -> Self {
        Relation { vars, data: Vec::new() }
    }

    pub fn arity(&self) -> usize {
        self.vars.len()
    }

    pub fn len(&self) -> usize {
        if self.vars.is_empty() {
            self.data.len()
        } else {
            self.data.len() / self.arity()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn rows(&self) -> Vec<&[FactorId]> {
        if self.vars.is_empty() {
            return self.data.iter().map(|_| &[][..]).collect();
        }
        self.data.chunks(self.arity()).collect()
    }

    fn push(&mut self, row: &[FactorId]) {
        if self.vars.is_empty() {
            // Nullary relations hold a marker per (single) row.
            if self.data.is_empty() {
                self.data.push(0);
            }
        } else {
            self.data.extend_from_slice(row);
        }
    }

    fn column(&self, v: &Variable) -> Option<usize> {
        self.vars.iter().position(|x| x == v)
    }

    fn retain(&mut self, mut keep: impl FnMut(&[FactorId]) -> bool) {
        if self.vars.is_empty() {
            if !self.data.is_empty() && !keep(&[]) {
                self.data.clear();
            }
            return;
        }
        let a = self.arity();
        let mut out = Vec::with_capacity(self.data.len());
        for row in self.data.chunks(a) {
            if keep(row) {
                out.extend_from_slice(row);
            }
        }
        self.data = out;
    }

    fn dedup(&mut self) {
        if self.vars.is_empty() {
            return;
        }
        let a = self.arity();
        let mut rows: Vec<&[FactorId]> = self.data.chunks(a).collect();
        rows.sort_unstable();
        rows.dedup();
        self.data = rows.concat();
    }

    /// Values of column `v`, sorted and distinct.
    pub fn project(&self, v: &Variable) -> Vec<FactorId> {
        let c = self.column(v).expect("projection column");
        let mut out: Vec<FactorId> = self.data.chunks(self.arity()).map(|r| r[c]).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// `self ⋉ other`.
    fn semijoin(&mut self, other: &Relation) {
        let shared: Vec<(usize, usize)> = self
            .vars
            .iter()
            .enumerate()
            .filter_map(|(i, v)| other.column(v).map(|j| (i, j)))
            .collect();
        if shared.is_empty() {
            if other.is_empty() {
                self.data.clear();
            }
            return;
        }
        let key = |row: &[FactorId], cols: &mut dyn Iterator<Item = usize>| {
            cols.fold(0u128, |acc, c| (acc << 32) | row[c] as u128)
        };
        let keys: HashSet<u128> = other
            .data
            .chunks(other.arity())
            .map(|r| key(r, &mut shared.iter().map(|&(_, j)| j)))
            .collect();
        self.retain(|r| keys.contains(&key(r, &mut shared.iter().map(|&(i, _)| i))));
    }
}

/// Domains of constrained variables; unconstrained variables are absent.
pub type Filters = BTreeMap<Variable, Vec<bool>>;

fn allowed(filters: &Filters, v: &Variable, id: FactorId) -> bool {
    filters.get(v).is_none_or(|d| d[id as usize])
}

/// Relation of a binary or copy equation, with the constraint filters of its
/// variables checked while generating tuples.
pub fn materialize(
    eq: &WordEquation,
    idx: &WordIndex,
    ids: &SpanIds,
    filters: &Filters,
    budget: &mut usize,
) -> Result<Relation, EvalError> {
    let n = idx.len();
    let whole = ids.get(0, n);
    let slots: Vec<&Variable> = std::iter::once(&eq.lhs)
        .chain(eq.rhs.0.iter().map(|s| match s {
            Symbol::Var(v) => v,
            Symbol::Letter(_) => panic!("materialize expects terminal-free equations"),
        }))
        .collect();
    assert!(slots.len() <= 3, "materialize expects binary equations");
    let mut vars: Vec<Variable> = Vec::new();
    for v in &slots {
        if !v.is_universe() && !vars.contains(v) {
            vars.push((*v).clone());
        }
    }
    let mut rel = Relation::new(vars);
    let cols: Vec<Option<usize>> = slots.iter().map(|v| rel.column(v)).collect();
    let mut row = vec![0; rel.arity()];
    let spend = |k: usize, budget: &mut usize| -> Result<(), EvalError> {
        if k > *budget {
            return Err(EvalError::TupleBudget { needed: k, left: *budget });
        }
        *budget -= k;
        Ok(())
    };
    // Tries one assignment of the slots; coinciding slots must agree.
    let mut offer = |vals: &[FactorId], rel: &mut Relation| {
        let mut set = [false; 3];
        for (s, &val) in vals.iter().enumerate() {
            match cols[s] {
                None => {
                    if val != whole {
                        return;
                    }
                }
                Some(c) => {
                    if set[c] && row[c] != val {
                        return;
                    }
                    set[c] = true;
                    row[c] = val;
                }
            }
        }
        if rel.vars.iter().zip(&row).all(|(v, &id)| allowed(filters, v, id)) {
            rel.push(&row);
        }
    };
    match slots.len() {
        1 => {
            offer(&[whole], &mut rel);
        }
        2 => {
            if eq.lhs.is_universe() {
                offer(&[whole, whole], &mut rel);
            } else {
                spend(idx.factor_count(), budget)?;
                for id in 0..idx.factor_count() as FactorId {
                    offer(&[id, id], &mut rel);
                }
            }
        }
        _ => {
            if eq.lhs.is_universe() {
                spend(n + 1, budget)?;
                for p in 0..=n {
                    offer(&[whole, ids.get(0, p), ids.get(p, n - p)], &mut rel);
                }
            } else {
                // One canonical occurrence per distinct factor, every split.
                for (start, block) in idx.factor_blocks() {
                    for u in block {
                        spend(u.len() + 1, budget)?;
                        let i = start - 1;
                        let z = ids.get(i, u.len());
                        for p in 0..=u.len() {
                            offer(&[z, ids.get(i, p), ids.get(i + p, u.len() - p)], &mut rel);
                        }
                    }
                }
            }
        }
    }
    rel.dedup();
    Ok(rel)
}

/// Relations and a join forest ready for semi-join reduction.
#[derive(Clone, Debug)]
struct Instance {
    rels: Vec<Relation>,
    /// Post-order of the forest with parents.
    order: Vec<(usize, Option<usize>)>,
}

impl Instance {
    fn reduce(&mut self) {
        for &(v, p) in &self.order {
            if let Some(p) = p {
                let child = self.rels[v].clone();
                self.rels[p].semijoin(&child);
            }
        }
        for &(v, p) in self.order.iter().rev() {
            if let Some(p) = p {
                let parent = self.rels[p].clone();
                self.rels[v].semijoin(&parent);
            }
        }
        if self.rels.iter().any(Relation::is_empty) {
            for r in &mut self.rels {
                r.data.clear();
            }
        }
    }

    fn is_empty(&self) -> bool {
        self.rels.iter().any(Relation::is_empty)
    }

    fn fix(&mut self, v: &Variable, id: FactorId) {
        for r in &mut self.rels {
            if let Some(c) = r.column(v) {
                r.retain(|row| row[c] == id);
            }
        }
    }

    fn project(&self, v: &Variable) -> Vec<FactorId> {
        self.rels
            .iter()
            .find(|r| r.column(v).is_some())
            .map(|r| r.project(v))
            .unwrap_or_default()
    }
}

/// Evaluator for one decomposed query over one word.
pub struct Evaluator<'a> {
    idx: &'a WordIndex,
    head: Vec<Variable>,
    reduced: Instance,
}

impl<'a> Evaluator<'a> {
    /// Materializes all atoms and runs the full reducer.
    pub fn new(qd: &QueryDecomposition, idx: &'a WordIndex, budget: usize) -> Result<Self, EvalError> {
        Self::from_parts(&qd.query2, &qd.tree.edges, idx, budget)
    }

    /// `q` must consist of binary or copy equations forming a join tree
    /// with `edges` over `q.equations`.
    pub fn from_parts(
        q: &FcCq,
        edges: &[(usize, usize)],
        idx: &'a WordIndex,
        mut budget: usize,
    ) -> Result<Self, EvalError> {
        let ids = SpanIds::new(idx);
        let mut filters = Filters::new();
        let mut universe_ok = true;
        for c in &q.constraints {
            let d = constraint_domain(c, idx, &ids);
            if c.var.is_universe() {
                universe_ok &= d[ids.get(0, idx.len()) as usize];
                continue;
            }
            match filters.get_mut(&c.var) {
                Some(old) => old.iter_mut().zip(d).for_each(|(a, b)| *a &= b),
                None => {
                    filters.insert(c.var.clone(), d);
                }
            }
        }
        let mut rels = Vec::with_capacity(q.equations.len());
        for e in &q.equations {
            rels.push(materialize(e, idx, &ids, &filters, &mut budget)?);
        }
        // Variables that occur only in constraints become unary nodes.
        let in_eqs: BTreeSet<&Variable> = rels.iter().flat_map(|r| r.vars.iter()).collect();
        let mut lonely = Vec::new();
        for (v, d) in &filters {
            if !in_eqs.contains(v) {
                let mut r = Relation::new(vec![v.clone()]);
                for (id, ok) in d.iter().enumerate() {
                    if *ok {
                        r.push(&[id as FactorId]);
                    }
                }
                lonely.push(r);
            }
        }
        rels.extend(lonely);
        if !universe_ok {
            rels.push(Relation::new(Vec::new()));
        }
        let order = post_order(rels.len(), edges);
        let mut reduced = Instance { rels, order };
        reduced.reduce();
        Ok(Evaluator { idx, head: q.head.clone(), reduced })
    }

    pub fn model_check(&self) -> bool {
        !self.reduced.is_empty()
    }

    /// Relations after the full reducer, in node order.
    pub fn relations(&self) -> &[Relation] {
        &self.reduced.rels
    }

    /// Distinct answers in lexicographic order of their factor strings.
    pub fn answers(&self) -> AnswerStream<'_> {
        let mut stack = Vec::new();
        if !self.reduced.is_empty() {
            let cands = match self.head.first() {
                Some(h) => self.reduced.project(h),
                None => vec![0],
            };
            stack.push(Frame { inst: self.reduced.clone(), cands, next: 0 });
        }
        AnswerStream { ev: self, stack, chosen: Vec::new(), emitted: HashSet::new() }
    }

    pub fn answer_set(&self) -> AnswerSet {
        self.answers().collect()
    }

    pub fn index(&self) -> &WordIndex {
        self.idx
    }
}

fn post_order(n: usize, edges: &[(usize, usize)]) -> Vec<(usize, Option<usize>)> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; n];
    let mut out = Vec::with_capacity(n);
    for root in 0..n {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        let mut pre = vec![(root, None)];
        let mut stack = vec![root];
        while let Some(v) = stack.pop() {
            for &u in &adj[v] {
                if !seen[u] {
                    seen[u] = true;
                    pre.push((u, Some(v)));
                    stack.push(u);
                }
            }
        }
        out.extend(pre.into_iter().rev());
    }
    out
}

struct Frame {
    inst: Instance,
    cands: Vec<FactorId>,
    next: usize,
}

/// Iterator over the answers of an [`Evaluator`]. Each step fixes the next
/// head variable to its next candidate value and re-reduces, so every
/// branch leads to an answer.
pub struct AnswerStream<'e> {
    ev: &'e Evaluator<'e>,
    stack: Vec<Frame>,
    chosen: Vec<FactorId>,
    emitted: HashSet<Vec<FactorId>>,
}

impl AnswerStream<'_> {
    /// Like `next`, but yields factor ids.
    pub fn next_ids(&mut self) -> Option<Vec<FactorId>> {
        let k = self.ev.head.len();
        loop {
            let level = self.stack.len().checked_sub(1)?;
            let top = self.stack.last_mut().unwrap();
            if top.next == top.cands.len() {
                self.stack.pop();
                self.chosen.pop();
                continue;
            }
            let val = top.cands[top.next];
            top.next += 1;
            if k == 0 {
                self.stack.clear();
                return Some(Vec::new());
            }
            let mut inst = top.inst.clone();
            inst.fix(&self.ev.head[level], val);
            inst.reduce();
            if inst.is_empty() {
                continue;
            }
            self.chosen.truncate(level);
            self.chosen.push(val);
            if level + 1 == k {
                let tuple = self.chosen.clone();
                self.chosen.pop();
                assert!(self.emitted.insert(tuple.clone()), "duplicate answer");
                return Some(tuple);
            }
            let cands = inst.project(&self.ev.head[level + 1]);
            self.stack.push(Frame { inst, cands, next: 0 });
        }
    }
}

impl Iterator for AnswerStream<'_> {
    type Item = Answer;

    fn next(&mut self) -> Option<Answer> {
        let ids = self.next_ids()?;
        Some(ids.into_iter().map(|id| self.ev.idx.factor_bytes(id).to_vec()).collect())
    }
}

/// Whether the decomposed query has an answer on `w`.
pub fn model_check(qd: &QueryDecomposition, w: &[u8]) -> Result<bool, EvalError> {
    let idx = WordIndex::new(w);
    Ok(Evaluator::new(qd, &idx, DEFAULT_TUPLE_BUDGET)?.model_check())
}

pub fn enumerate_answers(qd: &QueryDecomposition, w: &[u8]) -> Result<Vec<Answer>, EvalError> {
    let idx = WordIndex::new(w);
    Ok(Evaluator::new(qd, &idx, DEFAULT_TUPLE_BUDGET)?.answers().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cqdecomp::analyze;
    use crate::query::{oracle_eval, parse_query, DEFAULT_ORACLE_BUDGET};

    fn answers(q: &str, w: &str) -> Vec<Vec<String>> {
        let qd = analyze(&parse_query(q).unwrap()).unwrap();
        enumerate_answers(&qd, w.as_bytes())
            .unwrap()
            .into_iter()
            .map(|t| t.into_iter().map(|b| String::from_utf8(b).unwrap()).collect())
            .collect()
    }

    fn check(q: &str, w: &str) -> bool {
        model_check(&analyze(&parse_query(q).unwrap()).unwrap(), w.as_bytes()).unwrap()
    }

    #[test]
    fn constraint_domain_example() {
        let idx = WordIndex::new(b"aab");
        let ids = SpanIds::new(&idx);
        let c = RegexConstraint::new(Variable::named("x"), crate::regex::Regex::parse("a*").unwrap());
        let d = constraint_domain(&c, &idx, &ids);
        let got: BTreeSet<&[u8]> =
            (0..d.len()).filter(|&i| d[i]).map(|i| idx.factor_bytes(i as FactorId)).collect();
        assert_eq!(got, [&b""[..], b"a", b"aa"].into());
    }

    #[test]
    fn materialized_relations_match_brute_force() {
        for w in ["", "a", "aa", "abab", "abba"] {
            let idx = WordIndex::new(w.as_bytes());
            let ids = SpanIds::new(&idx);
            let factors: BTreeSet<&[u8]> =
                (0..=w.len()).flat_map(|i| (i..=w.len()).map(move |j| &w.as_bytes()[i..j])).collect();
            for eq in ["z = x.y", "z = x.x", "U = x.y", "U = x.x", "z = z2.z", "z = x"] {
                let eq = parse_query(&format!("Ans() :- {eq}")).unwrap().equations.remove(0);
                let rel = materialize(&eq, &idx, &ids, &Filters::new(), &mut { usize::MAX }).unwrap();
                let got: BTreeSet<Vec<&[u8]>> =
                    rel.rows().iter().map(|r| r.iter().map(|&id| idx.factor_bytes(id)).collect()).collect();
                let mut expected = BTreeSet::new();
                let vars = &rel.vars;
                let mut assign = vec![&b""[..]; vars.len()];
                fn go<'w>(
                    k: usize,
                    assign: &mut Vec<&'w [u8]>,
                    factors: &BTreeSet<&'w [u8]>,
                    out: &mut Vec<Vec<&'w [u8]>>,
                ) {
                    if k == assign.len() {
                        out.push(assign.clone());
                        return;
                    }
                    for f in factors {
                        assign[k] = f;
                        go(k + 1, assign, factors, out);
                    }
                }
                let mut all = Vec::new();
                go(0, &mut assign, &factors, &mut all);
                for a in all {
                    let val = |v: &Variable| if v.is_universe() { w.as_bytes() } else { a[vars.iter().position(|x| x == v).unwrap()] };
                    let rhs: Vec<u8> = eq.rhs.vars().flat_map(|v| val(v).to_vec()).collect();
                    if val(&eq.lhs) == rhs.as_slice() {
                        expected.insert(a);
                    }
                }
                assert_eq!(got, expected, "{eq} on {w:?}");
            }
        }
    }

    #[test]
    fn model_check_examples() {
        assert!(check("Ans() :- U = x.y", "ab"));
        assert!(!check("Ans() :- U = x.x", "ab"));
        assert!(check("Ans() :- U = x.x", "abab"));
        assert!(!check("Ans() :- U = x.y, x in /c/", "ab"));
        assert!(check("Ans() :- x in /b/", "ab"));
        assert!(!check("Ans() :- U in /a*/", "ab"));
    }

    #[test]
    fn enumeration_examples() {
        assert_eq!(answers("Ans(x) :- U = x.x", "aaaa"), vec![vec!["aa"]]);
        assert_eq!(answers("Ans(x, y) :- U = x.y", "ab"), vec![vec!["", "ab"], vec!["a", "b"], vec!["ab", ""]]);
        assert_eq!(answers("Ans(x) :- U = p.x.s, x in /a+/", "baab"), vec![vec!["a"], vec!["aa"]]);
        assert_eq!(answers("Ans() :- U = x.x", "abab"), vec![Vec::<String>::new()]);
        assert!(answers("Ans() :- U = x.x", "aba").is_empty());
    }

    #[test]
    fn agrees_with_oracle_on_small_words() {
        let queries = [
            "Ans(x, y) :- z = z2.x.z3.x.z4, z = z5.y.z6, x in /ab|ba/, y in /b+/",
            "Ans(x) :- U = x.y.x",
            "Ans(y) :- x1 = y.y.z, U = x1.x1",
            "Ans(x1, x2) :- x1 = y1.y2.y3, x2 = y2.y3.y3.y4",
            "Ans(x) :- U = \"a\".x.\"b\"",
        ];
        let mut words = vec![String::new()];
        for len in 1..=6 {
            let mut next = Vec::new();
            for w in &words {
                if w.len() == len - 1 {
                    next.push(format!("{w}a"));
                    next.push(format!("{w}b"));
                }
            }
            words.extend(next);
        }
        for q in queries {
            let parsed = parse_query(q).unwrap();
            let qd = analyze(&parsed).unwrap();
            for w in &words {
                let expected = oracle_eval(&parsed, w.as_bytes(), DEFAULT_ORACLE_BUDGET).unwrap();
                let got = enumerate_answers(&qd, w.as_bytes()).unwrap();
                let mut sorted = got.clone();
                sorted.sort();
                assert_eq!(got, sorted, "order {q} on {w}");
                assert_eq!(got.into_iter().collect::<AnswerSet>(), expected, "{q} on {w}");
                assert_eq!(model_check(&qd, w.as_bytes()).unwrap(), !expected.is_empty());
            }
        }
    }

    #[test]
    fn reduced_tuples_extend_to_answers() {
        let q = parse_query("Ans() :- x1 = x2.x3.x2, x2 = x4.x4.x5").unwrap();
        let qd = analyze(&q).unwrap();
        let idx = WordIndex::new(b"aabaab");
        let ev = Evaluator::new(&qd, &idx, DEFAULT_TUPLE_BUDGET).unwrap();
        for (k, rel) in ev.relations().iter().enumerate() {
            for row in rel.rows() {
                let mut fixed = q.clone();
                for (v, &id) in rel.vars.iter().zip(row) {
                    let lit = crate::regex::Regex::literal(idx.factor_bytes(id));
                    fixed.constraints.push(RegexConstraint::new(v.clone(), lit));
                }
                let got = oracle_eval(&fixed, idx.word(), DEFAULT_ORACLE_BUDGET).unwrap();
                assert!(!got.is_empty(), "tuple {row:?} of node {k} does not extend");
            }
        }
    }

    #[test]
    fn budget_is_enforced() {
        let qd = analyze(&parse_query("Ans() :- z = x.y").unwrap()).unwrap();
        let idx = WordIndex::new(b"abcdefgh");
        assert!(matches!(Evaluator::new(&qd, &idx, 10), Err(EvalError::TupleBudget { .. })));
    }
}
