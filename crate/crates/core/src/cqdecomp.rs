//! Query-level acyclicity: weak join trees, the cyclicity preconditions,
//! per-atom decompositions under co-occurrence constraints, and assembly of
//! a global join tree whose blocks follow the weak join tree.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::hypergraph::{gyo, is_join_tree};
use crate::normalize::{normalize, FreshNames, NormalizedFcCq};
use crate::pattern::{atom_decompose, pattern_acyclic, ConstraintSet, Decomposition};
use crate::query::{FcCq, Pattern, Symbol, Variable, WordEquation};

/// Hyperedge of an atom; the universe is a constant and never a vertex.
pub fn hyperedge(e: &WordEquation) -> BTreeSet<Variable> {
    e.variables()
}

pub fn hypergraph(atoms: &[WordEquation]) -> Vec<BTreeSet<Variable>> {
    atoms.iter().map(hyperedge).collect()
}

/// Join tree over whole equations, each edge labeled with the shared variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeakJoinTree {
    pub nodes: Vec<WordEquation>,
    pub edges: Vec<(usize, usize, BTreeSet<Variable>)>,
}

impl WeakJoinTree {
    pub fn to_dot(&self) -> String {
        let mut s = String::from("graph WeakJoinTree {\n  node [shape=box];\n");
        for (k, e) in self.nodes.iter().enumerate() {
            s.push_str(&format!("  n{k} [label=\"{}\"];\n", escape(&e.to_string())));
        }
        for (a, b, l) in &self.edges {
            let label: Vec<String> = l.iter().map(|v| v.to_string()).collect();
            s.push_str(&format!("  n{a} -- n{b} [label=\"{{{}}}\"];\n", escape(&label.join(","))));
        }
        s.push_str("}\n");
        s
    }
}

pub fn weak_join_tree(q: &FcCq) -> Option<WeakJoinTree> {
    let h = hypergraph(&q.equations);
    let edges = gyo(&h)?;
    Some(WeakJoinTree {
        nodes: q.equations.clone(),
        edges: edges
            .into_iter()
            .map(|(a, b)| (a, b, h[a].intersection(&h[b]).cloned().collect()))
            .collect(),
    })
}

/// Which of the four necessary conditions for acyclicity are violated.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CyclicityReport {
    pub weakly_cyclic: bool,
    /// Atoms whose right-hand side is a cyclic pattern.
    pub cyclic_rhs: Vec<usize>,
    /// Atom pairs sharing more than three variables.
    pub shared_over_three: Vec<(usize, usize)>,
    /// Atom pairs sharing exactly three variables where one atom is longer than three.
    pub shared_three_long: Vec<(usize, usize)>,
}

impl CyclicityReport {
    pub fn any(&self) -> bool {
        self.weakly_cyclic
            || !self.cyclic_rhs.is_empty()
            || !self.shared_over_three.is_empty()
            || !self.shared_three_long.is_empty()
    }
}

impl fmt::Display for CyclicityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pairs = |v: &[(usize, usize)]| v.iter().map(|(a, b)| format!("({a},{b})")).collect::<Vec<_>>().join(" ");
        writeln!(f, "condition 1 (weakly cyclic): {}", if self.weakly_cyclic { "fired" } else { "ok" })?;
        if self.cyclic_rhs.is_empty() {
            writeln!(f, "condition 2 (cyclic right-hand side): ok")?;
        } else {
            let atoms: Vec<String> = self.cyclic_rhs.iter().map(|a| a.to_string()).collect();
            writeln!(f, "condition 2 (cyclic right-hand side): fired at atoms {}", atoms.join(" "))?;
        }
        if self.shared_over_three.is_empty() {
            writeln!(f, "condition 3 (more than 3 shared variables): ok")?;
        } else {
            writeln!(f, "condition 3 (more than 3 shared variables): fired at {}", pairs(&self.shared_over_three))?;
        }
        if self.shared_three_long.is_empty() {
            write!(f, "condition 4 (3 shared variables, long atom): ok")
        } else {
            write!(f, "condition 4 (3 shared variables, long atom): fired at {}", pairs(&self.shared_three_long))
        }
    }
}

/// Evaluates the four conditions on a normalized query. Conditions 3 and 4
/// are checked on every pair of atoms.
pub fn cyclicity_conditions(q: &FcCq) -> CyclicityReport {
    let h = hypergraph(&q.equations);
    let mut r = CyclicityReport { weakly_cyclic: gyo(&h).is_none(), ..Default::default() };
    for (i, e) in q.equations.iter().enumerate() {
        let acyclic = match e.rhs.as_vars() {
            Some(alpha) if !alpha.is_empty() => matches!(pattern_acyclic(&alpha), Ok(Some(_))),
            _ => false,
        };
        if !acyclic {
            r.cyclic_rhs.push(i);
        }
    }
    for i in 0..h.len() {
        for j in i + 1..h.len() {
            let shared = h[i].intersection(&h[j]).count();
            if shared > 3 {
                r.shared_over_three.push((i, j));
            } else if shared == 3 && (q.equations[i].size() > 3 || q.equations[j].size() > 3) {
                r.shared_three_long.push((i, j));
            }
        }
    }
    r
}

/// Join tree over the binary atoms of a decomposed query. `block[k]` is the
/// index of the source atom node `k` was derived from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JoinTree {
    pub nodes: Vec<WordEquation>,
    pub edges: Vec<(usize, usize)>,
    pub block: Vec<usize>,
}

impl JoinTree {
    pub fn to_dot(&self) -> String {
        let mut s = String::from("graph JoinTree {\n  node [shape=box];\n");
        let blocks: BTreeSet<usize> = self.block.iter().copied().collect();
        for b in blocks {
            s.push_str(&format!("  subgraph cluster_{b} {{\n    label=\"atom {b}\";\n"));
            for (k, e) in self.nodes.iter().enumerate().filter(|(k, _)| self.block[*k] == b) {
                s.push_str(&format!("    n{k} [label=\"{}\"];\n", escape(&e.to_string())));
            }
            s.push_str("  }\n");
        }
        for (a, b) in &self.edges {
            s.push_str(&format!("  n{a} -- n{b};\n"));
        }
        s.push_str("}\n");
        s
    }

    /// The block-level graph: one node per source atom, an edge wherever the
    /// join tree crosses between blocks.
    pub fn skeleton(&self) -> BTreeSet<(usize, usize)> {
        self.edges
            .iter()
            .filter_map(|&(a, b)| {
                let (x, y) = (self.block[a], self.block[b]);
                (x != y).then_some((x.min(y), x.max(y)))
            })
            .collect()
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
#[error("join tree nodes do not match the equations of the query")]
pub struct NodeMismatch;

/// Whether `t` is a join tree for the equations of `q2`.
pub fn validate_join_tree(t: &JoinTree, q2: &FcCq) -> Result<bool, NodeMismatch> {
    let mut a = t.nodes.clone();
    let mut b = q2.equations.clone();
    a.sort();
    b.sort();
    if a != b {
        return Err(NodeMismatch);
    }
    Ok(is_join_tree(&hypergraph(&t.nodes), &t.edges))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryDecomposition {
    pub normalized: NormalizedFcCq,
    /// Head, binary atoms of all blocks in source order, then the constraints.
    pub query2: FcCq,
    pub tree: JoinTree,
    pub weak: WeakJoinTree,
    pub blocks: Vec<Decomposition>,
}

/// Why a query has no acyclic decomposition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Cyclic {
    Conditions(CyclicityReport),
    /// No decomposition of this atom keeps the variable pairs it shares with
    /// its neighbours together.
    AtomDecomposition { atom: usize, pairs: Vec<(Variable, Variable)> },
}

impl fmt::Display for Cyclic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cyclic::Conditions(r) => write!(f, "{r}"),
            Cyclic::AtomDecomposition { atom, pairs } => {
                let p: Vec<String> = pairs.iter().map(|(x, y)| format!("{{{x},{y}}}")).collect();
                write!(f, "cyclic (atom decomposition): atom {atom} cannot keep {} together", p.join(" "))
            }
        }
    }
}

/// Normalizes `q` and builds an acyclic 2FC-CQ decomposition with join tree.
pub fn analyze(q: &FcCq) -> Result<QueryDecomposition, Cyclic> {
    let normalized = normalize(q);
    let nq = &normalized.query;
    let report = cyclicity_conditions(nq);
    if report.any() {
        return Err(Cyclic::Conditions(report));
    }
    let weak = weak_join_tree(nq).expect("weakly acyclic after the condition check");

    let mut pairs: Vec<ConstraintSet> = vec![ConstraintSet::new(); nq.equations.len()];
    let mut whole = vec![false; nq.equations.len()];
    for (a, b, label) in &weak.edges {
        let l: Vec<&Variable> = label.iter().collect();
        for i in [*a, *b] {
            match l.len() {
                2 => pairs[i].insert(l[0].clone(), l[1].clone()).expect("label variables are distinct"),
                3 => whole[i] = true,
                _ => {}
            }
        }
    }

    let mut taken = q.variables();
    taken.extend(nq.variables());
    let mut blocks = Vec::with_capacity(nq.equations.len());
    for (i, eq) in nq.equations.iter().enumerate() {
        if whole[i] || eq.rhs.len() <= 2 {
            blocks.push(Decomposition { atoms: vec![eq.clone()], root: eq.lhs.clone(), introduced: BTreeSet::new() });
            continue;
        }
        let mut fresh = FreshNames::new(&format!("$a{}_", i + 1), &taken);
        match atom_decompose(eq, &pairs[i], &mut fresh).expect("normalized equation") {
            Some(d) => blocks.push(d),
            None => {
                return Err(Cyclic::AtomDecomposition { atom: i, pairs: pairs[i].pairs().cloned().collect() });
            }
        }
    }

    let mut nodes = Vec::new();
    let mut block = Vec::new();
    let mut edges = Vec::new();
    let mut offset = Vec::with_capacity(blocks.len());
    for (i, d) in blocks.iter().enumerate() {
        offset.push(nodes.len());
        let inner = gyo(&d.hyperedges()).expect("atom decompositions are acyclic");
        edges.extend(inner.into_iter().map(|(a, b)| (a + nodes.len(), b + nodes.len())));
        nodes.extend(d.atoms.iter().cloned());
        block.extend(std::iter::repeat_n(i, d.atoms.len()));
    }
    for (a, b, label) in &weak.edges {
        let pick = |i: usize| {
            let d = &blocks[i];
            d.atoms
                .iter()
                .position(|x| label.is_subset(&hyperedge(x)))
                .map(|k| k + offset[i])
                .ok_or_else(|| Cyclic::AtomDecomposition { atom: i, pairs: pairs[i].pairs().cloned().collect() })
        };
        edges.push((pick(*a)?, pick(*b)?));
    }

    let query2 = FcCq { head: nq.head.clone(), equations: nodes.clone(), constraints: nq.constraints.clone() };
    let tree = JoinTree { nodes, edges, block };
    debug_assert_eq!(validate_join_tree(&tree, &query2), Ok(true));
    Ok(QueryDecomposition { normalized, query2, tree, weak, blocks })
}

pub fn decompose_query(q: &FcCq) -> Option<QueryDecomposition> {
    analyze(q).ok()
}

/// Replaces factors of length at least two shared by two different atoms
/// with a fresh variable `z` and adds `z = factor`, longest factors first.
/// The result is normalized.
pub fn prefactor(q: &FcCq) -> FcCq {
    let mut cur = normalize(q).query;
    let mut fresh = FreshNames::new("$f", &cur.variables());
    let bound = cur.equations.iter().map(|e| e.rhs.len()).sum::<usize>() + 1;
    for _ in 0..bound {
        let Some(common) = longest_shared_factor(&cur.equations) else { break };
        let z = fresh.fresh();
        for e in cur.equations.iter_mut() {
            if e.rhs.0 != common {
                e.rhs = replace_all(&e.rhs, &common, &z);
            }
        }
        cur.equations.push(WordEquation::new(z, Pattern(common)));
        cur = normalize(&cur).query;
    }
    cur
}

fn longest_shared_factor(eqs: &[WordEquation]) -> Option<Vec<Symbol>> {
    let mut owners: BTreeMap<&[Symbol], BTreeSet<usize>> = BTreeMap::new();
    for (i, e) in eqs.iter().enumerate() {
        let s = &e.rhs.0;
        for a in 0..s.len() {
            for b in a + 2..=s.len() {
                owners.entry(&s[a..b]).or_default().insert(i);
            }
        }
    }
    owners
        .into_iter()
        .filter(|(f, o)| {
            // Atoms whose whole right-hand side is the factor do not count.
            o.iter().filter(|&&i| eqs[i].rhs.0.as_slice() != *f).count() >= 2
        })
        .max_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| b.0.cmp(a.0)))
        .map(|(f, _)| f.to_vec())
}

fn replace_all(p: &Pattern, f: &[Symbol], z: &Variable) -> Pattern {
    let mut out = Vec::with_capacity(p.len());
    let mut k = 0;
    while k < p.len() {
        if p.0[k..].starts_with(f) {
            out.push(Symbol::Var(z.clone()));
            k += f.len();
        } else {
            out.push(p.0[k].clone());
            k += 1;
        }
    }
    Pattern(out)
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}
