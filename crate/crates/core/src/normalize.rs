//! Rewriting FC[REG]-CQs into normal form: terminal-free right-hand sides,
//! no left-hand side inside its own right-hand side, no universe variable on
//! a right-hand side, and pairwise distinct right-hand sides.

use std::collections::{BTreeMap, BTreeSet};

use crate::query::{FcCq, Pattern, RegexConstraint, Symbol, Variable, WordEquation};
use crate::regex::Regex;

/// Why a variable was introduced by [`normalize`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Origin {
    TerminalBlock,
    SelfOccurrence,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NormalizedFcCq {
    pub query: FcCq,
    pub provenance: BTreeMap<Variable, Origin>,
}

/// Allocates reserved names `{prefix}1, {prefix}2, …` not used by a query.
#[derive(Clone, Debug)]
pub struct FreshNames {
    prefix: String,
    next: usize,
}

impl FreshNames {
    pub fn new(prefix: &str, taken: &BTreeSet<Variable>) -> Self {
        let next = taken
            .iter()
            .filter_map(|v| v.name().strip_prefix(prefix)?.parse::<usize>().ok())
            .max()
            .unwrap_or(0)
            + 1;
        FreshNames { prefix: prefix.to_string(), next }
    }

    pub fn fresh(&mut self) -> Variable {
        let v = Variable::named(format!("{}{}", self.prefix, self.next));
        self.next += 1;
        v
    }
}

fn push_constraint(cons: &mut Vec<RegexConstraint>, c: RegexConstraint) {
    if !cons.contains(&c) {
        cons.push(c);
    }
}

fn eps_constraints(cons: &mut Vec<RegexConstraint>, rest: &[Symbol]) {
    let mut seen = BTreeSet::new();
    for s in rest {
        if let Symbol::Var(v) = s {
            if seen.insert(v.clone()) {
                push_constraint(cons, RegexConstraint::epsilon(v.clone()));
            }
        }
    }
}

pub fn normalize(q: &FcCq) -> NormalizedFcCq {
    let mut fresh = FreshNames::new("$n", &q.variables());
    let mut provenance = BTreeMap::new();
    let mut cons = Vec::new();
    for c in &q.constraints {
        push_constraint(&mut cons, c.clone());
    }
    let mut eqs = Vec::with_capacity(q.equations.len());

    // Rule 1: terminal blocks.
    for e in &q.equations {
        let mut rhs = Vec::new();
        let mut k = 0;
        while k < e.rhs.0.len() {
            match &e.rhs.0[k] {
                Symbol::Var(v) => {
                    rhs.push(Symbol::Var(v.clone()));
                    k += 1;
                }
                Symbol::Letter(_) => {
                    let mut block = Vec::new();
                    while let Some(Symbol::Letter(c)) = e.rhs.0.get(k) {
                        block.push(*c);
                        k += 1;
                    }
                    let z = fresh.fresh();
                    provenance.insert(z.clone(), Origin::TerminalBlock);
                    cons.push(RegexConstraint::new(z.clone(), Regex::literal(&block)));
                    rhs.push(Symbol::Var(z));
                }
            }
        }
        eqs.push(WordEquation::new(e.lhs.clone(), Pattern(rhs)));
    }

    loop {
        let mut changed = false;

        // Rule 2: a left-hand side inside its own right-hand side.
        for e in eqs.iter_mut() {
            if let Some(p) = e.rhs.0.iter().position(|s| *s == Symbol::Var(e.lhs.clone())) {
                let mut rest = e.rhs.0[..p].to_vec();
                rest.extend_from_slice(&e.rhs.0[p + 1..]);
                eps_constraints(&mut cons, &rest);
                let z = fresh.fresh();
                provenance.insert(z.clone(), Origin::SelfOccurrence);
                e.rhs = Pattern(vec![Symbol::Var(z)]);
                changed = true;
            }
        }

        // Rule 3: the universe variable on a right-hand side.
        for e in eqs.iter_mut() {
            if let Some(p) = e.rhs.0.iter().position(|s| *s == Symbol::Var(Variable::Universe)) {
                let mut rest = e.rhs.0[..p].to_vec();
                rest.extend_from_slice(&e.rhs.0[p + 1..]);
                eps_constraints(&mut cons, &rest);
                let x = std::mem::replace(&mut e.lhs, Variable::Universe);
                e.rhs = Pattern(vec![Symbol::Var(x)]);
                changed = true;
            }
        }

        // Rule 4: duplicate right-hand sides of length at least two.
        'dedup: loop {
            for j in 0..eqs.len() {
                for i in 0..j {
                    if eqs[j].rhs.len() > 1 && eqs[i].rhs == eqs[j].rhs {
                        if eqs[i].lhs == eqs[j].lhs {
                            eqs.remove(j);
                        } else {
                            eqs[j].rhs = Pattern(vec![Symbol::Var(eqs[i].lhs.clone())]);
                        }
                        changed = true;
                        continue 'dedup;
                    }
                }
            }
            break;
        }

        // Copy equations: duplicates among them are handled by rewriting each
        // connected group into a star around one representative.
        let canon = canonical_copies(&eqs);
        if canon != eqs {
            eqs = canon;
            changed = true;
        }

        if !changed {
            break;
        }
    }

    NormalizedFcCq {
        query: FcCq { head: q.head.clone(), equations: eqs, constraints: cons },
        provenance,
    }
}

/// Rewrites the copy equations `x = y` so that every connected group of
/// variables forms a star around its representative: the universe if it is
/// in the group, otherwise the first member in equation order. Tree edges
/// keep their position, edges closing a cycle are dropped.
fn canonical_copies(eqs: &[WordEquation]) -> Vec<WordEquation> {
    let copy = |e: &WordEquation| match e.rhs.0.as_slice() {
        [Symbol::Var(y)] if *y != e.lhs => Some(y.clone()),
        _ => None,
    };
    let mut order: Vec<Variable> = Vec::new();
    let mut adj: BTreeMap<Variable, Vec<(Variable, usize)>> = BTreeMap::new();
    for (k, e) in eqs.iter().enumerate() {
        if let Some(y) = copy(e) {
            for v in [&e.lhs, &y] {
                if !order.contains(v) {
                    order.push(v.clone());
                }
            }
            adj.entry(e.lhs.clone()).or_default().push((y.clone(), k));
            adj.entry(y).or_default().push((e.lhs.clone(), k));
        }
    }
    // Spanning forest rooted at the representatives; each tree edge is
    // renamed after its endpoint farther from the root.
    let mut rewrite: BTreeMap<usize, WordEquation> = BTreeMap::new();
    let mut seen: BTreeSet<Variable> = BTreeSet::new();
    order.sort_by_key(|v| !v.is_universe());
    for root in order {
        if !seen.insert(root.clone()) {
            continue;
        }
        let mut stack = vec![root.clone()];
        while let Some(v) = stack.pop() {
            for (u, k) in &adj[&v] {
                if seen.insert(u.clone()) {
                    rewrite.insert(*k, WordEquation::new(root.clone(), Pattern(vec![Symbol::Var(u.clone())])));
                    stack.push(u.clone());
                }
            }
        }
    }
    eqs.iter()
        .enumerate()
        .filter_map(|(k, e)| match copy(e) {
            Some(_) => rewrite.get(&k).cloned(),
            None => Some(e.clone()),
        })
        .collect()
}

/// Checks the four normal-form conditions.
pub fn is_normalized(q: &FcCq) -> bool {
    let mut seen = BTreeSet::new();
    q.equations.iter().all(|e| {
        !e.rhs.is_empty()
            && e.rhs.is_terminal_free()
            && !e.rhs.contains_var(&e.lhs)
            && !e.rhs.contains_var(&Variable::Universe)
            && seen.insert(e.rhs.clone())
    })
}
