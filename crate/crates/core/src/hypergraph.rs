//! GYO ear removal and join-tree validation over hyperedges given as
//! variable sets.

use std::collections::{BTreeMap, BTreeSet};

/// Runs GYO ear removal. Returns the edges of a join tree over the hyperedge
/// indices, or `None` if the hypergraph is cyclic. Nodes are scanned in input
/// order and the first eligible ear is removed first.
pub fn gyo<V: Ord + Clone>(hyperedges: &[BTreeSet<V>]) -> Option<Vec<(usize, usize)>> {
    let n = hyperedges.len();
    if n == 0 {
        return Some(Vec::new());
    }
    let mut sets: Vec<BTreeSet<V>> = hyperedges.to_vec();
    let mut alive = vec![true; n];
    let mut edges = Vec::with_capacity(n - 1);
    loop {
        // Mark variables occurring in exactly one unmarked node.
        let mut count: BTreeMap<&V, usize> = BTreeMap::new();
        for (s, _) in sets.iter().zip(&alive).filter(|(_, a)| **a) {
            for v in s {
                *count.entry(v).or_default() += 1;
            }
        }
        let lonely: BTreeSet<V> = count.into_iter().filter(|(_, c)| *c == 1).map(|(v, _)| v.clone()).collect();
        for (s, _) in sets.iter_mut().zip(&alive).filter(|(_, a)| **a) {
            s.retain(|v| !lonely.contains(v));
        }
        let ear = (0..n).filter(|&i| alive[i]).find_map(|i| {
            (0..n)
                .find(|&j| j != i && alive[j] && sets[i].is_subset(&sets[j]))
                .map(|j| (i, j))
        });
        match ear {
            Some((i, j)) => {
                alive[i] = false;
                edges.push((i, j));
            }
            None => break,
        }
    }
    (alive.iter().filter(|a| **a).count() == 1).then_some(edges)
}

/// Whether `edges` form a tree over `nodes.len()` nodes in which, for every
/// variable, the nodes containing it are connected.
pub fn is_join_tree<V: Ord>(nodes: &[BTreeSet<V>], edges: &[(usize, usize)]) -> bool {
    let n = nodes.len();
    if n == 0 {
        return edges.is_empty();
    }
    if edges.len() != n - 1 || edges.iter().any(|&(a, b)| a >= n || b >= n || a == b) {
        return false;
    }
    let mut uf: Vec<usize> = (0..n).collect();
    fn find(uf: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while uf[r] != r {
            r = uf[r];
        }
        let mut y = x;
        while uf[y] != r {
            let next = uf[y];
            uf[y] = r;
            y = next;
        }
        r
    }
    for &(a, b) in edges {
        let (ra, rb) = (find(&mut uf, a), find(&mut uf, b));
        if ra == rb {
            return false;
        }
        uf[ra] = rb;
    }
    // In a tree, a node subset is connected iff it spans |S|-1 edges.
    let vars: BTreeSet<&V> = nodes.iter().flatten().collect();
    vars.into_iter().all(|v| {
        let members = nodes.iter().filter(|s| s.contains(v)).count();
        let inner = edges.iter().filter(|&&(a, b)| nodes[a].contains(v) && nodes[b].contains(v)).count();
        inner + 1 == members
    })
}
