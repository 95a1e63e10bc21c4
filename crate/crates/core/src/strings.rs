//! Word index: suffix array, LCP array with range-minimum queries, distinct
//! factor enumeration and the relation of a binary word equation.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

/// Half-open, 1-based interval `⟨start, end⟩` of a word.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(1 <= start && start <= end);
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{})", self.start, self.end)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IndexError {
    #[error("position {pos} out of range for word of length {len}")]
    Position { pos: usize, len: usize },
    #[error("span {span} out of range for word of length {len}")]
    Span { span: Span, len: usize },
    #[error("variable slot {0} has no assigned span")]
    Unbound(u32),
    #[error("universe variable must span the whole word, got {0}")]
    Universe(Span),
}

/// Dense identifier of a distinct factor. Identifiers are ordered like the
/// factors they denote: `a < b` iff factor `a` is lexicographically smaller.
/// The empty factor has id 0.
pub type FactorId = u32;

/// Suffix array based index over a word. Immutable after construction.
#[derive(Clone, Debug)]
pub struct WordIndex {
    word: Vec<u8>,
    /// 0-based starts of the non-empty suffixes in lexicographic order.
    sa: Vec<usize>,
    rank: Vec<usize>,
    /// `lcp[r]` is the LCP of the suffixes at ranks `r-1` and `r`; `lcp[0] = 0`.
    lcp: Vec<usize>,
    rmq: SparseMin,
    /// Number of factors generated before rank `r`, with ε counted as id 0.
    base: Vec<usize>,
    factor_count: usize,
}

#[derive(Clone, Debug)]
struct SparseMin {
    table: Vec<Vec<usize>>,
}

impl SparseMin {
    fn new(values: &[usize]) -> Self {
        let mut table = vec![values.to_vec()];
        let mut width = 1;
        while 2 * width <= values.len() {
            let prev = table.last().unwrap();
            let next = (0..=values.len() - 2 * width)
                .map(|i| prev[i].min(prev[i + width]))
                .collect();
            table.push(next);
            width *= 2;
        }
        SparseMin { table }
    }

    /// Minimum over `lo..=hi`.
    fn min(&self, lo: usize, hi: usize) -> usize {
        let k = usize::BITS as usize - 1 - (hi - lo + 1).leading_zeros() as usize;
        self.table[k][lo].min(self.table[k][hi + 1 - (1 << k)])
    }
}

fn suffix_array(word: &[u8]) -> Vec<usize> {
    let n = word.len();
    let mut sa: Vec<usize> = (0..n).collect();
    // Rank 0 is the sentinel past the end of the word.
    let mut rank: Vec<usize> = word.iter().map(|&c| c as usize + 1).collect();
    let mut tmp = vec![0; n];
    let mut k = 1;
    if n <= 1 {
        return sa;
    }
    loop {
        let key = |i: usize| (rank[i], if i + k < n { rank[i + k] } else { 0 });
        sa.sort_unstable_by_key(|&i| key(i));
        tmp[sa[0]] = 1;
        for w in 1..n {
            tmp[sa[w]] = tmp[sa[w - 1]] + usize::from(key(sa[w - 1]) != key(sa[w]));
        }
        rank.copy_from_slice(&tmp);
        if rank[sa[n - 1]] == n || k >= n {
            break;
        }
        k *= 2;
    }
    sa
}

impl WordIndex {
    pub fn new(word: &[u8]) -> Self {
        let n = word.len();
        let sa = suffix_array(word);
        let mut rank = vec![0; n];
        for (r, &i) in sa.iter().enumerate() {
            rank[i] = r;
        }
        // Kasai.
        let mut lcp = vec![0; n];
        let mut h = 0usize;
        for i in 0..n {
            if rank[i] > 0 {
                let j = sa[rank[i] - 1];
                while i + h < n && j + h < n && word[i + h] == word[j + h] {
                    h += 1;
                }
                lcp[rank[i]] = h;
                h = h.saturating_sub(1);
            } else {
                h = 0;
            }
        }
        let mut base = Vec::with_capacity(n + 1);
        let mut acc = 1;
        for r in 0..n {
            base.push(acc);
            acc += (n - sa[r]) - lcp[r];
        }
        base.push(acc);
        let rmq = SparseMin::new(if n == 0 { &[0] } else { &lcp });
        WordIndex {
            word: word.to_vec(),
            sa,
            rank,
            lcp,
            rmq,
            base,
            factor_count: acc,
        }
    }

    pub fn word(&self) -> &[u8] {
        &self.word
    }

    pub fn len(&self) -> usize {
        self.word.len()
    }

    pub fn is_empty(&self) -> bool {
        self.word.is_empty()
    }

    pub fn whole(&self) -> Span {
        Span::new(1, self.word.len() + 1)
    }

    pub fn factor(&self, s: Span) -> &[u8] {
        &self.word[s.start - 1..s.end - 1]
    }

    fn check_span(&self, s: Span) -> Result<(), IndexError> {
        if s.start < 1 || s.start > s.end || s.end > self.word.len() + 1 {
            return Err(IndexError::Span { span: s, len: self.word.len() });
        }
        Ok(())
    }

    fn suffix_len(&self, r: usize) -> usize {
        self.word.len() - self.sa[r]
    }

    /// LCP of the suffixes at ranks `a < b`.
    fn lcp_ranks(&self, a: usize, b: usize) -> usize {
        self.rmq.min(a + 1, b)
    }

    /// Longest common prefix of the suffixes starting at 1-based `i` and `j`.
    pub fn lcp(&self, i: usize, j: usize) -> Result<usize, IndexError> {
        let n = self.word.len();
        for p in [i, j] {
            if p < 1 || p > n {
                return Err(IndexError::Position { pos: p, len: n });
            }
        }
        Ok(self.lcp_unchecked(i, j))
    }

    fn lcp_unchecked(&self, i: usize, j: usize) -> usize {
        if i == j {
            return self.word.len() - i + 1;
        }
        let (a, b) = (self.rank[i - 1], self.rank[j - 1]);
        self.lcp_ranks(a.min(b), a.max(b))
    }

    /// Whether two spans denote the same factor.
    pub fn factor_eq(&self, s1: Span, s2: Span) -> Result<bool, IndexError> {
        self.check_span(s1)?;
        self.check_span(s2)?;
        Ok(self.span_eq(s1, s2))
    }

    fn span_eq(&self, s1: Span, s2: Span) -> bool {
        s1.len() == s2.len() && (s1.is_empty() || self.lcp_unchecked(s1.start, s2.start) >= s1.len())
    }

    /// The leaf list: 1-based starts of suffixes, in lexicographic order,
    /// that are not a proper prefix of another suffix.
    pub fn leaves(&self) -> Vec<usize> {
        let n = self.word.len();
        (0..n)
            .filter(|&r| r + 1 >= n || self.lcp[r + 1] < self.suffix_len(r))
            .map(|r| self.sa[r] + 1)
            .collect()
    }

    /// Factors grouped by the leaf generating them. The first leaf also
    /// generates ε. Concatenating the blocks gives [`Self::enumerate_factors`].
    pub fn factor_blocks(&self) -> Vec<(usize, Vec<Span>)> {
        let leaves = self.leaves();
        if leaves.is_empty() {
            return vec![(1, vec![Span::new(1, 1)])];
        }
        let mut out = Vec::with_capacity(leaves.len());
        let mut prev: Option<usize> = None;
        for &leaf in &leaves {
            let from = match prev {
                None => 0,
                Some(p) => self.lcp_unchecked(p, leaf) + 1,
            };
            let len = self.word.len() - leaf + 1;
            let block = (from..=len).map(|l| Span::new(leaf, leaf + l)).collect();
            out.push((leaf, block));
            prev = Some(leaf);
        }
        out
    }

    /// One span per distinct factor, including ε, in lexicographic order.
    pub fn enumerate_factors(&self) -> impl Iterator<Item = Span> + '_ {
        self.factor_blocks().into_iter().flat_map(|(_, b)| b)
    }

    pub fn factor_count(&self) -> usize {
        self.factor_count
    }

    /// Identifier of the factor denoted by `s`.
    pub fn factor_id(&self, s: Span) -> Result<FactorId, IndexError> {
        self.check_span(s)?;
        Ok(self.factor_id_unchecked(s))
    }

    pub(crate) fn factor_id_unchecked(&self, s: Span) -> FactorId {
        let l = s.len();
        if l == 0 {
            return 0;
        }
        let r = self.rank[s.start - 1];
        // Smallest rank r' <= r whose suffix still shares the first l letters.
        let (mut lo, mut hi) = (0, r);
        while lo < hi {
            let mid = (lo + hi) / 2;
            if self.lcp_ranks(mid, r) >= l {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        (self.base[lo] + l - self.lcp[lo] - 1) as FactorId
    }

    /// The canonical span of a factor id: the occurrence that generates it in
    /// the suffix-array walk.
    pub fn factor_span(&self, id: FactorId) -> Span {
        let id = id as usize;
        assert!(id < self.factor_count, "factor id {id} out of range");
        if id == 0 {
            return Span::new(1, 1);
        }
        let r = self.base.partition_point(|&b| b <= id) - 1;
        let l = self.lcp[r] + 1 + (id - self.base[r]);
        let start = self.sa[r] + 1;
        Span::new(start, start + l)
    }

    pub fn factor_bytes(&self, id: FactorId) -> &[u8] {
        self.factor(self.factor_span(id))
    }

    /// Identifier of the factor equal to `bytes`, if it occurs in the word.
    pub fn find_factor(&self, bytes: &[u8]) -> Option<FactorId> {
        if bytes.is_empty() {
            return Some(0);
        }
        let r = self
            .sa
            .partition_point(|&i| &self.word[i..(i + bytes.len()).min(self.word.len())] < bytes);
        let i = *self.sa.get(r)?;
        if self.word[i..].starts_with(bytes) {
            Some(self.factor_id_unchecked(Span::new(i + 1, i + 1 + bytes.len())))
        } else {
            None
        }
    }

    /// Distinct squares `uu`, including ε, in lexicographic order.
    pub fn enumerate_squares(&self) -> Vec<Span> {
        let mut out = vec![Span::new(1, 1)];
        for r in 0..self.word.len() {
            let start = self.sa[r] + 1;
            for l in self.lcp[r] + 1..=self.suffix_len(r) {
                if l % 2 == 0 && self.lcp_unchecked(start, start + l / 2) >= l / 2 {
                    out.push(Span::new(start, start + l));
                }
            }
        }
        out
    }

    /// Membership of `(x, y, z)` in the relation of `x = y·z`.
    pub fn concat_holds(&self, x: Span, y: Span, z: Span) -> bool {
        x.len() == y.len() + z.len()
            && (y.is_empty() || self.lcp_unchecked(x.start, y.start) >= y.len())
            && (z.is_empty() || self.lcp_unchecked(x.start + y.len(), z.start) >= z.len())
    }

    /// Checks a binary equation under an assignment of slots to spans.
    pub fn holds_binary(
        &self,
        shape: &BinaryShape,
        assignment: &BTreeMap<u32, Span>,
    ) -> Result<bool, IndexError> {
        let get = |s: Slot| -> Result<Span, IndexError> {
            match s {
                Slot::Universe => Ok(self.whole()),
                Slot::Var(v) => {
                    let sp = *assignment.get(&v).ok_or(IndexError::Unbound(v))?;
                    self.check_span(sp)?;
                    Ok(sp)
                }
            }
        };
        let (x, y, z) = (get(shape.lhs)?, get(shape.rhs1)?, get(shape.rhs2)?);
        Ok(self.concat_holds(x, y, z))
    }

    /// All solutions of a binary equation, one per distinct value triple,
    /// ordered by the lhs factor and then by split position.
    pub fn enumerate_binary(&self, shape: &BinaryShape) -> Vec<BinarySolution> {
        use Slot::Universe as U;
        let n = self.word.len();
        let whole = self.whole();
        let eps = Span::new(1, 1);
        let sol = |lhs, rhs1, rhs2| BinarySolution { lhs, rhs1, rhs2 };
        let BinaryShape { lhs: x, rhs1: y, rhs2: z } = *shape;
        if y == U || z == U {
            // |x| = |w| + |other| forces x = w and the other side to be ε.
            let ok = if y == U && z == U {
                n == 0
            } else {
                let other = if y == U { z } else { y };
                n == 0 || (x != other)
            };
            if !ok {
                return Vec::new();
            }
            return if y == U {
                vec![sol(whole, whole, if z == U { whole } else { eps })]
            } else {
                vec![sol(whole, eps, whole)]
            };
        }
        if x == U {
            if y == z {
                if n % 2 == 0 && self.span_eq(Span::new(1, n / 2 + 1), Span::new(n / 2 + 1, n + 1)) {
                    let h = Span::new(1, n / 2 + 1);
                    return vec![sol(whole, h, h)];
                }
                return Vec::new();
            }
            return (1..=n + 1)
                .map(|p| sol(whole, Span::new(1, p), Span::new(p, n + 1)))
                .collect();
        }
        match (x == y, x == z, y == z) {
            (true, true, _) => vec![sol(eps, eps, eps)],
            (true, false, _) => self.enumerate_factors().map(|u| sol(u, u, eps)).collect(),
            (false, true, _) => self.enumerate_factors().map(|u| sol(u, eps, u)).collect(),
            (false, false, true) => self
                .enumerate_squares()
                .into_iter()
                .map(|u| {
                    let h = Span::new(u.start, u.start + u.len() / 2);
                    sol(u, h, h)
                })
                .collect(),
            (false, false, false) => self
                .enumerate_factors()
                .flat_map(|u| {
                    (u.start..=u.end).map(move |p| sol(u, Span::new(u.start, p), Span::new(p, u.end)))
                })
                .collect(),
        }
    }
}

/// A variable position in a binary equation shape.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Slot {
    Universe,
    Var(u32),
}

/// The shape `lhs = rhs1 · rhs2`; slots may coincide.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BinaryShape {
    pub lhs: Slot,
    pub rhs1: Slot,
    pub rhs2: Slot,
}

/// One solution of a binary equation. Coinciding slots carry equal spans.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BinarySolution {
    pub lhs: Span,
    pub rhs1: Span,
    pub rhs2: Span,
}
