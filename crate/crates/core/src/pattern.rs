//! Input sparsity patterns, bipartite matching (generic rank) and the
//! input-state-mode digraph.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{EigenStructure, ToleranceConfig};

/// Support of a structured `n × l` input matrix: the positions of its free
/// parameters. Indices are zero-based `(row, col)` = `(state, input)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SparsityPattern {
    n: usize,
    l: usize,
    support: BTreeSet<(usize, usize)>,
}

impl SparsityPattern {
    pub fn new(n: usize, l: usize, entries: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut support = BTreeSet::new();
        for (r, c) in entries {
            if r >= n {
                return Err(Error::IndexOutOfRange { index: r, size: n });
            }
            if c >= l {
                return Err(Error::IndexOutOfRange { index: c, size: l });
            }
            if !support.insert((r, c)) {
                return Err(Error::InvalidArgument(format!("duplicate entry ({r}, {c})")));
            }
        }
        Ok(SparsityPattern { n, l, support })
    }

    pub fn empty(n: usize, l: usize) -> Self {
        SparsityPattern {
            n,
            l,
            support: BTreeSet::new(),
        }
    }

    /// Every entry free.
    pub fn full(n: usize, l: usize) -> Self {
        let support = (0..n).flat_map(|r| (0..l).map(move |c| (r, c))).collect();
        SparsityPattern { n, l, support }
    }

    /// `n × n` diagonal pattern actuating exactly `states` (the pattern of `I_S`).
    pub fn diagonal(n: usize, states: &[usize]) -> Result<Self> {
        Self::new(n, n, states.iter().map(|&s| (s, s)))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn l(&self) -> usize {
        self.l
    }

    /// `‖B̄‖₀`.
    pub fn nnz(&self) -> usize {
        self.support.len()
    }

    pub fn contains(&self, r: usize, c: usize) -> bool {
        self.support.contains(&(r, c))
    }

    /// Adds an entry; returns false when already present.
    pub fn insert(&mut self, r: usize, c: usize) -> bool {
        assert!(r < self.n && c < self.l, "entry ({r}, {c}) out of range");
        self.support.insert((r, c))
    }

    pub fn remove(&mut self, r: usize, c: usize) -> bool {
        self.support.remove(&(r, c))
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.support.iter().copied()
    }

    /// Sorted indices of nonzero rows (actuated states).
    pub fn actuated_states(&self) -> Vec<usize> {
        let rows: BTreeSet<usize> = self.support.iter().map(|&(r, _)| r).collect();
        rows.into_iter().collect()
    }

    /// Sorted indices of nonzero columns.
    pub fn used_inputs(&self) -> Vec<usize> {
        let cols: BTreeSet<usize> = self.support.iter().map(|&(_, c)| c).collect();
        cols.into_iter().collect()
    }

    /// For each state, the inputs it is linked to.
    pub fn row_adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(r, c) in &self.support {
            adj[r].push(c);
        }
        adj
    }

    /// Dense 0/1 indicator, mostly for display.
    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        let mut m = vec![vec![0u8; self.l]; self.n];
        for &(r, c) in &self.support {
            m[r][c] = 1;
        }
        m
    }

    pub fn to_json(&self) -> PatternJson {
        PatternJson {
            n: self.n,
            l: self.l,
            support: self.support.iter().map(|&(r, c)| [r + 1, c + 1]).collect(),
        }
    }

    pub fn from_json(j: &PatternJson) -> Result<Self> {
        let mut entries = Vec::with_capacity(j.support.len());
        for &[r, c] in &j.support {
            if r == 0 || c == 0 {
                return Err(Error::Parse("pattern indices are 1-based".into()));
            }
            entries.push((r - 1, c - 1));
        }
        Self::new(j.n, j.l, entries)
    }

    /// One `r c` line per entry, 1-based.
    pub fn to_coords(&self) -> String {
        let mut s = String::new();
        for &(r, c) in &self.support {
            let _ = writeln!(s, "{} {}", r + 1, c + 1);
        }
        s
    }

    /// Parses `r c` lines (1-based). Blank lines and `#`/`%` comments are
    /// skipped. `l` defaults to the largest column index seen.
    pub fn from_coords(text: &str, n: usize, l: Option<usize>) -> Result<Self> {
        let mut entries = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') || t.starts_with('%') {
                continue;
            }
            let nums: Vec<&str> = t.split(|c: char| c.is_whitespace() || c == ',').filter(|s| !s.is_empty()).collect();
            if nums.len() != 2 {
                return Err(Error::Parse(format!("line {}: expected 'r c'", lineno + 1)));
            }
            let parse = |s: &str| {
                s.parse::<usize>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))
            };
            let (r, c) = (parse(nums[0])?, parse(nums[1])?);
            if r == 0 || c == 0 {
                return Err(Error::Parse(format!("line {}: indices are 1-based", lineno + 1)));
            }
            entries.push((r - 1, c - 1));
        }
        let l = l.unwrap_or_else(|| entries.iter().map(|&(_, c)| c + 1).max().unwrap_or(0));
        Self::new(n, l, entries)
    }
}

/// JSON form `{n, l, support: [[r, c], ...]}` with 1-based indices.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct PatternJson {
    pub n: usize,
    pub l: usize,
    pub support: Vec<[usize; 2]>,
}

/// Entrywise union of patterns of identical shape.
pub fn pattern_union(ps: &[SparsityPattern]) -> Result<SparsityPattern> {
    let first = ps
        .first()
        .ok_or_else(|| Error::InvalidArgument("union of zero patterns".into()))?;
    let mut out = SparsityPattern::empty(first.n, first.l);
    for p in ps {
        if p.n != first.n || p.l != first.l {
            return Err(Error::Dimension(format!(
                "cannot unite {}x{} with {}x{}",
                first.n, first.l, p.n, p.l
            )));
        }
        out.support.extend(p.support.iter().copied());
    }
    Ok(out)
}

/// Maximum bipartite matching between left vertices `0..adj.len()` and right
/// vertices `0..n_right` (Hopcroft–Karp). Returns, for every left vertex, its
/// matched right vertex.
pub fn max_matching(adj: &[Vec<usize>], n_right: usize) -> Vec<Option<usize>> {
    const FREE: usize = usize::MAX;
    let n_left = adj.len();
    let mut left = vec![FREE; n_left];
    let mut right = vec![FREE; n_right];
    let mut dist = vec![0usize; n_left];

    loop {
        // BFS layering from free left vertices
        let mut queue = VecDeque::new();
        let mut found = false;
        for u in 0..n_left {
            if left[u] == FREE {
                dist[u] = 0;
                queue.push_back(u);
            } else {
                dist[u] = usize::MAX;
            }
        }
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                let w = right[v];
                if w == FREE {
                    found = true;
                } else if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        if !found {
            break;
        }
        let mut augmented = false;
        for u in 0..n_left {
            if left[u] == FREE && augment(u, adj, &mut left, &mut right, &mut dist) {
                augmented = true;
            }
        }
        if !augmented {
            break;
        }
    }
    left.into_iter().map(|v| (v != FREE).then_some(v)).collect()
}

fn augment(u: usize, adj: &[Vec<usize>], left: &mut [usize], right: &mut [usize], dist: &mut [usize]) -> bool {
    for &v in &adj[u] {
        let w = right[v];
        if w == usize::MAX || (dist[w] == dist[u].wrapping_add(1) && augment(w, adj, left, right, dist)) {
            left[u] = v;
            right[v] = u;
            return true;
        }
    }
    dist[u] = usize::MAX;
    false
}

/// Generic rank of the submatrix of `pattern` on `rows × cols`, with a
/// maximum matching as witness (`(row, col)` pairs).
pub fn generic_rank_witness(pattern: &SparsityPattern, rows: &[usize], cols: &[usize]) -> Vec<(usize, usize)> {
    let col_pos: std::collections::HashMap<usize, usize> =
        cols.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let adj: Vec<Vec<usize>> = rows
        .iter()
        .map(|&r| {
            pattern
                .support
                .range((r, 0)..(r + 1, 0))
                .filter_map(|&(_, c)| col_pos.get(&c).copied())
                .collect()
        })
        .collect();
    max_matching(&adj, cols.len())
        .into_iter()
        .enumerate()
        .filter_map(|(i, m)| m.map(|j| (rows[i], cols[j])))
        .collect()
}

/// Generic rank of the submatrix on `rows × cols` (maximum matching size).
pub fn pattern_generic_rank(pattern: &SparsityPattern, rows: &[usize], cols: &[usize]) -> usize {
    generic_rank_witness(pattern, rows, cols).len()
}

/// A vertex of the input-state-mode digraph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IsmVertex {
    Input(usize),
    State(usize),
    /// `(mode index, basis column)`.
    Mode(usize, usize),
}

/// Tripartite digraph: inputs → states (pattern support) and states → mode
/// vertices (nonzero entries of `X_iᵀ`). The state→mode layer depends on
/// the particular eigenbases in use.
#[derive(Clone, Debug, PartialEq)]
pub struct IsmDigraph {
    pub l: usize,
    pub n: usize,
    /// `(mode, column)` for every mode vertex.
    pub mode_vertices: Vec<(usize, usize)>,
    /// `(input, state)` arcs.
    pub edges_us: Vec<(usize, usize)>,
    /// `(state, index into mode_vertices)` arcs.
    pub edges_sm: Vec<(usize, usize)>,
}

impl IsmDigraph {
    pub fn edge_count(&self) -> usize {
        self.edges_us.len() + self.edges_sm.len()
    }

    pub fn out_neighbors(&self, v: IsmVertex) -> Vec<IsmVertex> {
        match v {
            IsmVertex::Input(u) => self
                .edges_us
                .iter()
                .filter(|e| e.0 == u)
                .map(|e| IsmVertex::State(e.1))
                .collect(),
            IsmVertex::State(s) => self
                .edges_sm
                .iter()
                .filter(|e| e.0 == s)
                .map(|e| {
                    let (m, k) = self.mode_vertices[e.1];
                    IsmVertex::Mode(m, k)
                })
                .collect(),
            IsmVertex::Mode(..) => Vec::new(),
        }
    }

    /// Graphviz rendering; labels are 1-based.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph ism {\n  rankdir=LR;\n");
        for u in 0..self.l {
            let _ = writeln!(s, "  u{0} [label=\"u{0}\", shape=box];", u + 1);
        }
        for x in 0..self.n {
            let _ = writeln!(s, "  s{0} [label=\"{0}\", shape=circle];", x + 1);
        }
        for &(m, k) in &self.mode_vertices {
            let _ = writeln!(s, "  m{0}_{1} [label=\"m{0}{1}\", shape=diamond];", m + 1, k + 1);
        }
        for &(u, x) in &self.edges_us {
            let _ = writeln!(s, "  u{} -> s{};", u + 1, x + 1);
        }
        for &(x, v) in &self.edges_sm {
            let (m, k) = self.mode_vertices[v];
            let _ = writeln!(s, "  s{} -> m{}_{};", x + 1, m + 1, k + 1);
        }
        s.push_str("}\n");
        s
    }
}

/// Builds the input-state-mode digraph for `pattern` under the bases in `es`.
pub fn build_ism(es: &EigenStructure, pattern: &SparsityPattern, tol: &ToleranceConfig) -> Result<IsmDigraph> {
    if es.n != pattern.n {
        return Err(Error::Dimension(format!(
            "pattern has {} rows but the state dimension is {}",
            pattern.n, es.n
        )));
    }
    let mut mode_vertices = Vec::new();
    let mut edges_sm = Vec::new();
    for (i, mode) in es.modes.iter().enumerate() {
        let thr = mode.entry_threshold(tol);
        for k in 0..mode.multiplicity {
            let v = mode_vertices.len();
            mode_vertices.push((i, k));
            for s in 0..es.n {
                if mode.eigenbasis[(s, k)].norm() > thr {
                    edges_sm.push((s, v));
                }
            }
        }
    }
    let edges_us = pattern.entries().map(|(r, c)| (c, r)).collect();
    Ok(IsmDigraph {
        l: pattern.l,
        n: es.n,
        mode_vertices,
        edges_us,
        edges_sm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn generic_rank_examples() {
        let p = fixtures::paired_pattern();
        assert_eq!(pattern_generic_rank(&p, &[0, 1], &[0, 1]), 2);
        let e = SparsityPattern::empty(4, 3);
        assert_eq!(pattern_generic_rank(&e, &[0, 1, 2], &[0, 1, 2]), 0);
        let f = SparsityPattern::full(5, 4);
        assert_eq!(pattern_generic_rank(&f, &[0, 2, 4], &[1, 3]), 2);
        assert_eq!(pattern_generic_rank(&f, &[0], &[0, 1, 2, 3]), 1);
    }

    #[test]
    fn union_examples() {
        let a = SparsityPattern::new(3, 2, [(0, 0)]).unwrap();
        let b = SparsityPattern::new(3, 2, [(2, 1)]).unwrap();
        let u = pattern_union(&[a.clone(), b]).unwrap();
        assert_eq!(u.nnz(), 2);
        let e = SparsityPattern::empty(3, 2);
        assert_eq!(pattern_union(&[a.clone(), e]).unwrap(), a);
        let c = SparsityPattern::empty(3, 3);
        assert!(matches!(pattern_union(&[a, c]), Err(Error::Dimension(_))));
    }

    #[test]
    fn union_of_sorted_h_sets() {
        // h1={1,2}, h2={1,3}, h3={2,3} (1-based), element j of each sorted
        // set goes to column j
        let hs: [[usize; 2]; 3] = [[0, 1], [0, 2], [1, 2]];
        let parts: Vec<_> = hs
            .iter()
            .map(|h| SparsityPattern::new(6, 2, h.iter().enumerate().map(|(j, &r)| (r, j))).unwrap())
            .collect();
        let u = pattern_union(&parts).unwrap();
        let want: Vec<_> = vec![(0, 0), (1, 0), (1, 1), (2, 1)];
        assert_eq!(u.entries().collect::<Vec<_>>(), want);
        assert_eq!(u.nnz(), 4);
    }

    #[test]
    fn ism_of_paired() {
        let tol = ToleranceConfig::default();
        let es = fixtures::paired_reference(&tol);
        let p = fixtures::paired_pattern();
        let g = build_ism(&es, &p, &tol).unwrap();
        assert_eq!(g.mode_vertices.len(), 6);
        let mut us = g.edges_us.clone();
        us.sort();
        assert_eq!(us, vec![(0, 0), (0, 1), (1, 1), (1, 2)]);
        // nonzeros of the reference X_iᵀ rows: 2+1, 2+2, 2+1
        assert_eq!(g.edges_sm.len(), 10);
        assert_eq!(g.edge_count(), p.nnz() + 10);
        assert!(g.to_dot().contains("u1 -> s1"));
        assert_eq!(
            g.out_neighbors(IsmVertex::State(0)),
            vec![IsmVertex::Mode(0, 0), IsmVertex::Mode(1, 1)]
        );
    }

    #[test]
    fn ism_empty_and_diagonal() {
        let tol = ToleranceConfig::default();
        let es = fixtures::paired_reference(&tol);
        let g = build_ism(&es, &SparsityPattern::empty(6, 2), &tol).unwrap();
        assert!(g.edges_us.is_empty());
        let d = SparsityPattern::diagonal(6, &[0, 1, 2, 3, 4, 5]).unwrap();
        let g = build_ism(&es, &d, &tol).unwrap();
        for u in 0..6 {
            assert_eq!(g.out_neighbors(IsmVertex::Input(u)), vec![IsmVertex::State(u)]);
        }
        assert!(build_ism(&es, &SparsityPattern::empty(5, 2), &tol).is_err());
    }

    #[test]
    fn coords_and_json() {
        let p = fixtures::paired_pattern();
        let q = SparsityPattern::from_coords(&p.to_coords(), 6, Some(2)).unwrap();
        assert_eq!(p, q);
        let j = serde_json::to_string(&p.to_json()).unwrap();
        assert_eq!(j, r#"{"n":6,"l":2,"support":[[1,1],[2,1],[2,2],[3,2]]}"#);
        let back: PatternJson = serde_json::from_str(&j).unwrap();
        assert_eq!(SparsityPattern::from_json(&back).unwrap(), p);
        assert!(SparsityPattern::new(2, 2, [(0, 0), (0, 0)]).is_err());
        assert!(SparsityPattern::new(2, 2, [(2, 0)]).is_err());
    }
}
