//! Linear and transversal matroids on the state ground set and a cardinality
//! matroid intersection solver (exchange graph, shortest augmenting paths).

use std::collections::VecDeque;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::pattern::{max_matching, SparsityPattern};
use crate::spectral::{EigenMode, EigenStructure, ToleranceConfig};

/// Independence oracle over ground set `0..ground_size()`.
pub trait Matroid {
    fn ground_size(&self) -> usize;
    fn is_independent(&self, set: &[usize]) -> bool;

    /// Upper bound on the rank, used to stop early.
    fn rank_bound(&self) -> usize {
        self.ground_size()
    }

    /// Elements that belong to no independent set.
    fn is_loop(&self, e: usize) -> bool {
        !self.is_independent(&[e])
    }
}

/// Column matroid of `X_iᵀ`: a set of states is independent when the
/// corresponding columns are linearly independent to tolerance.
#[derive(Clone, Debug)]
pub struct LinearMatroid {
    columns: DMatrix<Complex64>,
    rel: Option<f64>,
    floor: f64,
}

impl LinearMatroid {
    /// `columns` is `k × n`; each column is the vector of one state.
    pub fn new(columns: DMatrix<Complex64>, tol: &ToleranceConfig) -> Self {
        let floor = tol.basis_floor * linalg::spectral_norm(&columns);
        LinearMatroid {
            columns,
            rel: tol.rank_rel_tol,
            floor,
        }
    }

    /// Same rank rule as [`EigenMode::rank_on`].
    pub fn from_mode(mode: &EigenMode, tol: &ToleranceConfig) -> Self {
        LinearMatroid {
            columns: mode.left_rows(),
            rel: tol.rank_rel_tol,
            floor: tol.basis_floor * mode.scale(),
        }
    }

    pub fn rank_of(&self, set: &[usize]) -> usize {
        if set.is_empty() {
            return 0;
        }
        let k = self.columns.nrows();
        let m = DMatrix::from_fn(k, set.len(), |r, c| self.columns[(r, set[c])]);
        let rel = self
            .rel
            .unwrap_or(k.max(set.len()) as f64 * f64::EPSILON * 64.0);
        linalg::rank_with_cutoff(&m, rel, self.floor)
    }

    pub fn rank(&self) -> usize {
        let all: Vec<usize> = (0..self.ground_size()).collect();
        self.rank_of(&all)
    }
}

impl Matroid for LinearMatroid {
    fn ground_size(&self) -> usize {
        self.columns.ncols()
    }

    fn is_independent(&self, set: &[usize]) -> bool {
        set.len() <= self.columns.nrows() && self.rank_of(set) == set.len()
    }

    fn rank_bound(&self) -> usize {
        self.columns.nrows()
    }

    fn is_loop(&self, e: usize) -> bool {
        // a single column has rank one exactly when its norm clears the floor
        let norm = self.columns.column(e).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        norm == 0.0 || norm < self.floor
    }
}

/// Transversal matroid of a pattern: a set of states is independent when it
/// can be matched into distinct inputs.
#[derive(Clone, Debug)]
pub struct TransversalMatroid {
    adj: Vec<Vec<usize>>,
    l: usize,
}

impl TransversalMatroid {
    pub fn new(pattern: &SparsityPattern) -> Self {
        TransversalMatroid {
            adj: pattern.row_adjacency(),
            l: pattern.l(),
        }
    }

    /// From per-state input lists over `l` inputs.
    pub fn from_adjacency(adj: Vec<Vec<usize>>, l: usize) -> Self {
        TransversalMatroid { adj, l }
    }

    /// Maximum matching of `set` into inputs, as `(state, input)` pairs.
    pub fn matching(&self, set: &[usize]) -> Vec<(usize, usize)> {
        let adj: Vec<Vec<usize>> = set.iter().map(|&s| self.adj[s].clone()).collect();
        max_matching(&adj, self.l)
            .into_iter()
            .enumerate()
            .filter_map(|(i, m)| m.map(|c| (set[i], c)))
            .collect()
    }

    pub fn rank(&self) -> usize {
        max_matching(&self.adj, self.l).iter().flatten().count()
    }
}

impl Matroid for TransversalMatroid {
    fn ground_size(&self) -> usize {
        self.adj.len()
    }

    fn is_independent(&self, set: &[usize]) -> bool {
        set.len() <= self.l && self.matching(set).len() == set.len()
    }

    fn rank_bound(&self) -> usize {
        self.l
    }

    fn is_loop(&self, e: usize) -> bool {
        self.adj[e].is_empty()
    }
}

/// Per-mode certificate of the independent-matching condition.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndependentMatchWitness {
    pub mode_index: usize,
    /// Sorted state set of the common independent set.
    pub h: Vec<usize>,
    /// Sorted input columns matched to `h`.
    pub phi: Vec<usize>,
    /// `(state, input)` pairs.
    pub matching: Vec<(usize, usize)>,
    pub size: usize,
}

/// Maximum common independent set of two matroids on the same ground set,
/// starting from the common independent set `start`. Returned sorted.
///
/// Augmenting paths are shortest paths in the exchange graph; sources and
/// neighbours are scanned in increasing element order.
pub fn intersect<M1: Matroid, M2: Matroid>(m1: &M1, m2: &M2, start: &[usize]) -> Vec<usize> {
    let n = m1.ground_size();
    assert_eq!(n, m2.ground_size(), "matroids must share a ground set");
    let bound = m1.rank_bound().min(m2.rank_bound());
    let ground: Vec<usize> = (0..n).filter(|&e| !m2.is_loop(e) && !m1.is_loop(e)).collect();
    let mut current: Vec<usize> = start.to_vec();
    current.sort_unstable();
    debug_assert!(m1.is_independent(&current) && m2.is_independent(&current));

    loop {
        let mut in_set = vec![false; n];
        for &x in &current {
            in_set[x] = true;
        }
        let outside: Vec<usize> = ground.iter().copied().filter(|&y| !in_set[y]).collect();
        if outside.is_empty() || current.len() >= bound {
            break;
        }
        let with = |y: usize| {
            let mut s = current.clone();
            s.push(y);
            s
        };
        let swap = |x: usize, y: usize| {
            let mut s: Vec<usize> = current.iter().copied().filter(|&z| z != x).collect();
            s.push(y);
            s
        };
        let mut sources = vec![false; n];
        let mut sinks = vec![false; n];
        for &y in &outside {
            let s = with(y);
            sources[y] = m1.is_independent(&s);
            sinks[y] = m2.is_independent(&s);
        }

        if let Some(y) = outside.iter().copied().find(|&y| sources[y] && sinks[y]) {
            current.push(y);
            current.sort_unstable();
            continue;
        }

        // exchange graph: x -> y when I - x + y ∈ I1, y -> x when I - x + y ∈ I2
        let mut out: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &y in &outside {
            let free1 = sources[y];
            let free2 = sinks[y];
            for &x in &current {
                if free1 || m1.is_independent(&swap(x, y)) {
                    out[x].push(y);
                }
                if free2 || m2.is_independent(&swap(x, y)) {
                    out[y].push(x);
                }
            }
        }
        for v in &mut out {
            v.sort_unstable();
        }

        let mut prev = vec![usize::MAX; n];
        let mut seen = vec![false; n];
        let mut queue = VecDeque::new();
        for &y in &outside {
            if sources[y] {
                seen[y] = true;
                queue.push_back(y);
            }
        }
        let mut end = None;
        while let Some(v) = queue.pop_front() {
            if !in_set[v] && sinks[v] {
                end = Some(v);
                break;
            }
            for &w in &out[v] {
                if !seen[w] {
                    seen[w] = true;
                    prev[w] = v;
                    queue.push_back(w);
                }
            }
        }
        let Some(mut v) = end else { break };
        let mut path = vec![v];
        while prev[v] != usize::MAX {
            v = prev[v];
            path.push(v);
        }
        for e in path {
            in_set[e] = !in_set[e];
        }
        current = (0..n).filter(|&e| in_set[e]).collect();
    }
    current
}

fn witness(mode_index: usize, h: Vec<usize>, m2: &TransversalMatroid) -> IndependentMatchWitness {
    let mut matching = m2.matching(&h);
    matching.sort_unstable();
    let mut phi: Vec<usize> = matching.iter().map(|&(_, c)| c).collect();
    phi.sort_unstable();
    IndependentMatchWitness {
        mode_index,
        size: h.len(),
        h,
        phi,
        matching,
    }
}

/// Maximum common independent set of the linear matroid of a mode and the
/// transversal matroid of a pattern, with its matching. `mode_index` is only
/// recorded in the witness.
pub fn matroid_intersection(
    m1: &LinearMatroid,
    m2: &TransversalMatroid,
    mode_index: usize,
) -> IndependentMatchWitness {
    let h = intersect(m1, m2, &[]);
    witness(mode_index, h, m2)
}

/// Like [`matroid_intersection`] but augments from a known common
/// independent set (for instance the optimum for a sub-pattern).
pub fn matroid_intersection_from(
    m1: &LinearMatroid,
    m2: &TransversalMatroid,
    mode_index: usize,
    start: &[usize],
) -> IndependentMatchWitness {
    let h = intersect(m1, m2, start);
    witness(mode_index, h, m2)
}

/// Whether mode `mode_index` can be independently matched by `pattern`, i.e.
/// the intersection reaches `k_i`.
pub fn independently_matched(
    es: &EigenStructure,
    mode_index: usize,
    pattern: &SparsityPattern,
    tol: &ToleranceConfig,
) -> (bool, IndependentMatchWitness) {
    let mode = &es.modes[mode_index];
    let m1 = LinearMatroid::from_mode(mode, tol);
    let m2 = TransversalMatroid::new(pattern);
    let w = matroid_intersection(&m1, &m2, mode_index);
    (w.size == mode.multiplicity, w)
}
