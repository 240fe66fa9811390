//! Sparsest input patterns for a fixed number of inputs: the matching
//! objective `g`, its simple greedy, and the two-stage algorithm built on
//! the actuated-state greedy plus dynamic multi-coloring.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::macp::{greedy_macp, SelectionTrace};
use crate::matroid::{intersect, LinearMatroid, Matroid, TransversalMatroid};
use crate::pattern::SparsityPattern;
use crate::realization::extract_h;
use crate::spectral::{mode_representatives, EigenStructure, ToleranceConfig};

/// `g(B̄)`: sum over representative modes of the maximum number of
/// independently matched mode vertices.
pub fn g_value(es: &EigenStructure, pattern: &SparsityPattern, tol: &ToleranceConfig) -> Result<usize> {
    if pattern.n() != es.n {
        return Err(Error::Dimension(format!(
            "pattern has {} rows but the state dimension is {}",
            pattern.n(),
            es.n
        )));
    }
    let m2 = TransversalMatroid::new(pattern);
    Ok(mode_representatives(es)
        .into_iter()
        .map(|i| intersect(&LinearMatroid::from_mode(&es.modes[i], tol), &m2, &[]).len())
        .sum())
}

/// Transversal matroid over an explicit adjacency, for cheap one-entry
/// extensions.
struct Adjacency<'a> {
    adj: &'a [Vec<usize>],
    extra: Option<(usize, usize)>,
    l: usize,
}

impl Adjacency<'_> {
    fn row(&self, s: usize) -> Vec<usize> {
        let mut r = self.adj[s].clone();
        if let Some((er, ec)) = self.extra {
            if er == s {
                r.push(ec);
            }
        }
        r
    }
}

impl Matroid for Adjacency<'_> {
    fn ground_size(&self) -> usize {
        self.adj.len()
    }

    fn is_independent(&self, set: &[usize]) -> bool {
        if set.len() > self.l {
            return false;
        }
        let rows: Vec<Vec<usize>> = set.iter().map(|&s| self.row(s)).collect();
        crate::pattern::max_matching(&rows, self.l).iter().all(Option::is_some)
    }

    fn rank_bound(&self) -> usize {
        self.l
    }

    fn is_loop(&self, e: usize) -> bool {
        self.adj[e].is_empty() && self.extra.map_or(true, |(r, _)| r != e)
    }
}

/// Greedy over single entries maximising the gain in `g`, until every
/// representative mode is independently matched. Candidates are scanned in
/// (row, column) order and the first maximal gain wins.
pub fn simple_greedy_mscp(
    es: &EigenStructure,
    l: usize,
    tol: &ToleranceConfig,
) -> Result<(SparsityPattern, SelectionTrace<(usize, usize)>)> {
    if l < es.k_max {
        return Err(Error::TooFewInputs { l, k_max: es.k_max });
    }
    let reps = mode_representatives(es);
    let m1s: Vec<LinearMatroid> = reps.iter().map(|&i| LinearMatroid::from_mode(&es.modes[i], tol)).collect();
    let ks: Vec<usize> = reps.iter().map(|&i| es.modes[i].multiplicity).collect();
    let loops: Vec<Vec<bool>> = m1s.iter().map(|m| (0..es.n).map(|s| m.is_loop(s)).collect()).collect();
    let mut current: Vec<Vec<usize>> = vec![Vec::new(); reps.len()];
    let mut pattern = SparsityPattern::empty(es.n, l);
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); es.n];
    let target = es.rep_multiplicity();
    let mut trace = SelectionTrace {
        chosen: Vec::new(),
        gains: Vec::new(),
        value: 0,
        target,
    };

    while trace.value < target {
        let mut best: Option<((usize, usize), usize)> = None;
        for r in 0..es.n {
            // modes that row r could still help
            let open: Vec<usize> = (0..reps.len())
                .filter(|&j| current[j].len() < ks[j] && !loops[j][r])
                .collect();
            if open.is_empty() || best.is_some_and(|(_, g)| g >= open.len()) {
                continue;
            }
            for c in 0..l {
                if pattern.contains(r, c) {
                    continue;
                }
                let m2 = Adjacency {
                    adj: &adj,
                    extra: Some((r, c)),
                    l,
                };
                let gain = open
                    .iter()
                    .filter(|&&j| intersect(&m1s[j], &m2, &current[j]).len() > current[j].len())
                    .count();
                if gain > 0 && best.map_or(true, |(_, g)| gain > g) {
                    best = Some(((r, c), gain));
                }
            }
        }
        let Some(((r, c), _)) = best else {
            return Err(Error::Numeric("simple greedy stalled before every mode was matched".into()));
        };
        pattern.insert(r, c);
        adj[r].push(c);
        let m2 = Adjacency { adj: &adj, extra: None, l };
        let mut gain = 0;
        for j in 0..reps.len() {
            if current[j].len() < ks[j] {
                let next = intersect(&m1s[j], &m2, &current[j]);
                gain += next.len() - current[j].len();
                current[j] = next;
            }
        }
        trace.chosen.push((r, c));
        trace.gains.push(gain);
        trace.value += gain;
    }
    Ok((pattern, trace))
}

/// Union of cliques over the chosen `h` sets.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuxiliaryGraph {
    /// Sorted state indices.
    pub vertices: Vec<usize>,
    /// Undirected edges `(u, v)` with `u < v`, state indices.
    pub edges: BTreeSet<(usize, usize)>,
    /// For each vertex, the positions in `h_sets` of the sets containing it.
    pub origin: BTreeMap<usize, Vec<usize>>,
    pub h_sets: Vec<Vec<usize>>,
}

impl AuxiliaryGraph {
    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter_map(|&(a, b)| {
                if a == v {
                    Some(b)
                } else if b == v {
                    Some(a)
                } else {
                    None
                }
            })
            .collect()
    }

    /// `k*_max(v)`: size of the largest `h` set containing `v`.
    pub fn max_clique_at(&self, v: usize) -> usize {
        self.origin
            .get(&v)
            .map_or(0, |ix| ix.iter().map(|&i| self.h_sets[i].len()).max().unwrap_or(0))
    }
}

pub fn build_auxiliary_graph(h_sets: &[Vec<usize>]) -> AuxiliaryGraph {
    let mut vertices = BTreeSet::new();
    let mut edges = BTreeSet::new();
    let mut origin: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, h) in h_sets.iter().enumerate() {
        for (a, &u) in h.iter().enumerate() {
            vertices.insert(u);
            let o = origin.entry(u).or_default();
            if o.last() != Some(&i) {
                o.push(i);
            }
            for &v in &h[a + 1..] {
                if u != v {
                    edges.insert((u.min(v), u.max(v)));
                }
            }
        }
    }
    AuxiliaryGraph {
        vertices: vertices.into_iter().collect(),
        edges,
        origin,
        h_sets: h_sets.to_vec(),
    }
}

/// Colors (zero-based) assigned to each vertex.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coloring {
    pub colors: BTreeMap<usize, BTreeSet<usize>>,
    pub used_colors: usize,
    /// Order in which vertices were colored.
    pub order: Vec<usize>,
}

impl Coloring {
    pub fn assignments(&self) -> usize {
        self.colors.values().map(BTreeSet::len).sum()
    }

    pub fn multicolored(&self) -> Vec<usize> {
        self.colors
            .iter()
            .filter(|(_, c)| c.len() > 1)
            .map(|(&v, _)| v)
            .collect()
    }
}

/// Dynamic coloring with at most `l` colors. The uncolored vertex seeing the
/// most distinct colors goes next (lowest index on ties). If it sees all `l`
/// colors it receives `k*_max` colors and loses its edges; otherwise it takes
/// the lowest admissible color already in use, or the lowest new one.
pub fn dynamic_coloring(g: &AuxiliaryGraph, l: usize, es: &EigenStructure) -> Result<Coloring> {
    if l < es.k_max {
        return Err(Error::TooFewInputs { l, k_max: es.k_max });
    }
    if let Some(k) = g.h_sets.iter().map(Vec::len).max() {
        if k > l {
            return Err(Error::TooFewInputs { l, k_max: k });
        }
    }
    let mut adj: BTreeMap<usize, BTreeSet<usize>> = g.vertices.iter().map(|&v| (v, BTreeSet::new())).collect();
    for &(a, b) in &g.edges {
        adj.get_mut(&a).expect("edge endpoint is a vertex").insert(b);
        adj.get_mut(&b).expect("edge endpoint is a vertex").insert(a);
    }
    let mut colors: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    let mut order = Vec::new();
    let mut used = 0usize;

    let seen_colors = |v: usize, adj: &BTreeMap<usize, BTreeSet<usize>>, colors: &BTreeMap<usize, BTreeSet<usize>>| {
        let mut s = BTreeSet::new();
        for u in &adj[&v] {
            if let Some(c) = colors.get(u) {
                s.extend(c.iter().copied());
            }
        }
        s
    };

    while colors.len() < g.vertices.len() {
        let mut pick: Option<(usize, usize)> = None;
        for &v in &g.vertices {
            if colors.contains_key(&v) {
                continue;
            }
            let sat = seen_colors(v, &adj, &colors).len();
            if pick.map_or(true, |(_, s)| sat > s) {
                pick = Some((v, sat));
            }
        }
        let (v, _) = pick.expect("an uncolored vertex remains");
        let forbidden = seen_colors(v, &adj, &colors);
        let assigned: BTreeSet<usize> = if forbidden.len() >= l {
            let k = g.max_clique_at(v).max(1);
            for u in adj[&v].clone() {
                adj.get_mut(&u).expect("neighbor is a vertex").remove(&v);
            }
            adj.get_mut(&v).expect("vertex present").clear();
            (0..k).collect()
        } else {
            let c = (0..used)
                .find(|c| !forbidden.contains(c))
                .unwrap_or_else(|| (0..l).find(|c| !forbidden.contains(c)).expect("a free color exists"));
            [c].into_iter().collect()
        };
        used = used.max(assigned.iter().max().map_or(0, |m| m + 1));
        colors.insert(v, assigned);
        order.push(v);
    }
    Ok(Coloring {
        colors,
        used_colors: used,
        order,
    })
}

/// Which performance bound the two-stage run guarantees.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundBranch {
    /// Some vertex got several colors:
    /// `‖B̄‖₀ ≤ k_max (ln N + 1) OPT − (k_max − 1) l`.
    FirstBound,
    /// No vertex got several colors: `‖B̄‖₀ ≤ (ln N + 1) OPT`.
    SecondBound,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCertificate {
    pub branch: BoundBranch,
    pub n_rep: usize,
    pub k_max: usize,
    pub l: usize,
    pub stage1_size: usize,
    pub sparsity: usize,
    pub multicolored: Vec<usize>,
    /// Whether the sparsity is consistent with the branch:
    /// equal to `stage1_size` without multicolored vertices, at most
    /// `k_max (stage1_size − l) + l` otherwise.
    pub consistent: bool,
}

impl BoundCertificate {
    /// Upper bound on `‖B̄‖₀` in terms of the optimum `opt`.
    pub fn bound_for(&self, opt: usize) -> f64 {
        let f = (self.n_rep.max(1) as f64).ln() + 1.0;
        match self.branch {
            BoundBranch::SecondBound => f * opt as f64,
            BoundBranch::FirstBound => self.k_max as f64 * f * opt as f64 - ((self.k_max - 1) * self.l) as f64,
        }
    }
}

/// Output of [`two_stage_mscp`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoStageResult {
    pub stage1: Vec<usize>,
    pub h_sets: Vec<Vec<usize>>,
    pub coloring: Coloring,
    pub certificate: BoundCertificate,
}

/// Two-stage algorithm: greedy actuated states, `h` sets by rank increase in
/// selection order, dynamic coloring of their clique union, and one entry
/// per (vertex, color).
pub fn two_stage_mscp(es: &EigenStructure, l: usize, tol: &ToleranceConfig) -> Result<(SparsityPattern, TwoStageResult)> {
    if l < es.k_max {
        return Err(Error::TooFewInputs { l, k_max: es.k_max });
    }
    let (stage1, trace) = greedy_macp(es, None, tol)?;
    let h_sets: Vec<Vec<usize>> = mode_representatives(es)
        .into_iter()
        .map(|i| extract_h(es, i, &trace.chosen, tol))
        .collect();
    let graph = build_auxiliary_graph(&h_sets);
    let coloring = dynamic_coloring(&graph, l, es)?;
    let pattern = SparsityPattern::new(
        es.n,
        l,
        coloring.colors.iter().flat_map(|(&v, cs)| cs.iter().map(move |&c| (v, c))),
    )?;
    let multicolored = coloring.multicolored();
    let sparsity = pattern.nnz();
    let s = stage1.len();
    let (branch, consistent) = if multicolored.is_empty() {
        (BoundBranch::SecondBound, sparsity == s)
    } else {
        (BoundBranch::FirstBound, sparsity <= es.k_max * s.saturating_sub(l) + l)
    };
    let certificate = BoundCertificate {
        branch,
        n_rep: es.rep_multiplicity(),
        k_max: es.k_max,
        l,
        stage1_size: s,
        sparsity,
        multicolored,
        consistent,
    };
    Ok((
        pattern,
        TwoStageResult {
            stage1,
            h_sets,
            coloring,
            certificate,
        },
    ))
}

/// Whether each `h` set's induced colored subgraph admits one color per
/// vertex, all distinct (a system of distinct representatives).
pub fn coloring_admits_sdr(coloring: &Coloring, h_sets: &[Vec<usize>], l: usize) -> bool {
    h_sets.iter().all(|h| {
        let rows: Vec<Vec<usize>> = h
            .iter()
            .map(|v| coloring.colors.get(v).map(|c| c.iter().copied().collect()).unwrap_or_default())
            .collect();
        crate::pattern::max_matching(&rows, l).iter().all(Option::is_some)
    })
}

/// Sufficient conditions under which the actuated-state and fixed-input
/// sparsest problems have the same optimum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Equivalence {
    /// Every geometric multiplicity is one.
    CaseI,
    /// A unique eigenvalue attains `k_max` and the other modes contribute
    /// fewer than `k_max` pairs.
    CaseII,
    /// `l ≥ min(N, 1 + Σ C(k_i, 2))`.
    CaseIII,
    Unknown,
}

fn pairs(k: usize) -> usize {
    k * k.saturating_sub(1) / 2
}

pub fn equivalence_sufficient(es: &EigenStructure, l: usize) -> Equivalence {
    if l < es.k_max {
        return Equivalence::Unknown;
    }
    if es.modes.iter().all(|m| m.multiplicity == 1) {
        return Equivalence::CaseI;
    }
    let ks: Vec<usize> = mode_representatives(es)
        .into_iter()
        .map(|i| es.modes[i].multiplicity)
        .collect();
    let at_max = ks.iter().filter(|&&k| k == es.k_max).count();
    if at_max == 1 {
        let rest: usize = ks.iter().filter(|&&k| k != es.k_max).map(|&k| pairs(k)).sum();
        if rest < es.k_max {
            return Equivalence::CaseII;
        }
    }
    let n_rep: usize = ks.iter().sum();
    let all_pairs: usize = ks.iter().map(|&k| pairs(k)).sum();
    if l >= n_rep.min(1 + all_pairs) {
        return Equivalence::CaseIII;
    }
    Equivalence::Unknown
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feasibility::pattern_feasible;
    use crate::fixtures;
    use crate::spectral::compute_eigenstructure;

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    #[test]
    fn non_submodular_gains() {
        let es = compute_eigenstructure(&fixtures::double_eigenvalue(), &tol()).unwrap();
        let b1 = SparsityPattern::new(2, 2, [(0, 0)]).unwrap();
        let b1e = SparsityPattern::new(2, 2, [(0, 0), (0, 1)]).unwrap();
        let b2 = SparsityPattern::new(2, 2, [(0, 0), (1, 0)]).unwrap();
        let b2e = SparsityPattern::new(2, 2, [(0, 0), (1, 0), (0, 1)]).unwrap();
        let g = |p: &SparsityPattern| g_value(&es, p, &tol()).unwrap();
        assert_eq!((g(&b1), g(&b1e)), (1, 1));
        assert_eq!((g(&b2), g(&b2e)), (1, 2));
        assert_eq!(g(&SparsityPattern::empty(2, 2)), 0);
    }

    #[test]
    fn simple_greedy_paired() {
        let es = fixtures::paired_reference(&tol());
        let (p, trace) = simple_greedy_mscp(&es, 2, &tol()).unwrap();
        assert_eq!(p.nnz(), 4);
        assert_eq!(trace.value, 6);
        assert!(pattern_feasible(&es, &p, &tol()).unwrap().feasible);
        assert!(simple_greedy_mscp(&es, 1, &tol()).is_err());
    }

    #[test]
    fn triangle_graph() {
        let g = build_auxiliary_graph(&[vec![0, 1], vec![0, 2], vec![1, 2]]);
        assert_eq!(g.vertices, vec![0, 1, 2]);
        assert_eq!(g.edges.len(), 3);
        let g1 = build_auxiliary_graph(&[vec![0], vec![3]]);
        assert!(g1.edges.is_empty());
        let g2 = build_auxiliary_graph(&[vec![0, 1], vec![0, 1]]);
        assert_eq!(g2.edges.len(), 1);
    }

    #[test]
    fn coloring_the_triangle() {
        let es = fixtures::paired_reference(&tol());
        let g = build_auxiliary_graph(&[vec![0, 1], vec![0, 2], vec![1, 2]]);
        let c = dynamic_coloring(&g, 2, &es).unwrap();
        assert_eq!(c.assignments(), 4);
        assert_eq!(c.multicolored(), vec![2]);
        assert!(coloring_admits_sdr(&c, &g.h_sets, 2));
        let c3 = dynamic_coloring(&g, 3, &es).unwrap();
        assert_eq!(c3.assignments(), 3);
        assert_eq!(c3.used_colors, 3);
        assert!(dynamic_coloring(&g, 1, &es).is_err());
    }

    #[test]
    fn edgeless_coloring() {
        let es = compute_eigenstructure(&fixtures::circuit(), &tol()).unwrap();
        let g = build_auxiliary_graph(&[vec![0], vec![2], vec![3]]);
        let c = dynamic_coloring(&g, 1, &es).unwrap();
        assert!(c.colors.values().all(|s| s.len() == 1 && s.contains(&0)));
    }

    #[test]
    fn two_stage_paired() {
        let es = fixtures::paired_reference(&tol());
        let (p, res) = two_stage_mscp(&es, 2, &tol()).unwrap();
        assert_eq!(p.nnz(), 4);
        assert_eq!(
            p.entries().collect::<Vec<_>>(),
            vec![(0, 0), (1, 1), (2, 0), (2, 1)]
        );
        assert_eq!(res.certificate.branch, BoundBranch::FirstBound);
        assert!(res.certificate.consistent);
        assert!(pattern_feasible(&es, &p, &tol()).unwrap().feasible);
        let (p3, r3) = two_stage_mscp(&es, 3, &tol()).unwrap();
        assert_eq!(p3.nnz(), 3);
        assert_eq!(r3.certificate.branch, BoundBranch::SecondBound);
    }

    #[test]
    fn equivalence_cases() {
        let es = fixtures::paired_reference(&tol());
        assert_eq!(equivalence_sufficient(&es, 2), Equivalence::Unknown);
        assert_eq!(equivalence_sufficient(&es, 1), Equivalence::Unknown);
        // N = 6, 1 + 3 pairs = 4
        assert_eq!(equivalence_sufficient(&es, 4), Equivalence::CaseIII);
        let simple = compute_eigenstructure(&fixtures::circuit(), &tol()).unwrap();
        assert_eq!(equivalence_sufficient(&simple, 1), Equivalence::CaseI);
    }
}
