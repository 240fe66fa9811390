//! Exhaustive optimality oracles for small instances.

use itertools::Itertools;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::feasibility::{first_inaccessible_mode, inaccessible_error, AccessibleSet};
use crate::matroid::{intersect, LinearMatroid, TransversalMatroid};
use crate::pattern::SparsityPattern;
use crate::spectral::{mode_representatives, EigenStructure, ToleranceConfig};

/// Largest state count accepted by [`brute_macp`].
pub const MACP_MAX_STATES: usize = 20;
/// Largest `n · l` accepted by [`brute_mscp`].
pub const MSCP_MAX_ENTRIES: usize = 48;
/// Default cap on search nodes for [`brute_mscp`].
pub const MSCP_DEFAULT_NODES: u64 = 20_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MacpOptimum {
    pub size: usize,
    /// Lexicographically smallest optimal set.
    pub states: Vec<usize>,
    pub evaluated: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MscpOptimum {
    pub sparsity: usize,
    pub pattern: SparsityPattern,
    pub nodes: u64,
}

fn covers_all(es: &EigenStructure, reps: &[usize], states: &[usize], tol: &ToleranceConfig) -> bool {
    reps.iter().all(|&i| {
        let m = &es.modes[i];
        states.len() >= m.multiplicity && m.rank_on(states, tol) == m.multiplicity
    })
}

/// Minimum number of actuated states, by subset enumeration in order of
/// cardinality and then lexicographically. Only states in `xa` are used.
pub fn brute_macp(es: &EigenStructure, xa: Option<&AccessibleSet>, tol: &ToleranceConfig) -> Result<MacpOptimum> {
    let candidates: Vec<usize> = match xa {
        Some(x) => {
            if x.n() != es.n {
                return Err(Error::Dimension(format!("accessible set is over {} states, A has {}", x.n(), es.n)));
            }
            x.states().to_vec()
        }
        None => (0..es.n).collect(),
    };
    if candidates.len() > MACP_MAX_STATES {
        return Err(Error::Budget(format!(
            "exhaustive state selection is limited to {MACP_MAX_STATES} candidate states, got {}",
            candidates.len()
        )));
    }
    if let Some(x) = xa {
        if let Some((i, r)) = first_inaccessible_mode(es, x, tol) {
            return Err(inaccessible_error(es, i, r));
        }
    }
    let reps = mode_representatives(es);
    let mut evaluated = 0;
    for k in es.k_max..=candidates.len() {
        for set in candidates.iter().copied().combinations(k) {
            evaluated += 1;
            if covers_all(es, &reps, &set, tol) {
                return Ok(MacpOptimum {
                    size: k,
                    states: set,
                    evaluated,
                });
            }
        }
    }
    // all candidates together always cover once the accessibility check passed
    Err(Error::Numeric("no covering state set found".into()))
}

struct MscpSearch<'a> {
    n: usize,
    l: usize,
    modes: Vec<(LinearMatroid, usize)>,
    adj: Vec<Vec<usize>>,
    nodes: u64,
    budget: u64,
    found: Option<Vec<Vec<usize>>>,
    _es: &'a EigenStructure,
}

impl MscpSearch<'_> {
    fn feasible(&self, adj: Vec<Vec<usize>>) -> bool {
        let t = TransversalMatroid::from_adjacency(adj, self.l);
        self.modes.iter().all(|(lin, k)| intersect(lin, &t, &[]).len() == *k)
    }

    /// Rows before `t` as assigned, rows from `t` on either full or empty.
    fn completed(&self, t: usize, full: bool) -> Vec<Vec<usize>> {
        let mut adj = self.adj.clone();
        for row in adj.iter_mut().skip(t) {
            *row = if full { (0..self.l).collect() } else { Vec::new() };
        }
        adj
    }

    /// Assigns rows `t..` with exactly `left` more entries. Inputs are
    /// introduced in order (`used` so far), which removes input relabellings.
    fn dfs(&mut self, t: usize, left: usize, used: usize) -> Result<bool> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(Error::Budget(format!(
                "exhaustive pattern search exceeded {} nodes",
                self.budget
            )));
        }
        if left == 0 {
            if self.feasible(self.completed(t, false)) {
                self.found = Some(self.completed(t, false));
                return Ok(true);
            }
            return Ok(false);
        }
        if t == self.n || left > (self.n - t) * self.l {
            return Ok(false);
        }
        if !self.feasible(self.completed(t, true)) {
            return Ok(false);
        }
        let fresh = self.l - used;
        for new in 0..=fresh.min(left) {
            let old_max = left - new;
            for old in (0..used).powerset() {
                if old.len() > old_max {
                    continue;
                }
                let mut row = old;
                row.extend(used..used + new);
                let cost = row.len();
                self.adj[t] = row;
                let done = self.dfs(t + 1, left - cost, used + new)?;
                self.adj[t].clear();
                if done {
                    return Ok(true);
                }
            }
        }
        Ok(false)
    }
}

/// Minimum number of nonzeros of a feasible `n × l` pattern, by search in
/// order of increasing sparsity. `l < k_max` is reported as
/// [`Error::TooFewInputs`].
pub fn brute_mscp(es: &EigenStructure, l: usize, tol: &ToleranceConfig) -> Result<MscpOptimum> {
    brute_mscp_with_budget(es, l, tol, MSCP_DEFAULT_NODES)
}

pub fn brute_mscp_with_budget(es: &EigenStructure, l: usize, tol: &ToleranceConfig, budget: u64) -> Result<MscpOptimum> {
    if l < es.k_max {
        return Err(Error::TooFewInputs { l, k_max: es.k_max });
    }
    let n = es.n;
    let l_out = l;
    // more inputs than states never help
    let l = l.min(n);
    if n * l > MSCP_MAX_ENTRIES {
        return Err(Error::Budget(format!(
            "exhaustive pattern search is limited to n·l ≤ {MSCP_MAX_ENTRIES}, got {}",
            n * l
        )));
    }
    let reps = mode_representatives(es);
    let lower = brute_macp(es, None, tol)?.size;
    let mut search = MscpSearch {
        n,
        l,
        modes: reps
            .iter()
            .map(|&i| (LinearMatroid::from_mode(&es.modes[i], tol), es.modes[i].multiplicity))
            .collect(),
        adj: vec![Vec::new(); n],
        nodes: 0,
        budget,
        found: None,
        _es: es,
    };
    for z in lower..=n * l {
        if search.dfs(0, z, 0)? {
            let adj = search.found.take().expect("set on success");
            let entries = adj.iter().enumerate().flat_map(|(r, row)| row.iter().map(move |&c| (r, c)));
            return Ok(MscpOptimum {
                sparsity: z,
                pattern: SparsityPattern::new(n, l_out, entries)?,
                nodes: search.nodes,
            });
        }
    }
    Err(Error::Numeric("even the full pattern is infeasible".into()))
}
