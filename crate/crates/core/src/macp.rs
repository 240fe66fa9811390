//! Minimal actuated-state selection: the rank objective `f(S)`, its greedy
//! maximisation, column selection for a given `B`, and the Gramian-rank
//! greedy baseline.

use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feasibility::{first_inaccessible_mode, first_uncontrollable_mode, inaccessible_error, AccessibleSet};
use crate::linalg;
use crate::lyapunov::LyapunovSolver;
use crate::spectral::{mode_representatives, EigenStructure, StateMatrix, ToleranceConfig};

/// Ordered greedy choices with their marginal gains.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionTrace<T> {
    pub chosen: Vec<T>,
    pub gains: Vec<usize>,
    pub value: usize,
    pub target: usize,
}

impl<T> SelectionTrace<T> {
    fn new(target: usize) -> Self {
        SelectionTrace {
            chosen: Vec::new(),
            gains: Vec::new(),
            value: 0,
            target,
        }
    }

    fn push(&mut self, item: T, gain: usize) {
        self.chosen.push(item);
        self.gains.push(gain);
        self.value += gain;
    }
}

/// `f(S) = Σ rank(X_iᵀ restricted to S)` over representative modes.
pub fn f_value(es: &EigenStructure, states: &[usize], tol: &ToleranceConfig) -> usize {
    mode_representatives(es)
        .into_iter()
        .map(|i| es.modes[i].rank_on(states, tol))
        .sum()
}

/// Orthonormal basis of the span of the vectors added so far, grown by
/// Gram–Schmidt with a fixed absolute threshold.
#[derive(Clone, Debug)]
pub(crate) struct Span {
    basis: Vec<Vec<Complex64>>,
    dim: usize,
    thr: f64,
}

impl Span {
    pub(crate) fn new(dim: usize, thr: f64) -> Self {
        Span {
            basis: Vec::new(),
            dim,
            thr,
        }
    }

    pub(crate) fn rank(&self) -> usize {
        self.basis.len()
    }

    pub(crate) fn full(&self) -> bool {
        self.basis.len() >= self.dim
    }

    /// Leaves the residual of `v` in `buf` and returns its norm.
    fn residual(&self, v: impl Iterator<Item = Complex64>, buf: &mut Vec<Complex64>) -> f64 {
        buf.clear();
        buf.extend(v);
        // two passes of modified Gram-Schmidt
        let passes = if self.basis.is_empty() { 0 } else { 2 };
        for _ in 0..passes {
            for q in &self.basis {
                let c: Complex64 = q.iter().zip(buf.iter()).map(|(a, b)| a.conj() * b).sum();
                for (r, a) in buf.iter_mut().zip(q) {
                    *r -= a * c;
                }
            }
        }
        buf.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub(crate) fn would_grow(&self, v: impl Iterator<Item = Complex64>, buf: &mut Vec<Complex64>) -> bool {
        !self.full() && self.residual(v, buf) > self.thr
    }

    pub(crate) fn add(&mut self, v: impl Iterator<Item = Complex64>) -> bool {
        if self.full() {
            return false;
        }
        let mut r = Vec::new();
        let nr = self.residual(v, &mut r);
        if nr > self.thr {
            r.iter_mut().for_each(|z| *z /= nr);
            self.basis.push(r);
            true
        } else {
            false
        }
    }
}

/// Spans of the rows `X_i[s, :]` chosen so far, one per representative.
struct ModeColumns {
    reps: Vec<usize>,
    spans: Vec<Span>,
    buf: Vec<Complex64>,
}

impl ModeColumns {
    fn new(es: &EigenStructure, tol: &ToleranceConfig) -> Self {
        let reps = mode_representatives(es);
        let spans = reps
            .iter()
            .map(|&i| {
                let m = &es.modes[i];
                let thr = tol.rank_tol(m.multiplicity, es.n).max(tol.basis_floor) * m.scale();
                Span::new(m.multiplicity, thr)
            })
            .collect();
        ModeColumns {
            reps,
            spans,
            buf: Vec::new(),
        }
    }

    fn gain(&mut self, es: &EigenStructure, s: usize) -> usize {
        let buf = &mut self.buf;
        self.reps
            .iter()
            .zip(&self.spans)
            .filter(|(&i, span)| !span.full() && span.would_grow(es.modes[i].eigenbasis.row(s).iter().copied(), buf))
            .count()
    }

    fn add(&mut self, es: &EigenStructure, s: usize) -> usize {
        let reps = &self.reps;
        self.spans
            .iter_mut()
            .zip(reps)
            .map(|(span, &i)| span.add(es.modes[i].eigenbasis.row(s).iter().copied()))
            .filter(|&grew| grew)
            .count()
    }
}

/// Greedy maximisation of `f` until every representative mode has full
/// rank. Candidates are restricted to `xa` when given; ties go to the lowest
/// state index.
pub fn greedy_macp(
    es: &EigenStructure,
    xa: Option<&AccessibleSet>,
    tol: &ToleranceConfig,
) -> Result<(Vec<usize>, SelectionTrace<usize>)> {
    let candidates: Vec<usize> = match xa {
        Some(x) => {
            if x.n() != es.n {
                return Err(Error::Dimension(format!("accessible set is over {} states, A has {}", x.n(), es.n)));
            }
            if let Some((i, r)) = first_inaccessible_mode(es, x, tol) {
                return Err(inaccessible_error(es, i, r));
            }
            x.states().to_vec()
        }
        None => (0..es.n).collect(),
    };
    let target = es.rep_multiplicity();
    let mut trace = SelectionTrace::new(target);
    let mut cols = ModeColumns::new(es, tol);
    let mut chosen = vec![false; es.n];
    while trace.value < target {
        let mut best: Option<(usize, usize)> = None;
        for &s in &candidates {
            if chosen[s] {
                continue;
            }
            let g = cols.gain(es, s);
            if g > 0 && best.map_or(true, |(_, bg)| g > bg) {
                best = Some((s, g));
            }
        }
        let Some((s, _)) = best else {
            let j = cols.spans.iter().position(|sp| !sp.full()).unwrap_or(0);
            return Err(inaccessible_error(es, cols.reps[j], cols.spans[j].rank()));
        };
        let g = cols.add(es, s);
        chosen[s] = true;
        trace.push(s, g);
    }
    // The incremental spans can overstate a rank on badly conditioned modes;
    // finish against the SVD rank used everywhere else.
    loop {
        let deficient: Vec<usize> = cols
            .reps
            .iter()
            .copied()
            .filter(|&i| es.modes[i].rank_on(&trace.chosen, tol) < es.modes[i].multiplicity)
            .collect();
        let Some(&first) = deficient.first() else { break };
        let base: usize = deficient.iter().map(|&i| es.modes[i].rank_on(&trace.chosen, tol)).sum();
        let mut best: Option<(usize, usize)> = None;
        for &s in &candidates {
            if chosen[s] {
                continue;
            }
            let mut with = trace.chosen.clone();
            with.push(s);
            let v: usize = deficient.iter().map(|&i| es.modes[i].rank_on(&with, tol)).sum();
            if v > base && best.map_or(true, |(_, bv)| v > bv) {
                best = Some((s, v));
            }
        }
        let Some((s, v)) = best else {
            return Err(inaccessible_error(es, first, es.modes[first].rank_on(&trace.chosen, tol)));
        };
        chosen[s] = true;
        trace.push(s, v - base);
        trace.value = f_value(es, &trace.chosen, tol);
    }
    let mut set = trace.chosen.clone();
    set.sort_unstable();
    Ok((set, trace))
}

/// Greedy choice of columns of `B` maximising `Σ rank(X_iᵀ B_S)`.
pub fn greedy_column_select(
    es: &EigenStructure,
    b: &DMatrix<f64>,
    tol: &ToleranceConfig,
) -> Result<(Vec<usize>, SelectionTrace<usize>)> {
    if let Some((mode, achieved)) = first_uncontrollable_mode(es, b, tol)? {
        return Err(Error::NotControllable {
            mode,
            achieved,
            required: es.modes[mode].multiplicity,
        });
    }
    let reps = mode_representatives(es);
    let bscale = linalg::spectral_norm(b);
    let projected: Vec<DMatrix<Complex64>> = reps.iter().map(|&i| es.modes[i].project(b)).collect();
    let mut spans: Vec<Span> = reps
        .iter()
        .map(|&i| {
            let m = &es.modes[i];
            let thr = tol.rank_tol(m.multiplicity, b.ncols()).max(tol.basis_floor) * m.scale() * bscale;
            Span::new(m.multiplicity, thr)
        })
        .collect();
    let target = es.rep_multiplicity();
    let mut trace = SelectionTrace::new(target);
    let mut chosen = vec![false; b.ncols()];
    let mut buf = Vec::new();
    while trace.value < target {
        let mut best: Option<(usize, usize)> = None;
        for c in 0..b.ncols() {
            if chosen[c] {
                continue;
            }
            let g = spans
                .iter()
                .zip(&projected)
                .filter(|(sp, pm)| sp.would_grow(pm.column(c).iter().copied(), &mut buf))
                .count();
            if g > 0 && best.map_or(true, |(_, bg)| g > bg) {
                best = Some((c, g));
            }
        }
        let Some((c, _)) = best else {
            return Err(Error::Numeric("column selection stalled before full rank".into()));
        };
        let g = spans
            .iter_mut()
            .zip(&projected)
            .map(|(sp, pm)| sp.add(pm.column(c).iter().copied()))
            .filter(|&grew| grew)
            .count();
        chosen[c] = true;
        trace.push(c, g);
    }
    let mut set = trace.chosen.clone();
    set.sort_unstable();
    Ok((set, trace))
}

/// Outcome of [`gramian_greedy_macp`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GramianSelection {
    pub states: Vec<usize>,
    /// Rank of `W_S` after each step.
    pub ranks: Vec<usize>,
    pub seconds: f64,
}

/// Numeric rank of a symmetric positive semidefinite matrix.
fn psd_rank(w: &DMatrix<f64>, tol: &ToleranceConfig) -> usize {
    let ev = w.clone().symmetric_eigenvalues();
    let max = ev.iter().copied().fold(0.0, f64::max);
    if max <= 0.0 {
        return 0;
    }
    let cut = tol.rank_tol(w.nrows(), w.ncols()) * max;
    ev.iter().filter(|&&x| x > cut).count()
}

/// Baseline: greedily add the state that most increases the rank of the
/// controllability Gramian `W_S` (`A W_S + W_S Aᵀ + I_S I_Sᵀ = 0`) until it
/// is nonsingular. `A` must be Hurwitz. Per-state Gramians are solved once
/// and summed, since `W_S` is linear in `I_S I_Sᵀ`.
pub fn gramian_greedy_macp(a: &StateMatrix, tol: &ToleranceConfig) -> Result<GramianSelection> {
    let start = Instant::now();
    let n = a.n();
    let solver = LyapunovSolver::new(a.matrix())?;
    let unit: Vec<DMatrix<f64>> = (0..n).map(|s| solver.solve_unit(s)).collect();
    let mut w = DMatrix::<f64>::zeros(n, n);
    let mut chosen = vec![false; n];
    let mut states = Vec::new();
    let mut ranks = Vec::new();
    let mut rank = 0;
    while rank < n {
        let mut best: Option<(usize, usize)> = None;
        for s in 0..n {
            if chosen[s] {
                continue;
            }
            let r = psd_rank(&(&w + &unit[s]), tol);
            if r > rank && best.map_or(true, |(_, br)| r > br) {
                best = Some((s, r));
            }
        }
        let Some((s, r)) = best else { break };
        w += &unit[s];
        chosen[s] = true;
        states.push(s);
        ranks.push(r);
        rank = r;
    }
    if rank < n {
        return Err(Error::Numeric(format!("Gramian rank stalled at {rank} of {n}")));
    }
    states.sort_unstable();
    Ok(GramianSelection {
        states,
        ranks,
        seconds: start.elapsed().as_secs_f64(),
    })
}
