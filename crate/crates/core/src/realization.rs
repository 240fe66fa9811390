//! Deterministic construction of real input matrices for feasible patterns,
//! and pattern constructions from accessible sets or actuated rows.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feasibility::{first_inaccessible_mode, inaccessible_error, pattern_feasible, AccessibleSet};
use crate::linalg;
use crate::matroid::IndependentMatchWitness;
use crate::pattern::{pattern_union, SparsityPattern};
use crate::spectral::{mode_representatives, EigenStructure, ToleranceConfig};

/// One accepted update of the construction loop.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealizationStep {
    pub mode: usize,
    /// `(value, |Z_value|)` for every tried value.
    pub tried: Vec<(f64, usize)>,
    pub chosen: f64,
    pub z_size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealizationTrace {
    pub witnesses: Vec<IndependentMatchWitness>,
    pub values: Vec<f64>,
    pub steps: Vec<RealizationStep>,
    /// Row-major final `B`.
    pub b: Vec<Vec<f64>>,
}

/// `det(X_qᵀ B_φ) ≠ 0` to tolerance: the determinant is compared with the
/// product of the row norms (Hadamard bound).
fn det_nonzero(es: &EigenStructure, w: &IndependentMatchWitness, b: &DMatrix<f64>, tol: &ToleranceConfig) -> bool {
    let mode = &es.modes[w.mode_index];
    let bphi = DMatrix::from_fn(es.n, w.phi.len(), |r, c| b[(r, w.phi[c])]);
    let m = mode.project(&bphi);
    let norms = linalg::row_norms(&m);
    let floor = tol.basis_floor * mode.scale() * linalg::spectral_norm(&bphi).max(f64::MIN_POSITIVE);
    if norms.iter().any(|&r| r <= floor) {
        return false;
    }
    let bound: f64 = norms.iter().product();
    linalg::det_complex(&m).norm() > tol.det_rel_tol * bound
}

fn z_size(es: &EigenStructure, ws: &[IndependentMatchWitness], b: &DMatrix<f64>, tol: &ToleranceConfig) -> usize {
    ws.iter().filter(|w| det_nonzero(es, w, b, tol)).count()
}

/// Default candidate values `1, …, 1 + N` where `N = Σ k_i` over
/// representative modes.
pub fn default_values(es: &EigenStructure) -> Vec<f64> {
    (1..=1 + es.rep_multiplicity()).map(|v| v as f64).collect()
}

/// Builds a real `B` on the support of `pattern` with `(A, B)` controllable.
pub fn construct_input_matrix(
    es: &EigenStructure,
    pattern: &SparsityPattern,
    tol: &ToleranceConfig,
) -> Result<(DMatrix<f64>, RealizationTrace)> {
    construct_input_matrix_with(es, pattern, tol, &default_values(es))
}

/// As [`construct_input_matrix`] with a custom candidate value set, which
/// must hold at least `1 + N` distinct nonzero reals.
pub fn construct_input_matrix_with(
    es: &EigenStructure,
    pattern: &SparsityPattern,
    tol: &ToleranceConfig,
    values: &[f64],
) -> Result<(DMatrix<f64>, RealizationTrace)> {
    let need = 1 + es.rep_multiplicity();
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    if sorted.len() != values.len() || values.iter().any(|v| !v.is_finite() || *v == 0.0) {
        return Err(Error::InvalidArgument("candidate values must be distinct, finite and nonzero".into()));
    }
    if values.len() < need {
        return Err(Error::InvalidArgument(format!(
            "need at least {need} candidate values, got {}",
            values.len()
        )));
    }
    let witnesses = pattern_feasible(es, pattern, tol)?.into_result(es)?;
    let p = witnesses.len();
    let mut b = DMatrix::<f64>::zeros(es.n, pattern.l());
    let mut steps = Vec::new();
    let mut c_star = 0;

    for w in &witnesses {
        if !det_nonzero(es, w, &b, tol) {
            let mut tried = Vec::with_capacity(values.len());
            let mut best: Option<(f64, usize)> = None;
            for &m in values {
                let mut trial = b.clone();
                for &(r, c) in &w.matching {
                    trial[(r, c)] += m;
                }
                let z = z_size(es, &witnesses, &trial, tol);
                tried.push((m, z));
                // ties keep the lowest value
                let better = match best {
                    None => true,
                    Some((bm, bz)) => z > bz || (z == bz && m < bm),
                };
                if better {
                    best = Some((m, z));
                }
            }
            let (m, z) = best.expect("values are nonempty");
            for &(r, c) in &w.matching {
                b[(r, c)] += m;
            }
            c_star = z;
            steps.push(RealizationStep {
                mode: w.mode_index,
                tried,
                chosen: m,
                z_size: z,
            });
        }
        if c_star == p {
            break;
        }
    }
    let final_z = z_size(es, &witnesses, &b, tol);
    if final_z != p {
        return Err(Error::Numeric(format!(
            "only {final_z} of {p} modes have a nonzero determinant after the construction loop"
        )));
    }
    let rows = (0..b.nrows()).map(|r| b.row(r).iter().copied().collect()).collect();
    Ok((
        b,
        RealizationTrace {
            witnesses,
            values: values.to_vec(),
            steps,
            b: rows,
        },
    ))
}

/// Scans `candidates` in order and keeps the states that raise the rank of
/// mode `i`, giving a member of `H_i` inside `candidates` when one exists.
pub fn extract_h(es: &EigenStructure, i: usize, candidates: &[usize], tol: &ToleranceConfig) -> Vec<usize> {
    let mode = &es.modes[i];
    let mut h: Vec<usize> = Vec::with_capacity(mode.multiplicity);
    for &s in candidates {
        if h.len() == mode.multiplicity {
            break;
        }
        h.push(s);
        if mode.rank_on(&h, tol) < h.len() {
            h.pop();
        }
    }
    h
}

/// Entrywise union over representative modes of the patterns placing the
/// `j`-th smallest element of `h_i` in column `j`.
pub fn h_sets_to_pattern(n: usize, l: usize, h_sets: &[Vec<usize>]) -> Result<SparsityPattern> {
    let mut parts = vec![SparsityPattern::empty(n, l)];
    for h in h_sets {
        let mut h = h.clone();
        h.sort_unstable();
        if h.len() > l {
            return Err(Error::TooFewInputs { l, k_max: h.len() });
        }
        parts.push(SparsityPattern::new(n, l, h.into_iter().enumerate().map(|(j, r)| (r, j)))?);
    }
    pattern_union(&parts)
}

fn rows_pattern(es: &EigenStructure, rows: &[usize], l: usize, tol: &ToleranceConfig) -> Result<SparsityPattern> {
    if l < es.k_max {
        return Err(Error::TooFewInputs { l, k_max: es.k_max });
    }
    let mut h_sets = Vec::new();
    for i in mode_representatives(es) {
        let h = extract_h(es, i, rows, tol);
        if h.len() < es.modes[i].multiplicity {
            return Err(inaccessible_error(es, i, h.len()));
        }
        h_sets.push(h);
    }
    let p = h_sets_to_pattern(es.n, l, &h_sets)?;
    debug_assert!(pattern_feasible(es, &p, tol).map(|r| r.feasible).unwrap_or(false));
    Ok(p)
}

/// Pattern with `k_max` inputs whose actuated rows lie in the accessible set
/// and which admits a controllable realization.
pub fn micp_min_input_pattern(es: &EigenStructure, xa: &AccessibleSet, tol: &ToleranceConfig) -> Result<SparsityPattern> {
    if xa.n() != es.n {
        return Err(Error::Dimension(format!("accessible set is over {} states, A has {}", xa.n(), es.n)));
    }
    if let Some((i, r)) = first_inaccessible_mode(es, xa, tol) {
        return Err(inaccessible_error(es, i, r));
    }
    rows_pattern(es, xa.states(), es.k_max, tol)
}

/// Converts a set of actuated states into a feasible pattern with `l`
/// inputs, actuating only those states.
pub fn rows_to_l_pattern(es: &EigenStructure, rows: &[usize], l: usize, tol: &ToleranceConfig) -> Result<SparsityPattern> {
    if let Some(&bad) = rows.iter().find(|&&r| r >= es.n) {
        return Err(Error::IndexOutOfRange { index: bad, size: es.n });
    }
    let mut sorted = rows.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    rows_pattern(es, &sorted, l, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feasibility::{is_controllable_es, kalman_rank};
    use crate::fixtures;
    use crate::spectral::{compute_eigenstructure, StateMatrix};

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    #[test]
    fn paired_realization() {
        let es = fixtures::paired_reference(&tol());
        let p = fixtures::paired_pattern();
        let (b, trace) = construct_input_matrix(&es, &p, &tol()).unwrap();
        for r in 0..6 {
            for c in 0..2 {
                if b[(r, c)] != 0.0 {
                    assert!(p.contains(r, c));
                }
            }
        }
        assert!(is_controllable_es(&es, &b, &tol()).unwrap());
        assert_eq!(kalman_rank(&fixtures::paired(), &b, 1e-8).unwrap(), 6);
        assert!(trace.steps.len() <= 3);
        let zs: Vec<usize> = trace.steps.iter().map(|s| s.z_size).collect();
        assert!(zs.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(*zs.last().unwrap(), 3);
        let (b2, trace2) = construct_input_matrix(&es, &p, &tol()).unwrap();
        assert_eq!(b, b2);
        assert_eq!(trace, trace2);
    }

    #[test]
    fn circuit_on_rows_one_three() {
        let es = compute_eigenstructure(&fixtures::circuit(), &tol()).unwrap();
        let p = SparsityPattern::new(4, 1, [(0, 0), (2, 0)]).unwrap();
        let (b, _) = construct_input_matrix(&es, &p, &tol()).unwrap();
        assert!(is_controllable_es(&es, &b, &tol()).unwrap());
        assert_eq!(b[(1, 0)], 0.0);
        assert_eq!(b[(3, 0)], 0.0);
    }

    #[test]
    fn diagonal_two_by_two() {
        let a = StateMatrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 3.0]]).unwrap();
        let es = compute_eigenstructure(&a, &tol()).unwrap();
        let p = SparsityPattern::diagonal(2, &[0, 1]).unwrap();
        let (b, trace) = construct_input_matrix(&es, &p, &tol()).unwrap();
        assert_eq!(trace.values, vec![1.0, 2.0, 3.0]);
        assert!(b[(0, 0)] != 0.0 && b[(1, 1)] != 0.0);
        assert_eq!(b[(0, 1)], 0.0);
    }

    #[test]
    fn infeasible_and_bad_values() {
        let es = fixtures::paired_reference(&tol());
        let bad = SparsityPattern::new(6, 2, [(0, 0), (1, 1), (2, 0)]).unwrap();
        assert!(matches!(
            construct_input_matrix(&es, &bad, &tol()),
            Err(Error::InfeasiblePattern { .. })
        ));
        let p = fixtures::paired_pattern();
        assert!(construct_input_matrix_with(&es, &p, &tol(), &[1.0, 2.0]).is_err());
        let vals: Vec<f64> = (0..7).map(|v| -0.5 - v as f64).collect();
        let (b, _) = construct_input_matrix_with(&es, &p, &tol(), &vals).unwrap();
        assert!(is_controllable_es(&es, &b, &tol()).unwrap());
    }

    #[test]
    fn micp_patterns() {
        let es = fixtures::paired_reference(&tol());
        let p = micp_min_input_pattern(&es, &AccessibleSet::all(6), &tol()).unwrap();
        assert_eq!(p.l(), 2);
        assert!(pattern_feasible(&es, &p, &tol()).unwrap().feasible);
        let xa = AccessibleSet::new(6, [0, 3, 4]).unwrap();
        assert!(matches!(
            micp_min_input_pattern(&es, &xa, &tol()),
            Err(Error::InaccessibleMode { mode: 0, achieved: 1, .. })
        ));

        let esc = compute_eigenstructure(&fixtures::circuit(), &tol()).unwrap();
        let xa = AccessibleSet::new(4, [0, 2]).unwrap();
        let p = micp_min_input_pattern(&esc, &xa, &tol()).unwrap();
        assert_eq!(p.l(), 1);
        assert!(p.actuated_states().iter().all(|s| xa.contains(*s)));
    }

    #[test]
    fn rows_to_pattern() {
        let es = fixtures::paired_reference(&tol());
        let p = rows_to_l_pattern(&es, &[0, 1, 2], 3, &tol()).unwrap();
        assert_eq!(p.actuated_states(), vec![0, 1, 2]);
        assert!(pattern_feasible(&es, &p, &tol()).unwrap().feasible);
        let p2 = rows_to_l_pattern(&es, &[0, 1, 2], 2, &tol()).unwrap();
        assert_eq!(p2.entries().collect::<Vec<_>>(), vec![(0, 0), (1, 0), (1, 1), (2, 1)]);
        assert!(matches!(
            rows_to_l_pattern(&es, &[0, 1, 2], 1, &tol()),
            Err(Error::TooFewInputs { .. })
        ));
        assert!(rows_to_l_pattern(&es, &[0, 3, 4], 2, &tol()).is_err());
        assert!(rows_to_l_pattern(&es, &[1, 2, 3], 2, &tol()).is_ok());
    }
}
