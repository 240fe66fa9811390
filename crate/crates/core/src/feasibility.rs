//! Controllability of numeric pairs and feasibility of input patterns.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::matroid::{independently_matched, IndependentMatchWitness};
use crate::pattern::SparsityPattern;
use crate::spectral::{compute_eigenstructure, mode_representatives, EigenStructure, StateMatrix, ToleranceConfig};

/// States that may be actuated directly; the rest are forbidden.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccessibleSet {
    n: usize,
    states: Vec<usize>,
}

impl AccessibleSet {
    pub fn new(n: usize, states: impl IntoIterator<Item = usize>) -> Result<Self> {
        let set: BTreeSet<usize> = states.into_iter().collect();
        if let Some(&bad) = set.iter().find(|&&s| s >= n) {
            return Err(Error::IndexOutOfRange { index: bad, size: n });
        }
        Ok(AccessibleSet {
            n,
            states: set.into_iter().collect(),
        })
    }

    pub fn all(n: usize) -> Self {
        AccessibleSet {
            n,
            states: (0..n).collect(),
        }
    }

    /// Complement of `forbidden`.
    pub fn from_forbidden(n: usize, forbidden: &[usize]) -> Result<Self> {
        if let Some(&bad) = forbidden.iter().find(|&&s| s >= n) {
            return Err(Error::IndexOutOfRange { index: bad, size: n });
        }
        let f: BTreeSet<usize> = forbidden.iter().copied().collect();
        Ok(AccessibleSet {
            n,
            states: (0..n).filter(|s| !f.contains(s)).collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Sorted accessible states.
    pub fn states(&self) -> &[usize] {
        &self.states
    }

    pub fn contains(&self, s: usize) -> bool {
        self.states.binary_search(&s).is_ok()
    }

    pub fn forbidden(&self) -> Vec<usize> {
        (0..self.n).filter(|&s| !self.contains(s)).collect()
    }
}

/// Numeric rank of `X_iᵀ B` for mode `i`, with the basis noise floor scaled
/// by `‖B‖`.
pub fn mode_rank_of_input(es: &EigenStructure, i: usize, b: &DMatrix<f64>, tol: &ToleranceConfig) -> usize {
    let mode = &es.modes[i];
    let m = mode.project(b);
    let floor = tol.basis_floor * mode.scale() * linalg::spectral_norm(b);
    linalg::rank_with_cutoff(&m, tol.rank_tol(m.nrows(), m.ncols()), floor)
}

/// First representative mode at which `X_iᵀ B` loses row rank, with its
/// achieved rank.
pub fn first_uncontrollable_mode(es: &EigenStructure, b: &DMatrix<f64>, tol: &ToleranceConfig) -> Result<Option<(usize, usize)>> {
    if b.nrows() != es.n {
        return Err(Error::Dimension(format!(
            "B has {} rows but A is {}x{}",
            b.nrows(),
            es.n,
            es.n
        )));
    }
    if b.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    for i in mode_representatives(es) {
        let r = mode_rank_of_input(es, i, b, tol);
        if r < es.modes[i].multiplicity {
            return Ok(Some((i, r)));
        }
    }
    Ok(None)
}

/// Eigenvector (PBH) test over precomputed eigenstructure.
pub fn is_controllable_es(es: &EigenStructure, b: &DMatrix<f64>, tol: &ToleranceConfig) -> Result<bool> {
    Ok(first_uncontrollable_mode(es, b, tol)?.is_none())
}

/// Eigenvector (PBH) controllability test: `X_iᵀ B` has full row rank for
/// every distinct eigenvalue.
pub fn is_controllable(a: &StateMatrix, b: &DMatrix<f64>, tol: &ToleranceConfig) -> Result<bool> {
    if b.nrows() != a.n() {
        return Err(Error::Dimension(format!("B has {} rows but A is {}x{}", b.nrows(), a.n(), a.n())));
    }
    let es = compute_eigenstructure(a, tol)?;
    is_controllable_es(&es, b, tol)
}

/// Rank of the Kalman matrix `[B, AB, …, A^{n−1}B]` with relative cutoff
/// `rel_tol`. Blocks are normalised before stacking to keep powers of `A`
/// from swamping the cutoff; meant for small `n`.
pub fn kalman_rank(a: &StateMatrix, b: &DMatrix<f64>, rel_tol: f64) -> Result<usize> {
    let n = a.n();
    if b.nrows() != n {
        return Err(Error::Dimension(format!("B has {} rows but A is {n}x{n}", b.nrows())));
    }
    let l = b.ncols();
    let mut k = DMatrix::<f64>::zeros(n, n * l);
    let mut block = b.clone();
    for j in 0..n {
        let norm = linalg::fro(&block);
        if norm > 0.0 {
            block /= norm;
        }
        k.view_mut((0, j * l), (n, l)).copy_from(&block);
        block = a.matrix() * &block;
    }
    Ok(linalg::rank_with_cutoff(&k, rel_tol, 0.0))
}

/// Result of [`pattern_feasible`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    /// Witnesses for the representative modes checked so far (all of them on
    /// success).
    pub witnesses: Vec<IndependentMatchWitness>,
    /// First representative mode that cannot be independently matched.
    pub failing_mode: Option<usize>,
}

impl FeasibilityReport {
    /// Converts a failure into [`Error::InfeasiblePattern`].
    pub fn into_result(self, es: &EigenStructure) -> Result<Vec<IndependentMatchWitness>> {
        match self.failing_mode {
            None => Ok(self.witnesses),
            Some(i) => {
                let w = self.witnesses.last().expect("failing witness recorded");
                Err(Error::InfeasiblePattern {
                    mode: i,
                    re: es.modes[i].lambda.re,
                    im: es.modes[i].lambda.im,
                    achieved: w.size,
                    required: es.modes[i].multiplicity,
                })
            }
        }
    }
}

/// Whether some real `B` with this sparsity pattern makes `(A, B)`
/// controllable: every representative mode must be independently matched.
pub fn pattern_feasible(es: &EigenStructure, pattern: &SparsityPattern, tol: &ToleranceConfig) -> Result<FeasibilityReport> {
    if pattern.n() != es.n {
        return Err(Error::Dimension(format!(
            "pattern has {} rows but the state dimension is {}",
            pattern.n(),
            es.n
        )));
    }
    let mut witnesses = Vec::new();
    for i in mode_representatives(es) {
        let (ok, w) = independently_matched(es, i, pattern, tol);
        witnesses.push(w);
        if !ok {
            return Ok(FeasibilityReport {
                feasible: false,
                witnesses,
                failing_mode: Some(i),
            });
        }
    }
    Ok(FeasibilityReport {
        feasible: true,
        witnesses,
        failing_mode: None,
    })
}

/// First representative mode whose basis restricted to the accessible states
/// is rank deficient, with the achieved rank.
pub fn first_inaccessible_mode(es: &EigenStructure, xa: &AccessibleSet, tol: &ToleranceConfig) -> Option<(usize, usize)> {
    mode_representatives(es).into_iter().find_map(|i| {
        let r = es.modes[i].rank_on(xa.states(), tol);
        (r < es.modes[i].multiplicity).then_some((i, r))
    })
}

/// Whether the system can be made controllable actuating only accessible
/// states.
pub fn micp_feasible(es: &EigenStructure, xa: &AccessibleSet, tol: &ToleranceConfig) -> bool {
    xa.n() == es.n && first_inaccessible_mode(es, xa, tol).is_none()
}

pub(crate) fn inaccessible_error(es: &EigenStructure, mode: usize, achieved: usize) -> Error {
    let m = &es.modes[mode];
    Error::InaccessibleMode {
        mode,
        re: m.lambda.re,
        im: m.lambda.im,
        achieved,
        required: m.multiplicity,
    }
}
