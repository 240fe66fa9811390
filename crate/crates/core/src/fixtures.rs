//! Reference systems used throughout the tests and by `fixture:NAME` arguments of the CLI.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::pattern::SparsityPattern;
use crate::spectral::{EigenStructure, StateMatrix, ToleranceConfig};

/// 6×6 matrix with eigenvalues 1, 2, 3, each of geometric multiplicity 2.
pub fn paired() -> StateMatrix {
    StateMatrix::from_rows(&[
        vec![4.0 / 3.0, 0.0, 0.0, -4.0 / 3.0, 0.0, 0.0],
        vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
        vec![0.0, 0.0, 3.0, 0.0, 0.0, 0.0],
        vec![-1.0 / 6.0, 0.0, 0.0, 5.0 / 3.0, 0.0, 0.0],
        vec![0.0, 0.0, -3.0, 0.0, 2.0, 0.0],
        vec![0.0, 1.0, 0.0, 0.0, 0.0, 3.0],
    ])
    .expect("fixture is valid")
}

/// Rows of a fixed choice of `X_iᵀ` for the three eigenvalues of [`paired`].
pub fn paired_reference_rows() -> [(f64, [[f64; 6]; 2]); 3] {
    [
        (1.0, [[1.0, 0.0, 0.0, 2.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0, 0.0, 0.0]]),
        (2.0, [[0.0, 0.0, 3.0, 0.0, 1.0, 0.0], [-1.0, 0.0, 0.0, 4.0, 0.0, 0.0]]),
        (3.0, [[0.0, 1.0, 0.0, 0.0, 0.0, 2.0], [0.0, 0.0, 1.0, 0.0, 0.0, 0.0]]),
    ]
}

/// Eigenstructure of [`paired`] built from the reference bases.
pub fn paired_reference(tol: &ToleranceConfig) -> EigenStructure {
    let bases = paired_reference_rows()
        .into_iter()
        .map(|(l, rows)| {
            let x = DMatrix::from_fn(6, 2, |s, k| Complex64::new(rows[k][s], 0.0));
            (Complex64::new(l, 0.0), x)
        })
        .collect();
    EigenStructure::from_left_bases(&paired(), bases, tol).expect("reference bases are valid")
}

/// Input pattern `[[*,*,0,0,0,0],[0,*,*,0,0,0]]ᵀ` used with [`paired`].
pub fn paired_pattern() -> SparsityPattern {
    SparsityPattern::new(6, 2, vec![(0, 0), (1, 0), (1, 1), (2, 1)]).expect("fixture is valid")
}

/// Two-stage series RLC circuit with R = L = C = 1; states are
/// `[i_1, u_1, i_2, u_2]`.
pub fn circuit() -> StateMatrix {
    StateMatrix::from_rows(&[
        vec![-1.0, -1.0, 0.0, 0.0],
        vec![1.0, 0.0, -1.0, 0.0],
        vec![0.0, 0.0, -1.0, -1.0],
        vec![0.0, 0.0, 1.0, 0.0],
    ])
    .expect("fixture is valid")
}

/// `2 I_2`, a single eigenvalue of multiplicity two.
pub fn double_eigenvalue() -> StateMatrix {
    StateMatrix::new(DMatrix::identity(2, 2) * 2.0).expect("fixture is valid")
}

pub fn by_name(name: &str) -> Option<StateMatrix> {
    match name {
        "paired" => Some(paired()),
        "circuit" => Some(circuit()),
        "double" => Some(double_eigenvalue()),
        _ => None,
    }
}
