//! Small dense linear-algebra helpers shared by the other modules.

use nalgebra::{ComplexField, DMatrix};
use num_complex::Complex64;

/// Singular values of `m` (unordered). Empty matrices have none.
pub fn singular_values<T>(m: &DMatrix<T>) -> Vec<f64>
where
    T: ComplexField<RealField = f64>,
{
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    m.clone().singular_values().iter().copied().collect()
}

/// Number of singular values above `max(rel * sigma_max, abs_floor)`.
pub fn rank_with_cutoff<T>(m: &DMatrix<T>, rel: f64, abs_floor: f64) -> usize
where
    T: ComplexField<RealField = f64>,
{
    let sv = singular_values(m);
    let smax = sv.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    let cutoff = (rel * smax).max(abs_floor);
    sv.iter().filter(|&&s| s > 0.0 && s >= cutoff).count()
}

/// Largest singular value.
pub fn spectral_norm<T>(m: &DMatrix<T>) -> f64
where
    T: ComplexField<RealField = f64>,
{
    singular_values(m).into_iter().fold(0.0, f64::max)
}

pub fn to_complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Orthonormal basis of `{x : m x = 0}` using singular values below `cutoff`.
pub fn null_space_real(m: &DMatrix<f64>, cutoff: f64) -> DMatrix<f64> {
    let n = m.ncols();
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t.expect("requested v_t");
    let mut cols = Vec::new();
    // thin SVD: rows of v_t beyond the singular values are absent, so pad
    // with the orthogonal complement when m is wide.
    for (j, &s) in svd.singular_values.iter().enumerate() {
        if s <= cutoff {
            cols.push(vt.row(j).transpose());
        }
    }
    if vt.nrows() < n {
        let extra = complement_real(&vt, n);
        cols.extend(extra);
    }
    if cols.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

fn complement_real(vt: &DMatrix<f64>, n: usize) -> Vec<nalgebra::DVector<f64>> {
    let mut basis: Vec<nalgebra::DVector<f64>> =
        (0..vt.nrows()).map(|j| vt.row(j).transpose()).collect();
    let mut out = Vec::new();
    for e in 0..n {
        let mut v = nalgebra::DVector::<f64>::zeros(n);
        v[e] = 1.0;
        for b in &basis {
            let c = b.dot(&v);
            v -= b * c;
        }
        let nv = v.norm();
        if nv > 1e-8 {
            v /= nv;
            basis.push(v.clone());
            out.push(v);
        }
        if basis.len() == n {
            break;
        }
    }
    out
}

/// Orthonormal basis of `{x : m x = 0}` for a square complex matrix.
pub fn null_space_complex(m: &DMatrix<Complex64>, cutoff: f64) -> DMatrix<Complex64> {
    let n = m.ncols();
    assert_eq!(m.nrows(), n, "null_space_complex expects a square matrix");
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t.expect("requested v_t");
    let mut cols = Vec::new();
    for (j, &s) in svd.singular_values.iter().enumerate() {
        if s <= cutoff {
            // row j of V^H is conj(v_j)^T
            cols.push(vt.row(j).transpose().map(|z| z.conj()));
        }
    }
    if cols.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Determinant of a small square complex matrix.
pub fn det_complex(m: &DMatrix<Complex64>) -> Complex64 {
    if m.nrows() == 0 {
        return Complex64::new(1.0, 0.0);
    }
    m.clone().determinant()
}

/// Row 2-norms of a complex matrix.
pub fn row_norms(m: &DMatrix<Complex64>) -> Vec<f64> {
    (0..m.nrows())
        .map(|r| m.row(r).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .collect()
}

/// Transpose of a complex matrix without conjugation.
pub fn plain_transpose(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    m.transpose()
}

/// Frobenius norm of a real matrix.
pub fn fro(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}



/// Iteration budget handed to the Schur solvers.
fn schur_budget(n: usize) -> usize {
    100 * n.max(10)
}

/// Deterministic orthogonal matrix used to re-run a stalled QR iteration on
/// a similar matrix.
fn mixing_orthogonal(n: usize, attempt: usize) -> DMatrix<f64> {
    let mut state = 0x2545_f491_4f6c_dd1d_u64 ^ attempt as u64;
    let r = DMatrix::from_fn(n, n, |_, _| {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    });
    r.qr().q()
}

/// Bounded complex Schur form `A = Q T Qᴴ`. When the shifted QR iteration
/// stalls (as it can on shifted nilpotent blocks) it is retried on the
/// trace-centred matrix, whose Schur vectors are the same, and then on
/// `Vᵀ A V` for a few fixed orthogonal `V`.
pub fn complex_schur(a: &DMatrix<f64>) -> Option<(DMatrix<Complex64>, DMatrix<Complex64>)> {
    let n = a.nrows();
    if let Some(s) = to_complex(a).try_schur(f64::EPSILON, schur_budget(n)) {
        return Some(s.unpack());
    }
    let sigma = if n == 0 { 0.0 } else { a.trace() / n as f64 };
    let centred = a - DMatrix::<f64>::identity(n, n) * sigma;
    if let Some(s) = to_complex(&centred).try_schur(f64::EPSILON, schur_budget(n)) {
        let (q, mut t) = s.unpack();
        for i in 0..n {
            t[(i, i)] += Complex64::new(sigma, 0.0);
        }
        return Some((q, t));
    }
    for attempt in 0..4 {
        let v = mixing_orthogonal(n, attempt);
        let b = v.transpose() * a * &v;
        if let Some(s) = to_complex(&b).try_schur(f64::EPSILON, schur_budget(n)) {
            let (q, t) = s.unpack();
            return Some((to_complex(&v) * q, t));
        }
    }
    None
}

/// Eigenvalues of a real square matrix (multishift QR with aggressive early
/// deflation), falling back to the diagonal of [`complex_schur`].
pub fn eigenvalues(a: &DMatrix<f64>) -> Option<Vec<Complex64>> {
    let n = a.nrows();
    if n == 0 {
        return Some(Vec::new());
    }
    let f = faer::Mat::<f64>::from_fn(n, n, |i, j| a[(i, j)]);
    if let Ok(e) = f.eigenvalues() {
        let e: Vec<Complex64> = e.iter().map(|z| Complex64::new(z.re, z.im)).collect();
        if e.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Some(e);
        }
    }
    complex_schur(a).map(|(_, t)| (0..n).map(|i| t[(i, i)]).collect())
}
