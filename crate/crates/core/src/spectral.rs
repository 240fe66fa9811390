//! Left eigenstructure of a state transition matrix and tolerance-controlled
//! numeric rank.
//!
//! Every distinct eigenvalue `λ_i` carries a left eigenbasis `X_i` (columns
//! span `{x : xᵀ(λ_i I − A) = 0}`). Downstream modules only ever look at the
//! `k_i × n` matrix `X_iᵀ`, whose columns are indexed by states.

use nalgebra::{ComplexField, DMatrix};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// A real square state transition matrix with finite entries.
#[derive(Clone, Debug, PartialEq)]
pub struct StateMatrix(DMatrix<f64>);

impl StateMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() == 0 || m.nrows() != m.ncols() {
            return Err(Error::Dimension(format!(
                "state matrix must be square and nonempty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(StateMatrix(m))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension("rows of unequal length".into()));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::new(DMatrix::from_row_slice(n, n, &flat))
    }

    pub fn identity(n: usize) -> Self {
        StateMatrix(DMatrix::identity(n, n))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }
}

/// Numerical tolerances. The defaults are engineering choices; all of them
/// can be overridden from the CLI with `--tol key=value`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToleranceConfig {
    /// Relative singular-value cutoff. `None` selects
    /// `max(rows, cols) * f64::EPSILON * 64` per matrix.
    pub rank_rel_tol: Option<f64>,
    /// Relative cutoff for the determinant tests of the realization loop.
    pub det_rel_tol: f64,
    /// Eigenvalues closer than `cluster_tol * (1 + |λ|)` are merged.
    pub cluster_tol: f64,
    /// Singular values of `λI − A` below `null_rel_tol * (‖A‖_F + |λ|)`
    /// count towards the left null space.
    pub null_rel_tol: f64,
    /// Absolute noise floor, relative to the basis norm, below which parts of
    /// a computed eigenbasis are treated as exact zeros.
    pub basis_floor: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        ToleranceConfig {
            rank_rel_tol: None,
            det_rel_tol: 1e-10,
            cluster_tol: 1e-8,
            null_rel_tol: 1e-9,
            basis_floor: 1e-9,
        }
    }
}

impl ToleranceConfig {
    pub fn rank_tol(&self, rows: usize, cols: usize) -> f64 {
        self.rank_rel_tol
            .unwrap_or(rows.max(cols) as f64 * f64::EPSILON * 64.0)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        if let Some(r) = self.rank_rel_tol {
            if !ok(r) {
                return Err(Error::InvalidArgument("rank_rel_tol must be > 0".into()));
            }
        }
        for (name, v) in [
            ("det_rel_tol", self.det_rel_tol),
            ("cluster_tol", self.cluster_tol),
            ("null_rel_tol", self.null_rel_tol),
            ("basis_floor", self.basis_floor),
        ] {
            if !ok(v) {
                return Err(Error::InvalidArgument(format!("{name} must be > 0")));
            }
        }
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        match key {
            "rank" | "rank_rel_tol" => self.rank_rel_tol = Some(value),
            "det" | "det_rel_tol" => self.det_rel_tol = value,
            "cluster" | "cluster_tol" => self.cluster_tol = value,
            "null" | "null_rel_tol" => self.null_rel_tol = value,
            "floor" | "basis_floor" => self.basis_floor = value,
            _ => return Err(Error::InvalidArgument(format!("unknown tolerance '{key}'"))),
        }
        self.validate()
    }
}

/// Numeric rank: number of singular values `>= rank_tol * sigma_max`.
pub fn numeric_rank<T>(m: &DMatrix<T>, tol: &ToleranceConfig) -> usize
where
    T: ComplexField<RealField = f64>,
{
    linalg::rank_with_cutoff(m, tol.rank_tol(m.nrows(), m.ncols()), 0.0)
}

/// One distinct eigenvalue and its left eigenbasis.
#[derive(Clone, Debug)]
pub struct EigenMode {
    pub lambda: Complex64,
    /// Geometric multiplicity `k_i`.
    pub multiplicity: usize,
    /// `n × k_i` left eigenbasis `X_i`.
    pub eigenbasis: DMatrix<Complex64>,
    pub conjugate_partner: Option<usize>,
    pub is_real: bool,
    /// Number of computed eigenvalues merged into this mode.
    pub algebraic: usize,
    /// `‖X_iᵀ(λ_i I − A)‖_F`.
    pub residual: f64,
    scale: f64,
}

impl EigenMode {
    /// `X_iᵀ`, a `k_i × n` matrix (plain transpose).
    pub fn left_rows(&self) -> DMatrix<Complex64> {
        self.eigenbasis.transpose()
    }

    /// Spectral norm of the basis.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Columns of `X_iᵀ` restricted to `states`.
    pub fn restricted(&self, states: &[usize]) -> DMatrix<Complex64> {
        let k = self.multiplicity;
        DMatrix::from_fn(k, states.len(), |r, c| self.eigenbasis[(states[c], r)])
    }

    /// Numeric rank of `X_iᵀ` restricted to `states`, with the basis noise
    /// floor applied.
    pub fn rank_on(&self, states: &[usize], tol: &ToleranceConfig) -> usize {
        if states.is_empty() {
            return 0;
        }
        let m = self.restricted(states);
        linalg::rank_with_cutoff(
            &m,
            tol.rank_tol(m.nrows(), m.ncols()),
            tol.basis_floor * self.scale,
        )
    }

    /// Whether `states` is a member of `H_i`: `k_i` states on which `X_iᵀ`
    /// has full rank.
    pub fn is_h_set(&self, states: &[usize], tol: &ToleranceConfig) -> bool {
        states.len() == self.multiplicity && self.rank_on(states, tol) == self.multiplicity
    }

    /// `X_iᵀ B`, a `k_i × l` complex matrix.
    pub fn project(&self, b: &DMatrix<f64>) -> DMatrix<Complex64> {
        self.left_rows() * linalg::to_complex(b)
    }

    /// Whether state `s` is structurally present in the basis (some entry of
    /// column `s` of `X_iᵀ` exceeds the threshold).
    pub fn touches(&self, s: usize, tol: &ToleranceConfig) -> bool {
        let thr = self.entry_threshold(tol);
        (0..self.multiplicity).any(|r| self.eigenbasis[(s, r)].norm() > thr)
    }

    pub(crate) fn entry_threshold(&self, tol: &ToleranceConfig) -> f64 {
        let maxabs = self.eigenbasis.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let n = self.eigenbasis.nrows();
        tol.rank_tol(self.multiplicity, n).max(tol.basis_floor) * maxabs
    }
}

/// All modes of a state matrix. Real modes come first (ascending), then the
/// complex modes with positive imaginary part, then their conjugates in the
/// same order, so that modes `p_r + j` and `p_r + j + p_c/2` are partners.
#[derive(Clone, Debug)]
pub struct EigenStructure {
    pub n: usize,
    pub modes: Vec<EigenMode>,
    pub p_r: usize,
    pub p_c: usize,
    pub k_max: usize,
    a: DMatrix<f64>,
}

/// JSON summary line of one mode.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ModeSummary {
    pub index: usize,
    pub re: f64,
    pub im: f64,
    pub multiplicity: usize,
    pub algebraic: usize,
    pub residual: f64,
    pub conjugate_partner: Option<usize>,
    pub representative: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct EigenSummary {
    pub n: usize,
    pub p: usize,
    pub p_r: usize,
    pub p_c: usize,
    pub k_max: usize,
    pub representative_multiplicity: usize,
    pub modes: Vec<ModeSummary>,
}

impl EigenStructure {
    pub fn p(&self) -> usize {
        self.modes.len()
    }

    pub fn state_matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    /// `N = Σ k_i` over representative modes.
    pub fn rep_multiplicity(&self) -> usize {
        mode_representatives(self)
            .iter()
            .map(|&i| self.modes[i].multiplicity)
            .sum()
    }

    pub fn summary(&self) -> EigenSummary {
        let reps = mode_representatives(self);
        EigenSummary {
            n: self.n,
            p: self.p(),
            p_r: self.p_r,
            p_c: self.p_c,
            k_max: self.k_max,
            representative_multiplicity: self.rep_multiplicity(),
            modes: self
                .modes
                .iter()
                .enumerate()
                .map(|(i, m)| ModeSummary {
                    index: i,
                    re: m.lambda.re,
                    im: m.lambda.im,
                    multiplicity: m.multiplicity,
                    algebraic: m.algebraic,
                    residual: m.residual,
                    conjugate_partner: m.conjugate_partner,
                    representative: reps.contains(&i),
                })
                .collect(),
        }
    }

    /// Builds an eigenstructure from externally supplied left eigenbases.
    ///
    /// Each basis must be `n × k` with independent columns satisfying
    /// `X ᵀ(λI − A) ≈ 0`. Complex eigenvalues must appear together with their
    /// conjugate (the conjugate's basis may be omitted; it is then derived).
    pub fn from_left_bases(
        a: &StateMatrix,
        bases: Vec<(Complex64, DMatrix<Complex64>)>,
        tol: &ToleranceConfig,
    ) -> Result<Self> {
        let n = a.n();
        let norm_a = linalg::fro(a.matrix());
        let mut raw = Vec::new();
        for (lambda, x) in bases {
            if x.nrows() != n || x.ncols() == 0 {
                return Err(Error::Dimension(format!(
                    "eigenbasis for {lambda} must be {n} x k with k > 0"
                )));
            }
            let k = x.ncols();
            let r = numeric_rank(&x, tol);
            if r != k {
                return Err(Error::DegenerateCluster {
                    re: lambda.re,
                    im: lambda.im,
                    detail: format!("supplied basis has rank {r} < {k}"),
                });
            }
            let res = residual(a.matrix(), lambda, &x);
            let scale = linalg::spectral_norm(&x);
            let bound = tol.null_rel_tol.max(1e-12) * (norm_a + lambda.norm()) * scale * 1e3;
            if res > bound {
                return Err(Error::DegenerateCluster {
                    re: lambda.re,
                    im: lambda.im,
                    detail: format!("supplied basis residual {res:.3e} too large"),
                });
            }
            raw.push(Candidate {
                lambda,
                basis: x,
                algebraic: k,
                residual: res,
            });
        }
        assemble(a, raw, tol)
    }
}

/// Residual `‖Xᵀ(λI − A)‖_F`.
fn residual(a: &DMatrix<f64>, lambda: Complex64, x: &DMatrix<Complex64>) -> f64 {
    let n = a.nrows();
    let shifted = DMatrix::<Complex64>::identity(n, n) * lambda - linalg::to_complex(a);
    (x.transpose() * shifted).norm()
}

struct Cluster {
    members: Vec<usize>,
    center: Complex64,
    real: bool,
    space: DMatrix<Complex64>,
}

struct Candidate {
    lambda: Complex64,
    basis: DMatrix<Complex64>,
    algebraic: usize,
    residual: f64,
}

fn imag_tol(tol: &ToleranceConfig, z: Complex64) -> f64 {
    tol.cluster_tol * (1.0 + z.norm())
}

/// Orders candidate modes, keeps one basis per conjugate pair and derives the
/// partner's basis by entrywise conjugation.
fn assemble(a: &StateMatrix, raw: Vec<Candidate>, tol: &ToleranceConfig) -> Result<EigenStructure> {
    let mut real = Vec::new();
    let mut upper = Vec::new();
    let mut lower = Vec::new();
    for mut c in raw {
        if c.lambda.im.abs() <= imag_tol(tol, c.lambda) {
            c.lambda = Complex64::new(c.lambda.re, 0.0);
            real.push(c);
        } else if c.lambda.im > 0.0 {
            upper.push(c);
        } else {
            lower.push(c);
        }
    }
    // Lower-half modes without an upper partner are mirrored upward.
    for c in lower {
        let conj = c.lambda.conj();
        let matched = upper
            .iter()
            .any(|u: &Candidate| (u.lambda - conj).norm() <= imag_tol(tol, conj) * 10.0);
        if !matched {
            upper.push(Candidate {
                lambda: conj,
                basis: c.basis.map(|z| z.conj()),
                algebraic: c.algebraic,
                residual: c.residual,
            });
        }
    }
    real.sort_by(|x, y| x.lambda.re.total_cmp(&y.lambda.re));
    upper.sort_by(|x, y| {
        x.lambda
            .re
            .total_cmp(&y.lambda.re)
            .then(x.lambda.im.total_cmp(&y.lambda.im))
    });

    let p_r = real.len();
    let half = upper.len();
    let mut modes = Vec::with_capacity(p_r + 2 * half);
    for c in real {
        let basis = c.basis.map(|z| Complex64::new(z.re, 0.0));
        let scale = linalg::spectral_norm(&basis);
        modes.push(EigenMode {
            lambda: c.lambda,
            multiplicity: basis.ncols(),
            eigenbasis: basis,
            conjugate_partner: None,
            is_real: true,
            algebraic: c.algebraic,
            residual: c.residual,
            scale,
        });
    }
    let mut partners = Vec::with_capacity(half);
    for (j, c) in upper.into_iter().enumerate() {
        let scale = linalg::spectral_norm(&c.basis);
        let conj_basis = c.basis.map(|z| z.conj());
        partners.push(EigenMode {
            lambda: c.lambda.conj(),
            multiplicity: conj_basis.ncols(),
            eigenbasis: conj_basis,
            conjugate_partner: Some(p_r + j),
            is_real: false,
            algebraic: c.algebraic,
            residual: c.residual,
            scale,
        });
        modes.push(EigenMode {
            lambda: c.lambda,
            multiplicity: c.basis.ncols(),
            eigenbasis: c.basis,
            conjugate_partner: Some(p_r + half + j),
            is_real: false,
            algebraic: c.algebraic,
            residual: c.residual,
            scale,
        });
    }
    modes.extend(partners);

    let n = a.n();
    let total: usize = modes.iter().map(|m| m.multiplicity).sum();
    if total > n {
        return Err(Error::DegenerateCluster {
            re: 0.0,
            im: 0.0,
            detail: format!("sum of geometric multiplicities {total} exceeds n = {n}"),
        });
    }
    let k_max = modes.iter().map(|m| m.multiplicity).max().unwrap_or(0);
    Ok(EigenStructure {
        n,
        p_r,
        p_c: 2 * half,
        k_max,
        modes,
        a: a.matrix().clone(),
    })
}

/// Indices of the real modes plus one mode per conjugate pair.
pub fn mode_representatives(es: &EigenStructure) -> Vec<usize> {
    (0..es.p_r + es.p_c / 2).collect()
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }
    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut y = x;
        while self.0[y] != r {
            let next = self.0[y];
            self.0[y] = r;
            y = next;
        }
        r
    }
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.0[hi] = lo;
        true
    }
    fn groups(&mut self) -> Vec<Vec<usize>> {
        let n = self.0.len();
        let mut map: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for i in 0..n {
            let r = self.find(i);
            map.entry(r).or_default().push(i);
        }
        map.into_values().collect()
    }
}

/// Left null space of `λI − A`, i.e. the null space of `(λI − A)ᵀ`.
fn left_null_space(a: &DMatrix<f64>, lambda: Complex64, cutoff: f64, real: bool) -> DMatrix<Complex64> {
    let n = a.nrows();
    if real {
        let mt = (DMatrix::<f64>::identity(n, n) * lambda.re - a).transpose();
        linalg::to_complex(&linalg::null_space_real(&mt, cutoff))
    } else {
        let mt = (DMatrix::<Complex64>::identity(n, n) * lambda - linalg::to_complex(a)).transpose();
        linalg::null_space_complex(&mt, cutoff)
    }
}

/// Largest cosine of the principal angles between two orthonormal bases.
fn max_overlap(x: &DMatrix<Complex64>, y: &DMatrix<Complex64>) -> f64 {
    if x.ncols() == 0 || y.ncols() == 0 {
        return 0.0;
    }
    linalg::spectral_norm(&(x.adjoint() * y))
}

fn mean(zs: &[Complex64]) -> Complex64 {
    zs.iter().sum::<Complex64>() / zs.len() as f64
}

/// Computes distinct eigenvalues, geometric multiplicities and left
/// eigenbases of `a`.
///
/// Eigenvalues are clustered by single linkage at `cluster_tol * (1 + |λ|)`.
/// Clusters whose left null spaces nearly coincide are then merged as well:
/// a defective eigenvalue is returned by the eigensolver as a spray of
/// nearby values sharing one eigenvector. Each final cluster is evaluated at
/// the mean of its members, which is accurate even when the members are not.
pub fn compute_eigenstructure(a: &StateMatrix, tol: &ToleranceConfig) -> Result<EigenStructure> {
    tol.validate()?;
    let m = a.matrix();
    let n = a.n();
    let norm_a = linalg::fro(m);
    let eigs = linalg::eigenvalues(m)
        .ok_or_else(|| Error::Numeric("eigenvalue iteration did not converge".into()))?;

    // single-linkage clustering
    let mut uf = UnionFind::new(eigs.len());
    for i in 0..eigs.len() {
        for j in i + 1..eigs.len() {
            let d = (eigs[i] - eigs[j]).norm();
            let scale = 1.0 + eigs[i].norm().max(eigs[j].norm());
            if d <= tol.cluster_tol * scale {
                uf.union(i, j);
            }
        }
    }
    let groups: Vec<Vec<usize>> = uf.groups();

    let cutoff_for = |lambda: Complex64| tol.null_rel_tol * (norm_a + lambda.norm()).max(1.0);
    let is_real_value = |z: Complex64| z.im.abs() <= imag_tol(tol, z);

    // Merge clusters belonging to one defective eigenvalue.
    let merge_radius = 1e-2 * (1.0 + norm_a);
    let evaluate = |members: Vec<usize>| -> Cluster {
        let vals: Vec<Complex64> = members.iter().map(|&i| eigs[i]).collect();
        let mut center = mean(&vals);
        let real = is_real_value(center);
        if real {
            center = Complex64::new(center.re, 0.0);
        }
        let space = left_null_space(m, center, cutoff_for(center), real);
        Cluster {
            members,
            center,
            real,
            space,
        }
    };
    let mut clusters: Vec<Cluster> = groups.into_iter().map(&evaluate).collect();
    // Tentative pairwise merges, closest first. A merge is kept only when the
    // merged cluster still has a null space at least as large as either part,
    // so genuinely distinct nearby eigenvalues stay apart.
    let key = |c: &Cluster| (c.members.iter().copied().min().unwrap_or(0), c.members.len());
    let mut rejected = std::collections::HashSet::new();
    loop {
        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        let centers: Vec<Complex64> = clusters.iter().map(|c| c.center).collect();
        for i in 0..clusters.len() {
            for j in i + 1..clusters.len() {
                let d = (centers[i] - centers[j]).norm();
                if d > merge_radius {
                    continue;
                }
                let (si, sj) = (&clusters[i].space, &clusters[j].space);
                let empty = si.ncols() == 0 || sj.ncols() == 0;
                let near = nearest(&centers, i) == Some(j) || nearest(&centers, j) == Some(i);
                if (empty && near) || max_overlap(si, sj) >= 0.999 {
                    pairs.push((d, i, j));
                }
            }
        }
        pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut accepted = None;
        for &(_, i, j) in &pairs {
            let k = (key(&clusters[i]), key(&clusters[j]));
            if rejected.contains(&k) {
                continue;
            }
            let members: Vec<usize> = clusters[i].members.iter().chain(&clusters[j].members).copied().collect();
            let merged = evaluate(members);
            let need = clusters[i].space.ncols().max(clusters[j].space.ncols()).max(1);
            if merged.space.ncols() >= need {
                accepted = Some((i, j, merged));
                break;
            }
            rejected.insert(k);
        }
        let Some((i, j, merged)) = accepted else { break };
        clusters.swap_remove(j);
        clusters[i] = merged;
    }

    let mut cands = Vec::new();
    for c in clusters {
        if !c.real && c.center.im < 0.0 {
            // the conjugate cluster carries this mode
            continue;
        }
        let k = c.space.ncols();
        if k == 0 || k > c.members.len() {
            return Err(Error::DegenerateCluster {
                re: c.center.re,
                im: c.center.im,
                detail: format!(
                    "{} clustered eigenvalue(s) but left null space of dimension {k}",
                    c.members.len()
                ),
            });
        }
        let res = residual(m, c.center, &c.space);
        cands.push(Candidate {
            lambda: c.center,
            basis: c.space,
            algebraic: c.members.len(),
            residual: res,
        });
    }
    let es = assemble(a, cands, tol)?;
    debug_assert_eq!(es.n, n);
    Ok(es)
}

fn nearest(centers: &[Complex64], i: usize) -> Option<usize> {
    (0..centers.len())
        .filter(|&j| j != i)
        .min_by(|&x, &y| {
            (centers[x] - centers[i])
                .norm()
                .total_cmp(&(centers[y] - centers[i]).norm())
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn paired_multiplicities() {
        let tol = ToleranceConfig::default();
        let es = compute_eigenstructure(&fixtures::paired(), &tol).unwrap();
        assert_eq!(es.p(), 3);
        assert_eq!(es.p_r, 3);
        for (m, want) in es.modes.iter().zip([1.0, 2.0, 3.0]) {
            assert!((m.lambda.re - want).abs() < 1e-9);
            assert_eq!(m.multiplicity, 2);
        }
        assert_eq!(es.k_max, 2);
        assert_eq!(mode_representatives(&es), vec![0, 1, 2]);
    }

    #[test]
    fn identity_is_one_mode() {
        let es = compute_eigenstructure(&StateMatrix::identity(5), &Default::default()).unwrap();
        assert_eq!(es.p(), 1);
        assert_eq!(es.modes[0].multiplicity, 5);
        assert!((es.modes[0].lambda.re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn circuit_is_one_defective_conjugate_pair() {
        // two identical RLC stages: each eigenvalue of the pair is double
        // but has a single left eigenvector
        let es = compute_eigenstructure(&fixtures::circuit(), &Default::default()).unwrap();
        assert_eq!(es.p(), 2);
        assert_eq!(es.p_c, 2);
        assert_eq!(es.k_max, 1);
        assert!(es.modes.iter().all(|m| m.algebraic == 2));
        let reps = mode_representatives(&es);
        assert_eq!(reps.len(), 1);
        for &i in &reps {
            let j = es.modes[i].conjugate_partner.unwrap();
            assert_eq!(es.modes[j].conjugate_partner, Some(i));
            assert!((es.modes[j].lambda - es.modes[i].lambda.conj()).norm() < 1e-14);
            let diff = &es.modes[j].eigenbasis - es.modes[i].eigenbasis.map(|z| z.conj());
            assert!(diff.norm() < 1e-14);
        }
    }

    #[test]
    fn reference_basis_ranks() {
        let tol = ToleranceConfig::default();
        let es = fixtures::paired_reference(&tol);
        let m1 = &es.modes[0];
        assert_eq!(m1.rank_on(&[0, 1], &tol), 2);
        assert_eq!(m1.rank_on(&[0, 3], &tol), 1);
        let z = DMatrix::<f64>::zeros(3, 3);
        assert_eq!(numeric_rank(&z, &tol), 0);
    }

    #[test]
    fn defective_eigenvalue_is_merged() {
        // Jordan block of size 3 at 2 plus a simple eigenvalue at -1
        let a = StateMatrix::from_rows(&[
            vec![2.0, 1.0, 0.0, 0.0],
            vec![0.0, 2.0, 1.0, 0.0],
            vec![0.0, 0.0, 2.0, 0.0],
            vec![0.0, 0.0, 0.0, -1.0],
        ])
        .unwrap();
        let es = compute_eigenstructure(&a, &Default::default()).unwrap();
        assert_eq!(es.p(), 2);
        assert_eq!(es.modes[1].multiplicity, 1);
        assert_eq!(es.modes[1].algebraic, 3);
    }

    #[test]
    fn nilpotent_chain() {
        let mut m = DMatrix::<f64>::zeros(6, 6);
        for i in 0..5 {
            m[(i + 1, i)] = 0.3 + 0.1 * i as f64;
        }
        let es = compute_eigenstructure(&StateMatrix::new(m).unwrap(), &Default::default()).unwrap();
        assert_eq!(es.p(), 1);
        assert_eq!(es.modes[0].multiplicity, 1);
    }
}
