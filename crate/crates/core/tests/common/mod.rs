//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use ctrlsparse::generate::gen_jordan_planted;
use ctrlsparse::{
    compute_eigenstructure, EigenStructure, SparsityPattern, StateMatrix, ToleranceConfig,
};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn tol() -> ToleranceConfig {
    ToleranceConfig::default()
}

/// Random Jordan-generated system with `n <= 10`, `k_max <= 3`, derived
/// entirely from `seed`.
pub fn jordan_system(seed: u64) -> (StateMatrix, Vec<usize>, EigenStructure) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let n = rng.gen_range(2..=10);
    let k = rng.gen_range(1..=3usize).min(n);
    let density = rng.gen_range(0.2..=0.8);
    let (a, ks) = gen_jordan_planted(n, k, density, seed);
    let es = compute_eigenstructure(&a, &tol()).expect("well-conditioned draw");
    (a, ks, es)
}

/// Rank by SVD with a cutoff relative to the largest singular value.
pub fn svd_rank(m: &DMatrix<Complex64>) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.max();
    if smax <= 1e-12 {
        return 0;
    }
    sv.iter().filter(|&&s| s > 1e-8 * smax).count()
}

/// Rank of the rows of `X_iᵀ` indexed by `states`.
pub fn mode_rank(es: &EigenStructure, i: usize, states: &[usize]) -> usize {
    let x = &es.modes[i].eigenbasis;
    let sub = DMatrix::from_fn(states.len(), x.ncols(), |r, c| x[(states[r], c)]);
    svd_rank(&sub)
}

/// Whether `states` can be matched to distinct inputs through `pattern`,
/// by trying every injective assignment.
pub fn matchable(pattern: &SparsityPattern, states: &[usize]) -> bool {
    fn go(p: &SparsityPattern, states: &[usize], used: &mut Vec<bool>) -> bool {
        let Some((&s, rest)) = states.split_first() else {
            return true;
        };
        for c in 0..p.l() {
            if !used[c] && p.contains(s, c) {
                used[c] = true;
                if go(p, rest, used) {
                    return true;
                }
                used[c] = false;
            }
        }
        false
    }
    go(pattern, states, &mut vec![false; pattern.l()])
}

/// Largest state set that is both linearly independent in mode `i` and
/// matchable in `pattern`, by enumerating all subsets.
pub fn exhaustive_intersection(es: &EigenStructure, i: usize, pattern: &SparsityPattern) -> usize {
    let n = es.n;
    let mut best = 0;
    for mask in 0u32..(1 << n) {
        let set: Vec<usize> = (0..n).filter(|&s| mask >> s & 1 == 1).collect();
        if set.len() <= best || set.len() > es.modes[i].multiplicity {
            continue;
        }
        if mode_rank(es, i, &set) == set.len() && matchable(pattern, &set) {
            best = set.len();
        }
    }
    best
}

/// Representative modes: real ones and the first of each conjugate pair.
pub fn representatives(es: &EigenStructure) -> Vec<usize> {
    (0..es.modes.len())
        .filter(|&i| es.modes[i].is_real || es.modes[i].conjugate_partner.map_or(true, |j| i < j))
        .collect()
}

/// `Σ_i rank(X_iᵀ[S])` computed from scratch.
pub fn f_reference(es: &EigenStructure, states: &[usize]) -> usize {
    representatives(es)
        .into_iter()
        .map(|i| mode_rank(es, i, states))
        .sum()
}

pub fn random_pattern(rng: &mut impl Rng, n: usize, l: usize, density: f64) -> SparsityPattern {
    let entries: Vec<(usize, usize)> = (0..n)
        .flat_map(|r| (0..l).map(move |c| (r, c)))
        .filter(|_| rng.gen_bool(density))
        .collect();
    SparsityPattern::new(n, l, entries).unwrap()
}

/// Real matrix with i.i.d. values on the support of `pattern`.
pub fn instantiate(rng: &mut impl Rng, pattern: &SparsityPattern) -> DMatrix<f64> {
    let mut b = DMatrix::zeros(pattern.n(), pattern.l());
    for (r, c) in pattern.entries() {
        b[(r, c)] = rng.gen_range(0.5..2.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    }
    b
}

/// PBH test written out directly: `rank [λI − A, B] = n` for every
/// eigenvalue.
pub fn pbh_controllable(es: &EigenStructure, b: &DMatrix<f64>) -> bool {
    let a = es.state_matrix();
    let n = es.n;
    es.modes.iter().all(|m| {
        let mut blk = DMatrix::<Complex64>::zeros(n, n + b.ncols());
        for r in 0..n {
            for c in 0..n {
                let d = if r == c {
                    m.lambda
                } else {
                    Complex64::new(0.0, 0.0)
                };
                blk[(r, c)] = d - Complex64::new(a[(r, c)], 0.0);
            }
            for c in 0..b.ncols() {
                blk[(r, n + c)] = Complex64::new(b[(r, c)], 0.0);
            }
        }
        svd_rank(&blk) == n
    })
}
