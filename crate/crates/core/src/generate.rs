//! Random system generators and the stabilising shift used by the
//! benchmarks.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg;
use crate::lyapunov::max_real_part;
use crate::spectral::{compute_eigenstructure, StateMatrix, ToleranceConfig};

/// Default proportionality constant between out-edges per new node and `ln n`.
pub const DEFAULT_DEGREE_COEFF: f64 = 0.5;
/// Default density of the random eigenvector matrix in [`gen_jordan`].
pub const DEFAULT_DENSITY: f64 = 0.5;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of one benchmark trial, derived from the run seed, size and trial.
pub fn trial_seed(seed: u64, n: usize, trial: usize) -> u64 {
    splitmix(splitmix(splitmix(seed) ^ n as u64) ^ trial as u64)
}

/// Weighted network grown by preferential attachment: every new node links
/// to `round(coeff · ln n)` (clamped to `[1, n−1]`) distinct earlier nodes
/// drawn proportionally to degree + 1. Each link carries two arcs with
/// independent `U[0, 1]` weights; `A[i][j]` is the weight of the arc `j → i`.
pub fn gen_scale_free(n: usize, coeff: f64, seed: u64) -> StateMatrix {
    assert!(n >= 2, "scale-free networks need at least two nodes");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = ((coeff * (n as f64).ln()).round() as usize).clamp(1, n - 1);
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut degree = vec![0usize; n];
    for t in 1..n {
        let k = m.min(t);
        let targets: Vec<usize> = (0..t)
            .collect::<Vec<_>>()
            .choose_multiple_weighted(&mut rng, k, |&v| (degree[v] + 1) as f64)
            .expect("weights are positive")
            .copied()
            .collect();
        for v in targets {
            a[(v, t)] = rng.gen();
            a[(t, v)] = rng.gen();
            degree[v] += 1;
            degree[t] += 1;
        }
    }
    StateMatrix::new(a).expect("finite by construction")
}

/// Multiplicities drawn uniformly from `1..=k_max` until they reach `n`; the
/// last one is truncated.
fn draw_multiplicities(n: usize, k_max: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut ks = Vec::new();
    let mut total = 0;
    while total < n {
        let k = rng.gen_range(1..=k_max).min(n - total);
        ks.push(k);
        total += k;
    }
    ks
}

/// `A = X J X⁻¹` with `J` diagonal: eigenvalue `i` (for `i = 1, 2, …`)
/// repeated `k_i` times. `X` is random sparse with entries `U(−1, 1)` and is
/// made row diagonally dominant; draws with `cond(X) > 1e6` are rejected.
/// Returns the matrix and the planted multiplicities.
pub fn gen_jordan_planted(n: usize, k_max: usize, density: f64, seed: u64) -> (StateMatrix, Vec<usize>) {
    assert!(n >= 1 && (1..=n).contains(&k_max), "need 1 <= k_max <= n");
    assert!(density > 0.0 && density <= 1.0, "density must lie in (0, 1]");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ks = draw_multiplicities(n, k_max, &mut rng);
    let diag: Vec<f64> = ks
        .iter()
        .enumerate()
        .flat_map(|(i, &k)| std::iter::repeat((i + 1) as f64).take(k))
        .collect();
    loop {
        let mut x = DMatrix::<f64>::zeros(n, n);
        for r in 0..n {
            for c in 0..n {
                if r != c && rng.gen_bool(density) {
                    x[(r, c)] = rng.gen_range(-1.0..1.0);
                }
            }
            let off: f64 = x.row(r).iter().map(|v| v.abs()).sum();
            x[(r, r)] = 1.0 + off;
        }
        let sv = linalg::singular_values(&x);
        let (smax, smin) = sv.iter().fold((0.0f64, f64::INFINITY), |(a, b), &s| (a.max(s), b.min(s)));
        if smin <= 0.0 || smax / smin > 1e6 {
            continue;
        }
        let xinv = x.clone().try_inverse().expect("well conditioned");
        let j = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag.clone()));
        let a = &x * j * xinv;
        return (StateMatrix::new(a).expect("finite by construction"), ks);
    }
}

pub fn gen_jordan(n: usize, k_max: usize, density: f64, seed: u64) -> StateMatrix {
    gen_jordan_planted(n, k_max, density, seed).0
}

/// Largest real part of the spectrum, taken from the clustered eigenvalues
/// when available since cluster means are far more accurate than the raw
/// eigenvalues of defective blocks.
fn spectral_abscissa(a: &StateMatrix) -> f64 {
    match compute_eigenstructure(a, &ToleranceConfig::default()) {
        Ok(es) => es.modes.iter().map(|m| m.lambda.re).fold(f64::NEG_INFINITY, f64::max),
        Err(_) => max_real_part(a.matrix()),
    }
}

/// Shifts `A` to be Hurwitz: `A − 1.1 max Re(λ) I` when the abscissa is
/// positive, `A − (max Re(λ) + 0.1) I` when it is zero to tolerance, and `A`
/// itself when already stable.
pub fn stabilize(a: &StateMatrix) -> StateMatrix {
    let m = spectral_abscissa(a);
    let zero = 1e-9 * (1.0 + linalg::fro(a.matrix()));
    let shift = if m > zero {
        1.1 * m
    } else if m >= -zero {
        m.max(0.0) + 0.1
    } else {
        return a.clone();
    };
    let n = a.n();
    StateMatrix::new(a.matrix() - DMatrix::<f64>::identity(n, n) * shift).expect("finite")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_node_network_is_one_link() {
        let a = gen_scale_free(2, DEFAULT_DEGREE_COEFF, 7);
        let m = a.matrix();
        assert!(m[(0, 1)] > 0.0 && m[(1, 0)] > 0.0);
        assert_eq!(m[(0, 0)], 0.0);
        assert_eq!(m[(1, 1)], 0.0);
    }

    #[test]
    fn seeded_generators_are_deterministic() {
        assert_eq!(gen_scale_free(50, 0.5, 3), gen_scale_free(50, 0.5, 3));
        assert_ne!(gen_scale_free(50, 0.5, 3), gen_scale_free(50, 0.5, 4));
        assert_eq!(gen_jordan(8, 3, 0.5, 1), gen_jordan(8, 3, 0.5, 1));
    }

    #[test]
    fn jordan_multiplicities() {
        let (a, ks) = gen_jordan_planted(9, 3, 0.5, 11);
        assert_eq!(ks.iter().sum::<usize>(), 9);
        assert!(ks.iter().all(|&k| (1..=3).contains(&k)));
        let es = compute_eigenstructure(&a, &ToleranceConfig::default()).unwrap();
        let got: Vec<usize> = es.modes.iter().map(|m| m.multiplicity).collect();
        assert_eq!(got, ks);
        let (_, ones) = gen_jordan_planted(6, 1, 0.5, 2);
        assert_eq!(ones, vec![1; 6]);
    }

    #[test]
    fn stabilize_cases() {
        let i = StateMatrix::identity(3);
        let s = stabilize(&i);
        assert!((s.matrix() + DMatrix::<f64>::identity(3, 3) * 0.1).norm() < 1e-12);
        let neg = StateMatrix::new(DMatrix::identity(2, 2) * -1.0).unwrap();
        assert_eq!(stabilize(&neg), neg);
        let a = gen_scale_free(30, 0.5, 5);
        assert!(max_real_part(stabilize(&a).matrix()) < 0.0);
    }
}
