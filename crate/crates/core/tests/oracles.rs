mod common;

use common::*;
use ctrlsparse::generate::gen_jordan;
use ctrlsparse::oracle::{brute_macp, brute_mscp};
use ctrlsparse::{
    compute_eigenstructure, fixtures, AccessibleSet, EigenStructure, SparsityPattern,
};

/// Smallest actuated set with full `f`, over every subset.
fn naive_macp(es: &EigenStructure, allowed: &[usize]) -> Option<usize> {
    let target: usize = representatives(es)
        .iter()
        .map(|&i| es.modes[i].multiplicity)
        .sum();
    (0u32..1 << allowed.len())
        .map(|mask| {
            (0..allowed.len())
                .filter(|&b| mask >> b & 1 == 1)
                .map(|b| allowed[b])
                .collect::<Vec<_>>()
        })
        .filter(|s| f_reference(es, s) == target)
        .map(|s| s.len())
        .min()
}

/// Sparsest feasible `n × l` pattern over all `2^(n l)` supports, using the
/// exhaustive intersection as the feasibility test.
fn naive_mscp(es: &EigenStructure, l: usize) -> Option<usize> {
    let cells: Vec<(usize, usize)> = (0..es.n)
        .flat_map(|r| (0..l).map(move |c| (r, c)))
        .collect();
    let reps = representatives(es);
    let mut best: Option<usize> = None;
    for mask in 0u64..1 << cells.len() {
        let nnz = mask.count_ones() as usize;
        if best.is_some_and(|b| nnz >= b) {
            continue;
        }
        let p = SparsityPattern::new(
            es.n,
            l,
            (0..cells.len())
                .filter(|&b| mask >> b & 1 == 1)
                .map(|b| cells[b]),
        )
        .unwrap();
        if reps
            .iter()
            .all(|&i| exhaustive_intersection(es, i, &p) == es.modes[i].multiplicity)
        {
            best = Some(nnz);
        }
    }
    best
}

#[test]
fn macp_oracle_matches_enumeration() {
    for seed in 0..60 {
        let (_, _, es) = jordan_system(seed);
        let all: Vec<usize> = (0..es.n).collect();
        assert_eq!(
            Some(brute_macp(&es, None, &tol()).unwrap().size),
            naive_macp(&es, &all),
            "seed {seed}"
        );

        let allowed: Vec<usize> = all.iter().copied().filter(|s| s % 3 != 1).collect();
        let xa = AccessibleSet::new(es.n, allowed.iter().copied()).unwrap();
        match naive_macp(&es, &allowed) {
            Some(k) => assert_eq!(
                brute_macp(&es, Some(&xa), &tol()).unwrap().size,
                k,
                "seed {seed}"
            ),
            None => assert!(brute_macp(&es, Some(&xa), &tol()).is_err()),
        }
    }
}

#[test]
fn macp_optimum_is_canonical() {
    let es = compute_eigenstructure(&fixtures::paired(), &tol()).unwrap();
    // smallest size first, then lexicographic
    assert_eq!(brute_macp(&es, None, &tol()).unwrap().states, vec![0, 1, 2]);
}

#[test]
fn mscp_oracle_matches_enumeration() {
    let mut checked = 0;
    for seed in 0..40u64 {
        let n = 3 + (seed % 2) as usize;
        let k = 1 + (seed % 3) as usize;
        let a = gen_jordan(n, k.min(n), 0.5, seed);
        let es = compute_eigenstructure(&a, &tol()).unwrap();
        for l in es.k_max..=(es.k_max + 1).min(3) {
            let opt = brute_mscp(&es, l, &tol()).unwrap();
            assert_eq!(Some(opt.sparsity), naive_mscp(&es, l), "seed {seed} l {l}");
            assert_eq!(opt.pattern.nnz(), opt.sparsity);
            checked += 1;
        }
    }
    assert!(checked >= 40);
}

#[test]
fn paired_optima() {
    let es = fixtures::paired_reference(&tol());
    assert_eq!(naive_macp(&es, &(0..6).collect::<Vec<_>>()), Some(3));
    assert_eq!(brute_mscp(&es, 2, &tol()).unwrap().sparsity, 4);
    assert_eq!(brute_mscp(&es, 3, &tol()).unwrap().sparsity, 3);
}
