//! Module-level invariants that span solvers: the full strategy matrix
//! for the F_3 suite, sparsity accounting for the forest lift, and the
//! soundness of every solver's output bound.

use std::collections::BTreeSet;

use num_bigint::BigUint;
use num_rational::BigRational;

use zsf::f3::{self, F3Strategy};
use zsf::field::{Modulus, Residue};
use zsf::general::{self, StartSolver};
use zsf::linalg::FieldVec;
use zsf::problem::{verify_parts, Constraint, Constraints};
use zsf::sample::uniform_family;
use zsf::thresholds;

/// Every strategy solves every seeded family at its own threshold, for
/// all n <= 12 and 200 seeds each (worst-case guarantees, no tolerance).
#[test]
fn f3_all_strategies_all_dimensions() {
    let m3 = Modulus::from_u64(3).unwrap();
    for strategy in [F3Strategy::Weak, F3Strategy::Quadratic, F3Strategy::Main] {
        for n in 1..=12usize {
            let threshold: usize = f3::f3_threshold(n, strategy).try_into().unwrap();
            for seed in 0..200u64 {
                let f = uniform_family(&m3, (n as u64) * 100_000 + seed, n, threshold);
                let sol = f3::f3_solve(&f, strategy).unwrap();
                let target = FieldVec::zeros(&m3, n);
                let rep = verify_parts(
                    &f,
                    &Constraints::Uniform(Constraint::Binary),
                    &target,
                    &sol,
                )
                .unwrap();
                assert!(rep.pass(), "strategy {strategy:?}, n={n}, seed={seed}");
            }
        }
    }
}

/// The forest lift never exceeds its declared sparsity budget
/// s(n) * prod s(k^(k-l) n).
#[test]
fn lift_sparsity_accounting() {
    let m13 = Modulus::from_u64(13).unwrap();
    for k in [2usize, 3] {
        let mut cells = vec![general::CoeffSet::Band {
            lo: BigUint::from(0u32),
            hi: BigUint::from(6 / (k as u32 + 1)),
        }];
        let mut b_sets = Vec::new();
        let mut a_vals = vec![1u64];
        // contiguous symmetric bands covering 1..6
        let cuts: Vec<(u64, u64)> = match k {
            2 => vec![(3, 4), (5, 6)],
            _ => vec![(2, 3), (4, 5), (6, 6)],
        };
        for &(lo, hi) in &cuts {
            cells.push(general::CoeffSet::Band { lo: lo.into(), hi: hi.into() });
            b_sets.push(general::CoeffSet::PosRun { lo: lo.into(), hi: hi.into() });
            a_vals.push(lo);
        }
        // adjust H_0 to end right below the first cut
        cells[0] = general::CoeffSet::Band { lo: 0u32.into(), hi: (cuts[0].0 - 1).into() };
        let partition = general::Partition { cells, b_sets };
        let a_set: BTreeSet<Residue> = a_vals.iter().map(|&v| m13.residue_u64(v)).collect();
        let start = general::NontrivialStart { a_set: a_set.clone(), r: 1 };
        let n = 1usize;
        let pool = thresholds::forest_pool_need(
            n,
            k,
            |d| start.input_size(d),
            |d| start.sparsity_bound(d),
        );
        let need: usize = (BigUint::from(start.input_size(n)) * &pool).try_into().unwrap();
        let mut s_budget = start.sparsity_bound(n);
        for l in 1..=k {
            s_budget *= start.sparsity_bound(k.pow((k - l) as u32) * n);
        }
        for seed in 0..10u64 {
            let f = uniform_family(&m13, 777 + seed, n, need);
            let zs = general::lift_zero_sum(&f, &a_set, &partition, &start).unwrap();
            assert!(f.combine(&zs).is_zero());
            assert!(
                zs.support_size() <= s_budget,
                "k={k}: support {} over budget {s_budget}",
                zs.support_size()
            );
        }
    }
}

/// Bulk soundness: ten thousand randomized solver calls across the
/// public surface; every accepted output must pass the exact verifier.
#[test]
fn randomized_soundness_sweep() {
    use rand_core::{RngCore, SeedableRng};
    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(90210);
    let eps = BigRational::new(1.into(), 2.into());
    let mut calls = 0u64;
    let mut accepted = 0u64;
    while calls < 10_000 {
        let q = [3u64, 5, 7, 11, 13][(rng.next_u64() % 5) as usize];
        let mq = Modulus::from_u64(q).unwrap();
        let n = 1 + (rng.next_u64() % 3) as usize;
        let mcount = 1 + (rng.next_u64() % 40) as usize;
        let f = uniform_family(&mq, rng.next_u64(), n, mcount);
        let target = FieldVec::zeros(&mq, n);
        let mut outcomes: Vec<(Constraint, Result<zsf::problem::CoeffMap, zsf::Error>)> =
            Vec::new();
        outcomes.push((
            Constraint::Interval(mq.half().clone()),
            zsf::linalg::find_dependency(&f),
        ));
        outcomes.push((
            Constraint::Interval(mq.half().clone()),
            zsf::halving::sparse_full_zero_sum(&f, 1 + (rng.next_u64() % 2) as usize),
        ));
        if q == 3 {
            outcomes.push((Constraint::Binary, f3::f3_solve(&f, F3Strategy::Quadratic)));
        } else {
            outcomes.push((
                Constraint::Interval(mq.q().clone() / BigUint::from(4u32)),
                zsf::halving::sis_quarter(&f, 1),
            ));
            outcomes.push((Constraint::Binary, zsf::avgcase::subset_sum_random(&f, 1, &eps)));
            let missing = rng.next_u64() % q;
            let allowed: BTreeSet<Residue> =
                (0..q).filter(|&v| v != missing).map(|v| mq.residue_u64(v)).collect();
            outcomes.push((
                Constraint::Explicit(allowed.clone()),
                general::cis_full(&f, &allowed, &eps),
            ));
        }
        for (constraint, outcome) in outcomes {
            calls += 1;
            if let Ok(sol) = outcome {
                let rep =
                    verify_parts(&f, &Constraints::Uniform(constraint), &target, &sol).unwrap();
                assert!(rep.pass(), "unverified output from a solver: {rep:?}");
                accepted += 1;
            }
        }
    }
    assert!(accepted > 0);
}

/// Identical inputs produce identical outputs across the deepest
/// pipeline (no hidden iteration-order or timing dependence anywhere).
#[test]
fn solvers_are_deterministic() {
    let eps = BigRational::new(1.into(), 2.into());
    let m11 = Modulus::from_u64(11).unwrap();
    let threshold: usize = thresholds::cis_full(&m11, 1, 4, &eps).unwrap().try_into().unwrap();
    let allowed: BTreeSet<Residue> =
        [0u64, 2, 3, 5, 6, 8, 10].iter().map(|&v| m11.residue_u64(v)).collect();
    let f = uniform_family(&m11, 424_242, 1, threshold);
    let a = general::cis_full(&f, &allowed, &eps);
    let b = general::cis_full(&f, &allowed, &eps);
    match (a, b) {
        (Ok(x), Ok(y)) => assert_eq!(x, y),
        (Err(_), Err(_)) => {}
        _ => panic!("outcome differed between identical runs"),
    }

    let m3 = Modulus::from_u64(3).unwrap();
    let t3: usize = f3::f3_threshold(6, F3Strategy::Main).try_into().unwrap();
    let f = uniform_family(&m3, 11, 6, t3);
    assert_eq!(
        f3::f3_solve(&f, F3Strategy::Main).unwrap(),
        f3::f3_solve(&f, F3Strategy::Main).unwrap()
    );
}

/// The one-shot and halving engines at matching k emit solutions within
/// the same bound, and both thresholds are honest (one below, reject).
#[test]
fn engine_bounds_agree() {
    let m17 = Modulus::from_u64(17).unwrap();
    let eps = BigRational::new(1.into(), 2.into());
    let _ = &eps;
    let bound = BigUint::from(4u32); // floor(17/4)
    let t_half: usize = thresholds::sis_power2(&m17, 2, 2, 1).unwrap().try_into().unwrap();
    let t_one: usize = thresholds::one_shot_closed(2, 2).try_into().unwrap();
    for seed in 0..10u64 {
        let f = uniform_family(&m17, 500 + seed, 2, t_half.max(t_one));
        for sol in [
            zsf::halving::sis_power2(&f, 2, 1).unwrap(),
            general::sis_one_shot(&f, 2).unwrap(),
        ] {
            assert!(f.combine(&sol).is_zero());
            assert!(sol.max_lift_abs(&m17) <= bound);
        }
    }
}
