//! Derandomized search for a sparse nonzero combination.
//!
//! Given r columns over F_q, a uniformly random nonzero combination has at
//! most (1-q^-1)/(1-q^-r) * L nonzero coordinates in expectation, where L
//! counts the coordinates that are not identically zero. The search below
//! fixes the combination entries one at a time by the method of
//! conditional expectations; all counting is exact rational arithmetic,
//! so the expectation bound carries over to the output unconditionally.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::field::{Modulus, Residue};

/// Exact expectation bound (1-q^-1)/(1-q^-r) as a rational.
pub fn density_ratio(m: &Modulus, r: usize) -> BigRational {
    let q = BigInt::from(m.q().clone());
    let qr = q.pow(r as u32);
    // (1 - 1/q) / (1 - 1/q^r) = (q-1) q^(r-1) / (q^r - 1)
    BigRational::new((&q - 1) * q.pow(r as u32 - 1), qr - 1)
}

/// Choose beta in F_q^r, not all zero, such that the combination
/// sum_t beta_t * cols[t] has at most (1-q^-1)/(1-q^-r) * L nonzero
/// coordinates, L being the number of coordinates where some column is
/// nonzero. Deterministic: candidates are scanned in canonical order and
/// ties keep the smallest value.
pub fn sparse_nonzero_combination(m: &Modulus, cols: &[Vec<Residue>]) -> Vec<Residue> {
    let r = cols.len();
    assert!(r >= 1, "need at least one column");
    let len = cols[0].len();
    for c in cols {
        assert_eq!(c.len(), len);
    }
    // Last column index with a nonzero entry, per coordinate.
    let last_nz: Vec<Option<usize>> = (0..len)
        .map(|i| (0..r).rev().find(|&t| !cols[t][i].is_zero()))
        .collect();

    let mut beta: Vec<Residue> = Vec::with_capacity(r);
    let mut partial: Vec<Residue> = vec![m.zero(); len];
    let mut prefix_nonzero = false;

    for j in 0..r {
        let last_step = j == r - 1;
        // Candidate values: zero, the values that cancel coordinates
        // becoming fully determined at this step, and one generic nonzero
        // representative (all other nonzero values behave identically).
        let mut candidates: std::collections::BTreeSet<Residue> = std::collections::BTreeSet::new();
        if !(last_step && !prefix_nonzero) {
            candidates.insert(m.zero());
        }
        let mut zeroers: Vec<Residue> = Vec::new();
        for i in 0..len {
            if last_nz[i] == Some(j) {
                // partial_i + b * c_j[i] = 0  =>  b = -partial_i / c_j[i]
                let b = m
                    .div(&m.neg(&partial[i]), &cols[j][i])
                    .expect("column entry nonzero");
                zeroers.push(b);
            }
        }
        for z in &zeroers {
            if !z.is_zero() {
                candidates.insert(z.clone());
            }
        }
        // Generic nonzero value distinct from every zeroer; all such
        // values yield the same conditional expectation. When every
        // nonzero residue is a zeroer (tiny q) the zeroers already cover
        // the classes.
        use num_traits::ToPrimitive;
        let tries = zeroers.len() as u64 + 2;
        let upper = match m.q().to_u64() {
            Some(q) => q.saturating_sub(1).min(tries),
            None => tries,
        };
        for g in 1..=upper {
            let cand = m.residue_u64(g);
            if !cand.is_zero() && !zeroers.contains(&cand) {
                candidates.insert(cand);
                break;
            }
        }

        let mut best: Option<(BigRational, Residue, Vec<Residue>)> = None;
        for b in candidates {
            let next_partial: Vec<Residue> = (0..len)
                .map(|i| {
                    if cols[j][i].is_zero() {
                        partial[i].clone()
                    } else {
                        m.add(&partial[i], &m.mul(&b, &cols[j][i]))
                    }
                })
                .collect();
            let next_prefix_nonzero = prefix_nonzero || !b.is_zero();
            let e = conditional_expectation(
                m,
                &last_nz,
                &next_partial,
                next_prefix_nonzero,
                j + 1,
                r,
            );
            let better = match &best {
                None => true,
                Some((be, _, _)) => &e < be,
            };
            if better {
                best = Some((e, b, next_partial));
            }
        }
        let (_, chosen, next_partial) = best.expect("candidate set nonempty");
        prefix_nonzero = prefix_nonzero || !chosen.is_zero();
        beta.push(chosen);
        partial = next_partial;
    }
    debug_assert!(prefix_nonzero);
    beta
}

/// Exact conditional expectation of the number of nonzero coordinates,
/// given the first `fixed` combination entries (their running partial
/// sums) and whether any of them is nonzero. The remaining entries are
/// uniform, conditioned on the full vector being nonzero.
fn conditional_expectation(
    m: &Modulus,
    last_nz: &[Option<usize>],
    partial: &[Residue],
    prefix_nonzero: bool,
    fixed: usize,
    r: usize,
) -> BigRational {
    let s = (r - fixed) as u32;
    let q = BigInt::from(m.q().clone());
    let mut e = BigRational::zero();
    let one = BigRational::one();

    // Precompute the two live-coordinate probabilities.
    let live_prob = if s == 0 {
        None
    } else if prefix_nonzero {
        // 1 - q^(s-1)/q^s
        Some(&one - BigRational::new(q.pow(s - 1), q.pow(s)))
    } else {
        // 1 - (q^(s-1) - 1)/(q^s - 1)
        Some(&one - BigRational::new(q.pow(s - 1) - 1, q.pow(s) - 1))
    };

    for i in 0..partial.len() {
        let live = match last_nz[i] {
            Some(t) => t >= fixed,
            None => false,
        };
        if live {
            e += live_prob.clone().expect("s > 0 when a coordinate is live");
        } else if !partial[i].is_zero() {
            e += &one;
        }
    }
    e
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;
    use rand_core::{RngCore, SeedableRng};

    fn combine(m: &Modulus, cols: &[Vec<Residue>], beta: &[Residue]) -> Vec<Residue> {
        let len = cols[0].len();
        (0..len)
            .map(|i| {
                let mut acc = m.zero();
                for (t, b) in beta.iter().enumerate() {
                    acc = m.add(&acc, &m.mul(b, &cols[t][i]));
                }
                acc
            })
            .collect()
    }

    #[test]
    fn respects_expectation_bound() {
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(42);
        for q in [3u64, 5, 13, 101] {
            let m = Modulus::from_u64(q).unwrap();
            for r in 1..=3usize {
                for _ in 0..40 {
                    let len = 1 + (rng.next_u64() % 10) as usize;
                    let cols: Vec<Vec<Residue>> = (0..r)
                        .map(|_| (0..len).map(|_| m.residue_u64(rng.next_u64() % q)).collect())
                        .collect();
                    let beta = sparse_nonzero_combination(&m, &cols);
                    assert!(beta.iter().any(|b| !b.is_zero()), "beta must be nonzero");
                    let combined = combine(&m, &cols, &beta);
                    let nonzeros = combined.iter().filter(|v| !v.is_zero()).count();
                    let active = (0..len)
                        .filter(|&i| (0..r).any(|t| !cols[t][i].is_zero()))
                        .count();
                    let bound = density_ratio(&m, r) * BigRational::from_integer(active.into());
                    assert!(
                        BigRational::from_integer(nonzeros.into()) <= bound,
                        "q={q} r={r}: {nonzeros} > {}",
                        bound.to_f64().unwrap()
                    );
                }
            }
        }
    }

    #[test]
    fn derandomization_matches_exhaustive_minimum_class() {
        // The conditional-expectation walk never beats the true minimum,
        // and must land within the expectation bound; spot-check against
        // exhaustive search for small spaces.
        let m = Modulus::from_u64(5).unwrap();
        let cols = vec![
            vec![m.residue_u64(1), m.residue_u64(2), m.residue_u64(0)],
            vec![m.residue_u64(3), m.residue_u64(1), m.residue_u64(0)],
        ];
        let beta = sparse_nonzero_combination(&m, &cols);
        let got = combine(&m, &cols, &beta).iter().filter(|v| !v.is_zero()).count();
        let mut best = usize::MAX;
        for b0 in 0..5u64 {
            for b1 in 0..5u64 {
                if b0 == 0 && b1 == 0 {
                    continue;
                }
                let cand = vec![m.residue_u64(b0), m.residue_u64(b1)];
                let nz = combine(&m, &cols, &cand).iter().filter(|v| !v.is_zero()).count();
                best = best.min(nz);
            }
        }
        assert!(got >= best);
        let bound = density_ratio(&m, 2) * BigRational::from_integer(2.into());
        assert!(BigRational::from_integer(got.into()) <= bound);
    }

    #[test]
    fn single_column_picks_one() {
        let m = Modulus::from_u64(7).unwrap();
        let cols = vec![vec![m.residue_u64(0), m.residue_u64(4)]];
        let beta = sparse_nonzero_combination(&m, &cols);
        assert_eq!(beta.len(), 1);
        assert!(!beta[0].is_zero());
    }
}
