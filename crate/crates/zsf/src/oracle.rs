//! Brute-force ground truth at desk scale: exhaustive solving and the
//! totality check for binary zero-sums.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};

use crate::error::{Error, Result};
use crate::field::Residue;
use crate::linalg::{FieldVec, VecFamily};
use crate::problem::{Constraints, Problem};
use crate::problem::CoeffMap;

pub const DEFAULT_BUDGET: u64 = 2_000_000;

/// Enumeration budget: `ZSF_BUDGET` env var, defaulting to 2e6 candidates.
pub fn budget() -> u64 {
    std::env::var("ZSF_BUDGET")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(DEFAULT_BUDGET)
}

/// Exhaustive search for the lexicographically first nontrivial solution,
/// enumerating coefficient vectors in mixed-radix order over each index's
/// allowed set sorted by canonical residue. `None` means no solution.
pub fn brute_solve(problem: &Problem) -> Result<Option<CoeffMap>> {
    brute_solve_with_budget(problem, budget())
}

pub fn brute_solve_with_budget(problem: &Problem, budget: u64) -> Result<Option<CoeffMap>> {
    let m = problem.family.modulus();
    let count = problem.family.len();
    let alphabets: Vec<Vec<Residue>> = match &problem.constraints {
        Constraints::Uniform(c) => {
            let a = c.allowed_set(m);
            vec![a; count]
        }
        Constraints::PerIndex(cs) => cs.iter().map(|c| c.allowed_set(m)).collect(),
    };
    let mut total = BigUint::one();
    for a in &alphabets {
        total *= BigUint::from(a.len());
    }
    if total > BigUint::from(budget) {
        return Err(Error::BudgetExceeded { needed: total, budget });
    }
    let total = total.to_u64().expect("within budget");

    let mut digits = vec![0usize; count];
    for _ in 0..total {
        // Build the candidate; skip the all-zero assignment.
        let nonzero = digits
            .iter()
            .enumerate()
            .any(|(i, &d)| !alphabets[i][d].is_zero());
        if nonzero {
            let mut sum = FieldVec::zeros(m, problem.family.dim());
            for (i, &d) in digits.iter().enumerate() {
                let c = &alphabets[i][d];
                if !c.is_zero() {
                    sum = sum.add(m, &problem.family.vector(i).scale(m, c));
                }
            }
            if sum == problem.target {
                let mut map = CoeffMap::new();
                for (i, &d) in digits.iter().enumerate() {
                    map.insert(i, alphabets[i][d].clone());
                }
                return Ok(Some(map));
            }
        }
        // Mixed-radix increment, last index fastest (lexicographic order
        // with the first coefficient most significant).
        let mut pos = count;
        loop {
            if pos == 0 {
                break;
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < alphabets[pos].len() {
                break;
            }
            digits[pos] = 0;
        }
    }
    Ok(None)
}

/// Report of the totality sweep for binary zero-sums.
#[derive(Debug, Clone)]
pub struct TotalityReport {
    pub families_checked: u64,
    pub all_solvable: bool,
    /// A family with no solution, if one was found.
    pub counterexample: Option<Vec<Vec<u64>>>,
}

/// Exhaustively confirm that every family of m vectors in F_q^n has a
/// nonempty binary zero-sum (meaningful when m > (q-1)n), or find a
/// counterexample. Enumerates all q^(nm) families.
pub fn totality_check(problem_modulus: &crate::field::Modulus, n: usize, m: usize) -> Result<TotalityReport> {
    let q = problem_modulus
        .q()
        .to_u64()
        .ok_or_else(|| Error::PreconditionViolated("totality check requires small q".into()))?;
    let cells = n * m;
    let total = (q as u128).checked_pow(cells as u32).ok_or(Error::BudgetExceeded {
        needed: BigUint::from(q).pow(cells as u32),
        budget: budget(),
    })?;
    if BigUint::from(total) * BigUint::from(2u64.pow(m as u32)) > BigUint::from(budget()) {
        return Err(Error::BudgetExceeded {
            needed: BigUint::from(total),
            budget: budget(),
        });
    }

    let mut families_checked = 0u64;
    let mut digits = vec![0u64; cells];
    loop {
        let rows: Vec<Vec<u64>> = (0..m).map(|i| digits[i * n..(i + 1) * n].to_vec()).collect();
        let family = VecFamily::from_rows(problem_modulus, n, &rows)?;
        let problem = Problem::zero_sum(family, crate::problem::Constraint::Binary)?;
        families_checked += 1;
        if brute_solve(&problem)?.is_none() {
            return Ok(TotalityReport {
                families_checked,
                all_solvable: false,
                counterexample: Some(rows),
            });
        }
        // increment
        let mut pos = cells;
        loop {
            if pos == 0 {
                return Ok(TotalityReport { families_checked, all_solvable: true, counterexample: None });
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < q {
                break;
            }
            digits[pos] = 0;
        }
    }
}

/// The tight counterexample at m = (q-1)n: q-1 copies of each standard
/// basis vector have no nonempty binary zero-sum.
pub fn tight_counterexample(modulus: &crate::field::Modulus, n: usize) -> VecFamily {
    let q = modulus.q().to_u64().expect("small q") as usize;
    let mut rows = Vec::new();
    for i in 0..n {
        for _ in 0..q - 1 {
            let mut row = vec![0u64; n];
            row[i] = 1;
            rows.push(row);
        }
    }
    VecFamily::from_rows(modulus, n, &rows).expect("well-formed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Modulus;
    use crate::problem::{verify, Constraint};
    use num_bigint::BigUint;

    #[test]
    fn brute_examples() {
        let m3 = Modulus::from_u64(3).unwrap();
        let f = VecFamily::from_rows(&m3, 1, &[vec![1], vec![1]]).unwrap();
        let p = Problem::zero_sum(f, Constraint::Binary).unwrap();
        assert_eq!(brute_solve(&p).unwrap(), None);

        let f = VecFamily::from_rows(&m3, 1, &[vec![1], vec![2]]).unwrap();
        let p = Problem::zero_sum(f, Constraint::Binary).unwrap();
        let sol = brute_solve(&p).unwrap().unwrap();
        assert!(verify(&p, &sol).unwrap().pass());
        assert_eq!(sol.support(), vec![0, 1]);

        let m5 = Modulus::from_u64(5).unwrap();
        let f = VecFamily::from_rows(&m5, 1, &[vec![1], vec![1]]).unwrap();
        let p = Problem::zero_sum(f, Constraint::Interval(BigUint::from(2u32))).unwrap();
        let sol = brute_solve(&p).unwrap().unwrap();
        assert!(verify(&p, &sol).unwrap().pass());
    }

    #[test]
    fn budget_rejects_large_spaces() {
        let m5 = Modulus::from_u64(5).unwrap();
        let rows: Vec<Vec<u64>> = (0..40).map(|i| vec![i % 5]).collect();
        let f = VecFamily::from_rows(&m5, 1, &rows).unwrap();
        let p = Problem::zero_sum(f, Constraint::Interval(BigUint::from(2u32))).unwrap();
        assert!(matches!(
            brute_solve_with_budget(&p, 1000),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn totality_small() {
        let m3 = Modulus::from_u64(3).unwrap();
        let rep = totality_check(&m3, 1, 3).unwrap();
        assert!(rep.all_solvable);
        assert_eq!(rep.families_checked, 27);

        // tightness at m = (q-1)n
        let fam = tight_counterexample(&m3, 1);
        assert_eq!(fam.len(), 2);
        let p = Problem::zero_sum(fam, Constraint::Binary).unwrap();
        assert_eq!(brute_solve(&p).unwrap(), None);

        // q=5, n=1, m=4: (1),(1),(1),(1) has no solution
        let m5 = Modulus::from_u64(5).unwrap();
        let fam = tight_counterexample(&m5, 1);
        assert_eq!(fam.len(), 4);
        let p = Problem::zero_sum(fam, Constraint::Binary).unwrap();
        assert_eq!(brute_solve(&p).unwrap(), None);
    }
}
