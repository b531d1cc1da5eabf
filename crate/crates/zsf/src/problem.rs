//! Problem statements, constraint sets, sparse solutions, and the exact
//! verifier every solver's output is routed through.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use num_bigint::BigUint;
use num_traits::One;

use crate::error::{Error, Result};
use crate::field::{Modulus, Residue};
use crate::linalg::{FieldVec, VecFamily};

/// Allowed coefficient set for one solution entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Constraint {
    /// Balanced interval: |lift(x)| <= s, with 1 <= s <= floor(q/2).
    Interval(BigUint),
    /// Explicit allowed set A with 2 <= |A| <= q-1.
    Explicit(BTreeSet<Residue>),
    /// Complement of a forbidden set, 1 <= |forbidden| <= q-2.
    Forbidden(BTreeSet<Residue>),
    /// {0, 1}
    Binary,
    /// {0, 1, 2}
    Ternary012,
}

impl Constraint {
    pub fn validate(&self, m: &Modulus) -> Result<()> {
        match self {
            Constraint::Interval(s) => {
                if s < &BigUint::one() || s > m.half() {
                    return Err(Error::PreconditionViolated(format!(
                        "interval bound {s} outside [1, floor(q/2)]"
                    )));
                }
            }
            Constraint::Explicit(a) => {
                let q: usize = m.q().try_into().unwrap_or(usize::MAX);
                if a.len() < 2 || a.len() > q.saturating_sub(1) {
                    return Err(Error::PreconditionViolated(format!(
                        "explicit set size {} outside [2, q-1]",
                        a.len()
                    )));
                }
            }
            Constraint::Forbidden(a) => {
                let q: usize = m.q().try_into().unwrap_or(usize::MAX);
                if a.is_empty() || a.len() > q.saturating_sub(2) {
                    return Err(Error::PreconditionViolated(format!(
                        "forbidden set size {} outside [1, q-2]",
                        a.len()
                    )));
                }
            }
            Constraint::Binary | Constraint::Ternary012 => {}
        }
        Ok(())
    }

    /// Membership of a single residue.
    pub fn admits(&self, m: &Modulus, x: &Residue) -> bool {
        match self {
            Constraint::Interval(s) => &m.lift_abs(x) <= s,
            Constraint::Explicit(a) => a.contains(x),
            Constraint::Forbidden(a) => !a.contains(x),
            Constraint::Binary => {
                x.is_zero() || x == &m.one()
            }
            Constraint::Ternary012 => {
                x.is_zero() || x == &m.one() || x == &m.residue_u64(2)
            }
        }
    }

    pub fn admits_zero(&self, m: &Modulus) -> bool {
        self.admits(m, &m.zero())
    }

    /// The allowed set, materialized (for enumeration at desk scale).
    pub fn allowed_set(&self, m: &Modulus) -> Vec<Residue> {
        let q = m
            .q()
            .try_into()
            .unwrap_or_else(|_| panic!("allowed_set requires q to fit in u64"));
        let mut out: Vec<Residue> = (0..q)
            .map(|v: u64| m.residue_u64(v))
            .filter(|r| self.admits(m, r))
            .collect();
        out.sort();
        out
    }
}

/// Uniform or per-index constraints on a solution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Constraints {
    Uniform(Constraint),
    PerIndex(Vec<Constraint>),
}

impl Constraints {
    pub fn at(&self, i: usize) -> &Constraint {
        match self {
            Constraints::Uniform(c) => c,
            Constraints::PerIndex(v) => &v[i],
        }
    }
}

/// A sparse coefficient assignment: absent indices mean zero. Stored
/// values are never zero.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CoeffMap {
    entries: BTreeMap<usize, Residue>,
}

impl CoeffMap {
    pub fn new() -> Self {
        CoeffMap { entries: BTreeMap::new() }
    }

    pub fn from_entries(m: &Modulus, entries: impl IntoIterator<Item = (usize, Residue)>) -> Self {
        let mut map = CoeffMap::new();
        for (i, v) in entries {
            map.add_assign(m, i, &v);
        }
        map
    }

    pub fn insert(&mut self, i: usize, v: Residue) {
        if v.is_zero() {
            self.entries.remove(&i);
        } else {
            self.entries.insert(i, v);
        }
    }

    /// self[i] += v, dropping the entry if it cancels to zero.
    pub fn add_assign(&mut self, m: &Modulus, i: usize, v: &Residue) {
        if v.is_zero() {
            return;
        }
        let cur = self.entries.remove(&i);
        let next = match cur {
            Some(c) => m.add(&c, v),
            None => v.clone(),
        };
        if !next.is_zero() {
            self.entries.insert(i, next);
        }
    }

    /// Merge another map into this one (entry-wise addition).
    pub fn merge(&mut self, m: &Modulus, other: &CoeffMap) {
        for (&i, v) in other.iter() {
            self.add_assign(m, i, v);
        }
    }

    pub fn get(&self, i: usize) -> Option<&Residue> {
        self.entries.get(&i)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&usize, &Residue)> {
        self.entries.iter()
    }

    pub fn support(&self) -> Vec<usize> {
        self.entries.keys().copied().collect()
    }

    pub fn support_size(&self) -> usize {
        self.entries.len()
    }

    pub fn is_trivial(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_index(&self) -> Option<usize> {
        self.entries.keys().next_back().copied()
    }

    /// Largest |balanced lift| over the support (zero map gives 0).
    pub fn max_lift_abs(&self, m: &Modulus) -> BigUint {
        self.entries
            .values()
            .map(|v| m.lift_abs(v))
            .max()
            .unwrap_or_default()
    }

    /// Multiply every coefficient by a constant.
    pub fn scale(&self, m: &Modulus, c: &Residue) -> CoeffMap {
        let mut out = CoeffMap::new();
        for (&i, v) in self.iter() {
            out.add_assign(m, i, &m.mul(v, c));
        }
        out
    }

    pub fn negate(&self, m: &Modulus) -> CoeffMap {
        let mut out = CoeffMap::new();
        for (&i, v) in self.iter() {
            out.insert(i, m.neg(v));
        }
        out
    }
}

/// Number of nonzero coefficients.
pub fn sparsity(x: &CoeffMap) -> usize {
    x.support_size()
}

/// An instance: a family, the allowed coefficients, and a target vector
/// (zero by default).
#[derive(Debug, Clone)]
pub struct Problem {
    pub family: VecFamily,
    pub constraints: Constraints,
    pub target: FieldVec,
}

impl Problem {
    pub fn zero_sum(family: VecFamily, constraint: Constraint) -> Result<Self> {
        constraint.validate(family.modulus())?;
        let target = FieldVec::zeros(family.modulus(), family.dim());
        Ok(Problem { family, constraints: Constraints::Uniform(constraint), target })
    }

    pub fn with_target(family: VecFamily, constraint: Constraint, target: FieldVec) -> Result<Self> {
        constraint.validate(family.modulus())?;
        if target.dim() != family.dim() {
            return Err(Error::DimensionMismatch { expected: family.dim(), got: target.dim() });
        }
        Ok(Problem { family, constraints: Constraints::Uniform(constraint), target })
    }

    pub fn per_index(family: VecFamily, constraints: Vec<Constraint>, target: FieldVec) -> Result<Self> {
        if constraints.len() != family.len() {
            return Err(Error::DimensionMismatch { expected: family.len(), got: constraints.len() });
        }
        for c in &constraints {
            c.validate(family.modulus())?;
        }
        if target.dim() != family.dim() {
            return Err(Error::DimensionMismatch { expected: family.dim(), got: target.dim() });
        }
        Ok(Problem { family, constraints: Constraints::PerIndex(constraints), target })
    }
}

/// Outcome of the exact verifier: three independent checks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifyReport {
    pub sums_to_target: bool,
    pub in_constraint: bool,
    pub nontrivial: bool,
}

impl VerifyReport {
    pub fn pass(&self) -> bool {
        self.sums_to_target && self.in_constraint && self.nontrivial
    }
}

/// Exact decision procedure for a claimed solution. A solution is a full
/// assignment x in A^m: indices outside the support carry coefficient 0,
/// which must itself be admitted whenever the support is proper.
pub fn verify(problem: &Problem, x: &CoeffMap) -> Result<VerifyReport> {
    verify_parts(&problem.family, &problem.constraints, &problem.target, x)
}

/// Borrowing form of [`verify`], for callers that keep the family and
/// constraint separately.
pub fn verify_parts(
    family: &VecFamily,
    constraints: &Constraints,
    target: &FieldVec,
    x: &CoeffMap,
) -> Result<VerifyReport> {
    let m = family.modulus();
    let count = family.len();
    if let Some(max) = x.max_index() {
        if max >= count {
            return Err(Error::DimensionMismatch { expected: count, got: max + 1 });
        }
    }

    let sum = family.combine(x);
    let sums_to_target = &sum == target;

    let mut in_constraint = true;
    for (&i, v) in x.iter() {
        if !constraints.at(i).admits(m, v) {
            in_constraint = false;
            break;
        }
    }
    if in_constraint && x.support_size() < count {
        // Implicit zeros must be admitted wherever they occur.
        match constraints {
            Constraints::Uniform(c) => {
                if !c.admits_zero(m) {
                    in_constraint = false;
                }
            }
            Constraints::PerIndex(cs) => {
                for (i, c) in cs.iter().enumerate() {
                    if x.get(i).is_none() && !c.admits_zero(m) {
                        in_constraint = false;
                        break;
                    }
                }
            }
        }
    }

    let nontrivial = !x.is_trivial();
    Ok(VerifyReport { sums_to_target, in_constraint, nontrivial })
}
