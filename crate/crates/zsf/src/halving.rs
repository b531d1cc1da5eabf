//! The halving trick: bounded zero-sums yield reducible vectors, and
//! iterating the construction halves the coefficient bound at the cost of
//! squaring the number of input vectors.

use num_bigint::{BigInt, BigUint};
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::field::{Modulus, Residue};
use crate::linalg::{self, FieldVec, VecFamily};
use crate::problem::CoeffMap;
use crate::thresholds;

/// A vector u built from a bounded zero-sum, together with the recorded
/// data answering "express c*u as a (+-h')-sum" for every |c| <= h.
///
/// The construction is oblivious to the vectors: it works purely on the
/// integer coefficients, so expansion queries are integer identities
/// modulo the defining zero-sum.
#[derive(Debug, Clone)]
pub struct Reducible {
    /// Source indices with the +-1 coefficients of u.
    u_coeffs: Vec<(usize, i8)>,
    /// The (rescaled) zero-sum lifts over the source indices.
    alpha: Vec<(usize, BigInt)>,
    h: BigInt,
    h_prime: BigInt,
}

impl Reducible {
    /// Build from a nontrivial zero-sum whose integer lifts are bounded
    /// by h >= 2. When all lifts are at most floor(h/2), the zero-sum is
    /// first rescaled by floor(h / max|lift|).
    pub fn from_lifts(alpha: &[(usize, BigInt)], h: &BigInt) -> Result<Self> {
        if h < &BigInt::from(2) {
            return Err(Error::PreconditionViolated(format!("h must be >= 2, got {h}")));
        }
        let alpha: Vec<(usize, BigInt)> =
            alpha.iter().filter(|(_, a)| !a.is_zero()).cloned().collect();
        if alpha.is_empty() {
            return Err(Error::TrivialInput);
        }
        let a_max = alpha.iter().map(|(_, a)| a.abs()).max().expect("nonempty");
        if &a_max > h {
            return Err(Error::NotZeroSumBounded { lift: a_max.to_string(), bound: h.to_string() });
        }
        let h_prime = h / 2;
        let alpha: Vec<(usize, BigInt)> = if a_max <= h_prime {
            let t = h / &a_max;
            alpha.into_iter().map(|(i, a)| (i, a * &t)).collect()
        } else {
            alpha
        };
        // now max |alpha_i| > h/2 >= h'
        let u_coeffs: Vec<(usize, i8)> = alpha
            .iter()
            .filter_map(|(i, a)| {
                if a > &h_prime {
                    Some((*i, 1))
                } else if a < &(-h_prime.clone()) {
                    Some((*i, -1))
                } else {
                    None
                }
            })
            .collect();
        debug_assert!(!u_coeffs.is_empty());
        Ok(Reducible { u_coeffs, alpha, h: h.clone(), h_prime })
    }

    /// Build from a coefficient map over F_q, lifting to balanced
    /// integers (which must be bounded by h).
    pub fn from_zero_sum(m: &Modulus, alpha: &CoeffMap, h: &BigInt) -> Result<Self> {
        let lifts: Vec<(usize, BigInt)> =
            alpha.iter().map(|(&i, v)| (i, m.balanced_lift(v))).collect();
        Self::from_lifts(&lifts, h)
    }

    pub fn h(&self) -> &BigInt {
        &self.h
    }

    pub fn h_prime(&self) -> &BigInt {
        &self.h_prime
    }

    /// The +-1 coefficients defining u.
    pub fn u_coeffs(&self) -> &[(usize, i8)] {
        &self.u_coeffs
    }

    pub fn source_indices(&self) -> Vec<usize> {
        self.alpha.iter().map(|(i, _)| *i).collect()
    }

    /// u as a vector over the given family.
    pub fn u_vector(&self, family: &VecFamily) -> FieldVec {
        let m = family.modulus();
        let mut acc = FieldVec::zeros(m, family.dim());
        for &(i, s) in &self.u_coeffs {
            if s > 0 {
                acc = acc.add(m, family.vector(i));
            } else {
                acc = acc.sub(m, family.vector(i));
            }
        }
        acc
    }

    /// u's coefficients as a map over F_q.
    pub fn u_map(&self, m: &Modulus) -> CoeffMap {
        let mut map = CoeffMap::new();
        for &(i, s) in &self.u_coeffs {
            map.insert(i, m.residue_i64(s as i64));
        }
        map
    }

    /// Integer coefficients expressing c*u as a (+-h')-sum of the source
    /// vectors, for any |c| <= h. Zero entries are omitted.
    pub fn expand(&self, c: &BigInt) -> Result<Vec<(usize, BigInt)>> {
        if c.abs() > self.h {
            return Err(Error::PreconditionViolated(format!(
                "|c| = {} exceeds h = {}",
                c.abs(),
                self.h
            )));
        }
        if c.is_negative() {
            let pos = self.expand(&(-c))?;
            return Ok(pos.into_iter().map(|(i, a)| (i, -a)).collect());
        }
        let mut out = Vec::new();
        if c <= &self.h_prime {
            // c*u directly: coefficient c on positive sources, -c on
            // negative ones.
            if c.is_zero() {
                return Ok(out);
            }
            for &(i, s) in &self.u_coeffs {
                out.push((i, if s > 0 { c.clone() } else { -c.clone() }));
            }
        } else {
            // c*u = c*u - sum(alpha_i v_i)
            let pos: std::collections::BTreeMap<usize, i8> = self.u_coeffs.iter().cloned().collect();
            for (i, a) in &self.alpha {
                let coeff = match pos.get(i) {
                    Some(1) => c - a,
                    Some(-1) => -(c + a),
                    _ => -a.clone(),
                };
                if !coeff.is_zero() {
                    out.push((*i, coeff));
                }
            }
        }
        debug_assert!(out.iter().all(|(_, a)| a.abs() <= self.h_prime));
        Ok(out)
    }

    /// Expansion reduced into F_q.
    pub fn expand_map(&self, m: &Modulus, c: &BigInt) -> Result<CoeffMap> {
        let lifts = self.expand(c)?;
        let mut map = CoeffMap::new();
        for (i, a) in lifts {
            map.add_assign(m, i, &m.residue_int(&a));
        }
        Ok(map)
    }
}

/// A zero-sum solver together with the number of vectors it consumes.
pub struct InnerSolver<'a> {
    pub input_size: usize,
    pub solve: Box<dyn Fn(&VecFamily) -> Result<CoeffMap> + 'a>,
}

/// One halving round: split m^2 vectors into m batches, turn each batch's
/// (+-h)-zero-sum into a reducible vector, combine the reducible vectors
/// with one more inner solve, and substitute expansions. Output lifts are
/// bounded by floor(h/2).
pub fn iterate_halving(family: &VecFamily, inner: &InnerSolver, h: &BigInt) -> Result<CoeffMap> {
    let m = family.modulus();
    let bs = inner.input_size;
    let needed = BigUint::from(bs) * BigUint::from(bs);
    if BigUint::from(family.len()) < needed {
        return Err(Error::TooFewVectors { needed, got: family.len() });
    }
    let mut reducibles: Vec<Reducible> = Vec::with_capacity(bs);
    let mut starts: Vec<usize> = Vec::with_capacity(bs);
    let mut u_vecs: Vec<FieldVec> = Vec::with_capacity(bs);
    for b in 0..bs {
        let start = b * bs;
        let vecs: Vec<FieldVec> = family.vectors()[start..start + bs].to_vec();
        let sub = VecFamily::new(m.clone(), family.dim(), vecs)?;
        let zs = (inner.solve)(&sub)?;
        let red = Reducible::from_zero_sum(m, &zs, h)?;
        let u = red.u_vector(&sub);
        if u.is_zero() {
            // the +-1 witness is already a zero-sum
            let mut map = CoeffMap::new();
            for &(i, s) in red.u_coeffs() {
                map.insert(start + i, m.residue_i64(s as i64));
            }
            return Ok(map);
        }
        u_vecs.push(u);
        reducibles.push(red);
        starts.push(start);
    }
    let u_family = VecFamily::new(m.clone(), family.dim(), u_vecs)?;
    let combo = (inner.solve)(&u_family)?;
    let mut out = CoeffMap::new();
    for (&b, coeff) in combo.iter() {
        let lift = m.balanced_lift(coeff);
        for (i, a) in reducibles[b].expand(&lift)? {
            out.add_assign(m, starts[b] + i, &m.residue_int(&a));
        }
    }
    debug_assert!(!out.is_trivial());
    Ok(out)
}

/// Nontrivial zero-sum (arbitrary coefficients) with support at most
/// (1-q^-1)/(1-q^-r) * rank + r, found by combining r extra vectors over
/// a maximal independent set and derandomizing the combination.
pub fn sparse_full_zero_sum(family: &VecFamily, r: usize) -> Result<CoeffMap> {
    let m = family.modulus();
    if r < 1 {
        return Err(Error::PreconditionViolated("r must be >= 1".into()));
    }
    let basis = linalg::max_independent(family, linalg::BasisStrategy::Naive);
    let l = basis.len();
    if l == 0 {
        if family.is_empty() {
            return Err(Error::TooFewVectors { needed: BigUint::from(1u32), got: 0 });
        }
        let mut map = CoeffMap::new();
        map.insert(0, m.one());
        return Ok(map);
    }
    if family.len() < l + r {
        return Err(Error::TooFewVectors { needed: BigUint::from(l + r), got: family.len() });
    }
    let in_basis: std::collections::BTreeSet<usize> = basis.iter().copied().collect();
    let extras: Vec<usize> = (0..family.len()).filter(|i| !in_basis.contains(i)).take(r).collect();
    let basis_vecs: Vec<&FieldVec> = basis.iter().map(|&i| family.vector(i)).collect();
    let extra_vecs: Vec<&FieldVec> = extras.iter().map(|&i| family.vector(i)).collect();
    let cols: Vec<Vec<Residue>> = linalg::coordinates_in_basis(m, &basis_vecs, &extra_vecs)
        .into_iter()
        .map(|c| c.expect("basis is maximal"))
        .collect();
    let beta = crate::derand::sparse_nonzero_combination(m, &cols);
    let mut combo = vec![m.zero(); l];
    for (j, b) in beta.iter().enumerate() {
        if !b.is_zero() {
            for (i, c) in cols[j].iter().enumerate() {
                combo[i] = m.add(&combo[i], &m.mul(b, c));
            }
        }
    }
    let mut map = CoeffMap::new();
    for (j, b) in beta.iter().enumerate() {
        map.insert(extras[j], b.clone());
    }
    for (i, c) in combo.iter().enumerate() {
        map.insert(basis[i], m.neg(c));
    }
    debug_assert!(!map.is_trivial());
    Ok(map)
}

fn singleton_if_zero_vector(family: &VecFamily) -> Option<CoeffMap> {
    family.vectors().iter().position(FieldVec::is_zero).map(|z| {
        let mut map = CoeffMap::new();
        map.insert(z, family.modulus().one());
        map
    })
}

/// Nontrivial (+-floor(q/4))-zero-sum for q > 3, by dimension reduction:
/// each level extracts a sparse zero-sum, converts it to a reducible
/// vector, and recurses on the complement of the pivot coordinate.
pub fn sis_quarter(family: &VecFamily, r: usize) -> Result<CoeffMap> {
    let m = family.modulus();
    if m.q() <= &BigUint::from(3u32) {
        return Err(Error::PreconditionViolated("quarter-norm solver needs q > 3".into()));
    }
    let needed = thresholds::sis_quarter(m, family.dim(), r);
    if BigUint::from(family.len()) < needed {
        return Err(Error::TooFewVectors { needed, got: family.len() });
    }
    if let Some(map) = singleton_if_zero_vector(family) {
        return Ok(map);
    }
    let items: Vec<(usize, FieldVec)> = family.vectors().iter().cloned().enumerate().collect();
    quarter_recursive(m, items, family.dim(), r)
}

fn quarter_recursive(
    m: &Modulus,
    items: Vec<(usize, FieldVec)>,
    dim: usize,
    r: usize,
) -> Result<CoeffMap> {
    if dim == 0 {
        let first = items
            .first()
            .ok_or(Error::TooFewVectors { needed: BigUint::from(1u32), got: 0 })?;
        let mut map = CoeffMap::new();
        map.insert(first.0, m.one());
        return Ok(map);
    }
    let feed_count = (dim + r).min(items.len());
    let feed_vecs: Vec<FieldVec> = items[..feed_count].iter().map(|(_, v)| v.clone()).collect();
    let feed = VecFamily::new(m.clone(), dim, feed_vecs)?;
    let zs = sparse_full_zero_sum(&feed, r)?;
    let h = BigInt::from(m.half().clone());
    let red = Reducible::from_zero_sum(m, &zs, &h)?;
    let feed_orig: Vec<usize> = items[..feed_count].iter().map(|(orig, _)| *orig).collect();
    let u = red.u_vector(&feed);
    if u.is_zero() {
        let mut map = CoeffMap::new();
        for &(pos, s) in red.u_coeffs() {
            map.insert(feed_orig[pos], m.residue_i64(s as i64));
        }
        return Ok(map);
    }
    let consumed: std::collections::BTreeSet<usize> =
        zs.support().into_iter().map(|pos| feed_orig[pos]).collect();
    let remaining: Vec<(usize, FieldVec)> =
        items.into_iter().filter(|(orig, _)| !consumed.contains(orig)).collect();
    let rem_family =
        VecFamily::new(m.clone(), dim, remaining.iter().map(|(_, v)| v.clone()).collect())?;
    let split = linalg::span_split(&u, &rem_family)?;
    let children: Vec<(usize, FieldVec)> = remaining
        .iter()
        .zip(&split.components)
        .map(|((orig, _), (_, w))| (*orig, w.drop_coord(split.pivot_coord)))
        .collect();
    let coeff_of: std::collections::BTreeMap<usize, Residue> = remaining
        .iter()
        .zip(&split.components)
        .map(|((orig, _), (c, _))| (*orig, c.clone()))
        .collect();
    let sub = quarter_recursive(m, children, dim - 1, r)?;
    // The recursive zero-sum of the w's equals c*u on the originals;
    // cancel it with the reducible expansion of -c.
    let mut c = m.zero();
    for (&i, v) in sub.iter() {
        c = m.add(&c, &m.mul(v, &coeff_of[&i]));
    }
    let mut out = sub;
    let lift = m.balanced_lift(&m.neg(&c));
    for (pos, a) in red.expand(&lift)? {
        out.add_assign(m, feed_orig[pos], &m.residue_int(&a));
    }
    debug_assert!(!out.is_trivial());
    Ok(out)
}

/// Nontrivial (+-floor(q/(2k)))-zero-sum for a power-of-two k: the
/// quarter solver iterated through halving rounds.
pub fn sis_power2(family: &VecFamily, k: u64, r: usize) -> Result<CoeffMap> {
    let m = family.modulus();
    thresholds::validate_power2_k(m, k)?;
    if m.q() < &BigUint::from(5u32) {
        return Err(Error::PreconditionViolated("halving solver needs q >= 5".into()));
    }
    let needed = thresholds::sis_power2(m, family.dim(), k, r)?;
    if BigUint::from(family.len()) < needed {
        return Err(Error::TooFewVectors { needed, got: family.len() });
    }
    if let Some(map) = singleton_if_zero_vector(family) {
        return Ok(map);
    }
    sis_power2_inner(family, k, r)
}

fn sis_power2_inner(family: &VecFamily, k: u64, r: usize) -> Result<CoeffMap> {
    if k == 2 {
        return sis_quarter(family, r);
    }
    let m = family.modulus();
    let n = family.dim();
    let inner_size: usize = thresholds::sis_power2(m, n, k / 2, r)?
        .try_into()
        .map_err(|_| Error::InsufficientInput("power-of-two threshold exceeds usize".into()))?;
    let inner = InnerSolver {
        input_size: inner_size,
        solve: Box::new(move |f: &VecFamily| sis_power2_inner(f, k / 2, r)),
    };
    // floor(floor(q/k)/2) = floor(q/(2k)); the inner bound is floor(q/k).
    let h = BigInt::from(m.q().clone()) / BigInt::from(k);
    iterate_halving(family, &inner, &h)
}
