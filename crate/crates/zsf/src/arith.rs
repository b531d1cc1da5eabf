//! Constructive arithmetic combinatorics over F_q: long arithmetic
//! progressions in dense sets, antipodal holes, and three-term
//! progressions at the critical density. Every witness is re-validated by
//! direct membership testing before it is returned.

use std::collections::BTreeSet;

use num_bigint::BigUint;
use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::field::{Modulus, Residue};

/// An arithmetic progression {start, start+step, ..., start+(len-1)step}
/// with nonzero step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApWitness {
    pub start: Residue,
    pub step: Residue,
    pub len: usize,
}

impl ApWitness {
    pub fn members(&self, m: &Modulus) -> Vec<Residue> {
        let mut out = Vec::with_capacity(self.len);
        let mut cur = self.start.clone();
        for _ in 0..self.len {
            out.push(cur.clone());
            cur = m.add(&cur, &self.step);
        }
        out
    }

    pub fn contained_in(&self, m: &Modulus, set: &BTreeSet<Residue>) -> bool {
        !self.step.is_zero() && self.members(m).iter().all(|x| set.contains(x))
    }
}

fn small_q(m: &Modulus) -> Result<u64> {
    m.q()
        .to_u64()
        .ok_or_else(|| Error::PreconditionViolated("search requires q to fit in u64".into()))
}

/// Does the set's complement have size at most log_4(q+2)? Checked as
/// 4^c <= q + 2, exactly.
pub fn lev_density_ok(m: &Modulus, set: &BTreeSet<Residue>) -> bool {
    let q = m.q();
    let co = q
        .to_u64()
        .map(|qq| qq as usize)
        .unwrap_or(usize::MAX)
        .saturating_sub(set.len());
    co <= 64 && BigUint::from(4u32).pow(co as u32) <= q + BigUint::from(2u32)
}

/// An AP of length at least (q+1)/2 inside any set missing at most
/// log_4(q+2) elements. The search follows the dilation-pattern argument:
/// either some dilation packs the complement into one quarter-interval,
/// or two dilations share a pattern and their difference does.
pub fn lev_long_ap(m: &Modulus, set: &BTreeSet<Residue>) -> Result<ApWitness> {
    let q = small_q(m)?;
    if q < 5 {
        return Err(Error::PreconditionViolated("need q >= 5".into()));
    }
    if !lev_density_ok(m, set) {
        return Err(Error::PreconditionViolated(format!(
            "complement size {} exceeds log4(q+2)",
            q as usize - set.len()
        )));
    }
    let target_len = q.div_ceil(2) as usize;
    if set.len() == q as usize {
        // full field: any half-interval
        let ap = ApWitness { start: m.zero(), step: m.one(), len: target_len };
        debug_assert!(ap.contained_in(m, set));
        return Ok(ap);
    }
    // Translate so that 0 is not in the complement.
    let shift = set
        .iter()
        .next()
        .expect("set nonempty: complement is small")
        .clone();
    let shifted: BTreeSet<Residue> = set.iter().map(|x| m.sub(x, &shift)).collect();
    let co: Vec<Residue> =
        (0..q).map(|v| m.residue_u64(v)).filter(|x| !shifted.contains(x)).collect();
    debug_assert!(co.iter().all(|x| !x.is_zero()));

    // Four contiguous intervals of 1..q-1; the first (q-1) mod 4 are one
    // longer.
    let base = ((q - 1) / 4) as usize;
    let rem = ((q - 1) % 4) as usize;
    let interval_of = |x: &Residue| -> usize {
        let v = x.to_u64().expect("canonical residue fits") as usize - 1;
        let cut = rem * (base + 1);
        if v < cut {
            v / (base + 1)
        } else {
            rem + (v - cut) / base
        }
    };

    let pattern = |s: u64| -> Vec<usize> {
        let sr = m.residue_u64(s);
        co.iter().map(|a| interval_of(&m.mul(&sr, a))).collect()
    };

    // Scan dilations: either one packs the whole complement into a
    // single quarter-interval, or two dilations share a pattern and
    // their difference packs it into short balanced lifts. Both leave a
    // long run of consecutive residues untouched.
    let mut seen: std::collections::BTreeMap<Vec<usize>, u64> = std::collections::BTreeMap::new();
    let mut found: Option<u64> = None;
    for s in 1..q {
        let pat = pattern(s);
        if pat.iter().all(|&b| b == pat[0]) {
            found = Some(s);
            break;
        }
        if let Some(&s_prev) = seen.get(&pat) {
            found = Some((s + q - s_prev) % q);
            break;
        }
        seen.insert(pat, s);
    }
    let s = found.ok_or(Error::NoLongAP)?;
    let sr = m.residue_u64(s);

    let dilated_co: BTreeSet<u64> = co
        .iter()
        .map(|a| m.mul(&sr, a).to_u64().expect("fits"))
        .collect();
    let (run_start, run_len) = longest_missing_run(q, &dilated_co);
    if run_len < target_len {
        return Err(Error::NoLongAP);
    }
    // A' = A - shift; s*(A - shift) contains the run {run_start, ...}.
    // Map back: A contains shift + s^{-1} * run.
    let s_inv = m.inverse(&sr)?;
    let start = m.add(&shift, &m.mul(&s_inv, &m.residue_u64(run_start)));
    let ap = ApWitness { start, step: s_inv, len: target_len };
    if !ap.contained_in(m, set) {
        return Err(Error::NoLongAP);
    }
    Ok(ap)
}

/// Longest cyclic run of residues of F_q avoiding the given set, returned
/// as (start, length).
fn longest_missing_run(q: u64, avoid: &BTreeSet<u64>) -> (u64, usize) {
    if avoid.is_empty() {
        return (0, q as usize);
    }
    let mut pts: Vec<u64> = avoid.iter().copied().collect();
    pts.sort_unstable();
    let mut best = (0u64, 0usize);
    for (i, &p) in pts.iter().enumerate() {
        let next = pts[(i + 1) % pts.len()];
        let gap = if i + 1 == pts.len() { next + q - p - 1 } else { next - p - 1 };
        if gap as usize > best.1 {
            best = ((p + 1) % q, gap as usize);
        }
    }
    best
}

/// An antipodal hole: x != 0 and z in A with z-x, z+x both outside A;
/// when the complement has fewer than (q+1)/2 elements, also a y with
/// z-y, z+y both inside A and y not in {0, +-x}. Lexicographically
/// smallest (z, x) by canonical value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AntipodalHole {
    pub x: Residue,
    pub z: Residue,
    pub y: Option<Residue>,
}

pub fn antipodal_hole(m: &Modulus, set: &BTreeSet<Residue>) -> Result<AntipodalHole> {
    let q = small_q(m)?;
    let c = q as usize - set.len();
    if c < 2 || set.is_empty() {
        return Err(Error::PreconditionViolated(format!(
            "complement size {c} outside [2, q-1]"
        )));
    }
    let half = (q / 2) as usize;
    for z in set {
        for xv in 1..=half as u64 {
            let x = m.residue_u64(xv);
            let lo = m.sub(z, &x);
            let hi = m.add(z, &x);
            if !set.contains(&lo) && !set.contains(&hi) {
                let y = if c < q.div_ceil(2) as usize {
                    Some(find_inner_pair(m, set, z, &x, half as u64)?)
                } else {
                    None
                };
                return Ok(AntipodalHole { x, z: z.clone(), y });
            }
        }
    }
    Err(Error::PreconditionViolated(
        "no antipodal hole found; precondition 2 <= c < q must be violated".into(),
    ))
}

fn find_inner_pair(
    m: &Modulus,
    set: &BTreeSet<Residue>,
    z: &Residue,
    x: &Residue,
    half: u64,
) -> Result<Residue> {
    let neg_x = m.neg(x);
    for yv in 1..=half {
        let y = m.residue_u64(yv);
        if y == *x || y == neg_x {
            continue;
        }
        if set.contains(&m.sub(z, &y)) && set.contains(&m.add(z, &y)) {
            return Ok(y);
        }
    }
    Err(Error::PreconditionViolated(
        "no inner pair; complement must have size >= (q+1)/2".into(),
    ))
}

/// Given window bits c_{-4..4} with c_0 = 0 and c_i + c_{-i} = 1, find
/// -4 <= j < k < l <= 4 with j + l = 2k and all three bits zero. Total by
/// case analysis; found by scanning all triples.
pub fn window_3ap(bits: &[u8; 9]) -> Result<(i32, i32, i32)> {
    let bit = |i: i32| -> u8 { bits[(i + 4) as usize] };
    if bit(0) != 0 {
        return Err(Error::PreconditionViolated("center bit must be zero".into()));
    }
    for i in 1..=4 {
        if bit(i) + bit(-i) != 1 {
            return Err(Error::PreconditionViolated(format!(
                "bits at +-{i} must split one/zero"
            )));
        }
    }
    for j in -4..=4i32 {
        for k in (j + 1)..=4 {
            let l = 2 * k - j;
            if l > 4 || l <= k {
                continue;
            }
            if bit(j) == 0 && bit(k) == 0 && bit(l) == 0 {
                return Ok((j, k, l));
            }
        }
    }
    unreachable!("the window fact guarantees a zero triple")
}

/// A three-term AP in any set of co-size exactly (q+1)/2, for prime
/// q >= 11: normalize an antipodal hole to the boundary, then either an
/// antipodal pair inside the set or the +-4 window provides the
/// progression.
pub fn middle_3ap(m: &Modulus, set: &BTreeSet<Residue>) -> Result<ApWitness> {
    let q = small_q(m)?;
    if q < 11 {
        return Err(Error::PreconditionViolated("need q >= 11".into()));
    }
    let c = q as usize - set.len();
    if 2 * c != (q + 1) as usize {
        return Err(Error::PreconditionViolated(format!(
            "complement size {c} must equal (q+1)/2"
        )));
    }
    let hole = antipodal_hole(m, set)?;
    let half = m.residue(m.half());
    let t = m.div(&half, &hole.x)?;
    // A' = t (A - z): contains 0, misses the antipodal boundary pair.
    let norm: BTreeSet<Residue> = set.iter().map(|a| m.mul(&t, &m.sub(a, &hole.z))).collect();
    debug_assert!(norm.contains(&m.zero()));
    debug_assert!(!norm.contains(&half) && !norm.contains(&m.neg(&half)));

    let ap_norm = middle_3ap_normalized(m, q, &norm)?;
    // map back: A = z + t^{-1} A'
    let t_inv = m.inverse(&t)?;
    let ap = ApWitness {
        start: m.add(&hole.z, &m.mul(&t_inv, &ap_norm.start)),
        step: m.mul(&t_inv, &ap_norm.step),
        len: 3,
    };
    if !ap.contained_in(m, set) {
        return Err(Error::PreconditionViolated("normalization produced an invalid witness".into()));
    }
    Ok(ap)
}

fn middle_3ap_normalized(m: &Modulus, q: u64, norm: &BTreeSet<Residue>) -> Result<ApWitness> {
    // Case 1: a full antipodal pair {-y, y} inside the set gives
    // (-y, 0, y).
    for yv in 1..=(q / 2) {
        let y = m.residue_u64(yv);
        let ny = m.neg(&y);
        if norm.contains(&y) && norm.contains(&ny) {
            return Ok(ApWitness { start: ny, step: y, len: 3 });
        }
    }
    // Case 2: every pair is split; the +-4 window around zero yields a
    // progression (q >= 11 keeps the window clear of the boundary).
    let mut bits = [0u8; 9];
    for i in -4..=4i64 {
        let r = m.residue_i64(i);
        bits[(i + 4) as usize] = if norm.contains(&r) { 0 } else { 1 };
    }
    let (j, k, _l) = window_3ap(&bits)?;
    Ok(ApWitness { start: m.residue_i64(j as i64), step: m.residue_i64((k - j) as i64), len: 3 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(q: u64) -> Modulus {
        Modulus::from_u64(q).unwrap()
    }

    fn full_set(mq: &Modulus, q: u64) -> BTreeSet<Residue> {
        (0..q).map(|v| mq.residue_u64(v)).collect()
    }

    fn set_without(mq: &Modulus, q: u64, missing: &[u64]) -> BTreeSet<Residue> {
        let miss: BTreeSet<Residue> = missing.iter().map(|&v| mq.residue_u64(v)).collect();
        full_set(mq, q).difference(&miss).cloned().collect()
    }

    /// Exhaustive oracle: does the set contain an AP of the given length?
    fn has_ap_of_len(mq: &Modulus, q: u64, set: &BTreeSet<Residue>, len: usize) -> bool {
        for x in 0..q {
            for y in 1..q {
                let ap = ApWitness { start: mq.residue_u64(x), step: mq.residue_u64(y), len };
                if ap.contained_in(mq, set) {
                    return true;
                }
            }
        }
        false
    }

    #[test]
    fn lev_examples() {
        let m5 = m(5);
        let a = set_without(&m5, 5, &[0]);
        let ap = lev_long_ap(&m5, &a).unwrap();
        assert!(ap.len >= 3);
        assert!(ap.contained_in(&m5, &a));
        assert!(has_ap_of_len(&m5, 5, &a, 3));

        let full = full_set(&m5, 5);
        let ap = lev_long_ap(&m5, &full).unwrap();
        assert!(ap.len >= 3 && ap.contained_in(&m5, &full));

        let m7 = m(7);
        let a = set_without(&m7, 7, &[3]);
        let ap = lev_long_ap(&m7, &a).unwrap();
        assert!(ap.len >= 4);
        assert!(ap.contained_in(&m7, &a));
    }

    #[test]
    fn lev_exhaustive_small_q() {
        // All sets within the density precondition, q in {5,7,11,13}:
        // in each case the complement can have at most one element.
        for q in [5u64, 7, 11, 13] {
            let mq = m(q);
            let target = q.div_ceil(2) as usize;
            let full = full_set(&mq, q);
            assert!(lev_long_ap(&mq, &full).unwrap().len >= target);
            for miss in 0..q {
                let a = set_without(&mq, q, &[miss]);
                if !lev_density_ok(&mq, &a) {
                    continue;
                }
                let ap = lev_long_ap(&mq, &a).unwrap();
                assert!(ap.len >= target, "q={q} missing {miss}");
                assert!(ap.contained_in(&mq, &a));
            }
        }
    }

    #[test]
    fn lev_exhaustive_q17_cosize_two() {
        // q=17 admits co-size 2 (4^2 <= 19), which exercises the
        // pattern-collision branch of the dilation scan.
        let m17 = m(17);
        let target = 9;
        for a in 0..17u64 {
            for b in (a + 1)..17 {
                let set = set_without(&m17, 17, &[a, b]);
                let ap = lev_long_ap(&m17, &set).unwrap();
                assert!(ap.len >= target, "missing {{{a},{b}}}: length {}", ap.len);
                assert!(ap.contained_in(&m17, &set));
            }
        }
    }

    #[test]
    fn lev_sampled_q67_cosize_three() {
        use rand_core::{RngCore, SeedableRng};
        let m67 = m(67);
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(67);
        for _ in 0..300 {
            let mut missing = std::collections::BTreeSet::new();
            while missing.len() < 3 {
                missing.insert(rng.next_u64() % 67);
            }
            let missing: Vec<u64> = missing.into_iter().collect();
            let set = set_without(&m67, 67, &missing);
            assert!(lev_density_ok(&m67, &set));
            let ap = lev_long_ap(&m67, &set).unwrap();
            assert!(ap.len >= 34, "missing {missing:?}");
            assert!(ap.contained_in(&m67, &set));
        }
    }

    #[test]
    fn lev_rejects_dense_complement() {
        let m5 = m(5);
        let a = set_without(&m5, 5, &[1, 2]);
        assert!(matches!(lev_long_ap(&m5, &a), Err(Error::PreconditionViolated(_))));
    }

    #[test]
    fn antipodal_examples() {
        let m5 = m(5);
        // complement {1,2}: (x,z) = (3,4) is valid (and y exists)
        let a = set_without(&m5, 5, &[1, 2]);
        let h = antipodal_hole(&m5, &a).unwrap();
        assert!(a.contains(&h.z));
        assert!(!a.contains(&m5.sub(&h.z, &h.x)));
        assert!(!a.contains(&m5.add(&h.z, &h.x)));
        let y = h.y.unwrap();
        assert!(a.contains(&m5.sub(&h.z, &y)) && a.contains(&m5.add(&h.z, &y)));

        // empty set rejected
        let empty: BTreeSet<Residue> = BTreeSet::new();
        assert!(antipodal_hole(&m5, &empty).is_err());

        let m7 = m(7);
        let a = set_without(&m7, 7, &[1, 6]);
        let h = antipodal_hole(&m7, &a).unwrap();
        assert!(h.y.is_some());
    }

    #[test]
    fn antipodal_exhaustive_small_q() {
        // all subsets with 2 <= c < (q+1)/2 for q in {5,7,11,13}: both the
        // hole and the inner pair must exist and validate.
        for q in [5u64, 7, 11, 13] {
            let mq = m(q);
            let max_c = q.div_ceil(2) as usize;
            for mask in 0u64..(1 << q) {
                let missing: Vec<u64> = (0..q).filter(|&i| mask & (1 << i) != 0).collect();
                let c = missing.len();
                if c < 2 || c >= max_c {
                    continue;
                }
                let a = set_without(&mq, q, &missing);
                let h = antipodal_hole(&mq, &a).unwrap();
                assert!(!h.x.is_zero());
                assert!(a.contains(&h.z));
                assert!(!a.contains(&mq.sub(&h.z, &h.x)));
                assert!(!a.contains(&mq.add(&h.z, &h.x)));
                let y = h.y.expect("part 2 precondition holds");
                assert!(!y.is_zero() && y != h.x && y != mq.neg(&h.x));
                assert!(a.contains(&mq.sub(&h.z, &y)));
                assert!(a.contains(&mq.add(&h.z, &y)));
            }
        }
    }

    #[test]
    fn window_examples() {
        // all-ones on the negative side: (0,1,2) is the first triple
        let bits = [1, 1, 1, 1, 0, 0, 0, 0, 0];
        assert_eq!(window_3ap(&bits).unwrap(), (0, 1, 2));
        // mirrored
        let bits = [0, 0, 0, 0, 0, 1, 1, 1, 1];
        let (j, k, l) = window_3ap(&bits).unwrap();
        assert_eq!(j + l, 2 * k);
        // exhaustive over all 16 admissible patterns
        for mask in 0..16u8 {
            let mut bits = [0u8; 9];
            for i in 1..=4usize {
                let b = (mask >> (i - 1)) & 1;
                bits[4 + i] = b;
                bits[4 - i] = 1 - b;
            }
            let (j, k, l) = window_3ap(&bits).unwrap();
            assert_eq!(j + l, 2 * k);
            assert!(j < k && k < l);
            for v in [j, k, l] {
                assert_eq!(bits[(v + 4) as usize], 0);
            }
        }
    }

    #[test]
    fn middle_3ap_examples() {
        let m11 = m(11);
        let a = set_without(&m11, 11, &[1, 2, 3, 4, 5, 6]);
        let ap = middle_3ap(&m11, &a).unwrap();
        assert_eq!(ap.len, 3);
        assert!(ap.contained_in(&m11, &a));

        // set containing {-1, 0, 1} still goes through the machinery
        let a = set_without(&m11, 11, &[2, 3, 4, 5, 6, 7]);
        assert!(a.contains(&m11.residue_u64(0)) && a.contains(&m11.residue_u64(1)));
        let ap = middle_3ap(&m11, &a).unwrap();
        assert!(ap.contained_in(&m11, &a));
    }

    #[test]
    fn middle_3ap_rejects_wrong_cosize() {
        let m11 = m(11);
        let a = set_without(&m11, 11, &[1, 2]);
        assert!(middle_3ap(&m11, &a).is_err());
    }
}
