//! Average-case pipelines: the affine transfer from one allowed set to
//! its dilation-translate, ternary {0,1,2} groups from signed solvers,
//! the averaged binary zero-sum solver, and the long-AP constrained
//! solver for dense allowed sets.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use num_bigint::BigUint;
use num_rational::BigRational;

use crate::arith::{self, ApWitness};
use crate::error::{Error, Result};
use crate::field::{Modulus, Residue};
use crate::halving::{self, InnerSolver};
use crate::linalg::{self, FieldVec, VecFamily};
use crate::problem::CoeffMap;
use crate::thresholds;

const DP_CAP: usize = 1 << 22;

/// Subset of the batch sums adding to one, found by reachability with
/// parent pointers (the table is per reachable sum, capped).
fn subset_summing_to_one(m: &Modulus, betas: &[Residue]) -> Result<Option<Vec<usize>>> {
    // sum -> (batch index that reached it, previous sum)
    let mut parents: BTreeMap<Residue, (usize, Option<Residue>)> = BTreeMap::new();
    for (j, beta) in betas.iter().enumerate() {
        let mut additions: Vec<(Residue, (usize, Option<Residue>))> = Vec::new();
        if !parents.contains_key(beta) {
            additions.push((beta.clone(), (j, None)));
        }
        for s in parents.keys() {
            let t = m.add(s, beta);
            if !parents.contains_key(&t) {
                additions.push((t, (j, Some(s.clone()))));
            }
        }
        for (sum, par) in additions {
            parents.entry(sum).or_insert(par);
        }
        if parents.len() > DP_CAP {
            return Err(Error::BudgetExceeded {
                needed: BigUint::from(parents.len()),
                budget: DP_CAP as u64,
            });
        }
    }
    let one = m.one();
    if !parents.contains_key(&one) {
        return Ok(None);
    }
    let mut out = Vec::new();
    let mut cur = Some(one);
    while let Some(s) = cur {
        let (j, prev) = parents.get(&s).expect("parent chain is closed").clone();
        out.push(j);
        cur = prev;
    }
    out.sort_unstable();
    Ok(Some(out))
}

/// Transfer a solver for allowed set A (which must contain 0) to the set
/// aA + b: run it on d batches split against the scaled total sum, then
/// pick batches whose multipliers add to one. Every input vector receives
/// a coefficient, so the output is a full assignment in (aA+b)^m.
///
/// With a = b = 1 and a signed unit-norm inner solver this is exactly the
/// ternary {0,1,2} construction.
pub fn affine_transfer(
    family: &VecFamily,
    inner: &InnerSolver,
    a: &Residue,
    b: &Residue,
    d: usize,
) -> Result<CoeffMap> {
    let m = family.modulus();
    if a.is_zero() {
        return Err(Error::PreconditionViolated("dilation factor a must be nonzero".into()));
    }
    if b.is_zero() {
        // pure dilation
        let take = inner.input_size.min(family.len());
        let sub = VecFamily::new(m.clone(), family.dim(), family.vectors()[..take].to_vec())?;
        let x = (inner.solve)(&sub)?;
        return Ok(x.scale(m, a));
    }
    let bs = inner.input_size;
    let needed = BigUint::from(d) * BigUint::from(bs) + BigUint::from(1u32);
    if BigUint::from(family.len()) < needed {
        return Err(Error::TooFewVectors { needed, got: family.len() });
    }
    let b_prime = m.div(b, a)?;

    let mut total = FieldVec::zeros(m, family.dim());
    for v in family.vectors() {
        total = total.add(m, v);
    }
    let v_star = total.scale(m, &m.neg(&b_prime));
    // final coefficient per index: a*(b' + extra_i) = b + a*extra_i
    let full_assignment = |extra: &CoeffMap| -> CoeffMap {
        let mut out = CoeffMap::new();
        for i in 0..family.len() {
            let v = match extra.get(i) {
                Some(e) => m.add(b, &m.mul(a, e)),
                None => b.clone(),
            };
            out.insert(i, v);
        }
        out
    };
    if v_star.is_zero() {
        return Ok(full_assignment(&CoeffMap::new()));
    }
    let pivot = v_star.lowest_nonzero().expect("nonzero");
    let inv_pivot = m.inverse(v_star.entry(pivot))?;

    let mut betas: Vec<Residue> = Vec::with_capacity(d);
    let mut batch_maps: Vec<CoeffMap> = Vec::with_capacity(d);
    for j in 0..d {
        let start = j * bs;
        let mut ws = Vec::with_capacity(bs);
        let mut cs = Vec::with_capacity(bs);
        for i in start..start + bs {
            let v = family.vector(i);
            let c = m.mul(v.entry(pivot), &inv_pivot);
            ws.push(v.sub_scaled(m, &c, &v_star));
            cs.push(c);
        }
        let w_family = VecFamily::new(m.clone(), family.dim(), ws)?;
        let alpha = (inner.solve)(&w_family)?;
        let mut beta = m.zero();
        for (&pos, coeff) in alpha.iter() {
            beta = m.add(&beta, &m.mul(coeff, &cs[pos]));
        }
        betas.push(beta);
        let mut global = CoeffMap::new();
        for (&pos, coeff) in alpha.iter() {
            global.insert(start + pos, coeff.clone());
        }
        batch_maps.push(global);
    }
    let chosen = subset_summing_to_one(m, &betas)?.ok_or(Error::SampleFailure)?;
    let mut extra = CoeffMap::new();
    for j in chosen {
        extra.merge(m, &batch_maps[j]);
    }
    Ok(full_assignment(&extra))
}

/// Nontrivial {0,1,2}-zero-sum from a signed unit-norm solver: the affine
/// transfer with a = b = 1. When the input vectors sum to zero the
/// all-ones assignment is returned directly.
pub fn solve_012(family: &VecFamily, inner: &InnerSolver, d: usize) -> Result<CoeffMap> {
    let m = family.modulus();
    affine_transfer(family, inner, &m.one(), &m.one(), d)
}

/// A disjoint ternary group: a zero-sum whose support coefficients are
/// all 1 or 2.
#[derive(Debug, Clone)]
pub struct Group {
    pub coeffs: CoeffMap,
}

impl Group {
    pub fn from_map(m: &Modulus, coeffs: CoeffMap) -> Result<Self> {
        let one = m.one();
        let two = m.residue_u64(2);
        for (_, v) in coeffs.iter() {
            if v != &one && v != &two {
                return Err(Error::PreconditionViolated(
                    "group coefficients must be 1 or 2".into(),
                ));
            }
        }
        if coeffs.is_trivial() {
            return Err(Error::TrivialInput);
        }
        Ok(Group { coeffs })
    }

    fn ones(&self, m: &Modulus) -> Vec<usize> {
        let one = m.one();
        self.coeffs.iter().filter(|(_, v)| *v == &one).map(|(&i, _)| i).collect()
    }

    fn twos(&self, m: &Modulus) -> Vec<usize> {
        let two = m.residue_u64(2);
        self.coeffs.iter().filter(|(_, v)| *v == &two).map(|(&i, _)| i).collect()
    }
}

fn indicator(m: &Modulus, indices: impl IntoIterator<Item = usize>) -> CoeffMap {
    let one = m.one();
    let mut map = CoeffMap::new();
    for i in indices {
        map.insert(i, one.clone());
    }
    map
}

/// Combine disjoint ternary groups into a binary zero-sum. A group that
/// is all ones (or all twos) is already one; otherwise the doubled parts
/// are fed to the signed solver and its signs select either the doubled
/// part or the whole group.
pub fn combine_012_to_01(
    family: &VecFamily,
    groups: &[Group],
    pm1: &InnerSolver,
) -> Result<CoeffMap> {
    let m = family.modulus();
    for (gi, g) in groups.iter().enumerate() {
        for (gj, h) in groups.iter().enumerate() {
            if gi < gj {
                debug_assert!(
                    g.coeffs.support().iter().all(|i| h.coeffs.get(*i).is_none()),
                    "groups must be disjoint"
                );
            }
        }
    }
    for g in groups {
        let ones = g.ones(m);
        let twos = g.twos(m);
        if twos.is_empty() {
            return Ok(indicator(m, ones));
        }
        if ones.is_empty() {
            return Ok(indicator(m, twos));
        }
    }
    if groups.len() < pm1.input_size {
        return Err(Error::TooFewGroups { needed: pm1.input_size, got: groups.len() });
    }
    let used = &groups[..pm1.input_size];
    let u_primes: Vec<FieldVec> = used
        .iter()
        .map(|g| {
            let mut acc = FieldVec::zeros(m, family.dim());
            for i in g.twos(m) {
                acc = acc.add(m, family.vector(i));
            }
            acc
        })
        .collect();
    let u_family = VecFamily::new(m.clone(), family.dim(), u_primes)?;
    let signs = (pm1.solve)(&u_family)?;
    let one = m.one();
    let neg_one = m.residue_i64(-1);
    let mut out: Vec<usize> = Vec::new();
    for (&g, v) in signs.iter() {
        if v == &one {
            out.extend(used[g].twos(m));
        } else if v == &neg_one {
            out.extend(used[g].coeffs.support());
        } else {
            return Err(Error::PreconditionViolated(format!(
                "the combining solver must emit signed unit coefficients, got {v}"
            )));
        }
    }
    Ok(indicator(m, out))
}

/// Nontrivial binary zero-sum on uniform inputs with probability at
/// least 1 - eps, built on the power-of-two halving engine (the unique
/// power of two in (q/4, floor(q/2)] makes the engine unit-norm).
pub fn subset_sum_random(family: &VecFamily, r: usize, eps: &BigRational) -> Result<CoeffMap> {
    let m = family.modulus();
    if m.q() < &BigUint::from(5u32) {
        return Err(Error::PreconditionViolated("averaged subset solver needs q >= 5".into()));
    }
    let needed = thresholds::subset_sum_random(m, family.dim(), r, eps)?;
    if BigUint::from(family.len()) < needed {
        return Err(Error::TooFewVectors { needed, got: family.len() });
    }
    let k = thresholds::power_of_two_for_unit_norm(m);
    let engine_size: usize = thresholds::sis_power2(m, family.dim(), k, r)?
        .try_into()
        .map_err(|_| Error::InsufficientInput("engine threshold exceeds usize".into()))?;
    let engine = || InnerSolver {
        input_size: engine_size,
        solve: Box::new(move |f: &VecFamily| halving::sis_power2(f, k, r)),
    };
    subset_sum_with_engine(family, engine_size, &engine(), &engine())
}

/// Shared chunking + grouping + combining pipeline behind the averaged
/// subset-sum solvers.
pub(crate) fn subset_sum_with_engine(
    family: &VecFamily,
    engine_size: usize,
    group_engine: &InnerSolver,
    combine_engine: &InnerSolver,
) -> Result<CoeffMap> {
    let m = family.modulus();
    if let Some(z) = family.vectors().iter().position(FieldVec::is_zero) {
        return Ok(indicator(m, [z]));
    }
    let d = thresholds::group_batches(m) as usize;
    let chunk = d * engine_size + 1;
    let mut groups: Vec<Group> = Vec::new();
    let mut start = 0;
    while groups.len() < engine_size && start + chunk <= family.len() {
        let vecs = family.vectors()[start..start + chunk].to_vec();
        let sub = VecFamily::new(m.clone(), family.dim(), vecs)?;
        match solve_012(&sub, group_engine, d) {
            Ok(map) => {
                let mut global = CoeffMap::new();
                for (&pos, v) in map.iter() {
                    global.insert(start + pos, v.clone());
                }
                let group = Group::from_map(m, global)?;
                // lucky exits: an all-ones or all-twos group is already
                // a binary zero-sum
                if group.ones(m).is_empty() || group.twos(m).is_empty() {
                    return combine_012_to_01(family, &[group], combine_engine);
                }
                groups.push(group);
            }
            Err(Error::SampleFailure) => {}
            Err(e) => return Err(e),
        }
        start += chunk;
    }
    if groups.len() < engine_size {
        return Err(Error::SolveFailed(format!(
            "collected {} ternary groups, need {engine_size}",
            groups.len()
        )));
    }
    combine_012_to_01(family, &groups, combine_engine)
}

/// Nontrivial A-zero-sum for an allowed set containing a long arithmetic
/// progression: the progression is recentred onto a balanced interval and
/// the halving engine is transferred onto it. When no progression is
/// supplied, the dense-set extraction provides one of length (q+1)/2.
pub fn cis_simple(
    family: &VecFamily,
    allowed: &BTreeSet<Residue>,
    r: usize,
    eps: &BigRational,
    ap: Option<ApWitness>,
) -> Result<CoeffMap> {
    let m = family.modulus();
    use num_traits::ToPrimitive;
    let q = m
        .q()
        .to_u64()
        .ok_or_else(|| Error::PreconditionViolated("AP pipeline needs q in u64".into()))?;
    if q < 5 {
        return Err(Error::PreconditionViolated("need q >= 5".into()));
    }
    if allowed.len() as u64 == q {
        // every coefficient allowed: a plain dependency suffices
        return linalg::find_dependency(family);
    }
    let ap = match ap {
        Some(a) => a,
        None => {
            if !arith::lev_density_ok(m, allowed) {
                return Err(Error::NoLongAP);
            }
            arith::lev_long_ap(m, allowed)?
        }
    };
    if !ap.contained_in(m, allowed) {
        return Err(Error::PreconditionViolated("supplied progression not inside the set".into()));
    }
    // smallest power-of-two k with 1 + 2 floor(q/(2k)) <= len
    let mut k = 2u64;
    let fits = |k: u64| 2 * (q / (2 * k)) < ap.len as u64;
    while !fits(k) && BigUint::from(2 * k) <= *m.half() {
        k *= 2;
    }
    if !fits(k) {
        return Err(Error::NoLongAP);
    }
    let s = q / (2 * k);
    // trim the progression to exactly 2s+1 terms and centre it
    let a = ap.step.clone();
    let b = m.add(&ap.start, &m.mul(&m.residue_u64(s), &ap.step));
    let engine_size: usize = thresholds::sis_power2(m, family.dim(), k, r)?
        .try_into()
        .map_err(|_| Error::InsufficientInput("engine threshold exceeds usize".into()))?;
    let engine = InnerSolver {
        input_size: engine_size,
        solve: Box::new(move |f: &VecFamily| halving::sis_power2(f, k, r)),
    };
    let d = thresholds::affine_batches(m, eps) as usize;
    affine_transfer(family, &engine, &a, &b, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{verify, Constraint, Problem};
    use crate::sample::uniform_family;
    use num_traits::One;

    fn m5() -> Modulus {
        Modulus::from_u64(5).unwrap()
    }

    fn pm1_engine(m: &Modulus, n: usize) -> InnerSolver<'static> {
        let k = thresholds::power_of_two_for_unit_norm(m);
        let size: usize = thresholds::sis_power2(m, n, k, 1).unwrap().try_into().unwrap();
        InnerSolver { input_size: size, solve: Box::new(move |f: &VecFamily| halving::sis_power2(f, k, 1)) }
    }

    #[test]
    fn dp_finds_subsets() {
        let m = m5();
        let betas = vec![m.residue_u64(2), m.residue_u64(4), m.residue_u64(3)];
        let t = subset_summing_to_one(&m, &betas).unwrap().unwrap();
        let mut sum = m.zero();
        for j in &t {
            sum = m.add(&sum, &betas[*j]);
        }
        assert_eq!(sum, m.one());

        // all zeros: no subset
        let betas = vec![m.zero(); 4];
        assert_eq!(subset_summing_to_one(&m, &betas).unwrap(), None);
    }

    #[test]
    fn dp_matches_exhaustive_search() {
        use rand_core::{RngCore, SeedableRng};
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(31);
        for q in [5u64, 7, 13] {
            let m = Modulus::from_u64(q).unwrap();
            for _ in 0..200 {
                let d = 1 + (rng.next_u64() % 10) as usize;
                let betas: Vec<_> = (0..d).map(|_| m.residue_u64(rng.next_u64() % q)).collect();
                let got = subset_summing_to_one(&m, &betas).unwrap();
                // exhaustive ground truth over all nonempty subsets
                let mut exists = false;
                for mask in 1u32..(1 << d) {
                    let mut sum = m.zero();
                    for (j, b) in betas.iter().enumerate() {
                        if mask & (1 << j) != 0 {
                            sum = m.add(&sum, b);
                        }
                    }
                    if sum == m.one() {
                        exists = true;
                        break;
                    }
                }
                match got {
                    Some(t) => {
                        assert!(exists);
                        assert!(!t.is_empty());
                        let mut sum = m.zero();
                        for j in &t {
                            sum = m.add(&sum, &betas[*j]);
                        }
                        assert_eq!(sum, m.one(), "returned subset does not sum to one");
                    }
                    None => assert!(!exists, "a subset exists but the table missed it"),
                }
            }
        }
    }

    #[test]
    fn solve_012_zero_total_short_circuit() {
        let m = m5();
        // vectors summing to zero: all-ones ternary witness
        let f = VecFamily::from_rows(&m, 1, &[vec![1], vec![1], vec![1], vec![2]]).unwrap();
        let engine = pm1_engine(&m, 1);
        let sol = solve_012(&f, &engine, 1).unwrap();
        assert_eq!(sol.support_size(), 4);
        let p = Problem::zero_sum(f, Constraint::Ternary012).unwrap();
        assert!(verify(&p, &sol).unwrap().pass());
    }

    #[test]
    fn solve_012_uniform_succeeds_often() {
        let m = m5();
        let engine = pm1_engine(&m, 2);
        let d = 4; // ceil(log2(5/0.5)) rounded up
        let chunk = d * engine.input_size + 1;
        let mut ok = 0;
        for seed in 0..100u64 {
            let f = uniform_family(&m, seed, 2, chunk);
            match solve_012(&f, &engine, d) {
                Ok(sol) => {
                    let p = Problem::zero_sum(f, Constraint::Ternary012).unwrap();
                    assert!(verify(&p, &sol).unwrap().pass());
                    ok += 1;
                }
                Err(Error::SampleFailure) => {}
                Err(e) => panic!("unexpected error {e}"),
            }
        }
        assert!(ok >= 50, "only {ok}/100 ternary solves succeeded");
    }

    #[test]
    fn solve_012_adversarial_sample_failure() {
        // batches built so every beta is zero: v* has a single nonzero
        // coordinate and the batch vectors are zero there.
        let m = m5();
        let rows = vec![
            vec![0, 1],
            vec![0, 4],
            vec![0, 2],
            vec![0, 3],
            vec![0, 1],
            vec![0, 4],
            vec![1, 0],
        ];
        // total = (1, 0); v* = -(1,0); batches of 3... choose inner size 3, d=2
        let f = VecFamily::from_rows(&m, 2, &rows).unwrap();
        let inner = InnerSolver {
            input_size: 3,
            solve: Box::new(linalg::find_dependency),
        };
        let out = affine_transfer(&f, &inner, &m.one(), &m.one(), 2);
        assert!(matches!(out, Err(Error::SampleFailure)));
    }

    #[test]
    fn combine_short_circuits() {
        let m = m5();
        let f = VecFamily::from_rows(&m, 1, &[vec![2], vec![3], vec![1]]).unwrap();
        let engine = pm1_engine(&m, 1);
        // all-ones group: v0 + v1 = 0
        let g = Group::from_map(
            &m,
            CoeffMap::from_entries(&m, [(0, m.one()), (1, m.one())]),
        )
        .unwrap();
        let sol = combine_012_to_01(&f, &[g], &engine).unwrap();
        assert_eq!(sol.support(), vec![0, 1]);

        // all-twos group: 2 v0 + 2 v1 = 0 implies v0 + v1 = 0
        let g = Group::from_map(
            &m,
            CoeffMap::from_entries(&m, [(0, m.residue_u64(2)), (1, m.residue_u64(2))]),
        )
        .unwrap();
        let sol = combine_012_to_01(&f, &[g], &engine).unwrap();
        assert_eq!(sol.support(), vec![0, 1]);
    }

    #[test]
    fn combine_mixed_groups() {
        let m = m5();
        // three disjoint ternary zero-sums over nine vectors of dim 1
        // group j: {a, b, c} with a + 2b + 2c = 0 arranged by hand
        // (1) + 2*(2) + 0 -> need a + 2b = 0: a=1,b=2: 1+4=5=0: supports {0,1}, {2,3}, {4,5}
        let rows = vec![
            vec![1],
            vec![2],
            vec![2],
            vec![4],
            vec![3],
            vec![1],
            vec![1],
            vec![1],
            vec![1],
        ];
        let f = VecFamily::from_rows(&m, 1, &rows).unwrap();
        let mk = |pairs: [(usize, u64); 2]| {
            Group::from_map(
                &m,
                CoeffMap::from_entries(&m, pairs.map(|(i, v)| (i, m.residue_u64(v)))),
            )
            .unwrap()
        };
        let groups = vec![mk([(0, 1), (1, 2)]), mk([(2, 1), (3, 2)]), mk([(4, 1), (5, 2)])];
        for g in &groups {
            assert!(f.combine(&g.coeffs).is_zero());
        }
        let engine = pm1_engine(&m, 1);
        let sol = combine_012_to_01(&f, &groups, &engine).unwrap();
        let p = Problem::zero_sum(f, Constraint::Binary).unwrap();
        assert!(verify(&p, &sol).unwrap().pass());
    }

    #[test]
    fn subset_sum_random_q5() {
        let m = m5();
        let eps = BigRational::new(1.into(), 2.into());
        let threshold: usize =
            thresholds::subset_sum_random(&m, 1, 1, &eps).unwrap().try_into().unwrap();
        assert_eq!(threshold, 196);
        let mut ok = 0;
        for seed in 0..60u64 {
            let f = uniform_family(&m, seed, 1, threshold);
            match subset_sum_random(&f, 1, &eps) {
                Ok(sol) => {
                    let p = Problem::zero_sum(f, Constraint::Binary).unwrap();
                    assert!(verify(&p, &sol).unwrap().pass());
                    ok += 1;
                }
                Err(Error::SampleFailure | Error::SolveFailed(_)) => {}
                Err(e) => panic!("unexpected {e}"),
            }
        }
        assert!(ok >= 24, "success rate too low: {ok}/60");
    }

    #[test]
    fn subset_sum_random_q7_tight_eps() {
        let m7 = Modulus::from_u64(7).unwrap();
        let eps = BigRational::new(1.into(), 10.into());
        let threshold: usize =
            thresholds::subset_sum_random(&m7, 1, 1, &eps).unwrap().try_into().unwrap();
        let mut ok = 0;
        for seed in 0..100u64 {
            let f = uniform_family(&m7, 7100 + seed, 1, threshold);
            match subset_sum_random(&f, 1, &eps) {
                Ok(sol) => {
                    let p = Problem::zero_sum(f, Constraint::Binary).unwrap();
                    assert!(verify(&p, &sol).unwrap().pass());
                    ok += 1;
                }
                Err(Error::SampleFailure | Error::SolveFailed(_)) => {}
                Err(e) => panic!("unexpected {e}"),
            }
        }
        assert!(ok >= 80, "success rate too low: {ok}/100");
    }

    #[test]
    fn subset_sum_random_zero_free_pipeline() {
        // no zero vectors: the chunking, grouping, and combining stages
        // must do the work
        use crate::sample::UniformSampler;
        let m = m5();
        let eps = BigRational::new(1.into(), 2.into());
        let threshold: usize =
            thresholds::subset_sum_random(&m, 1, 1, &eps).unwrap().try_into().unwrap();
        let mut ok = 0;
        for seed in 0..30u64 {
            let mut sampler = UniformSampler::new(&m, 5500 + seed);
            let mut vecs = Vec::with_capacity(threshold);
            while vecs.len() < threshold {
                let v = sampler.draw_vector(1);
                if !v.is_zero() {
                    vecs.push(v);
                }
            }
            let f = VecFamily::new(m.clone(), 1, vecs).unwrap();
            match subset_sum_random(&f, 1, &eps) {
                Ok(sol) => {
                    assert!(sol.support_size() > 1, "fast path must not fire here");
                    let p = Problem::zero_sum(f, Constraint::Binary).unwrap();
                    assert!(verify(&p, &sol).unwrap().pass());
                    ok += 1;
                }
                Err(Error::SampleFailure | Error::SolveFailed(_)) => {}
                Err(e) => panic!("unexpected {e}"),
            }
        }
        assert!(ok >= 10, "zero-free pipeline succeeded only {ok}/30 times");
    }

    #[test]
    fn subset_sum_random_zero_vector() {
        let m = m5();
        let eps = BigRational::new(1.into(), 2.into());
        let threshold: usize =
            thresholds::subset_sum_random(&m, 1, 1, &eps).unwrap().try_into().unwrap();
        let mut rows: Vec<Vec<u64>> = (0..threshold).map(|i| vec![1 + (i as u64 % 4)]).collect();
        rows[7] = vec![0];
        let f = VecFamily::from_rows(&m, 1, &rows).unwrap();
        let sol = subset_sum_random(&f, 1, &eps).unwrap();
        assert_eq!(sol.support(), vec![7]);
    }

    #[test]
    fn affine_dilation_only() {
        // b = 0: plain dilation of the inner solution
        let m = Modulus::from_u64(7).unwrap();
        let f = VecFamily::from_rows(&m, 1, &[vec![3], vec![4], vec![1]]).unwrap();
        let inner = InnerSolver { input_size: 2, solve: Box::new(linalg::find_dependency) };
        let two = m.residue_u64(2);
        let sol = affine_transfer(&f, &inner, &two, &m.zero(), 3).unwrap();
        assert!(f.combine(&sol).is_zero());
        assert!(!sol.is_trivial());
    }

    #[test]
    fn cis_simple_q5_dense_set() {
        // A = F_5 \ {2}: the dense-set extraction provides the progression
        let m = m5();
        let allowed: BTreeSet<Residue> =
            [0u64, 1, 3, 4].iter().map(|&v| m.residue_u64(v)).collect();
        let eps = BigRational::new(1.into(), 2.into());
        let d = thresholds::affine_batches(&m, &eps) as usize;
        let engine_size: usize = thresholds::sis_power2(&m, 1, 2, 1).unwrap().try_into().unwrap();
        let mlen = d * engine_size + 1;
        let mut ok = 0;
        for seed in 0..60u64 {
            let f = uniform_family(&m, 900 + seed, 1, mlen);
            match cis_simple(&f, &allowed, 1, &eps, None) {
                Ok(sol) => {
                    let p = Problem::zero_sum(
                        f,
                        Constraint::Explicit(allowed.clone()),
                    )
                    .unwrap();
                    assert!(verify(&p, &sol).unwrap().pass(), "constraint violated");
                    ok += 1;
                }
                Err(Error::SampleFailure) => {}
                Err(e) => panic!("unexpected {e}"),
            }
        }
        assert!(ok >= 24, "success rate too low: {ok}/60");
    }

    #[test]
    fn cis_simple_q67_two_holes() {
        // a large prime with two excluded values: the dense-set
        // extraction hands a long progression to the k=2 engine
        let m67 = Modulus::from_u64(67).unwrap();
        let allowed: BTreeSet<Residue> =
            (0..67u64).filter(|v| *v != 12 && *v != 40).map(|v| m67.residue_u64(v)).collect();
        let eps = BigRational::new(1.into(), 2.into());
        let d = thresholds::affine_batches(&m67, &eps) as usize;
        let engine_size: usize = thresholds::sis_power2(&m67, 1, 2, 1).unwrap().try_into().unwrap();
        let mlen = d * engine_size + 1;
        let mut ok = 0;
        for seed in 0..40u64 {
            let f = uniform_family(&m67, 6700 + seed, 1, mlen);
            match cis_simple(&f, &allowed, 1, &eps, None) {
                Ok(sol) => {
                    let p = Problem::zero_sum(f, Constraint::Explicit(allowed.clone())).unwrap();
                    assert!(verify(&p, &sol).unwrap().pass());
                    ok += 1;
                }
                Err(Error::SampleFailure) => {}
                Err(e) => panic!("unexpected {e}"),
            }
        }
        assert!(ok >= 16, "success rate too low: {ok}/40");
    }

    #[test]
    fn cis_simple_full_set_degenerates() {
        let m = m5();
        let allowed: BTreeSet<Residue> = (0..5u64).map(|v| m.residue_u64(v)).collect();
        let f = VecFamily::from_rows(&m, 1, &[vec![2], vec![3], vec![1]]).unwrap();
        let eps = BigRational::one();
        let sol = cis_simple(&f, &allowed, 1, &eps, None).unwrap();
        assert!(f.combine(&sol).is_zero());
        assert!(!sol.is_trivial());
    }
}
